//! Catalog of per-hop SNR distributions.
//!
//! Every supported fading family (optionally compounded with a pointing-error
//! factor) reduces to a finite mixture of H-function kernels: the SNR of hop
//! `i` is `Gamma_i = mean_snr * Z` where `Z` is mean-one and
//! `F_Z(x) = sum_l (rho_l / varrho_l) * Hcdf_l[varrho_l * x]`,
//! with `Hcdf` the CDF-assembled H-function of the term's gamma-factor
//! kernel. Each family also carries its generative construction (products
//! and mixtures of Gamma and uniform powers), which is what the sampler
//! draws from — so the analytic kernels and the sampler can be cross-checked
//! against each other in tests.
//!
//! All catalog families are mean-normalized at construction: `E{Gamma} =
//! mean_snr` exactly, with the normalizing constant folded into the kernel
//! argument scale `varrho`.

use crate::error::{Error, Result};
use crate::special_functions::contour::{auto_abscissa, integrate_kernel, ContourPolicy};
use crate::special_functions::gamma::ln_gamma_real;
use crate::special_functions::kernel::GammaKernel;
use crate::special_functions::series::kernel_series;
use crate::special_functions::HParams;
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist};
use serde::{Deserialize, Serialize};

/// One raw H-distribution mixture term supplied by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawHTerm {
    /// Mixture weight numerator (real; `rho/varrho` must sum to a unit mass).
    pub rho: f64,
    /// Kernel argument scale (positive).
    pub varrho: f64,
    /// H-function parameters of the term's density kernel.
    pub params: HParams,
}

/// Named fading families with their Table-style parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FadingModel {
    /// Product of N Nakagami-m variates (cascaded RF links); N = 1 is plain
    /// Nakagami-m, m = 1 is Rayleigh.
    #[serde(rename = "n_nakagami")]
    NNakagami {
        /// Shape parameters of the cascaded factors.
        m: Vec<f64>,
    },
    /// Extended generalized-K (generalized fading with shadowing).
    /// `ms = inf` selects the dedicated unshadowed limit branch.
    Egk {
        /// Fading shape.
        m: f64,
        /// Shadowing shape (may be `f64::INFINITY`).
        ms: f64,
        /// Fading power exponent.
        beta: f64,
        /// Shadowing power exponent.
        beta_s: f64,
    },
    /// Alpha-mu envelope fading with pointing errors (THz/mmWave links).
    AlphaMuPe {
        /// Envelope power exponent.
        alpha: f64,
        /// Multipath cluster count.
        mu: f64,
        /// Squared pointing-error severity.
        xi2: f64,
        /// Detection exponent (1 coherent, 2 envelope/IM-DD).
        r: u8,
    },
    /// Fisher-Snedecor F fading with pointing errors.
    FisherPe {
        /// Numerator (fading) shape.
        a: f64,
        /// Denominator (shadowing) shape.
        b: f64,
        /// Squared pointing-error severity.
        xi2: f64,
        /// Detection exponent.
        r: u8,
    },
    /// Malaga atmospheric-turbulence model with pointing errors (FSO).
    MalagaPe {
        /// Large-scale cell count.
        alpha: f64,
        /// Small-scale cell count (integer).
        beta: u32,
        /// Coupling factor in [0, 1].
        rho: f64,
        /// Average power of the scattered components.
        b0: f64,
        /// Average power of the line-of-sight component.
        omega: f64,
        /// Phase difference between LOS and coupled components.
        phi: f64,
        /// Squared pointing-error severity.
        xi2: f64,
        /// Detection exponent.
        r: u8,
    },
    /// Double generalized-Gamma turbulence with pointing errors (FSO).
    DggPe {
        /// First-layer power exponent.
        alpha1: f64,
        /// First-layer shape.
        beta1: f64,
        /// First-layer scale.
        omega1: f64,
        /// Second-layer power exponent.
        alpha2: f64,
        /// Second-layer shape.
        beta2: f64,
        /// Second-layer scale.
        omega2: f64,
        /// Squared pointing-error severity.
        xi2: f64,
        /// Detection exponent.
        r: u8,
    },
    /// Mixture exponential / generalized-Gamma (underwater optical).
    Megg {
        /// Exponential-branch scale.
        lambda: f64,
        /// Exponential-branch weight in [0, 1].
        omega: f64,
        /// Generalized-Gamma shape.
        a: f64,
        /// Generalized-Gamma scale.
        b: f64,
        /// Generalized-Gamma power exponent.
        c: f64,
        /// Detection exponent.
        r: u8,
    },
    /// Direct H-distribution passthrough for families outside the catalog.
    RawH {
        /// Mixture terms.
        terms: Vec<RawHTerm>,
        /// Detection exponent.
        r: u8,
    },
}

impl FadingModel {
    /// Plain Nakagami-m convenience constructor.
    pub fn nakagami(m: f64) -> Self {
        FadingModel::NNakagami { m: vec![m] }
    }

    /// Rayleigh convenience constructor.
    pub fn rayleigh() -> Self {
        Self::nakagami(1.0)
    }
}

/// One mixture term of a hop distribution.
#[derive(Debug, Clone)]
pub struct HopTerm {
    /// Weight numerator; the term contributes `rho/varrho * Hcdf[varrho x]`.
    pub rho: f64,
    /// Kernel argument scale.
    pub varrho: f64,
    /// The term's H-function parameters (density kernel).
    pub params: HParams,
    /// Cached gamma-factor kernel of `params`.
    kernel: GammaKernel,
}

impl HopTerm {
    fn new(weight: f64, varrho: f64, params: HParams) -> Self {
        let kernel = params.kernel();
        HopTerm {
            rho: weight * varrho,
            varrho,
            params,
            kernel,
        }
    }

    /// Mixture weight `rho / varrho`.
    pub fn weight(&self) -> f64 {
        self.rho / self.varrho
    }

    pub(crate) fn kernel(&self) -> &GammaKernel {
        &self.kernel
    }
}

/// A fully-constructed per-hop SNR distribution.
#[derive(Debug, Clone)]
pub struct HopDistribution {
    /// Kernel mixture terms.
    pub terms: Vec<HopTerm>,
    /// Mean SNR (linear).
    pub mean_snr: f64,
    /// Detection exponent r.
    pub detection: u8,
    /// The generative model this hop was built from.
    model: FadingModel,
    /// Inverse-CDF table for families without a generative sampler.
    inv_cdf: Option<InverseCdf>,
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::invalid(field, format!("must be > 0, got {v}")));
    }
    Ok(())
}

fn check_detection(r: u8) -> Result<f64> {
    if r == 1 || r == 2 {
        Ok(r as f64)
    } else {
        Err(Error::invalid("r", format!("detection exponent must be 1 or 2, got {r}")))
    }
}

/// Build the [`HopDistribution`] for a fading model at a given mean SNR.
///
/// The returned terms satisfy the unit-mass and unit-mean identities
/// (`sum_l rho_l/varrho_l * theta_l(0) = 1`, `E{Z} = 1`), which are
/// verified numerically at construction.
pub fn to_h_params(model: &FadingModel, mean_snr: f64) -> Result<HopDistribution> {
    positive("mean_snr", mean_snr)?;
    let (terms, detection): (Vec<HopTerm>, u8) = match model {
        FadingModel::NNakagami { m } => {
            if m.is_empty() {
                return Err(Error::invalid("m", "need at least one shape parameter"));
            }
            for &mi in m {
                positive("m", mi)?;
            }
            // W = prod G_i, G_i ~ Gamma(m_i); E[W] = prod m_i.
            let mut lower = Vec::new();
            let mut lg = 0.0;
            let mut varrho = 1.0;
            for &mi in m {
                lower.push((mi, 1.0));
                lg += ln_gamma_real(mi)?;
                varrho *= mi;
            }
            let q = lower.len();
            let params = HParams::new(q, 0, vec![], lower)?;
            (vec![HopTerm::new((-lg).exp(), varrho, params)], 1)
        }
        FadingModel::Egk { m, ms, beta, beta_s } => {
            positive("m", *m)?;
            positive("beta", *beta)?;
            if ms.is_finite() {
                positive("ms", *ms)?;
                positive("beta_s", *beta_s)?;
                // W = G1^{2/beta} G2^{2/beta_s}.
                let norm = ((ln_gamma_real(m + 2.0 / beta)? - ln_gamma_real(*m)?)
                    + (ln_gamma_real(ms + 2.0 / beta_s)? - ln_gamma_real(*ms)?))
                .exp();
                let params = HParams::new(
                    2,
                    0,
                    vec![],
                    vec![(*m, 2.0 / beta), (*ms, 2.0 / beta_s)],
                )?;
                let weight = (-(ln_gamma_real(*m)? + ln_gamma_real(*ms)?)).exp();
                (vec![HopTerm::new(weight, norm, params)], 1)
            } else {
                // Unshadowed limit: the shadowing factor degenerates to 1.
                let norm = (ln_gamma_real(m + 2.0 / beta)? - ln_gamma_real(*m)?).exp();
                let params = HParams::new(1, 0, vec![], vec![(*m, 2.0 / beta)])?;
                let weight = (-ln_gamma_real(*m)?).exp();
                (vec![HopTerm::new(weight, norm, params)], 1)
            }
        }
        FadingModel::AlphaMuPe { alpha, mu, xi2, r } => {
            positive("alpha", *alpha)?;
            positive("mu", *mu)?;
            positive("xi2", *xi2)?;
            let rf = check_detection(*r)?;
            // W = G^{r/alpha} U^{r/xi2}, G ~ Gamma(mu).
            let norm = (ln_gamma_real(mu + rf / alpha)? - ln_gamma_real(*mu)?).exp() * xi2
                / (xi2 + rf);
            let params = HParams::new(
                2,
                0,
                vec![(1.0 + xi2, rf)],
                vec![(*mu, rf / alpha), (*xi2, rf)],
            )?;
            let weight = xi2 * (-ln_gamma_real(*mu)?).exp();
            (vec![HopTerm::new(weight, norm, params)], *r)
        }
        FadingModel::FisherPe { a, b, xi2, r } => {
            positive("a", *a)?;
            positive("b", *b)?;
            positive("xi2", *xi2)?;
            let rf = check_detection(*r)?;
            if *b <= rf {
                return Err(Error::MomentUndefined(format!(
                    "Fisher-F mean requires b > r, got b = {b}, r = {r}"
                )));
            }
            // W = (Ga/Gb)^r U^{r/xi2}.
            let norm = (ln_gamma_real(a + rf)? + ln_gamma_real(b - rf)?
                - ln_gamma_real(*a)?
                - ln_gamma_real(*b)?)
            .exp()
                * xi2
                / (xi2 + rf);
            let params = HParams::new(
                2,
                1,
                vec![(1.0 - b, rf), (1.0 + xi2, rf)],
                vec![(*a, rf), (*xi2, rf)],
            )?;
            let weight = xi2 * (-(ln_gamma_real(*a)? + ln_gamma_real(*b)?)).exp();
            (vec![HopTerm::new(weight, norm, params)], *r)
        }
        FadingModel::MalagaPe {
            alpha,
            beta,
            rho,
            b0,
            omega,
            phi,
            xi2,
            r,
        } => {
            positive("alpha", *alpha)?;
            positive("b0", *b0)?;
            positive("xi2", *xi2)?;
            if *beta == 0 {
                return Err(Error::invalid("beta", "must be a positive integer"));
            }
            if !(0.0..=1.0).contains(rho) {
                return Err(Error::invalid("rho", format!("must be in [0,1], got {rho}")));
            }
            let rf = check_detection(*r)?;
            let mc = malaga_constants(*alpha, *beta, *rho, *b0, *omega, *phi)?;
            // Per-component W_k = (G_alpha G_k / c)^r U^{r/xi2}; shared
            // normalization so the mixture has unit mean.
            let mut e_ir = 0.0;
            for k in 1..=*beta {
                let kf = k as f64;
                e_ir += mc.weights[(k - 1) as usize]
                    * ((ln_gamma_real(alpha + rf)? - ln_gamma_real(*alpha)?)
                        + (ln_gamma_real(kf + rf)? - ln_gamma_real(kf)?))
                    .exp()
                    / mc.c.powf(rf);
            }
            let norm = e_ir * xi2 / (xi2 + rf);
            let mut terms = Vec::new();
            for k in 1..=*beta {
                let kf = k as f64;
                let params = HParams::new(
                    3,
                    0,
                    vec![(1.0 + xi2, rf)],
                    vec![(*alpha, rf), (kf, rf), (*xi2, rf)],
                )?;
                let weight = mc.weights[(k - 1) as usize]
                    * xi2
                    * (-(ln_gamma_real(*alpha)? + ln_gamma_real(kf)?)).exp();
                terms.push(HopTerm::new(weight, mc.c.powf(rf) * norm, params));
            }
            (terms, *r)
        }
        FadingModel::DggPe {
            alpha1,
            beta1,
            omega1,
            alpha2,
            beta2,
            omega2,
            xi2,
            r,
        } => {
            for (f, v) in [
                ("alpha1", alpha1),
                ("beta1", beta1),
                ("omega1", omega1),
                ("alpha2", alpha2),
                ("beta2", beta2),
                ("omega2", omega2),
                ("xi2", xi2),
            ] {
                positive(f, *v)?;
            }
            let rf = check_detection(*r)?;
            // W = (I1 I2 U^{1/xi2})^r, I_j = (O_j G_j / b_j)^{1/a_j}.
            let e1 = (omega1 / beta1).powf(rf / alpha1)
                * ((ln_gamma_real(beta1 + rf / alpha1)? - ln_gamma_real(*beta1)?).exp());
            let e2 = (omega2 / beta2).powf(rf / alpha2)
                * ((ln_gamma_real(beta2 + rf / alpha2)? - ln_gamma_real(*beta2)?).exp());
            let norm = e1 * e2 * xi2 / (xi2 + rf);
            let scale = (beta1 / omega1).powf(rf / alpha1) * (beta2 / omega2).powf(rf / alpha2);
            let params = HParams::new(
                3,
                0,
                vec![(1.0 + xi2, rf)],
                vec![(*beta1, rf / alpha1), (*beta2, rf / alpha2), (*xi2, rf)],
            )?;
            let weight = xi2 * (-(ln_gamma_real(*beta1)? + ln_gamma_real(*beta2)?)).exp();
            (vec![HopTerm::new(weight, norm * scale, params)], *r)
        }
        FadingModel::Megg {
            lambda,
            omega,
            a,
            b,
            c,
            r,
        } => {
            positive("lambda", *lambda)?;
            positive("a", *a)?;
            positive("b", *b)?;
            positive("c", *c)?;
            if !(0.0..=1.0).contains(omega) {
                return Err(Error::invalid("omega", format!("must be in [0,1], got {omega}")));
            }
            let rf = check_detection(*r)?;
            // W = I^r, I = Exp(lambda) w.p. omega else GenGamma(a, b, c).
            let e_ir = omega * ln_gamma_real(1.0 + rf)?.exp() * lambda.powf(rf)
                + (1.0 - omega)
                    * b.powf(rf)
                    * (ln_gamma_real(a + rf / c)? - ln_gamma_real(*a)?).exp();
            let p1 = HParams::new(1, 0, vec![], vec![(1.0, rf)])?;
            let p2 = HParams::new(1, 0, vec![], vec![(*a, rf / c)])?;
            let t1 = HopTerm::new(*omega, e_ir / lambda.powf(rf), p1);
            let t2 = HopTerm::new(
                (1.0 - omega) * (-ln_gamma_real(*a)?).exp(),
                e_ir / b.powf(rf),
                p2,
            );
            (vec![t1, t2], *r)
        }
        FadingModel::RawH { terms, r } => {
            check_detection(*r)?;
            if terms.is_empty() {
                return Err(Error::invalid("terms", "need at least one mixture term"));
            }
            let mut built = Vec::new();
            for t in terms {
                positive("varrho", t.varrho)?;
                let kernel = t.params.kernel();
                // Mean of the raw mixture, folded into the argument scale so
                // that E{Z} = 1 afterwards.
                built.push(HopTerm {
                    rho: t.rho,
                    varrho: t.varrho,
                    params: t.params.clone(),
                    kernel,
                });
            }
            let mass = mixture_mass(&built)?;
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(
                    "terms",
                    format!("mixture mass is {mass}, must be 1 within 1e-6"),
                ));
            }
            let mean = mixture_unit_mean(&built)?;
            for t in &mut built {
                // rho/varrho is scale-free; rescale varrho to normalize the mean.
                let w = t.rho / t.varrho;
                t.varrho *= mean;
                t.rho = w * t.varrho;
            }
            (built, *r)
        }
    };

    // Construction identities: unit mass and unit mean.
    let mass = mixture_mass(&terms)?;
    let mean = mixture_unit_mean(&terms)?;
    if (mass - 1.0).abs() > 1e-9 && !matches!(model, FadingModel::RawH { .. }) {
        return Err(Error::invalid(
            "model",
            format!("internal mass identity violated: {mass}"),
        ));
    }
    if (mean - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "model",
            format!("internal mean identity violated: {mean}"),
        ));
    }

    let mut hop = HopDistribution {
        terms,
        mean_snr,
        detection,
        model: model.clone(),
        inv_cdf: None,
    };
    if matches!(model, FadingModel::RawH { .. }) {
        hop.inv_cdf = Some(InverseCdf::build(&hop)?);
    }
    Ok(hop)
}

/// `sum_l rho_l/varrho_l * theta_l(0)`: total probability mass.
fn mixture_mass(terms: &[HopTerm]) -> Result<f64> {
    let mut mass = 0.0;
    for t in terms {
        mass += t.weight() * t.kernel.eval_real(0.0)?;
    }
    Ok(mass)
}

/// `E{Z} = sum_l rho_l/varrho_l * varrho_l^{-1} * theta_l(-1)`.
fn mixture_unit_mean(terms: &[HopTerm]) -> Result<f64> {
    let mut mean = 0.0;
    for t in terms {
        mean += t.weight() / t.varrho * t.kernel.eval_real(-1.0)?;
    }
    Ok(mean)
}

/// Malaga physical constants: component weights and the Gamma-product scale.
struct MalagaConstants {
    /// Normalized mixture weights (sum to 1).
    weights: Vec<f64>,
    /// Combined scale: I_k = G_alpha * G_k / c.
    c: f64,
}

fn malaga_constants(
    alpha: f64,
    beta: u32,
    rho: f64,
    b0: f64,
    omega: f64,
    phi: f64,
) -> Result<MalagaConstants> {
    let g = 2.0 * b0 * (1.0 - rho);
    if !(g > 0.0) {
        return Err(Error::invalid(
            "rho",
            "rho = 1 (fully coherent coupling) is not representable; need rho < 1",
        ));
    }
    let beta_f = beta as f64;
    let omega_p = omega + 2.0 * b0 * rho + 2.0 * (2.0 * b0 * rho * omega).sqrt() * phi.cos();
    let a_pref = 2.0 * alpha.powf(alpha / 2.0)
        / (g.powf(1.0 + alpha / 2.0) * ln_gamma_real(alpha)?.exp())
        * (g * beta_f / (g * beta_f + omega_p)).powf(beta_f + alpha / 2.0);
    let c = alpha * beta_f / (g * beta_f + omega_p);
    let mut weights = Vec::with_capacity(beta as usize);
    for k in 1..=beta {
        let kf = k as f64;
        let comb = binomial(beta - 1, k - 1);
        let a_k = comb * (g * beta_f + omega_p).powf(1.0 - kf / 2.0)
            / factorial(k - 1)
            * (omega_p / g).powf(kf - 1.0)
            * (alpha / beta_f).powf(kf / 2.0);
        let w = a_pref * a_k * 0.5 * c.powf(-(alpha + kf) / 2.0)
            * (ln_gamma_real(alpha)? + ln_gamma_real(kf)?).exp();
        weights.push(w);
    }
    let mass: f64 = weights.iter().sum();
    // The analytic mass is exactly 1; normalize away float round-off.
    for w in &mut weights {
        *w /= mass;
    }
    Ok(MalagaConstants { weights, c })
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v *= (n - i) as f64 / (k - i) as f64;
    }
    v
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

// ---------------------------------------------------------------------
// Kernel-value routing: series for small arguments, direct contour in the
// crossover zone, shifted contour for large arguments.
// ---------------------------------------------------------------------

fn eval_policy() -> ContourPolicy {
    ContourPolicy {
        rel_tol: 1e-11,
        ..ContourPolicy::default()
    }
}

/// H-value of a density kernel at `z` (the `H[varrho x]` factor of a pdf).
pub(crate) fn pdf_kernel_value(kernel: &GammaKernel, z: f64) -> Result<f64> {
    if z <= 0.75 {
        match kernel_series(kernel, z.ln(), 5000) {
            Ok((v, _)) => return Ok(v),
            Err(Error::CoincidentPoles(_)) | Err(Error::SeriesDiverges(_))
            | Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let policy = eval_policy();
    if z < 1.5 {
        let c = auto_abscissa(kernel.left_edge(), kernel.right_edge());
        return Ok(integrate_kernel(kernel, z.ln(), c, &policy)?.0);
    }
    // Large z: push the contour left to gain z^c decay. No poles are crossed:
    // the contour stays right of the left pole families.
    let left = kernel.left_edge();
    let c = if left.is_finite() {
        0.55 * left
    } else {
        -0.5 - z.ln()
    };
    Ok(integrate_kernel(kernel, z.ln(), c, &policy)?.0)
}

/// CDF value `Hcdf[z]` of a density kernel (kernel times Gamma(s)/Gamma(1+s)).
pub(crate) fn cdf_kernel_value(kernel: &GammaKernel, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let cdf_kernel = kernel.cdf_kernel();
    if z <= 0.75 {
        match kernel_series(&cdf_kernel, z.ln(), 5000) {
            Ok((v, _)) => return Ok(v),
            Err(Error::CoincidentPoles(_)) | Err(Error::SeriesDiverges(_))
            | Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let policy = eval_policy();
    if z < 1.5 {
        let c = auto_abscissa(cdf_kernel.left_edge(), cdf_kernel.right_edge());
        return Ok(integrate_kernel(&cdf_kernel, z.ln(), c, &policy)?.0);
    }
    // Large z: shift left across the mass pole at s = 0 (residue theta(0))
    // and integrate on Re s = c' in (-1, 0), where the remainder decays
    // like z^{c'}.
    let mass = kernel.eval_real(0.0)?;
    let left = kernel.left_edge();
    let c = 0.5 * left.max(-1.0);
    let tail = integrate_kernel(&cdf_kernel, z.ln(), c, &policy)?.0;
    Ok(mass + tail)
}

// ---------------------------------------------------------------------
// Public per-hop operations.
// ---------------------------------------------------------------------

/// Probability density of the hop SNR at `gamma`.
pub fn pdf(hop: &HopDistribution, gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    let x = gamma / hop.mean_snr;
    let mut f = 0.0;
    for t in &hop.terms {
        f += t.weight() / gamma * pdf_kernel_value(&t.kernel, t.varrho * x)?;
    }
    Ok(f.max(0.0))
}

/// Cumulative distribution of the hop SNR at `gamma`.
pub fn cdf(hop: &HopDistribution, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::invalid("gamma", format!("must be >= 0, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let x = gamma / hop.mean_snr;
    let mut f = 0.0;
    for t in &hop.terms {
        f += t.weight() * cdf_kernel_value(&t.kernel, t.varrho * x)?;
    }
    Ok(f.clamp(0.0, 1.0))
}

/// One leading-order term `D * (gamma/mean_snr)^beta` of the CDF expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTerm {
    /// Exponent (diversity slope contribution).
    pub beta: f64,
    /// Coefficient.
    pub d: f64,
}

/// The hop CDF's leading-order expansion around zero.
#[derive(Debug, Clone)]
pub struct HopAsymptotics {
    /// Power-law terms, ascending by exponent.
    pub terms: Vec<AsymptoticTerm>,
    /// True when coincident exponents had to be perturbed to evaluate
    /// residues; accuracy is degraded near such resonances.
    pub perturbed: bool,
}

impl HopAsymptotics {
    /// Evaluate `sum_j D_j x^{beta_j}` at `x = gamma/mean_snr`.
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.d * x.powf(t.beta)).sum()
    }

    /// Smallest exponent (the hop's diversity slope).
    pub fn leading_exponent(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.beta)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Leading-order CDF expansion terms of a hop.
///
/// Coincident-pole degeneracies (equal or integer-spaced exponents) are
/// resolved by perturbing the offending kernel offset by 1e-6, flagged in
/// the result.
pub fn asymptotic_terms(hop: &HopDistribution) -> Result<HopAsymptotics> {
    let mut out = Vec::new();
    let mut perturbed = false;
    for t in &hop.terms {
        let (terms, p) = term_asymptotics(&t.kernel, t.weight(), t.varrho)?;
        perturbed |= p;
        out.extend(terms);
    }
    out.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    Ok(HopAsymptotics {
        terms: out,
        perturbed,
    })
}

/// Leading residues (k = 0 of each right family) of one kernel's CDF form.
pub(crate) fn term_asymptotics(
    kernel: &GammaKernel,
    weight: f64,
    varrho: f64,
) -> Result<(Vec<AsymptoticTerm>, bool)> {
    let mut work = kernel.clone();
    let mut perturbed = false;
    'attempt: for _ in 0..12 {
        let fams = work.right_pole_families();
        let mut terms = Vec::new();
        for fam in &fams {
            let s0 = fam.base;
            // theta_rest at s0: all factors except the generating one.
            let mut rest = work.clone();
            rest.num.remove(fam.factor_index);
            let value = match rest.eval_real(s0) {
                Ok(v) => v,
                Err(Error::GammaPole { .. }) => {
                    // Resonance: another factor sits on this pole. Perturb
                    // the generating offset and retry the whole kernel.
                    work.num[fam.factor_index].c += 1e-6;
                    perturbed = true;
                    continue 'attempt;
                }
                Err(e) => return Err(e),
            };
            let step = fam.step; // 1/B_j
            let d = weight * value * step / s0 * varrho.powf(s0);
            terms.push(AsymptoticTerm { beta: s0, d });
        }
        // Also reject exactly-coincident leading exponents within a term.
        let mut sorted: Vec<f64> = terms.iter().map(|t| t.beta).collect();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if (w[1] - w[0]).abs() < 1e-9 {
                let idx = fams
                    .iter()
                    .position(|f| (f.base - w[1]).abs() < 1e-9)
                    .unwrap();
                work.num[fams[idx].factor_index].c += 1e-6;
                perturbed = true;
                continue 'attempt;
            }
        }
        return Ok((terms, perturbed));
    }
    Err(Error::CoincidentPoles(
        "could not separate leading exponents after repeated perturbation".into(),
    ))
}

/// Leading-order CDF approximation at `gamma`.
pub fn cdf_asymptotic(hop: &HopDistribution, gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    let asym = asymptotic_terms(hop)?;
    Ok(asym.eval(gamma / hop.mean_snr).max(0.0))
}

/// Fractional moment `E{Gamma^s}` from the kernel Mellin transform.
pub fn mellin_moment(hop: &HopDistribution, s: f64) -> Result<f64> {
    let mut v = 0.0;
    for t in &hop.terms {
        // Arguments of every numerator gamma factor must stay positive.
        for f in &t.kernel.num {
            if f.c + f.d * (-s) <= 0.0 {
                return Err(Error::MomentUndefined(format!(
                    "E{{Gamma^{s}}} does not exist for this hop"
                )));
            }
        }
        v += t.weight() * (hop.mean_snr / t.varrho).powf(s) * t.kernel.eval_real(-s)?;
    }
    Ok(v)
}

/// Analytic mean SNR `E{Gamma}`; equals `mean_snr` by construction and is
/// computed from the Mellin transform as a consistency check.
pub fn mean_snr_analytic(hop: &HopDistribution) -> Result<f64> {
    mellin_moment(hop, 1.0)
}

// ---------------------------------------------------------------------
// Sampling.
// ---------------------------------------------------------------------

fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    GammaDist::new(shape, 1.0)
        .expect("validated shape")
        .sample(rng)
}

/// Draw one SNR realization from the hop's generative construction.
///
/// Catalog families use their physical factor products; `RawH` falls back
/// to a tabulated inverse CDF (monotone interpolation on 2^14 knots,
/// documented tolerance ~1e-4 in distribution).
pub fn sample<R: Rng + ?Sized>(hop: &HopDistribution, rng: &mut R) -> f64 {
    let gbar = hop.mean_snr;
    match &hop.model {
        FadingModel::NNakagami { m } => {
            let mut z = 1.0;
            for &mi in m {
                z *= gamma_draw(rng, mi) / mi;
            }
            gbar * z
        }
        FadingModel::Egk { m, ms, beta, beta_s } => {
            let t = &hop.terms[0];
            let mut w = gamma_draw(rng, *m).powf(2.0 / beta);
            if ms.is_finite() {
                w *= gamma_draw(rng, *ms).powf(2.0 / beta_s);
            }
            gbar * w / t.varrho
        }
        FadingModel::AlphaMuPe { alpha, mu, xi2, r } => {
            let t = &hop.terms[0];
            let rf = *r as f64;
            let u: f64 = rng.gen();
            let w = gamma_draw(rng, *mu).powf(rf / alpha) * u.powf(rf / xi2);
            gbar * w / t.varrho
        }
        FadingModel::FisherPe { a, b, xi2, r } => {
            let t = &hop.terms[0];
            let rf = *r as f64;
            let ga = gamma_draw(rng, *a);
            let gb = gamma_draw(rng, *b);
            let u: f64 = rng.gen();
            let w = (ga / gb).powf(rf) * u.powf(rf / xi2);
            gbar * w / t.varrho
        }
        FadingModel::MalagaPe {
            alpha, xi2, r, ..
        } => {
            let rf = *r as f64;
            // Component choice by weight, then the conditional Gamma product.
            let u_pick: f64 = rng.gen();
            let mut acc = 0.0;
            let mut k = 1usize;
            for (i, t) in hop.terms.iter().enumerate() {
                acc += t.weight() * t.kernel.eval_real(0.0).expect("mass");
                if u_pick <= acc || i == hop.terms.len() - 1 {
                    k = i + 1;
                    break;
                }
            }
            let t = &hop.terms[k - 1];
            let ga = gamma_draw(rng, *alpha);
            let gk = gamma_draw(rng, k as f64);
            let u: f64 = rng.gen();
            // t.varrho = c^r * norm; (ga*gk)^r u^{r/xi2} / varrho = W/norm.
            let w = (ga * gk).powf(rf) * u.powf(rf / xi2);
            gbar * w / t.varrho
        }
        FadingModel::DggPe {
            alpha1,
            beta1,
            alpha2,
            beta2,
            xi2,
            r,
            ..
        } => {
            let t = &hop.terms[0];
            let rf = *r as f64;
            let g1 = gamma_draw(rng, *beta1);
            let g2 = gamma_draw(rng, *beta2);
            let u: f64 = rng.gen();
            // Scaled form: varrho absorbs the (O_j/b_j)^{r/a_j} factors.
            let w = g1.powf(rf / alpha1) * g2.powf(rf / alpha2) * u.powf(rf / xi2);
            gbar * w / t.varrho
        }
        FadingModel::Megg {
            omega, a, c, r, ..
        } => {
            let rf = *r as f64;
            let branch: f64 = rng.gen();
            if branch < *omega {
                let t = &hop.terms[0];
                let e: f64 = rand_distr::Exp1.sample(rng);
                gbar * e.powf(rf) / t.varrho
            } else {
                let t = &hop.terms[1];
                let g = gamma_draw(rng, *a).powf(1.0 / c);
                gbar * g.powf(rf) / t.varrho
            }
        }
        FadingModel::RawH { .. } => {
            let table = hop.inv_cdf.as_ref().expect("built at construction");
            let u: f64 = rng.gen();
            table.quantile(u)
        }
    }
}

// ---------------------------------------------------------------------
// Inverse-CDF table for RawH sampling.
// ---------------------------------------------------------------------

const INV_CDF_KNOTS: usize = 1 << 14;

#[derive(Debug, Clone)]
struct InverseCdf {
    /// ln(gamma) at each knot (uniform grid).
    ln_gamma: Vec<f64>,
    /// CDF value at each knot (nondecreasing).
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn build(hop: &HopDistribution) -> Result<Self> {
        // Bracket the support: walk out until the CDF clears both tails.
        let mut lo = hop.mean_snr;
        let mut hi = hop.mean_snr;
        for _ in 0..80 {
            if cdf(hop, lo)? < 1e-7 {
                break;
            }
            lo *= 0.3;
        }
        for _ in 0..80 {
            if cdf(hop, hi)? > 1.0 - 1e-7 {
                break;
            }
            hi *= 2.0;
        }
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let mut ln_gamma = Vec::with_capacity(INV_CDF_KNOTS);
        let mut cdf_vals = Vec::with_capacity(INV_CDF_KNOTS);
        let mut prev = 0.0_f64;
        for i in 0..INV_CDF_KNOTS {
            let lg = ln_lo + (ln_hi - ln_lo) * i as f64 / (INV_CDF_KNOTS - 1) as f64;
            let f = cdf(hop, lg.exp())?.max(prev);
            ln_gamma.push(lg);
            cdf_vals.push(f);
            prev = f;
        }
        Ok(InverseCdf {
            ln_gamma,
            cdf: cdf_vals,
        })
    }

    fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        if u <= self.cdf[0] {
            return self.ln_gamma[0].exp();
        }
        if u >= self.cdf[n - 1] {
            return self.ln_gamma[n - 1].exp();
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (f0, f1) = (self.cdf[lo], self.cdf[hi]);
        let w = if f1 > f0 { (u - f0) / (f1 - f0) } else { 0.5 };
        (self.ln_gamma[lo] + w * (self.ln_gamma[hi] - self.ln_gamma[lo])).exp()
    }
}

impl HopDistribution {
    /// The generative model this hop was constructed from.
    pub fn model(&self) -> &FadingModel {
        &self.model
    }
}
