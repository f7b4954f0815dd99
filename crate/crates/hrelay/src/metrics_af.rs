//! End-to-end outage, error-rate, and capacity metrics for fixed-gain
//! amplify-and-forward chains.
//!
//! Three evaluation routes are provided, trading accuracy for cost:
//!
//! * **exact** — the outage probability is evaluated by conditioning on the
//!   hops one at a time. For two hops the coupled term has a closed bivariate
//!   H-form; longer chains (and two-hop chains whose kernels defeat the
//!   double contour) use a cascade of tabulated conditional-survival
//!   functions integrated against each hop's CDF.
//! * **approximate** — the outage event is split into per-prefix
//!   product-threshold events `prod_{j<=i} Gamma_j < z_i`, each of which is a
//!   single H-function CDF of the merged hop kernels. The split is tight at
//!   high SNR and is the basis of the error-rate and asymptotic forms.
//! * **asymptotic** — the leading Mellin residue of every merged-kernel term,
//!   giving the power-law expansion whose smallest exponent is the diversity
//!   order.
//!
//! All thresholds pass through the distortion rescaling
//! `gamma' = gamma / (1 - d_1 gamma)`, saturating to certain outage at
//! `gamma >= 1/d_1` when the hardware is impaired.

use crate::error::{Error, Result};
use crate::fading_catalog::{
    asymptotic_terms, cdf, cdf_kernel_value, mean_snr_analytic, term_asymptotics, AsymptoticTerm,
    HopDistribution,
};
use crate::sndr_core::{
    ceiling_af, derive_coefficients, sndr_fg, ChainCoefficients, ChainConfig, Protocol,
};
use crate::special_functions::contour::{auto_abscissa, integrate_kernel};
use crate::special_functions::series::kernel_series;
use crate::special_functions::{
    fox_h_bivariate_with_error, ln_gamma_real, BivBlock, BivFactor, BivariateHParams,
    ContourPolicy, GammaKernel, HParams,
};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------
// Domain types.
// ---------------------------------------------------------------------

/// Parameters of the unified binary error-probability template
/// `Pe = delta / (2 Gamma(p)) * sum_k q_k^p int_0^inf g^{p-1} e^{-q_k g} F(g) dg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    /// Overall scale `delta`.
    pub delta: f64,
    /// Gamma-weight shape `p`.
    pub p: f64,
    /// Exponential rates `q_k` (one per template branch).
    pub q: Vec<f64>,
}

impl ModulationSpec {
    /// Validating constructor.
    pub fn new(delta: f64, p: f64, q: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be > 0, got {delta}")));
        }
        if !(p > 0.0) {
            return Err(Error::invalid("p", format!("must be > 0, got {p}")));
        }
        if q.is_empty() {
            return Err(Error::invalid("q", "need at least one rate"));
        }
        if q.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("q", "all rates must be > 0"));
        }
        Ok(ModulationSpec { delta, p, q })
    }

    /// On-off keying template (`delta = 1, p = 1/2, q = {1/2}`).
    pub fn ook() -> Self {
        ModulationSpec {
            delta: 1.0,
            p: 0.5,
            q: vec![0.5],
        }
    }

    /// Coherent binary (antipodal) template (`delta = 1, p = 1/2, q = {1}`).
    pub fn coherent_binary() -> Self {
        ModulationSpec {
            delta: 1.0,
            p: 0.5,
            q: vec![1.0],
        }
    }
}

/// Outage-CDF evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfMode {
    /// Conditioning cascade / bivariate closed form.
    Exact,
    /// Sum of univariate product-threshold terms.
    Approx,
}

/// Relay-gain normalization assumed by the diversity-order formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Fixed constants independent of the hop statistics: the `i`-th hop
    /// contributes `i * beta'_i`.
    Blind,
    /// Statistics-aware constants: every hop contributes `beta'_i`.
    SemiBlind,
}

// ---------------------------------------------------------------------
// Protocol gates and small shared helpers.
// ---------------------------------------------------------------------

fn require_fixed_gain(chain: &ChainConfig) -> Result<()> {
    match chain.protocol {
        Protocol::BlindFgAf { .. } | Protocol::SemiBlindFgAf => Ok(()),
        Protocol::CsiAf => Err(Error::Unsupported(
            "variable-gain chains have no fixed-gain closed forms; \
             the per-hop decode-style bound in metrics_df approximates them"
                .into(),
        )),
        Protocol::Df => Err(Error::Unsupported(
            "decode-and-forward chains are evaluated by metrics_df".into(),
        )),
    }
}

fn require_amplify(chain: &ChainConfig) -> Result<()> {
    if chain.protocol == Protocol::Df {
        return Err(Error::Unsupported(
            "decode-and-forward chains are evaluated by metrics_df".into(),
        ));
    }
    Ok(())
}

fn check_threshold(gamma: f64) -> Result<()> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::invalid(
            "gamma",
            format!("threshold must be finite and >= 0, got {gamma}"),
        ));
    }
    Ok(())
}

fn require_ideal(chain: &ChainConfig, what: &str) -> Result<()> {
    if chain.kappa_sqs().iter().any(|k| *k > 0.0) {
        return Err(Error::Unsupported(format!(
            "{what} requires ideal hardware on every hop (kappa = 0); \
             hardware-impaired chains are covered by the Monte-Carlo estimator"
        )));
    }
    Ok(())
}

fn eval_policy() -> ContourPolicy {
    ContourPolicy {
        rel_tol: 1e-11,
        ..ContourPolicy::default()
    }
}

/// Every combination of one mixture term per hop: joint weight, joint kernel
/// argument scale `prod varrho_j / mean_j`, and the merged density kernel.
fn term_combos(hops: &[HopDistribution]) -> Vec<(f64, f64, GammaKernel)> {
    let mut out = vec![(1.0, 1.0, GammaKernel::one())];
    for hop in hops {
        let mut next = Vec::with_capacity(out.len() * hop.terms.len());
        for (w, s, k) in &out {
            for t in &hop.terms {
                next.push((
                    w * t.weight(),
                    s * t.varrho / hop.mean_snr,
                    k.merged_with(t.kernel()),
                ));
            }
        }
        out = next;
    }
    out
}

/// `P(prod_{j} Gamma_j < z)` for independent hops via the merged kernel.
fn product_cdf(hops: &[HopDistribution], z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (w, scale, kernel) in term_combos(hops) {
        total += w * cdf_kernel_value(&kernel, scale * z)?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------
// Monotone log-log tables (hop CDFs and conditional-survival stages).
// ---------------------------------------------------------------------

const TABLE_LO: f64 = 1e-9;
const TABLE_HI: f64 = 1e3;
const TABLE_NODES: usize = 320;
const FINAL_NODES: usize = 60_000;
const STAGE_NODES: usize = 8_000;
const RATIO_LO: f64 = 1e-12;
const RATIO_HI: f64 = 1e12;
const RATIO_KNOTS: usize = 2_401;

/// Shape-preserving cubic tangents (Fritsch–Carlson) for data on `x`.
fn monotone_tangents(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut h = Vec::with_capacity(n - 1);
    let mut delta = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        h.push(x[i + 1] - x[i]);
        delta.push((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m[0] = edge_tangent(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge_tangent(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

/// One-sided three-point end tangent, limited to preserve shape.
fn edge_tangent(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        m = 0.0;
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        m = 3.0 * d0;
    }
    m
}

fn hermite(x: &[f64], y: &[f64], m: &[f64], at: f64) -> f64 {
    let idx = match x.binary_search_by(|v| v.total_cmp(&at)) {
        Ok(i) => return y[i],
        Err(i) => i - 1, // callers guarantee x[0] <= at <= x[n-1]
    };
    let h = x[idx + 1] - x[idx];
    let t = (at - x[idx]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    y[idx] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + h * m[idx] * (t3 - 2.0 * t2 + t)
        + y[idx + 1] * (-2.0 * t3 + 3.0 * t2)
        + h * m[idx + 1] * (t3 - t2)
}

/// Log-log tabulated hop CDF on the unit scale `x = gamma / mean_snr`,
/// with a pure power-law extension below the grid and 1 above it.
#[derive(Debug, Clone)]
struct CdfTable {
    lx: Vec<f64>,
    lf: Vec<f64>,
    m: Vec<f64>,
}

impl CdfTable {
    fn build(hop: &HopDistribution) -> Result<CdfTable> {
        let mut lx = Vec::with_capacity(TABLE_NODES);
        let mut lf = Vec::with_capacity(TABLE_NODES);
        let span = (TABLE_HI / TABLE_LO).ln();
        for i in 0..TABLE_NODES {
            let x = TABLE_LO * (span * i as f64 / (TABLE_NODES - 1) as f64).exp();
            let f = cdf(hop, x * hop.mean_snr)?;
            if f > 0.0 {
                lx.push(x.ln());
                lf.push(f.min(1.0).ln());
            }
        }
        if lx.len() < 4 {
            return Err(Error::NonConvergence {
                op: "cdf_table",
                message: "hop CDF underflows over the whole tabulation grid".into(),
            });
        }
        let m = monotone_tangents(&lx, &lf);
        Ok(CdfTable { lx, lf, m })
    }

    /// CDF at the unit-scale argument `x = gamma / mean_snr`.
    fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let lx = x.ln();
        let first = self.lx[0];
        let last = *self.lx.last().unwrap();
        if lx >= last {
            return 1.0;
        }
        if lx < first {
            let slope = (self.lf[1] - self.lf[0]) / (self.lx[1] - self.lx[0]);
            return (self.lf[0] + slope * (lx - first)).exp();
        }
        hermite(&self.lx, &self.lf, &self.m, lx).exp().min(1.0)
    }
}

/// Log-log tabulated conditional-survival stage
/// `G_i(u) = P((C_i / Gamma_{i+1}) B_{i+1} > u)`, decreasing from 1.
#[derive(Debug, Clone)]
struct SurvivalTable {
    lu: Vec<f64>,
    lg: Vec<f64>,
    m: Vec<f64>,
}

impl SurvivalTable {
    fn eval(&self, u: f64) -> f64 {
        if !(u > 0.0) {
            return 1.0;
        }
        let lu = u.ln();
        let first = self.lu[0];
        let last = *self.lu.last().unwrap();
        if lu <= first {
            // Plateau: G -> 1 as u -> 0.
            return self.lg[0].exp().min(1.0);
        }
        if lu > last {
            // Power-law tail continuation with the terminal tangent.
            let n = self.lu.len();
            let slope = self.m[n - 1];
            return (self.lg[n - 1] + slope * (lu - last)).exp().min(1.0);
        }
        hermite(&self.lu, &self.lg, &self.m, lu).exp().min(1.0)
    }
}

// ---------------------------------------------------------------------
// The reusable exact/approximate chain evaluator.
// ---------------------------------------------------------------------

/// Reusable outage evaluator for one fixed-gain AF chain.
///
/// Construction tabulates each hop's CDF (320 log nodes over
/// `gamma/mean in [1e-9, 1e3]`) and, for chains of three or more hops, the
/// cascaded conditional-survival stages; single evaluations afterwards cost
/// one Stieltjes pass, so dense threshold sweeps are cheap.
pub struct AfCdfEngine {
    hops: Vec<HopDistribution>,
    coeffs: ChainCoefficients,
    tables: Vec<CdfTable>,
    /// First cascade stage `G_1` (only for three or more hops).
    g1: Option<SurvivalTable>,
    final_nodes: usize,
}

impl AfCdfEngine {
    /// Build with the default Stieltjes resolution.
    pub fn new(chain: &ChainConfig) -> Result<Self> {
        Self::with_resolution(chain, FINAL_NODES)
    }

    /// Build with a custom node count for the final conditioning pass
    /// (accuracy is roughly quadratic in the count; 60k reaches ~1e-6
    /// relative, 8k is plenty for quadrature consumers at ~1e-5).
    pub fn with_resolution(chain: &ChainConfig, final_nodes: usize) -> Result<Self> {
        require_fixed_gain(chain)?;
        if final_nodes < 100 {
            return Err(Error::invalid("final_nodes", "need at least 100 nodes"));
        }
        let coeffs = derive_coefficients(chain)?;
        let hops: Vec<HopDistribution> = chain.hops.iter().map(|(h, _)| h.clone()).collect();
        let tables = hops.iter().map(CdfTable::build).collect::<Result<Vec<_>>>()?;
        let g1 = if hops.len() >= 3 {
            Some(build_cascade(&hops, &tables, &coeffs)?)
        } else {
            None
        };
        Ok(AfCdfEngine {
            hops,
            coeffs,
            tables,
            g1,
            final_nodes,
        })
    }

    /// Chain coefficients derived at construction.
    pub fn coefficients(&self) -> &ChainCoefficients {
        &self.coeffs
    }

    /// Exact outage CDF. Two-hop chains first try the closed bivariate form
    /// and fall back to the numeric cascade if its double contour fails.
    pub fn exact(&self, gamma: f64) -> Result<f64> {
        check_threshold(gamma)?;
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let Some(gp) = self.coeffs.gamma_prime(gamma) else {
            return Ok(1.0);
        };
        match self.hops.len() {
            1 => cdf(&self.hops[0], gp),
            2 => match dual_closed_form(&self.hops, &self.coeffs, gp) {
                Ok(v) => Ok(v),
                Err(_) => Ok(self.conditioning_pass(gp)),
            },
            _ => Ok(self.conditioning_pass(gp)),
        }
    }

    /// Exact outage CDF by the numeric cascade only (no bivariate contour);
    /// the right choice inside quadratures and dense sweeps.
    pub fn exact_numeric(&self, gamma: f64) -> Result<f64> {
        check_threshold(gamma)?;
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let Some(gp) = self.coeffs.gamma_prime(gamma) else {
            return Ok(1.0);
        };
        match self.hops.len() {
            1 => cdf(&self.hops[0], gp),
            _ => Ok(self.conditioning_pass(gp)),
        }
    }

    /// Approximate outage CDF (sum of product-threshold terms).
    pub fn approx(&self, gamma: f64) -> Result<f64> {
        check_threshold(gamma)?;
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let Some(gp) = self.coeffs.gamma_prime(gamma) else {
            return Ok(1.0);
        };
        approx_value(&self.hops, &self.coeffs, gp)
    }

    /// Final conditioning pass: integrate the first-stage survival function
    /// against hop 1's CDF.
    ///
    /// `P = F_1(lambda_2 g') + int_{v > lambda_2 g'} G_1(v/g' - lambda_2) dF_1(v)`.
    fn conditioning_pass(&self, gp: f64) -> f64 {
        let lam2 = self.coeffs.lambda[1];
        let gbar1 = self.hops[0].mean_snr;
        let v0 = lam2 * gp;
        let mut total = self.tables[0].eval(v0 / gbar1);
        let hi = TABLE_HI * gbar1;
        if v0 >= 0.999 * hi {
            // The conditioning grid is exhausted: outage is certain to the
            // accuracy of the tables.
            return 1.0;
        }
        let lo = v0 * (1.0 + 1e-10);
        let span = (hi / lo).ln();
        let k = self.final_nodes;
        let mut v_prev = lo;
        let mut f_prev = self.tables[0].eval(lo / gbar1);
        for j in 1..k {
            let v = lo * (span * j as f64 / (k - 1) as f64).exp();
            let f = self.tables[0].eval(v / gbar1);
            let df = f - f_prev;
            if df > 0.0 {
                let vmid = (v_prev * v).sqrt();
                total += self.survival(vmid / gp - lam2) * df;
            }
            v_prev = v;
            f_prev = f;
        }
        total.clamp(0.0, 1.0)
    }

    /// First-stage survival `G_1(u) = P((C_1/Gamma_2) B_2 > u)`.
    fn survival(&self, u: f64) -> f64 {
        match &self.g1 {
            Some(table) => table.eval(u),
            // Two hops: B_2 = 1, so G_1(u) = F_2(C_1 / u) directly.
            None => {
                let c1 = self.coeffs.c_r[1];
                self.tables[1].eval(c1 / (u * self.hops[1].mean_snr))
            }
        }
    }
}

/// Build the survival cascade down to `G_1` for chains of three or more
/// hops. Stage `i` (for `i = N-2 .. 1`) integrates stage `i+1` against hop
/// `i+1`'s CDF:
///
/// `G_i(u) = F_{i+1}(lambda_{i+2} C_i / u)
///         + int_{x > lambda_{i+2} C_i / u} G_{i+1}(u x / C_i - lambda_{i+2}) dF_{i+1}(x)`,
///
/// with the terminal closed form `G_{N-1}(u) = F_N(C_{N-1} / u)`.
fn build_cascade(
    hops: &[HopDistribution],
    tables: &[CdfTable],
    coeffs: &ChainCoefficients,
) -> Result<SurvivalTable> {
    let n = hops.len();
    let mut inner: Option<SurvivalTable> = None;
    for i in (1..=n - 2).rev() {
        let stage = build_survival_stage(i, hops, tables, coeffs, inner.as_ref());
        inner = Some(stage);
    }
    Ok(inner.expect("cascade needs at least three hops"))
}

fn build_survival_stage(
    i: usize,
    hops: &[HopDistribution],
    tables: &[CdfTable],
    coeffs: &ChainCoefficients,
    inner: Option<&SurvivalTable>,
) -> SurvivalTable {
    let n = hops.len();
    let lam_next = coeffs.lambda[i + 1]; // lambda_{i+2}
    let c_i = coeffs.c_r[i];
    let hop = &hops[i]; // hop i+1, zero-based storage
    let table = &tables[i];
    let gbar = hop.mean_snr;

    // Evaluate G_{i+1}: the terminal stage is a direct CDF lookup.
    let next = |w: f64| -> f64 {
        if i + 1 == n - 1 {
            let c = coeffs.c_r[n - 1];
            tables[n - 1].eval(c / (w * hops[n - 1].mean_snr))
        } else {
            inner.expect("inner stage must be built first").eval(w)
        }
    };

    let span = (RATIO_HI / RATIO_LO).ln();
    let mut lu = Vec::with_capacity(RATIO_KNOTS);
    let mut lg = Vec::with_capacity(RATIO_KNOTS);
    for k in 0..RATIO_KNOTS {
        let u = RATIO_LO * (span * k as f64 / (RATIO_KNOTS - 1) as f64).exp();
        let thr = lam_next * c_i / u;
        let mut g = table.eval(thr / gbar);
        let hi = TABLE_HI * gbar;
        if thr < 0.999 * hi {
            let lo = thr * (1.0 + 1e-10);
            let stage_span = (hi / lo).ln();
            let mut x_prev = lo;
            let mut f_prev = table.eval(lo / gbar);
            for j in 1..STAGE_NODES {
                let x = lo * (stage_span * j as f64 / (STAGE_NODES - 1) as f64).exp();
                let f = table.eval(x / gbar);
                let df = f - f_prev;
                if df > 0.0 {
                    let xmid = (x_prev * x).sqrt();
                    g += next(u * xmid / c_i - lam_next) * df;
                }
                x_prev = x;
                f_prev = f;
            }
        }
        lu.push(u.ln());
        lg.push(g.clamp(1e-300, 1.0).ln());
    }
    let m = monotone_tangents(&lu, &lg);
    SurvivalTable { lu, lg, m }
}

// ---------------------------------------------------------------------
// Closed forms: bivariate dual-hop, approximate split, asymptotics.
// ---------------------------------------------------------------------

fn biv_policy() -> ContourPolicy {
    ContourPolicy {
        half_length: 40.0,
        node_budget: 30_000_000,
        rel_tol: 1e-8,
        ..ContourPolicy::default()
    }
}

/// Exact dual-hop outage CDF at the rescaled threshold `gp`:
/// the marginal term `F_1(lambda_2 gp)` plus one coupled bivariate
/// H-term per pair of hop mixture terms.
fn dual_closed_form(
    hops: &[HopDistribution],
    coeffs: &ChainCoefficients,
    gp: f64,
) -> Result<f64> {
    let lam2 = coeffs.lambda[1];
    let c1 = coeffs.c_r[1];
    let (h1, h2) = (&hops[0], &hops[1]);
    let mut total = cdf(h1, lam2 * gp)?;
    let pol = biv_policy();
    for t1 in &h1.terms {
        // Hop 1 density factors with Gamma(1 - s) appended (denominator).
        let mut p1 = t1.params.clone();
        p1.upper.push((1.0, 1.0));
        let inner1 = HParams::new(p1.m, p1.n, p1.upper, p1.lower)?;
        let z1 = t1.varrho * lam2 * gp / h1.mean_snr;
        for t2 in &h2.terms {
            // Hop 2 density factors with Gamma(1 - t) and Gamma(t) in the
            // numerator and Gamma(1 + t) in the denominator: together with
            // the coupling factor Gamma(t - s) this is the Mellin image of
            // the binomial split (lambda_2 + C_1/Gamma_2)^s.
            let mut p2 = t2.params.clone();
            p2.lower.insert(p2.m, (1.0, 1.0));
            p2.m += 1;
            p2.upper.insert(0, (1.0, 1.0));
            p2.n += 1;
            p2.lower.push((0.0, 1.0));
            let inner2 = HParams::new(p2.m, p2.n, p2.upper, p2.lower)?;
            let z2 = t2.varrho * c1 / (h2.mean_snr * lam2);
            let outer = BivBlock {
                num: vec![BivFactor {
                    c: 0.0,
                    d1: -1.0,
                    d2: 1.0,
                }],
                den: vec![],
            };
            let params = BivariateHParams::new(outer, inner1.clone(), inner2)?;
            let (h, _) = fox_h_bivariate_with_error(&params, z1, z2, &pol)?;
            total += t1.weight() * t2.weight() * h;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Approximate outage CDF at the rescaled threshold `gp`: the first-hop
/// marginal `F_1(Lambda_1 gp)` plus one product-threshold term per prefix,
/// `P(prod_{j<=i} Gamma_j < prod_{j<i} C_j * Lambda_i * gp)`. Terms whose
/// coefficient `Lambda_i` is non-positive vanish at high SNR and are
/// skipped.
fn approx_value(
    hops: &[HopDistribution],
    coeffs: &ChainCoefficients,
    gp: f64,
) -> Result<f64> {
    let n = hops.len();
    if n == 1 {
        return cdf(&hops[0], gp);
    }
    let mut total = 0.0;
    let l1 = coeffs.big_lambda[0];
    if l1 > 0.0 {
        total += cdf(&hops[0], l1 * gp)?;
    }
    let mut cprod = 1.0;
    for i in 2..=n {
        cprod *= coeffs.c_r[i - 1];
        let li = coeffs.big_lambda[i - 1];
        if li <= 0.0 {
            continue;
        }
        total += product_cdf(&hops[..i], cprod * li * gp)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// The chain CDF's leading power-law expansion in the rescaled threshold.
#[derive(Debug, Clone)]
pub struct AfAsymptotics {
    /// Terms `A_k * (gamma')^{beta_k}`, ascending by exponent, with
    /// `gamma' = gamma / (1 - d_1 gamma)`.
    pub terms: Vec<AsymptoticTerm>,
    /// True when coincident Mellin poles had to be separated by a small
    /// offset perturbation; coefficients near such resonances carry extra
    /// error.
    pub perturbed: bool,
    d1: f64,
}

impl AfAsymptotics {
    /// Evaluate the expansion; returns 1 in the saturated region.
    pub fn eval(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        if self.d1 > 0.0 && gamma >= 1.0 / self.d1 {
            return 1.0;
        }
        let gp = gamma / (1.0 - self.d1 * gamma);
        self.terms
            .iter()
            .map(|t| t.d * gp.powf(t.beta))
            .sum::<f64>()
            .max(0.0)
    }

    /// Smallest exponent: the chain's diversity order under the configured
    /// gain rule.
    pub fn leading_exponent(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.beta)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Leading Mellin residues of every approximate-split term.
pub fn af_asymptotics(chain: &ChainConfig) -> Result<AfAsymptotics> {
    require_fixed_gain(chain)?;
    let coeffs = derive_coefficients(chain)?;
    let hops: Vec<HopDistribution> = chain.hops.iter().map(|(h, _)| h.clone()).collect();
    let n = hops.len();
    let mut terms: Vec<AsymptoticTerm> = Vec::new();
    let mut perturbed = false;

    let l1 = if n == 1 { 1.0 } else { coeffs.big_lambda[0] };
    if l1 > 0.0 {
        let ha = asymptotic_terms(&hops[0])?;
        perturbed |= ha.perturbed;
        let scale = l1 / hops[0].mean_snr;
        for t in &ha.terms {
            terms.push(AsymptoticTerm {
                beta: t.beta,
                d: t.d * scale.powf(t.beta),
            });
        }
    }
    let mut cprod = 1.0;
    for i in 2..=n {
        cprod *= coeffs.c_r[i - 1];
        let li = coeffs.big_lambda[i - 1];
        if li <= 0.0 {
            continue;
        }
        for (w, scale, kernel) in term_combos(&hops[..i]) {
            let (ts, p) = term_asymptotics(&kernel, w, 1.0)?;
            perturbed |= p;
            let zc = scale * cprod * li;
            for t in ts {
                terms.push(AsymptoticTerm {
                    beta: t.beta,
                    d: t.d * zc.powf(t.beta),
                });
            }
        }
    }
    terms.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    Ok(AfAsymptotics {
        terms,
        perturbed,
        d1: coeffs.d1(),
    })
}

// ---------------------------------------------------------------------
// Public metric operations.
// ---------------------------------------------------------------------

/// Exact two-hop outage CDF (marginal term plus coupled bivariate H-term).
///
/// Errors if the chain is not a two-hop fixed-gain chain or if the double
/// contour fails to converge for the hop kernels.
pub fn cdf_af_dual_exact(chain: &ChainConfig, gamma: f64) -> Result<f64> {
    require_fixed_gain(chain)?;
    if chain.n_hops() != 2 {
        return Err(Error::Unsupported(
            "the dual-hop closed form needs exactly two hops".into(),
        ));
    }
    check_threshold(gamma)?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let coeffs = derive_coefficients(chain)?;
    let Some(gp) = coeffs.gamma_prime(gamma) else {
        return Ok(1.0);
    };
    let hops: Vec<HopDistribution> = chain.hops.iter().map(|(h, _)| h.clone()).collect();
    dual_closed_form(&hops, &coeffs, gp)
}

/// Approximate two-hop outage CDF (two univariate terms); converges to the
/// exact value as the per-hop SNRs grow.
pub fn cdf_af_dual_approx(chain: &ChainConfig, gamma: f64) -> Result<f64> {
    require_fixed_gain(chain)?;
    if chain.n_hops() != 2 {
        return Err(Error::Unsupported(
            "the dual-hop split needs exactly two hops".into(),
        ));
    }
    cdf_af_nhop(chain, gamma, CdfMode::Approx)
}

/// N-hop outage CDF of the fixed-gain AF chain.
///
/// `Exact` conditions hop by hop (closed bivariate form for two hops, a
/// tabulated survival cascade otherwise); `Approx` sums the univariate
/// product-threshold terms, which is tight at high SNR.
pub fn cdf_af_nhop(chain: &ChainConfig, gamma: f64, mode: CdfMode) -> Result<f64> {
    match mode {
        CdfMode::Exact => AfCdfEngine::new(chain)?.exact(gamma),
        CdfMode::Approx => {
            require_fixed_gain(chain)?;
            check_threshold(gamma)?;
            if gamma == 0.0 {
                return Ok(0.0);
            }
            let coeffs = derive_coefficients(chain)?;
            let Some(gp) = coeffs.gamma_prime(gamma) else {
                return Ok(1.0);
            };
            let hops: Vec<HopDistribution> =
                chain.hops.iter().map(|(h, _)| h.clone()).collect();
            approx_value(&hops, &coeffs, gp)
        }
    }
}

/// Leading power-law outage CDF; exact in the high-SNR limit.
pub fn cdf_af_asymptotic(chain: &ChainConfig, gamma: f64) -> Result<f64> {
    check_threshold(gamma)?;
    Ok(af_asymptotics(chain)?.eval(gamma))
}

/// Outage probability at the threshold `gamma_th` (identical to the CDF).
pub fn outage_af(chain: &ChainConfig, gamma_th: f64, mode: CdfMode) -> Result<f64> {
    cdf_af_nhop(chain, gamma_th, mode)
}

/// Average bit-error probability of the ideal-hardware fixed-gain chain
/// under the unified template.
///
/// Pairing the template's gamma-weighted integral with each
/// product-threshold CDF term multiplies its Mellin kernel by
/// `Gamma(p + s)` and rescales the argument by `1/q_k`:
///
/// `Pe = delta/(2 Gamma(p)) * sum_k sum_terms w * H'[z_term / q_k]`.
///
/// Errors on impaired chains (`kappa > 0`): the distortion-saturated CDF has
/// no closed template integral, and simulation covers that regime.
pub fn bep_af_id(chain: &ChainConfig, modulation: &ModulationSpec) -> Result<f64> {
    require_fixed_gain(chain)?;
    require_ideal(chain, "the error-probability closed form")?;
    let coeffs = derive_coefficients(chain)?;
    let hops: Vec<HopDistribution> = chain.hops.iter().map(|(h, _)| h.clone()).collect();
    let n = hops.len();

    // With ideal hardware gamma' = gamma and every Lambda_i = 1, so the
    // expansion terms are plain product thresholds.
    let mut pieces: Vec<(f64, f64, GammaKernel)> = Vec::new();
    for t in &hops[0].terms {
        pieces.push((
            t.weight(),
            t.varrho / hops[0].mean_snr,
            t.kernel().clone(),
        ));
    }
    let mut cprod = 1.0;
    for i in 2..=n {
        cprod *= coeffs.c_r[i - 1];
        for (w, scale, kernel) in term_combos(&hops[..i]) {
            pieces.push((w, scale * cprod, kernel));
        }
    }

    let mut total = 0.0;
    for &qk in &modulation.q {
        for (w, zc, kernel) in &pieces {
            total += w * bep_kernel_value(kernel, modulation.p, zc / qk)?;
        }
    }
    let gamma_p = ln_gamma_real(modulation.p)?.exp();
    Ok((modulation.delta / (2.0 * gamma_p) * total).clamp(0.0, 0.5))
}

/// `int_0^inf q^p/Gamma(p) g^{p-1} e^{-q g} Hcdf[w g] dg = H'[w/q] / Gamma(p)`
/// where `H'` is the CDF kernel times `Gamma(p + s)`, evaluated at `z = w/q`.
pub(crate) fn bep_kernel_value(pdf_kernel: &GammaKernel, p: f64, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let paired = pdf_kernel.cdf_kernel().with_num(p, 1.0);
    if z <= 0.75 {
        match kernel_series(&paired, z.ln(), 5000) {
            Ok((v, _)) => return Ok(v),
            Err(Error::CoincidentPoles(_))
            | Err(Error::SeriesDiverges(_))
            | Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let policy = eval_policy();
    if z < 1.5 {
        let c = auto_abscissa(paired.left_edge(), paired.right_edge());
        return Ok(integrate_kernel(&paired, z.ln(), c, &policy)?.0);
    }
    // Large argument: pull the s = 0 residue (the saturated template value
    // Gamma(p) * theta(0)) across the contour and integrate the remainder
    // left of zero, where it decays like z^c.
    let mass = pdf_kernel.eval_real(0.0)? * ln_gamma_real(p)?.exp();
    let c = 0.5 * pdf_kernel.left_edge().max(-p).max(-1.0);
    let tail = integrate_kernel(&paired, z.ln(), c, &policy)?.0;
    Ok(mass + tail)
}

/// Upper bound on the ergodic capacity of the impaired fixed-gain chain:
/// the concave `log2(1 + c x)` evaluated at the SNDR of the mean per-hop
/// SNRs (Jensen), divided by the number of hops.
///
/// The detection constant `c` multiplies the SNDR inside the logarithm,
/// matching the ceiling convention; the bound saturates to
/// [`capacity_ceiling_af`] as every mean SNR grows.
pub fn ec_af_hi_bound(chain: &ChainConfig) -> Result<f64> {
    require_fixed_gain(chain)?;
    let coeffs = derive_coefficients(chain)?;
    let means = chain
        .hops
        .iter()
        .map(|(h, _)| mean_snr_analytic(h))
        .collect::<Result<Vec<f64>>>()?;
    let c = chain.detection.capacity_constant();
    let sndr = sndr_fg(&coeffs, &means);
    Ok((1.0 + c * sndr).log2() / chain.n_hops() as f64)
}

/// Ergodic capacity of the ideal-hardware fixed-gain chain, by survival
/// quadrature of the capacity integral
/// `C = c/(N ln 2) int (1 - F(g)) / (1 + c g) dg`.
pub fn ec_af_id(chain: &ChainConfig) -> Result<f64> {
    require_fixed_gain(chain)?;
    require_ideal(chain, "the exact ergodic-capacity form")?;
    let engine = AfCdfEngine::with_resolution(chain, 12_000)?;
    let c = chain.detection.capacity_constant();
    let gmax = chain
        .hops
        .iter()
        .map(|(h, _)| h.mean_snr)
        .fold(0.0_f64, f64::max)
        * 1e6;
    // Substituting u = ln(1 + c g) absorbs the Lorentzian weight:
    // C = 1/(N ln 2) int_0^{u_hi} (1 - F(g(u))) du.
    let u_hi = (1.0 + c * gmax).ln();
    let intervals = 800; // Simpson pairs; the integrand is smooth in u
    let mut acc = 0.0;
    for j in 0..=intervals {
        let u = u_hi * j as f64 / intervals as f64;
        let g = (u.exp() - 1.0) / c;
        let s = 1.0 - engine.exact_numeric(g)?;
        let w = if j == 0 || j == intervals {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * s;
    }
    let integral = acc * u_hi / (3.0 * intervals as f64);
    Ok(integral / (chain.n_hops() as f64 * std::f64::consts::LN_2))
}

/// Capacity ceiling of the amplify-and-forward chain:
/// `(1/N) log2(1 + c / (prod (1+kappa_i^2) - 1))`, infinite when ideal.
pub fn capacity_ceiling_af(chain: &ChainConfig) -> Result<f64> {
    require_amplify(chain)?;
    let ceil = ceiling_af(&chain.impairments());
    if !ceil.is_finite() {
        return Ok(f64::INFINITY);
    }
    let c = chain.detection.capacity_constant();
    Ok((1.0 + c * ceil).log2() / chain.n_hops() as f64)
}

/// Diversity order of the fixed-gain chain from the per-hop leading
/// exponents `beta'_i`: blind gains weight hop `i` by `i`; statistics-aware
/// gains leave the exponents unweighted.
pub fn diversity_af(chain: &ChainConfig, mode: GainMode) -> Result<f64> {
    require_amplify(chain)?;
    let mut best = f64::INFINITY;
    for (i, (hop, _)) in chain.hops.iter().enumerate() {
        let beta = asymptotic_terms(hop)?.leading_exponent();
        let contribution = match mode {
            GainMode::Blind => (i + 1) as f64 * beta,
            GainMode::SemiBlind => beta,
        };
        best = best.min(contribution);
    }
    Ok(best)
}

/// Least-squares diversity estimate from an outage sweep `(SNR_dB, OP)`:
/// fits `log10(OP)` against `SNR_dB / 10` over the top 15 dB of the sweep
/// and returns the negated slope.
pub fn fit_diversity_slope(points: &[(f64, f64)]) -> Result<f64> {
    let top = points
        .iter()
        .map(|(db, _)| *db)
        .fold(f64::NEG_INFINITY, f64::max);
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(db, op)| *db >= top - 15.0 && *op > 0.0 && op.is_finite())
        .map(|(db, op)| (db / 10.0, op.log10()))
        .collect();
    if used.len() < 2 {
        return Err(Error::invalid(
            "points",
            "need at least two positive outage points in the top 15 dB",
        ));
    }
    let n = used.len() as f64;
    let sx: f64 = used.iter().map(|(x, _)| x).sum();
    let sy: f64 = used.iter().map(|(_, y)| y).sum();
    let sxx: f64 = used.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = used.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::invalid("points", "sweep points are degenerate"));
    }
    Ok(-(n * sxy - sx * sy) / denom)
}
