//! Trial-level simulation of the relay chain, independent of every closed
//! form in the metric modules: per-hop SNRs are drawn from the catalog's
//! generative constructions, the end-to-end SNDR follows the protocol's
//! cascade, and outage / bit-error / capacity figures are estimated
//! empirically with standard errors.
//!
//! Reproducibility contract: a fixed ([`SimPlan::seed`],
//! [`SimPlan::workers`]) pair yields bitwise-identical estimates. Each
//! worker owns a counter-indexed substream of the master seed and a fixed,
//! contiguous block of trials, and partial accumulators merge in worker
//! order, so results never depend on thread scheduling. Changing the
//! worker count repartitions trials across substreams and is allowed to
//! change the estimates within their error bars.

use crate::error::{Error, Result};
use crate::fading_catalog::{sample, to_h_params, HopDistribution};
use crate::metrics_af::ModulationSpec;
use crate::sndr_core::{
    derive_coefficients, sndr_csi, sndr_df, sndr_fg, ChainConfig, ChainCoefficients,
    HopImpairment, Protocol,
};
use crate::special_functions::gamma_q;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fewest trials for which confidence intervals are reported.
pub const MIN_TRIALS: u64 = 10_000;

/// How a requested bit-error probability is estimated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BepMode {
    /// Simulate on-off keyed symbols through the full signal cascade —
    /// drawn distortion and receiver noise at every node — and count
    /// threshold-detection errors at the destination (decode-forward
    /// chains detect per hop and propagate decisions). The companion
    /// closed-form template is on-off keying
    /// ([`ModulationSpec::ook`]); the modulation field of the plan is
    /// ignored in this mode.
    #[default]
    OokThreshold,
    /// Average the modulation template's conditional error probability
    /// `delta/2 * sum_k Q(p, q_k g)` over the drawn SNDRs (`Q` the
    /// regularized upper incomplete gamma). Shares its modulation
    /// parameters with the closed-form error rates, so the two are
    /// comparable for any template. Decode-forward chains combine the
    /// per-hop conditional errors by decision parity (an error survives to
    /// the destination iff an odd number of hops flip), which the sum-form
    /// closed forms approximate to first order.
    SemiAnalytic,
}

/// Bit-error estimation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BepSpec {
    /// Error-probability template shared with the closed forms.
    pub modulation: ModulationSpec,
    /// Estimation route.
    #[serde(default)]
    pub mode: BepMode,
}

/// Which metrics one simulation run estimates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    /// Outage thresholds (linear SNDR), one estimate per entry.
    #[serde(default)]
    pub op_thresholds: Vec<f64>,
    /// Bit-error probability request, if any.
    #[serde(default)]
    pub bep: Option<BepSpec>,
    /// Estimate the ergodic capacity (bits/s/Hz, per-hop normalized).
    #[serde(default)]
    pub ec: bool,
}

impl MetricSet {
    fn is_empty(&self) -> bool {
        self.op_thresholds.is_empty() && self.bep.is_none() && !self.ec
    }
}

/// A complete, reproducible simulation request.
#[derive(Debug, Clone)]
pub struct SimPlan {
    /// Chain under test (fading, impairments, protocol, detection).
    pub chain: ChainConfig,
    /// Optional per-hop mean-SNR overrides (linear); `None` keeps the
    /// chain's own scales. Lets one chain definition serve a whole sweep.
    pub mean_snrs: Option<Vec<f64>>,
    /// Number of trials (at least [`MIN_TRIALS`]).
    pub trials: u64,
    /// Master seed; substreams derive from it by worker index.
    pub seed: u64,
    /// Worker count (at least 1); part of the reproducibility contract.
    pub workers: usize,
    /// Metrics to estimate.
    pub metrics: MetricSet,
}

impl SimPlan {
    /// A plan with the default trial count (10^6), four workers, and no
    /// metrics selected yet.
    pub fn new(chain: ChainConfig, seed: u64) -> Self {
        SimPlan {
            chain,
            mean_snrs: None,
            trials: 1_000_000,
            seed,
            workers: 4,
            metrics: MetricSet::default(),
        }
    }

    /// Replace the trial count.
    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    /// Replace the worker count.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Override the per-hop mean SNRs.
    pub fn with_mean_snrs(mut self, mean_snrs: Vec<f64>) -> Self {
        self.mean_snrs = Some(mean_snrs);
        self
    }

    /// Request outage estimates at the given thresholds.
    pub fn with_op_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.metrics.op_thresholds = thresholds;
        self
    }

    /// Request a bit-error estimate.
    pub fn with_bep(mut self, spec: BepSpec) -> Self {
        self.metrics.bep = Some(spec);
        self
    }

    /// Request an ergodic-capacity estimate.
    pub fn with_ec(mut self) -> Self {
        self.metrics.ec = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::invalid(
                "trials",
                format!("confidence intervals need at least {MIN_TRIALS} trials, got {}", self.trials),
            ));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers", "need at least one worker"));
        }
        if let Some(snrs) = &self.mean_snrs {
            if snrs.len() != self.chain.n_hops() {
                return Err(Error::invalid(
                    "mean_snrs",
                    format!("expected {} entries, got {}", self.chain.n_hops(), snrs.len()),
                ));
            }
            if snrs.iter().any(|g| !g.is_finite() || *g <= 0.0) {
                return Err(Error::invalid("mean_snrs", "entries must be finite positive"));
            }
        }
        if self.metrics.is_empty() {
            return Err(Error::invalid("metrics", "no metrics requested"));
        }
        if self.metrics.op_thresholds.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(Error::invalid("op_thresholds", "thresholds must be finite positive"));
        }
        Ok(())
    }

    /// The chain with any mean-SNR overrides applied.
    fn effective_chain(&self) -> Result<ChainConfig> {
        let Some(snrs) = &self.mean_snrs else {
            return Ok(self.chain.clone());
        };
        let mut chain = self.chain.clone();
        for (hop, &target) in chain.hops.iter_mut().zip(snrs) {
            hop.0 = to_h_params(hop.0.model(), target)?;
        }
        Ok(chain)
    }
}

/// An empirical point estimate with its standard error.
///
/// For probability metrics (outage, threshold-detected bit errors) the
/// standard error is the binomial `sqrt(p (1 - p) / n)`; for averaged
/// quantities (capacity, semi-analytic error rates) it is the sample
/// standard deviation over `sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Point value.
    pub value: f64,
    /// Standard error of the point value.
    pub std_error: f64,
    /// Trials behind the estimate.
    pub trials: u64,
}

impl Estimate {
    fn binomial(successes: u64, n: u64) -> Self {
        let nf = n as f64;
        let p = successes as f64 / nf;
        Estimate { value: p, std_error: (p * (1.0 - p) / nf).sqrt(), trials: n }
    }

    fn mean(sum: f64, sumsq: f64, n: u64) -> Self {
        let nf = n as f64;
        let value = sum / nf;
        let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
        Estimate { value, std_error: (var / nf).sqrt(), trials: n }
    }
}

/// All estimates produced by one [`simulate`] run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    /// `(threshold, outage estimate)` pairs, in request order.
    pub op: Vec<(f64, Estimate)>,
    /// Bit-error estimate, if requested.
    pub bep: Option<Estimate>,
    /// Ergodic-capacity estimate, if requested.
    pub ec: Option<Estimate>,
}

// ---------------------------------------------------------------------------
// Per-worker accumulation
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct Accumulator {
    trials: u64,
    op_counts: Vec<u64>,
    bep_errors: u64,
    bep_sum: f64,
    bep_sumsq: f64,
    ec_sum: f64,
    ec_sumsq: f64,
}

impl Accumulator {
    fn new(n_thresholds: usize) -> Self {
        Accumulator {
            trials: 0,
            op_counts: vec![0; n_thresholds],
            bep_errors: 0,
            bep_sum: 0.0,
            bep_sumsq: 0.0,
            ec_sum: 0.0,
            ec_sumsq: 0.0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.trials += other.trials;
        for (a, b) in self.op_counts.iter_mut().zip(&other.op_counts) {
            *a += b;
        }
        self.bep_errors += other.bep_errors;
        self.bep_sum += other.bep_sum;
        self.bep_sumsq += other.bep_sumsq;
        self.ec_sum += other.ec_sum;
        self.ec_sumsq += other.ec_sumsq;
    }
}

/// Everything a worker needs, derived once from the plan.
struct WorkerContext {
    hops: Vec<HopDistribution>,
    impairments: Vec<HopImpairment>,
    protocol: Protocol,
    /// Fixed-gain chain coefficients (`None` for variable-gain and
    /// decode-forward chains).
    fg: Option<ChainCoefficients>,
    capacity_constant: f64,
    metrics: MetricSet,
}

impl WorkerContext {
    fn build(plan: &SimPlan) -> Result<Self> {
        let chain = plan.effective_chain()?;
        let fg = match chain.protocol {
            Protocol::BlindFgAf { .. } | Protocol::SemiBlindFgAf => {
                Some(derive_coefficients(&chain)?)
            }
            Protocol::CsiAf | Protocol::Df => None,
        };
        Ok(WorkerContext {
            hops: chain.hops.iter().map(|(h, _)| h.clone()).collect(),
            impairments: chain.hops.iter().map(|(_, i)| *i).collect(),
            protocol: chain.protocol.clone(),
            fg,
            capacity_constant: chain.detection.capacity_constant(),
            metrics: plan.metrics.clone(),
        })
    }

    fn draw_gammas<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (slot, hop) in out.iter_mut().zip(&self.hops) {
            *slot = sample(hop, rng);
        }
    }

    fn sndr(&self, gammas: &[f64]) -> f64 {
        match (&self.protocol, &self.fg) {
            (_, Some(coeffs)) => sndr_fg(coeffs, gammas),
            (Protocol::CsiAf, None) => sndr_csi(&self.impairments, gammas),
            _ => sndr_df(&self.impairments, gammas),
        }
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, std: f64) -> (f64, f64) {
    let scale = std * std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (scale * re, scale * im)
}

/// One on-off keyed symbol through the amplify-and-forward cascade with
/// drawn distortion and receiver noise; returns whether the destination's
/// threshold detector errs. `relay_gains` holds `G_i = 1/sqrt(C_{R_i})`.
fn ook_trial_af<R: Rng + ?Sized>(
    rng: &mut R,
    gammas: &[f64],
    impairments: &[HopImpairment],
    relay_gains: &[f64],
) -> bool {
    let on = rng.gen_bool(0.5);
    let amp = std::f64::consts::SQRT_2; // unit average symbol power
    let (mut re, mut im) = (if on { amp } else { 0.0 }, 0.0);
    let mut end_gain = 1.0; // deterministic end-to-end amplitude gain
    // Average transmit power at the current node given the fading state:
    // fixed relay gains normalize it only in expectation over the fading,
    // and the aggregate distortion scales with this conditional power.
    let mut power = 1.0;
    for (i, (&g, imp)) in gammas.iter().zip(impairments).enumerate() {
        debug_assert!(g >= 0.0);
        let a = g.sqrt();
        // Transmit-side aggregate distortion, variance kappa^2 * power.
        let (dre, dim) = complex_normal(rng, imp.kappa() * power.sqrt());
        // Receiver noise, unit variance.
        let (nre, nim) = complex_normal(rng, 1.0);
        re = a * (re + dre) + nre;
        im = a * (im + dim) + nim;
        end_gain *= a;
        power = g * (1.0 + imp.kappa_sq()) * power + 1.0;
        if i + 1 < gammas.len() {
            let gain = relay_gains[i];
            re *= gain;
            im *= gain;
            end_gain *= gain;
            power *= gain * gain;
        }
    }
    let decided_on = re > end_gain * amp / 2.0;
    decided_on != on
}

/// On-off keyed symbol over the decode-forward chain: each receiver
/// threshold-detects and the next transmitter re-modulates its decision;
/// returns whether the destination's decision differs from the source bit.
fn ook_trial_df<R: Rng + ?Sized>(
    rng: &mut R,
    gammas: &[f64],
    impairments: &[HopImpairment],
) -> bool {
    let amp = std::f64::consts::SQRT_2;
    let sent = rng.gen_bool(0.5);
    let mut current = sent;
    for (&g, imp) in gammas.iter().zip(impairments) {
        let a = g.sqrt();
        let (dre, _dim) = complex_normal(rng, imp.kappa());
        let (nre, _nim) = complex_normal(rng, 1.0);
        let observed = a * (if current { amp } else { 0.0 } + dre) + nre;
        current = observed > a * amp / 2.0;
    }
    current != sent
}

/// Conditional error probability of the modulation template at SNDR `g`:
/// `delta/2 * sum_k Q(p, q_k g)`.
fn conditional_bep(modulation: &ModulationSpec, g: f64) -> Result<f64> {
    let mut acc = 0.0;
    for &qk in &modulation.q {
        acc += gamma_q(modulation.p, qk * g)?;
    }
    Ok(0.5 * modulation.delta * acc)
}

fn run_worker(ctx: &WorkerContext, seed: u64, stream: u64, trials: u64) -> Result<Accumulator> {
    let mut acc = Accumulator::new(ctx.metrics.op_thresholds.len());
    if trials == 0 {
        return Ok(acc);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let n = ctx.hops.len();
    let mut gammas = vec![0.0; n];
    let relay_gains: Vec<f64> = ctx
        .fg
        .as_ref()
        .map(|c| c.c_r[1..].iter().map(|v| 1.0 / v.sqrt()).collect())
        .unwrap_or_default();

    for trial in 0..trials {
        ctx.draw_gammas(&mut rng, &mut gammas);
        let sndr = ctx.sndr(&gammas);

        // The cascade expansion and the production form are algebraically
        // equal per draw; spot-check the first trials of every worker.
        if trial < 16 {
            if let Some(coeffs) = &ctx.fg {
                let expanded = sndr_ratio_form(&ctx.impairments, &coeffs.c_r, &gammas);
                let rel = (expanded - sndr).abs() / sndr.abs().max(1e-300);
                assert!(
                    rel <= 1e-11,
                    "cascade-expansion SNDR {expanded:e} disagrees with the \
                     production form {sndr:e} (rel {rel:e})"
                );
            }
        }

        for (count, &threshold) in acc.op_counts.iter_mut().zip(&ctx.metrics.op_thresholds) {
            if sndr < threshold {
                *count += 1;
            }
        }
        if let Some(bep) = &ctx.metrics.bep {
            match bep.mode {
                BepMode::OokThreshold => {
                    let errored = match (&ctx.protocol, &ctx.fg) {
                        (Protocol::Df, _) => ook_trial_df(&mut rng, &gammas, &ctx.impairments),
                        (Protocol::CsiAf, _) => {
                            let gains: Vec<f64> = ctx.impairments[..n - 1]
                                .iter()
                                .zip(&gammas)
                                .map(|(imp, &g)| {
                                    1.0 / ((1.0 + imp.kappa_sq()) * g + 1.0).sqrt()
                                })
                                .collect();
                            ook_trial_af(&mut rng, &gammas, &ctx.impairments, &gains)
                        }
                        _ => ook_trial_af(&mut rng, &gammas, &ctx.impairments, &relay_gains),
                    };
                    if errored {
                        acc.bep_errors += 1;
                    }
                }
                BepMode::SemiAnalytic => {
                    let e = match &ctx.protocol {
                        // Decode-forward errs when an odd number of hop
                        // decisions flip; the closed forms keep only the
                        // first-order (per-hop sum) part of this.
                        Protocol::Df => {
                            let mut prod = 1.0;
                            for (imp, &g) in ctx.impairments.iter().zip(gammas.iter()) {
                                let post = g / (imp.kappa_sq() * g + 1.0);
                                let e_hop =
                                    conditional_bep(&bep.modulation, post)?.clamp(0.0, 0.5);
                                prod *= 1.0 - 2.0 * e_hop;
                            }
                            0.5 * (1.0 - prod)
                        }
                        _ => conditional_bep(&bep.modulation, sndr)?,
                    };
                    acc.bep_sum += e;
                    acc.bep_sumsq += e * e;
                }
            }
        }
        if ctx.metrics.ec {
            let c = (1.0 + ctx.capacity_constant * sndr).log2() / n as f64;
            acc.ec_sum += c;
            acc.ec_sumsq += c * c;
        }
        acc.trials += 1;
    }
    Ok(acc)
}

/// Run the plan and return one [`Estimate`] per requested metric.
///
/// Trials are split into contiguous blocks, one per worker; worker `w`
/// draws from substream `w` of the master seed, and the partial sums merge
/// in worker order, so a fixed `(seed, workers)` pair is bitwise
/// reproducible regardless of scheduling.
///
/// # Errors
/// [`Error::InvalidParam`] for an invalid plan (see [`SimPlan`] field
/// docs); construction errors from the chain's coefficient derivation
/// propagate.
pub fn simulate(plan: &SimPlan) -> Result<SimReport> {
    plan.validate()?;
    let ctx = WorkerContext::build(plan)?;

    let workers = plan.workers as u64;
    let base = plan.trials / workers;
    let extra = plan.trials % workers;
    let partials: Vec<Result<Accumulator>> = (0..plan.workers)
        .into_par_iter()
        .map(|w| {
            let quota = base + u64::from((w as u64) < extra);
            run_worker(&ctx, plan.seed, w as u64, quota)
        })
        .collect();

    let mut total = Accumulator::new(ctx.metrics.op_thresholds.len());
    for partial in partials {
        total.merge(&partial?);
    }

    let n = total.trials;
    let op = ctx
        .metrics
        .op_thresholds
        .iter()
        .zip(&total.op_counts)
        .map(|(&threshold, &count)| (threshold, Estimate::binomial(count, n)))
        .collect();
    let bep = ctx.metrics.bep.as_ref().map(|spec| match spec.mode {
        BepMode::OokThreshold => Estimate::binomial(total.bep_errors, n),
        BepMode::SemiAnalytic => Estimate::mean(total.bep_sum, total.bep_sumsq, n),
    });
    let ec = ctx.metrics.ec.then(|| Estimate::mean(total.ec_sum, total.ec_sumsq, n));
    Ok(SimReport { op, bep, ec })
}

/// Draw `count` end-to-end SNDR realizations under the plan's chain (a
/// single substream — worker 0 — regardless of the plan's worker count).
///
/// Raw draws feed distribution-level tests: empirical CDFs against the
/// closed-form outage curves, and ceiling bounds on every draw.
///
/// # Errors
/// As [`simulate`], except the trial-count floor does not apply.
pub fn sndr_samples(plan: &SimPlan, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("count", "need at least one draw"));
    }
    let ctx = WorkerContext::build(plan)?;
    let mut rng = ChaCha12Rng::seed_from_u64(plan.seed);
    rng.set_stream(0);
    let mut gammas = vec![0.0; ctx.hops.len()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        ctx.draw_gammas(&mut rng, &mut gammas);
        out.push(ctx.sndr(&gammas));
    }
    Ok(out)
}

/// End-to-end SNDR of the fixed-gain chain via the explicit
/// noise-accumulation expansion of the relay cascade: signal power over
/// the three aggregated noise groups (distortion carried through the
/// chain, receiver noise carried through the chain, and distortion excited
/// by upstream receiver noise). Algebraically equal to
/// [`sndr_fg`], which is the telescoped rearrangement; keeping both forms
/// guards the rearrangement.
///
/// `c_r` are the relay constants including the leading placeholder
/// `C_{R_0} = 1`, as produced by coefficient derivation.
pub fn sndr_ratio_form(
    impairments: &[HopImpairment],
    c_r: &[f64],
    gammas: &[f64],
) -> f64 {
    let n = gammas.len();
    let gamma_prod: f64 = gammas.iter().product();

    // Distortion injected at each transmitter, amplified by the preceding
    // impairment factors, riding the full channel product.
    let mut s1 = 0.0;
    let mut lead = 1.0; // prod_{k<j} (1 + kappa_k^2)
    for j in 0..n {
        s1 += impairments[j].kappa_sq() * lead;
        lead *= 1.0 + impairments[j].kappa_sq();
    }
    s1 *= gamma_prod;

    // Receiver noise entering at hop j, carried over the hops after j.
    let mut s2 = 0.0;
    for j in 1..=n {
        let c_prod: f64 = c_r[..j].iter().product();
        let tail: f64 = gammas[j..].iter().product();
        s2 += c_prod * tail;
    }

    // Distortion at transmitter j excited by noise that entered at hop
    // l - 1 and was re-amplified along hops l..j-1.
    let mut s3 = 0.0;
    for j in 2..=n {
        let kappa_sq = impairments[j - 1].kappa_sq();
        for l in 2..=j {
            let c_prod: f64 = c_r[..l - 1].iter().product();
            let lam: f64 = impairments[l - 1..j - 1]
                .iter()
                .map(|i| 1.0 + i.kappa_sq())
                .product();
            let tail: f64 = gammas[l - 1..].iter().product();
            s3 += kappa_sq * c_prod * lam * tail;
        }
    }

    gamma_prod / (s1 + s2 + s3)
}
