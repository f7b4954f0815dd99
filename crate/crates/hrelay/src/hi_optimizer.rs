//! Impairment-budget allocation across relay hops.
//!
//! Given a total transceiver-quality budget `A = sum_i kappa_i^2` and an
//! outage threshold, these routines split the budget across the hops of a
//! relay chain according to the high-SNR outage behavior at that threshold.
//! Two paths are provided:
//!
//! * closed forms for the two relaying families ([`solve_af_nakagami`],
//!   [`solve_df_nakagami`]): exact stationary points of the leading-order
//!   outage surrogates, and
//! * a numeric path ([`solve_numeric`]) that *minimizes* the chain's
//!   truncated high-SNR outage expansion directly: projected-gradient
//!   descent on the budget simplex with an active-set Newton polish, run
//!   from several starts.
//!
//! For decode-and-forward chains the surrogate is convex and separable, so
//! the numeric path reproduces [`solve_df_nakagami`] exactly on its own
//! ground. For fixed-gain AF chains the interior stationary split returned
//! by [`solve_af_nakagami`] is *not* a minimum of the expansion: along the
//! budget line the outage (both the truncated expansion and the exact
//! cumulative distribution) peaks in the interior and is smallest at a
//! vertex of the simplex, so the numeric path pins all the impairment on
//! one hop instead. Both behaviors are deliberate; see the per-function
//! documentation.

use crate::error::{Error, Result};
use crate::metrics_af::af_asymptotics;
use crate::metrics_df::cdf_df_asymptotic;
use crate::sndr_core::{ChainConfig, HopImpairment, Protocol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Normalized stationarity tolerance [`solve_numeric`] must reach.
///
/// The residual is the largest deviation of the objective gradient from its
/// mean over the free (strictly positive) coordinates, plus any violation of
/// the sign condition on coordinates pinned at zero, normalized by the
/// largest gradient magnitude.
pub const STATIONARITY_TOL: f64 = 1e-8;

/// Relative step for the central finite differences used by the solver.
const FD_REL: f64 = 1e-5;

/// Objective value assigned where an allocation saturates the chain (the
/// threshold sits at or above the SNDR ceiling). Any true outage surrogate
/// value at a feasible point is far below this, so the penalty pushes the
/// iterates back into the feasible region while staying monotone in the
/// degree of saturation.
const SATURATION_PENALTY: f64 = 1e3;

/// Iteration cap for one projected-gradient stage.
const PG_MAX_ITERS: usize = 600;

/// Residual at which projected gradient hands over to the Newton polish.
const PG_SWITCH_RES: f64 = 1e-4;

/// Maximum alternations of polish and re-descent per start.
const POLISH_ROUNDS: usize = 4;

/// An impairment-budget allocation problem over a configured chain.
///
/// The chain supplies the fading catalog, the protocol, and the relay
/// constants; its impairment entries are placeholders that the solver
/// overwrites with each candidate split.
#[derive(Debug, Clone)]
pub struct BudgetProblem {
    /// Chain template (fading, protocol, detection). Impairments ignored.
    pub chain: ChainConfig,
    /// Total budget `A = sum_i kappa_i^2`, strictly positive.
    pub budget: f64,
    /// Outage threshold at which the asymptotic outage is minimized.
    pub gamma_th: f64,
}

impl BudgetProblem {
    /// Build an allocation problem.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] for non-positive or non-finite budget or
    /// threshold; [`Error::Unsupported`] for variable-gain chains, which
    /// have no budget objective here.
    pub fn new(chain: ChainConfig, budget: f64, gamma_th: f64) -> Result<Self> {
        validate_budget_gamma(budget, gamma_th)?;
        if matches!(chain.protocol, Protocol::CsiAf) {
            return Err(Error::Unsupported(
                "impairment-budget allocation is defined for fixed-gain and \
                 decode-forward chains; variable-gain relaying has no \
                 asymptotic budget objective here"
                    .into(),
            ));
        }
        Ok(Self { chain, budget, gamma_th })
    }

    /// The uniform split `kappa_i^2 = budget / N`.
    pub fn equal_split(&self) -> Vec<f64> {
        let n = self.chain.n_hops();
        vec![self.budget / n as f64; n]
    }

    /// Evaluate the problem's outage surrogate at a given split: the
    /// truncated high-SNR outage expansion of the configured chain at
    /// `gamma_th` (fixed-gain AF blocks, or the decode-forward per-hop
    /// sum). Saturated allocations report 1.
    ///
    /// # Errors
    /// [`Error::InvalidParam`] if `kappa_sq` has the wrong length or holds
    /// negative or non-finite entries; evaluation errors from the chain
    /// metrics propagate.
    pub fn objective_value(&self, kappa_sq: &[f64]) -> Result<f64> {
        let n = self.chain.n_hops();
        if kappa_sq.len() != n {
            return Err(Error::invalid(
                "kappa_sq",
                format!("expected {n} entries, got {}", kappa_sq.len()),
            ));
        }
        if kappa_sq.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("kappa_sq", "entries must be finite and nonnegative"));
        }
        let chain = chain_with_kappa_sq(&self.chain, kappa_sq)?;
        match &self.chain.protocol {
            Protocol::Df => cdf_df_asymptotic(&chain, self.gamma_th),
            _ => {
                let d1 = product_lambda(kappa_sq) - 1.0;
                if d1 * self.gamma_th >= 1.0 {
                    return Ok(1.0);
                }
                Ok(af_asymptotics(&chain)?.eval(self.gamma_th))
            }
        }
    }
}

/// Result of [`solve_numeric`].
#[derive(Debug, Clone)]
pub struct Allocation {
    /// Squared impairment levels, summing to the budget.
    pub kappa_sq: Vec<f64>,
    /// Outage surrogate at the returned split (see
    /// [`BudgetProblem::objective_value`]).
    pub objective: f64,
    /// Normalized stationarity residual reached (see [`STATIONARITY_TOL`]).
    pub stationarity: f64,
}

/// Closed-form budget split for fixed-gain AF chains: the interior
/// stationary point of the leading-order outage surrogate.
///
/// Every hop after the first receives `(1 + 1/gamma_th)^{1/N} - 1` and the
/// first hop absorbs the remainder. The split balances the budget
/// Lagrangian of the first block of the high-SNR outage expansion; that
/// block is monotone in the single scalar
/// `lambda_2 gamma / (1 - d_1 gamma)`, so the split is independent of the
/// fading family, its shape parameters, and the per-hop mean SNRs (the
/// outage value itself is not). The first-hop share grows with the
/// threshold: below [`equal_split_threshold_af`] the first hop receives
/// less than the others, above it more, and as `gamma_th -> inf` it absorbs
/// the entire budget.
///
/// Note this is a stationary split, not a minimizer: restricted to the
/// budget line, both the truncated expansion and the exact outage of a
/// fixed-gain chain peak in the interior and are smallest at a vertex of
/// the simplex (all impairment concentrated on one hop), which is where
/// [`solve_numeric`] converges. The returned point is the classical
/// balanced design rule; whether the chain actually operates below its
/// SNDR ceiling at `gamma_th` is a separate question ([`solve_numeric`]
/// checks it).
///
/// # Errors
/// [`Error::Infeasible`] when the stationary split would give the first hop
/// a negative share (small budget at a small threshold); the message
/// reports the minimal budget and the threshold boundary restoring interior
/// feasibility. [`Error::InvalidParam`] for bad arguments.
pub fn solve_af_nakagami(budget: f64, n_hops: usize, gamma_th: f64) -> Result<Vec<f64>> {
    validate_budget_gamma(budget, gamma_th)?;
    if n_hops == 0 {
        return Err(Error::invalid("n_hops", "need at least one hop"));
    }
    if n_hops == 1 {
        return Ok(vec![budget]);
    }
    let n = n_hops as f64;
    let u = (1.0 + 1.0 / gamma_th).powf(1.0 / n);
    let tail = u - 1.0;
    let head = budget + (n - 1.0) * (1.0 - u);
    if head < 0.0 {
        let a_min = (n - 1.0) * tail;
        let gamma_min = 1.0 / ((1.0 + budget / (n - 1.0)).powf(n) - 1.0);
        return Err(Error::Infeasible(format!(
            "interior first-hop share is negative (kappa_1^2 = {head:.6e}); \
             raise the budget to at least {a_min:.6e} or the threshold above \
             {gamma_min:.6e}"
        )));
    }
    let mut alloc = vec![tail; n_hops];
    alloc[0] = head;
    Ok(alloc)
}

/// Threshold at which [`solve_af_nakagami`] degenerates to the uniform
/// split `kappa_i^2 = budget / N`: `N^N / ((budget + N)^N - N^N)`.
///
/// Below it the first hop receives less than the others; above it, more.
///
/// # Errors
/// [`Error::InvalidParam`] for a non-positive budget or fewer than two hops
/// (with one hop every threshold yields the same trivial split).
pub fn equal_split_threshold_af(budget: f64, n_hops: usize) -> Result<f64> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(Error::invalid("budget", format!("must be finite positive, got {budget}")));
    }
    if n_hops < 2 {
        return Err(Error::invalid("n_hops", "uniform-split threshold needs at least two hops"));
    }
    let n = n_hops as f64;
    Ok(n.powf(n) / ((budget + n).powf(n) - n.powf(n)))
}

/// Closed-form budget split for decode-and-forward chains over Nakagami-m
/// fading with a common shape `m`.
///
/// Returns the `kappa_i^2` minimizing the sum of per-hop leading outage
/// terms at threshold `gamma_th` subject to `sum kappa_i^2 = budget`:
///
/// `kappa_i^2 = 1/gamma_th + ((budget * gamma_th - N) / gamma_th) * w_i`,
///
/// with weights `w_i` proportional to `mean_snrs[i]^{-m/(m+1)}`. That
/// surrogate is convex and separable, so unlike the fixed-gain AF rule this
/// split is a genuine minimum and [`solve_numeric`] reproduces it. Weaker
/// hops get smaller shares: better hardware should go where the link is
/// poorer. With equal mean SNRs the split is uniform; as `gamma_th` grows
/// it tends to `budget * w_i`. The returned point is the algebraic
/// stationary solution; at `budget * gamma_th >= N` every allocation
/// saturates the weakest hop's ceiling and the outage at `gamma_th` is 1
/// regardless (see [`solve_numeric`], which rejects that regime).
///
/// # Errors
/// [`Error::Infeasible`] when the stationary point leaves the nonnegative
/// simplex (very unequal links at a small threshold); the message reports
/// the minimal budget and minimal threshold restoring feasibility.
/// [`Error::InvalidParam`] for bad arguments.
pub fn solve_df_nakagami(
    budget: f64,
    gamma_th: f64,
    mean_snrs: &[f64],
    m: f64,
) -> Result<Vec<f64>> {
    validate_budget_gamma(budget, gamma_th)?;
    if mean_snrs.is_empty() {
        return Err(Error::invalid("mean_snrs", "need at least one hop"));
    }
    if mean_snrs.iter().any(|g| !g.is_finite() || *g <= 0.0) {
        return Err(Error::invalid("mean_snrs", "entries must be finite positive"));
    }
    if !m.is_finite() || m <= 0.0 {
        return Err(Error::invalid("m", format!("must be finite positive, got {m}")));
    }
    let n = mean_snrs.len() as f64;
    let expo = -m / (m + 1.0);
    let raw: Vec<f64> = mean_snrs.iter().map(|g| g.powf(expo)).collect();
    let total: f64 = raw.iter().sum();
    let shift = budget - n / gamma_th;
    let alloc: Vec<f64> = raw.iter().map(|w| 1.0 / gamma_th + shift * w / total).collect();
    if let Some(min) = alloc.iter().cloned().reduce(f64::min) {
        if min < 0.0 {
            let w_max = raw.iter().cloned().fold(0.0_f64, f64::max) / total;
            let a_min = (n - 1.0 / w_max) / gamma_th;
            let gamma_min = (n * w_max - 1.0) / (budget * w_max);
            return Err(Error::Infeasible(format!(
                "stationary share {min:.6e} is negative on the weakest hop; \
                 raise the budget to at least {a_min:.6e} or the threshold \
                 to at least {gamma_min:.6e}"
            )));
        }
    }
    Ok(alloc)
}

/// Minimize the chain's truncated high-SNR outage expansion at
/// `problem.gamma_th` over the budget simplex `sum kappa_i^2 = budget`,
/// `kappa_i^2 >= 0`.
///
/// Runs projected-gradient descent (central finite differences with a 1e-5
/// relative step, Armijo backtracking) from the uniform split and four
/// seeded random vertices, polishing each endpoint with an active-set
/// Newton step on the Karush-Kuhn-Tucker system, and returns the best
/// endpoint. The returned budget is exact to well below 1e-10, the
/// stationarity residual is at most [`STATIONARITY_TOL`], and the objective
/// never exceeds the uniform split's (which is always one of the starts).
///
/// For decode-and-forward chains the surrogate is convex and this
/// reproduces [`solve_df_nakagami`] wherever that closed form applies. For
/// fixed-gain AF chains the surrogate peaks inside the budget line and the
/// minimizer is a boundary allocation (hops pinned at zero impairment), so
/// the result deliberately differs from the balanced [`solve_af_nakagami`]
/// split — concentrating the budget outperforms spreading it.
///
/// # Errors
/// [`Error::Infeasible`] when no allocation keeps the threshold below the
/// chain's SNDR ceiling (fixed-gain AF: `budget * gamma_th >= 1`;
/// decode-forward: `budget * gamma_th >= N`), in which case the outage is 1
/// everywhere on the simplex and minimization is meaningless.
/// [`Error::NonConvergence`] if no start reaches the residual tolerance.
pub fn solve_numeric(problem: &BudgetProblem) -> Result<Allocation> {
    let n = problem.chain.n_hops();
    let a = problem.budget;
    let gamma = problem.gamma_th;
    match &problem.chain.protocol {
        Protocol::Df => {
            if a * gamma >= n as f64 {
                return Err(Error::Infeasible(format!(
                    "every split saturates a decode-forward hop: need \
                     budget * threshold < {n}; got {:.6e} (budget below \
                     {:.6e} or threshold below {:.6e} restores feasibility)",
                    a * gamma,
                    n as f64 / gamma,
                    n as f64 / a
                )));
            }
        }
        Protocol::CsiAf => {
            return Err(Error::Unsupported(
                "impairment-budget allocation is defined for fixed-gain and \
                 decode-forward chains"
                    .into(),
            ));
        }
        _ => {
            if a * gamma >= 1.0 {
                return Err(Error::Infeasible(format!(
                    "every split drives the fixed-gain ceiling below the \
                     threshold: need budget * threshold < 1; got {:.6e} \
                     (budget below {:.6e} or threshold below {:.6e} restores \
                     feasibility)",
                    a * gamma,
                    1.0 / gamma,
                    1.0 / a
                )));
            }
        }
    }
    if n == 1 {
        let x = vec![a];
        let objective = problem.objective_value(&x)?;
        return Ok(Allocation { kappa_sq: x, objective, stationarity: 0.0 });
    }

    let surrogate = NumericObjective { problem };
    let obj = |x: &[f64]| surrogate.eval(x);

    let mut starts: Vec<Vec<f64>> = vec![vec![a / n as f64; n]];
    let mut rng = ChaCha12Rng::seed_from_u64(0x4853_4f50);
    for _ in 0..4 {
        let j = rng.gen_range(0..n);
        let mut v = vec![0.0; n];
        v[j] = a;
        starts.push(v);
    }

    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for start in starts {
        let (mut x, mut fx, mut res) =
            projected_descent(&obj, &start, a, PG_MAX_ITERS, PG_SWITCH_RES)?;
        for _ in 0..POLISH_ROUNDS {
            if res < STATIONARITY_TOL {
                break;
            }
            let (fx2, res2) = polish(&obj, &mut x, fx, a)?;
            fx = fx2;
            res = res2;
            if res < STATIONARITY_TOL {
                break;
            }
            let (x3, fx3, res3) = projected_descent(&obj, &x, a, 200, 0.3 * res)?;
            x = x3;
            fx = fx3;
            res = res3;
        }
        // Restore the budget exactly (projection is already accurate to
        // rounding; fold the residue into the largest coordinate).
        let sum: f64 = x.iter().sum();
        if let Some(j) = argmax(&x) {
            x[j] += a - sum;
        }
        let better = match &best {
            None => true,
            Some((_, bf, br)) => {
                let tie = 1e-9 * bf.abs().max(1e-300);
                fx < bf - tie || (fx <= bf + tie && res < *br)
            }
        };
        if better {
            best = Some((x, fx, res));
        }
    }

    let (kappa_sq, _, stationarity) =
        best.expect("at least the uniform start always yields an endpoint");
    if stationarity > STATIONARITY_TOL {
        return Err(Error::NonConvergence {
            op: "solve_numeric",
            message: format!(
                "best stationarity residual {stationarity:.3e} above {STATIONARITY_TOL:.0e}"
            ),
        });
    }
    let objective = problem.objective_value(&kappa_sq)?;
    Ok(Allocation { kappa_sq, objective, stationarity })
}

// ---------------------------------------------------------------------------
// Objective plumbing
// ---------------------------------------------------------------------------

fn validate_budget_gamma(budget: f64, gamma_th: f64) -> Result<()> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(Error::invalid("budget", format!("must be finite positive, got {budget}")));
    }
    if !gamma_th.is_finite() || gamma_th <= 0.0 {
        return Err(Error::invalid("gamma_th", format!("must be finite positive, got {gamma_th}")));
    }
    Ok(())
}

/// `prod_i (1 + kappa_i^2)`.
fn product_lambda(kappa_sq: &[f64]) -> f64 {
    kappa_sq.iter().fold(1.0, |p, v| p * (1.0 + v))
}

/// Clone the template with the given squared impairments installed.
fn chain_with_kappa_sq(template: &ChainConfig, kappa_sq: &[f64]) -> Result<ChainConfig> {
    let mut chain = template.clone();
    for (hop, &x) in chain.hops.iter_mut().zip(kappa_sq) {
        hop.1 = HopImpairment::aggregate(x.max(0.0).sqrt())?;
    }
    Ok(chain)
}

/// Penalized surrogate handed to the descent loop: the outage expansion
/// inside the feasible region, a monotone penalty past the ceiling.
struct NumericObjective<'a> {
    problem: &'a BudgetProblem,
}

impl NumericObjective<'_> {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let gamma = self.problem.gamma_th;
        match &self.problem.chain.protocol {
            Protocol::Df => {
                let worst = x.iter().cloned().fold(0.0_f64, f64::max) * gamma;
                if worst >= 1.0 - 1e-12 {
                    return Ok(SATURATION_PENALTY * (1.0 + worst));
                }
                let chain = chain_with_kappa_sq(&self.problem.chain, x)?;
                cdf_df_asymptotic(&chain, gamma)
            }
            _ => {
                let d1 = product_lambda(x) - 1.0;
                if d1 * gamma >= 1.0 - 1e-12 {
                    return Ok(SATURATION_PENALTY * (1.0 + d1 * gamma));
                }
                let chain = chain_with_kappa_sq(&self.problem.chain, x)?;
                Ok(af_asymptotics(&chain)?.eval(gamma))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Simplex-constrained minimization
// ---------------------------------------------------------------------------

fn argmax(x: &[f64]) -> Option<usize> {
    x.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
}

/// Euclidean projection onto `{x >= 0, sum x = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - total) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

/// Central (one-sided at the boundary) finite-difference gradient.
fn fd_grad<F>(obj: &F, x: &[f64], fx: f64, budget: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let floor = 0.01 * budget / n as f64;
    let mut g = vec![0.0; n];
    let mut probe = x.to_vec();
    for i in 0..n {
        let h = FD_REL * x[i].max(floor);
        if x[i] >= h {
            probe[i] = x[i] + h;
            let fp = obj(&probe)?;
            probe[i] = x[i] - h;
            let fm = obj(&probe)?;
            g[i] = (fp - fm) / (2.0 * h);
        } else {
            probe[i] = x[i] + h;
            let fp = obj(&probe)?;
            g[i] = (fp - fx) / h;
        }
        probe[i] = x[i];
    }
    Ok(g)
}

/// Normalized Karush-Kuhn-Tucker residual on the budget simplex.
fn kkt_residual(x: &[f64], g: &[f64], budget: f64) -> f64 {
    let active = 1e-9 * budget;
    let mut mu = 0.0;
    let mut free = 0usize;
    for (xi, gi) in x.iter().zip(g) {
        if *xi > active {
            mu += gi;
            free += 1;
        }
    }
    if free == 0 {
        return 0.0;
    }
    mu /= free as f64;
    let mut worst = 0.0_f64;
    for (xi, gi) in x.iter().zip(g) {
        let dev = if *xi > active { (gi - mu).abs() } else { (mu - gi).max(0.0) };
        worst = worst.max(dev);
    }
    let scale = g.iter().fold(0.0_f64, |s, gi| s.max(gi.abs())).max(1e-300);
    worst / scale
}

/// Projected-gradient descent with Armijo backtracking. Returns the final
/// iterate, its objective, and its residual.
fn projected_descent<F>(
    obj: &F,
    start: &[f64],
    budget: f64,
    max_iters: usize,
    exit_res: f64,
) -> Result<(Vec<f64>, f64, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut x = project_simplex(start, budget);
    let mut fx = obj(&x)?;
    let mut step = -1.0_f64;
    for _ in 0..max_iters {
        let g = fd_grad(obj, &x, fx, budget)?;
        let res = kkt_residual(&x, &g, budget);
        if res < exit_res {
            return Ok((x, fx, res));
        }
        let g_inf = g.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        if !g_inf.is_finite() || g_inf == 0.0 {
            break;
        }
        if step <= 0.0 {
            step = budget / g_inf;
        }
        let mut trial = step;
        let mut accepted = false;
        for _ in 0..70 {
            let moved: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - trial * gi).collect();
            let candidate = project_simplex(&moved, budget);
            let displacement: f64 =
                x.iter().zip(&candidate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if displacement < 1e-18 * budget.max(1.0) {
                break;
            }
            let fc = obj(&candidate)?;
            let decrease: f64 =
                g.iter().zip(x.iter().zip(&candidate)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if fc.is_finite() && fc <= fx - 1e-4 * decrease {
                x = candidate;
                fx = fc;
                step = (trial * 2.0).min(1e15);
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = fd_grad(obj, &x, fx, budget)?;
    let res = kkt_residual(&x, &g, budget);
    Ok((x, fx, res))
}

/// Active-set Newton polish of the stationarity system on the free
/// coordinates. Mutates `x` in place; returns the objective and residual at
/// the polished point.
fn polish<F>(obj: &F, x: &mut Vec<f64>, fx_in: f64, budget: f64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let active = 1e-9 * budget;
    let mut fx = fx_in;
    let mut res;
    let mut rounds = 0usize;
    loop {
        let g = fd_grad(obj, x, fx, budget)?;
        res = kkt_residual(x, &g, budget);
        if res < 0.5 * STATIONARITY_TOL || rounds >= 8 {
            break;
        }
        rounds += 1;
        let free: Vec<usize> = (0..n).filter(|&i| x[i] > active).collect();
        let k = free.len();
        if k < 2 {
            break;
        }
        let pivot = free[k - 1];
        let residuals: Vec<f64> = free[..k - 1].iter().map(|&i| g[i] - g[pivot]).collect();

        // Jacobian of the reduced residuals along directions e_i - e_pivot.
        let mut jac = vec![vec![0.0_f64; k - 1]; k - 1];
        let mut column_ok = true;
        for (cj, &fj) in free[..k - 1].iter().enumerate() {
            let h = (1e-6 * budget).min(0.3 * x[fj]).min(0.3 * x[pivot]).max(1e-13 * budget);
            let mut xp = x.clone();
            xp[fj] += h;
            xp[pivot] -= h;
            let mut xm = x.clone();
            xm[fj] -= h;
            xm[pivot] += h;
            if xm[fj] < 0.0 || xp[pivot] < 0.0 {
                column_ok = false;
                break;
            }
            let fp = obj(&xp)?;
            let fm = obj(&xm)?;
            let gp = fd_grad(obj, &xp, fp, budget)?;
            let gm = fd_grad(obj, &xm, fm, budget)?;
            for (ci, &fi) in free[..k - 1].iter().enumerate() {
                jac[ci][cj] = ((gp[fi] - gp[pivot]) - (gm[fi] - gm[pivot])) / (2.0 * h);
            }
        }
        if !column_ok {
            break;
        }
        let rhs: Vec<f64> = residuals.iter().map(|r| -r).collect();
        let Some(dy) = solve_linear(jac, rhs) else { break };

        let mut alpha = 1.0_f64;
        let mut improved = false;
        for _ in 0..25 {
            let mut xn = x.clone();
            for (cj, &fj) in free[..k - 1].iter().enumerate() {
                xn[fj] += alpha * dy[cj];
                xn[pivot] -= alpha * dy[cj];
            }
            if xn.iter().any(|v| *v < 0.0) {
                alpha *= 0.5;
                continue;
            }
            let fn_val = obj(&xn)?;
            if !fn_val.is_finite() {
                alpha *= 0.5;
                continue;
            }
            let gn = fd_grad(obj, &xn, fn_val, budget)?;
            let rn = kkt_residual(&xn, &gn, budget);
            if rn < res {
                *x = xn;
                fx = fn_val;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((fx, res))
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|p, q| p.1.total_cmp(&q.1))?;
        if pivot_val < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
