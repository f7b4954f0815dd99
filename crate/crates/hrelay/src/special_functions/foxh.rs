//! Public H-function API: parameter sets, validation, and the two
//! evaluation routes (contour quadrature and residue series).

use crate::error::{Error, Result};
use crate::special_functions::contour::{integrate_kernel, pick_abscissa, ContourPolicy};
use crate::special_functions::kernel::GammaKernel;
use crate::special_functions::series::kernel_series;
use serde::{Deserialize, Serialize};

/// Parameters of the univariate H-function
/// `H^{m,n}_{p,q}[z | (a_j, A_j)_{j=1..p}; (b_j, B_j)_{j=1..q}]`.
///
/// The kernel is
/// `theta(s) = [prod_{j<=m} G(b_j - B_j s) * prod_{j<=n} G(1 - a_j + A_j s)]
///           / [prod_{j>m}  G(1 - b_j + B_j s) * prod_{j>n} G(a_j - A_j s)]`
/// and the function is `(1/2 pi i) int theta(s) z^s ds` upward along a
/// vertical contour separating the `b`-pole families (right) from the
/// `a`-pole families (left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HParams {
    /// Number of lower-parameter gammas in the numerator (0 ≤ m ≤ q).
    pub m: usize,
    /// Number of upper-parameter gammas in the numerator (0 ≤ n ≤ p).
    pub n: usize,
    /// Upper parameter pairs (a_j, A_j), length p.
    pub upper: Vec<(f64, f64)>,
    /// Lower parameter pairs (b_j, B_j), length q.
    pub lower: Vec<(f64, f64)>,
}

impl HParams {
    /// Validating constructor: checks the order bounds, positive slopes,
    /// and that a separating vertical contour exists.
    pub fn new(
        m: usize,
        n: usize,
        upper: Vec<(f64, f64)>,
        lower: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if m > lower.len() {
            return Err(Error::invalid(
                "m",
                format!("m = {m} exceeds q = {}", lower.len()),
            ));
        }
        if n > upper.len() {
            return Err(Error::invalid(
                "n",
                format!("n = {n} exceeds p = {}", upper.len()),
            ));
        }
        for (j, (_, coef)) in upper.iter().enumerate() {
            if !(*coef > 0.0) {
                return Err(Error::invalid(
                    "upper",
                    format!("A_{} = {coef} must be > 0", j + 1),
                ));
            }
        }
        for (j, (_, coef)) in lower.iter().enumerate() {
            if !(*coef > 0.0) {
                return Err(Error::invalid(
                    "lower",
                    format!("B_{} = {coef} must be > 0", j + 1),
                ));
            }
        }
        let params = HParams { m, n, upper, lower };
        // Contour separability between the m-group (right) and n-group (left).
        params.kernel().strip()?;
        Ok(params)
    }

    /// Number of upper parameters.
    pub fn p(&self) -> usize {
        self.upper.len()
    }

    /// Number of lower parameters.
    pub fn q(&self) -> usize {
        self.lower.len()
    }

    /// Internal gamma-factor kernel.
    pub(crate) fn kernel(&self) -> GammaKernel {
        let mut k = GammaKernel::one();
        for (j, &(b, bb)) in self.lower.iter().enumerate() {
            if j < self.m {
                k = k.with_num(b, -bb);
            } else {
                k = k.with_den(1.0 - b, bb);
            }
        }
        for (j, &(a, aa)) in self.upper.iter().enumerate() {
            if j < self.n {
                k = k.with_num(1.0 - a, aa);
            } else {
                k = k.with_den(a, -aa);
            }
        }
        k
    }
}

/// Contour-quadrature evaluation of the H-function. Returns the value; see
/// [`fox_h_with_error`] for the accompanying error estimate.
pub fn fox_h(params: &HParams, z: f64, policy: &ContourPolicy) -> Result<f64> {
    Ok(fox_h_with_error(params, z, policy)?.0)
}

/// Contour-quadrature evaluation returning `(value, error_estimate)`.
pub fn fox_h_with_error(params: &HParams, z: f64, policy: &ContourPolicy) -> Result<(f64, f64)> {
    if !(z > 0.0) {
        return Err(Error::invalid("z", format!("fox_h needs z > 0, got {z}")));
    }
    let kernel = params.kernel();
    let c = pick_abscissa(&kernel, policy)?;
    let (value, err) = integrate_kernel(&kernel, z.ln(), c, policy)?;
    if err > policy.rel_tol.max(1e-12) * value.abs().max(1e-280) * 1e4 {
        return Err(Error::NonConvergence {
            op: "fox_h",
            message: format!(
                "error estimate {err:.3e} too large relative to value {value:.3e}"
            ),
        });
    }
    Ok((value, err))
}

/// Residue-series evaluation of the H-function. Returns the partial sum;
/// see [`fox_h_series_with_error`] for the accompanying error estimate.
///
/// Errors on coincident right-pole configurations and on visible divergence
/// (argument outside the series' convergence domain).
pub fn fox_h_series(params: &HParams, z: f64, max_terms: usize) -> Result<f64> {
    Ok(fox_h_series_with_error(params, z, max_terms)?.0)
}

/// Residue-series evaluation returning `(value, error_estimate)`.
pub fn fox_h_series_with_error(
    params: &HParams,
    z: f64,
    max_terms: usize,
) -> Result<(f64, f64)> {
    if z < 0.0 {
        return Err(Error::invalid("z", format!("fox_h_series needs z >= 0, got {z}")));
    }
    let kernel = params.kernel();
    if z == 0.0 {
        // Leading power z^{min b_j/B_j}: zero iff all leading powers positive.
        if kernel.right_edge() > 0.0 {
            return Ok((0.0, 0.0));
        }
        return Err(Error::invalid(
            "z",
            "z = 0 with a nonpositive leading power".to_string(),
        ));
    }
    kernel_series(&kernel, z.ln(), max_terms)
}
