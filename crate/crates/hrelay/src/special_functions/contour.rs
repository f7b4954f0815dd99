//! Adaptive quadrature along a vertical Mellin–Barnes contour.
//!
//! The integral computed here is
//! `(1/2*pi*i) * int_{c-iT}^{c+iT} theta(s) z^s ds`
//! for a real-coefficient [`GammaKernel`] `theta` and real `z > 0`. By
//! conjugate symmetry the value is real and equals
//! `(1/pi) * Re int_0^T exp(log theta(c+iy) + (c+iy) ln z) dy`,
//! which is what we evaluate: panel-marching Gauss–Legendre quadrature with
//! per-panel bisection refinement, adaptive truncation, and a cancellation
//! diagnostic folded into the returned error estimate.

use crate::error::{Error, Result};
use crate::special_functions::kernel::GammaKernel;
use num_complex::Complex64;

/// How the contour abscissa (real part) is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Abscissa {
    /// Midpoint of the admissible strip (bounded heuristics when a side is
    /// unbounded).
    Auto,
    /// Explicit real offsets, one per integration variable.
    Explicit(Vec<f64>),
}

/// Tuning knobs for contour evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourPolicy {
    /// Abscissa-selection rule.
    pub abscissa: Abscissa,
    /// Initial truncation half-length `T` (extended adaptively).
    pub half_length: f64,
    /// Maximum number of integrand evaluations.
    pub node_budget: usize,
    /// Target relative tolerance.
    pub rel_tol: f64,
}

impl ContourPolicy {
    /// Validating constructor.
    pub fn new(
        abscissa: Abscissa,
        half_length: f64,
        node_budget: usize,
        rel_tol: f64,
    ) -> Result<Self> {
        if !(half_length > 0.0) {
            return Err(Error::invalid(
                "half_length",
                format!("must be > 0, got {half_length}"),
            ));
        }
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::invalid(
                "rel_tol",
                format!("must be in (0,1), got {rel_tol}"),
            ));
        }
        if node_budget == 0 {
            return Err(Error::invalid("node_budget", "must be positive"));
        }
        Ok(ContourPolicy {
            abscissa,
            half_length,
            node_budget,
            rel_tol,
        })
    }
}

impl Default for ContourPolicy {
    fn default() -> Self {
        ContourPolicy {
            abscissa: Abscissa::Auto,
            half_length: 60.0,
            node_budget: 600_000,
            rel_tol: 1e-10,
        }
    }
}

/// 15-point Gauss–Legendre nodes (positive half) and weights on [-1, 1].
const GL15_X: [f64; 8] = [
    0.0,
    0.201_194_093_997_434_5,
    0.394_151_347_077_563_4,
    0.570_972_172_608_538_8,
    0.724_417_731_360_170_0,
    0.848_206_583_410_427_2,
    0.937_273_392_400_705_9,
    0.987_992_518_020_485_4,
];
const GL15_W: [f64; 8] = [
    0.202_578_241_925_561_27,
    0.198_431_485_327_111_58,
    0.186_161_000_015_562_1,
    0.166_269_205_816_993_93,
    0.139_570_677_926_154_3,
    0.107_159_220_467_171_93,
    0.070_366_047_488_108_12,
    0.030_753_241_996_117_268,
];

/// Result of one panel: (integral of f, integral of |f|, node count).
struct PanelSums {
    val: f64,
    abs: f64,
    nodes: usize,
}

/// Integrand: `Re exp(log theta(c+iy) + (c+iy) ln z - scale)`.
struct Integrand<'a> {
    kernel: &'a GammaKernel,
    c: f64,
    ln_z: f64,
    scale: f64,
}

impl Integrand<'_> {
    #[inline]
    fn eval(&self, y: f64) -> f64 {
        let s = Complex64::new(self.c, y);
        let mut lg = self.kernel.log_eval(s);
        lg += s * self.ln_z;
        lg -= Complex64::new(self.scale, 0.0);
        if lg.re > 700.0 {
            return f64::INFINITY;
        }
        lg.exp().re
    }

    /// Log-magnitude of the integrand at height y (for tail checks).
    fn log_mag(&self, y: f64) -> f64 {
        let s = Complex64::new(self.c, y);
        (self.kernel.log_eval(s) + s * self.ln_z).re - self.scale
    }

    fn gl15(&self, a: f64, b: f64) -> PanelSums {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let f0 = self.eval(mid);
        let mut val = GL15_W[0] * f0;
        let mut abs = GL15_W[0] * f0.abs();
        for i in 1..8 {
            let dx = half * GL15_X[i];
            let fp = self.eval(mid + dx);
            let fm = self.eval(mid - dx);
            val += GL15_W[i] * (fp + fm);
            abs += GL15_W[i] * (fp.abs() + fm.abs());
        }
        PanelSums {
            val: val * half,
            abs: abs * half,
            nodes: 15,
        }
    }

    /// Adaptive panel: bisect until the two-half refinement agrees.
    fn panel(&self, a: f64, b: f64, tol_abs: f64, depth: usize, budget: &mut usize) -> Result<(f64, f64, f64)> {
        let coarse = self.gl15(a, b);
        let mid = 0.5 * (a + b);
        let left = self.gl15(a, mid);
        let right = self.gl15(mid, b);
        *budget = budget
            .checked_sub(coarse.nodes + left.nodes + right.nodes)
            .ok_or_else(|| Error::NonConvergence {
                op: "contour quadrature",
                message: "node budget exhausted".into(),
            })?;
        let fine_val = left.val + right.val;
        let fine_abs = left.abs + right.abs;
        let err = (coarse.val - fine_val).abs();
        if !fine_val.is_finite() {
            return Err(Error::NonConvergence {
                op: "contour quadrature",
                message: "integrand overflow on contour".into(),
            });
        }
        if err <= tol_abs || depth >= 24 {
            return Ok((fine_val, fine_abs, err));
        }
        let (v1, a1, e1) = self.panel(a, mid, 0.5 * tol_abs, depth + 1, budget)?;
        let (v2, a2, e2) = self.panel(mid, b, 0.5 * tol_abs, depth + 1, budget)?;
        Ok((v1 + v2, a1 + a2, e1 + e2))
    }
}

/// Evaluate `(1/2 pi i) int theta(s) z^s ds` on the vertical line `Re s = c`.
///
/// Returns `(value, error_estimate)`.
pub(crate) fn integrate_kernel(
    kernel: &GammaKernel,
    ln_z: f64,
    c: f64,
    policy: &ContourPolicy,
) -> Result<(f64, f64)> {
    let f = Integrand {
        kernel,
        c,
        ln_z,
        scale: 0.0,
    };
    // Log magnitude near the real axis sets the overall scale.
    let scale = f.log_mag(0.0).max(f.log_mag(0.5));
    if !scale.is_finite() && scale < 0.0 {
        // Integrand is identically negligible.
        return Ok((0.0, 0.0));
    }
    let f = Integrand {
        kernel,
        c,
        ln_z,
        scale,
    };

    // Oscillation wavelength along the contour is 2 pi / |ln z|.
    let h0 = (2.0_f64).min(3.0 / (1.0 + ln_z.abs()));
    let mut budget = policy.node_budget;
    let mut y = 0.0_f64;
    let mut h = h0;
    let mut total = 0.0_f64;
    let mut total_abs = 0.0_f64;
    let mut err = 0.0_f64;
    let mut quiet_panels = 0;
    // Hard ceiling on contour height: generous multiple of the initial T.
    let y_max = (8.0 * policy.half_length).max(400.0);
    while y < y_max {
        let tol_abs = policy.rel_tol * total_abs.max(1.0) * 0.05;
        let (v, a, e) = f.panel(y, y + h, tol_abs, 0, &mut budget)?;
        total += v;
        total_abs += a;
        err += e;
        y += h;
        if y > 0.25 * policy.half_length {
            h = (h * 1.5).min(8.0 * h0);
        }
        // Stop once both the panel mass and the pointwise tail are negligible.
        if a <= policy.rel_tol * total_abs.max(1e-300) * 0.01 {
            quiet_panels += 1;
            if quiet_panels >= 2 && y >= policy.half_length.min(20.0) {
                let tail_log = f.log_mag(y);
                let decay = kernel.decay_rate().max(0.05);
                let tail_bound = (tail_log.exp() / decay).min(f64::INFINITY);
                if tail_bound <= policy.rel_tol * total_abs.max(1e-300) {
                    err += tail_bound;
                    break;
                }
            }
        } else {
            quiet_panels = 0;
        }
    }
    if y >= y_max {
        return Err(Error::NonConvergence {
            op: "contour quadrature",
            message: format!("tail not negligible at height {y_max}"),
        });
    }

    // Round-off floor from cancellation: eps * integral of |f|.
    let cancel = f64::EPSILON * total_abs;
    let pre = scale.exp() / std::f64::consts::PI;
    Ok((pre * total, pre * (err + cancel)))
}

/// Pick the contour abscissa for a kernel given the policy.
///
/// Auto rule: midpoint of the admissible strip; when one side is unbounded
/// the contour sits half a unit inside the bounded edge.
pub(crate) fn pick_abscissa(kernel: &GammaKernel, policy: &ContourPolicy) -> Result<f64> {
    let (lo, hi) = strip_or_unbounded(kernel)?;
    match &policy.abscissa {
        Abscissa::Explicit(v) => {
            let c = *v.first().ok_or_else(|| {
                Error::ContourPlacement("explicit abscissa list is empty".into())
            })?;
            if c <= lo || c >= hi {
                return Err(Error::ContourPlacement(format!(
                    "explicit abscissa {c} outside admissible strip ({lo}, {hi})"
                )));
            }
            Ok(c)
        }
        Abscissa::Auto => Ok(auto_abscissa(lo, hi)),
    }
}

pub(crate) fn auto_abscissa(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (false, true) => hi - 0.5,
        (true, false) => lo + 0.5,
        (false, false) => 0.0,
    }
}

fn strip_or_unbounded(kernel: &GammaKernel) -> Result<(f64, f64)> {
    let lo = kernel.left_edge();
    let hi = kernel.right_edge();
    if lo >= hi {
        return Err(Error::ContourPlacement(format!(
            "pole families overlap: left edge {lo} >= right edge {hi}"
        )));
    }
    Ok((lo, hi))
}
