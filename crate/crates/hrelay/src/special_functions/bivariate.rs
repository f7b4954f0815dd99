//! Bivariate H-function evaluation on a truncated product contour.
//!
//! The object computed is
//! `(1/2 pi i)^2 * int int theta_out(s,t) theta_1(s) theta_2(t) z1^s z2^t ds dt`
//! where the outer block couples the two Mellin variables through factors
//! `Gamma(c + d1 s + d2 t)` and each inner block is an ordinary univariate
//! kernel. The double integral is evaluated by a uniform trapezoid rule on
//! the ridge-adapted parameterization `t = ct + i*yt`, `s = cs + i*(yt+yv)`
//! (the integrand of interest decays in `|yt|` and in the offset `|yv|`,
//! not in `|ys|` and `|yt|` separately). Gamma-factor values along the grid
//! are precomputed on one-dimensional lattices whenever the factor's
//! argument moves on a lattice, which makes the inner loop table-driven.

use crate::error::{Error, Result};
use crate::special_functions::contour::{Abscissa, ContourPolicy};
use crate::special_functions::foxh::HParams;
use crate::special_functions::gamma::ln_gamma_complex_unchecked;
use crate::special_functions::kernel::GammaKernel;
use num_complex::Complex64;

/// One joint factor `Gamma(c + d1 s + d2 t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivFactor {
    /// Constant offset.
    pub c: f64,
    /// Slope in the first Mellin variable.
    pub d1: f64,
    /// Slope in the second Mellin variable.
    pub d2: f64,
}

/// The outer (joint) coefficient block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BivBlock {
    /// Numerator joint factors.
    pub num: Vec<BivFactor>,
    /// Denominator joint factors.
    pub den: Vec<BivFactor>,
}

/// Parameters of the bivariate H-function: an outer joint block coupling
/// the two Mellin variables plus one univariate inner block per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateHParams {
    /// Joint factors involving both variables.
    pub outer: BivBlock,
    /// Inner block of the first variable.
    pub inner1: HParams,
    /// Inner block of the second variable.
    pub inner2: HParams,
}

impl BivariateHParams {
    /// Validating constructor: each inner block must be a valid univariate
    /// parameter set, and a separating product contour must exist for the
    /// joint configuration.
    pub fn new(outer: BivBlock, inner1: HParams, inner2: HParams) -> Result<Self> {
        let params = BivariateHParams {
            outer,
            inner1,
            inner2,
        };
        params.feasible_abscissae()?;
        Ok(params)
    }

    /// Find contour offsets `(cs, ct)` maximizing the minimum margin over
    /// all pole constraints; errors when no feasible point exists.
    pub(crate) fn feasible_abscissae(&self) -> Result<(f64, f64)> {
        let k1 = self.inner1.kernel();
        let k2 = self.inner2.kernel();
        let (lo1, hi1) = edges(&k1);
        let (lo2, hi2) = edges(&k2);
        // Bounded search box (clamp unbounded strip sides).
        let box1 = clamp_box(lo1, hi1);
        let box2 = clamp_box(lo2, hi2);
        // Natural per-variable abscissae; margin gains beyond a modest value
        // buy nothing, so prefer staying near these (large offsets inflate
        // gamma magnitudes and required truncation heights).
        let cs0 = crate::special_functions::contour::auto_abscissa(lo1, hi1);
        let ct0 = crate::special_functions::contour::auto_abscissa(lo2, hi2);
        let score = |cs: f64, ct: f64, m: f64| -> f64 {
            m.min(0.75) - 0.05 * ((cs - cs0).abs() + (ct - ct0).abs())
        };
        let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
        let steps = 60;
        let consider = |cs: f64, ct: f64, best: &mut (f64, f64, f64, f64)| {
            let m = self.margin(cs, ct, lo1, hi1, lo2, hi2);
            let sc = score(cs, ct, m);
            if m > 0.0 && sc > best.0 {
                *best = (sc, m, cs, ct);
            } else if best.1 <= 0.0 && m > best.1 {
                best.1 = m;
            }
        };
        consider(cs0, ct0, &mut best);
        for i in 0..=steps {
            let cs = box1.0 + (box1.1 - box1.0) * i as f64 / steps as f64;
            for j in 0..=steps {
                let ct = box2.0 + (box2.1 - box2.0) * j as f64 / steps as f64;
                consider(cs, ct, &mut best);
            }
        }
        if best.0 == f64::NEG_INFINITY {
            return Err(Error::ContourPlacement(format!(
                "no product contour separates the joint pole families \
                 (best margin {:.3e})",
                best.1
            )));
        }
        Ok((best.2, best.3))
    }

    /// Minimum distance from the candidate contour to any pole constraint.
    fn margin(&self, cs: f64, ct: f64, lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> f64 {
        let mut m = f64::INFINITY;
        m = m.min(cs - lo1).min(hi1 - cs);
        m = m.min(ct - lo2).min(hi2 - ct);
        for f in &self.outer.num {
            m = m.min(f.c + f.d1 * cs + f.d2 * ct);
        }
        m
    }

    fn validate_explicit(&self, cs: f64, ct: f64) -> Result<()> {
        let (lo1, hi1) = edges(&self.inner1.kernel());
        let (lo2, hi2) = edges(&self.inner2.kernel());
        let m = self.margin(cs, ct, lo1, hi1, lo2, hi2);
        if m <= 0.0 {
            return Err(Error::ContourPlacement(format!(
                "explicit abscissae ({cs}, {ct}) violate a pole constraint \
                 (margin {m:.3e})"
            )));
        }
        Ok(())
    }
}

fn edges(k: &GammaKernel) -> (f64, f64) {
    (k.left_edge(), k.right_edge())
}

fn clamp_box(lo: f64, hi: f64) -> (f64, f64) {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (false, true) => (hi - 6.0, hi),
        (true, false) => (lo, lo + 6.0),
        (false, false) => (-3.0, 3.0),
    }
}

/// Precomputed log-gamma values of one factor along an integer lattice.
struct FactorTable {
    /// Values indexed by `idx - min_idx`.
    values: Vec<Complex64>,
    min_idx: i64,
    /// Lattice coefficients: idx = cj * j + ck * k.
    cj: i64,
    ck: i64,
    /// +1 numerator, -1 denominator.
    sign: f64,
}

/// Evaluate the bivariate H-function. Returns `(value, error_estimate)`.
pub fn fox_h_bivariate_with_error(
    params: &BivariateHParams,
    z1: f64,
    z2: f64,
    policy: &ContourPolicy,
) -> Result<(f64, f64)> {
    if !(z1 > 0.0) || !(z2 > 0.0) {
        return Err(Error::invalid(
            "z",
            format!("fox_h_bivariate needs z1, z2 > 0, got ({z1}, {z2})"),
        ));
    }
    let (cs, ct) = match &policy.abscissa {
        Abscissa::Auto => params.feasible_abscissae()?,
        Abscissa::Explicit(v) => {
            if v.len() != 2 {
                return Err(Error::ContourPlacement(format!(
                    "bivariate contour needs 2 explicit offsets, got {}",
                    v.len()
                )));
            }
            params.validate_explicit(v[0], v[1])?;
            (v[0], v[1])
        }
    };
    let k1 = params.inner1.kernel();
    let k2 = params.inner2.kernel();
    let ln_z1 = z1.ln();
    let ln_z2 = z2.ln();

    // Grid step: trapezoid rule on an analytic strip converges like
    // exp(-2 pi d / h); d is conservatively the contour margin capped at 0.5.
    let ln_tol = policy.rel_tol.ln();
    let mut h = (0.022_f64).min(-2.0 * std::f64::consts::PI * 0.04 / ln_tol);
    h = h.min(0.5 / (1.0 + ln_z1.abs().max(ln_z2.abs())));

    // Log-magnitude of the full exponent at (yt, yv), relative to nothing.
    let log_mag = |yt: f64, yv: f64| -> f64 {
        let t = Complex64::new(ct, yt);
        let s = Complex64::new(cs, yt + yv);
        let mut e = k1.log_eval(s) + k2.log_eval(t) + s * ln_z1 + t * ln_z2;
        for f in &params.outer.num {
            e += ln_gamma_complex_unchecked(Complex64::new(
                f.c + f.d1 * cs + f.d2 * ct,
                f.d1 * s.im + f.d2 * t.im,
            ));
        }
        for f in &params.outer.den {
            e -= ln_gamma_complex_unchecked(Complex64::new(
                f.c + f.d1 * cs + f.d2 * ct,
                f.d1 * s.im + f.d2 * t.im,
            ));
        }
        e.re
    };
    let peak = log_mag(0.0, 0.0).max(log_mag(0.5, 0.0)).max(log_mag(0.0, 0.5));
    let cutoff = peak + ln_tol - 7.0;
    let t_extent = scan_extent(|y| log_mag(y, 0.0), cutoff, policy.half_length)?;
    let v_extent = scan_extent(|y| log_mag(0.0, y), cutoff, policy.half_length * 2.0)?;

    let nt = (t_extent / h).ceil() as i64;
    let nv = (v_extent / h).ceil() as i64;
    let nodes = ((nt + 1) * (2 * nv + 1)) as usize;
    if nodes > policy.node_budget {
        return Err(Error::NonConvergence {
            op: "fox_h_bivariate",
            message: format!(
                "grid of {nodes} nodes exceeds budget {}",
                policy.node_budget
            ),
        });
    }

    // --- Factor tables on integer lattices ---
    // Inner block 1 at s = cs + i h u, u = j + k  (u in [-nv, nt + nv]);
    // fold in the phase i h u ln z1.
    let t1: Vec<Complex64> = (-nv..=nt + nv)
        .map(|u| {
            let s = Complex64::new(cs, h * u as f64);
            k1.log_eval(s) + Complex64::new(0.0, h * u as f64 * ln_z1)
        })
        .collect();
    // Inner block 2 at t = ct + i h j (j in [0, nt]); fold in phase.
    let t2: Vec<Complex64> = (0..=nt)
        .map(|j| {
            let t = Complex64::new(ct, h * j as f64);
            k2.log_eval(t) + Complex64::new(0.0, h * j as f64 * ln_z2)
        })
        .collect();
    // Outer factors: argument imag part is h * (d1 (j + k) + d2 j)
    //   = h * ((d1 + d2) j + d1 k): a lattice when d1, d2 are integers.
    let mut tables: Vec<FactorTable> = Vec::new();
    let mut direct: Vec<(BivFactor, f64)> = Vec::new(); // (factor, sign)
    for (f, sign) in params
        .outer
        .num
        .iter()
        .map(|f| (*f, 1.0))
        .chain(params.outer.den.iter().map(|f| (*f, -1.0)))
    {
        let cj = f.d1 + f.d2;
        let ck = f.d1;
        if is_int(cj) && is_int(ck) {
            let (cj, ck) = (cj.round() as i64, ck.round() as i64);
            let re = f.c + f.d1 * cs + f.d2 * ct;
            let idx_min = (cj * 0).min(cj * nt) + (ck * -nv).min(ck * nv);
            let idx_max = (cj * 0).max(cj * nt) + (ck * -nv).max(ck * nv);
            let values: Vec<Complex64> = (idx_min..=idx_max)
                .map(|u| ln_gamma_complex_unchecked(Complex64::new(re, h * u as f64)))
                .collect();
            tables.push(FactorTable {
                values,
                min_idx: idx_min,
                cj,
                ck,
                sign,
            });
        } else {
            direct.push((f, sign));
        }
    }

    // --- Main double sum (trapezoid = plain sum given decayed tails) ---
    // Conjugate symmetry in (j, k) -> (-j, -k): sum rows j >= 1 twice (real
    // part), row j = 0 once; its imaginary part is the residual diagnostic.
    let mut total = 0.0_f64;
    let mut total_abs = 0.0_f64;
    let mut imag_residual = 0.0_f64;
    for j in 0..=nt {
        let row_weight = if j == 0 { 1.0 } else { 2.0 };
        let base = t2[j as usize];
        let mut row = Complex64::new(0.0, 0.0);
        let mut row_abs = 0.0_f64;
        for k in -nv..=nv {
            let mut e = base + t1[(j + k + nv) as usize];
            for tab in &tables {
                let idx = tab.cj * j + tab.ck * k - tab.min_idx;
                e += tab.sign * tab.values[idx as usize];
            }
            for (f, sign) in &direct {
                let re = f.c + f.d1 * cs + f.d2 * ct;
                let im = h * (f.d1 * (j + k) as f64 + f.d2 * j as f64);
                e += *sign * ln_gamma_complex_unchecked(Complex64::new(re, im));
            }
            let val = (e - Complex64::new(peak, 0.0)).exp();
            row += val;
            row_abs += val.norm();
        }
        total += row_weight * row.re;
        total_abs += row_weight * row_abs;
        if j == 0 {
            imag_residual = row.im.abs();
        }
    }

    // Prefactor: h^2/(2 pi)^2 * z1^cs * z2^ct * e^peak (ds dt = i dys i dyt).
    let ln_pre = cs * ln_z1 + ct * ln_z2 + peak;
    let pre = h * h / (4.0 * std::f64::consts::PI * std::f64::consts::PI) * ln_pre.exp();
    let value = pre * total;
    // Error: discretization (conservative trapezoid bound) + truncation +
    // cancellation + imaginary residual.
    let disc = (-2.0 * std::f64::consts::PI * 0.04 / h).exp() * pre * total_abs;
    let cancel = f64::EPSILON * pre * total_abs;
    let err = disc + cancel + pre * imag_residual;
    Ok((value, err))
}

/// Evaluate the bivariate H-function, returning the value only.
pub fn fox_h_bivariate(
    params: &BivariateHParams,
    z1: f64,
    z2: f64,
    policy: &ContourPolicy,
) -> Result<f64> {
    Ok(fox_h_bivariate_with_error(params, z1, z2, policy)?.0)
}

fn is_int(x: f64) -> bool {
    (x - x.round()).abs() < 1e-12 && x.abs() < 1e6
}

/// Smallest height at which the log-magnitude stays below `cutoff`,
/// found by doubling and refined by bisection.
fn scan_extent(log_mag: impl Fn(f64) -> f64, cutoff: f64, cap: f64) -> Result<f64> {
    let mut y = 2.0_f64;
    while log_mag(y) > cutoff || log_mag(y * 0.7) > cutoff {
        y *= 1.6;
        if y > cap.max(400.0) {
            return Err(Error::NonConvergence {
                op: "fox_h_bivariate",
                message: format!("integrand tail not negligible at height {y:.1}"),
            });
        }
    }
    Ok(y * 1.15)
}
