//! Gamma-factor kernels: the Mellin-space representation
//! `theta(s) = prod Gamma(c_i + d_i s) / prod Gamma(c'_j + d'_j s)`
//! underlying every H-function in the crate.
//!
//! A [`GammaKernel`] is the normalized internal form of an H-function
//! parameter set: each upper/lower parameter pair becomes one linear-argument
//! gamma factor in the numerator or denominator. Kernels compose under
//! multiplication (merging), which is how cascaded-hop CDF kernels are built.

use crate::error::{Error, Result};
use crate::special_functions::gamma::{ln_abs_gamma_signed, ln_gamma_complex_unchecked};
use num_complex::Complex64;

/// One factor `Gamma(c + d s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFactor {
    /// Constant offset.
    pub c: f64,
    /// Slope multiplying the Mellin variable (nonzero).
    pub d: f64,
}

impl GammaFactor {
    /// Argument of this factor at a complex point.
    #[inline]
    fn arg(&self, s: Complex64) -> Complex64 {
        Complex64::new(self.c + self.d * s.re, self.d * s.im)
    }
}

/// Ratio of products of gamma factors of a single complex variable.
#[derive(Debug, Clone, Default)]
pub struct GammaKernel {
    /// Numerator factors.
    pub num: Vec<GammaFactor>,
    /// Denominator factors.
    pub den: Vec<GammaFactor>,
}

/// One family of right poles contributed by a numerator factor with d < 0:
/// poles at `s = (c + k)/(-d)`, k = 0, 1, 2, ...
#[derive(Debug, Clone, Copy)]
pub struct RightPoleFamily {
    /// Index of the generating factor in `num`.
    pub factor_index: usize,
    /// First pole location `c / (-d)`.
    pub base: f64,
    /// Spacing between consecutive poles `1 / (-d)`.
    pub step: f64,
}

impl GammaKernel {
    /// Kernel with no factors (identically 1).
    pub fn one() -> Self {
        GammaKernel::default()
    }

    /// Push `Gamma(c + d s)` onto the numerator.
    pub fn with_num(mut self, c: f64, d: f64) -> Self {
        self.num.push(GammaFactor { c, d });
        self
    }

    /// Push `Gamma(c + d s)` onto the denominator.
    pub fn with_den(mut self, c: f64, d: f64) -> Self {
        self.den.push(GammaFactor { c, d });
        self
    }

    /// Product of two kernels.
    pub fn merged_with(&self, other: &GammaKernel) -> GammaKernel {
        let mut out = self.clone();
        out.num.extend_from_slice(&other.num);
        out.den.extend_from_slice(&other.den);
        out
    }

    /// Kernel of the corresponding CDF: multiply by `Gamma(s)/Gamma(1+s)`,
    /// i.e. divide the Mellin transform by `s` (integration of the density).
    pub fn cdf_kernel(&self) -> GammaKernel {
        self.clone().with_num(0.0, 1.0).with_den(1.0, 1.0)
    }

    /// Log of the kernel at complex `s` (no pole checks; poles map to inf).
    pub fn log_eval(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for f in &self.num {
            acc += ln_gamma_complex_unchecked(f.arg(s));
        }
        for f in &self.den {
            acc -= ln_gamma_complex_unchecked(f.arg(s));
        }
        acc
    }

    /// Signed value of the kernel at a real point, as `(sign, ln |theta|)`.
    /// Errors if any numerator factor sits exactly on a pole.
    pub fn log_eval_real_signed(&self, s: f64) -> Result<(f64, f64)> {
        let mut sign = 1.0;
        let mut ln_abs = 0.0;
        for f in &self.num {
            let (sg, la) = ln_abs_gamma_signed(f.c + f.d * s)?;
            sign *= sg;
            ln_abs += la;
        }
        for f in &self.den {
            let x = f.c + f.d * s;
            if x <= 0.0 && x == x.floor() {
                // A denominator pole is a zero of the kernel.
                return Ok((1.0, f64::NEG_INFINITY));
            }
            let (sg, la) = ln_abs_gamma_signed(x)?;
            sign *= sg;
            ln_abs -= la;
        }
        Ok((sign, ln_abs))
    }

    /// Value of the kernel at a real point (may be negative).
    pub fn eval_real(&self, s: f64) -> Result<f64> {
        let (sign, ln_abs) = self.log_eval_real_signed(s)?;
        Ok(sign * ln_abs.exp())
    }

    /// Right-pole families (from numerator factors with negative slope).
    pub fn right_pole_families(&self) -> Vec<RightPoleFamily> {
        self.num
            .iter()
            .enumerate()
            .filter(|(_, f)| f.d < 0.0)
            .map(|(i, f)| RightPoleFamily {
                factor_index: i,
                base: f.c / (-f.d),
                step: 1.0 / (-f.d),
            })
            .collect()
    }

    /// Infimum of the right pole set (smallest right pole), or +inf.
    pub fn right_edge(&self) -> f64 {
        self.right_pole_families()
            .iter()
            .map(|p| p.base)
            .fold(f64::INFINITY, f64::min)
    }

    /// Supremum of the left pole set (largest left pole), or -inf.
    /// Left poles come from numerator factors with positive slope:
    /// `s = -(c + k)/d`, k >= 0.
    pub fn left_edge(&self) -> f64 {
        self.num
            .iter()
            .filter(|f| f.d > 0.0)
            .map(|f| -f.c / f.d)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The open analyticity strip `(left_edge, right_edge)`.
    /// Errors when the pole families are not separable by a vertical line.
    pub fn strip(&self) -> Result<(f64, f64)> {
        let (lo, hi) = (self.left_edge(), self.right_edge());
        if lo < hi {
            Ok((lo, hi))
        } else {
            Err(Error::ContourPlacement(format!(
                "pole families overlap: left edge {lo} >= right edge {hi}"
            )))
        }
    }

    /// Exponential decay rate of `|theta(c + iy)| ~ exp(-rate * |y|)`:
    /// `rate = (pi/2) * (sum_num |d| - sum_den |d|)`.
    pub fn decay_rate(&self) -> f64 {
        let num: f64 = self.num.iter().map(|f| f.d.abs()).sum();
        let den: f64 = self.den.iter().map(|f| f.d.abs()).sum();
        std::f64::consts::FRAC_PI_2 * (num - den)
    }

    /// Algebraic growth exponent of `z` inside the closing-right series:
    /// `mu = sum_num d + sum_den (-d)` controls term ratios; used by the
    /// series engine's divergence diagnostics.
    pub fn slope_sum(&self) -> f64 {
        let num: f64 = self.num.iter().map(|f| f.d).sum();
        let den: f64 = self.den.iter().map(|f| f.d).sum();
        num - den
    }
}
