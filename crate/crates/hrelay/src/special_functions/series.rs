//! Residue (power) series evaluation of H-function kernels.
//!
//! Closing the Mellin–Barnes contour to the right over the simple poles of
//! the numerator factors with negative slope gives
//! `H(z) = sum over poles s_{jk} of (-1)^k / (k! B_j) * theta_rest(s_{jk}) * z^{s_{jk}}`,
//! an ascending power series in `z`. This engine enumerates poles across all
//! families in increasing order, rejects coincident-pole configurations, and
//! bails out with a typed error when the series visibly diverges.

use crate::error::{Error, Result};
use crate::special_functions::gamma::ln_gamma_real;
use crate::special_functions::kernel::{GammaKernel, RightPoleFamily};

/// Minimum pole separation below which the configuration is treated as
/// coincident (higher-order poles), which this engine does not support.
pub(crate) const POLE_SEPARATION: f64 = 1e-9;

/// Evaluate the kernel's closing-right residue series at `ln z`.
///
/// Returns `(value, error_estimate)`.
pub(crate) fn kernel_series(
    kernel: &GammaKernel,
    ln_z: f64,
    max_terms: usize,
) -> Result<(f64, f64)> {
    let families = kernel.right_pole_families();
    if families.is_empty() {
        return Err(Error::SeriesDiverges(
            "kernel has no right pole families; nothing to sum".into(),
        ));
    }

    // Per-family enumeration state: next pole index k.
    let mut next_k = vec![0usize; families.len()];
    let mut sum = 0.0_f64;
    let mut abs_sum = 0.0_f64;
    let mut last_abs = f64::INFINITY;
    let mut quiet = 0usize;
    let mut grow = 0usize;
    let mut last_pole = f64::NEG_INFINITY;
    let mut terms_done = 0usize;

    while terms_done < max_terms {
        // Find the family with the smallest next pole.
        let (fam_idx, pole) = families
            .iter()
            .enumerate()
            .map(|(i, f)| (i, f.base + next_k[i] as f64 * f.step))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty families");
        let fam: &RightPoleFamily = &families[fam_idx];
        let k = next_k[fam_idx];
        next_k[fam_idx] += 1;

        if (pole - last_pole).abs() < POLE_SEPARATION {
            return Err(Error::CoincidentPoles(format!(
                "poles at s = {last_pole} and s = {pole} closer than {POLE_SEPARATION}"
            )));
        }
        last_pole = pole;

        let term = residue_term(kernel, fam, k, pole, ln_z)?;
        sum += term;
        abs_sum += term.abs();
        terms_done += 1;

        if term == 0.0 {
            // Denominator-killed residue (rational pole family): carries no
            // information about the tail, so it must not feed the quiet or
            // growth counters — only nonzero residues measure convergence.
            continue;
        }
        let mag = term.abs();
        // Divergence heuristic: sustained growth well past the scale of the sum.
        if terms_done > 30 {
            if mag > last_abs {
                grow += 1;
            } else {
                grow = 0;
            }
            if grow >= 12 && mag > sum.abs().max(1e-300) {
                return Err(Error::SeriesDiverges(format!(
                    "terms growing at pole index {terms_done}, |term| = {mag:.3e}"
                )));
            }
        }
        last_abs = mag;

        // Convergence: several consecutive terms at round-off level.
        if mag <= 1e-16 * sum.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 5 {
                let cancel = f64::EPSILON * abs_sum;
                return Ok((sum, mag + cancel));
            }
        } else {
            quiet = 0;
        }
    }

    // Budget exhausted: accept only if the tail is already tiny.
    if last_abs <= 1e-12 * sum.abs().max(1e-300) {
        let cancel = f64::EPSILON * abs_sum;
        return Ok((sum, last_abs * 10.0 + cancel));
    }
    Err(Error::NonConvergence {
        op: "residue series",
        message: format!(
            "no convergence after {max_terms} terms; last |term|/|sum| = {:.3e}",
            last_abs / sum.abs().max(1e-300)
        ),
    })
}

/// One residue term: `(-1)^k / (k! B) * theta_rest(pole) * z^pole`,
/// computed in log space with sign tracking.
fn residue_term(
    kernel: &GammaKernel,
    fam: &RightPoleFamily,
    k: usize,
    pole: f64,
    ln_z: f64,
) -> Result<f64> {
    // theta_rest: every factor except the generating one.
    let mut sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut ln_abs = -ln_gamma_real(k as f64 + 1.0)? + fam.step.ln() + pole * ln_z;
    for (i, f) in kernel.num.iter().enumerate() {
        if i == fam.factor_index {
            continue;
        }
        let x = f.c + f.d * pole;
        if x <= 0.0 && x == x.floor() {
            return Err(Error::CoincidentPoles(format!(
                "numerator factor hits a pole at s = {pole} while evaluating a residue"
            )));
        }
        let (sg, la) = crate::special_functions::gamma::ln_abs_gamma_signed(x)?;
        sign *= sg;
        ln_abs += la;
    }
    for f in &kernel.den {
        let x = f.c + f.d * pole;
        if x <= 0.0 && x == x.floor() {
            // Denominator pole means the kernel has a zero here: term vanishes.
            return Ok(0.0);
        }
        let (sg, la) = crate::special_functions::gamma::ln_abs_gamma_signed(x)?;
        sign *= sg;
        ln_abs -= la;
    }
    if ln_abs > 700.0 {
        return Err(Error::SeriesDiverges(format!(
            "residue term overflows at pole s = {pole}"
        )));
    }
    Ok(sign * ln_abs.exp())
}

/// Check that all enumerated right poles up to `count` terms are pairwise
/// separated; used by constructors that must reject coincident poles early.
pub(crate) fn check_pole_separation(kernel: &GammaKernel, count: usize) -> Result<()> {
    let families = kernel.right_pole_families();
    let mut poles: Vec<f64> = Vec::new();
    for f in &families {
        for k in 0..count {
            poles.push(f.base + k as f64 * f.step);
        }
    }
    poles.sort_by(f64::total_cmp);
    for w in poles.windows(2) {
        if (w[1] - w[0]).abs() < POLE_SEPARATION {
            return Err(Error::CoincidentPoles(format!(
                "poles at s = {} and s = {} closer than {POLE_SEPARATION}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}
