//! Chain-level derived coefficients and instantaneous end-to-end SNDR
//! functions for the three relaying protocols, plus hardware-impairment
//! ceilings and feasibility conditions.

use crate::error::{Error, Result};
use crate::fading_catalog::{mean_snr_analytic, HopDistribution};
use serde::{Deserialize, Serialize};

/// Aggregate transceiver distortion level of one hop.
///
/// The transmit and receive error-vector magnitudes combine quadratically:
/// `kappa^2 = kappa_t^2 + kappa_r^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopImpairment {
    /// Transmit-side distortion level (EVM), nonnegative.
    pub kappa_t: f64,
    /// Receive-side distortion level (EVM), nonnegative.
    pub kappa_r: f64,
}

impl HopImpairment {
    /// Build from separate transmit/receive levels.
    pub fn new(kappa_t: f64, kappa_r: f64) -> Result<Self> {
        if !(kappa_t >= 0.0) || !(kappa_r >= 0.0) {
            return Err(Error::invalid(
                "kappa",
                format!("distortion levels must be >= 0, got ({kappa_t}, {kappa_r})"),
            ));
        }
        Ok(HopImpairment { kappa_t, kappa_r })
    }

    /// Build from an aggregate level `kappa` (all on the transmit side;
    /// only `kappa^2` enters any formula).
    pub fn aggregate(kappa: f64) -> Result<Self> {
        Self::new(kappa, 0.0)
    }

    /// Ideal hardware.
    pub fn ideal() -> Self {
        HopImpairment {
            kappa_t: 0.0,
            kappa_r: 0.0,
        }
    }

    /// Aggregate level `kappa = sqrt(kappa_t^2 + kappa_r^2)`.
    pub fn kappa(&self) -> f64 {
        self.kappa_t.hypot(self.kappa_r)
    }

    /// Squared aggregate level.
    pub fn kappa_sq(&self) -> f64 {
        self.kappa_t * self.kappa_t + self.kappa_r * self.kappa_r
    }
}

/// Receiver detection mode, fixing the capacity pre-log constant `c`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    /// Coherent (heterodyne) detection: `c = 1`.
    #[default]
    Heterodyne,
    /// Direct (intensity) detection: `c = e / (2 pi)`.
    Direct,
}

impl Detection {
    /// The constant `c` entering every `log2(1 + c x)` capacity expression.
    pub fn capacity_constant(self) -> f64 {
        match self {
            Detection::Heterodyne => 1.0,
            Detection::Direct => std::f64::consts::E / std::f64::consts::TAU,
        }
    }
}

/// Relaying protocol selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    /// Fixed-gain AF with externally supplied amplification constants
    /// `C_{R_i}` for the `N - 1` relays.
    BlindFgAf {
        /// Relay constants `C_{R_1} .. C_{R_{N-1}}`, all positive.
        constants: Vec<f64>,
    },
    /// Fixed-gain AF with statistics-aware constants
    /// `C_{R_i} = (1 + kappa_i^2) E{Gamma_i} + 1`.
    SemiBlindFgAf,
    /// Variable-gain AF with full CSI at each relay.
    CsiAf,
    /// Decode-and-forward.
    Df,
}

/// A relay chain: ordered hops with their impairments, and the protocol.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    /// Per-hop SNR distribution and hardware impairment, source to destination.
    pub hops: Vec<(HopDistribution, HopImpairment)>,
    /// Relaying protocol.
    pub protocol: Protocol,
    /// Detection mode (sets the capacity constant `c`).
    pub detection: Detection,
}

impl ChainConfig {
    /// Validating constructor; detection defaults to heterodyne (`c = 1`).
    pub fn new(hops: Vec<(HopDistribution, HopImpairment)>, protocol: Protocol) -> Result<Self> {
        if hops.is_empty() {
            return Err(Error::invalid("hops", "need at least one hop"));
        }
        if let Protocol::BlindFgAf { constants } = &protocol {
            if constants.len() != hops.len() - 1 {
                return Err(Error::invalid(
                    "constants",
                    format!(
                        "blind protocol needs {} relay constants, got {}",
                        hops.len() - 1,
                        constants.len()
                    ),
                ));
            }
            if constants.iter().any(|c| !(*c > 0.0)) {
                return Err(Error::invalid("constants", "relay constants must be > 0"));
            }
        }
        Ok(ChainConfig {
            hops,
            protocol,
            detection: Detection::default(),
        })
    }

    /// Replace the detection mode.
    pub fn with_detection(mut self, detection: Detection) -> Self {
        self.detection = detection;
        self
    }

    /// Number of hops.
    pub fn n_hops(&self) -> usize {
        self.hops.len()
    }

    /// Squared impairment levels per hop.
    pub fn kappa_sqs(&self) -> Vec<f64> {
        self.hops.iter().map(|(_, i)| i.kappa_sq()).collect()
    }

    /// Impairments per hop.
    pub fn impairments(&self) -> Vec<HopImpairment> {
        self.hops.iter().map(|(_, i)| *i).collect()
    }
}

/// Derived chain coefficients for the fixed-gain AF SNDR form.
///
/// Index conventions (1-based in the defining formulas, stored 0-based):
/// `lambda[i-1]` holds `lambda_i` for `i = 1..N+1`; `c_r[i]` holds `C_{R_i}`
/// for `i = 0..N-1` with `C_{R_0} = 1`; `lambda_pair[i-1]` holds
/// `lambda_{i,i+1}` for `i = 1..N-1`; `big_lambda[i-1]` holds `Lambda_i` for
/// `i = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCoefficients {
    /// `lambda_i = prod_{j=i..N} (1 + kappa_j^2)`, plus `lambda_{N+1} = 1`.
    pub lambda: Vec<f64>,
    /// `d_i = lambda_i - 1` (same indexing as `lambda`).
    pub d: Vec<f64>,
    /// Relay constants `C_{R_0} = 1, C_{R_1}, ..., C_{R_{N-1}}`.
    pub c_r: Vec<f64>,
    /// Pair coefficients `lambda_{i,i+1}`; the last entry is pinned to
    /// `lambda_N` (the value used by every consumer of the pair list).
    pub lambda_pair: Vec<f64>,
    /// Term coefficients `Lambda_i`: `lambda_{i,i+1}` for `i <= N-2`,
    /// `lambda_{i+1}` for `i = N-1, N` (so `Lambda_N = 1`).
    pub big_lambda: Vec<f64>,
    /// Largest aggregate impairment level `max_i kappa_i`.
    pub delta: f64,
}

impl ChainCoefficients {
    /// `d_1`, the SNDR-ceiling denominator offset.
    pub fn d1(&self) -> f64 {
        self.d[0]
    }

    /// The conditioned threshold `gamma' = gamma / (1 - d_1 gamma)`.
    ///
    /// Returns `None` at or beyond the ceiling (`gamma >= 1/d_1` with
    /// `d_1 > 0`), where every outage-type probability saturates to 1.
    pub fn gamma_prime(&self, gamma: f64) -> Option<f64> {
        let d1 = self.d1();
        if d1 > 0.0 && gamma >= 1.0 / d1 {
            return None;
        }
        Some(gamma / (1.0 - d1 * gamma))
    }
}

/// Derive the fixed-gain chain coefficients for a configured chain.
pub fn derive_coefficients(chain: &ChainConfig) -> Result<ChainCoefficients> {
    let n = chain.n_hops();
    let k2 = chain.kappa_sqs();

    // lambda_i = prod_{j=i..N} (1 + kappa_j^2); lambda_{N+1} = 1.
    let mut lambda = vec![1.0_f64; n + 1];
    for i in (0..n).rev() {
        lambda[i] = lambda[i + 1] * (1.0 + k2[i]);
    }
    let d: Vec<f64> = lambda.iter().map(|l| l - 1.0).collect();

    // Relay constants C_{R_0} = 1 and C_{R_i} for the relays.
    let mut c_r = vec![1.0_f64; n];
    for i in 1..n {
        c_r[i] = match &chain.protocol {
            Protocol::BlindFgAf { constants } => constants[i - 1],
            _ => {
                // Statistics-aware constant of relay i (hop index i-1 0-based).
                let mean = mean_snr_analytic(&chain.hops[i - 1].0)?;
                (1.0 + k2[i - 1]) * mean + 1.0
            }
        };
    }

    // Pair coefficients lambda_{i,i+1} for i = 1..N-1. The last pair entry
    // is pinned to lambda_N: that is the value Lambda_{N-1} takes, keeping
    // the pair list directly consumable by the term expansion.
    let mut lambda_pair = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        if i <= n.saturating_sub(2) {
            let l_next = lambda[i]; // lambda_{i+1}
            lambda_pair.push(l_next + c_r[i] * (1.0 - l_next));
        } else {
            lambda_pair.push(lambda[i]); // = lambda_N
        }
    }

    // Lambda_i for i = 1..N.
    let mut big_lambda = Vec::with_capacity(n);
    for i in 1..=n {
        if i <= n.saturating_sub(1) {
            big_lambda.push(lambda_pair[i - 1]);
        } else {
            big_lambda.push(lambda[n]); // Lambda_N = lambda_{N+1} = 1
        }
    }

    let delta = chain
        .hops
        .iter()
        .map(|(_, imp)| imp.kappa())
        .fold(0.0_f64, f64::max);

    Ok(ChainCoefficients {
        lambda,
        d,
        c_r,
        lambda_pair,
        big_lambda,
        delta,
    })
}

/// Instantaneous end-to-end SNDR of the fixed-gain AF chain.
///
/// `gammas` are the instantaneous per-hop SNRs (all positive). The value is
/// always below `1/d_1` when `d_1 > 0`.
pub fn sndr_fg(coeffs: &ChainCoefficients, gammas: &[f64]) -> f64 {
    let n = gammas.len();
    let mut denom = coeffs.d[0];
    let mut prod = 1.0;
    for i in 1..=n {
        prod *= coeffs.c_r[i - 1] / gammas[i - 1];
        denom += coeffs.lambda[i] * prod;
    }
    1.0 / denom
}

/// Instantaneous end-to-end SNDR of the CSI-assisted (variable-gain) AF chain.
pub fn sndr_csi(impairments: &[HopImpairment], gammas: &[f64]) -> f64 {
    let mut ratio = 1.0;
    for (imp, g) in impairments.iter().zip(gammas) {
        let gp = (1.0 + imp.kappa_sq()) * g;
        ratio *= (1.0 + gp) / g;
    }
    // ratio = prod (1 + Gamma'_i) / prod Gamma_i
    1.0 / (ratio - 1.0)
}

/// Instantaneous end-to-end SNDR of the DF chain.
pub fn sndr_df(impairments: &[HopImpairment], gammas: &[f64]) -> f64 {
    impairments
        .iter()
        .zip(gammas)
        .map(|(imp, g)| g / (imp.kappa_sq() * g + 1.0))
        .fold(f64::INFINITY, f64::min)
}

/// High-SNR SNDR ceiling of the AF chain: `(prod (1+kappa_i^2) - 1)^{-1}`,
/// infinite for ideal hardware.
pub fn ceiling_af(impairments: &[HopImpairment]) -> f64 {
    let prod: f64 = impairments.iter().map(|i| 1.0 + i.kappa_sq()).product();
    if prod <= 1.0 {
        f64::INFINITY
    } else {
        1.0 / (prod - 1.0)
    }
}

/// High-SNR SNDR ceiling of the DF chain: `1 / max_i kappa_i^2`,
/// infinite for ideal hardware.
pub fn ceiling_df(impairments: &[HopImpairment]) -> f64 {
    let max_k2 = impairments
        .iter()
        .map(|i| i.kappa_sq())
        .fold(0.0_f64, f64::max);
    if max_k2 == 0.0 {
        f64::INFINITY
    } else {
        1.0 / max_k2
    }
}

/// Largest equal per-hop impairment level for which threshold `gamma_th`
/// remains reachable (necessary feasibility condition).
///
/// AF: `sqrt((1 + 1/gamma)^{1/N} - 1)`; DF: `sqrt(1/gamma)` (independent
/// of `N`).
pub fn max_equal_kappa(protocol: &Protocol, n_hops: usize, gamma_th: f64) -> Result<f64> {
    if !(gamma_th > 0.0) {
        return Err(Error::invalid(
            "gamma_th",
            format!("threshold must be > 0, got {gamma_th}"),
        ));
    }
    if n_hops == 0 {
        return Err(Error::invalid("n_hops", "need at least one hop"));
    }
    Ok(match protocol {
        Protocol::Df => (1.0 / gamma_th).sqrt(),
        _ => ((1.0 + 1.0 / gamma_th).powf(1.0 / n_hops as f64) - 1.0).sqrt(),
    })
}
