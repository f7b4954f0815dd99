//! Hand-evaluated anchors and invariants for the chain-coefficient and
//! instantaneous-SNDR layer.

use hrelay::fading_catalog::{to_h_params, FadingModel};
use hrelay::sndr_core::{
    ceiling_af, ceiling_df, derive_coefficients, max_equal_kappa, sndr_csi, sndr_df, sndr_fg,
    ChainConfig, ChainCoefficients, HopImpairment, Protocol,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn chain(kappas: &[f64], mean_snrs: &[f64], protocol: Protocol) -> ChainConfig {
    let hops = kappas
        .iter()
        .zip(mean_snrs)
        .map(|(&k, &g)| {
            (
                to_h_params(&FadingModel::rayleigh(), g).unwrap(),
                HopImpairment::aggregate(k).unwrap(),
            )
        })
        .collect();
    ChainConfig::new(hops, protocol).unwrap()
}

fn coeffs(kappas: &[f64], mean_snrs: &[f64]) -> ChainCoefficients {
    derive_coefficients(&chain(kappas, mean_snrs, Protocol::SemiBlindFgAf)).unwrap()
}

#[test]
fn ideal_two_hop_coefficients() {
    let c = coeffs(&[0.0, 0.0], &[10.0, 10.0]);
    assert_eq!(c.lambda, vec![1.0, 1.0, 1.0]);
    assert_eq!(c.d[0], 0.0);
    assert!((c.c_r[1] - 11.0).abs() < 1e-12, "C_R1 = {}", c.c_r[1]);
    assert_eq!(c.delta, 0.0);
}

#[test]
fn impaired_two_hop_coefficients() {
    let c = coeffs(&[0.3, 0.3], &[10.0, 10.0]);
    assert!((c.lambda[0] - 1.1881).abs() < 1e-12, "lambda1 {}", c.lambda[0]);
    assert!((c.lambda[1] - 1.09).abs() < 1e-12, "lambda2 {}", c.lambda[1]);
    assert!((c.d[0] - 0.1881).abs() < 1e-12, "d1 {}", c.d[0]);
    assert_eq!(c.lambda[2], 1.0);
    // C_{R_1} = (1 + 0.09) * 10 + 1 = 11.9 for the semi-blind gain.
    assert!((c.c_r[1] - 11.9).abs() < 1e-9, "C_R1 = {}", c.c_r[1]);
    // N = 2: the single pair coefficient is pinned to lambda_N = lambda_2.
    assert_eq!(c.lambda_pair.len(), 1);
    assert!((c.lambda_pair[0] - 1.09).abs() < 1e-12);
    assert_eq!(c.big_lambda.len(), 2);
    assert!((c.big_lambda[0] - 1.09).abs() < 1e-12);
    assert_eq!(c.big_lambda[1], 1.0);
    assert!((c.delta - 0.3).abs() < 1e-15);
}

#[test]
fn triple_hop_lambda1() {
    let c = coeffs(&[0.15, 0.15, 0.15], &[10.0, 10.0, 10.0]);
    let want = 1.0225_f64.powi(3);
    assert!((c.lambda[0] - want).abs() < 1e-12, "lambda1 {}", c.lambda[0]);
    assert!((want - 1.06903).abs() < 1e-4);
    // Lambda structure for N = 3: [lambda_{1,2}, lambda_3, 1].
    assert_eq!(c.big_lambda.len(), 3);
    let l2 = c.lambda[1];
    let want_pair = l2 + c.c_r[1] * (1.0 - l2);
    assert!((c.big_lambda[0] - want_pair).abs() < 1e-12);
    assert!((c.big_lambda[1] - c.lambda[2]).abs() < 1e-15);
    assert_eq!(c.big_lambda[2], 1.0);
}

#[test]
fn sndr_fg_hand_values() {
    // Ideal: 100 / (10 + 11) with C_R1 = 11.
    let c = coeffs(&[0.0, 0.0], &[10.0, 10.0]);
    let v = sndr_fg(&c, &[10.0, 10.0]);
    assert!((v - 100.0 / 21.0).abs() < 1e-12, "ideal {v}");
    assert!((v - 4.7619).abs() < 1e-4);

    // Impaired: 100 / (18.81 + 10.9 + 11.9) = 2.4033 with C_R1 = 11.9.
    let c = coeffs(&[0.3, 0.3], &[10.0, 10.0]);
    let v = sndr_fg(&c, &[10.0, 10.0]);
    assert!((v - 100.0 / 41.61).abs() < 1e-12, "impaired {v}");
    assert!((v - 2.4033).abs() < 1e-4);

    // Gamma -> infinity approaches the ceiling 1/d1.
    let v = sndr_fg(&c, &[1e13, 1e13]);
    assert!((v - 1.0 / c.d[0]).abs() < 1e-8 / c.d[0], "limit {v}");
}

#[test]
fn sndr_csi_hand_values() {
    let ideal = HopImpairment::ideal();
    assert!((sndr_csi(&[ideal], &[7.0]) - 7.0).abs() < 1e-12);
    let v = sndr_csi(&[ideal, ideal], &[10.0, 10.0]);
    assert!((v - 1.0 / (121.0 / 100.0 - 1.0)).abs() < 1e-12);
    // Two-hop ideal identity Gamma1 Gamma2 / (Gamma1 + Gamma2 + 1).
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let g1 = rng.gen::<f64>() * 100.0 + 0.01;
        let g2 = rng.gen::<f64>() * 100.0 + 0.01;
        let v = sndr_csi(&[ideal, ideal], &[g1, g2]);
        let want = g1 * g2 / (g1 + g2 + 1.0);
        assert!((v - want).abs() < 1e-9 * want.max(1.0));
    }
    // Impairment bound: below min_i 1/kappa_i^2.
    let imp = [
        HopImpairment::aggregate(0.2).unwrap(),
        HopImpairment::aggregate(0.4).unwrap(),
    ];
    let v = sndr_csi(&imp, &[1e9, 1e9]);
    assert!(v < 1.0 / 0.16);
}

#[test]
fn sndr_df_hand_values() {
    let ideal = [HopImpairment::ideal(); 3];
    assert!((sndr_df(&ideal, &[3.0, 8.0, 5.0]) - 3.0).abs() < 1e-12);

    let imp = [
        HopImpairment::aggregate(0.3).unwrap(),
        HopImpairment::aggregate(0.3).unwrap(),
    ];
    let v = sndr_df(&imp, &[10.0, 10.0]);
    assert!((v - 10.0 / 1.9).abs() < 1e-12, "df {v}");
    assert!((v - 5.263).abs() < 1e-3);

    // Huge SNRs approach 1/max kappa^2 within 1%.
    let v = sndr_df(&imp, &[1e6, 1e6]);
    let ceil = ceiling_df(&imp);
    assert!(v < ceil);
    assert!((ceil - v) / ceil < 0.01);
}

#[test]
fn ceilings_paper_anchors() {
    let k15 = [
        HopImpairment::aggregate(0.15).unwrap(),
        HopImpairment::aggregate(0.15).unwrap(),
        HopImpairment::aggregate(0.15).unwrap(),
    ];
    let k30 = [
        HopImpairment::aggregate(0.3).unwrap(),
        HopImpairment::aggregate(0.3).unwrap(),
        HopImpairment::aggregate(0.3).unwrap(),
    ];
    let af15 = ceiling_af(&k15);
    assert!((af15 - 14.486).abs() < 5e-3, "af15 {af15}");
    assert!((10.0 * af15.log10() - 11.61).abs() < 0.05);
    let af30 = ceiling_af(&k30);
    assert!((af30 - 3.3893).abs() < 5e-4, "af30 {af30}");
    assert!((10.0 * af30.log10() - 5.30).abs() < 0.05);
    let df15 = ceiling_df(&k15);
    assert!((df15 - 44.44).abs() < 5e-2, "df15 {df15}");
    assert!((10.0 * df15.log10() - 16.48).abs() < 0.05);
    let df30 = ceiling_df(&k30);
    assert!((df30 - 11.11).abs() < 5e-3, "df30 {df30}");
    assert!((10.0 * df30.log10() - 10.46).abs() < 0.05);

    // Ideal hardware: both ceilings are the distinguished infinity.
    let ideal = [HopImpairment::ideal(); 2];
    assert!(ceiling_af(&ideal).is_infinite());
    assert!(ceiling_df(&ideal).is_infinite());

    // Small equal kappa: DF ceiling ~ N x AF ceiling (within 5% at 0.1, N=3).
    let k01: Vec<HopImpairment> = (0..3)
        .map(|_| HopImpairment::aggregate(0.1).unwrap())
        .collect();
    let ratio = ceiling_df(&k01) / ceiling_af(&k01);
    assert!((ratio / 3.0 - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn max_equal_kappa_anchors() {
    let af = Protocol::SemiBlindFgAf;
    let v2 = max_equal_kappa(&af, 2, 15.0).unwrap();
    let v3 = max_equal_kappa(&af, 3, 15.0).unwrap();
    let v4 = max_equal_kappa(&af, 4, 15.0).unwrap();
    // Reference values are rounded to three decimals; gate at +-0.002.
    assert!((v2 - 0.181).abs() < 2e-3, "N=2 {v2}");
    assert!((v3 - 0.148).abs() < 2e-3, "N=3 {v3}");
    assert!((v4 - 0.128).abs() < 2e-3, "N=4 {v4}");
    let df = max_equal_kappa(&Protocol::Df, 3, 15.0).unwrap();
    assert!((df - 0.258).abs() < 2e-3, "DF {df}");
    assert!(max_equal_kappa(&af, 2, 0.0).is_err());
}

#[test]
fn fg_monotone_and_bounded() {
    // sndr_fg increases in each Gamma_i and stays below ceiling_af.
    let kappas = [0.2, 0.1, 0.25];
    let c = coeffs(&kappas, &[10.0, 20.0, 15.0]);
    let imp: Vec<HopImpairment> = kappas
        .iter()
        .map(|&k| HopImpairment::aggregate(k).unwrap())
        .collect();
    let ceil = ceiling_af(&imp);
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for _ in 0..10_000 {
        let g: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 1000.0 + 1e-3).collect();
        let v = sndr_fg(&c, &g);
        assert!(v < ceil, "value {v} above ceiling {ceil}");
        assert!(v < 1.0 / c.d[0]);
        for i in 0..3 {
            let mut gg = g.clone();
            gg[i] *= 1.01;
            assert!(sndr_fg(&c, &gg) > v, "not increasing in hop {i}");
        }
    }
}

#[test]
fn blind_constants_are_honored() {
    let cfg = chain(
        &[0.1, 0.1],
        &[10.0, 10.0],
        Protocol::BlindFgAf {
            constants: vec![7.5],
        },
    );
    let c = derive_coefficients(&cfg).unwrap();
    assert_eq!(c.c_r, vec![1.0, 7.5]);

    // Wrong constant count is rejected at construction.
    let hops = cfg.hops.clone();
    assert!(ChainConfig::new(
        hops,
        Protocol::BlindFgAf {
            constants: vec![7.5, 8.0]
        }
    )
    .is_err());
}

#[test]
fn gamma_prime_saturation() {
    let c = coeffs(&[0.3, 0.3], &[10.0, 10.0]);
    let d1 = c.d[0];
    assert!(c.gamma_prime(1.0 / d1).is_none());
    assert!(c.gamma_prime(1.0 / d1 + 1.0).is_none());
    let gp = c.gamma_prime(1.0).unwrap();
    assert!((gp - 1.0 / (1.0 - d1)).abs() < 1e-12);
    // Ideal chain never saturates.
    let c0 = coeffs(&[0.0, 0.0], &[10.0, 10.0]);
    assert_eq!(c0.gamma_prime(1e9), Some(1e9));
}
