//! Simulation checks: reproducibility, sampler fidelity, and agreement
//! between empirical estimates and the closed-form metric engines.

use hrelay::fading_catalog::{
    mean_snr_analytic, sample, to_h_params, FadingModel, HopDistribution,
};
use hrelay::metrics_af::{
    bep_af_id, cdf_af_dual_exact, cdf_af_nhop, CdfMode, ModulationSpec,
};
use hrelay::metrics_df::bep_df_id;
use hrelay::monte_carlo::{
    simulate, sndr_samples, sndr_ratio_form, BepMode, BepSpec, SimPlan,
};
use hrelay::sndr_core::{
    ceiling_af, ceiling_df, derive_coefficients, sndr_fg, ChainConfig, HopImpairment, Protocol,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn nak(m: f64, mean: f64) -> HopDistribution {
    to_h_params(&FadingModel::nakagami(m), mean).unwrap()
}

fn fisher_pe(mean: f64) -> HopDistribution {
    let model = FadingModel::FisherPe {
        a: 2.3378,
        b: 4.5323,
        xi2: 6.7 * 6.7,
        r: 2,
    };
    to_h_params(&model, mean).unwrap()
}

fn malaga_pe(mean: f64) -> HopDistribution {
    let model = FadingModel::MalagaPe {
        alpha: 2.296,
        beta: 2,
        rho: 0.596,
        b0: 0.1079,
        omega: 1.3265,
        phi: -0.6 - std::f64::consts::FRAC_PI_2,
        xi2: 1.22 * 1.22,
        r: 2,
    };
    to_h_params(&model, mean).unwrap()
}

fn chain(hops: Vec<HopDistribution>, kappa: f64, protocol: Protocol) -> ChainConfig {
    let hops = hops
        .into_iter()
        .map(|h| (h, HopImpairment::aggregate(kappa).unwrap()))
        .collect();
    ChainConfig::new(hops, protocol).unwrap()
}

#[test]
fn identical_plans_are_bitwise_reproducible() {
    let c = chain(vec![nak(2.0, 100.0), nak(2.0, 100.0)], 0.15, Protocol::SemiBlindFgAf);
    let plan = SimPlan::new(c, 0xA11CE)
        .with_trials(20_000)
        .with_workers(3)
        .with_op_thresholds(vec![2.0, 4.0])
        .with_ec();
    let a = simulate(&plan).unwrap();
    let b = simulate(&plan).unwrap();
    for ((ta, ea), (tb, eb)) in a.op.iter().zip(&b.op) {
        assert_eq!(ta, tb);
        assert_eq!(ea.value.to_bits(), eb.value.to_bits());
        assert_eq!(ea.std_error.to_bits(), eb.std_error.to_bits());
    }
    let (eca, ecb) = (a.ec.unwrap(), b.ec.unwrap());
    assert_eq!(eca.value.to_bits(), ecb.value.to_bits());

    // A different worker count repartitions substreams: statistically
    // equivalent, and still internally reproducible.
    let plan5 = plan.clone().with_workers(5);
    let c5 = simulate(&plan5).unwrap();
    let d5 = simulate(&plan5).unwrap();
    assert_eq!(c5.op[0].1.value.to_bits(), d5.op[0].1.value.to_bits());
    let (p3, p5) = (a.op[0].1, c5.op[0].1);
    let gap = (p3.value - p5.value).abs();
    let se = (p3.std_error.powi(2) + p5.std_error.powi(2)).sqrt();
    assert!(gap <= 5.0 * se, "partitions disagree: {} vs {}", p3.value, p5.value);
}

#[test]
fn dual_hop_fg_af_outage_matches_exact_cdf() {
    // Nakagami-2 over both hops, 20 dB, kappa = 0.15, threshold 4.
    let c = chain(vec![nak(2.0, 100.0), nak(2.0, 100.0)], 0.15, Protocol::SemiBlindFgAf);
    let reference = cdf_af_dual_exact(&c, 4.0).unwrap();
    let plan = SimPlan::new(c, 7)
        .with_trials(1_000_000)
        .with_op_thresholds(vec![4.0]);
    let report = simulate(&plan).unwrap();
    let est = report.op[0].1;
    let gap = (est.value - reference).abs();
    eprintln!(
        "dual-hop OP: mc {:.6e} (se {:.2e}) vs exact {:.6e} (gap/se {:.2})",
        est.value,
        est.std_error,
        reference,
        gap / est.std_error
    );
    assert!(gap <= 3.0 * est.std_error, "gap {gap:.3e} > 3 se {:.3e}", est.std_error);
}

#[test]
fn sampled_snr_means_match_analytic_means() {
    let hops = [
        ("nakagami", nak(2.0, 100.0)),
        ("fisher-pe", fisher_pe(50.0)),
        ("malaga-pe", malaga_pe(200.0)),
        (
            "alpha-mu-pe",
            to_h_params(
                &FadingModel::AlphaMuPe { alpha: 1.4, mu: 1.5, xi2: 2.34 * 2.34, r: 2 },
                80.0,
            )
            .unwrap(),
        ),
    ];
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    for (label, hop) in &hops {
        let analytic = mean_snr_analytic(hop).unwrap();
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample(hop, &mut rng);
        }
        let empirical = acc / n as f64;
        let rel = (empirical - analytic).abs() / analytic;
        eprintln!("{label}: empirical {empirical:.4} vs analytic {analytic:.4} (rel {rel:.4})");
        assert!(rel < 0.01, "{label}: sampled mean off by {rel:.3}");
    }
}

#[test]
fn empirical_sndr_cdf_matches_closed_form() {
    // Three-hop chain at 30 dB where the product-threshold route is
    // accurate; the empirical CDF of raw SNDR draws must track it.
    let c = chain(
        vec![nak(2.0, 1e3), nak(2.0, 1e3), nak(2.0, 1e3)],
        0.15,
        Protocol::SemiBlindFgAf,
    );
    let plan = SimPlan::new(c.clone(), 11);
    let mut draws = sndr_samples(&plan, 100_000).unwrap();
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let mut sup = 0.0_f64;
    for k in 1..50 {
        let q = k as f64 / 50.0;
        let gamma = draws[((q * n) as usize).min(draws.len() - 1)];
        let closed = cdf_af_nhop(&c, gamma, CdfMode::Approx).unwrap();
        let empirical = draws.partition_point(|&x| x <= gamma) as f64 / n;
        sup = sup.max((closed - empirical).abs());
    }
    eprintln!("sup |F_mc - F| = {sup:.4}");
    assert!(sup < 0.01, "distribution distance {sup:.4} >= 0.01");
}

#[test]
fn all_draws_respect_protocol_ceilings() {
    let af = chain(vec![nak(2.0, 1e3), nak(1.0, 1e3)], 0.25, Protocol::SemiBlindFgAf);
    let af_ceiling = ceiling_af(&af.impairments());
    let plan = SimPlan::new(af, 3);
    for draw in sndr_samples(&plan, 10_000).unwrap() {
        assert!(draw < af_ceiling, "AF draw {draw} at or above ceiling {af_ceiling}");
    }

    let df = chain(vec![nak(2.0, 1e3), nak(1.0, 1e3)], 0.25, Protocol::Df);
    let df_ceiling = ceiling_df(&df.impairments());
    let plan = SimPlan::new(df, 3);
    for draw in sndr_samples(&plan, 10_000).unwrap() {
        assert!(draw < df_ceiling, "DF draw {draw} at or above ceiling {df_ceiling}");
    }
}

#[test]
fn threshold_above_ceiling_gives_certain_outage() {
    // kappa = 0.5 on both hops: ceiling = 1/(1.25^2 - 1) = 1.78 < 4.
    let c = chain(vec![nak(2.0, 1e4), nak(2.0, 1e4)], 0.5, Protocol::SemiBlindFgAf);
    assert!(ceiling_af(&c.impairments()) < 4.0);
    let plan = SimPlan::new(c, 5).with_trials(10_000).with_op_thresholds(vec![4.0]);
    let report = simulate(&plan).unwrap();
    assert_eq!(report.op[0].1.value, 1.0);
    assert_eq!(report.op[0].1.std_error, 0.0);
}

#[test]
fn cascade_expansion_equals_production_sndr_form() {
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for n in 2..=5 {
        for _ in 0..200 {
            let hops: Vec<_> = (0..n)
                .map(|_| {
                    let mean = 10.0_f64.powf(rng.gen_range(0.5..4.0));
                    let kappa = rng.gen_range(0.0..0.35);
                    (nak(2.0, mean), HopImpairment::aggregate(kappa).unwrap())
                })
                .collect();
            let protocol = if rng.gen_bool(0.5) {
                Protocol::SemiBlindFgAf
            } else {
                Protocol::BlindFgAf {
                    constants: (1..n).map(|_| rng.gen_range(1.0..200.0)).collect(),
                }
            };
            let chain = ChainConfig::new(hops, protocol).unwrap();
            let coeffs = derive_coefficients(&chain).unwrap();
            let imps = chain.impairments();
            let gammas: Vec<f64> =
                (0..n).map(|_| 10.0_f64.powf(rng.gen_range(-2.0..4.0))).collect();
            let fast = sndr_fg(&coeffs, &gammas);
            let expanded = sndr_ratio_form(&imps, &coeffs.c_r, &gammas);
            let rel = (fast - expanded).abs() / fast.abs().max(1e-300);
            assert!(
                rel <= 1e-12,
                "forms disagree (n = {n}): {fast:e} vs {expanded:e}, rel {rel:e}"
            );
        }
    }
}

#[test]
fn three_sigma_interval_covers_known_outage() {
    // 100 independent seeds; the 3-SE interval around each estimate must
    // cover the exact value at least 95 times.
    let c = chain(vec![nak(2.0, 100.0), nak(2.0, 100.0)], 0.0, Protocol::SemiBlindFgAf);
    let reference = cdf_af_dual_exact(&c, 2.0).unwrap();
    let mut covered = 0;
    for seed in 0..100 {
        let plan = SimPlan::new(c.clone(), seed)
            .with_trials(10_000)
            .with_workers(2)
            .with_op_thresholds(vec![2.0]);
        let est = simulate(&plan).unwrap().op[0].1;
        if (est.value - reference).abs() <= 3.0 * est.std_error.max(1e-12) {
            covered += 1;
        }
    }
    eprintln!("coverage: {covered}/100 (reference outage {reference:.4e})");
    assert!(covered >= 95, "3-SE coverage {covered}/100 below 95");
}

#[test]
fn semi_analytic_bep_matches_af_closed_form() {
    let c = chain(vec![nak(2.0, 31.62), nak(2.0, 31.62)], 0.0, Protocol::SemiBlindFgAf);
    let closed = bep_af_id(&c, &ModulationSpec::ook()).unwrap();
    let plan = SimPlan::new(c, 21).with_trials(1_000_000).with_bep(BepSpec {
        modulation: ModulationSpec::ook(),
        mode: BepMode::SemiAnalytic,
    });
    let est = simulate(&plan).unwrap().bep.unwrap();
    let gap = (est.value - closed).abs();
    eprintln!(
        "AF BEP: mc {:.6e} (se {:.2e}) vs closed {:.6e} (gap/se {:.2})",
        est.value,
        est.std_error,
        closed,
        gap / est.std_error
    );
    assert!(gap <= 3.0 * est.std_error, "gap {gap:.3e} > 3 se {:.3e}", est.std_error);
}

#[test]
fn semi_analytic_bep_tracks_df_closed_form_to_first_order() {
    // The decode-forward closed form keeps the per-hop sum; the simulated
    // parity combining subtracts the O(p_i p_j) cross terms, so agreement
    // is to first order in the hop error rates.
    let c = chain(vec![nak(2.0, 100.0), nak(2.0, 100.0)], 0.0, Protocol::Df);
    let closed = bep_df_id(&c, &ModulationSpec::ook()).unwrap();
    let plan = SimPlan::new(c, 23).with_trials(500_000).with_bep(BepSpec {
        modulation: ModulationSpec::ook(),
        mode: BepMode::SemiAnalytic,
    });
    let est = simulate(&plan).unwrap().bep.unwrap();
    let slack = 3.0 * est.std_error + 2.0 * closed * closed;
    let gap = (est.value - closed).abs();
    eprintln!("DF BEP: mc {:.6e} vs closed {:.6e} (slack {slack:.2e})", est.value, closed);
    assert!(gap <= slack.max(0.01 * closed), "gap {gap:.3e} > slack {slack:.3e}");
}

#[test]
fn symbol_simulation_agrees_with_conditional_averaging() {
    // Impaired chain (no closed form applies): the physical on-off keyed
    // cascade and the conditional-expectation route must estimate the same
    // quantity.
    let c = chain(vec![nak(2.0, 31.62), nak(2.0, 31.62)], 0.15, Protocol::SemiBlindFgAf);
    let base = SimPlan::new(c, 31).with_trials(1_000_000);
    let physical = simulate(&base.clone().with_bep(BepSpec {
        modulation: ModulationSpec::ook(),
        mode: BepMode::OokThreshold,
    }))
    .unwrap()
    .bep
    .unwrap();
    let averaged = simulate(&base.with_bep(BepSpec {
        modulation: ModulationSpec::ook(),
        mode: BepMode::SemiAnalytic,
    }))
    .unwrap()
    .bep
    .unwrap();
    let gap = (physical.value - averaged.value).abs();
    let se = (physical.std_error.powi(2) + averaged.std_error.powi(2)).sqrt();
    eprintln!(
        "physical {:.5e} vs averaged {:.5e} (gap/se {:.2})",
        physical.value,
        averaged.value,
        gap / se
    );
    assert!(gap <= 4.0 * se, "estimators disagree: gap {gap:.3e} > 4 se {se:.3e}");

    // Same cross-check over decode-forward, where detection is per hop.
    let c = chain(vec![nak(2.0, 31.62), nak(2.0, 31.62)], 0.15, Protocol::Df);
    let base = SimPlan::new(c, 37).with_trials(1_000_000);
    let physical = simulate(&base.clone().with_bep(BepSpec {
        modulation: ModulationSpec::ook(),
        mode: BepMode::OokThreshold,
    }))
    .unwrap()
    .bep
    .unwrap();
    let averaged = simulate(&base.with_bep(BepSpec {
        modulation: ModulationSpec::ook(),
        mode: BepMode::SemiAnalytic,
    }))
    .unwrap()
    .bep
    .unwrap();
    let gap = (physical.value - averaged.value).abs();
    let se = (physical.std_error.powi(2) + averaged.std_error.powi(2)).sqrt();
    eprintln!(
        "df physical {:.5e} vs averaged {:.5e} (gap/se {:.2})",
        physical.value,
        averaged.value,
        gap / se
    );
    assert!(gap <= 4.0 * se, "estimators disagree: gap {gap:.3e} > 4 se {se:.3e}");
}

#[test]
fn plan_validation_rejects_bad_requests() {
    let c = chain(vec![nak(2.0, 100.0), nak(2.0, 100.0)], 0.1, Protocol::SemiBlindFgAf);
    // Too few trials for confidence intervals.
    let plan = SimPlan::new(c.clone(), 1).with_trials(100).with_op_thresholds(vec![1.0]);
    assert!(simulate(&plan).is_err());
    // No metrics.
    let plan = SimPlan::new(c.clone(), 1);
    assert!(simulate(&plan).is_err());
    // Zero workers.
    let plan = SimPlan::new(c.clone(), 1).with_workers(0).with_op_thresholds(vec![1.0]);
    assert!(simulate(&plan).is_err());
    // Wrong override length.
    let plan = SimPlan::new(c.clone(), 1)
        .with_mean_snrs(vec![10.0])
        .with_op_thresholds(vec![1.0]);
    assert!(simulate(&plan).is_err());
    // Nonpositive threshold.
    let plan = SimPlan::new(c, 1).with_op_thresholds(vec![0.0]);
    assert!(simulate(&plan).is_err());
}

#[test]
fn mean_snr_overrides_rescale_the_chain() {
    let c = chain(vec![nak(2.0, 10.0), nak(2.0, 10.0)], 0.0, Protocol::SemiBlindFgAf);
    let hi = chain(vec![nak(2.0, 1000.0), nak(2.0, 1000.0)], 0.0, Protocol::SemiBlindFgAf);
    let reference = cdf_af_dual_exact(&hi, 2.0).unwrap();
    let plan = SimPlan::new(c, 13)
        .with_mean_snrs(vec![1000.0, 1000.0])
        .with_trials(400_000)
        .with_op_thresholds(vec![2.0]);
    let est = simulate(&plan).unwrap().op[0].1;
    let gap = (est.value - reference).abs();
    assert!(
        gap <= 3.0 * est.std_error.max(1e-6),
        "override mismatch: mc {:.4e} vs exact {:.4e}",
        est.value,
        reference
    );
}
