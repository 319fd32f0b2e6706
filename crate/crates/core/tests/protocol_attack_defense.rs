//! Statistical properties of the honest parties, Eve's correlation attack and
//! the defenders' current comparison.

use kljn_core::attack::{
    analytic_success_probability, correlate, correlate_ends, eve_decide, Guess, InjectionSpec,
};
use kljn_core::circuit::{solve_loop, LoopConfig, SignConvention};
use kljn_core::defense::{
    compare_instantaneous_ideal, model_based_detect, simulate_expected_currents, DetectionConfig,
};
use kljn_core::harness::{
    attack_result, derive_bit_seeds, run_defense_experiment, simulate_bits, SelectionMode,
    SimConfig, VariantKind,
};
use kljn_core::noise::{synth_band_limited_gaussian, NoiseSpec};
use kljn_core::protocol::{run_bit_exchange, BitExchangeRecord, Classification};
use kljn_core::stats::ks_two_sample;
use kljn_core::Waveform;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(kind: VariantKind, n_bits: usize) -> SimConfig {
    SimConfig {
        variant_kind: kind,
        n_bits,
        ..SimConfig::default()
    }
}

fn exchange(cfg: &SimConfig, i: u64, level: Option<f64>) -> BitExchangeRecord {
    let cfg = SimConfig {
        injection_level: level,
        ..*cfg
    };
    let seeds = derive_bit_seeds(cfg.master_seed, i);
    run_bit_exchange(&cfg, i, &seeds, cfg.injection_spec().as_ref()).unwrap()
}

const KINDS: [VariantKind; 3] = [
    VariantKind::Ideal,
    VariantKind::Cable,
    VariantKind::CableWithKiller,
];

#[test]
fn honest_parties_identify_each_other_on_kept_bits() {
    for kind in KINDS {
        for length in [100.0, 1000.0] {
            let cfg = SimConfig {
                cable_length_m: length,
                selection_mode: SelectionMode::FullyRandom,
                ..config(kind, 1000)
            };
            let outcomes = simulate_bits(&cfg).unwrap();
            let kept: Vec<_> = outcomes.iter().filter(|o| o.secure).collect();
            assert!(
                kept.len() > 400,
                "{kind:?}: only {} secure bits",
                kept.len()
            );
            let correct = kept.iter().filter(|o| o.honest_correct).count();
            let rate = correct as f64 / kept.len() as f64;
            assert!(rate >= 0.99, "{kind:?} {length} m: honest success {rate}");
        }
    }
}

/// KS p-values of Eve's passive per-bit statistics at Alice's end, LH vs HL:
/// mean-square current and mean-square wire voltage.
fn passive_ks(cfg: &SimConfig, bits: u64) -> (f64, f64) {
    let (mut lh, mut hl) = ((Vec::new(), Vec::new()), (Vec::new(), Vec::new()));
    for i in 0..bits {
        let r = exchange(cfg, i, None);
        let target = match r.classification {
            Classification::SecureLH => &mut lh,
            Classification::SecureHL => &mut hl,
            _ => continue,
        };
        target.0.push(r.signals.i_cha.mean_square());
        target.1.push(r.signals.u_cha.mean_square());
    }
    let (_, p_i) = ks_two_sample(&lh.0, &hl.0).unwrap();
    let (_, p_u) = ks_two_sample(&lh.1, &hl.1).unwrap();
    (p_i, p_u)
}

#[test]
fn lh_and_hl_bits_look_alike_without_injection() {
    for kind in [VariantKind::Ideal, VariantKind::CableWithKiller] {
        let (p_i, p_u) = passive_ks(&config(kind, 0), 1500);
        assert!(p_i > 0.01 && p_u > 0.01, "{kind:?}: KS p = {p_i}, {p_u}");
    }
}

#[test]
fn bare_long_cable_reveals_the_arrangement_through_its_charging_current() {
    // The shunt capacitance is charged through whichever resistor sits at
    // each end, so the end current of a long unbuffered cable depends on the
    // arrangement. This is the passive leak the capacitor killer removes.
    let (p_i, p_u) = passive_ks(&config(VariantKind::Cable, 0), 1500);
    assert!(p_i < 1e-4, "{p_i}");
    assert!(p_u > 0.01, "{p_u}");
}

#[test]
fn eve_success_grows_with_injection_level() {
    let mut previous = 0.0;
    for level in [0.0, 0.01, 0.1, 0.3] {
        let cfg = SimConfig {
            injection_level: Some(level),
            ..config(VariantKind::Ideal, 4000)
        };
        let p = attack_result(&simulate_bits(&cfg).unwrap()).unwrap().p_e;
        assert!(
            p.p + 2.0 * p.stderr > previous,
            "level {level}: {} after {previous}",
            p.p
        );
        previous = p.p;
    }
    assert!(previous > 0.75, "{previous}");
}

#[test]
fn ideal_loop_matches_the_closed_form_within_three_sigma() {
    for level in [0.01, 0.1, 0.2] {
        let cfg = SimConfig {
            injection_level: Some(level),
            master_seed: 77,
            ..config(VariantKind::Ideal, 10_000)
        };
        let p = attack_result(&simulate_bits(&cfg).unwrap()).unwrap().p_e;
        let theory = analytic_success_probability(1000.0, 9000.0, level, 250.0, 0.1);
        assert!(
            (p.p - theory).abs() <= 3.0 * p.stderr,
            "level {level}: {} vs {theory}",
            p.p
        );
    }
}

#[test]
fn correlators_split_the_injection_by_the_divider_rule() {
    // With silent generators the ends carry only Eve's current, so each
    // correlator returns its divider share of <i_inj^2>.
    let inj = synth_band_limited_gaussian(&NoiseSpec {
        bandwidth_hz: 250.0,
        sample_rate_hz: 2000.0,
        duration_s: 0.1,
        target_rms: 1e-5,
        seed: 3,
    })
    .unwrap();
    let zeros = Waveform::zeros(inj.len(), 2000.0).unwrap();
    let s = solve_loop(
        &LoopConfig::ideal(1000.0, 9000.0),
        None,
        &zeros,
        &zeros,
        Some(&inj),
    )
    .unwrap();
    let (rho_a, rho_b) = correlate_ends(&s, Some(&inj)).unwrap();
    let power = correlate(&inj, &inj).unwrap();
    assert!((power - inj.mean_square()).abs() < 1e-25);
    assert!((rho_a - 0.9 * power).abs() < 1e-12 * power);
    assert!((rho_b - 0.1 * power).abs() < 1e-12 * power);
    let mut coin = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(eve_decide(rho_a, rho_b, &mut coin), Guess::LH);
    assert_eq!(eve_decide(rho_b, rho_a, &mut coin), Guess::HL);
    assert_eq!(correlate_ends(&s, None).unwrap(), (0.0, 0.0));
    let d = s.to_convention(SignConvention::DividerFromInjection);
    assert_eq!(correlate_ends(&d, Some(&inj)).unwrap(), (rho_a, rho_b));
}

#[test]
fn zero_level_injection_leaves_eve_guessing() {
    let spec = InjectionSpec {
        level_fraction: 0.0,
        bandwidth_hz: 250.0,
        seed: 0,
    };
    spec.validate().unwrap();
    let cfg = SimConfig {
        injection_level: Some(0.0),
        ..config(VariantKind::Cable, 4000)
    };
    let p = attack_result(&simulate_bits(&cfg).unwrap()).unwrap();
    assert!(p.bits.iter().all(|b| b.rho == 0.0));
    assert!(
        (p.p_e.p - 0.5).abs() < 0.015 + 3.0 * p.p_e.stderr,
        "{}",
        p.p_e.p
    );
}

#[test]
fn defender_model_reproduces_unattacked_currents() {
    for length in [100.0, 1000.0] {
        let cfg = SimConfig {
            cable_length_m: length,
            ..config(VariantKind::Cable, 0)
        };
        let model = cfg.cable_model().unwrap().unwrap();
        for i in 0..20 {
            let r = exchange(&cfg, i, None);
            let (ia, ib) =
                simulate_expected_currents(&model, &r.signals.u_cha, &r.signals.u_chb).unwrap();
            let scale = r.signals.i_cha.rms();
            assert!((&r.signals.i_cha - &ia).unwrap().rms() <= 1e-6 * scale);
            assert!((&r.signals.i_chb - &ib).unwrap().rms() <= 1e-6 * scale);
        }
    }
}

#[test]
fn residuals_reconstruct_the_injected_share_at_each_end() {
    // The defenders replay the measured end voltages, so in their model both
    // ends are clamped and Eve's current at node m returns through the two
    // cable halves in inverse proportion to their series resistance:
    // (n − m)/n out of Alice's end, m/n out of Bob's. Inductive and
    // capacitive corrections are about 1 % at 250 Hz.
    for position in [0.5, 0.3] {
        let cfg = SimConfig {
            injection_position: position,
            ..config(VariantKind::Cable, 0)
        };
        let model = cfg.cable_model().unwrap().unwrap();
        let n = model.n_segments as f64;
        let m = (position * n).round();
        for i in 0..10 {
            let r = exchange(&cfg, i, Some(0.1));
            let inj = r.injected.as_ref().unwrap();
            let (ia, ib) =
                simulate_expected_currents(&model, &r.signals.u_cha, &r.signals.u_chb).unwrap();
            let probe = DetectionConfig::new(1.0, 1).unwrap();
            let verdict = model_based_detect(&r.signals, (&ia, &ib), &probe).unwrap();
            // Loop convention: current leaving through Alice's end is negative.
            let expected_a = inj.scaled(-(n - m) / n);
            let expected_b = inj.scaled(m / n);
            let res_b = verdict.residual_trace_bob.as_ref().unwrap();
            for (res, exp) in [(&verdict.residual_trace, &expected_a), (res_b, &expected_b)] {
                let err = (res - exp).unwrap().rms();
                assert!(
                    err <= 0.05 * exp.rms(),
                    "position {position}, bit {i}: {err:e} vs {:e}",
                    exp.rms()
                );
            }
        }
    }
}

#[test]
fn ideal_comparison_fires_at_the_first_crossing() {
    let cfg = config(VariantKind::Ideal, 0);
    for i in 0..50 {
        let r = exchange(&cfg, i, Some(0.01));
        let inj = r.injected.as_ref().unwrap();
        let threshold = 0.5 * inj.max_abs();
        let det = DetectionConfig::new(threshold, 1).unwrap();
        let v = compare_instantaneous_ideal(&r.signals.i_cha, &r.signals.i_chb, &det).unwrap();
        let first = inj.samples().iter().position(|x| x.abs() > threshold);
        assert_eq!(v.first_detection_sample, first);
        assert!((v.max_residual - inj.max_abs()).abs() <= 1e-12 * inj.max_abs());
        let high = DetectionConfig::new(1.01 * inj.max_abs(), 1).unwrap();
        let missed =
            compare_instantaneous_ideal(&r.signals.i_cha, &r.signals.i_chb, &high).unwrap();
        assert!(!missed.attacked);
    }
}

#[test]
fn detection_power_grows_with_level_at_a_fixed_threshold() {
    // A threshold comparable to a 1 % injection separates the three levels.
    let reference = config(VariantKind::Cable, 0).reference_current().unwrap();
    let mut rates = Vec::new();
    for level in [0.001, 0.01, 0.1] {
        let cfg = SimConfig {
            injection_level: Some(level),
            detection_threshold: Some(0.02 * reference),
            ..config(VariantKind::Cable, 300)
        };
        let stats = run_defense_experiment(&cfg).unwrap().defense.unwrap().stats;
        rates.push(stats.detection_rate.p);
    }
    assert!(rates[2] >= rates[1] && rates[1] >= rates[0], "{rates:?}");
    assert_eq!(rates[2], 1.0);
    assert!(rates[0] < 0.5, "{rates:?}");
}
