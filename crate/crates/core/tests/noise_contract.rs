//! Statistical contracts of the band-limited noise generator, checked against
//! an independent Welch periodogram computed with a direct DFT.

use std::f64::consts::PI;

mod common;

use common::welch_psd;
use kljn_core::noise::{synth_band_limited_gaussian, NoiseSpec};
use kljn_core::stats::Moments;

const B: f64 = 250.0;
const FS: f64 = 2000.0;

fn spec(duration_s: f64, target_rms: f64, seed: u64) -> NoiseSpec {
    NoiseSpec {
        bandwidth_hz: B,
        sample_rate_hz: FS,
        duration_s,
        target_rms,
        seed,
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn welch_oracle_recovers_a_known_sine() {
    // A 1 V amplitude sine carries 0.5 V²; integrating the PSD recovers it.
    let n = 8192;
    let x: Vec<f64> = (0..n)
        .map(|i| (2.0 * PI * 125.0 * i as f64 / FS).sin())
        .collect();
    let (f, psd) = welch_psd(&x, FS, 256);
    let df = f[1] - f[0];
    let total: f64 = psd.iter().sum::<f64>() * df;
    // Hann's equivalent noise bandwidth is 1.5 bins.
    assert!((total - 0.5).abs() < 0.01, "{total}");
    let peak = psd
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(f[peak], 125.0);
}

#[test]
fn psd_is_flat_in_band_and_suppressed_at_twice_the_bandwidth() {
    let w = synth_band_limited_gaussian(&spec(100.0, 1.0, 2024)).unwrap();
    let seg = 256;
    let (f, psd) = welch_psd(w.samples(), FS, seg);
    let df = FS / seg as f64;
    // Flat level of unit-variance white noise over [0, B].
    let expected = 1.0 / B;
    // Skip the window mainlobe at the band edge, and the DC bin, whose
    // one-sided weight halves a continuous spectrum.
    let in_band: Vec<f64> = f
        .iter()
        .zip(&psd)
        .filter(|(fr, _)| **fr > 0.0 && **fr <= B - 2.0 * df)
        .map(|(_, p)| *p)
        .collect();
    assert!(in_band.len() >= 29);
    for p in &in_band {
        let dev = db(*p / expected);
        assert!(dev.abs() <= 1.0, "in-band deviation {dev:.3} dB");
    }
    let at_2b = psd[f.iter().position(|fr| *fr == 2.0 * B).unwrap()];
    let attenuation = db(expected / at_2b);
    assert!(
        attenuation >= 40.0,
        "attenuation at 2B only {attenuation:.1} dB"
    );
}

#[test]
fn rms_matches_target_for_long_records() {
    for (duration, seed) in [(10.0, 42), (100.0, 7)] {
        let w = synth_band_limited_gaussian(&spec(duration, 2.5, seed)).unwrap();
        let rel = w.rms() / 2.5 - 1.0;
        assert!(rel.abs() <= 0.02, "duration {duration}: {rel}");
    }
}

#[test]
fn long_record_is_gaussian_and_zero_mean() {
    let w = synth_band_limited_gaussian(&spec(100.0, 1.0, 99)).unwrap();
    let m = Moments::of(w.samples());
    assert!(m.mean.abs() < 0.01, "{}", m.mean);
    assert!(m.skewness.abs() < 0.05, "{}", m.skewness);
    assert!(m.excess_kurtosis.abs() < 0.05, "{}", m.excess_kurtosis);
}

#[test]
fn scaling_is_linear_under_a_fixed_seed() {
    let a = synth_band_limited_gaussian(&spec(0.1, 1.0, 5)).unwrap();
    let b = synth_band_limited_gaussian(&spec(0.1, 3.7, 5)).unwrap();
    for (x, y) in a.samples().iter().zip(b.samples()) {
        assert!((3.7 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
}

#[test]
fn different_seeds_are_uncorrelated() {
    let duration = 0.1;
    let bound = 4.0 / (2.0 * B * duration).sqrt();
    for seed in 0..200u64 {
        let a = synth_band_limited_gaussian(&spec(duration, 1.0, 2 * seed)).unwrap();
        let b = synth_band_limited_gaussian(&spec(duration, 1.0, 2 * seed + 1)).unwrap();
        let dot: f64 = a
            .samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| x * y)
            .sum();
        let rho = dot / (a.mean_square().sqrt() * b.mean_square().sqrt() * a.len() as f64);
        assert!(rho.abs() < bound, "seed {seed}: {rho}");
    }
}
