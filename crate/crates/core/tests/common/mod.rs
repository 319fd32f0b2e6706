//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

/// One-sided Welch PSD: Hann window, 50 % overlap, direct DFT per segment.
/// Returns (bin frequencies, PSD in units²/Hz).
pub fn welch_psd(x: &[f64], fs: f64, seg: usize) -> (Vec<f64>, Vec<f64>) {
    let window: Vec<f64> = (0..seg)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / seg as f64).cos())
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let bins = seg / 2 + 1;
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..seg)
        .map(|m| {
            let a = 2.0 * PI * m as f64 / seg as f64;
            (a.cos(), a.sin())
        })
        .unzip();
    let mut psd = vec![0.0; bins];
    let mut count = 0usize;
    let mut start = 0;
    let mut frame = vec![0.0; seg];
    while start + seg <= x.len() {
        for n in 0..seg {
            frame[n] = x[start + n] * window[n];
        }
        for (k, p) in psd.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in frame.iter().enumerate() {
                let idx = (k * n) % seg;
                re += v * cos_t[idx];
                im -= v * sin_t[idx];
            }
            *p += re * re + im * im;
        }
        count += 1;
        start += seg / 2;
    }
    for (k, p) in psd.iter_mut().enumerate() {
        let one_sided = if k == 0 || k == seg / 2 { 1.0 } else { 2.0 };
        *p *= one_sided / (fs * win_power * count as f64);
    }
    let freqs = (0..bins).map(|k| k as f64 * fs / seg as f64).collect();
    (freqs, psd)
}
