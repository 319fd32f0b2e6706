//! Band-limited Gaussian noise and Johnson-noise scaling.
//!
//! Noise is synthesized in the frequency domain: every DFT bin from the
//! first non-DC bin up to the bandwidth gets an independent complex Gaussian
//! coefficient, every bin above it is zero, and the inverse transform yields
//! a real, zero-mean, exactly band-limited segment. The segment is periodic
//! over its own duration, so a segment of duration `τ` carries exactly
//! `2·B·τ` real degrees of freedom.

use std::cell::RefCell;
use std::ops::{Add, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result, BOLTZMANN};

/// Smallest allowed ratio of sample rate to noise bandwidth.
pub const MIN_OVERSAMPLING: f64 = 4.0;

const SAMPLE_COUNT_TOLERANCE: f64 = 1e-6;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("waveform must have at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::domain(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Constant signal; handy for DC drives in tests and examples.
    pub fn constant(value: f64, len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![value; len], sample_rate_hz)
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::constant(0.0, len, sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Time stamp of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    pub fn mean_square(&self) -> f64 {
        mean_square(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        self.mean_square().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|x| x * factor).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Errors unless both waveforms share sample rate and length.
    pub fn check_aligned(&self, other: &Waveform) -> Result<()> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::shape(format!(
                "waveform lengths differ: {} vs {}",
                self.samples.len(),
                other.samples.len()
            )));
        }
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::shape(format!(
                "sample rates differ: {} Hz vs {} Hz",
                self.sample_rate_hz, other.sample_rate_hz
            )));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Waveform, f: impl Fn(f64, f64) -> f64) -> Result<Waveform> {
        self.check_aligned(other)?;
        Ok(Waveform {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            sample_rate_hz: self.sample_rate_hz,
        })
    }
}

impl Add for &Waveform {
    type Output = Result<Waveform>;

    fn add(self, rhs: &Waveform) -> Result<Waveform> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Waveform {
    type Output = Result<Waveform>;

    fn sub(self, rhs: &Waveform) -> Result<Waveform> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

fn mean_square(samples: &[f64]) -> f64 {
    samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64
}

/// Root-mean-square of a sample sequence.
pub fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("rms of an empty waveform"));
    }
    Ok(mean_square(samples).sqrt())
}

/// RMS Johnson noise voltage `sqrt(4·k·T·R·B)` of a resistor.
pub fn johnson_rms_voltage(resistance: f64, t_eff: f64, bandwidth_hz: f64) -> Result<f64> {
    for (name, v) in [
        ("resistance", resistance),
        ("temperature", t_eff),
        ("bandwidth", bandwidth_hz),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((4.0 * BOLTZMANN * t_eff * resistance * bandwidth_hz).sqrt())
}

/// Parameters of one synthesized noise segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub target_rms: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Validates the parameters and returns its sample count.
    pub fn sample_count(&self) -> Result<usize> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        if !(self.sample_rate_hz.is_finite()
            && self.sample_rate_hz >= MIN_OVERSAMPLING * self.bandwidth_hz)
        {
            return Err(Error::config(
                "sample_rate_hz",
                format!(
                    "must be at least {MIN_OVERSAMPLING} x bandwidth ({} Hz), got {}",
                    MIN_OVERSAMPLING * self.bandwidth_hz,
                    self.sample_rate_hz
                ),
            ));
        }
        if !(self.target_rms.is_finite() && self.target_rms > 0.0) {
            return Err(Error::config("target_rms", "must be positive"));
        }
        sample_count(self.duration_s, self.sample_rate_hz)
    }

    /// Number of populated DFT bins, i.e. half the real degrees of freedom.
    pub fn populated_bins(&self) -> Result<usize> {
        let n = self.sample_count()?;
        populated_bins(n, self.sample_rate_hz, self.bandwidth_hz)
    }
}

/// Integer sample count of `duration_s` at `sample_rate_hz`.
pub fn sample_count(duration_s: f64, sample_rate_hz: f64) -> Result<usize> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::config("duration_s", "must be positive"));
    }
    let exact = duration_s * sample_rate_hz;
    let rounded = exact.round();
    if rounded < 1.0 || (exact - rounded).abs() > SAMPLE_COUNT_TOLERANCE * exact.max(1.0) {
        return Err(Error::config(
            "duration_s",
            format!("duration x sample rate must be a positive integer, got {exact}"),
        ));
    }
    Ok(rounded as usize)
}

fn populated_bins(n: usize, sample_rate_hz: f64, bandwidth_hz: f64) -> Result<usize> {
    let bins = (bandwidth_hz * n as f64 / sample_rate_hz + 1e-9).floor() as usize;
    if bins == 0 {
        return Err(Error::config(
            "duration_s",
            "segment too short to hold any in-band frequency bin",
        ));
    }
    Ok(bins)
}

/// Synthesizes a zero-mean band-limited Gaussian segment.
///
/// The amplitude is normalized analytically: the ensemble RMS equals
/// `target_rms`, while each individual segment keeps its natural sample
/// fluctuation around it.
pub fn synth_band_limited_gaussian(spec: &NoiseSpec) -> Result<Waveform> {
    let n = spec.sample_count()?;
    let bins = populated_bins(n, spec.sample_rate_hz, spec.bandwidth_hz)?;
    debug_assert!(2 * bins < n);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = spec.target_rms / (bins as f64).sqrt();
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=bins {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        // x[n] = sum_k scale * (a cos(2πkn/N) + b sin(2πkn/N))
        let c = Complex64::new(0.5 * scale * a, -0.5 * scale * b);
        spectrum[k] = c;
        spectrum[n - k] = c.conj();
    }

    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spectrum));
    Waveform::new(
        spectrum.into_iter().map(|c| c.re).collect(),
        spec.sample_rate_hz,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn spec(seed: u64) -> NoiseSpec {
        NoiseSpec {
            bandwidth_hz: 250.0,
            sample_rate_hz: 2000.0,
            duration_s: 10.0,
            target_rms: 1.0,
            seed,
        }
    }

    #[test]
    fn johnson_voltage_at_experiment_parameters() {
        // 4 * 1.380649e-23 * 7.25e16 * 1000 * 250 = 1.000970525, sqrt = 1.000485...
        let u = johnson_rms_voltage(1000.0, 7.25e16, 250.0).unwrap();
        assert!((u - 1.000_485_1).abs() < 1e-6, "{u}");
        let u9 = johnson_rms_voltage(9000.0, 7.25e16, 250.0).unwrap();
        assert!((u9 - 3.0 * u).abs() < 1e-12);
        let cold = johnson_rms_voltage(1.0, 1e-300, 250.0).unwrap();
        assert!(cold < 1e-150);
    }

    #[test]
    fn johnson_rejects_non_positive() {
        assert!(johnson_rms_voltage(0.0, 300.0, 1.0).is_err());
        assert!(johnson_rms_voltage(1.0, -1.0, 1.0).is_err());
        assert!(johnson_rms_voltage(1.0, 300.0, f64::NAN).is_err());
    }

    #[test]
    fn rms_basics() {
        assert_eq!(rms(&[3.0; 7]).unwrap(), 3.0);
        assert_eq!(rms(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert!((rms(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(rms(&[]).is_err());
    }

    #[test]
    fn synth_moments_at_long_duration() {
        let w = synth_band_limited_gaussian(&spec(42)).unwrap();
        assert_eq!(w.len(), 20_000);
        let r = w.rms();
        assert!((0.98..=1.02).contains(&r), "rms {r}");
        let m = stats::Moments::of(w.samples());
        assert!(m.mean.abs() < 1e-12, "mean {}", m.mean);
        assert!(m.skewness.abs() < 0.1, "skew {}", m.skewness);
        assert!(m.excess_kurtosis.abs() < 0.1, "kurt {}", m.excess_kurtosis);
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_band_limited_gaussian(&spec(7)).unwrap();
        let b = synth_band_limited_gaussian(&spec(7)).unwrap();
        assert_eq!(a, b);
        let c = synth_band_limited_gaussian(&spec(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_rejects_bad_specs() {
        let mut s = spec(1);
        s.target_rms = 0.0;
        assert!(matches!(
            synth_band_limited_gaussian(&s),
            Err(Error::Config { ref key, .. }) if key == "target_rms"
        ));
        let mut s = spec(1);
        s.sample_rate_hz = 999.0;
        assert!(synth_band_limited_gaussian(&s).is_err());
        let mut s = spec(1);
        s.duration_s = 0.10025;
        assert!(synth_band_limited_gaussian(&s).is_err());
        let mut s = spec(1);
        s.duration_s = 0.001;
        assert!(synth_band_limited_gaussian(&s).is_err());
    }

    #[test]
    fn bit_period_segment_has_fifty_degrees_of_freedom() {
        let s = NoiseSpec {
            duration_s: 0.1,
            ..spec(0)
        };
        assert_eq!(s.sample_count().unwrap(), 200);
        assert_eq!(s.populated_bins().unwrap(), 25);
    }

    #[test]
    fn waveform_arithmetic_checks_alignment() {
        let a = Waveform::constant(1.0, 4, 10.0).unwrap();
        let b = Waveform::constant(2.0, 4, 10.0).unwrap();
        assert_eq!((&a + &b).unwrap().samples(), &[3.0; 4]);
        assert_eq!((&b - &a).unwrap().samples(), &[1.0; 4]);
        let short = Waveform::constant(1.0, 3, 10.0).unwrap();
        assert!(matches!(&a + &short, Err(Error::Shape(_))));
        let other_rate = Waveform::constant(1.0, 4, 20.0).unwrap();
        assert!(matches!(&a - &other_rate, Err(Error::Shape(_))));
        assert!(Waveform::new(vec![], 1.0).is_err());
        assert!(Waveform::new(vec![f64::INFINITY], 1.0).is_err());
    }
}
