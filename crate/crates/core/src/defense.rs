//! Detection of injected current by instantaneous comparison.
//!
//! In the ideal loop the two end currents must be equal, so any difference is
//! injected current. Over a real cable they differ by the capacitive leak, so
//! the parties replay their exchanged end voltages through a cable model and
//! compare the currents it predicts with the ones they measured.

use crate::circuit::{drive_cable_ends, CableModel, ChannelSignals, SignConvention};
use crate::{Error, Result, Waveform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Absolute residual threshold in amperes.
    pub threshold: f64,
    /// Consecutive samples above threshold needed to flag the bit.
    pub consecutive_samples: usize,
    /// Pooled no-attack residual rms the threshold was derived from.
    pub calibration: Option<f64>,
}

impl DetectionConfig {
    pub fn new(threshold: f64, consecutive_samples: usize) -> Result<Self> {
        let cfg = Self {
            threshold,
            consecutive_samples,
            calibration: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::config("detection_threshold", "must be positive"));
        }
        if self.consecutive_samples == 0 {
            return Err(Error::config("detection_consecutive", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionVerdict {
    pub attacked: bool,
    /// Sample at which the criterion fired.
    pub first_detection_sample: Option<usize>,
    /// Largest |residual| over both ends.
    pub max_residual: f64,
    /// Residual at Alice's end (the only one in the ideal comparison).
    pub residual_trace: Waveform,
    /// Residual at Bob's end for the model-based comparison.
    pub residual_trace_bob: Option<Waveform>,
}

impl DetectionVerdict {
    /// Detection latency as a fraction of the bit period.
    pub fn latency_fraction(&self) -> Option<f64> {
        self.first_detection_sample
            .map(|i| i as f64 / self.residual_trace.len() as f64)
    }
}

/// First sample at which `consecutive` samples in a row exceed `threshold`.
fn first_firing(residual: &Waveform, cfg: &DetectionConfig) -> Option<usize> {
    let mut run = 0;
    for (i, r) in residual.samples().iter().enumerate() {
        if r.abs() > cfg.threshold {
            run += 1;
            if run >= cfg.consecutive_samples {
                return Some(i);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Ideal-loop check: the residual `i_cha − i_chb` (loop convention) must
/// vanish.
pub fn compare_instantaneous_ideal(
    i_cha: &Waveform,
    i_chb: &Waveform,
    cfg: &DetectionConfig,
) -> Result<DetectionVerdict> {
    cfg.validate()?;
    let residual = (i_cha - i_chb)?;
    let first = first_firing(&residual, cfg);
    Ok(DetectionVerdict {
        attacked: first.is_some(),
        first_detection_sample: first,
        max_residual: residual.max_abs(),
        residual_trace: residual,
        residual_trace_bob: None,
    })
}

/// Currents the cable alone would draw at its two ends given the exchanged
/// end voltages (loop convention).
pub fn simulate_expected_currents(
    model: &CableModel,
    u_cha: &Waveform,
    u_chb: &Waveform,
) -> Result<(Waveform, Waveform)> {
    drive_cable_ends(model, u_cha, u_chb)
}

/// Model-based check on both ends: residuals `i_ch − i*_ch` must vanish.
pub fn model_based_detect(
    measured: &ChannelSignals,
    simulated: (&Waveform, &Waveform),
    cfg: &DetectionConfig,
) -> Result<DetectionVerdict> {
    cfg.validate()?;
    let m = measured.to_convention(SignConvention::Loop);
    let res_a = (&m.i_cha - simulated.0)?;
    let res_b = (&m.i_chb - simulated.1)?;
    let first = match (first_firing(&res_a, cfg), first_firing(&res_b, cfg)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(DetectionVerdict {
        attacked: first.is_some(),
        first_detection_sample: first,
        max_residual: res_a.max_abs().max(res_b.max_abs()),
        residual_trace: res_a,
        residual_trace_bob: Some(res_b),
    })
}

/// Minimum number of no-attack bits for a calibration.
pub const MIN_CALIBRATION_BITS: usize = 10;

/// Default threshold multiplier over the no-attack residual rms.
pub const DEFAULT_MULTIPLIER: f64 = 5.0;

/// Default floor on the calibrated residual rms, relative to the rms
/// channel current. Residuals from an exact defender model are pure
/// floating-point error (about 1e-13 relative) whose tails are far from
/// Gaussian, so a multiple of their rms is not a usable threshold; anything
/// below this floor is treated as numerically zero.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-9;

/// Threshold = `multiplier` × rms of the pooled no-attack residuals. An
/// all-zero calibration yields the smallest positive threshold, so any
/// nonzero residual is flagged.
pub fn calibrate_threshold(
    no_attack_runs: &[Waveform],
    multiplier: f64,
) -> Result<DetectionConfig> {
    calibrate_threshold_with_floor(no_attack_runs, multiplier, 0.0)
}

/// As [`calibrate_threshold`], with the pooled rms raised to at least
/// `rms_floor` (amperes) before multiplying. The reported calibration is the
/// measured rms, not the floored one.
pub fn calibrate_threshold_with_floor(
    no_attack_runs: &[Waveform],
    multiplier: f64,
    rms_floor: f64,
) -> Result<DetectionConfig> {
    if !(multiplier.is_finite() && multiplier > 0.0) {
        return Err(Error::config("detection_multiplier", "must be positive"));
    }
    if !(rms_floor.is_finite() && rms_floor >= 0.0) {
        return Err(Error::config("detection_floor", "must be non-negative"));
    }
    if no_attack_runs.is_empty() {
        return Err(Error::domain("no residual traces to calibrate from"));
    }
    if no_attack_runs.len() < MIN_CALIBRATION_BITS {
        return Err(Error::domain(format!(
            "calibration needs at least {MIN_CALIBRATION_BITS} no-attack bits, got {}",
            no_attack_runs.len()
        )));
    }
    let (sum_sq, n) = no_attack_runs.iter().fold((0.0, 0usize), |(s, n), w| {
        (s + w.mean_square() * w.len() as f64, n + w.len())
    });
    let pooled_rms = (sum_sq / n as f64).sqrt();
    let threshold = (multiplier * pooled_rms.max(rms_floor)).max(f64::MIN_POSITIVE);
    Ok(DetectionConfig {
        threshold,
        consecutive_samples: 1,
        calibration: Some(pooled_rms),
    })
}
