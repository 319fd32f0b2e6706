//! Eve's current-injection attack.
//!
//! Eve drives a Gaussian current of the channel bandwidth into the wire and
//! correlates it with the current at each end. More of her current returns
//! through the smaller resistor, so the end with the larger correlation is
//! her guess for where `R_L` sits.

use rand::Rng;

use crate::circuit::{ChannelSignals, SignConvention};
use crate::noise::{synth_band_limited_gaussian, NoiseSpec};
use crate::protocol::{BitExchangeRecord, Classification};
use crate::stats::{standard_normal_cdf, BinomialEstimate};
use crate::{Error, Result, Waveform, BOLTZMANN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionSpec {
    /// Injected rms as a fraction of the rms channel current. Zero means Eve
    /// listens without injecting.
    pub level_fraction: f64,
    pub bandwidth_hz: f64,
    pub seed: u64,
}

impl InjectionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.level_fraction) {
            return Err(Error::config(
                "injection_level",
                format!("must lie in [0, 1), got {}", self.level_fraction),
            ));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        Ok(())
    }
}

/// Eve's reading of a secure bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guess {
    /// Alice holds `R_L`.
    LH,
    /// Alice holds `R_H`.
    HL,
}

/// RMS loop current of a secure (LH or HL) bit, `sqrt(4kTB/(R_L+R_H))`.
pub fn reference_rms_channel_current(
    r_l: f64,
    r_h: f64,
    t_eff: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    for v in [r_l, r_h, t_eff, bandwidth_hz] {
        if !(v > 0.0 && !v.is_nan()) {
            return Err(Error::domain(format!(
                "expected a positive argument, got {v}"
            )));
        }
    }
    Ok((4.0 * BOLTZMANN * t_eff * bandwidth_hz / (r_l + r_h)).sqrt())
}

/// Eve's injected current for one bit period, or `None` at zero level.
pub fn injection_waveform(
    spec: &InjectionSpec,
    reference_rms: f64,
    duration_s: f64,
    sample_rate_hz: f64,
) -> Result<Option<Waveform>> {
    spec.validate()?;
    if spec.level_fraction == 0.0 {
        return Ok(None);
    }
    let noise = NoiseSpec {
        bandwidth_hz: spec.bandwidth_hz,
        sample_rate_hz,
        duration_s,
        target_rms: spec.level_fraction * reference_rms,
        seed: spec.seed,
    };
    synth_band_limited_gaussian(&noise).map(Some)
}

/// `⟨i_inj(t)·i_end(t)⟩` over the bit period.
pub fn correlate(i_inj: &Waveform, i_ch_end: &Waveform) -> Result<f64> {
    i_inj.check_aligned(i_ch_end)?;
    let sum: f64 = i_inj
        .samples()
        .iter()
        .zip(i_ch_end.samples())
        .map(|(a, b)| a * b)
        .sum();
    Ok(sum / i_inj.len() as f64)
}

/// Eve's decision: `ρ = ρ_a − ρ_b > 0` means Alice holds the low resistor.
/// An exact tie is settled by a fair coin from `coin`.
pub fn eve_decide<R: Rng + ?Sized>(rho_a: f64, rho_b: f64, coin: &mut R) -> Guess {
    let rho = rho_a - rho_b;
    if rho > 0.0 {
        Guess::LH
    } else if rho < 0.0 {
        Guess::HL
    } else if coin.random::<bool>() {
        Guess::LH
    } else {
        Guess::HL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBit {
    pub rho_a: f64,
    pub rho_b: f64,
    pub rho: f64,
    pub guess: Guess,
    pub correct: bool,
}

/// Per-bit correlator outputs and the resulting success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub bits: Vec<AttackBit>,
    pub p_e: BinomialEstimate,
}

impl AttackResult {
    pub fn from_bits(bits: Vec<AttackBit>) -> Result<Self> {
        let p_e = success_probability(&bits.iter().map(|b| b.correct).collect::<Vec<_>>())?;
        Ok(Self { bits, p_e })
    }
}

/// Both correlators on one set of end signals. `i_inj` of `None` (no
/// injection) yields zero correlations.
pub fn correlate_ends(signals: &ChannelSignals, i_inj: Option<&Waveform>) -> Result<(f64, f64)> {
    let Some(inj) = i_inj else {
        return Ok((0.0, 0.0));
    };
    let s = signals.to_convention(SignConvention::DividerFromInjection);
    Ok((correlate(inj, &s.i_cha)?, correlate(inj, &s.i_chb)?))
}

/// Eve's attack on one recorded exchange. Returns `None` for HH/LL bits,
/// which the parties discard anyway.
pub fn attack_bit<R: Rng + ?Sized>(
    record: &BitExchangeRecord,
    coin: &mut R,
) -> Result<Option<AttackBit>> {
    let truth = match record.classification {
        Classification::SecureLH => Guess::LH,
        Classification::SecureHL => Guess::HL,
        _ => return Ok(None),
    };
    let (rho_a, rho_b) = correlate_ends(&record.signals, record.injected.as_ref())?;
    let guess = eve_decide(rho_a, rho_b, coin);
    Ok(Some(AttackBit {
        rho_a,
        rho_b,
        rho: rho_a - rho_b,
        guess,
        correct: guess == truth,
    }))
}

/// Mean of Eve's per-bit hits with its binomial standard error.
pub fn success_probability(q: &[bool]) -> Result<BinomialEstimate> {
    if q.is_empty() {
        return Err(Error::domain("success probability over zero secure bits"));
    }
    BinomialEstimate::from_flags(q.iter().copied())
}

/// Closed-form `p_E` for the ideal loop with noise segments of `2·B·τ`
/// degrees of freedom:
/// `Φ( (R_H−R_L)/(R_H+R_L) · ε · sqrt(2Bτ) / 2 )`.
///
/// The mean of `ρ` is `(R_H−R_L)/(R_H+R_L)·ε²·I²`, and its spread is
/// dominated by the cross term `2⟨i_inj·I_loop⟩`, whose standard deviation is
/// `2·ε·I²/sqrt(2Bτ)`.
pub fn analytic_success_probability(
    r_l: f64,
    r_h: f64,
    level_fraction: f64,
    bandwidth_hz: f64,
    tau_s: f64,
) -> f64 {
    let asym = (r_h - r_l) / (r_h + r_l);
    let dof = 2.0 * bandwidth_hz * tau_s;
    standard_normal_cdf(asym * level_fraction * dof.sqrt() / 2.0)
}
