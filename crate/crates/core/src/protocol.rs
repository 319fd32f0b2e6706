//! Alice's and Bob's side of one KLJN bit exchange.
//!
//! Each party attaches a randomly chosen resistor together with a Johnson-like
//! voltage generator scaled to that resistor, measures the wire voltage and
//! current over the bit period, and works out the resistor at the far end
//! from the Johnson formula.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::{self, InjectionSpec};
use crate::circuit::{solve_loop, ChannelSignals, LoopConfig, SignConvention};
use crate::harness::{BitSeeds, ReferenceMode, SelectionMode, SimConfig};
use crate::noise::{johnson_rms_voltage, synth_band_limited_gaussian, NoiseSpec};
use crate::{Error, Result, Waveform, BOLTZMANN};

/// Which of the two publicly known resistors a party connects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Low,
    High,
}

impl Level {
    pub fn other(self) -> Level {
        match self {
            Level::Low => Level::High,
            Level::High => Level::Low,
        }
    }
}

/// The public resistor pair `{R_L, R_H}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistorSet {
    pub r_l: f64,
    pub r_h: f64,
}

impl ResistorSet {
    pub fn new(r_l: f64, r_h: f64) -> Result<Self> {
        if !(r_l.is_finite() && r_l > 0.0) {
            return Err(Error::config("r_l", "must be positive"));
        }
        if !(r_h.is_finite() && r_h > r_l) {
            return Err(Error::config("r_h", "must be finite and greater than r_l"));
        }
        Ok(Self { r_l, r_h })
    }

    pub fn resistance(&self, level: Level) -> f64 {
        match level {
            Level::Low => self.r_l,
            Level::High => self.r_h,
        }
    }

    pub fn choice(&self, level: Level) -> ResistorChoice {
        ResistorChoice {
            value: level,
            resistance: self.resistance(level),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistorChoice {
    pub value: Level,
    pub resistance: f64,
}

/// Draws Low or High with probability 1/2 each.
pub fn select_bit<R: Rng + ?Sized>(rng: &mut R, set: &ResistorSet) -> ResistorChoice {
    let level = if rng.random::<bool>() {
        Level::High
    } else {
        Level::Low
    };
    set.choice(level)
}

/// Outcome of a bit exchange as seen by Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    SecureLH,
    SecureHL,
    DiscardHH,
    DiscardLL,
}

impl Classification {
    pub fn is_secure(self) -> bool {
        matches!(self, Classification::SecureLH | Classification::SecureHL)
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::SecureLH => "LH",
            Classification::SecureHL => "HL",
            Classification::DiscardHH => "HH",
            Classification::DiscardLL => "LL",
        }
    }
}

pub fn classify_bit_pair(alice: ResistorChoice, bob: ResistorChoice) -> Classification {
    match (alice.value, bob.value) {
        (Level::Low, Level::High) => Classification::SecureLH,
        (Level::High, Level::Low) => Classification::SecureHL,
        (Level::High, Level::High) => Classification::DiscardHH,
        (Level::Low, Level::Low) => Classification::DiscardLL,
    }
}

fn mean_square_checked(w: &Waveform, what: &str) -> Result<f64> {
    let ms = w.mean_square();
    if !(ms.is_finite() && ms > f64::MIN_POSITIVE) {
        return Err(Error::Inference(format!(
            "measured {what} power {ms:e} is too small to infer a resistance"
        )));
    }
    Ok(ms)
}

/// Partner's resistance from the mean-square loop current:
/// `R_loop = 4·k·T·B / ⟨i²⟩`, minus the caller's own resistor.
///
/// `u_ch` is only checked for alignment; the estimate uses the current.
pub fn infer_remote_resistance(
    u_ch: &Waveform,
    i_ch: &Waveform,
    own_r: f64,
    t_eff: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    u_ch.check_aligned(i_ch)?;
    if !(own_r > 0.0 && t_eff > 0.0 && bandwidth_hz > 0.0) {
        return Err(Error::domain(
            "resistance, temperature and bandwidth must be positive",
        ));
    }
    let ms = mean_square_checked(i_ch, "current")?;
    let r_loop = 4.0 * BOLTZMANN * t_eff * bandwidth_hz / ms;
    Ok(r_loop - own_r)
}

/// Partner's resistance from the mean-square wire voltage, which measures the
/// parallel combination `own‖remote`. Returns infinity when the measured
/// parallel resistance reaches the caller's own resistor.
pub fn infer_remote_from_voltage(
    u_ch: &Waveform,
    own_r: f64,
    t_eff: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    if !(own_r > 0.0 && t_eff > 0.0 && bandwidth_hz > 0.0) {
        return Err(Error::domain(
            "resistance, temperature and bandwidth must be positive",
        ));
    }
    let ms = mean_square_checked(u_ch, "voltage")?;
    let r_par = ms / (4.0 * BOLTZMANN * t_eff * bandwidth_hz);
    if r_par >= own_r {
        return Ok(f64::INFINITY);
    }
    Ok(own_r * r_par / (own_r - r_par))
}

/// Decides which resistor sits at the far end.
///
/// Both measured powers are compared with their Johnson-formula predictions
/// for each candidate, `⟨i²⟩ = 4kTB/(own+x)` and `⟨u²⟩ = 4kTB·own·x/(own+x)`,
/// and the candidate with the smaller squared log-distance wins. The low-R
/// party is mostly decided by the current, the high-R party by the voltage.
/// A tie resolves to the caller's own level, which makes the bit a discard.
pub fn decode_remote(
    u_ch: &Waveform,
    i_ch: &Waveform,
    own: ResistorChoice,
    set: &ResistorSet,
    t_eff: f64,
    bandwidth_hz: f64,
) -> Result<Level> {
    u_ch.check_aligned(i_ch)?;
    let ms_i = mean_square_checked(i_ch, "current")?;
    let ms_u = mean_square_checked(u_ch, "voltage")?;
    let s = 4.0 * BOLTZMANN * t_eff * bandwidth_hz;
    let distance = |level: Level| {
        let x = set.resistance(level);
        let loop_r = own.resistance + x;
        let di = (ms_i / (s / loop_r)).ln();
        let du = (ms_u / (s * own.resistance * x / loop_r)).ln();
        di * di + du * du
    };
    let same = distance(own.value);
    let other = distance(own.value.other());
    Ok(if other < same {
        own.value.other()
    } else {
        own.value
    })
}

/// Everything that happened during one bit-exchange period.
#[derive(Debug, Clone, PartialEq)]
pub struct BitExchangeRecord {
    pub index: u64,
    pub alice_choice: ResistorChoice,
    pub bob_choice: ResistorChoice,
    /// Generator voltages, kept for debugging dumps.
    pub u_alice: Waveform,
    pub u_bob: Waveform,
    /// End signals in the loop convention.
    pub signals: ChannelSignals,
    pub injected: Option<Waveform>,
    pub classification: Classification,
    pub alice_inferred_remote: f64,
    pub bob_inferred_remote: f64,
    pub alice_decoded: Level,
    pub bob_decoded: Level,
}

impl BitExchangeRecord {
    /// Both parties identified the partner's resistor.
    pub fn honest_correct(&self) -> bool {
        self.alice_decoded == self.bob_choice.value && self.bob_decoded == self.alice_choice.value
    }

    /// Whether the parties themselves keep the bit (they decoded a mixed
    /// pair).
    pub fn kept_by_parties(&self) -> bool {
        self.alice_decoded != self.alice_choice.value && self.bob_decoded != self.bob_choice.value
    }

    pub fn loop_config(&self, template: &LoopConfig) -> LoopConfig {
        LoopConfig {
            r_alice: self.alice_choice.resistance,
            r_bob: self.bob_choice.resistance,
            ..*template
        }
    }
}

fn choose_pair(
    cfg: &SimConfig,
    set: &ResistorSet,
    seeds: &BitSeeds,
) -> (ResistorChoice, ResistorChoice) {
    match cfg.selection_mode {
        SelectionMode::FixedLH => (set.choice(Level::Low), set.choice(Level::High)),
        SelectionMode::RandomizedLHHL => {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds.arrangement);
            let alice = select_bit(&mut rng, set);
            (alice, set.choice(alice.value.other()))
        }
        SelectionMode::FullyRandom => {
            let mut ra = ChaCha8Rng::seed_from_u64(seeds.alice_select);
            let mut rb = ChaCha8Rng::seed_from_u64(seeds.bob_select);
            (select_bit(&mut ra, set), select_bit(&mut rb, set))
        }
    }
}

/// Runs one complete bit exchange: resistor choice, generator synthesis,
/// loop solution with optional injection, and both parties' inference.
pub fn run_bit_exchange(
    cfg: &SimConfig,
    bit_index: u64,
    seeds: &BitSeeds,
    attack: Option<&InjectionSpec>,
) -> Result<BitExchangeRecord> {
    let set = cfg.resistor_set()?;
    let (alice, bob) = choose_pair(cfg, &set, seeds);
    let (u_alice, u_bob) = generator_voltages(cfg, alice, bob, seeds)?;

    let loop_cfg = LoopConfig {
        r_alice: alice.resistance,
        r_bob: bob.resistance,
        variant: cfg.variant(),
        injection_position: cfg.injection_position,
    };
    let line = cfg.cable_model()?;

    let (signals, injected) = match attack {
        None => (
            solve_loop(&loop_cfg, line.as_ref(), &u_alice, &u_bob, None)?,
            None,
        ),
        Some(spec) => {
            let (reference, clean) = match cfg.reference_mode {
                ReferenceMode::Analytic => (cfg.reference_current()?, None),
                ReferenceMode::Empirical => {
                    let clean = solve_loop(&loop_cfg, line.as_ref(), &u_alice, &u_bob, None)?;
                    (clean.i_cha.rms(), Some(clean))
                }
            };
            let spec = InjectionSpec {
                seed: seeds.eve_injection,
                ..*spec
            };
            match attack::injection_waveform(&spec, reference, cfg.tau_s, cfg.sample_rate_hz)? {
                Some(inj) => {
                    let s = solve_loop(&loop_cfg, line.as_ref(), &u_alice, &u_bob, Some(&inj))?;
                    (s, Some(inj))
                }
                None => match clean {
                    Some(c) => (c, None),
                    None => (
                        solve_loop(&loop_cfg, line.as_ref(), &u_alice, &u_bob, None)?,
                        None,
                    ),
                },
            }
        }
    };
    debug_assert_eq!(signals.sign_convention, SignConvention::Loop);

    let (t, b) = (cfg.t_eff, cfg.bandwidth_hz);
    let alice_inferred_remote =
        infer_remote_resistance(&signals.u_cha, &signals.i_cha, alice.resistance, t, b)?;
    let bob_inferred_remote =
        infer_remote_resistance(&signals.u_chb, &signals.i_chb, bob.resistance, t, b)?;
    let alice_decoded = decode_remote(&signals.u_cha, &signals.i_cha, alice, &set, t, b)?;
    let bob_decoded = decode_remote(&signals.u_chb, &signals.i_chb, bob, &set, t, b)?;

    Ok(BitExchangeRecord {
        index: bit_index,
        alice_choice: alice,
        bob_choice: bob,
        u_alice,
        u_bob,
        signals,
        injected,
        classification: classify_bit_pair(alice, bob),
        alice_inferred_remote,
        bob_inferred_remote,
        alice_decoded,
        bob_decoded,
    })
}

fn generator_voltages(
    cfg: &SimConfig,
    alice: ResistorChoice,
    bob: ResistorChoice,
    seeds: &BitSeeds,
) -> Result<(Waveform, Waveform)> {
    let spec = |r: f64, seed: u64| -> Result<NoiseSpec> {
        Ok(NoiseSpec {
            bandwidth_hz: cfg.bandwidth_hz,
            sample_rate_hz: cfg.sample_rate_hz,
            duration_s: cfg.tau_s,
            target_rms: johnson_rms_voltage(r, cfg.t_eff, cfg.bandwidth_hz)?,
            seed,
        })
    };
    let u_a = synth_band_limited_gaussian(&spec(alice.resistance, seeds.alice_noise)?)?;
    let u_b = synth_band_limited_gaussian(&spec(bob.resistance, seeds.bob_noise)?)?;
    Ok((u_a, u_b))
}
