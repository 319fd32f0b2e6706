//! The KLJN loop: Alice's and Bob's Thevenin generators joined by either an
//! ideal wire or a lumped RLC ladder cable, with an optional ideal current
//! source where Eve injects.

mod cable;
mod ideal;
mod transient;

pub use cable::{build_cable_model, CableModel, LineParameters, RG58};
pub use ideal::{divider_fractions, solve_ideal_loop};
pub use transient::{
    drive_cable_ends, solve_cable_loop, step_transient, CableState, EndSample, LadderSolver,
    Termination,
};

use crate::{Error, Result, Waveform};

/// Which of the four loop variants is simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Ideal,
    Cable { length_m: f64, n_segments: usize },
    CableWithKiller { length_m: f64, n_segments: usize },
}

impl Variant {
    pub fn label(&self) -> String {
        match self {
            Variant::Ideal => "ideal".to_string(),
            Variant::Cable { length_m, .. } => format!("cable_{length_m}m"),
            Variant::CableWithKiller { length_m, .. } => format!("cable_{length_m}m_killer"),
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, Variant::Ideal)
    }
}

/// Resistances at both ends plus the line variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub r_alice: f64,
    pub r_bob: f64,
    pub variant: Variant,
    /// Where Eve's injection node sits, as a fraction of cable length.
    pub injection_position: f64,
}

impl LoopConfig {
    pub fn ideal(r_alice: f64, r_bob: f64) -> Self {
        Self {
            r_alice,
            r_bob,
            variant: Variant::Ideal,
            injection_position: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_alice.is_finite() && self.r_alice > 0.0) {
            return Err(Error::config("r_alice", "resistance must be positive"));
        }
        if !(self.r_bob.is_finite() && self.r_bob > 0.0) {
            return Err(Error::config("r_bob", "resistance must be positive"));
        }
        if !(0.0..=1.0).contains(&self.injection_position) {
            return Err(Error::config("injection_position", "must lie in [0, 1]"));
        }
        match self.variant {
            Variant::Ideal => Ok(()),
            Variant::Cable {
                length_m,
                n_segments,
            }
            | Variant::CableWithKiller {
                length_m,
                n_segments,
            } => {
                if !(length_m.is_finite() && length_m > 0.0) {
                    return Err(Error::config("cable_length_m", "must be positive"));
                }
                if n_segments == 0 {
                    return Err(Error::config("n_segments", "must be at least 1"));
                }
                Ok(())
            }
        }
    }

    /// Ladder node nearest to the injection position.
    pub fn injection_node(&self, n_segments: usize) -> usize {
        (self.injection_position * n_segments as f64).round() as usize
    }

    /// The same loop with Alice's and Bob's resistors exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            r_alice: self.r_bob,
            r_bob: self.r_alice,
            ..*self
        }
    }
}

/// Direction in which end currents are counted positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// Positive current circulates Alice → cable → Bob at both ends.
    Loop,
    /// Positive current at each end flows from the injection point outward,
    /// toward that end's resistor.
    DividerFromInjection,
}

/// Voltages and currents at the two cable ends over one bit period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSignals {
    pub i_cha: Waveform,
    pub i_chb: Waveform,
    pub u_cha: Waveform,
    pub u_chb: Waveform,
    pub sign_convention: SignConvention,
}

impl ChannelSignals {
    pub fn new(
        i_cha: Waveform,
        i_chb: Waveform,
        u_cha: Waveform,
        u_chb: Waveform,
        sign_convention: SignConvention,
    ) -> Result<Self> {
        i_cha.check_aligned(&i_chb)?;
        i_cha.check_aligned(&u_cha)?;
        i_cha.check_aligned(&u_chb)?;
        Ok(Self {
            i_cha,
            i_chb,
            u_cha,
            u_chb,
            sign_convention,
        })
    }

    /// Relabels the currents into `target`. The two conventions differ only
    /// in the sign of Alice's end current.
    pub fn to_convention(&self, target: SignConvention) -> ChannelSignals {
        if target == self.sign_convention {
            return self.clone();
        }
        ChannelSignals {
            i_cha: self.i_cha.scaled(-1.0),
            sign_convention: target,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.i_cha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_cha.is_empty()
    }
}

/// Solves the loop for any variant. `line` is required for cable variants
/// and its length, segmentation and killer flag must agree with
/// `cfg.variant`.
pub fn solve_loop(
    cfg: &LoopConfig,
    line: Option<&CableModel>,
    u_a: &Waveform,
    u_b: &Waveform,
    i_inj: Option<&Waveform>,
) -> Result<ChannelSignals> {
    match cfg.variant {
        Variant::Ideal => solve_ideal_loop(u_a, u_b, cfg, i_inj),
        _ => {
            let model = line
                .ok_or_else(|| Error::config("variant", "cable variant requires a cable model"))?;
            solve_cable_loop(model, cfg, u_a, u_b, i_inj)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convention_relabeling_negates_alice_only() {
        let w = |v: f64| Waveform::constant(v, 3, 10.0).unwrap();
        let s = ChannelSignals::new(w(1.0), w(2.0), w(3.0), w(4.0), SignConvention::Loop).unwrap();
        let d = s.to_convention(SignConvention::DividerFromInjection);
        assert_eq!(d.i_cha.samples(), &[-1.0; 3]);
        assert_eq!(d.i_chb, s.i_chb);
        assert_eq!(d.u_cha, s.u_cha);
        assert_eq!(d.to_convention(SignConvention::Loop), s);
        assert_eq!(s.to_convention(SignConvention::Loop), s);
    }

    #[test]
    fn injection_node_rounds_to_nearest() {
        let mut cfg = LoopConfig::ideal(1.0, 1.0);
        assert_eq!(cfg.injection_node(10), 5);
        cfg.injection_position = 0.33;
        assert_eq!(cfg.injection_node(10), 3);
        cfg.injection_position = 1.0;
        assert_eq!(cfg.injection_node(7), 7);
    }

    #[test]
    fn loop_config_validation() {
        assert!(LoopConfig::ideal(1000.0, 9000.0).validate().is_ok());
        assert!(LoopConfig::ideal(0.0, 9000.0).validate().is_err());
        let mut c = LoopConfig::ideal(1.0, 1.0);
        c.injection_position = 1.5;
        assert!(c.validate().is_err());
        c.injection_position = 0.5;
        c.variant = Variant::Cable {
            length_m: 100.0,
            n_segments: 0,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn signals_require_alignment() {
        let a = Waveform::constant(1.0, 3, 10.0).unwrap();
        let b = Waveform::constant(1.0, 4, 10.0).unwrap();
        assert!(ChannelSignals::new(a.clone(), a.clone(), a, b, SignConvention::Loop).is_err());
    }
}
