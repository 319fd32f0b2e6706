//! Experiment configuration and its flat `key = value` file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::attack::{reference_rms_channel_current, InjectionSpec};
use crate::circuit::{CableModel, LineParameters, Variant, RG58};
use crate::defense::{DetectionConfig, DEFAULT_MULTIPLIER, DEFAULT_RELATIVE_FLOOR};
use crate::noise::{sample_count, MIN_OVERSAMPLING};
use crate::protocol::ResistorSet;
use crate::{Error, Result};

/// How Alice's and Bob's resistors are picked per bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Every bit is secure; LH or HL by a fair coin.
    RandomizedLHHL,
    /// Alice always `R_L`, Bob always `R_H`.
    FixedLH,
    /// Independent fair choice at each end; HH/LL bits get discarded.
    FullyRandom,
}

/// What "x % of the rms channel current" refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// `sqrt(4kTB/(R_L+R_H))`, the same in every bit and cell.
    Analytic,
    /// The measured rms of Alice's end current in the same bit without
    /// injection.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Ideal,
    Cable,
    CableWithKiller,
}

/// Full description of an experiment. Defaults are the reference setup:
/// 1 kΩ / 9 kΩ, 7.25·10¹⁶ K, 250 Hz, 0.1 s bit period, 10 000 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub r_l: f64,
    pub r_h: f64,
    pub t_eff: f64,
    pub bandwidth_hz: f64,
    pub tau_s: f64,
    pub sample_rate_hz: f64,
    pub n_bits: usize,
    pub variant_kind: VariantKind,
    pub cable_length_m: f64,
    pub n_segments: usize,
    pub line: LineParameters,
    pub injection_position: f64,
    /// Eve's injection level as a fraction of the reference current.
    pub injection_level: Option<f64>,
    pub reference_mode: ReferenceMode,
    /// Fixed detection threshold in amperes; `None` calibrates one.
    pub detection_threshold: Option<f64>,
    pub detection_consecutive: usize,
    pub detection_multiplier: f64,
    /// Floor on the calibrated residual rms, relative to the reference
    /// channel current; 0 disables it.
    pub detection_floor: f64,
    pub calibration_bits: usize,
    /// Relative error of the defenders' cable model parameters.
    pub defense_model_error: f64,
    pub selection_mode: SelectionMode,
    pub master_seed: u64,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            r_l: 1000.0,
            r_h: 9000.0,
            t_eff: 7.25e16,
            bandwidth_hz: 250.0,
            tau_s: 0.1,
            sample_rate_hz: 2000.0,
            n_bits: 10_000,
            variant_kind: VariantKind::Ideal,
            cable_length_m: 1000.0,
            n_segments: 10,
            line: RG58,
            injection_position: 0.5,
            injection_level: None,
            reference_mode: ReferenceMode::Analytic,
            detection_threshold: None,
            detection_consecutive: 1,
            detection_multiplier: DEFAULT_MULTIPLIER,
            detection_floor: DEFAULT_RELATIVE_FLOOR,
            calibration_bits: 20,
            defense_model_error: 0.0,
            selection_mode: SelectionMode::RandomizedLHHL,
            master_seed: 1,
            threads: 0,
        }
    }
}

impl SimConfig {
    pub fn variant(&self) -> Variant {
        match self.variant_kind {
            VariantKind::Ideal => Variant::Ideal,
            VariantKind::Cable => Variant::Cable {
                length_m: self.cable_length_m,
                n_segments: self.n_segments,
            },
            VariantKind::CableWithKiller => Variant::CableWithKiller {
                length_m: self.cable_length_m,
                n_segments: self.n_segments,
            },
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        match variant {
            Variant::Ideal => self.variant_kind = VariantKind::Ideal,
            Variant::Cable {
                length_m,
                n_segments,
            } => {
                self.variant_kind = VariantKind::Cable;
                self.cable_length_m = length_m;
                self.n_segments = n_segments;
            }
            Variant::CableWithKiller {
                length_m,
                n_segments,
            } => {
                self.variant_kind = VariantKind::CableWithKiller;
                self.cable_length_m = length_m;
                self.n_segments = n_segments;
            }
        }
        self
    }

    pub fn resistor_set(&self) -> Result<ResistorSet> {
        ResistorSet::new(self.r_l, self.r_h)
    }

    /// Truth cable model; `None` for the ideal wire.
    pub fn cable_model(&self) -> Result<Option<CableModel>> {
        let killer = match self.variant_kind {
            VariantKind::Ideal => return Ok(None),
            VariantKind::Cable => false,
            VariantKind::CableWithKiller => true,
        };
        let model = CableModel::new(self.line, self.cable_length_m, self.n_segments, killer)?;
        model.check_granularity(self.bandwidth_hz)?;
        Ok(Some(model))
    }

    pub fn reference_current(&self) -> Result<f64> {
        reference_rms_channel_current(self.r_l, self.r_h, self.t_eff, self.bandwidth_hz)
    }

    pub fn injection_spec(&self) -> Option<InjectionSpec> {
        self.injection_level.map(|level_fraction| InjectionSpec {
            level_fraction,
            bandwidth_hz: self.bandwidth_hz,
            seed: self.master_seed,
        })
    }

    pub fn samples_per_bit(&self) -> Result<usize> {
        sample_count(self.tau_s, self.sample_rate_hz)
    }

    pub fn fixed_detection(&self) -> Result<Option<DetectionConfig>> {
        self.detection_threshold
            .map(|t| DetectionConfig::new(t, self.detection_consecutive))
            .transpose()
    }

    pub fn validate(&self) -> Result<()> {
        self.resistor_set()?;
        for (key, v) in [
            ("t_eff", self.t_eff),
            ("bandwidth_hz", self.bandwidth_hz),
            ("tau_s", self.tau_s),
            ("sample_rate_hz", self.sample_rate_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.sample_rate_hz < MIN_OVERSAMPLING * self.bandwidth_hz {
            return Err(Error::config(
                "sample_rate_hz",
                format!("must be at least {MIN_OVERSAMPLING} x bandwidth_hz"),
            ));
        }
        sample_count(self.tau_s, self.sample_rate_hz)
            .map_err(|_| Error::config("tau_s", "tau_s x sample_rate_hz must be an integer"))?;
        if self.n_bits == 0 {
            return Err(Error::config("n_bits", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.injection_position) {
            return Err(Error::config("injection_position", "must lie in [0, 1]"));
        }
        if let Some(spec) = self.injection_spec() {
            spec.validate()?;
        }
        self.cable_model()?;
        if let Some(t) = self.detection_threshold {
            DetectionConfig::new(t, self.detection_consecutive)?;
        }
        if self.detection_consecutive == 0 {
            return Err(Error::config("detection_consecutive", "must be at least 1"));
        }
        if !(self.detection_multiplier.is_finite() && self.detection_multiplier > 0.0) {
            return Err(Error::config("detection_multiplier", "must be positive"));
        }
        if !(self.detection_floor.is_finite() && self.detection_floor >= 0.0) {
            return Err(Error::config("detection_floor", "must be non-negative"));
        }
        if !(self.defense_model_error.is_finite() && self.defense_model_error > -1.0) {
            return Err(Error::config(
                "defense_model_error",
                "must be greater than -1",
            ));
        }
        Ok(())
    }

    /// Renders every key; [`parse_config_str`] reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("r_l", self.r_l.to_string());
        kv("r_h", self.r_h.to_string());
        kv("t_eff", self.t_eff.to_string());
        kv("bandwidth_hz", self.bandwidth_hz.to_string());
        kv("tau_s", self.tau_s.to_string());
        kv("sample_rate_hz", self.sample_rate_hz.to_string());
        kv("n_bits", self.n_bits.to_string());
        kv(
            "variant",
            match self.variant_kind {
                VariantKind::Ideal => "ideal",
                VariantKind::Cable => "cable",
                VariantKind::CableWithKiller => "cable_killer",
            }
            .into(),
        );
        kv("cable_length_m", self.cable_length_m.to_string());
        kv("n_segments", self.n_segments.to_string());
        kv("r_per_m", self.line.r_per_m.to_string());
        kv("l_per_m", self.line.l_per_m.to_string());
        kv("c_per_m", self.line.c_per_m.to_string());
        kv("g_per_m", self.line.g_per_m.to_string());
        kv("injection_position", self.injection_position.to_string());
        kv(
            "injection_level",
            self.injection_level
                .map_or_else(|| "none".to_string(), |l| l.to_string()),
        );
        kv(
            "injection_reference",
            match self.reference_mode {
                ReferenceMode::Analytic => "analytic",
                ReferenceMode::Empirical => "empirical",
            }
            .into(),
        );
        kv(
            "detection_threshold",
            self.detection_threshold
                .map_or_else(|| "auto".to_string(), |t| t.to_string()),
        );
        kv(
            "detection_consecutive",
            self.detection_consecutive.to_string(),
        );
        kv(
            "detection_multiplier",
            self.detection_multiplier.to_string(),
        );
        kv("detection_floor", self.detection_floor.to_string());
        kv("calibration_bits", self.calibration_bits.to_string());
        kv("defense_model_error", self.defense_model_error.to_string());
        kv(
            "selection_mode",
            match self.selection_mode {
                SelectionMode::RandomizedLHHL => "randomized",
                SelectionMode::FixedLH => "fixed_lh",
                SelectionMode::FullyRandom => "fully_random",
            }
            .into(),
        );
        kv("master_seed", self.master_seed.to_string());
        kv("threads", self.threads.to_string());
        s
    }
}

fn parse_num<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse `{raw}`")))
}

fn parse_optional<T: FromStr>(key: &str, raw: &str, none_word: &str) -> Result<Option<T>> {
    if raw.eq_ignore_ascii_case(none_word) {
        Ok(None)
    } else {
        parse_num(key, raw).map(Some)
    }
}

/// Parses the flat `key = value` format. Blank lines and `#` comments are
/// ignored; missing keys keep their defaults.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim().to_string();
        if entries
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::config(key, "given more than once"));
        }
    }

    let mut c = SimConfig::default();
    for (key, raw) in &entries {
        let k = key.as_str();
        let raw = raw.as_str();
        match k {
            "r_l" => c.r_l = parse_num(k, raw)?,
            "r_h" => c.r_h = parse_num(k, raw)?,
            "t_eff" => c.t_eff = parse_num(k, raw)?,
            "bandwidth_hz" => c.bandwidth_hz = parse_num(k, raw)?,
            "tau_s" => c.tau_s = parse_num(k, raw)?,
            "sample_rate_hz" => c.sample_rate_hz = parse_num(k, raw)?,
            "n_bits" => c.n_bits = parse_num(k, raw)?,
            "variant" => {
                c.variant_kind = match raw {
                    "ideal" => VariantKind::Ideal,
                    "cable" => VariantKind::Cable,
                    "cable_killer" => VariantKind::CableWithKiller,
                    _ => {
                        return Err(Error::config(
                            k,
                            format!("expected ideal, cable or cable_killer, got `{raw}`"),
                        ))
                    }
                }
            }
            "cable_length_m" => c.cable_length_m = parse_num(k, raw)?,
            "n_segments" => c.n_segments = parse_num(k, raw)?,
            "r_per_m" => c.line.r_per_m = parse_num(k, raw)?,
            "l_per_m" => c.line.l_per_m = parse_num(k, raw)?,
            "c_per_m" => c.line.c_per_m = parse_num(k, raw)?,
            "g_per_m" => c.line.g_per_m = parse_num(k, raw)?,
            "injection_position" => c.injection_position = parse_num(k, raw)?,
            "injection_level" => c.injection_level = parse_optional(k, raw, "none")?,
            "injection_reference" => {
                c.reference_mode = match raw {
                    "analytic" => ReferenceMode::Analytic,
                    "empirical" => ReferenceMode::Empirical,
                    _ => {
                        return Err(Error::config(
                            k,
                            format!("expected analytic or empirical, got `{raw}`"),
                        ))
                    }
                }
            }
            "detection_threshold" => c.detection_threshold = parse_optional(k, raw, "auto")?,
            "detection_consecutive" => c.detection_consecutive = parse_num(k, raw)?,
            "detection_multiplier" => c.detection_multiplier = parse_num(k, raw)?,
            "detection_floor" => c.detection_floor = parse_num(k, raw)?,
            "calibration_bits" => c.calibration_bits = parse_num(k, raw)?,
            "defense_model_error" => c.defense_model_error = parse_num(k, raw)?,
            "selection_mode" => {
                c.selection_mode = match raw {
                    "randomized" => SelectionMode::RandomizedLHHL,
                    "fixed_lh" => SelectionMode::FixedLH,
                    "fully_random" => SelectionMode::FullyRandom,
                    _ => {
                        return Err(Error::config(
                            k,
                            format!("expected randomized, fixed_lh or fully_random, got `{raw}`"),
                        ))
                    }
                }
            }
            "master_seed" => c.master_seed = parse_num(k, raw)?,
            "threads" => c.threads = parse_num(k, raw)?,
            _ => return Err(Error::config(k, "unknown key")),
        }
    }
    c.validate()?;
    Ok(c)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}
