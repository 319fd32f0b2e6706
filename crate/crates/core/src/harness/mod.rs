//! Seeded Monte Carlo experiments over many bit exchanges.

mod config;
mod report;
mod seeds;

pub use config::{
    parse_config, parse_config_str, ReferenceMode, SelectionMode, SimConfig, VariantKind,
};
pub use report::{
    write_report, write_single_bit, DefenseReport, DefenseRow, DefenseStats, ExperimentReport,
    PrivacyReport, PrivacyStage, Table1Cell,
};
pub use seeds::{
    derive_bit_seeds, derive_bit_seeds_in, derive_seed, mix, BitSeeds, DOMAIN_CALIBRATION,
    DOMAIN_MAIN,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attack::{analytic_success_probability, attack_bit, AttackBit, AttackResult, Guess};
use crate::circuit::{CableModel, Variant};
use crate::defense::{
    calibrate_threshold_with_floor, compare_instantaneous_ideal, model_based_detect,
    simulate_expected_currents, DetectionConfig, DetectionVerdict,
};
use crate::privacy::{
    eve_success_after_amplification, predicted_leak_after_xor, KeyBits, Provenance,
};
use crate::protocol::{run_bit_exchange, BitExchangeRecord, Level};
use crate::stats::{binomial_stderr, BinomialEstimate};
use crate::{Error, Result, Waveform};

/// Injection level used by the defense and privacy experiments when the
/// config leaves it unset: the strongest attack of the grid.
pub const DEFAULT_ATTACK_LEVEL: f64 = 0.1;

/// Runs `f` for bit indices `0..n` and returns results in index order.
/// Output does not depend on the thread count.
pub fn map_bits<T, F>(threads: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if threads == 1 {
        return (0..n as u64).map(f).collect();
    }
    let run = || {
        (0..n as u64)
            .into_par_iter()
            .map(&f)
            .collect::<Result<Vec<T>>>()
    };
    if threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(run)
    }
}

/// Compact per-bit result kept by the Monte Carlo loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitOutcome {
    pub index: u64,
    pub secure: bool,
    pub honest_correct: bool,
    /// Key bit: `true` when Alice holds `R_H`.
    pub key_bit: bool,
    pub attack: Option<AttackBit>,
}

fn outcome(record: &BitExchangeRecord, coin_seed: u64) -> Result<BitOutcome> {
    let mut coin = ChaCha8Rng::seed_from_u64(coin_seed);
    Ok(BitOutcome {
        index: record.index,
        secure: record.classification.is_secure(),
        honest_correct: record.honest_correct(),
        key_bit: record.alice_choice.value == Level::High,
        attack: attack_bit(record, &mut coin)?,
    })
}

/// Simulates `cfg.n_bits` exchanges under the configured attack.
pub fn simulate_bits(cfg: &SimConfig) -> Result<Vec<BitOutcome>> {
    cfg.validate()?;
    let spec = cfg.injection_spec();
    map_bits(cfg.threads, cfg.n_bits, |i| {
        let seeds = derive_bit_seeds(cfg.master_seed, i);
        let rec = run_bit_exchange(cfg, i, &seeds, spec.as_ref())?;
        outcome(&rec, seeds.eve_coin)
    })
}

/// Eve's statistics over the secure bits of a run.
pub fn attack_result(outcomes: &[BitOutcome]) -> Result<AttackResult> {
    AttackResult::from_bits(outcomes.iter().filter_map(|o| o.attack).collect())
}

/// Fraction of secure bits where at least one party misidentified the other.
pub fn honest_error_rate(outcomes: &[BitOutcome]) -> Result<BinomialEstimate> {
    BinomialEstimate::from_flags(
        outcomes
            .iter()
            .filter(|o| o.secure)
            .map(|o| !o.honest_correct),
    )
}

/// Variants and injection levels of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Grid {
    pub variants: Vec<Variant>,
    pub levels: Vec<f64>,
}

impl Table1Grid {
    /// Ideal wire, 100 m and 1000 m RG58, and 1000 m with the capacitor
    /// killer, at 0.1 %, 1 % and 10 % injection.
    pub fn standard(n_segments: usize) -> Self {
        Self {
            variants: vec![
                Variant::Ideal,
                Variant::Cable {
                    length_m: 100.0,
                    n_segments,
                },
                Variant::Cable {
                    length_m: 1000.0,
                    n_segments,
                },
                Variant::CableWithKiller {
                    length_m: 1000.0,
                    n_segments,
                },
            ],
            levels: vec![0.001, 0.01, 0.1],
        }
    }
}

/// Eve's success probability for every variant × level cell. All cells share
/// the generator noise of the master seed.
pub fn run_table1(cfg: &SimConfig, grid: &Table1Grid) -> Result<ExperimentReport> {
    let mut cells = Vec::new();
    let mut honest = (0usize, 0usize);
    for &variant in &grid.variants {
        for &level in &grid.levels {
            let cell_cfg = SimConfig {
                injection_level: Some(level),
                ..cfg.with_variant(variant)
            };
            let outcomes = simulate_bits(&cell_cfg)?;
            let result = attack_result(&outcomes)?;
            let h = honest_error_rate(&outcomes)?;
            honest.0 += h.successes;
            honest.1 += h.n;
            cells.push(Table1Cell {
                variant: variant.label(),
                level,
                p_e: result.p_e,
                analytic_ideal: analytic_success_probability(
                    cfg.r_l,
                    cfg.r_h,
                    level,
                    cfg.bandwidth_hz,
                    cfg.tau_s,
                ),
            });
        }
    }
    Ok(ExperimentReport {
        config: *cfg,
        table1: Some(cells),
        honest_error: Some(BinomialEstimate::new(honest.0, honest.1)?),
        defense: None,
        privacy: None,
    })
}

/// The defenders' view of one bit: residual verdict under `detection`.
fn verdict(
    record: &BitExchangeRecord,
    defender_model: Option<&CableModel>,
    detection: &DetectionConfig,
) -> Result<DetectionVerdict> {
    let s = &record.signals;
    match defender_model {
        None => compare_instantaneous_ideal(&s.i_cha, &s.i_chb, detection),
        Some(model) => {
            let (ia, ib) = simulate_expected_currents(model, &s.u_cha, &s.u_chb)?;
            model_based_detect(s, (&ia, &ib), detection)
        }
    }
}

/// Residual traces for threshold calibration (both ends for a cable).
fn residuals(
    record: &BitExchangeRecord,
    defender_model: Option<&CableModel>,
) -> Result<Vec<Waveform>> {
    // Any positive threshold works here; only the traces are used.
    let probe = DetectionConfig::new(1.0, 1)?;
    let v = verdict(record, defender_model, &probe)?;
    Ok(std::iter::once(v.residual_trace)
        .chain(v.residual_trace_bob)
        .collect())
}

/// The defenders' cable model: the truth model, optionally perturbed.
pub fn defender_model(cfg: &SimConfig) -> Result<Option<CableModel>> {
    cfg.cable_model()?
        .map(|m| {
            if cfg.defense_model_error == 0.0 {
                Ok(m)
            } else {
                m.perturbed(cfg.defense_model_error)
            }
        })
        .transpose()
}

/// Calibrates the detection threshold on no-attack bits from the
/// calibration seed domain, unless the config fixes one.
pub fn detection_config(cfg: &SimConfig) -> Result<DetectionConfig> {
    if let Some(fixed) = cfg.fixed_detection()? {
        return Ok(fixed);
    }
    let model = defender_model(cfg)?;
    let traces = map_bits(cfg.threads, cfg.calibration_bits, |i| {
        let seeds = derive_bit_seeds_in(cfg.master_seed, DOMAIN_CALIBRATION, i);
        let rec = run_bit_exchange(cfg, i, &seeds, None)?;
        residuals(&rec, model.as_ref())
    })?;
    let pooled: Vec<Waveform> = traces.into_iter().flatten().collect();
    let floor = cfg.detection_floor * cfg.reference_current()?;
    let mut det = calibrate_threshold_with_floor(&pooled, cfg.detection_multiplier, floor)
        .map_err(|e| match e {
            Error::Domain(m) => Error::config("calibration_bits", m),
            other => other,
        })?;
    det.consecutive_samples = cfg.detection_consecutive;
    Ok(det)
}

/// Paired attacked / unattacked bits on the configured variant, judged by
/// the instantaneous comparison (ideal) or the model-based one (cable).
pub fn run_defense_experiment(cfg: &SimConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let level = cfg.injection_level.unwrap_or(DEFAULT_ATTACK_LEVEL);
    let attacked_cfg = SimConfig {
        injection_level: Some(level),
        ..*cfg
    };
    let spec = attacked_cfg
        .injection_spec()
        .expect("injection level is set");
    let detection = detection_config(cfg)?;
    let model = defender_model(cfg)?;

    struct Pair {
        clean: DetectionVerdict,
        attacked: DetectionVerdict,
        injected: Option<Waveform>,
    }
    let pairs = map_bits(cfg.threads, cfg.n_bits, |i| {
        let seeds = derive_bit_seeds(cfg.master_seed, i);
        let clean = run_bit_exchange(cfg, i, &seeds, None)?;
        let attacked = run_bit_exchange(&attacked_cfg, i, &seeds, Some(&spec))?;
        Ok(Pair {
            clean: verdict(&clean, model.as_ref(), &detection)?,
            attacked: verdict(&attacked, model.as_ref(), &detection)?,
            injected: if i == 0 { attacked.injected } else { None },
        })
    })?;

    let mut rows = Vec::with_capacity(2 * pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        for (attacked, v) in [(false, &p.clean), (true, &p.attacked)] {
            rows.push(DefenseRow {
                bit: i as u64,
                attacked,
                detected: v.attacked,
                latency_fraction: v.latency_fraction(),
                max_residual: v.max_residual,
            });
        }
    }
    let detection_rate = BinomialEstimate::from_flags(pairs.iter().map(|p| p.attacked.attacked))?;
    let false_positive = BinomialEstimate::from_flags(pairs.iter().map(|p| p.clean.attacked))?;
    let mut latencies: Vec<f64> = pairs
        .iter()
        .filter_map(|p| p.attacked.latency_fraction())
        .collect();
    latencies.sort_by(f64::total_cmp);
    let (mean_latency, median_latency) = if latencies.is_empty() {
        (None, None)
    } else {
        let mean = latencies.iter().sum::<f64>() / latencies.len() as f64;
        (Some(mean), Some(median(&latencies)))
    };

    let first = pairs.into_iter().next().expect("n_bits >= 1");
    Ok(ExperimentReport {
        config: *cfg,
        table1: None,
        honest_error: None,
        defense: Some(DefenseReport {
            stats: DefenseStats {
                level,
                threshold: detection.threshold,
                calibration_rms: detection.calibration,
                detection_rate,
                false_positive,
                mean_latency_fraction: mean_latency,
                median_latency_fraction: median_latency,
            },
            rows,
            trace_attacked: first.attacked.residual_trace,
            trace_clean: first.clean.residual_trace,
            first_injected: first.injected,
        }),
        privacy: None,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Eve's success before and after one and two XOR passes, measured by
/// pushing her guessed key through the same compression as the true key,
/// alongside the independent-guess prediction.
pub fn run_privacy_experiment(cfg: &SimConfig) -> Result<ExperimentReport> {
    let cfg = SimConfig {
        injection_level: Some(cfg.injection_level.unwrap_or(DEFAULT_ATTACK_LEVEL)),
        ..*cfg
    };
    let outcomes = simulate_bits(&cfg)?;
    let mut truth = Vec::new();
    let mut guess = Vec::new();
    for o in &outcomes {
        if let Some(a) = o.attack {
            truth.push(o.key_bit);
            guess.push(a.guess == Guess::HL);
        }
    }
    let true_key = KeyBits::new(truth, Provenance::True);
    let eve_key = KeyBits::new(guess, Provenance::EveGuess);

    let mut stages = Vec::new();
    let mut predicted = None;
    for pass in 0..=2usize {
        let len = true_key.len() >> pass;
        if len == 0 {
            break;
        }
        let p = eve_success_after_amplification(&true_key, &eve_key, pass)?;
        let pred = match predicted {
            None => p,
            Some(prev) => predicted_leak_after_xor(prev)?,
        };
        predicted = Some(pred);
        stages.push(PrivacyStage {
            stage: pass,
            p_e: p,
            stderr: binomial_stderr(p, len),
            key_length: len,
            predicted: pred,
        });
    }
    Ok(ExperimentReport {
        config: cfg,
        table1: None,
        honest_error: Some(honest_error_rate(&outcomes)?),
        defense: None,
        privacy: Some(PrivacyReport { stages }),
    })
}

/// One fully recorded bit exchange, for inspection.
pub fn run_single_bit(cfg: &SimConfig, bit_index: u64) -> Result<BitExchangeRecord> {
    cfg.validate()?;
    let seeds = derive_bit_seeds(cfg.master_seed, bit_index);
    run_bit_exchange(cfg, bit_index, &seeds, cfg.injection_spec().as_ref())
}
