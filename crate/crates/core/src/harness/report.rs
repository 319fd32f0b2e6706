//! Experiment reports and their CSV / text output.
//!
//! Files written by [`write_report`], depending on which experiments ran:
//!
//! | file | columns |
//! |------|---------|
//! | `table1.csv` | `variant,level,p_e,stderr,n` |
//! | `defense.csv` | `bit,attacked,detected,latency_fraction,max_residual` |
//! | `residual_trace_attacked.csv`, `residual_trace_clean.csv` | `time_s,residual_A` |
//! | `privacy.csv` | `stage,p_e,stderr,key_length` |
//! | `config.txt` | the effective configuration, re-parseable |
//! | `summary.txt` | human-readable summary |
//!
//! Numbers use Rust's shortest round-trip formatting, so identical runs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::SimConfig;
use crate::protocol::BitExchangeRecord;
use crate::stats::BinomialEstimate;
use crate::{Error, Result, Waveform};

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Cell {
    pub variant: String,
    pub level: f64,
    pub p_e: BinomialEstimate,
    /// Closed-form ideal-loop prediction at this level.
    pub analytic_ideal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseRow {
    pub bit: u64,
    /// Whether Eve injected in this bit.
    pub attacked: bool,
    pub detected: bool,
    pub latency_fraction: Option<f64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseStats {
    pub level: f64,
    pub threshold: f64,
    pub calibration_rms: Option<f64>,
    pub detection_rate: BinomialEstimate,
    pub false_positive: BinomialEstimate,
    pub mean_latency_fraction: Option<f64>,
    pub median_latency_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseReport {
    pub stats: DefenseStats,
    pub rows: Vec<DefenseRow>,
    /// Alice-end residual of bit 0 with and without injection.
    pub trace_attacked: Waveform,
    pub trace_clean: Waveform,
    pub first_injected: Option<Waveform>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyStage {
    /// Number of XOR passes applied.
    pub stage: usize,
    pub p_e: f64,
    pub stderr: f64,
    pub key_length: usize,
    /// Independent-guess prediction chained from the stage-0 measurement.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub stages: Vec<PrivacyStage>,
}

impl PrivacyReport {
    pub fn stage(&self, pass: usize) -> Option<&PrivacyStage> {
        self.stages.iter().find(|s| s.stage == pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: SimConfig,
    pub table1: Option<Vec<Table1Cell>>,
    pub honest_error: Option<BinomialEstimate>,
    pub defense: Option<DefenseReport>,
    pub privacy: Option<PrivacyReport>,
}

impl ExperimentReport {
    pub fn table1_cell(&self, variant: &str, level: f64) -> Option<&Table1Cell> {
        self.table1
            .as_ref()?
            .iter()
            .find(|c| c.variant == variant && c.level == level)
    }

    pub fn table1_csv(&self) -> Option<String> {
        let cells = self.table1.as_ref()?;
        let mut s = String::from("variant,level,p_e,stderr,n\n");
        for c in cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                c.variant, c.level, c.p_e.p, c.p_e.stderr, c.p_e.n
            );
        }
        Some(s)
    }

    pub fn defense_csv(&self) -> Option<String> {
        let d = self.defense.as_ref()?;
        let mut s = String::from("bit,attacked,detected,latency_fraction,max_residual\n");
        for r in &d.rows {
            let latency = r.latency_fraction.map_or(String::new(), |l| l.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.bit, r.attacked, r.detected, latency, r.max_residual
            );
        }
        Some(s)
    }

    pub fn privacy_csv(&self) -> Option<String> {
        let p = self.privacy.as_ref()?;
        let mut s = String::from("stage,p_e,stderr,key_length\n");
        for st in &p.stages {
            let _ = writeln!(s, "{},{},{},{}", st.stage, st.p_e, st.stderr, st.key_length);
        }
        Some(s)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(
            s,
            "KLJN current-injection simulation (master_seed = {}, n_bits = {})",
            c.master_seed, c.n_bits
        );
        let _ = writeln!(
            s,
            "R_L = {} ohm, R_H = {} ohm, T_eff = {:e} K, B = {} Hz, tau = {} s, fs = {} Hz",
            c.r_l, c.r_h, c.t_eff, c.bandwidth_hz, c.tau_s, c.sample_rate_hz
        );
        if let Some(cells) = &self.table1 {
            let _ = writeln!(s, "\nEve's success probability p_E (secure bits only)");
            let _ = writeln!(
                s,
                "{:<22} {:>8} {:>8} {:>9} {:>7} {:>12}",
                "variant", "level", "p_E", "stderr", "n", "ideal-theory"
            );
            for cell in cells {
                let _ = writeln!(
                    s,
                    "{:<22} {:>7.1}% {:>8.4} {:>9.5} {:>7} {:>12.4}",
                    cell.variant,
                    cell.level * 100.0,
                    cell.p_e.p,
                    cell.p_e.stderr,
                    cell.p_e.n,
                    cell.analytic_ideal
                );
            }
        }
        if let Some(h) = &self.honest_error {
            let _ = writeln!(
                s,
                "\nhonest-party bit error rate: {:.5} +/- {:.5} (n = {})",
                h.p, h.stderr, h.n
            );
        }
        if let Some(d) = &self.defense {
            let st = &d.stats;
            let _ = writeln!(s, "\nDefense at {}% injection", st.level * 100.0);
            let _ = writeln!(s, "threshold: {:e} A", st.threshold);
            if let Some(cal) = st.calibration_rms {
                let _ = writeln!(s, "no-attack residual rms: {cal:e} A");
            }
            let _ = writeln!(
                s,
                "detection rate: {:.4} +/- {:.4} (n = {})",
                st.detection_rate.p, st.detection_rate.stderr, st.detection_rate.n
            );
            let _ = writeln!(
                s,
                "false positive rate: {:.4} +/- {:.4} (n = {})",
                st.false_positive.p, st.false_positive.stderr, st.false_positive.n
            );
            if let (Some(mean), Some(med)) = (st.mean_latency_fraction, st.median_latency_fraction)
            {
                let _ = writeln!(
                    s,
                    "latency (fraction of bit period): mean {mean:.5}, median {med:.5}"
                );
            }
        }
        if let Some(p) = &self.privacy {
            let _ = writeln!(s, "\nPrivacy amplification (XOR of adjacent pairs)");
            let _ = writeln!(
                s,
                "{:>6} {:>8} {:>9} {:>10} {:>10}",
                "passes", "p_E", "stderr", "key_len", "predicted"
            );
            for st in &p.stages {
                let _ = writeln!(
                    s,
                    "{:>6} {:>8.4} {:>9.5} {:>10} {:>10.4}",
                    st.stage, st.p_e, st.stderr, st.key_length, st.predicted
                );
            }
        }
        s
    }
}

fn trace_csv(w: &Waveform) -> String {
    let mut s = String::from("time_s,residual_A\n");
    for (i, r) in w.samples().iter().enumerate() {
        let _ = writeln!(s, "{},{}", w.time_of(i), r);
    }
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Writes every CSV the report has data for, plus `config.txt` and
/// `summary.txt`, into `out_dir` (created if missing).
pub fn write_report(report: &ExperimentReport, out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if let Some(csv) = report.table1_csv() {
        write_file(dir, "table1.csv", &csv)?;
    }
    if let Some(csv) = report.defense_csv() {
        write_file(dir, "defense.csv", &csv)?;
    }
    if let Some(d) = &report.defense {
        write_file(
            dir,
            "residual_trace_attacked.csv",
            &trace_csv(&d.trace_attacked),
        )?;
        write_file(dir, "residual_trace_clean.csv", &trace_csv(&d.trace_clean))?;
    }
    if let Some(csv) = report.privacy_csv() {
        write_file(dir, "privacy.csv", &csv)?;
    }
    write_file(dir, "config.txt", &report.config.to_config_string())?;
    write_file(dir, "summary.txt", &report.summary())
}

/// Dumps every waveform of one exchange to `single_bit.csv` (loop
/// convention currents) with a short `single_bit.txt` description.
pub fn write_single_bit(record: &BitExchangeRecord, out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = &record.signals;
    let mut csv =
        String::from("time_s,u_alice_V,u_bob_V,i_inj_A,i_cha_A,i_chb_A,u_cha_V,u_chb_V\n");
    for k in 0..s.len() {
        let inj = record.injected.as_ref().map_or(0.0, |w| w.samples()[k]);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            s.i_cha.time_of(k),
            record.u_alice.samples()[k],
            record.u_bob.samples()[k],
            inj,
            s.i_cha.samples()[k],
            s.i_chb.samples()[k],
            s.u_cha.samples()[k],
            s.u_chb.samples()[k],
        );
    }
    write_file(dir, "single_bit.csv", &csv)?;
    let mut txt = String::new();
    let _ = writeln!(
        txt,
        "bit {}: {}",
        record.index,
        record.classification.label()
    );
    let _ = writeln!(
        txt,
        "alice: {:?} ({} ohm), infers remote {:.1} ohm, decodes {:?}",
        record.alice_choice.value,
        record.alice_choice.resistance,
        record.alice_inferred_remote,
        record.alice_decoded
    );
    let _ = writeln!(
        txt,
        "bob:   {:?} ({} ohm), infers remote {:.1} ohm, decodes {:?}",
        record.bob_choice.value,
        record.bob_choice.resistance,
        record.bob_inferred_remote,
        record.bob_decoded
    );
    let _ = writeln!(txt, "injection: {}", record.injected.is_some());
    write_file(dir, "single_bit.txt", &txt)
}
