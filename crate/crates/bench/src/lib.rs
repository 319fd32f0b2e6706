//! Fixtures shared by the criterion benchmarks.

use kljn_core::harness::{derive_bit_seeds, BitSeeds, SimConfig, VariantKind};
use kljn_core::noise::NoiseSpec;

/// Default experiment on the given variant, with a 10 % attack.
pub fn attacked_config(variant_kind: VariantKind) -> SimConfig {
    SimConfig {
        variant_kind,
        injection_level: Some(0.1),
        threads: 1,
        ..SimConfig::default()
    }
}

/// One bit period of the default generator noise.
pub fn bit_noise_spec(seed: u64) -> NoiseSpec {
    let cfg = SimConfig::default();
    NoiseSpec {
        bandwidth_hz: cfg.bandwidth_hz,
        sample_rate_hz: cfg.sample_rate_hz,
        duration_s: cfg.tau_s,
        target_rms: 1.0,
        seed,
    }
}

pub fn seeds(cfg: &SimConfig, bit: u64) -> BitSeeds {
    derive_bit_seeds(cfg.master_seed, bit)
}
