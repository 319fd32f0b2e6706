//! Seed derivation.
//!
//! Every random stream in a bit exchange gets its own 64-bit seed computed
//! from `(master_seed, domain, bit_index, role)` by chained SplitMix64
//! finalization:
//!
//! ```text
//! seed = mix(mix(mix(mix(master) ^ domain) ^ bit_index) ^ role)
//! ```
//!
//! A seed depends only on its own bit index, so running more bits never
//! changes the earlier ones, and bits can be simulated in any order.

/// Bits of the main experiment.
pub const DOMAIN_MAIN: u64 = 0;
/// No-attack bits used to calibrate the detection threshold.
pub const DOMAIN_CALIBRATION: u64 = 1;

const ROLE_ARRANGEMENT: u64 = 1;
const ROLE_ALICE_SELECT: u64 = 2;
const ROLE_BOB_SELECT: u64 = 3;
const ROLE_ALICE_NOISE: u64 = 4;
const ROLE_BOB_NOISE: u64 = 5;
const ROLE_EVE_INJECTION: u64 = 6;
const ROLE_EVE_COIN: u64 = 7;

/// SplitMix64 output function.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, domain: u64, bit_index: u64, role: u64) -> u64 {
    mix(mix(mix(mix(master) ^ domain) ^ bit_index) ^ role)
}

/// Seeds for every random stream of one bit exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitSeeds {
    pub arrangement: u64,
    pub alice_select: u64,
    pub bob_select: u64,
    pub alice_noise: u64,
    pub bob_noise: u64,
    pub eve_injection: u64,
    pub eve_coin: u64,
}

pub fn derive_bit_seeds_in(master: u64, domain: u64, bit_index: u64) -> BitSeeds {
    let s = |role| derive_seed(master, domain, bit_index, role);
    BitSeeds {
        arrangement: s(ROLE_ARRANGEMENT),
        alice_select: s(ROLE_ALICE_SELECT),
        bob_select: s(ROLE_BOB_SELECT),
        alice_noise: s(ROLE_ALICE_NOISE),
        bob_noise: s(ROLE_BOB_NOISE),
        eve_injection: s(ROLE_EVE_INJECTION),
        eve_coin: s(ROLE_EVE_COIN),
    }
}

pub fn derive_bit_seeds(master: u64, bit_index: u64) -> BitSeeds {
    derive_bit_seeds_in(master, DOMAIN_MAIN, bit_index)
}
