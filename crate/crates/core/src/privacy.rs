//! XOR-pair privacy amplification.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    True,
    EveGuess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBits {
    pub bits: Vec<bool>,
    pub provenance: Provenance,
}

impl KeyBits {
    pub fn new(bits: Vec<bool>, provenance: Provenance) -> Self {
        Self { bits, provenance }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// XORs each adjacent pair; an odd trailing bit is dropped.
pub fn xor_compress(key: &KeyBits) -> Result<KeyBits> {
    if key.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 bits to compress, got {}",
            key.len()
        )));
    }
    Ok(KeyBits {
        bits: key.bits.chunks_exact(2).map(|p| p[0] ^ p[1]).collect(),
        provenance: key.provenance,
    })
}

/// Eve's per-bit success after one XOR pass, assuming independent guesses:
/// she is right about a pair's XOR when she is right about both bits or wrong
/// about both.
pub fn predicted_leak_after_xor(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability out of range: {p}")));
    }
    Ok(p * p + (1.0 - p) * (1.0 - p))
}

/// Fraction of positions where Eve's key agrees with the true key after
/// `passes` rounds of XOR compression applied to both.
pub fn eve_success_after_amplification(
    true_key: &KeyBits,
    eve_key: &KeyBits,
    passes: usize,
) -> Result<f64> {
    if true_key.len() != eve_key.len() {
        return Err(Error::shape(format!(
            "key lengths differ: {} vs {}",
            true_key.len(),
            eve_key.len()
        )));
    }
    let (mut t, mut e) = (true_key.clone(), eve_key.clone());
    for _ in 0..passes {
        t = xor_compress(&t)?;
        e = xor_compress(&e)?;
    }
    if t.is_empty() {
        return Err(Error::domain("empty key"));
    }
    let agree = t.bits.iter().zip(&e.bits).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / t.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn key(bits: &[u8]) -> KeyBits {
        KeyBits::new(bits.iter().map(|&b| b == 1).collect(), Provenance::True)
    }

    #[test]
    fn xor_examples() {
        assert_eq!(xor_compress(&key(&[1, 0, 1, 1])).unwrap(), key(&[1, 0]));
        assert_eq!(xor_compress(&key(&[0; 8])).unwrap(), key(&[0; 4]));
        assert_eq!(xor_compress(&key(&[1, 1, 0, 1, 1])).unwrap().len(), 2);
        assert!(xor_compress(&key(&[1])).is_err());
    }

    #[test]
    fn closed_form_oracle_by_enumeration() {
        // Enumerate the four outcomes of two independent Bernoulli(p) hits.
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let mut agree = 0.0;
            for (h1, h2) in [(true, true), (true, false), (false, true), (false, false)] {
                let pr = (if h1 { p } else { 1.0 - p }) * (if h2 { p } else { 1.0 - p });
                if h1 == h2 {
                    agree += pr;
                }
            }
            assert!((predicted_leak_after_xor(p).unwrap() - agree).abs() < 1e-15);
        }
        let p1 = predicted_leak_after_xor(0.613).unwrap();
        assert!((p1 - 0.525_538).abs() < 1e-9);
        let p2 = predicted_leak_after_xor(p1).unwrap();
        assert!((p2 - 0.501_304).abs() < 1e-6);
        assert_eq!(predicted_leak_after_xor(0.5).unwrap(), 0.5);
        assert_eq!(predicted_leak_after_xor(1.0).unwrap(), 1.0);
        assert!(predicted_leak_after_xor(1.1).is_err());
    }

    #[test]
    fn amplification_of_identical_and_independent_keys() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bits: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
        let t = KeyBits::new(bits.clone(), Provenance::True);
        let e = KeyBits::new(bits, Provenance::EveGuess);
        for passes in 0..4 {
            assert_eq!(
                eve_success_after_amplification(&t, &e, passes).unwrap(),
                1.0
            );
        }
        let other = KeyBits::new(
            (0..10_000).map(|_| rng.random()).collect(),
            Provenance::EveGuess,
        );
        let p = eve_success_after_amplification(&t, &other, 1).unwrap();
        assert!((p - 0.5).abs() < 0.015 * 2f64.sqrt(), "{p}");
        let short = KeyBits::new(vec![true; 3], Provenance::EveGuess);
        assert!(matches!(
            eve_success_after_amplification(&t, &short, 1),
            Err(Error::Shape(_))
        ));
    }
}
