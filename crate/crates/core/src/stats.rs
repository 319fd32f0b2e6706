//! Small statistics helpers shared by the experiments and their tests.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Sample moments of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    /// Population (biased) moments. Panics on an empty slice.
    pub fn of(xs: &[f64]) -> Moments {
        assert!(!xs.is_empty(), "moments of an empty slice");
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        Moments {
            mean,
            variance: m2,
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        }
    }
}

/// A proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialEstimate {
    pub successes: usize,
    pub n: usize,
    pub p: f64,
    pub stderr: f64,
}

impl BinomialEstimate {
    pub fn new(successes: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("proportion over zero trials"));
        }
        if successes > n {
            return Err(Error::domain(format!("{successes} successes out of {n}")));
        }
        let p = successes as f64 / n as f64;
        Ok(Self {
            successes,
            n,
            p,
            stderr: binomial_stderr(p, n),
        })
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Result<Self> {
        let (mut hits, mut n) = (0, 0);
        for f in flags {
            n += 1;
            hits += usize::from(f);
        }
        Self::new(hits, n)
    }
}

/// `sqrt(p(1−p)/n)`.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two-sample Kolmogorov–Smirnov test. Returns `(D, p)` with the asymptotic
/// Kolmogorov distribution (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS test needs two non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok((d, kolmogorov_q(lambda)))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
