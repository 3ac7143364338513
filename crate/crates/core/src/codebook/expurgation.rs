use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{mi_from_counts, multinomial, Symbol, TypeClassIter};

/// The γ-independence requirement: for every `r` with `r_min ≤ r ≤ ⌊l/2⌋`,
/// the length-r prefix and suffix have empirical mutual information below γ.
/// `r_min` defaults to `⌈(log₂ l)²⌉`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expurgation {
    pub gamma: f64,
    pub r_min_override: Option<usize>,
}

impl Expurgation {
    pub fn new(gamma: f64, r_min_override: Option<usize>) -> Self {
        Self {
            gamma,
            r_min_override,
        }
    }

    /// No expurgation at all.
    pub fn none() -> Self {
        Self::new(f64::INFINITY, None)
    }

    pub fn r_min(&self, l: usize) -> usize {
        self.r_min_override.unwrap_or_else(|| {
            let lg = (l as f64).log2();
            (lg * lg - 1e-9).ceil().max(1.0) as usize
        })
    }

    /// The `r` values that are tested for sequences of length `l` (possibly none).
    pub fn range(&self, l: usize) -> std::ops::RangeInclusive<usize> {
        self.r_min(l).max(1)..=l / 2
    }

    pub fn accepts(&self, x: &[Symbol], alphabet: usize) -> bool {
        is_gamma_independent(x, alphabet, self.gamma, self.r_min_override)
    }
}

pub fn is_gamma_independent(x: &[Symbol], alphabet: usize, gamma: f64, r_min_override: Option<usize>) -> bool {
    if gamma.is_infinite() {
        return true;
    }
    let l = x.len();
    let range = Expurgation::new(gamma, r_min_override).range(l);
    if range.is_empty() {
        return true;
    }
    let mut counts = vec![0u64; alphabet * alphabet];
    for r in range {
        counts.iter_mut().for_each(|c| *c = 0);
        for t in 0..r {
            counts[x[t] as usize * alphabet + x[l - r + t] as usize] += 1;
        }
        if mi_from_counts(&counts, alphabet, alphabet) >= gamma {
            return false;
        }
    }
    true
}

/// Uniform draw from the type class: a shuffle of the exact symbol multiset.
pub fn sample_uniform_type_class<R: Rng + ?Sized>(composition: &[u64], rng: &mut R) -> Vec<Symbol> {
    let mut v: Vec<Symbol> = Vec::with_capacity(composition.iter().sum::<u64>() as usize);
    for (a, &c) in composition.iter().enumerate() {
        v.extend(std::iter::repeat(a as Symbol).take(c as usize));
    }
    v.shuffle(rng);
    v
}

/// Rejection sampling from the γ-independent part of the type class.
pub fn sample_expurgated<R: Rng + ?Sized>(
    composition: &[u64],
    exp: &Expurgation,
    rng: &mut R,
    max_attempts: u64,
) -> Result<Vec<Symbol>> {
    let alphabet = composition.len();
    for _ in 0..max_attempts.max(1) {
        let x = sample_uniform_type_class(composition, rng);
        if exp.accepts(&x, alphabet) {
            return Ok(x);
        }
    }
    Err(Error::Sampling {
        attempts: max_attempts.max(1),
        rejection_rate: 1.0,
    })
}

/// `bad / total` as exact integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactFraction {
    pub bad: u128,
    pub total: u128,
}

impl ExactFraction {
    pub fn value(&self) -> f64 {
        self.bad as f64 / self.total as f64
    }
}

/// `|T_P \ T_P(γ)| / |T_P|` by walking the whole type class.
pub fn expurgation_fraction_exact(composition: &[u64], exp: &Expurgation, budget: u128) -> Result<ExactFraction> {
    let total = multinomial(composition).unwrap_or(u128::MAX);
    if total > budget {
        return Err(Error::Budget {
            what: "type class walk".into(),
            needed: total,
            budget,
        });
    }
    let alphabet = composition.len();
    let bad = TypeClassIter::new(composition)
        .filter(|x| !exp.accepts(x, alphabet))
        .count() as u128;
    Ok(ExactFraction { bad, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::collections::HashMap;

    #[test]
    fn independence_cases() {
        assert!(is_gamma_independent(&[1; 20], 2, 0.01, Some(2)));
        let alt: Vec<Symbol> = (0..10).map(|i| (i % 2) as Symbol).collect();
        assert!(!is_gamma_independent(&alt, 2, 0.5, Some(2)));
        // (log2 8)^2 = 9 > 4: nothing to test
        assert!(is_gamma_independent(&alt[..8], 2, 1e-6, None));
        assert_eq!(Expurgation::new(0.3, None).r_min(128), 49);
        assert_eq!(Expurgation::new(0.3, None).r_min(64), 36);
        assert_eq!(Expurgation::new(0.3, None).r_min(16), 16);
    }

    #[test]
    fn uniform_sampler_frequencies() {
        let mut r = rng::derive(5, &[]);
        let mut freq: HashMap<Vec<Symbol>, u32> = HashMap::new();
        let n = 60_000;
        for _ in 0..n {
            *freq.entry(sample_uniform_type_class(&[2, 2], &mut r)).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (_, &c) in &freq {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma, "count {c}");
        }
        assert_eq!(sample_uniform_type_class(&[0, 5], &mut r), vec![1; 5]);
    }

    #[test]
    fn trivial_fractions() {
        let loose = Expurgation::new(1.0, Some(2)); // MI ≤ log2|X| = 1 but "< 1" fails on diagonal
        let big = Expurgation::new(1.0 + 1e-9, Some(2));
        assert_eq!(expurgation_fraction_exact(&[5, 5], &big, 1 << 20).unwrap().bad, 0);
        assert!(expurgation_fraction_exact(&[5, 5], &loose, 1 << 20).unwrap().bad > 0);
        let empty = Expurgation::new(0.01, None);
        assert_eq!(expurgation_fraction_exact(&[5, 5], &empty, 1 << 20).unwrap().bad, 0);
        assert!(expurgation_fraction_exact(&[20, 20], &empty, 1000).is_err());
    }

    #[test]
    fn large_gamma_accepts_first_draw() {
        let exp = Expurgation::new(1.0 + 1e-9, Some(2));
        let mut a = rng::derive(1, &[]);
        let mut b = rng::derive(1, &[]);
        assert_eq!(
            sample_expurgated(&[6, 6], &exp, &mut a, 1).unwrap(),
            sample_uniform_type_class(&[6, 6], &mut b)
        );
        let impossible = Expurgation::new(-1.0, Some(2));
        assert!(matches!(
            sample_expurgated(&[0, 12], &impossible, &mut a, 3),
            Err(Error::Sampling { .. })
        ));
    }
}
