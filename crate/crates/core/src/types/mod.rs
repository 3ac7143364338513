//! Finite-alphabet distributions, empirical types and information measures.
//!
//! Logarithms are base 2 throughout. Empirical types keep their integer counts,
//! so enumeration code compares them exactly; the real-valued probabilities are
//! derived from the counts.

mod classes;
mod measures;
mod sequence;

pub use classes::{
    count_types, enumerate_types, multinomial, second_order_type, type_class_size,
    SecondOrderType, TypeClassIter,
};
pub use measures::{
    binary_entropy, concat_types, conditional_divergence, conditional_entropy, entropy,
    generalized_js, joint_entropy, kl_divergence, klogk, mi_from_counts, mutual_information,
    mutual_information_sets,
};
pub use sequence::{
    channel_string_probability, check_symbols, empirical_mi, empirical_type, joint_type,
    joint_type3,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A symbol is an index into a finite alphabet.
pub type Symbol = u8;

/// Largest alphabet the crate supports; `Symbol` must be able to index it.
pub const MAX_ALPHABET: usize = 256;

const SUM_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return domain("distribution over an empty alphabet");
    }
    if probs.len() > MAX_ALPHABET {
        return domain(format!("alphabet of size {} is too large", probs.len()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return domain(format!("invalid probability {p}"));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return domain(format!("probabilities sum to {s}, not 1"));
    }
    Ok(())
}

fn probs_from_counts(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// A probability vector; an n-type when it carries integer counts.
///
/// The type of the empty sequence is representable (`Distribution::empty`): all
/// counts zero, denominator zero. It is accepted only where zero-length parts are
/// meaningful (concatenation, Jensen–Shannon mixtures).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<u64>>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs)?;
        Ok(Self {
            probs,
            counts: None,
        })
    }

    /// The type with the given symbol counts; the denominator is their sum.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.len() > MAX_ALPHABET {
            return domain(format!("bad alphabet size {}", counts.len()));
        }
        if counts.iter().all(|&c| c == 0) {
            return domain("all-zero counts; use Distribution::empty for the empty type");
        }
        Ok(Self {
            probs: probs_from_counts(&counts),
            counts: Some(counts),
        })
    }

    /// The type of the empty sequence over an alphabet of size `k`.
    pub fn empty(k: usize) -> Self {
        Self {
            probs: vec![0.0; k],
            counts: Some(vec![0; k]),
        }
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return domain("uniform distribution over an empty alphabet");
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, a: usize) -> Result<Self> {
        if a >= k {
            return domain(format!("symbol {a} outside alphabet of size {k}"));
        }
        let mut p = vec![0.0; k];
        p[a] = 1.0;
        Self::new(p)
    }

    /// The n-type closest to `probs` (largest-remainder rounding).
    pub fn round_to_type(probs: &[f64], n: u64) -> Result<Self> {
        check_probs(probs)?;
        if n == 0 {
            return domain("cannot round to a 0-type");
        }
        let scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
        let mut missing = n - counts.iter().sum::<u64>().min(n);
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        Self::from_counts(counts)
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.probs[a]
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// `Some(n)` for an n-type (0 for the empty type).
    pub fn denominator(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    pub fn is_empty_type(&self) -> bool {
        self.denominator() == Some(0)
    }

    /// Support indices.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
    }

    /// Exact comparison of types; tolerance 1e-9 for plain distributions.
    pub fn same_as(&self, other: &Self) -> bool {
        match (&self.counts, &other.counts) {
            (Some(a), Some(b)) => a == b,
            _ => {
                self.probs.len() == other.probs.len()
                    && self
                        .probs
                        .iter()
                        .zip(&other.probs)
                        .all(|(a, b)| (a - b).abs() <= 1e-9)
            }
        }
    }
}

/// A joint distribution on two or three finite alphabets, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    dims: Vec<usize>,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<u64>>,
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if !(2..=3).contains(&dims.len()) {
        return domain(format!("joint distributions have arity 2 or 3, got {}", dims.len()));
    }
    if dims.iter().any(|&d| d == 0 || d > MAX_ALPHABET) {
        return domain(format!("bad axis sizes {dims:?}"));
    }
    if dims.iter().product::<usize>() != len {
        return domain(format!("{len} entries do not fit axes {dims:?}"));
    }
    Ok(())
}

impl JointDistribution {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        check_dims(&dims, probs.len())?;
        check_probs(&probs)?;
        Ok(Self {
            dims,
            probs,
            counts: None,
        })
    }

    pub fn from_counts(dims: Vec<usize>, counts: Vec<u64>) -> Result<Self> {
        check_dims(&dims, counts.len())?;
        if counts.iter().all(|&c| c == 0) {
            return domain("joint type of an empty sequence");
        }
        Ok(Self {
            probs: probs_from_counts(&counts),
            dims,
            counts: Some(counts),
        })
    }

    /// `p(x) w(y|x)` for an input distribution and a channel.
    pub fn from_channel(p: &Distribution, w: &crate::channel::ChannelMatrix) -> Result<Self> {
        if p.alphabet_size() != w.inputs() {
            return domain("input distribution and channel disagree on |X|");
        }
        let mut probs = Vec::with_capacity(w.inputs() * w.outputs());
        for x in 0..w.inputs() {
            probs.extend(w.row(x).iter().map(|v| p.prob(x) * v));
        }
        // Renormalize away rounding so the sum check cannot trip.
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= s);
        Self::new(vec![w.inputs(), w.outputs()], probs)
    }

    /// Product of two marginals.
    pub fn product(a: &Distribution, b: &Distribution) -> Result<Self> {
        let mut probs = Vec::with_capacity(a.alphabet_size() * b.alphabet_size());
        for &pa in a.probs() {
            probs.extend(b.probs().iter().map(|pb| pa * pb));
        }
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= s);
        Self::new(vec![a.alphabet_size(), b.alphabet_size()], probs)
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn denominator(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len() - 1).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let idx: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.probs[idx]
    }

    fn check_axes(&self, axes: &[usize]) -> Result<()> {
        for (i, &a) in axes.iter().enumerate() {
            if a >= self.dims.len() || axes[..i].contains(&a) {
                return domain(format!("bad axis list {axes:?} for arity {}", self.dims.len()));
            }
        }
        Ok(())
    }

    /// Probabilities (and counts, when exact) of the marginal on `axes`, in that order.
    pub(crate) fn project(&self, axes: &[usize]) -> Result<(Vec<usize>, Vec<f64>, Option<Vec<u64>>)> {
        self.check_axes(axes)?;
        let out_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let size: usize = out_dims.iter().product();
        let mut probs = vec![0.0; size];
        let mut counts = self.counts.as_ref().map(|_| vec![0u64; size]);
        let mut index = vec![0usize; self.dims.len()];
        for flat in 0..self.probs.len() {
            let mut out = 0;
            for &a in axes {
                out = out * self.dims[a] + index[a];
            }
            probs[out] += self.probs[flat];
            if let (Some(c), Some(src)) = (counts.as_mut(), self.counts.as_ref()) {
                c[out] += src[flat];
            }
            for k in (0..index.len()).rev() {
                index[k] += 1;
                if index[k] < self.dims[k] {
                    break;
                }
                index[k] = 0;
            }
        }
        Ok((out_dims, probs, counts))
    }

    pub fn marginal(&self, axis: usize) -> Result<Distribution> {
        let (_, probs, counts) = self.project(&[axis])?;
        match counts {
            Some(c) => Distribution::from_counts(c),
            None => {
                let s: f64 = probs.iter().sum();
                Distribution::new(probs.into_iter().map(|p| p / s).collect())
            }
        }
    }

    /// Two-axis marginal of an arity-3 joint (or a reordering of an arity-2 one).
    pub fn marginal_pair(&self, a: usize, b: usize) -> Result<JointDistribution> {
        let (dims, probs, counts) = self.project(&[a, b])?;
        match counts {
            Some(c) => Self::from_counts(dims, c),
            None => {
                let s: f64 = probs.iter().sum();
                Self::new(dims, probs.into_iter().map(|p| p / s).collect())
            }
        }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        if self.dims != other.dims {
            return false;
        }
        match (&self.counts, &other.counts) {
            (Some(a), Some(b)) => a == b,
            _ => self
                .probs
                .iter()
                .zip(&other.probs)
                .all(|(a, b)| (a - b).abs() <= 1e-9),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_vectors() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::from_counts(vec![0, 0]).is_err());
        assert!(JointDistribution::new(vec![2, 2], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn rounding_hits_denominator() {
        let d = Distribution::round_to_type(&[0.5, 0.3, 0.2], 7).unwrap();
        assert_eq!(d.denominator(), Some(7));
        assert_eq!(d.counts().unwrap(), &[4, 2, 1]);
        let u = Distribution::round_to_type(&[0.5, 0.5], 9).unwrap();
        assert_eq!(u.counts().unwrap(), &[5, 4]);
    }

    #[test]
    fn marginals_of_three_axes() {
        let counts: Vec<u64> = (1..=12).collect();
        let j = JointDistribution::from_counts(vec![2, 3, 2], counts).unwrap();
        let m1 = j.marginal(1).unwrap();
        // axis 1 index k collects entries (i,k,l): 1+2+7+8, 3+4+9+10, 5+6+11+12
        assert_eq!(m1.counts().unwrap(), &[18, 26, 34]);
        let p = j.marginal_pair(2, 0).unwrap();
        assert_eq!(p.dims(), &[2, 2]);
        assert_eq!(p.counts().unwrap(), &[1 + 3 + 5, 7 + 9 + 11, 2 + 4 + 6, 8 + 10 + 12]);
    }
}
