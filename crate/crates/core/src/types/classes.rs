use super::{joint_type, Distribution, JointDistribution, Symbol};
use crate::error::{domain, Error, Result};

/// `n! / Π c_i!` with overflow detection.
pub fn multinomial(counts: &[u64]) -> Option<u128> {
    // Build up as a product of binomials C(n_so_far + c, c), each computed
    // incrementally so intermediate values stay exact integers.
    let mut total: u128 = 1;
    let mut n: u128 = 0;
    for &c in counts {
        for j in 1..=c as u128 {
            n += 1;
            // total * n / j is exact: total·C(n-1... ) stays integral at each step.
            total = total.checked_mul(n)? / j;
        }
    }
    Some(total)
}

/// `|T_P|` for an exact type `P`.
pub fn type_class_size(p: &Distribution) -> Result<u128> {
    let counts = p
        .counts()
        .ok_or_else(|| Error::Domain("type class size of a non-type".into()))?;
    multinomial(counts).ok_or_else(|| Error::Budget {
        what: "type class size".into(),
        needed: u128::MAX,
        budget: u128::MAX,
    })
}

/// `|P^n(X)| = C(n+k−1, k−1)`.
pub fn count_types(n: u64, k: usize) -> u128 {
    let mut c: u128 = 1;
    for j in 1..k as u128 {
        c = c * (n as u128 + j) / j;
    }
    c
}

/// All count vectors of length `k` summing to `n`, in lexicographic order.
pub fn enumerate_types(n: u64, k: usize) -> Vec<Vec<u64>> {
    fn rec(prefix: &mut Vec<u64>, left: u64, k: usize, out: &mut Vec<Vec<u64>>) {
        if prefix.len() + 1 == k {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(prefix, left - c, k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(&mut Vec::with_capacity(k), n, k, &mut out);
    }
    out
}

/// Iterates over the type class of a count vector in lexicographic order.
pub struct TypeClassIter {
    current: Option<Vec<Symbol>>,
}

impl TypeClassIter {
    pub fn new(counts: &[u64]) -> Self {
        let mut first = Vec::new();
        for (a, &c) in counts.iter().enumerate() {
            first.extend(std::iter::repeat(a as Symbol).take(c as usize));
        }
        Self {
            current: Some(first),
        }
    }
}

impl Iterator for TypeClassIter {
    type Item = Vec<Symbol>;

    fn next(&mut self) -> Option<Vec<Symbol>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        // Standard next-permutation over a multiset.
        let n = next.len();
        if n >= 2 {
            if let Some(i) = (0..n - 1).rev().find(|&i| next[i] < next[i + 1]) {
                let j = (i + 1..n).rev().find(|&j| next[j] > next[i]).unwrap();
                next.swap(i, j);
                next[i + 1..].reverse();
                self.current = Some(next);
            }
        }
        Some(out)
    }
}

/// Joint type of `(x_1..x_{n-1})` with its shift `(x_2..x_n)`, plus the first symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderType {
    pub base: JointDistribution,
    pub first_symbol: Symbol,
    pub length: usize,
}

impl SecondOrderType {
    /// Hashable identity: (pair counts, first symbol).
    pub fn key(&self) -> (Vec<u64>, Symbol) {
        (
            self.base.counts().expect("second-order types are exact").to_vec(),
            self.first_symbol,
        )
    }
}

pub fn second_order_type(seq: &[Symbol], k: usize) -> Result<SecondOrderType> {
    if seq.len() < 2 {
        return domain("second-order type needs length at least 2");
    }
    Ok(SecondOrderType {
        base: joint_type(&seq[..seq.len() - 1], &seq[1..], k, k)?,
        first_symbol: seq[0],
        length: seq.len(),
    })
}
