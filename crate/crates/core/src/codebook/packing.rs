//! The packing statistic: how many codeword tuples of a library realize a given
//! subtype sequence when one codeword is laid over a run of others.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CodebookLibrary, LibraryParams};
use crate::error::{domain, Error, Result};
use crate::lq_array::{LqGeometry, SubtypeCounter, SubtypeKey, SubtypeSequence};
use crate::types::{generalized_js, mutual_information, Symbol};

/// `(k̂, k_1..k_g)` and the offset `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PackingIndex {
    pub k_hat: usize,
    pub ks: Vec<usize>,
    pub q: usize,
}

impl PackingIndex {
    pub fn geometry(&self, params: &LibraryParams) -> LqGeometry {
        LqGeometry::new(
            params.books[self.k_hat].length,
            self.ks.iter().map(|&k| params.books[k].length).collect(),
            self.q,
        )
    }

    /// The single-word, zero-offset, same-book case where `â = a_1` is skipped.
    pub fn excludes_self_pair(&self) -> bool {
        self.ks.len() == 1 && self.ks[0] == self.k_hat && self.q == 0
    }
}

/// Every `(k, q)` whose array satisfies both overlap conditions and the cover
/// condition `l̂ ≤ Σ l^{k_i} − q`.
pub fn admissible_indices(params: &LibraryParams) -> Vec<PackingIndex> {
    fn extend(params: &LibraryParams, k_hat: usize, ks: &mut Vec<usize>, out: &mut Vec<PackingIndex>) {
        let l_hat = params.books[k_hat].length;
        for k in 0..params.m() {
            ks.push(k);
            let last = params.books[k].length;
            for q in 0..last {
                let idx = PackingIndex {
                    k_hat,
                    ks: ks.clone(),
                    q,
                };
                if idx.geometry(params).validate(true).is_ok() {
                    out.push(idx);
                }
            }
            // Words after the first must fit strictly inside x̂'s span.
            let inner: usize = ks[1..].iter().map(|&k| params.books[k].length).sum();
            if inner < l_hat {
                extend(params, k_hat, ks, out);
            }
            ks.pop();
        }
    }
    let mut out = Vec::new();
    for k_hat in 0..params.m() {
        extend(params, k_hat, &mut Vec::new(), &mut out);
    }
    out
}

struct Tuples<'a> {
    lib: &'a CodebookLibrary,
    idx: &'a PackingIndex,
    counter: SubtypeCounter,
}

impl<'a> Tuples<'a> {
    fn new(lib: &'a CodebookLibrary, idx: &'a PackingIndex, budget: u128) -> Result<Self> {
        let params = &lib.params;
        if idx.k_hat >= params.m() || idx.ks.is_empty() || idx.ks.iter().any(|&k| k >= params.m()) {
            return domain(format!("packing index {idx:?} refers to missing books"));
        }
        let geom = idx.geometry(params);
        geom.validate(true)
            .map_err(|v| Error::Domain(format!("packing index {idx:?}: {v}")))?;
        let mut count: Option<u128> = Some(lib.book(idx.k_hat).len() as u128);
        for &k in &idx.ks {
            count = count.and_then(|c| c.checked_mul(lib.book(k).len() as u128));
        }
        let count = count.unwrap_or(u128::MAX);
        if count > budget {
            return Err(Error::Budget {
                what: "packing tuples".into(),
                needed: count,
                budget,
            });
        }
        Ok(Self {
            lib,
            idx,
            counter: SubtypeCounter::new(&geom, params.alphabet, None)?,
        })
    }

    /// Calls `f` with the flat subtype counts of every admissible tuple.
    fn for_each(&self, mut f: impl FnMut(&[u64])) {
        let lib = self.lib;
        let hat_book = lib.book(self.idx.k_hat);
        let books: Vec<_> = self.idx.ks.iter().map(|&k| lib.book(k)).collect();
        let mut a = vec![0usize; books.len()];
        let mut buf = Vec::new();
        let mut xs: Vec<&[Symbol]> = Vec::with_capacity(books.len());
        for a_hat in 0..hat_book.len() {
            a.iter_mut().for_each(|v| *v = 0);
            'tuples: loop {
                if !(self.idx.excludes_self_pair() && a[0] == a_hat) {
                    xs.clear();
                    xs.extend(books.iter().zip(&a).map(|(b, &i)| b.codeword(i)));
                    self.counter.fill(hat_book.codeword(a_hat), &xs, None, &mut buf);
                    f(&buf);
                }
                for i in (0..a.len()).rev() {
                    a[i] += 1;
                    if a[i] < books[i].len() {
                        continue 'tuples;
                    }
                    a[i] = 0;
                }
                break;
            }
        }
    }
}

/// `K^{k,q}[V]`: number of codeword-index tuples whose array has subtype `v`.
pub fn packing_statistic(lib: &CodebookLibrary, idx: &PackingIndex, v: &SubtypeSequence, budget: u128) -> Result<u128> {
    let t = Tuples::new(lib, idx, budget)?;
    let Some(target) = t.counter.encode(v) else {
        return Ok(0);
    };
    let mut k = 0u128;
    t.for_each(|flat| {
        if flat == target.as_slice() {
            k += 1;
        }
    });
    Ok(k)
}

/// All subtype sequences realized by the library at `(k, q)`, with their `K`.
pub fn packing_census(
    lib: &CodebookLibrary,
    idx: &PackingIndex,
    budget: u128,
) -> Result<BTreeMap<SubtypeKey, (SubtypeSequence, u128)>> {
    let t = Tuples::new(lib, idx, budget)?;
    let mut tally: BTreeMap<Vec<u64>, u128> = BTreeMap::new();
    t.for_each(|flat| *tally.entry(flat.to_vec()).or_default() += 1);
    let mut out = BTreeMap::new();
    for (flat, n) in tally {
        let v = t.counter.decode(&flat)?;
        out.insert(v.key(), (v, n));
    }
    Ok(out)
}

/// `E^{k,q}[V] = −Σ n_i I_{V_i}(X∧X̂) − l̂·J(V_2^{X̂},…,V_{g+1}^{X̂}) + Σ l^{k_i}R^{k_i} + l̂ R^{k̂}`.
pub fn packing_bound_exponent(idx: &PackingIndex, v: &SubtypeSequence, params: &LibraryParams) -> Result<f64> {
    if v.g() != idx.ks.len() {
        return domain("subtype sequence does not match the packing index");
    }
    let l_hat = params.books[idx.k_hat].length as f64;
    let mut info = 0.0;
    let mut hats = Vec::with_capacity(v.g());
    for m in v.middles() {
        let n = m.denominator().unwrap_or(0);
        info += n as f64 * mutual_information(m, 0, 1)?;
        hats.push((m.marginal(0)?, n));
    }
    let parts: Vec<_> = hats.iter().map(|(d, n)| (d, *n)).collect();
    let js = generalized_js(&parts)?;
    let rates: f64 = idx
        .ks
        .iter()
        .map(|&k| params.books[k].length as f64 * params.books[k].rate)
        .sum::<f64>()
        + l_hat * params.books[idx.k_hat].rate;
    Ok(-info - l_hat * js + rates)
}

/// `S = Σ_{k,q,V} K^{k,q}[V]·2^{−E^{k,q}[V]}` over every admissible `(k, q)`.
/// `budget` caps the total number of tuples visited.
pub fn library_score(lib: &CodebookLibrary, budget: u128) -> Result<f64> {
    let mut left = budget;
    let mut s = 0.0;
    for idx in admissible_indices(&lib.params) {
        let census = packing_census(lib, &idx, left)?;
        let visited: u128 = census.values().map(|(_, k)| *k).sum();
        left = left.saturating_sub(visited);
        for (v, k) in census.values() {
            s += *k as f64 * (-packing_bound_exponent(&idx, v, &lib.params)?).exp2();
        }
    }
    Ok(s)
}
