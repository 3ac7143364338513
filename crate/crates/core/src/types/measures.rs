use super::{Distribution, JointDistribution};
use crate::channel::ChannelMatrix;
use crate::error::{domain, Result};

fn plogp_sum(probs: impl IntoIterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

pub fn entropy(d: &Distribution) -> f64 {
    plogp_sum(d.probs().iter().copied())
}

pub fn binary_entropy(p: f64) -> f64 {
    plogp_sum([p, 1.0 - p])
}

pub fn joint_entropy(v: &JointDistribution) -> f64 {
    plogp_sum(v.probs().iter().copied())
}

fn entropy_of_axes(v: &JointDistribution, axes: &[usize]) -> Result<f64> {
    let (_, probs, _) = v.project(axes)?;
    Ok(plogp_sum(probs))
}

/// `H(target | given)`.
pub fn conditional_entropy(v: &JointDistribution, target: usize, given: &[usize]) -> Result<f64> {
    if given.is_empty() || given.contains(&target) {
        return domain("conditioning axes must be nonempty and exclude the target");
    }
    let mut all = given.to_vec();
    all.push(target);
    let h = entropy_of_axes(v, &all)? - entropy_of_axes(v, given)?;
    Ok(h.max(0.0))
}

/// `I(A ∧ B)` between two axes; a third axis, if any, is marginalized out.
pub fn mutual_information(v: &JointDistribution, a: usize, b: usize) -> Result<f64> {
    mutual_information_sets(v, &[a], &[b])
}

/// `I(A ∧ B)` between two disjoint groups of axes, e.g. `I(X̂X ∧ Y)`.
pub fn mutual_information_sets(v: &JointDistribution, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() || a.iter().any(|x| b.contains(x)) {
        return domain("mutual information needs two nonempty disjoint axis groups");
    }
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    let i = entropy_of_axes(v, a)? + entropy_of_axes(v, b)? - entropy_of_axes(v, &ab)?;
    Ok(i.max(0.0))
}

/// `D(p‖q)` in bits; `+∞` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

/// `D(V‖W|P) = Σ_x P(x) D(V(·|x)‖W(·|x))`.
pub fn conditional_divergence(v: &ChannelMatrix, w: &ChannelMatrix, p: &Distribution) -> f64 {
    assert!(
        v.inputs() == w.inputs() && v.outputs() == w.outputs() && p.alphabet_size() == v.inputs(),
        "conditional_divergence: shape mismatch"
    );
    let mut d = 0.0;
    for x in p.support() {
        let dx = kl_divergence(v.row(x), w.row(x));
        if dx.is_infinite() {
            return f64::INFINITY;
        }
        d += p.prob(x) * dx;
    }
    d
}

fn exact_counts(d: &Distribution) -> Result<&[u64]> {
    d.counts()
        .ok_or_else(|| crate::Error::Domain("concatenation needs exact types".into()))
}

/// The type of a concatenation, given the parts' types (each an exact type).
/// Zero-length parts are skipped.
pub fn concat_types(parts: &[&Distribution]) -> Result<Distribution> {
    let Some(first) = parts.first() else {
        return domain("concatenation of no parts");
    };
    let k = first.alphabet_size();
    let mut acc = vec![0u64; k];
    for p in parts {
        if p.alphabet_size() != k {
            return domain("concatenated types disagree on the alphabet");
        }
        for (a, c) in acc.iter_mut().zip(exact_counts(p)?) {
            *a += c;
        }
    }
    if acc.iter().all(|&c| c == 0) {
        return Ok(Distribution::empty(k));
    }
    Distribution::from_counts(acc)
}

/// `J = H(Σ (n_i/n) P_i) − Σ (n_i/n) H(P_i)` for parts `(P_i, n_i)`; zero-length
/// parts carry no weight.
pub fn generalized_js(parts: &[(&Distribution, u64)]) -> Result<f64> {
    let live: Vec<_> = parts.iter().filter(|(_, n)| *n > 0).collect();
    let Some((first, _)) = live.first() else {
        return domain("Jensen–Shannon divergence of no weighted parts");
    };
    let k = first.alphabet_size();
    let total: u64 = live.iter().map(|(_, n)| n).sum();
    let mut mix = vec![0.0; k];
    let mut avg_h = 0.0;
    for (p, n) in &live {
        if p.alphabet_size() != k {
            return domain("Jensen–Shannon parts disagree on the alphabet");
        }
        let w = *n as f64 / total as f64;
        for (m, q) in mix.iter_mut().zip(p.probs()) {
            *m += w * q;
        }
        avg_h += w * entropy(p);
    }
    Ok((plogp_sum(mix) - avg_h).max(0.0))
}

/// `k·log2(k)` with `0·log 0 = 0`.
#[inline]
pub fn klogk(k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        let k = k as f64;
        k * k.log2()
    }
}

/// Mutual information of a `kx × ky` count table (row-major), computed as
/// `(1/n)[Σ k log k (cells) − Σ k log k (rows) − Σ k log k (cols) + n log n]`.
pub fn mi_from_counts(counts: &[u64], kx: usize, ky: usize) -> f64 {
    debug_assert_eq!(counts.len(), kx * ky);
    let mut n = 0;
    let mut cells = 0.0;
    let mut rows = 0.0;
    for x in 0..kx {
        let row = &counts[x * ky..(x + 1) * ky];
        let r: u64 = row.iter().sum();
        n += r;
        rows += klogk(r);
        cells += row.iter().map(|&c| klogk(c)).sum::<f64>();
    }
    if n == 0 {
        return 0.0;
    }
    let mut cols = 0.0;
    for y in 0..ky {
        cols += klogk((0..kx).map(|x| counts[x * ky + y]).sum());
    }
    ((cells - rows - cols + klogk(n)) / n as f64).max(0.0)
}
