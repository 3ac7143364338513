//! (L,q)-arrays: a reference word x̂ laid over a run of consecutive words x_1..x_g.
//!
//! Coordinates are those of the second row: x_1..x_g occupy `[0, S)` with
//! `S = Σ l^i`, and word `i` occupies `[c_{i-1}, c_i)`. The second row ends `q`
//! symbols after the first, so x̂ occupies `[A, B)` with `B = S − q` and
//! `A = B − l̂`. Reading off the word boundaries gives the g+2 subblocks:
//!
//! * block 1 has length `|A|`; it is the head of x̂ when `A < 0` (first row only)
//!   and the head of x_1 when `A > 0` (second row only);
//! * block `i+1` (i = 1..g) is the overlap of x̂ with x_i, i.e. `[c_{i-1}, c_i) ∩ [A, B)`;
//! * block g+2 is the last `q` symbols of x_g (second row only).
//!
//! With the overlap conditions `q < l^g` and `Σ_{i≥2} l^i − q < l̂` every middle
//! block is nonempty. When an output row y is attached it spans the second row.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::types::{check_symbols, Distribution, JointDistribution, Symbol, TypeClassIter};

/// Default cap on the number of sequence tuples an exhaustive count may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LqGeometry {
    pub l_hat: usize,
    pub lengths: Vec<usize>,
    pub q: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryViolation {
    /// Some length is zero or there are no second-row words.
    Degenerate,
    /// `q < l^g` fails: x̂ does not overlap the last word.
    LastWordOverlap,
    /// `Σ_{i=2}^g l^i − q < l̂` fails: x̂ does not overlap the first word.
    FirstWordOverlap,
    /// `l̂ ≤ Σ l^i − q` fails: x̂ sticks out before the second row starts.
    Cover,
}

impl fmt::Display for GeometryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Degenerate => "degenerate lengths",
            Self::LastWordOverlap => "q < l^g violated",
            Self::FirstWordOverlap => "sum_{i>=2} l^i - q < l_hat violated",
            Self::Cover => "l_hat <= sum l^i - q violated",
        })
    }
}

impl LqGeometry {
    pub fn new(l_hat: usize, lengths: Vec<usize>, q: usize) -> Self {
        Self { l_hat, lengths, q }
    }

    pub fn g(&self) -> usize {
        self.lengths.len()
    }

    /// `S = Σ l^i`, the span of the second row.
    pub fn second_row_len(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// `A`: where x̂ starts, in second-row coordinates (may be negative).
    pub fn first_row_start(&self) -> i64 {
        self.second_row_len() as i64 - self.q as i64 - self.l_hat as i64
    }

    pub fn validate(&self, require_cover: bool) -> std::result::Result<(), GeometryViolation> {
        if self.l_hat == 0 || self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(GeometryViolation::Degenerate);
        }
        if self.q >= *self.lengths.last().unwrap() {
            return Err(GeometryViolation::LastWordOverlap);
        }
        let tail: usize = self.lengths[1..].iter().sum();
        if tail as i64 - self.q as i64 >= self.l_hat as i64 {
            return Err(GeometryViolation::FirstWordOverlap);
        }
        if require_cover && self.first_row_start() < 0 {
            return Err(GeometryViolation::Cover);
        }
        Ok(())
    }

    fn checked(&self) -> Result<()> {
        self.validate(false)
            .map_err(|v| Error::Domain(format!("invalid (L,q) geometry {self:?}: {v}")))
    }

    pub fn subblocks(&self) -> Result<SubblockDecomposition> {
        let layout = Layout::new(self)?;
        Ok(SubblockDecomposition {
            lengths: layout.blocks.iter().map(|b| b.len).collect(),
            first_block_row: if self.first_row_start() < 0 {
                Row::First
            } else {
                Row::Second
            },
        })
    }

    /// Geometry of the reversed array (rows swapped in time): `L' = (l̂, l^g..l^1)`,
    /// `q' = A`. Defined when x̂ does not start before the second row.
    pub fn mirrored(&self) -> Option<LqGeometry> {
        self.validate(false).ok()?;
        let a = self.first_row_start();
        if a < 0 {
            return None;
        }
        Some(LqGeometry::new(
            self.l_hat,
            self.lengths.iter().rev().copied().collect(),
            a as usize,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Row {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubblockDecomposition {
    /// `n_1..n_{g+2}`.
    pub lengths: Vec<usize>,
    /// Which row block 1 belongs to (irrelevant when it is empty).
    pub first_block_row: Row,
}

/// Where one subblock sits in each row, in the rows' own coordinates.
#[derive(Clone, Debug)]
struct Span {
    len: usize,
    hat: Option<Range<usize>>,
    word: Option<(usize, Range<usize>)>,
    out: Option<Range<usize>>,
}

#[derive(Clone, Debug)]
struct Layout {
    blocks: Vec<Span>,
}

impl Layout {
    fn new(geom: &LqGeometry) -> Result<Self> {
        geom.checked()?;
        let s = geom.second_row_len() as i64;
        let a = geom.first_row_start();
        let b = s - geom.q as i64;
        let mut blocks = Vec::with_capacity(geom.g() + 2);
        let len = a.unsigned_abs() as usize;
        blocks.push(if a < 0 {
            Span {
                len,
                hat: Some(0..len),
                word: None,
                out: None,
            }
        } else {
            Span {
                len,
                hat: None,
                word: Some((0, 0..len)),
                out: Some(0..len),
            }
        });
        let mut start = 0i64;
        for (i, &l) in geom.lengths.iter().enumerate() {
            let end = start + l as i64;
            let lo = start.max(a);
            let hi = end.min(b);
            debug_assert!(hi > lo, "overlap conditions guarantee nonempty middle blocks");
            blocks.push(Span {
                len: (hi - lo) as usize,
                hat: Some((lo - a) as usize..(hi - a) as usize),
                word: Some((i, (lo - start) as usize..(hi - start) as usize)),
                out: Some(lo as usize..hi as usize),
            });
            start = end;
        }
        let g = geom.g();
        let lg = geom.lengths[g - 1];
        blocks.push(Span {
            len: geom.q,
            hat: None,
            word: Some((g - 1, lg - geom.q..lg)),
            out: Some(b as usize..s as usize),
        });
        Ok(Self { blocks })
    }
}

/// The (joint) type of one subblock.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    /// Zero-length block: the type of the empty sequence.
    Empty,
    Single(Distribution),
    Joint(JointDistribution),
}

impl Block {
    pub fn len(&self) -> u64 {
        match self {
            Block::Empty => 0,
            Block::Single(d) => d.denominator().unwrap_or(0),
            Block::Joint(j) => j.denominator().unwrap_or(0),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact, hashable identity of a subtype sequence: for every block a shape
/// header followed by its counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubtypeKey(pub Vec<u64>);

#[derive(Clone, Debug, PartialEq)]
pub struct SubtypeSequence {
    pub blocks: Vec<Block>,
}

impl SubtypeSequence {
    pub fn g(&self) -> usize {
        self.blocks.len() - 2
    }

    /// Middle block for word `i` (0-based), i.e. the paper's `V_{i+2}`.
    pub fn middle(&self, i: usize) -> &JointDistribution {
        match &self.blocks[i + 1] {
            Block::Joint(j) => j,
            _ => unreachable!("middle blocks are joint types"),
        }
    }

    pub fn middles(&self) -> impl Iterator<Item = &JointDistribution> {
        self.blocks[1..self.blocks.len() - 1].iter().map(|b| match b {
            Block::Joint(j) => j,
            _ => unreachable!("middle blocks are joint types"),
        })
    }

    pub fn lengths(&self) -> Vec<u64> {
        self.blocks.iter().map(Block::len).collect()
    }

    pub fn key(&self) -> SubtypeKey {
        let mut k = Vec::new();
        for b in &self.blocks {
            match b {
                Block::Empty => k.push(0),
                Block::Single(d) => {
                    k.extend([1, d.alphabet_size() as u64]);
                    k.extend_from_slice(d.counts().expect("subtypes are exact"));
                }
                Block::Joint(j) => {
                    k.push(1 + j.arity() as u64);
                    k.extend(j.dims().iter().map(|&d| d as u64));
                    k.extend_from_slice(j.counts().expect("subtypes are exact"));
                }
            }
        }
        SubtypeKey(k)
    }

    /// Reverses block order (the subtype of the mirrored array).
    pub fn reversed(&self) -> SubtypeSequence {
        SubtypeSequence {
            blocks: self.blocks.iter().rev().cloned().collect(),
        }
    }
}

/// An output row attached under the second row.
#[derive(Clone, Copy, Debug)]
pub struct Output<'a> {
    pub y: &'a [Symbol],
    pub alphabet: usize,
}

/// Precomputed block shapes for repeated subtype evaluation on one geometry.
#[derive(Clone, Debug)]
pub struct SubtypeCounter {
    layout: Layout,
    alphabet: usize,
    out_alphabet: Option<usize>,
    offsets: Vec<usize>,
    key_len: usize,
    l_hat: usize,
    lengths: Vec<usize>,
}

impl SubtypeCounter {
    pub fn new(geom: &LqGeometry, alphabet: usize, out_alphabet: Option<usize>) -> Result<Self> {
        let layout = Layout::new(geom)?;
        let ay = out_alphabet.unwrap_or(1);
        let mut offsets = Vec::with_capacity(layout.blocks.len());
        let mut acc = 0;
        for span in &layout.blocks {
            offsets.push(acc);
            acc += Self::cells(span, alphabet, out_alphabet.map(|_| ay));
        }
        Ok(Self {
            layout,
            alphabet,
            out_alphabet,
            offsets,
            key_len: acc,
            l_hat: geom.l_hat,
            lengths: geom.lengths.clone(),
        })
    }

    fn cells(span: &Span, ax: usize, ay: Option<usize>) -> usize {
        if span.len == 0 {
            return 0;
        }
        let ay = ay.unwrap_or(1);
        match (&span.hat, &span.word) {
            (Some(_), Some(_)) => ax * ax * ay,
            (Some(_), None) => ax,
            (None, Some(_)) => ax * ay,
            (None, None) => 0,
        }
    }

    fn check(&self, x_hat: &[Symbol], xs: &[&[Symbol]], y: Option<&[Symbol]>) -> Result<()> {
        if x_hat.len() != self.l_hat {
            return domain(format!("x_hat has length {}, geometry says {}", x_hat.len(), self.l_hat));
        }
        if xs.len() != self.lengths.len() {
            return domain(format!("{} second-row words for g = {}", xs.len(), self.lengths.len()));
        }
        for (i, (x, &l)) in xs.iter().zip(&self.lengths).enumerate() {
            if x.len() != l {
                return domain(format!("word {i} has length {}, geometry says {l}", x.len()));
            }
        }
        match (y, self.out_alphabet) {
            (Some(y), Some(ay)) => {
                let s: usize = self.lengths.iter().sum();
                if y.len() != s {
                    return domain(format!("output row has length {}, second row spans {s}", y.len()));
                }
                check_symbols(y, ay)?;
            }
            (None, None) => {}
            _ => return domain("output row presence does not match the counter"),
        }
        check_symbols(x_hat, self.alphabet)?;
        for x in xs {
            check_symbols(x, self.alphabet)?;
        }
        Ok(())
    }

    /// Flat block counts into `buf` (no validation; symbols must be in range).
    pub fn fill(&self, x_hat: &[Symbol], xs: &[&[Symbol]], y: Option<&[Symbol]>, buf: &mut Vec<u64>) {
        buf.clear();
        buf.resize(self.key_len, 0);
        let ax = self.alphabet;
        let ay = if y.is_some() { self.out_alphabet.unwrap_or(1) } else { 1 };
        for (span, &off) in self.layout.blocks.iter().zip(&self.offsets) {
            if span.len == 0 {
                continue;
            }
            let cells = &mut buf[off..];
            match (&span.hat, &span.word) {
                (Some(h), Some((w, r))) => {
                    let xw = &xs[*w][r.clone()];
                    let xh = &x_hat[h.clone()];
                    match (y, &span.out) {
                        (Some(y), Some(o)) => {
                            let yy = &y[o.clone()];
                            for t in 0..span.len {
                                cells[(xh[t] as usize * ax + xw[t] as usize) * ay + yy[t] as usize] += 1;
                            }
                        }
                        _ => {
                            for t in 0..span.len {
                                cells[xh[t] as usize * ax + xw[t] as usize] += 1;
                            }
                        }
                    }
                }
                (Some(h), None) => {
                    for &s in &x_hat[h.clone()] {
                        cells[s as usize] += 1;
                    }
                }
                (None, Some((w, r))) => {
                    let xw = &xs[*w][r.clone()];
                    match (y, &span.out) {
                        (Some(y), Some(o)) => {
                            let yy = &y[o.clone()];
                            for t in 0..span.len {
                                cells[xw[t] as usize * ay + yy[t] as usize] += 1;
                            }
                        }
                        _ => {
                            for &s in xw {
                                cells[s as usize] += 1;
                            }
                        }
                    }
                }
                (None, None) => {}
            }
        }
    }

    /// Rebuilds the block types from flat counts produced by [`fill`](Self::fill).
    pub fn decode(&self, flat: &[u64]) -> Result<SubtypeSequence> {
        let ax = self.alphabet;
        let mut blocks = Vec::with_capacity(self.layout.blocks.len());
        for (span, &off) in self.layout.blocks.iter().zip(&self.offsets) {
            if span.len == 0 {
                blocks.push(Block::Empty);
                continue;
            }
            let with_y = self.out_alphabet.is_some() && span.out.is_some();
            let ay = self.out_alphabet.unwrap_or(1);
            let block = match (&span.hat, &span.word) {
                (Some(_), Some(_)) => {
                    let (dims, n) = if with_y {
                        (vec![ax, ax, ay], ax * ax * ay)
                    } else {
                        (vec![ax, ax], ax * ax)
                    };
                    Block::Joint(JointDistribution::from_counts(dims, flat[off..off + n].to_vec())?)
                }
                (Some(_), None) => Block::Single(Distribution::from_counts(flat[off..off + ax].to_vec())?),
                (None, Some(_)) if with_y => Block::Joint(JointDistribution::from_counts(
                    vec![ax, ay],
                    flat[off..off + ax * ay].to_vec(),
                )?),
                (None, Some(_)) => Block::Single(Distribution::from_counts(flat[off..off + ax].to_vec())?),
                (None, None) => Block::Empty,
            };
            blocks.push(block);
        }
        Ok(SubtypeSequence { blocks })
    }

    /// Flat counts of a subtype sequence in this counter's layout, if shapes agree.
    pub fn encode(&self, v: &SubtypeSequence) -> Option<Vec<u64>> {
        if v.blocks.len() != self.layout.blocks.len() {
            return None;
        }
        let mut flat = Vec::with_capacity(self.key_len);
        for (span, b) in self.layout.blocks.iter().zip(&v.blocks) {
            if b.len() != span.len as u64 {
                return None;
            }
            match b {
                Block::Empty => {}
                Block::Single(d) => flat.extend_from_slice(d.counts()?),
                Block::Joint(j) => flat.extend_from_slice(j.counts()?),
            }
        }
        (flat.len() == self.key_len).then_some(flat)
    }

    pub fn subtype(&self, x_hat: &[Symbol], xs: &[&[Symbol]], y: Option<&[Symbol]>) -> Result<SubtypeSequence> {
        self.check(x_hat, xs, y)?;
        let mut buf = Vec::new();
        self.fill(x_hat, xs, y, &mut buf);
        self.decode(&buf)
    }
}

/// Subtype sequence of the array (x̂; x_1..x_g), optionally with an output row.
pub fn subtype_of(
    geom: &LqGeometry,
    x_hat: &[Symbol],
    xs: &[&[Symbol]],
    output: Option<Output<'_>>,
    alphabet: usize,
) -> Result<SubtypeSequence> {
    let counter = SubtypeCounter::new(geom, alphabet, output.map(|o| o.alphabet))?;
    counter.subtype(x_hat, xs, output.map(|o| o.y))
}

/// `1^{L,q}_V`: whether the array has subtype sequence `v` (exact count equality).
pub fn indicator(
    geom: &LqGeometry,
    v: &SubtypeSequence,
    x_hat: &[Symbol],
    xs: &[&[Symbol]],
    output: Option<Output<'_>>,
    alphabet: usize,
) -> Result<bool> {
    Ok(subtype_of(geom, x_hat, xs, output, alphabet)?.key() == v.key())
}

/// Reverses every row and the word order. Returns the mirrored geometry and rows,
/// or `None` when the mirror is not a valid array (x̂ starts before the second row).
pub fn reflect(
    geom: &LqGeometry,
    x_hat: &[Symbol],
    xs: &[&[Symbol]],
) -> Option<(LqGeometry, Vec<Symbol>, Vec<Vec<Symbol>>)> {
    let mirrored = geom.mirrored()?;
    let rev = |s: &[Symbol]| s.iter().rev().copied().collect::<Vec<_>>();
    Some((mirrored, rev(x_hat), xs.iter().rev().map(|x| rev(x)).collect()))
}

/// A declared equality among the rows of an array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Equality {
    HatIsFirst,
    HatIsLast,
    /// `x_i = x_j` (0-based word indices).
    Words(usize, usize),
}

/// The index set I: which rows are forced to coincide. x̂ may only coincide with
/// the first or the last word.
#[derive(Clone, Debug, Default)]
pub struct EqualityConstraintSet {
    items: Vec<Equality>,
}

impl EqualityConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, e: Equality) -> Self {
        self.items.push(e);
        self
    }

    pub fn items(&self) -> &[Equality] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn validate(&self, g: usize) -> Result<()> {
        for e in &self.items {
            if let Equality::Words(i, j) = *e {
                if i == j || i >= g || j >= g {
                    return domain(format!("equality x_{i} = x_{j} invalid for g = {g}"));
                }
            }
        }
        Ok(())
    }

    /// Union-find classes over rows (0 = x̂, 1..=g = words).
    fn classes(&self, g: usize) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..=g).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in &self.items {
            let (a, b) = match *e {
                Equality::HatIsFirst => (0, 1),
                Equality::HatIsLast => (0, g),
                Equality::Words(i, j) => (i + 1, j + 1),
            };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
        (0..=g).map(|i| find(&mut parent, i)).collect()
    }
}

fn budget_check(what: &str, needed: Option<u128>, budget: u128) -> Result<u128> {
    match needed {
        Some(n) if n <= budget => Ok(n),
        n => Err(Error::Budget {
            what: what.into(),
            needed: n.unwrap_or(u128::MAX),
            budget,
        }),
    }
}

/// `|T^{L,q}_{V,I}|` by exhaustive search over all row contents consistent with
/// the equalities.
pub fn enumerate_array_class(
    geom: &LqGeometry,
    v: &SubtypeSequence,
    constraints: &EqualityConstraintSet,
    alphabet: usize,
    budget: u128,
) -> Result<u128> {
    let g = geom.g();
    constraints.validate(g)?;
    let counter = SubtypeCounter::new(geom, alphabet, None)?;
    let Some(target) = counter.encode(v) else {
        return Ok(0);
    };
    let row_len = |r: usize| if r == 0 { geom.l_hat } else { geom.lengths[r - 1] };
    let class = constraints.classes(g);
    let reps: Vec<usize> = (0..=g).filter(|&r| class[r] == r).collect();
    if (0..=g).any(|r| row_len(r) != row_len(class[r])) {
        return Ok(0);
    }
    let free: usize = reps.iter().map(|&r| row_len(r)).sum();
    let needed = (alphabet as u128).checked_pow(free as u32);
    let total = budget_check("array class enumeration", needed, budget)?;

    let mut offsets = vec![0usize; g + 1];
    let mut acc = 0;
    for &r in &reps {
        offsets[r] = acc;
        acc += row_len(r);
    }
    let mut digits = vec![0 as Symbol; free];
    let mut buf = Vec::new();
    let mut count = 0u128;
    for _ in 0..total {
        let row = |r: usize| {
            let c = class[r];
            &digits[offsets[c]..offsets[c] + row_len(c)]
        };
        let xs: Vec<&[Symbol]> = (1..=g).map(row).collect();
        counter.fill(row(0), &xs, None, &mut buf);
        if buf == target {
            count += 1;
        }
        for d in digits.iter_mut() {
            *d += 1;
            if (*d as usize) < alphabet {
                break;
            }
            *d = 0;
        }
    }
    Ok(count)
}

/// Every subtype sequence realized by rows of the prescribed types, with the
/// number of row tuples realizing each. `prescribed` lists x̂'s type, then x_1..x_g.
pub fn subtype_census(
    geom: &LqGeometry,
    prescribed: &[&Distribution],
    alphabet: usize,
    budget: u128,
) -> Result<BTreeMap<SubtypeKey, (SubtypeSequence, u128)>> {
    let g = geom.g();
    if prescribed.len() != g + 1 {
        return domain(format!("{} prescribed types for g+1 = {} rows", prescribed.len(), g + 1));
    }
    let counter = SubtypeCounter::new(geom, alphabet, None)?;
    let mut classes: Vec<Vec<Vec<Symbol>>> = Vec::with_capacity(g + 1);
    let mut needed: Option<u128> = Some(1);
    for (r, p) in prescribed.iter().enumerate() {
        let len = if r == 0 { geom.l_hat } else { geom.lengths[r - 1] };
        let counts = p
            .counts()
            .ok_or_else(|| Error::Domain("prescribed row types must be exact".into()))?;
        if p.alphabet_size() != alphabet {
            return domain(format!("prescribed type of row {r} has the wrong alphabet"));
        }
        if p.denominator() != Some(len as u64) {
            // No sequence of this row's length has that type.
            return Ok(BTreeMap::new());
        }
        let size = crate::types::multinomial(counts);
        needed = needed.zip(size).and_then(|(a, b)| a.checked_mul(b));
        budget_check("subtype census", needed, budget)?;
        classes.push(TypeClassIter::new(counts).collect());
    }
    let mut tally: BTreeMap<Vec<u64>, u128> = BTreeMap::new();
    let mut idx = vec![0usize; g + 1];
    let mut buf = Vec::new();
    'outer: loop {
        let xs: Vec<&[Symbol]> = (1..=g).map(|r| classes[r][idx[r]].as_slice()).collect();
        counter.fill(&classes[0][idx[0]], &xs, None, &mut buf);
        *tally.entry(buf.clone()).or_default() += 1;
        for r in (0..=g).rev() {
            idx[r] += 1;
            if idx[r] < classes[r].len() {
                continue 'outer;
            }
            idx[r] = 0;
        }
        break;
    }
    let mut out = BTreeMap::new();
    for (flat, n) in tally {
        let v = counter.decode(&flat)?;
        out.insert(v.key(), (v, n));
    }
    Ok(out)
}

/// The family of subtype sequences compatible with the prescribed row types.
pub fn enumerate_compatible_subtypes(
    geom: &LqGeometry,
    prescribed: &[&Distribution],
    alphabet: usize,
    budget: u128,
) -> Result<Vec<SubtypeSequence>> {
    Ok(subtype_census(geom, prescribed, alphabet, budget)?
        .into_values()
        .map(|(v, _)| v)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{concat_types, empirical_type, joint_type};

    fn geom(l: &[usize], q: usize) -> LqGeometry {
        LqGeometry::new(l[0], l[1..].to_vec(), q)
    }

    #[test]
    fn validation_cases() {
        assert_eq!(geom(&[5, 3, 4], 2).validate(true), Ok(()));
        assert_eq!(geom(&[5, 3, 4], 4).validate(false), Err(GeometryViolation::LastWordOverlap));
        assert_eq!(geom(&[4, 4], 0).validate(true), Ok(()));
        // 3+4+4 - 1 = 10 ≥ 3: x̂ would miss the first word
        assert_eq!(geom(&[3, 2, 4, 4], 1).validate(false), Err(GeometryViolation::FirstWordOverlap));
        assert_eq!(geom(&[6, 4, 4], 3).validate(false), Ok(()));
        assert_eq!(geom(&[6, 4, 4], 3).validate(true), Err(GeometryViolation::Cover));
        assert_eq!(geom(&[0, 4], 0).validate(false), Err(GeometryViolation::Degenerate));
    }

    #[test]
    fn subblock_cases() {
        assert_eq!(geom(&[5, 3, 4], 2).subblocks().unwrap().lengths, vec![0, 3, 2, 2]);
        assert_eq!(geom(&[4, 4], 0).subblocks().unwrap().lengths, vec![0, 4, 0]);
        // x̂ = [-1, 5) over words [0,4) [4,8); x̂ head of length 1 sticks out
        let d = geom(&[6, 4, 4], 3).subblocks().unwrap();
        assert_eq!(d.lengths, vec![1, 4, 1, 3]);
        assert_eq!(d.first_block_row, Row::First);
        // x̂ = [5, 11) over [0,6) [6,10) [10,14): x_1 head of length 5 before it
        let d = geom(&[6, 6, 4, 4], 3).subblocks().unwrap();
        assert_eq!(d.lengths, vec![5, 1, 4, 1, 3]);
        assert_eq!(d.first_block_row, Row::Second);
        assert!(geom(&[5, 3, 4], 4).subblocks().is_err());
    }

    #[test]
    fn prefix_suffix_construction() {
        // x̂ = x_1 = x with L = (l,l), q = l − r: the middle block pairs x's
        // length-r suffix (first row) with its length-r prefix (second row).
        let x: Vec<Symbol> = vec![0, 1, 1, 0, 1, 0, 0, 1, 1, 1];
        let (l, r) = (x.len(), 4);
        let v = subtype_of(&geom(&[l, l], l - r), &x, &[&x], None, 2).unwrap();
        assert_eq!(v.lengths(), vec![(l - r) as u64, r as u64, (l - r) as u64]);
        let expect = joint_type(&x[l - r..], &x[..r], 2, 2).unwrap();
        assert_eq!(v.middle(0), &expect);
    }

    #[test]
    fn constant_rows_give_point_masses() {
        let g = geom(&[6, 4, 4], 3);
        let v = subtype_of(&g, &[1; 6], &[&[1; 4], &[1; 4]], None, 2).unwrap();
        for b in &v.blocks {
            match b {
                Block::Single(d) => assert_eq!(d.probs(), &[0.0, 1.0]),
                Block::Joint(j) => assert_eq!(j.probs(), &[0.0, 0.0, 0.0, 1.0]),
                Block::Empty => panic!("no empty block in this geometry"),
            }
        }
    }

    #[test]
    fn three_row_blocks() {
        let g = geom(&[6, 6, 4, 4], 3);
        let x_hat = [0, 1, 0, 1, 1, 0];
        let xs: [&[Symbol]; 3] = [&[1, 1, 0, 0, 1, 0], &[0, 1, 1, 1], &[1, 0, 0, 1]];
        let y: Vec<Symbol> = (0..14).map(|i| (i % 3 == 0) as Symbol).collect();
        let out = Output { y: &y, alphabet: 2 };
        let v = subtype_of(&g, &x_hat, &xs, Some(out), 2).unwrap();
        assert_eq!(v.lengths(), vec![5, 1, 4, 1, 3]);
        match &v.blocks[0] {
            Block::Joint(j) => assert_eq!(j, &joint_type(&xs[0][..5], &y[..5], 2, 2).unwrap()),
            _ => panic!("second-row head pairs with y"),
        }
        assert_eq!(v.middle(1).dims(), &[2, 2, 2]);
        assert!(indicator(&g, &v, &x_hat, &xs, Some(out), 2).unwrap());
        assert!(subtype_of(&g, &x_hat, &xs, Some(Output { y: &y[1..], alphabet: 2 }), 2).is_err());
    }

    #[test]
    fn first_row_marginals_reassemble_x_hat() {
        let g = geom(&[6, 4, 4], 3);
        let x_hat = [0, 1, 1, 0, 1, 1];
        let xs: [&[Symbol]; 2] = [&[1, 0, 0, 1], &[0, 0, 1, 1]];
        let v = subtype_of(&g, &x_hat, &xs, None, 2).unwrap();
        let mut parts = Vec::new();
        if let Block::Single(d) = &v.blocks[0] {
            parts.push(d.clone());
        }
        parts.extend(v.middles().map(|j| j.marginal(0).unwrap()));
        let refs: Vec<&Distribution> = parts.iter().collect();
        assert_eq!(concat_types(&refs).unwrap(), empirical_type(&x_hat, 2).unwrap());
    }

    #[test]
    fn perturbed_subtype_fails_indicator() {
        let g = geom(&[4, 4], 2);
        let (a, b) = ([0, 1, 1, 0], [1, 1, 0, 0]);
        let v = subtype_of(&g, &a, &[&b], None, 2).unwrap();
        assert!(indicator(&g, &v, &a, &[&b], None, 2).unwrap());
        let mut w = v.clone();
        let Block::Joint(j) = &w.blocks[1] else { panic!() };
        let mut c = j.counts().unwrap().to_vec();
        c[0] += 1;
        c[3] -= 1;
        w.blocks[1] = Block::Joint(JointDistribution::from_counts(vec![2, 2], c).unwrap());
        assert!(!indicator(&g, &w, &a, &[&b], None, 2).unwrap());
    }

    #[test]
    fn mirror_reverses_blocks() {
        let g = geom(&[6, 6, 4, 4], 3);
        let x_hat = [0, 1, 0, 1, 1, 0];
        let xs: [&[Symbol]; 3] = [&[1, 1, 0, 0, 1, 0], &[0, 1, 1, 1], &[1, 0, 0, 1]];
        let v = subtype_of(&g, &x_hat, &xs, None, 2).unwrap();
        let (mg, mh, mx) = reflect(&g, &x_hat, &xs).unwrap();
        assert_eq!(mg, LqGeometry::new(6, vec![4, 4, 6], 5));
        let mrefs: Vec<&[Symbol]> = mx.iter().map(|x| x.as_slice()).collect();
        let mv = subtype_of(&mg, &mh, &mrefs, None, 2).unwrap();
        assert_eq!(mv.key(), v.reversed().key());
        assert!(geom(&[6, 4, 4], 3).mirrored().is_none());
    }

    #[test]
    fn constrained_counts() {
        let g = geom(&[4, 4], 2);
        let v = subtype_of(&g, &[0, 1, 1, 0], &[&[1, 0, 0, 1]], None, 2).unwrap();
        let free = enumerate_array_class(&g, &v, &EqualityConstraintSet::new(), 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        // independent double loop over all (x̂, x_1)
        let mut brute = 0;
        for a in 0u32..16 {
            for b in 0u32..16 {
                let xa: Vec<Symbol> = (0..4).map(|i| ((a >> i) & 1) as Symbol).collect();
                let xb: Vec<Symbol> = (0..4).map(|i| ((b >> i) & 1) as Symbol).collect();
                if indicator(&g, &v, &xa, &[&xb], None, 2).unwrap() {
                    brute += 1;
                }
            }
        }
        assert_eq!(free, brute);

        let same = EqualityConstraintSet::new().with(Equality::HatIsFirst);
        let tied = enumerate_array_class(&g, &v, &same, 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let mut brute_tied = 0;
        for a in 0u32..16 {
            let xa: Vec<Symbol> = (0..4).map(|i| ((a >> i) & 1) as Symbol).collect();
            if indicator(&g, &v, &xa, &[&xa], None, 2).unwrap() {
                brute_tied += 1;
            }
        }
        assert_eq!(tied, brute_tied);

        // lengths 5 vs 4 cannot coincide
        let g2 = geom(&[5, 4], 2);
        let v2 = subtype_of(&g2, &[0, 1, 1, 0, 1], &[&[1, 0, 0, 1]], None, 2).unwrap();
        assert_eq!(enumerate_array_class(&g2, &v2, &same, 2, DEFAULT_ENUMERATION_BUDGET).unwrap(), 0);
        assert!(matches!(
            enumerate_array_class(&g, &v, &EqualityConstraintSet::new(), 2, 100),
            Err(Error::Budget { .. })
        ));
        assert!(EqualityConstraintSet::new().with(Equality::Words(0, 0)).validate(2).is_err());
    }

    #[test]
    fn compatible_subtypes_match_enumeration() {
        let g = geom(&[4, 2, 4], 2);
        let p4 = Distribution::from_counts(vec![2, 2]).unwrap();
        let p2 = Distribution::from_counts(vec![1, 1]).unwrap();
        let list = enumerate_compatible_subtypes(&g, &[&p4, &p2, &p4], 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let mut direct = std::collections::BTreeSet::new();
        for a in TypeClassIter::new(&[2, 2]) {
            for b in TypeClassIter::new(&[1, 1]) {
                for c in TypeClassIter::new(&[2, 2]) {
                    direct.insert(subtype_of(&g, &a, &[&b, &c], None, 2).unwrap().key());
                }
            }
        }
        let keys: std::collections::BTreeSet<_> = list.iter().map(|v| v.key()).collect();
        assert_eq!(keys, direct);

        let pm = Distribution::from_counts(vec![0, 4]).unwrap();
        let pm2 = Distribution::from_counts(vec![0, 2]).unwrap();
        assert_eq!(enumerate_compatible_subtypes(&g, &[&pm, &pm2, &pm], 2, 1 << 20).unwrap().len(), 1);
        // a 3-type cannot sit on a 4-symbol row
        let bad = Distribution::from_counts(vec![1, 2]).unwrap();
        assert!(enumerate_compatible_subtypes(&g, &[&bad, &p2, &p4], 2, 1 << 20).unwrap().is_empty());
    }
}
