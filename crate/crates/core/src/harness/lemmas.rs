//! Desk-scale verification of the combinatorial lemmas by exhaustive
//! enumeration: type-class bounds, the second-order type bound, nonnegativity
//! of the generalized Jensen–Shannon divergence, the expurgation fraction and
//! the packing statistic.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::channel_sim::transmit;
use crate::codebook::{
    admissible_indices, build_library, codebook_size, expurgation_fraction_exact, packing_bound_exponent,
    packing_census, sample_uniform_type_class, BookSpec, BuildOptions, CodebookLibrary, Expurgation, LibraryParams,
    PackingIndex,
};
use crate::error::{Error, Result};
use crate::lq_array::SubtypeKey;
use crate::rng::derive;
use crate::types::{
    channel_string_probability, conditional_divergence, conditional_entropy, count_types, entropy, enumerate_types,
    generalized_js, joint_type, multinomial, second_order_type, Distribution, Symbol,
};

// Stream tags for the randomized checks.
const JS_STREAM: u64 = 101;
const CHANNEL_STREAM: u64 = 102;
const SAMPLER_STREAM: u64 = 103;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaConfig {
    pub type_max_n: u64,
    pub type_max_alphabet: usize,
    pub channel_identity_instances: usize,
    pub second_order_max_n: usize,
    pub js_instances: usize,
    pub expurgation_lengths: Vec<usize>,
    pub expurgation_gammas: Vec<f64>,
    pub expurgation_r_min: usize,
    /// The fraction must stay at or below one half from this γ on.
    pub expurgation_half_from: f64,
    pub sampler_length: usize,
    pub sampler_gamma: f64,
    pub sampler_draws: u64,
    pub packing_lengths: Vec<usize>,
    pub packing_prefactor_ratio: f64,
    /// Cap on sequences or tuples visited by any single enumeration.
    pub budget: u128,
    pub seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            type_max_n: 20,
            type_max_alphabet: 3,
            channel_identity_instances: 2000,
            second_order_max_n: 12,
            js_instances: 10_000,
            expurgation_lengths: (8..=14).collect(),
            expurgation_gammas: (1..=20).map(|k| k as f64 * 0.05).collect(),
            expurgation_r_min: 2,
            expurgation_half_from: 0.3,
            sampler_length: 16,
            sampler_gamma: 0.3,
            sampler_draws: 100_000,
            packing_lengths: vec![6, 8],
            packing_prefactor_ratio: 4.0,
            budget: 1 << 24,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not run: the enumeration would exceed the budget.
    Skipped,
    /// A measured quantity reported without a pass/fail claim.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub suite: String,
    pub name: String,
    pub status: CheckStatus,
    /// Smallest margin by which the inequality held (negative when violated),
    /// or the reported quantity for informational rows.
    #[serde(with = "crate::serde_float")]
    pub slack: f64,
    pub detail: String,
}

fn check(suite: &str, name: impl Into<String>, ok: bool, slack: f64, detail: impl Into<String>) -> LemmaCheck {
    LemmaCheck {
        suite: suite.into(),
        name: name.into(),
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        slack,
        detail: detail.into(),
    }
}

fn info(suite: &str, name: impl Into<String>, value: f64, detail: impl Into<String>) -> LemmaCheck {
    LemmaCheck {
        suite: suite.into(),
        name: name.into(),
        status: CheckStatus::Info,
        slack: value,
        detail: detail.into(),
    }
}

fn skipped(suite: &str, name: impl Into<String>, e: &Error) -> LemmaCheck {
    LemmaCheck {
        suite: suite.into(),
        name: name.into(),
        status: CheckStatus::Skipped,
        slack: f64::NAN,
        detail: e.to_string(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn suite(&self, name: &str) -> impl Iterator<Item = &LemmaCheck> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.suite == name)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["suite", "name", "status", "slack", "detail"])?;
        for c in &self.checks {
            w.write_record(&[
                c.suite.clone(),
                c.name.clone(),
                format!("{:?}", c.status).to_lowercase(),
                c.slack.to_string(),
                c.detail.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every suite.
pub fn verify_lemmas(cfg: &LemmaConfig) -> Result<LemmaReport> {
    let mut checks = type_class_suite(cfg);
    checks.extend(second_order_suite(cfg));
    checks.extend(js_suite(cfg)?);
    checks.extend(expurgation_suite(cfg)?);
    checks.extend(packing_suite(cfg)?);
    Ok(LemmaReport { checks })
}

/// `|P_n| ≤ (n+1)^k`, `2^{nH}/(n+1)^k ≤ |T_P| ≤ 2^{nH}` with exact class
/// sizes, the partition `Σ_P |T_P| = k^n`, and the channel-probability
/// identity `W^n(y|x) = 2^{−n(D(V‖W|P) + H_V(Y|X))}` on random pairs.
pub fn type_class_suite(cfg: &LemmaConfig) -> Vec<LemmaCheck> {
    const S: &str = "types";
    let mut count_slack = f64::INFINITY;
    let mut lower = (f64::INFINITY, String::new());
    let mut upper = (f64::INFINITY, String::new());
    let mut partition_ok = true;
    let mut counts_agree = true;
    for k in 1..=cfg.type_max_alphabet {
        for n in 1..=cfg.type_max_n {
            let types = enumerate_types(n, k);
            counts_agree &= types.len() as u128 == count_types(n, k);
            let log_poly = k as f64 * ((n + 1) as f64).log2();
            count_slack = count_slack.min(log_poly - (types.len() as f64).log2());
            let mut total: u128 = 0;
            for c in &types {
                let size = multinomial(c).expect("small multinomials fit");
                total += size;
                let nh = n as f64 * entropy(&Distribution::from_counts(c.clone()).expect("nonempty type"));
                let ls = (size as f64).log2();
                if ls - (nh - log_poly) < lower.0 {
                    lower = (ls - (nh - log_poly), format!("n={n} counts={c:?}"));
                }
                if nh - ls < upper.0 {
                    upper = (nh - ls, format!("n={n} counts={c:?}"));
                }
            }
            partition_ok &= Some(total) == (k as u128).checked_pow(n as u32);
        }
    }
    let range = format!("n ≤ {}, |X| ≤ {}", cfg.type_max_n, cfg.type_max_alphabet);
    let mut out = vec![
        check(S, "number of types", counts_agree && count_slack >= 0.0, count_slack, range.clone()),
        check(S, "type class lower bound", lower.0 >= -1e-9, lower.0, format!("tightest at {}", lower.1)),
        check(S, "type class upper bound", upper.0 >= -1e-9, upper.0, format!("tightest at {}", upper.1)),
        check(S, "type classes partition the sequences", partition_ok, 0.0, range),
    ];

    let mut r = derive(cfg.seed, &[CHANNEL_STREAM]);
    let mut worst = 0.0f64;
    for _ in 0..cfg.channel_identity_instances {
        let kx = r.gen_range(2..=3);
        let ky = r.gen_range(2..=3);
        let n = r.gen_range(1..=20);
        let w = ChannelMatrix::random(kx, ky, &mut r).expect("valid random channel");
        let x: Vec<Symbol> = (0..n).map(|_| r.gen_range(0..kx) as Symbol).collect();
        let y = transmit(&w, &x, &mut r);
        let v = joint_type(&x, &y, kx, ky).expect("matching lengths");
        let p = v.marginal(0).expect("joint type");
        let rows: Vec<Vec<f64>> = (0..kx)
            .map(|a| {
                let s = p.prob(a);
                (0..ky).map(|b| if s > 0.0 { v.get(&[a, b]) / s } else { w.get(a, b) }).collect()
            })
            .collect();
        let vc = ChannelMatrix::new(rows).expect("conditional type");
        let exponent = conditional_divergence(&vc, &w, &p) + conditional_entropy(&v, 1, &[0]).expect("axes");
        let direct = channel_string_probability(&w, &x, &y).expect("lengths").log2();
        worst = worst.max((direct + n as f64 * exponent).abs());
    }
    out.push(check(
        S,
        "channel probability from joint type",
        worst <= 1e-9,
        1e-9 - worst,
        format!("{} random pairs, worst |log₂ difference| {worst:.2e}", cfg.channel_identity_instances),
    ));
    out
}

/// `|T_{V,a}| ≤ 2^{n H_V(X̂|X)}` for every binary second-order class, where
/// `X̂` is the successor symbol, plus `Σ |T_{V,a}| = 2^n`.
pub fn second_order_suite(cfg: &LemmaConfig) -> Vec<LemmaCheck> {
    const S: &str = "second-order types";
    let mut slack = (f64::INFINITY, String::new());
    let mut sums_ok = true;
    for n in 2..=cfg.second_order_max_n {
        let mut classes: HashMap<(Vec<u64>, Symbol), (u64, f64)> = HashMap::new();
        for bits in 0u64..1 << n {
            let x: Vec<Symbol> = (0..n).map(|i| ((bits >> i) & 1) as Symbol).collect();
            let t = second_order_type(&x, 2).expect("length ≥ 2");
            let h = conditional_entropy(&t.base, 1, &[0]).expect("pair type");
            classes.entry(t.key()).or_insert((0, h)).0 += 1;
        }
        sums_ok &= classes.values().map(|c| c.0).sum::<u64>() == 1 << n;
        for (key, (size, h)) in &classes {
            let s = n as f64 * h - (*size as f64).log2();
            if s < slack.0 {
                slack = (s, format!("n={n} pairs={:?} first={}", key.0, key.1));
            }
        }
    }
    vec![
        check(S, "second-order class bound", slack.0 >= -1e-9, slack.0, format!("tightest at {}", slack.1)),
        check(S, "second-order classes partition", sums_ok, 0.0, format!("binary n ≤ {}", cfg.second_order_max_n)),
    ]
}

/// `J ≥ 0`, with `J = 0` exactly when all parts have the same distribution.
pub fn js_suite(cfg: &LemmaConfig) -> Result<Vec<LemmaCheck>> {
    const S: &str = "jensen-shannon";
    let mut r = derive(cfg.seed, &[JS_STREAM]);
    let mut min_j = f64::INFINITY;
    let mut min_distinct = f64::INFINITY;
    let mut max_identical = 0.0f64;
    let mut equality_ok = true;
    for _ in 0..cfg.js_instances {
        let k = r.gen_range(2..=4);
        let parts = r.gen_range(2..=5);
        let identical = r.gen_bool(0.25);
        let base: Vec<u64> = loop {
            let c: Vec<u64> = (0..k).map(|_| r.gen_range(0..=4)).collect();
            if c.iter().sum::<u64>() > 0 {
                break c;
            }
        };
        let counts: Vec<Vec<u64>> = (0..parts)
            .map(|_| {
                if identical {
                    let m = r.gen_range(1..=3);
                    base.iter().map(|c| c * m).collect()
                } else {
                    loop {
                        let c: Vec<u64> = (0..k).map(|_| r.gen_range(0..=6)).collect();
                        if c.iter().sum::<u64>() > 0 {
                            break c;
                        }
                    }
                }
            })
            .collect();
        // Same distribution iff counts are proportional (exact integer test).
        let n: Vec<u64> = counts.iter().map(|c| c.iter().sum()).collect();
        let same = (1..parts).all(|i| (0..k).all(|a| counts[i][a] * n[0] == counts[0][a] * n[i]));
        let dists: Vec<Distribution> = counts.iter().map(|c| Distribution::from_counts(c.clone())).collect::<Result<_>>()?;
        let weighted: Vec<(&Distribution, u64)> = dists.iter().zip(&n).map(|(d, &m)| (d, m)).collect();
        let j = generalized_js(&weighted)?;
        min_j = min_j.min(j);
        if same {
            max_identical = max_identical.max(j);
            equality_ok &= j <= 1e-12;
        } else {
            min_distinct = min_distinct.min(j);
            equality_ok &= j > 1e-12;
        }
    }
    Ok(vec![
        check(S, "nonnegative", min_j >= 0.0, min_j, format!("{} instances", cfg.js_instances)),
        check(
            S,
            "zero exactly for identical parts",
            equality_ok,
            min_distinct,
            format!("largest J over identical parts {max_identical:.2e}, smallest over distinct {min_distinct:.3e}"),
        ),
    ])
}

/// Exact bad fractions over all binary types of every length in the grid,
/// the fitted polynomial envelope `p(l)·2^{−r_min γ}`, the one-half bound from
/// `expurgation_half_from` on, and the rejection sampler's acceptance rate.
pub fn expurgation_suite(cfg: &LemmaConfig) -> Result<Vec<LemmaCheck>> {
    const S: &str = "expurgation";
    let r_min = cfg.expurgation_r_min;
    let mut out = Vec::new();
    // worst[(l, γ index)] = largest bad fraction over the l-types
    let mut worst: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut monotone = true;
    for &l in &cfg.expurgation_lengths {
        for ones in 0..=l as u64 {
            let comp = vec![l as u64 - ones, ones];
            let mut prev = f64::INFINITY;
            for (gi, &g) in cfg.expurgation_gammas.iter().enumerate() {
                let f = match expurgation_fraction_exact(&comp, &Expurgation::new(g, Some(r_min)), cfg.budget) {
                    Ok(f) => f.value(),
                    Err(e @ Error::Budget { .. }) => {
                        out.push(skipped(S, format!("fraction l={l} type={comp:?}"), &e));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                monotone &= f <= prev;
                prev = f;
                let e = worst.entry((l, gi)).or_insert(0.0);
                *e = e.max(f);
            }
        }
    }
    out.push(check(S, "fraction nonincreasing in γ", monotone, 0.0, "every type and length"));

    // p̂(l) = max_γ f·2^{r_min γ}; fit log₂ p̂ = a + d·log₂ l, then lift a to envelop.
    let mut pts = Vec::new();
    for &l in &cfg.expurgation_lengths {
        let p = cfg
            .expurgation_gammas
            .iter()
            .enumerate()
            .filter_map(|(gi, &g)| worst.get(&(l, gi)).map(|f| f * (r_min as f64 * g).exp2()))
            .fold(0.0f64, f64::max);
        if p > 0.0 {
            pts.push(((l as f64).log2(), p.log2()));
        }
    }
    if pts.len() >= 2 {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let d = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let a = my - d * mx;
        let lift = pts.iter().map(|p| p.1 - (a + d * p.0)).fold(0.0f64, f64::max);
        let mut margin = f64::INFINITY;
        for (&(l, gi), &f) in &worst {
            let env = (a + lift + d * (l as f64).log2() - r_min as f64 * cfg.expurgation_gammas[gi]).exp2();
            margin = margin.min(env - f);
        }
        out.push(check(
            S,
            "polynomial envelope",
            margin >= -1e-12 && d.is_finite(),
            margin,
            format!("p(l) = 2^{:.4}·l^{d:.4} (least-squares degree, constant lifted by {lift:.4})", a + lift),
        ));
    }
    let mut half = (f64::NEG_INFINITY, String::new());
    for (&(l, gi), &f) in &worst {
        let g = cfg.expurgation_gammas[gi];
        if g >= cfg.expurgation_half_from - 1e-12 && f > half.0 {
            half = (f, format!("l={l} γ={g:.2}"));
        }
    }
    if half.0.is_finite() {
        out.push(check(
            S,
            format!("fraction ≤ 1/2 for γ ≥ {}", cfg.expurgation_half_from),
            half.0 <= 0.5,
            0.5 - half.0,
            format!("largest fraction {:.4} at {}", half.0, half.1),
        ));
    }
    for &l in &cfg.expurgation_lengths {
        if let Some(gi) = cfg
            .expurgation_gammas
            .iter()
            .position(|&g| g >= cfg.expurgation_half_from - 1e-12)
        {
            if let Some(f) = worst.get(&(l, gi)) {
                out.push(info(S, format!("fraction l={l} γ={:.2}", cfg.expurgation_gammas[gi]), *f, "worst type"));
            }
        }
    }

    // The sampler proposes uniform draws from the type class and keeps the
    // γ-independent ones; its acceptance rate must match |T(γ)|/|T|.
    let l = cfg.sampler_length;
    let comp = vec![(l - l / 2) as u64, (l / 2) as u64];
    let exp = Expurgation::new(cfg.sampler_gamma, Some(r_min));
    match expurgation_fraction_exact(&comp, &exp, cfg.budget) {
        Ok(f) => {
            let p = 1.0 - f.value();
            let mut r = derive(cfg.seed, &[SAMPLER_STREAM]);
            let accepted = (0..cfg.sampler_draws)
                .filter(|_| exp.accepts(&sample_uniform_type_class(&comp, &mut r), 2))
                .count() as f64;
            let rate = accepted / cfg.sampler_draws as f64;
            let sigma = (p * (1.0 - p) / cfg.sampler_draws as f64).sqrt();
            let z = if sigma > 0.0 { (rate - p).abs() / sigma } else { (rate - p).abs() * f64::INFINITY };
            out.push(check(
                S,
                "sampler acceptance rate",
                z.is_nan() || z <= 3.0,
                3.0 - z,
                format!("l={l} γ={}: sampled {rate:.5}, exact {p:.5}, {z:.2}σ", cfg.sampler_gamma),
            ));
        }
        Err(e @ Error::Budget { .. }) => out.push(skipped(S, "sampler acceptance rate", &e)),
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// The two-book library used for one packing length: `(l, N = 4)` and
/// `(l − 2, N = 2)`, balanced binary types.
pub fn packing_library(l: usize, seed: u64) -> Result<CodebookLibrary> {
    let book = |len: usize, n: f64| {
        let spec = BookSpec::new(len, vec![(len - len / 2) as u64, (len / 2) as u64], n.log2() / len as f64);
        debug_assert_eq!(codebook_size(len, spec.rate), n as u128);
        spec
    };
    let params = LibraryParams {
        alphabet: 2,
        ratio_bound: 0.5,
        length_bound: l,
        books: vec![book(l, 4.0), book(l - 2, 2.0)],
    };
    build_library(&params, &BuildOptions::default(), seed)
}

/// `K^{k,q}[V]` for every realized `V`, counted by laying out each tuple's
/// rows position by position (no shared code with the census).
pub fn packing_recount(lib: &CodebookLibrary, idx: &PackingIndex) -> BTreeMap<SubtypeKey, u128> {
    let k = lib.alphabet();
    let geom = idx.geometry(&lib.params);
    let s = geom.second_row_len();
    let a = geom.first_row_start().max(0) as usize;
    let b = s - idx.q;
    let mut bounds = vec![0usize];
    for &l in &geom.lengths {
        bounds.push(bounds.last().unwrap() + l);
    }
    let books: Vec<_> = idx.ks.iter().map(|&h| lib.book(h)).collect();
    let hat = lib.book(idx.k_hat);
    let mut out = BTreeMap::new();

    fn walk(
        depth: usize,
        picks: &mut Vec<usize>,
        books: &[&crate::codebook::Codebook],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == books.len() {
            visit(picks);
            return;
        }
        for i in 0..books[depth].len() {
            picks.push(i);
            walk(depth + 1, picks, books, visit);
            picks.pop();
        }
    }

    for a_hat in 0..hat.len() {
        let x_hat = hat.codeword(a_hat);
        walk(0, &mut Vec::new(), &books, &mut |picks| {
            if idx.excludes_self_pair() && picks[0] == a_hat {
                return;
            }
            let row: Vec<Symbol> = picks
                .iter()
                .zip(&books)
                .flat_map(|(&i, bk)| bk.codeword(i).iter().copied())
                .collect();
            let mut key = Vec::new();
            if a == 0 {
                key.push(0);
            } else {
                let mut c = vec![0u64; k];
                row[..a].iter().for_each(|&x| c[x as usize] += 1);
                key.extend([1, k as u64]);
                key.extend(c);
            }
            for w in 0..geom.g() {
                let mut c = vec![0u64; k * k];
                for p in bounds[w].max(a)..bounds[w + 1].min(b) {
                    c[x_hat[p - a] as usize * k + row[p] as usize] += 1;
                }
                key.extend([3, k as u64, k as u64]);
                key.extend(c);
            }
            if idx.q == 0 {
                key.push(0);
            } else {
                let mut c = vec![0u64; k];
                row[b..].iter().for_each(|&x| c[x as usize] += 1);
                key.extend([1, k as u64]);
                key.extend(c);
            }
            *out.entry(SubtypeKey(key)).or_insert(0u128) += 1;
        });
    }
    out
}

/// Summary of the packing statistic for one library.
#[derive(Clone, Debug, PartialEq)]
pub struct PackingSummary {
    pub length: usize,
    pub indices: usize,
    pub subtypes: usize,
    pub mismatches: usize,
    /// `max_{k,q,V} K·2^{−E}` and `Σ_{k,q,V} K·2^{−E}`.
    pub max_term: f64,
    pub score: f64,
}

pub fn packing_summary(lib: &CodebookLibrary, budget: u128) -> Result<PackingSummary> {
    let mut s = PackingSummary {
        length: lib.max_length(),
        indices: 0,
        subtypes: 0,
        mismatches: 0,
        max_term: 0.0,
        score: 0.0,
    };
    for idx in admissible_indices(&lib.params) {
        let census = packing_census(lib, &idx, budget)?;
        let recount = packing_recount(lib, &idx);
        s.indices += 1;
        s.subtypes += census.len();
        s.mismatches += census.len().abs_diff(recount.len());
        for (key, (v, kk)) in &census {
            if recount.get(key) != Some(kk) {
                s.mismatches += 1;
            }
            let term = *kk as f64 * (-packing_bound_exponent(&idx, v, &lib.params)?).exp2();
            s.max_term = s.max_term.max(term);
            s.score += term;
        }
    }
    Ok(s)
}

/// Census vs recount at each length, and the measured prefactor
/// `max K·2^{−E}` compared across the lengths.
pub fn packing_suite(cfg: &LemmaConfig) -> Result<Vec<LemmaCheck>> {
    const S: &str = "packing";
    let mut out = Vec::new();
    let mut prefactors = Vec::new();
    for &l in &cfg.packing_lengths {
        let lib = packing_library(l, cfg.seed)?;
        match packing_summary(&lib, cfg.budget) {
            Ok(p) => {
                out.push(check(
                    S,
                    format!("census matches recount l={l}"),
                    p.mismatches == 0,
                    -(p.mismatches as f64),
                    format!("{} indices, {} subtype sequences", p.indices, p.subtypes),
                ));
                out.push(info(S, format!("prefactor l={l}"), p.max_term, format!("sum over all terms {:.4}", p.score)));
                prefactors.push((l, p.max_term));
            }
            Err(e @ Error::Budget { .. }) => out.push(skipped(S, format!("census l={l}"), &e)),
            Err(e) => return Err(e),
        }
    }
    if let (Some(first), Some(last)) = (prefactors.first(), prefactors.last()) {
        if prefactors.len() >= 2 {
            let ratio = last.1 / first.1;
            out.push(check(
                S,
                format!("prefactor growth l={} vs l={}", last.0, first.0),
                ratio <= cfg.packing_prefactor_ratio,
                cfg.packing_prefactor_ratio - ratio,
                format!("{:.4} / {:.4} = {ratio:.3}", last.1, first.1),
            ));
        }
    }
    Ok(out)
}
