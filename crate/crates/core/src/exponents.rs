//! Capacity, the random-coding exponent and related quantities.
//!
//! The constant-composition random coding exponent is
//! `E_r(R,P,W) = min_V D(V‖W|P) + |I(P,V) − R|⁺`, minimized over conditional
//! distributions `V`. Two independent routes compute it:
//!
//! * the primal route minimizes over `V` directly. The `|·|⁺` kink splits it
//!   into two smooth regimes: the unconstrained minimizer of `D + I` (when its
//!   mutual information is at least `R`), or `min D` subject to `I = R`, which is
//!   found by bisecting the multiplier λ of `D + λI`;
//! * the dual route maximizes `G(ρ) − ρR` over `ρ ∈ [0,1]`, where
//!   `G(ρ) = min_V D + ρI = min_Q −(1+ρ) Σ_x P(x) log Σ_y W(y|x)^{1/(1+ρ)} Q(y)^{ρ/(1+ρ)}`.
//!
//! Gallager's i.i.d. `E₀(ρ,P)` is also provided. For a fixed `P` it gives only
//! a lower bound on the constant-composition exponent, with equality at the
//! optimal input, so it is not used as the cross-check.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{domain, Error, Result};
use crate::rng::{self, domain as tag};
use crate::types::{count_types, enumerate_types, Distribution, JointDistribution};

const LN2: f64 = std::f64::consts::LN_2;

/// `η_n = 1/log₂ n`.
pub fn default_eta(n: usize) -> f64 {
    1.0 / (n.max(2) as f64).log2()
}

fn check_shapes(p: &Distribution, w: &ChannelMatrix) -> Result<()> {
    if p.alphabet_size() != w.inputs() {
        return domain(format!(
            "input distribution over {} symbols, channel has {} inputs",
            p.alphabet_size(),
            w.inputs()
        ));
    }
    Ok(())
}

/// `I(P,W)`.
pub fn channel_mi(p: &Distribution, w: &ChannelMatrix) -> Result<f64> {
    check_shapes(p, w)?;
    let v = Conditional::from_channel(w);
    Ok(v.mi(p.probs()))
}

/// A conditional distribution `V(y|x)` stored row-major.
#[derive(Clone, Debug)]
struct Conditional {
    nx: usize,
    ny: usize,
    v: Vec<f64>,
}

impl Conditional {
    fn from_channel(w: &ChannelMatrix) -> Self {
        Self {
            nx: w.inputs(),
            ny: w.outputs(),
            v: (0..w.inputs()).flat_map(|x| w.row(x).to_vec()).collect(),
        }
    }

    fn row(&self, x: usize) -> &[f64] {
        &self.v[x * self.ny..(x + 1) * self.ny]
    }

    fn output(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.ny];
        for x in 0..self.nx {
            if p[x] > 0.0 {
                for (qy, v) in q.iter_mut().zip(self.row(x)) {
                    *qy += p[x] * v;
                }
            }
        }
        q
    }

    fn mi(&self, p: &[f64]) -> f64 {
        let q = self.output(p);
        let mut i = 0.0;
        for x in 0..self.nx {
            if p[x] <= 0.0 {
                continue;
            }
            for (y, &v) in self.row(x).iter().enumerate() {
                if v > 0.0 {
                    i += p[x] * v * (v / q[y]).log2();
                }
            }
        }
        i.max(0.0)
    }

    fn div(&self, p: &[f64], w: &Conditional) -> f64 {
        let mut d = 0.0;
        for x in 0..self.nx {
            if p[x] <= 0.0 {
                continue;
            }
            for (&v, &wv) in self.row(x).iter().zip(w.row(x)) {
                if v > 0.0 {
                    if wv <= 0.0 {
                        return f64::INFINITY;
                    }
                    d += p[x] * v * (v / wv).log2();
                }
            }
        }
        d.max(0.0)
    }

    fn joint(&self, p: &Distribution) -> Result<JointDistribution> {
        let mut probs = Vec::with_capacity(self.nx * self.ny);
        for x in 0..self.nx {
            probs.extend(self.row(x).iter().map(|v| p.prob(x) * v));
        }
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= s);
        JointDistribution::new(vec![self.nx, self.ny], probs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMethod {
    Direct,
    Gallager,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentResult {
    /// Bits per symbol.
    pub value: f64,
    /// The minimizing joint `P × V`.
    pub witness: JointDistribution,
    pub method: ExponentMethod,
}

/// Minimizes `f_λ(V) = D(V‖W|P) + λ I(P,V)` over `V` supported where `W` is.
struct Primal<'a> {
    p: &'a [f64],
    w: Conditional,
    restarts: usize,
    seed: u64,
}

const MAX_ITERS: usize = 200_000;

impl<'a> Primal<'a> {
    fn objective(&self, v: &Conditional, lambda: f64) -> f64 {
        v.div(self.p, &self.w) + lambda * v.mi(self.p)
    }

    /// Gradient rows (up to per-row constants) and the Frank–Wolfe gap, which
    /// bounds `f_λ(V) − min f_λ` for this convex objective.
    fn gradient(&self, v: &Conditional, lambda: f64, g: &mut [f64]) -> f64 {
        let q = v.output(self.p);
        let mut gap = 0.0;
        for x in 0..v.nx {
            if self.p[x] <= 0.0 {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut avg = 0.0;
            for y in 0..v.ny {
                let i = x * v.ny + y;
                if self.w.v[i] <= 0.0 {
                    continue;
                }
                let vv = v.v[i].max(1e-300);
                let gi = (vv / self.w.v[i]).log2() + lambda * (vv / q[y]).log2();
                g[i] = gi;
                lo = lo.min(gi);
                avg += v.v[i] * gi;
            }
            gap += self.p[x] * (avg - lo);
        }
        gap.max(0.0)
    }

    /// Exponentiated-gradient step `V ← V·2^{−s g}` renormalized per row.
    fn step(&self, v: &Conditional, g: &[f64], s: f64) -> Conditional {
        let mut out = v.clone();
        for x in 0..v.nx {
            if self.p[x] <= 0.0 {
                continue;
            }
            let row = x * v.ny..(x + 1) * v.ny;
            let lo = row
                .clone()
                .filter(|&i| self.w.v[i] > 0.0)
                .map(|i| g[i])
                .fold(f64::INFINITY, f64::min);
            let mut z = 0.0;
            for i in row.clone() {
                out.v[i] = if self.w.v[i] > 0.0 {
                    (v.v[i] * (-(s * (g[i] - lo))).exp2()).max(1e-300)
                } else {
                    0.0
                };
                z += out.v[i];
            }
            for i in row {
                out.v[i] /= z;
            }
        }
        out
    }

    fn descend(&self, mut v: Conditional, lambda: f64, tol: f64) -> Result<Conditional> {
        let safe = 1.0 / (1.0 + lambda);
        let mut s = safe;
        let mut g = vec![0.0; v.v.len()];
        let mut f = self.objective(&v, lambda);
        for _ in 0..MAX_ITERS {
            let gap = self.gradient(&v, lambda, &mut g);
            if gap <= tol {
                return Ok(v);
            }
            // Try a longer step first; the step 1/(1+λ) always decreases f
            // (it is an exact alternating-minimization update).
            let trial = self.step(&v, &g, (2.0 * s).min(8.0 * safe));
            let ft = self.objective(&trial, lambda);
            if ft < f {
                s = (2.0 * s).min(8.0 * safe);
                v = trial;
                f = ft;
            } else {
                s = safe;
                let next = self.step(&v, &g, safe);
                let fn_ = self.objective(&next, lambda);
                if fn_ >= f && gap <= 1e-7 {
                    // rounding floor reached
                    return Ok(v);
                }
                v = next;
                f = fn_;
            }
        }
        let gap = self.gradient(&v, lambda, &mut g);
        if gap <= tol.max(1e-9) {
            Ok(v)
        } else {
            Err(Error::Numeric(format!(
                "exponent minimization did not converge (gap {gap:e} after {MAX_ITERS} steps)"
            )))
        }
    }

    fn random_start<R: Rng>(&self, rng: &mut R) -> Conditional {
        let mut v = self.w.clone();
        for x in 0..v.nx {
            let row = x * v.ny..(x + 1) * v.ny;
            let mut z = 0.0;
            for i in row.clone() {
                v.v[i] = if self.w.v[i] > 0.0 {
                    -(1.0 - rng.gen::<f64>()).ln() + 1e-3
                } else {
                    0.0
                };
                z += v.v[i];
            }
            for i in row {
                v.v[i] /= z;
            }
        }
        v
    }

    /// Minimizer of `f_λ`, started at `W`, at `warm` if given, and at random points.
    fn solve(&self, lambda: f64, warm: Option<&Conditional>, tol: f64) -> Result<Conditional> {
        let mut best = self.descend(warm.cloned().unwrap_or_else(|| self.w.clone()), lambda, tol)?;
        let mut fb = self.objective(&best, lambda);
        let mut r = rng::derive(self.seed, &[tag::EXPONENT_RESTART, lambda.to_bits()]);
        for _ in 0..self.restarts {
            let start = self.random_start(&mut r);
            let cand = self.descend(start, lambda, tol)?;
            let fc = self.objective(&cand, lambda);
            if fc < fb {
                best = cand;
                fb = fc;
            }
        }
        Ok(best)
    }

    /// `min D(V‖W|P)` subject to `I(P,V) ≤ target`, given `I(P,W) > target`.
    /// Bisects λ over `[0, hi]`; returns `None` if even `λ = hi` leaves `I > target`.
    fn constrained(&self, target: f64, hi: f64, tol: f64) -> Result<Option<Conditional>> {
        let inner = tol * 0.1;
        let mut v_hi = self.solve(hi, None, inner)?;
        if v_hi.mi(self.p) > target + 1e-12 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0, hi);
        let mut v_lo = self.w.clone();
        for _ in 0..200 {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let v = self.descend(v_lo.clone(), mid, inner)?;
            let i = v.mi(self.p);
            if i > target {
                lo = mid;
                v_lo = v;
            } else {
                hi = mid;
                v_hi = v;
            }
            if (i - target).abs() < 1e-12 {
                break;
            }
        }
        // Polish the final point with restarts.
        let v = self.solve(hi, Some(&v_hi), inner)?;
        Ok(Some(if v.mi(self.p) <= target + 1e-10 { v } else { v_hi }))
    }
}

fn objective_rcb(v: &Conditional, p: &[f64], w: &Conditional, r: f64) -> f64 {
    v.div(p, w) + (v.mi(p) - r).max(0.0)
}

/// Direct minimization of `D(V‖W|P) + |I(P,V) − R|⁺`.
pub fn random_coding_exponent(r: f64, p: &Distribution, w: &ChannelMatrix, tol: f64) -> Result<ExponentResult> {
    check_shapes(p, w)?;
    if !(r >= 0.0) {
        return domain(format!("rate {r} must be non-negative"));
    }
    let wc = Conditional::from_channel(w);
    let pp = p.probs();
    let primal = Primal {
        p: pp,
        w: wc.clone(),
        restarts: 5,
        seed: 0x5eed,
    };
    let result = |v: &Conditional| -> Result<ExponentResult> {
        Ok(ExponentResult {
            value: objective_rcb(v, pp, &wc, r),
            witness: v.joint(p)?,
            method: ExponentMethod::Direct,
        })
    };
    if wc.mi(pp) <= r {
        return result(&wc);
    }
    let inner = tol * 0.1;
    let v1 = primal.solve(1.0, None, inner)?;
    if v1.mi(pp) >= r {
        return result(&v1);
    }
    match primal.constrained(r, 1.0, tol)? {
        Some(v) => {
            // Either regime's candidate is an upper bound; keep the smaller.
            if objective_rcb(&v, pp, &wc, r) <= objective_rcb(&v1, pp, &wc, r) {
                result(&v)
            } else {
                result(&v1)
            }
        }
        None => result(&v1),
    }
}

/// `G(ρ) = min_Q −(1+ρ) Σ_x P(x) log₂ Σ_y W(y|x)^{1/(1+ρ)} Q(y)^{ρ/(1+ρ)}`
/// by alternating minimization; returns `(G, V)` with `V` the minimizer of `D + ρI`.
fn dual_inner(rho: f64, p: &[f64], w: &Conditional, tol: f64) -> Result<(f64, Conditional)> {
    let a = 1.0 / (1.0 + rho);
    let b = rho / (1.0 + rho);
    let mut v = w.clone();
    let mut q = w.output(p);
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mut phi = 0.0;
        for x in 0..w.nx {
            if p[x] <= 0.0 {
                continue;
            }
            let mut z = 0.0;
            for y in 0..w.ny {
                let i = x * w.ny + y;
                v.v[i] = if w.v[i] > 0.0 && q[y] > 0.0 {
                    w.v[i].powf(a) * q[y].powf(b)
                } else {
                    0.0
                };
                z += v.v[i];
            }
            for y in 0..w.ny {
                v.v[x * w.ny + y] /= z;
            }
            phi -= (1.0 + rho) * p[x] * z.log2();
        }
        q = v.output(p);
        if (prev - phi).abs() <= tol {
            return Ok((phi, v));
        }
        prev = phi;
    }
    Err(Error::Numeric("dual inner minimization did not converge".into()))
}

/// Maximizes a unimodal function on `[lo, hi]`; returns `(argmax, max)`.
fn golden_max(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv * (hi - lo);
    let mut d = lo + inv * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv * (hi - lo);
            fd = f(d)?;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for end in [lo, hi] {
        let fe = f(end)?;
        if fe > best.1 {
            best = (end, fe);
        }
    }
    Ok(best)
}

/// The dual route: `max_{ρ∈[0,1]} G(ρ) − ρR`, maximized by golden-section search.
pub fn random_coding_exponent_gallager(
    r: f64,
    p: &Distribution,
    w: &ChannelMatrix,
    tol: f64,
) -> Result<ExponentResult> {
    check_shapes(p, w)?;
    if !(r >= 0.0) {
        return domain(format!("rate {r} must be non-negative"));
    }
    let wc = Conditional::from_channel(w);
    let pp = p.probs();
    let inner = (tol * 1e-3).max(1e-15);
    if wc.mi(pp) <= r {
        return Ok(ExponentResult {
            value: 0.0,
            witness: wc.joint(p)?,
            method: ExponentMethod::Gallager,
        });
    }
    let (rho, value) = golden_max(0.0, 1.0, tol.max(1e-10), |rho| Ok(dual_inner(rho, pp, &wc, inner)?.0 - rho * r))?;
    let (_, v) = dual_inner(rho, pp, &wc, inner)?;
    Ok(ExponentResult {
        value: value.max(0.0),
        witness: v.joint(p)?,
        method: ExponentMethod::Gallager,
    })
}

/// Gallager's `E₀(ρ,P,W) = −log₂ Σ_y (Σ_x P(x) W(y|x)^{1/(1+ρ)})^{1+ρ}`.
pub fn gallager_e0(rho: f64, p: &Distribution, w: &ChannelMatrix) -> f64 {
    let a = 1.0 / (1.0 + rho);
    let mut s = 0.0;
    for y in 0..w.outputs() {
        let inner: f64 = (0..w.inputs()).map(|x| p.prob(x) * w.get(x, y).powf(a)).sum();
        s += inner.powf(1.0 + rho);
    }
    -s.log2()
}

/// `max_ρ E₀(ρ,P,W) − ρR`: the i.i.d.-ensemble exponent for input `P`.
pub fn gallager_iid_exponent(r: f64, p: &Distribution, w: &ChannelMatrix) -> Result<f64> {
    check_shapes(p, w)?;
    let (_, v) = golden_max(0.0, 1.0, 1e-10, |rho| Ok(gallager_e0(rho, p, w) - rho * r))?;
    Ok(v.max(0.0))
}

/// `min D(V‖W|P)` over `V` with `I(P,V) ≤ R + η`; `+∞` when no such `V` exists.
///
/// Solved through its Lagrange dual `max_{λ≥0} G(λ) − λ(R+η)`. The multiplier
/// can be unbounded (e.g. when `R + η` equals the smallest achievable `I`), so
/// `G` is evaluated by a solver that stays well conditioned for large λ.
pub fn threshold_exponent(r: f64, p: &Distribution, w: &ChannelMatrix, eta: f64, tol: f64) -> Result<f64> {
    check_shapes(p, w)?;
    if !(eta >= 0.0) || !(r >= 0.0) {
        return domain("threshold exponent needs R ≥ 0 and η ≥ 0");
    }
    let wc = Conditional::from_channel(w);
    let pp = p.probs();
    let target = r + eta;
    if wc.mi(pp) <= target {
        return Ok(0.0);
    }
    if min_mi_on_support(pp, &wc) > target + 1e-9 {
        return Ok(f64::INFINITY);
    }
    let inner = (tol * 1e-2).max(1e-14);
    // λ = s/(1−s) maps the unimodal dual onto a bounded interval.
    let (_, v) = golden_max(0.0, 1.0 - 1e-9, 1e-11, |s| {
        let lambda = s / (1.0 - s);
        Ok(dual_g_large(lambda, pp, &wc, inner)? - lambda * target)
    })?;
    Ok(v.max(0.0))
}

/// `G(λ) = min_V D(V‖W|P) + λ I(P,V)` through its form as a convex
/// minimization over output laws `Q`, by exponentiated gradient with
/// backtracking. Written with `expm1`/`ln_1p` so that `(1+λ)·log(1 + O(1/λ))`
/// keeps full precision for large λ.
fn dual_g_large(lambda: f64, p: &[f64], w: &Conditional, tol: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let a = 1.0 / (1.0 + lambda);
    let ny = w.ny;
    let domain_y: Vec<bool> = w.output(p).iter().map(|&q| q > 0.0).collect();
    // per x: S_x − 1 and, per y, expm1(a·ln(W/Q)) (−1 where W = 0)
    let eval = |q: &[f64], grad: Option<&mut [f64]>| -> f64 {
        let mut phi = 0.0;
        let mut g_acc = vec![0.0; ny];
        for x in 0..w.nx {
            if p[x] <= 0.0 {
                continue;
            }
            let mut e = vec![0.0; ny];
            let mut sm1 = 0.0;
            for y in 0..ny {
                if !domain_y[y] || q[y] <= 0.0 {
                    continue;
                }
                let wv = w.v[x * ny + y];
                e[y] = if wv > 0.0 { (a * (wv / q[y]).ln()).exp_m1() } else { -1.0 };
                sm1 += q[y] * e[y];
            }
            let s = 1.0 + sm1;
            phi -= (1.0 + lambda) * p[x] * sm1.ln_1p() / LN2;
            for y in 0..ny {
                if domain_y[y] {
                    // ∂φ/∂Q_y + λ/ln2 (a constant per y, irrelevant on the simplex)
                    g_acc[y] -= lambda * p[x] * (e[y] - sm1) / s / LN2;
                }
            }
        }
        if let Some(g) = grad {
            g.copy_from_slice(&g_acc);
        }
        phi
    };
    let mut q = w.output(p);
    let mut g = vec![0.0; ny];
    let mut phi = eval(&q, Some(&mut g));
    let mut t = 1.0;
    for _ in 0..MAX_ITERS {
        let lo = (0..ny).filter(|&y| domain_y[y]).map(|y| g[y]).fold(f64::INFINITY, f64::min);
        let gap: f64 = (0..ny).filter(|&y| domain_y[y]).map(|y| q[y] * (g[y] - lo)).sum();
        if gap <= tol {
            return Ok(phi);
        }
        loop {
            let mut cand: Vec<f64> = (0..ny)
                .map(|y| if domain_y[y] { (q[y] * (-(t * (g[y] - lo))).exp()).max(1e-300) } else { 0.0 })
                .collect();
            let z: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= z);
            let pc = eval(&cand, None);
            if pc < phi {
                q = cand;
                phi = eval(&q, Some(&mut g));
                t *= 2.0;
                break;
            }
            t *= 0.5;
            if t < 1e-30 {
                // No representable decrease left: converged to rounding precision.
                return Ok(phi);
            }
        }
    }
    Err(Error::Numeric("dual minimization over output laws did not converge".into()))
}

/// `min_V I(P,V)` over `V` supported inside `W`'s support, by alternating
/// minimization of `D(V‖Q|P)` over `V` and `Q`.
fn min_mi_on_support(p: &[f64], w: &Conditional) -> f64 {
    let mut v = w.clone();
    let mut prev = f64::INFINITY;
    for _ in 0..100_000 {
        let q = v.output(p);
        for x in 0..w.nx {
            let row = x * w.ny..(x + 1) * w.ny;
            let z: f64 = row.clone().filter(|&i| w.v[i] > 0.0).map(|i| q[i - x * w.ny]).sum();
            for i in row {
                v.v[i] = if w.v[i] > 0.0 && z > 0.0 { q[i - x * w.ny] / z } else { 0.0 };
            }
            if z <= 0.0 {
                // No overlap with the current output law: keep W's row.
                v.v[x * w.ny..(x + 1) * w.ny].copy_from_slice(w.row(x));
            }
        }
        let i = v.mi(p);
        if (prev - i).abs() < 1e-14 {
            return i;
        }
        prev = i;
    }
    prev
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Capacity {
    pub value: f64,
    pub input: Distribution,
    /// Certified `upper − lower` at termination.
    pub gap: f64,
}

/// Blahut–Arimoto with the standard bounds
/// `I(p,W) ≤ C ≤ max_x D(W(·|x) ‖ pW)`.
pub fn capacity(w: &ChannelMatrix, tol: f64) -> Result<Capacity> {
    if !(tol > 0.0) {
        return domain("capacity tolerance must be positive");
    }
    let wc = Conditional::from_channel(w);
    let nx = w.inputs();
    let mut p = vec![1.0 / nx as f64; nx];
    for _ in 0..1_000_000 {
        let q = wc.output(&p);
        let d: Vec<f64> = (0..nx)
            .map(|x| {
                let mut s = 0.0;
                for (y, &v) in wc.row(x).iter().enumerate() {
                    if v > 0.0 {
                        s += v * (v / q[y]).log2();
                    }
                }
                s
            })
            .collect();
        let lower = wc.mi(&p);
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol {
            return Ok(Capacity {
                value: lower,
                input: Distribution::new(p.clone()).or_else(|_| {
                    let s: f64 = p.iter().sum();
                    Distribution::new(p.iter().map(|v| v / s).collect())
                })?,
                gap: upper - lower,
            });
        }
        let mut z = 0.0;
        for x in 0..nx {
            p[x] *= (d[x] * LN2).exp();
            z += p[x];
        }
        p.iter_mut().for_each(|v| *v /= z);
    }
    Err(Error::Numeric("Blahut–Arimoto did not reach the requested gap".into()))
}

/// Best input types for a rate, as used by the channel-aware sender.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimalType {
    /// Maximizer over all distributions (via `max_ρ max_P E₀ − ρR`).
    pub continuous: Distribution,
    pub continuous_value: f64,
    /// Best l-type found, with its constant-composition exponent.
    pub rounded: Distribution,
    pub rounded_value: f64,
    /// Whether every l-type was evaluated.
    pub exhaustive: bool,
}

/// `max_P E₀(ρ,P,W)` by exponentiated-gradient descent on
/// `F(P) = Σ_y (Σ_x P(x) W(y|x)^{1/(1+ρ)})^{1+ρ}` (convex in `P`).
fn max_e0_over_inputs(rho: f64, w: &ChannelMatrix) -> (Vec<f64>, f64) {
    let nx = w.inputs();
    let a = 1.0 / (1.0 + rho);
    let pow: Vec<f64> = (0..nx)
        .flat_map(|x| (0..w.outputs()).map(move |y| (x, y)))
        .map(|(x, y)| w.get(x, y).powf(a))
        .collect();
    let ny = w.outputs();
    let f = |p: &[f64]| -> f64 {
        (0..ny)
            .map(|y| (0..nx).map(|x| p[x] * pow[x * ny + y]).sum::<f64>().powf(1.0 + rho))
            .sum()
    };
    let mut p = vec![1.0 / nx as f64; nx];
    let mut fp = f(&p);
    let mut s = 1.0;
    for _ in 0..20_000 {
        let inner: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| p[x] * pow[x * ny + y]).sum::<f64>())
            .collect();
        let g: Vec<f64> = (0..nx)
            .map(|x| (1.0 + rho) * (0..ny).map(|y| pow[x * ny + y] * inner[y].powf(rho)).sum::<f64>() / fp)
            .collect();
        let avg: f64 = (0..nx).map(|x| p[x] * g[x]).sum();
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        if avg - lo < 1e-13 {
            break;
        }
        loop {
            let mut cand: Vec<f64> = (0..nx).map(|x| p[x] * (-(s * (g[x] - lo))).exp()).collect();
            let z: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= z);
            let fc = f(&cand);
            if fc <= fp {
                p = cand;
                fp = fc;
                s *= 1.5;
                break;
            }
            s *= 0.5;
            if s < 1e-12 {
                break;
            }
        }
        if s < 1e-12 {
            break;
        }
    }
    (p, -fp.log2())
}

/// Maximizes `E_r(R,P,W)` over l-types `P`. All l-types are evaluated when
/// there are at most `budget` of them; otherwise the continuous optimum is
/// rounded and improved by single-count moves.
pub fn optimal_type_for_rate(l: usize, r: f64, w: &ChannelMatrix, tol: f64, budget: u128) -> Result<OptimalType> {
    if l == 0 {
        return domain("length must be positive");
    }
    let nx = w.inputs();
    // Continuous optimum through the i.i.d. dual (equal to the constant-
    // composition optimum once maximized over P).
    let mut best_rho = (0.0, vec![1.0 / nx as f64; nx], 0.0);
    for k in 0..=50 {
        let rho = k as f64 / 50.0;
        let (p, e0) = max_e0_over_inputs(rho, w);
        if e0 - rho * r > best_rho.2 {
            best_rho = (rho, p, e0 - rho * r);
        }
    }
    let lo = (best_rho.0 - 0.02).max(0.0);
    let hi = (best_rho.0 + 0.02).min(1.0);
    let (rho, _) = golden_max(lo, hi, 1e-9, |rho| Ok(max_e0_over_inputs(rho, w).1 - rho * r))?;
    let (pc, e0) = max_e0_over_inputs(rho, w);
    let (cont_p, cont_v) = if e0 - rho * r >= best_rho.2 {
        (pc, e0 - rho * r)
    } else {
        (best_rho.1, best_rho.2)
    };
    let s: f64 = cont_p.iter().sum();
    let continuous = Distribution::new(cont_p.iter().map(|v| v / s).collect())?;

    let eval = |counts: &[u64]| -> Result<f64> {
        let p = Distribution::from_counts(counts.to_vec())?;
        Ok(random_coding_exponent(r, &p, w, tol)?.value)
    };
    let exhaustive = count_types(l as u64, nx) <= budget;
    let (best_counts, best_value) = if exhaustive {
        let mut best: Option<(Vec<u64>, f64)> = None;
        for c in enumerate_types(l as u64, nx) {
            let v = eval(&c)?;
            if best.as_ref().map_or(true, |(_, b)| v > b + 1e-12) {
                best = Some((c, v));
            }
        }
        best.expect("at least one type")
    } else {
        let start = Distribution::round_to_type(continuous.probs(), l as u64)?;
        let mut cur = start.counts().unwrap().to_vec();
        let mut cur_v = eval(&cur)?;
        loop {
            let mut improved = false;
            for from in 0..nx {
                for to in 0..nx {
                    if from == to || cur[from] == 0 {
                        continue;
                    }
                    let mut c = cur.clone();
                    c[from] -= 1;
                    c[to] += 1;
                    let v = eval(&c)?;
                    if v > cur_v + 1e-12 {
                        cur = c;
                        cur_v = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (cur, cur_v)
    };
    Ok(OptimalType {
        continuous,
        continuous_value: cont_v.max(0.0),
        rounded: Distribution::from_counts(best_counts)?,
        rounded_value: best_value,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::binary_entropy;

    fn uni2() -> Distribution {
        Distribution::uniform(2).unwrap()
    }

    #[test]
    fn mi_closed_forms() {
        let id = ChannelMatrix::identity(3).unwrap();
        let p = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let h = crate::types::entropy(&p);
        assert!((channel_mi(&p, &id).unwrap() - h).abs() < 1e-12);
        let c = ChannelMatrix::constant_output(2, 3, 1).unwrap();
        assert_eq!(channel_mi(&uni2(), &c).unwrap(), 0.0);
        let b = ChannelMatrix::bsc(0.1).unwrap();
        assert!((channel_mi(&uni2(), &b).unwrap() - (1.0 - binary_entropy(0.1))).abs() < 1e-12);
    }

    #[test]
    fn capacity_cases() {
        let id = ChannelMatrix::identity(4).unwrap();
        assert!((capacity(&id, 1e-10).unwrap().value - 2.0).abs() < 1e-9);
        for eps in [0.05, 0.1, 0.3] {
            let c = capacity(&ChannelMatrix::bsc(eps).unwrap(), 1e-10).unwrap();
            assert!((c.value - (1.0 - binary_entropy(eps))).abs() < 1e-8);
        }
        // Z channel: capacity exceeds the uniform-input MI
        let z = ChannelMatrix::new(vec![vec![1.0, 0.0], vec![0.4, 0.6]]).unwrap();
        let c = capacity(&z, 1e-10).unwrap();
        assert!(c.value > channel_mi(&uni2(), &z).unwrap());
        assert!(c.gap < 1e-10);
    }

    #[test]
    fn exponent_zero_above_mi() {
        let w = ChannelMatrix::bsc(0.1).unwrap();
        let i = channel_mi(&uni2(), &w).unwrap();
        let e = random_coding_exponent(i + 0.01, &uni2(), &w, 1e-9).unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.witness.get(&[0, 1]) - 0.05).abs() < 1e-15);
        assert_eq!(random_coding_exponent_gallager(i, &uni2(), &w, 1e-9).unwrap().value, 0.0);
        assert!(random_coding_exponent(i - 0.01, &uni2(), &w, 1e-9).unwrap().value > 0.0);
    }

    #[test]
    fn bsc_direct_matches_dual() {
        let w = ChannelMatrix::bsc(0.1).unwrap();
        for r in [0.0, 0.1, 0.25, 0.4, 0.5] {
            let d = random_coding_exponent(r, &uni2(), &w, 1e-9).unwrap();
            let g = random_coding_exponent_gallager(r, &uni2(), &w, 1e-9).unwrap();
            assert!((d.value - g.value).abs() < 1e-6, "R={r}: {} vs {}", d.value, g.value);
            // symmetric channel, uniform input: the i.i.d. form coincides
            assert!((gallager_iid_exponent(r, &uni2(), &w).unwrap() - g.value).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_channel_at_zero_rate() {
        // Only V = identity is feasible, so E_r(0) = D + I = H(P).
        let id = ChannelMatrix::identity(2).unwrap();
        let d = random_coding_exponent(0.0, &uni2(), &id, 1e-9).unwrap();
        assert!((d.value - 1.0).abs() < 1e-9);
        let g = random_coding_exponent_gallager(0.0, &uni2(), &id, 1e-9).unwrap();
        assert!((g.value - 1.0).abs() < 1e-6);
        assert!(threshold_exponent(0.0, &uni2(), &id, 0.0, 1e-9).unwrap().is_infinite());
    }

    #[test]
    fn threshold_cases() {
        let w = ChannelMatrix::bsc(0.1).unwrap();
        assert_eq!(threshold_exponent(0.1, &uni2(), &w, 10.0, 1e-9).unwrap(), 0.0);
        for (r, eta) in [(0.1, 0.05), (0.2, 0.0), (0.3, 0.1)] {
            let er = random_coding_exponent(r, &uni2(), &w, 1e-9).unwrap().value;
            let th = threshold_exponent(r, &uni2(), &w, eta, 1e-9).unwrap();
            assert!(er <= th + eta + 1e-6, "R={r} η={eta}: {er} > {th} + {eta}");
        }
    }

    #[test]
    fn witness_consistency() {
        let w = ChannelMatrix::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3]]).unwrap();
        let p = Distribution::new(vec![0.35, 0.65]).unwrap();
        let e = random_coding_exponent(0.05, &p, &w, 1e-10).unwrap();
        let m = e.witness.marginal(0).unwrap();
        assert!((m.prob(0) - 0.35).abs() < 1e-7);
    }

    #[test]
    fn optimal_type_symmetric() {
        let w = ChannelMatrix::bsc(0.05).unwrap();
        let o = optimal_type_for_rate(16, 0.2, &w, 1e-9, 1000).unwrap();
        assert!(o.exhaustive);
        assert_eq!(o.rounded.counts().unwrap(), &[8, 8]);
        assert!((o.continuous.prob(0) - 0.5).abs() < 1e-6);
        assert!((o.rounded_value - o.continuous_value).abs() < 1e-6);
        let above = optimal_type_for_rate(8, 0.9, &w, 1e-9, 1000).unwrap();
        assert_eq!(above.rounded_value, 0.0);
        assert_eq!(above.continuous_value, 0.0);
    }
}
