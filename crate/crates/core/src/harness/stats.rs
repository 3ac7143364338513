use serde::{Deserialize, Serialize};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Wilson score interval for `k` successes in `n` trials. Well defined at
/// `k = 0` and `k = n`; `n = 0` gives the vacuous `[0, 1]`.
pub fn wilson(k: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    Interval {
        lo: if k == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if k == n { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// A binomial proportion with its 99% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub count: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci: Interval,
}

impl Proportion {
    pub fn new(count: u64, trials: u64) -> Self {
        Self {
            count,
            trials,
            estimate: if trials == 0 { 0.0 } else { count as f64 / trials as f64 },
            ci: wilson(count, trials, Z99),
        }
    }
}

/// `−log₂(p)/l`; infinite at `p = 0`.
pub fn empirical_exponent(p: f64, l: usize) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else {
        -p.log2() / l as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_edges() {
        let i = wilson(0, 100, Z99);
        assert_eq!(i.lo, 0.0);
        // z²/(n + z²) at k = 0
        assert!((i.hi - Z99 * Z99 / (100.0 + Z99 * Z99)).abs() < 1e-12);
        let j = wilson(100, 100, Z99);
        assert_eq!(j.hi, 1.0);
        assert_eq!(wilson(0, 0, Z99), Interval { lo: 0.0, hi: 1.0 });
    }

    #[test]
    fn exponent_of_zero_is_infinite() {
        assert!(empirical_exponent(0.0, 10).is_infinite());
        assert!((empirical_exponent(0.25, 4) - 0.5).abs() < 1e-15);
    }
}
