use super::{mutual_information, Distribution, JointDistribution, Symbol};
use crate::channel::ChannelMatrix;
use crate::error::{domain, Result};

pub fn check_symbols(seq: &[Symbol], k: usize) -> Result<()> {
    match seq.iter().find(|&&s| s as usize >= k) {
        Some(s) => domain(format!("symbol {s} outside alphabet of size {k}")),
        None => Ok(()),
    }
}

pub fn empirical_type(seq: &[Symbol], k: usize) -> Result<Distribution> {
    if seq.is_empty() {
        return domain("type of an empty sequence");
    }
    check_symbols(seq, k)?;
    let mut counts = vec![0u64; k];
    for &s in seq {
        counts[s as usize] += 1;
    }
    Distribution::from_counts(counts)
}

pub fn joint_type(x: &[Symbol], y: &[Symbol], kx: usize, ky: usize) -> Result<JointDistribution> {
    if x.len() != y.len() {
        return domain(format!("joint type of lengths {} and {}", x.len(), y.len()));
    }
    if x.is_empty() {
        return domain("joint type of empty sequences");
    }
    check_symbols(x, kx)?;
    check_symbols(y, ky)?;
    let mut counts = vec![0u64; kx * ky];
    for (&a, &b) in x.iter().zip(y) {
        counts[a as usize * ky + b as usize] += 1;
    }
    JointDistribution::from_counts(vec![kx, ky], counts)
}

pub fn joint_type3(
    a: &[Symbol],
    b: &[Symbol],
    c: &[Symbol],
    dims: [usize; 3],
) -> Result<JointDistribution> {
    if a.len() != b.len() || b.len() != c.len() {
        return domain("joint type of sequences with different lengths");
    }
    if a.is_empty() {
        return domain("joint type of empty sequences");
    }
    check_symbols(a, dims[0])?;
    check_symbols(b, dims[1])?;
    check_symbols(c, dims[2])?;
    let mut counts = vec![0u64; dims.iter().product()];
    for i in 0..a.len() {
        counts[(a[i] as usize * dims[1] + b[i] as usize) * dims[2] + c[i] as usize] += 1;
    }
    JointDistribution::from_counts(dims.to_vec(), counts)
}

/// `I(x ∧ y)`: mutual information of the joint type.
pub fn empirical_mi(x: &[Symbol], y: &[Symbol], kx: usize, ky: usize) -> Result<f64> {
    mutual_information(&joint_type(x, y, kx, ky)?, 0, 1)
}

/// `W^n(y|x) = Π W(y_i|x_i)`.
pub fn channel_string_probability(w: &ChannelMatrix, x: &[Symbol], y: &[Symbol]) -> Result<f64> {
    if x.len() != y.len() {
        return domain(format!("channel strings of lengths {} and {}", x.len(), y.len()));
    }
    check_symbols(x, w.inputs())?;
    check_symbols(y, w.outputs())?;
    Ok(x
        .iter()
        .zip(y)
        .map(|(&a, &b)| w.get(a as usize, b as usize))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{conditional_divergence, conditional_entropy, entropy};

    #[test]
    fn empirical_type_cases() {
        let t = empirical_type(&[0, 0, 1, 1], 2).unwrap();
        assert_eq!(t.probs(), &[0.5, 0.5]);
        assert_eq!(t.denominator(), Some(4));
        assert_eq!(empirical_type(&[1, 1, 1], 2).unwrap().probs(), &[0.0, 1.0]);
        assert!(empirical_type(&[], 2).is_err());
        assert!(empirical_type(&[2], 2).is_err());
    }

    #[test]
    fn joint_type_cases() {
        let j = joint_type(&[0, 1], &[0, 1], 2, 2).unwrap();
        assert_eq!(j.probs(), &[0.5, 0.0, 0.0, 0.5]);
        assert!(joint_type(&[0, 1], &[0], 2, 2).is_err());
    }

    #[test]
    fn empirical_mi_cases() {
        assert!((empirical_mi(&[0, 1, 0, 1], &[1, 0, 1, 0], 2, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(empirical_mi(&[0, 0, 0], &[0, 1, 1], 2, 2).unwrap(), 0.0);
        let x = [0, 1, 2, 2, 1, 0, 0];
        let h = entropy(&empirical_type(&x, 3).unwrap());
        assert!((empirical_mi(&x, &x, 3, 3).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn string_probability_matches_type_identity() {
        let id = ChannelMatrix::identity(2).unwrap();
        assert_eq!(channel_string_probability(&id, &[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(channel_string_probability(&id, &[0, 1, 1], &[0, 0, 1]).unwrap(), 0.0);

        let w = ChannelMatrix::bsc(0.1).unwrap();
        let x = [0, 1, 1, 0, 0, 1, 0, 1];
        let y = [0, 1, 0, 0, 1, 1, 0, 1];
        let p = channel_string_probability(&w, &x, &y).unwrap();
        let direct = 0.1f64.powi(2) * 0.9f64.powi(6);
        assert!((p - direct).abs() < 1e-15);

        // 2^{-n(D(V‖W|P) + H_V(Y|X))}
        let px = empirical_type(&x, 2).unwrap();
        let v = joint_type(&x, &y, 2, 2).unwrap();
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|a| {
                let r: Vec<f64> = (0..2).map(|b| v.get(&[a, b])).collect();
                let s: f64 = r.iter().sum();
                r.iter().map(|t| t / s).collect()
            })
            .collect();
        let vc = ChannelMatrix::new(rows).unwrap();
        let exponent = conditional_divergence(&vc, &w, &px) + conditional_entropy(&v, 1, &[0]).unwrap();
        let via_types = (-(x.len() as f64) * exponent).exp2();
        assert!(((via_types - p) / p).abs() < 1e-9);
    }
}
