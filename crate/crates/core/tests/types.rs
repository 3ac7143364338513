use std::collections::HashSet;

use multicode::types::*;
use multicode::Distribution;
use proptest::prelude::*;

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn types_partition_all_sequences(n in 1u64..9, k in 1usize..4) {
        let types = enumerate_types(n, k);
        prop_assert_eq!(types.len() as u128, count_types(n, k));
        prop_assert_eq!(count_types(n, k), binomial(n + k as u64 - 1, k as u64 - 1));
        let total: u128 = types.iter().map(|c| multinomial(c).unwrap()).sum();
        prop_assert_eq!(total, (k as u128).pow(n as u32));
    }

    #[test]
    fn type_class_iteration_is_exact(counts in proptest::collection::vec(0u64..4, 1..4)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let seqs: Vec<Vec<Symbol>> = TypeClassIter::new(&counts).collect();
        prop_assert_eq!(seqs.len() as u128, multinomial(&counts).unwrap());
        let distinct: HashSet<_> = seqs.iter().collect();
        prop_assert_eq!(distinct.len(), seqs.len());
        for s in &seqs {
            let t = empirical_type(s, counts.len()).unwrap();
            prop_assert_eq!(t.counts().unwrap(), &counts[..]);
        }
    }

    #[test]
    fn joint_type_measures(
        pairs in proptest::collection::vec((0u8..3, 0u8..4), 1..40),
    ) {
        let x: Vec<Symbol> = pairs.iter().map(|p| p.0 as Symbol).collect();
        let y: Vec<Symbol> = pairs.iter().map(|p| p.1 as Symbol).collect();
        let v = joint_type(&x, &y, 3, 4).unwrap();
        prop_assert!(v.marginal(0).unwrap().same_as(&empirical_type(&x, 3).unwrap()));
        prop_assert!(v.marginal(1).unwrap().same_as(&empirical_type(&y, 4).unwrap()));
        let i = mutual_information(&v, 0, 1).unwrap();
        let hx = entropy(&empirical_type(&x, 3).unwrap());
        let hy = entropy(&empirical_type(&y, 4).unwrap());
        prop_assert!(i >= -1e-12 && i <= hx.min(hy) + 1e-12);
        prop_assert!((i - mi_from_counts(v.counts().unwrap(), 3, 4)).abs() < 1e-9);
        prop_assert!((i - (hx + hy - joint_entropy(&v))).abs() < 1e-9);
    }

    #[test]
    fn rounding_lands_on_a_nearby_type(raw in proptest::collection::vec(0.0f64..1.0, 1..5), n in 1u64..200) {
        let s: f64 = raw.iter().sum();
        prop_assume!(s > 0.0);
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let t = Distribution::round_to_type(&p, n).unwrap();
        prop_assert_eq!(t.denominator(), Some(n));
        for (c, q) in t.counts().unwrap().iter().zip(&p) {
            prop_assert!((*c as f64 - q * n as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn js_is_nonnegative_and_zero_on_equal_parts(
        a in proptest::collection::vec(0u64..5, 3),
        b in proptest::collection::vec(0u64..5, 3),
        wa in 1u64..5,
        wb in 1u64..5,
    ) {
        prop_assume!(a.iter().sum::<u64>() > 0 && b.iter().sum::<u64>() > 0);
        let pa = Distribution::from_counts(a.clone()).unwrap();
        let pb = Distribution::from_counts(b).unwrap();
        prop_assert!(generalized_js(&[(&pa, wa), (&pb, wb)]).unwrap() >= -1e-12);
        prop_assert!(generalized_js(&[(&pa, wa), (&pa, wb)]).unwrap().abs() < 1e-12);
    }
}
