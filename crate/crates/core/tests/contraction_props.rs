//! Property tests for the canonical-index storage, the contraction maps,
//! and the covariance classifier.

use std::collections::BTreeSet;
use std::io::BufReader;

use proptest::prelude::*;

use gote_core::cov::{classify, cov_pure_with};
use gote_core::law::{pure_params, rep_cov_pure};
use gote_core::rng::{GaussianStream, SeedKey};
use gote_core::tensor::{
    canonical_count, contract_mixed, contract_pure, multiset_perm_count, sample_gote,
    MultiIndex, SymTensor,
};

/// All distinct orderings of `idx`, by brute force.
fn distinct_permutations(idx: &[usize]) -> BTreeSet<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        if rest.is_empty() {
            out.insert(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            prefix.push(x);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(k, x);
        }
    }
    let mut out = BTreeSet::new();
    go(&mut Vec::new(), &mut idx.to_vec(), &mut out);
    out
}

fn random_tensor(r: usize, n: usize, seed: u64) -> SymTensor {
    sample_gote(r, n, &SeedKey::from_u64(seed)).unwrap()
}

fn random_unit(n: usize, seed: u64) -> Vec<f64> {
    GaussianStream::new(&SeedKey::from_u64(seed)).next_unit_vec(n)
}

proptest! {
    #[test]
    fn prop_perm_count_matches_enumeration(idx in prop::collection::vec(0usize..4, 2..=5)) {
        let mi = MultiIndex::new(&idx, 4).unwrap();
        let brute = distinct_permutations(&idx).len() as u64;
        prop_assert_eq!(multiset_perm_count(&mi), brute);
    }

    #[test]
    fn prop_storage_rank_follows_enumeration_order(r in 2usize..=4, n in 1usize..=5) {
        // Fill entry k with the value k; every permutation of the k-th
        // canonical index must read it back exactly.
        let count = canonical_count(r, n).unwrap() as usize;
        let t = SymTensor::from_entries(r, n, (0..count).map(|k| k as f64).collect()).unwrap();
        let mut seen = 0usize;
        t.for_each_canonical(|idx, v| {
            assert_eq!(v, seen as f64, "entry {idx:?} out of rank order");
            for perm in distinct_permutations(idx) {
                assert_eq!(t.get(&perm).unwrap(), seen as f64);
            }
            seen += 1;
        });
        prop_assert_eq!(seen, count);
    }

    #[test]
    fn prop_contraction_is_bilinear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        // contract(a s + b t) = a contract(s) + b contract(t), built as
        // a * (s + (b/a) t) with a bounded away from zero.
        let r = 4;
        let n = 6;
        let a = if a.abs() < 0.1 { 0.1 } else { a };
        let s = random_tensor(r, n, seed);
        let t = random_tensor(r, n, seed + 1_000_000);
        let w = random_unit(n, seed + 2_000_000);
        let mut combo = s.add_scaled(&t, b / a).unwrap();
        combo.scale(a);
        let got = contract_pure(&combo, &w).unwrap();
        let ms = contract_pure(&s, &w).unwrap();
        let mt = contract_pure(&t, &w).unwrap();
        let scale = ms.frobenius_norm().abs().max(mt.frobenius_norm()).max(1.0);
        for ((x, p), q) in got.vech().iter().zip(ms.vech()).zip(mt.vech()) {
            let want = a * p + b * q;
            prop_assert!((x - want).abs() <= 1e-12 * scale, "|{x} - {want}| at scale {scale}");
        }
    }

    #[test]
    fn prop_contraction_is_one_lipschitz(seed in 0u64..500) {
        let r = 4;
        let n = 5;
        let a = random_tensor(r, n, seed);
        let b = random_tensor(r, n, seed + 10_000);
        let w = random_unit(n, seed + 20_000);
        let ma = contract_pure(&a, &w).unwrap();
        let mb = contract_pure(&b, &w).unwrap();
        let lhs = ma.sub(&mb).unwrap().frobenius_norm();
        let rhs = a.sub(&b).unwrap().frobenius_norm();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn prop_text_round_trip_is_exact(r in 2usize..=4, n in 1usize..=5, seed in 0u64..1000) {
        let t = random_tensor(r, n, seed);
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let back = SymTensor::read_text(&mut BufReader::new(buf.as_slice())).unwrap();
        prop_assert_eq!(back.order(), r);
        prop_assert_eq!(back.dim(), n);
        t.for_each_canonical(|idx, v| {
            let got = back.get(idx).unwrap();
            assert!(got == v, "{got} != {v} at {idx:?}");
        });
    }

    #[test]
    fn prop_classifier_agrees_with_representation_cov(
        i in 0usize..8, j in 0usize..8, k in 0usize..8, l in 0usize..8, seed in 0u64..100,
    ) {
        let params = pure_params(4).unwrap();
        let w = random_unit(8, seed);
        let by_class = cov_pure_with(&params, &w, (i, j), (k, l));
        let by_rep = rep_cov_pure(&params, &w, i, j, k, l);
        prop_assert!((by_class - by_rep).abs() < 1e-12, "{by_class} vs {by_rep}");
        // The classification ignores within-pair order entirely and
        // between-pair order up to the field relabeling.
        prop_assert_eq!(classify((j, i), (l, k)), classify((i, j), (k, l)));
        prop_assert_eq!(
            std::mem::discriminant(&classify((k, l), (i, j))),
            std::mem::discriminant(&classify((i, j), (k, l))),
        );
        for (p, q) in [((j, i), (k, l)), ((i, j), (l, k)), ((k, l), (i, j))] {
            let swapped = cov_pure_with(&params, &w, p, q);
            prop_assert!((swapped - by_class).abs() < 1e-15);
        }
    }
}

#[test]
fn all_ones_tensor_contracts_to_perm_weighted_sums() {
    // r = 3, n = 2, all canonical entries 1: M_ij = sum_k t_ijk w_k = w_0 + w_1
    // for every (i, j), and the total perm count over multisets is 2^3.
    let n = 2;
    let count = canonical_count(3, n).unwrap() as usize;
    let t = SymTensor::from_entries(3, n, vec![1.0; count]).unwrap();
    let mut total = 0u64;
    t.for_each_canonical(|idx, _| {
        total += multiset_perm_count(&MultiIndex::new(idx, n).unwrap());
    });
    assert_eq!(total, 8);

    let w = vec![0.6, 0.8];
    let m = contract_pure(&t, &w).unwrap();
    for i in 0..n {
        for j in 0..n {
            assert!((m.get(i, j) - (w[0] + w[1])).abs() < 1e-15);
        }
    }
}

#[test]
fn mixed_contraction_with_equal_directions_is_the_pure_one() {
    let t = random_tensor(5, 4, 99);
    let w = random_unit(4, 100);
    let pure = contract_pure(&t, &w).unwrap();
    let mixed = contract_mixed(&t, &[w.clone(), w.clone(), w]).unwrap();
    for (a, b) in pure.vech().iter().zip(mixed.vech()) {
        assert_eq!(a, b, "pure and repeated-direction mixed routes disagree");
    }
}

#[test]
fn frobenius_inner_counts_full_hypercube() {
    // r = 3, n = 2, all ones: <t, t> = 2^3 = 8 exactly.
    let count = canonical_count(3, 2).unwrap() as usize;
    let t = SymTensor::from_entries(3, 2, vec![1.0; count]).unwrap();
    let norm = t.frobenius_norm();
    assert!((norm * norm - 8.0).abs() < 1e-12);
}
