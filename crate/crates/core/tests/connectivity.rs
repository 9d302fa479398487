use kdesplit::connectivity::{components_bruteforce, components_within, tau_components, ComponentFinder, EdgeRule};
use kdesplit::density::Dataset;
use kdesplit::kernels::NormKind;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new((0..n * dim).map(|_| rng.random_range(0.0..3.0)).collect(), dim).unwrap()
}

fn subset(n: usize, seed: u64, keep: f64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n).filter(|_| rng.random::<f64>() < keep).collect()
}

fn norm_of(flag: bool) -> NormKind {
    if flag {
        NormKind::Supremum
    } else {
        NormKind::Euclidean
    }
}

#[test]
fn hand_examples() {
    let data = Dataset::new(vec![0.0, 0.1, 0.2, 2.0, 2.1, 2.2], 1).unwrap();
    let all: Vec<usize> = (0..6).collect();
    let p = tau_components(&data, &all, 0.05, 0.2, NormKind::Euclidean, EdgeRule::Standard);
    assert_eq!(p.members, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    let joined = tau_components(&data, &all, 1.0, 0.0, NormKind::Euclidean, EdgeRule::Geometric);
    assert_eq!(joined.count(), 1);
    let empty = tau_components(&data, &[], 0.05, 0.2, NormKind::Euclidean, EdgeRule::Standard);
    assert_eq!(empty.count(), 0);
    // Exactly at the threshold counts as an edge.
    let pair = Dataset::new(vec![0.0, 0.25], 1).unwrap();
    assert_eq!(components_within(&pair, &[0, 1], 0.25, NormKind::Euclidean).count(), 1);
}

#[test]
fn supremum_norm_joins_diagonals_that_euclidean_does_not() {
    let data = Dataset::new(vec![0.0, 0.0, 1.0, 1.0], 2).unwrap();
    assert_eq!(components_within(&data, &[0, 1], 1.0, NormKind::Supremum).count(), 1);
    assert_eq!(components_within(&data, &[0, 1], 1.0, NormKind::Euclidean).count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn indexed_search_equals_all_pairs(
        n in 1usize..200, dim in 1usize..=3, seed: u64, thr in 0.01f64..0.8, sup: bool, keep in 0.2f64..1.0,
    ) {
        let data = cloud(n, dim, seed);
        let active = subset(n, seed, keep);
        let norm = norm_of(sup);
        let fast = components_within(&data, &active, thr, norm);
        let slow = components_bruteforce(&data, &active, thr, norm);
        prop_assert_eq!(&fast, &slow);
        prop_assert_eq!(ComponentFinder::new(&data, thr, norm).components(&active), fast);
    }

    #[test]
    fn larger_threshold_merges(n in 1usize..120, dim in 1usize..=3, seed: u64, a in 0.01f64..0.5, b in 0.0f64..0.5) {
        let data = cloud(n, dim, seed);
        let all: Vec<usize> = (0..n).collect();
        let small = components_within(&data, &all, a, NormKind::Euclidean);
        let large = components_within(&data, &all, a + b, NormKind::Euclidean);
        prop_assert!(large.count() <= small.count());
        // Each fine component lies inside one coarse component.
        for m in &small.members {
            let l = large.label_of(m[0]).unwrap();
            prop_assert!(m.iter().all(|&i| large.label_of(i) == Some(l)));
        }
    }

    #[test]
    fn components_of_a_subset_refine_the_superset(n in 1usize..120, seed: u64, thr in 0.01f64..0.5) {
        let data = cloud(n, 2, seed);
        let sub = subset(n, seed, 0.5);
        let all: Vec<usize> = (0..n).collect();
        let whole = components_within(&data, &all, thr, NormKind::Euclidean);
        let part = components_within(&data, &sub, thr, NormKind::Euclidean);
        for m in &part.members {
            let l = whole.label_of(m[0]).unwrap();
            prop_assert!(m.iter().all(|&i| whole.label_of(i) == Some(l)));
        }
    }

    #[test]
    fn point_order_does_not_change_the_partition(n in 1usize..100, seed: u64, thr in 0.01f64..0.5) {
        let data = cloud(n, 2, seed);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted = Dataset::new(perm.iter().flat_map(|&i| data.point(i).to_vec()).collect(), 2).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let a = components_within(&data, &all, thr, NormKind::Euclidean);
        let b = components_within(&permuted, &all, thr, NormKind::Euclidean);
        let mut mapped: Vec<Vec<usize>> = b
            .members
            .iter()
            .map(|m| {
                let mut v: Vec<usize> = m.iter().map(|&j| perm[j]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        mapped.sort();
        let mut orig = a.members.clone();
        orig.sort();
        prop_assert_eq!(orig, mapped);
    }
}
