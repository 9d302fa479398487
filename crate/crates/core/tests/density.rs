use kdesplit::density::{
    kde_eval, kde_eval_at_samples, kde_eval_at_samples_reference, smoothed_density, sup_distance, AnalyticDensity,
    BoxRegion, Dataset, KdeIndex, ProbeGrid,
};
use kdesplit::kernels::{Kernel, NormKind, Profile};
use kdesplit::quad::integrate_pieces;
use kdesplit::synthetic::InstanceSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line(xs: &[f64]) -> Dataset {
    Dataset::new(xs.to_vec(), 1).unwrap()
}

fn random(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new((0..n * dim).map(|_| rng.random::<f64>()).collect(), dim).unwrap()
}

struct UniformUnit;

impl AnalyticDensity for UniformUnit {
    fn dim(&self) -> usize {
        1
    }
    fn density(&self, x: &[f64]) -> f64 {
        if (0.0..=1.0).contains(&x[0]) {
            1.0
        } else {
            0.0
        }
    }
    fn support(&self) -> BoxRegion {
        BoxRegion::new(vec![0.0], vec![1.0]).unwrap()
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
    fn breakpoints(&self, _: usize) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

#[test]
fn hand_examples() {
    let rect = Kernel::new(Profile::Rectangular, 1, NormKind::Euclidean).unwrap();
    let gauss = Kernel::new(Profile::Gaussian, 1, NormKind::Euclidean).unwrap();
    assert_eq!(kde_eval(&line(&[0.0]), &rect, 1.0, &[0.0]), 0.5);
    assert_eq!(kde_eval(&line(&[-1.0, 1.0]), &rect, 0.5, &[0.0]), 0.0);
    let c = gauss.normalizer;
    let expected = 0.5 * (10.0 * c + 10.0 * c * (-4.0f64).exp());
    assert!((kde_eval(&line(&[0.0, 0.2]), &gauss, 0.1, &[0.0]) - expected).abs() < 1e-12);
    let single = kde_eval_at_samples(&line(&[0.3]), &rect, 0.25);
    assert_eq!(single.values, vec![0.5 / 0.25]);
    let far = kde_eval_at_samples(&line(&[0.0, 10.0]), &rect, 0.1);
    assert_eq!(far.values, vec![0.5 / (2.0 * 0.1); 2]);
}

#[test]
fn accelerated_path_is_bit_identical_for_bounded_kernels() {
    for (dim, norm) in [(1, NormKind::Euclidean), (2, NormKind::Euclidean), (2, NormKind::Supremum), (3, NormKind::Euclidean)] {
        let data = random(500, dim, 11 + dim as u64);
        for profile in Profile::ALL.into_iter().filter(|p| p.bounded_support()) {
            let k = Kernel::new(profile, dim, norm).unwrap();
            for delta in [0.05, 0.2] {
                let fast = kde_eval_at_samples(&data, &k, delta);
                let slow = kde_eval_at_samples_reference(&data, &k, delta);
                assert_eq!(fast.values, slow, "{profile:?} d={dim} {norm:?} δ={delta}");
                assert!(fast.cutoff_radius.is_none());
            }
        }
    }
}

#[test]
fn accelerated_path_is_close_for_unbounded_kernels() {
    for dim in [1, 2] {
        let data = random(400, dim, 3);
        for profile in [Profile::Gaussian, Profile::Laplacian] {
            let k = Kernel::new(profile, dim, NormKind::Euclidean).unwrap();
            let fast = kde_eval_at_samples(&data, &k, 0.05);
            let slow = kde_eval_at_samples_reference(&data, &k, 0.05);
            assert!(fast.cutoff_radius.is_some());
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{profile:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn estimate_integrates_to_one() {
    let data = random(200, 1, 5);
    for profile in Profile::ALL {
        let k = Kernel::new(profile, 1, NormKind::Euclidean).unwrap();
        let delta = 0.07;
        let reach = if profile.bounded_support() { 1.0 } else { 45.0 } * delta;
        let mut breaks: Vec<f64> = data.coords().iter().flat_map(|&x| [x - delta, x, x + delta]).collect();
        breaks.extend([-reach, 1.0 + reach]);
        breaks.sort_by(f64::total_cmp);
        let index = KdeIndex::new(&data, &k, delta);
        let total = integrate_pieces(|x| index.eval(&[x]), &breaks, 1e-9, 1e-12, 50_000).value;
        assert!((total - 1.0).abs() < 1e-3, "{profile:?}: {total}");
    }
}

#[test]
fn bandwidth_scaling_for_a_single_sample() {
    let k = Kernel::new(Profile::Epanechnikov, 1, NormKind::Euclidean).unwrap();
    let d = line(&[0.4]);
    let a = kde_eval(&d, &k, 0.1, &[0.4]);
    let b = kde_eval(&d, &k, 0.2, &[0.4]);
    assert!((a - 2.0 * b).abs() < 1e-12);
}

proptest! {
    #[test]
    fn translation_equivariant(shift in -5.0f64..5.0, seed in 0u64..1000, q in 0.0f64..1.0) {
        let data = random(50, 1, seed);
        let moved = Dataset::new(data.coords().iter().map(|x| x + shift).collect(), 1).unwrap();
        let k = Kernel::new(Profile::Gaussian, 1, NormKind::Euclidean).unwrap();
        let a = kde_eval(&data, &k, 0.1, &[q]);
        let b = kde_eval(&moved, &k, 0.1, &[q + shift]);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn bounded_by_kernel_sup(seed in 0u64..1000, q in -0.5f64..1.5, delta in 0.01f64..1.0) {
        let data = random(30, 1, seed);
        let k = Kernel::new(Profile::Triweight, 1, NormKind::Euclidean).unwrap();
        let v = kde_eval(&data, &k, delta, &[q]);
        prop_assert!(v >= 0.0 && v <= k.sup_value() / delta * (1.0 + 1e-12));
    }
}

#[test]
fn smoothed_density_examples() {
    let rect = Kernel::new(Profile::Rectangular, 1, NormKind::Euclidean).unwrap();
    assert!((smoothed_density(&UniformUnit, &rect, 0.1, &[0.5]).unwrap() - 1.0).abs() < 1e-8);
    assert!((smoothed_density(&UniformUnit, &rect, 0.1, &[0.0]).unwrap() - 0.5).abs() < 1e-8);
    let truth = InstanceSpec::by_name("poly_valley").unwrap().build().unwrap();
    for profile in [Profile::Rectangular, Profile::Gaussian, Profile::Quartic] {
        let k = Kernel::new(profile, 1, NormKind::Euclidean).unwrap();
        for q in [-1.4, -0.5, 0.0, 0.3, 1.1] {
            let v = smoothed_density(&truth, &k, 0.1, &[q]).unwrap();
            assert!(v <= truth.sup_norm() * (1.0 + 1e-4), "{profile:?} at {q}: {v}");
        }
    }
}

#[test]
fn smoothed_density_in_two_dimensions_matches_interior_value() {
    let truth = serde_json::from_value::<InstanceSpec>(serde_json::json!({"name": "ball", "dim": 2, "radius": 1.0}))
        .unwrap()
        .build()
        .unwrap();
    let k = Kernel::new(Profile::Epanechnikov, 2, NormKind::Euclidean).unwrap();
    let inside = smoothed_density(&truth, &k, 0.2, &[0.1, -0.2]).unwrap();
    assert!((inside - truth.sup_norm()).abs() < 1e-4 * truth.sup_norm());
    let outside = smoothed_density(&truth, &k, 0.2, &[1.5, 0.0]).unwrap();
    assert_eq!(outside, 0.0);
}

#[test]
fn sup_distance_on_quantile_data_by_hand() {
    // Quantile points 1/8, 3/8, 5/8, 7/8 of U[0,1]; δ = 1 with the
    // rectangular kernel puts every point in every window on [0, 1], so
    // h_D ≡ 0.5 there, while h_{P,1}(q) = min(q + 1, 1) − max(q − 1, 0) over 2 = 0.5.
    let rect = Kernel::new(Profile::Rectangular, 1, NormKind::Euclidean).unwrap();
    let data = line(&[0.125, 0.375, 0.625, 0.875]);
    let grid = ProbeGrid::new(BoxRegion::new(vec![0.0], vec![1.0]).unwrap(), 0.5).unwrap();
    assert_eq!(grid.len(), 3);
    let sd = sup_distance(&data, &UniformUnit, &rect, 1.0, &grid).unwrap();
    assert!(sd.value < 1e-8, "{}", sd.value);
    // δ = 0.25: at q = 0 only the first point is in the window (value 0.5),
    // and h_{P,δ}(0) = 0.5; at q = 0.5 points 0.375 and 0.625 give 1.0,
    // matching h_{P,δ} = 1; at q = 1 one point again: 0.5 vs 0.5.
    let sd = sup_distance(&data, &UniformUnit, &rect, 0.25, &grid).unwrap();
    assert!(sd.value < 1e-8, "{}", sd.value);
    // δ = 0.2: at q = 0.5 two samples give 2·(1/4)(0.5/0.2) = 1.25 against 1;
    // at the ends one sample gives 0.625 against 0.5. The sup is 0.25.
    let sd = sup_distance(&data, &UniformUnit, &rect, 0.2, &grid).unwrap();
    assert!((sd.value - 0.25).abs() < 1e-8, "{}", sd.value);
}

#[test]
fn sup_distance_shrinks_with_n() {
    let truth = InstanceSpec::by_name("poly_valley").unwrap().build().unwrap();
    let k = Kernel::new(Profile::Rectangular, 1, NormKind::Euclidean).unwrap();
    let grid = ProbeGrid::for_truth(&truth, &k, 0.1).unwrap();
    let median = |n: usize| {
        let mut v: Vec<f64> = (0..9)
            .map(|s| sup_distance(&truth.sample(n, s).unwrap(), &truth, &k, 0.1, &grid).unwrap().value)
            .collect();
        v.sort_by(f64::total_cmp);
        v[4]
    };
    assert!(median(4096) < median(256));
}

#[test]
fn csv_header_and_ragged_rows() {
    let d = Dataset::read_csv("x0,x1\n0.5,1.0\n-2,3e-1\n".as_bytes()).unwrap();
    assert_eq!(d.dim(), 2);
    assert_eq!(d.point(1), &[-2.0, 0.3]);
    assert!(Dataset::read_csv("1,2\n3\n".as_bytes()).is_err());
    let headerless = Dataset::read_csv("1\n2\n".as_bytes()).unwrap();
    assert_eq!(headerless.len(), 2);
}
