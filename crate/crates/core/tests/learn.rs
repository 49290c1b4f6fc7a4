use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkbs::feature_space::{FeatureSpace, NormSpec};
use rkbs::kernel::{uniform_grid, FeatureMap, FeatureRule, GridProfile};
use rkbs::learn::{
    l1_regnet, min_norm_interpolate, min_norm_interpolate_from, min_norm_oracle, regnet,
    regnet_path, Loss, Regularizer,
};
use rkbs::{Error, RkbsPair, SampleSet};

fn jittered(rng: &mut ChaCha8Rng, lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let h = (hi - lo) / m as f64;
    (0..m)
        .map(|j| lo + h * (j as f64 + 0.5) + h * rng.random_range(-0.25..=0.25))
        .collect()
}

fn instance(rng: &mut ChaCha8Rng, m: usize) -> SampleSet {
    let points = jittered(rng, -1.0, 1.0, m);
    let targets = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    SampleSet::new(points, targets).unwrap()
}

fn smooth_pairs(terms: usize) -> Vec<(&'static str, RkbsPair)> {
    vec![
        ("p=1.5", RkbsPair::gaussian_p(1.5, terms, 1.0).unwrap()),
        ("p=2", RkbsPair::gaussian_p(2.0, terms, 1.0).unwrap()),
        ("p=3", RkbsPair::gaussian_p(3.0, terms, 1.0).unwrap()),
        ("entropy", RkbsPair::entropy_orlicz(terms, 1.0).unwrap()),
    ]
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn interpolation_is_unique_across_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, pair) in smooth_pairs(40) {
        let s = instance(&mut rng, 4);
        let base = min_norm_interpolate(&pair, &s, 1e-12).unwrap();
        assert!(base.converged, "{name}");
        for _ in 0..3 {
            let c0: Vec<f64> = base
                .representer_coeffs
                .iter()
                .map(|c| c * (1.0 + 0.3 * rng.random_range(-1.0..1.0)))
                .collect();
            let other = min_norm_interpolate_from(&pair, &s, 1e-12, &c0).unwrap();
            assert!(sup_diff(&base.coef, &other.coef) < 1e-6, "{name}");
        }
    }
}

#[test]
fn oracle_agrees_with_newton() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (name, pair) in smooth_pairs(20) {
        for _ in 0..20 {
            let m = rng.random_range(1..=3);
            let s = instance(&mut rng, m);
            let newton = min_norm_interpolate(&pair, &s, 1e-11).unwrap();
            let oracle = min_norm_oracle(&pair, &s, 1e-11).unwrap();
            let rel = (oracle.norm - newton.norm).abs() / newton.norm;
            assert!(
                rel < 1e-5,
                "{name} m={m}: {} vs {}",
                oracle.norm,
                newton.norm
            );
        }
    }
}

#[test]
fn solver_outputs_satisfy_representer_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (name, pair) in smooth_pairs(40) {
        let s = instance(&mut rng, 4);
        let r = min_norm_interpolate(&pair, &s, 1e-10).unwrap();
        assert!(
            r.representer_residual < 1e-6,
            "{name}: {}",
            r.representer_residual
        );
        let g = regnet(&pair, &s, 1e-2, Loss::Square, Regularizer::Square, 1e-8).unwrap();
        assert!(
            g.converged && g.representer_residual < 1e-6,
            "{name}: {}",
            g.representer_residual
        );
    }
}

#[test]
fn regnet_norm_decreases_along_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let lambdas: Vec<f64> = (0..8).map(|i| 10f64.powi(i - 5)).collect();
    for (name, pair) in smooth_pairs(30).into_iter().take(3) {
        let s = instance(&mut rng, 4);
        for reg in [Regularizer::Square, Regularizer::Identity] {
            let path = regnet_path(&pair, &s, &lambdas, Loss::Square, reg, 1e-8).unwrap();
            for w in path.windows(2) {
                assert!(
                    w[1].norm <= w[0].norm + 1e-8,
                    "{name} {reg:?}: {} then {}",
                    w[0].norm,
                    w[1].norm
                );
            }
        }
    }
}

/// Three Taylor features seen from five points: rows span only three dimensions.
#[test]
fn rank_deficient_samples() {
    let pair = RkbsPair::gaussian_p(3.0, 3, 1.0).unwrap();
    let points = vec![-0.8, -0.3, 0.1, 0.5, 0.9];
    let v = [0.4, -0.2, 0.7];
    let consistent: Vec<f64> = points
        .iter()
        .map(|&x| {
            let f = pair.map1().feature(x).unwrap();
            f.iter().zip(&v).map(|(a, b)| a * b).sum()
        })
        .collect();
    let s = SampleSet::new(points.clone(), consistent).unwrap();
    let r = min_norm_interpolate(&pair, &s, 1e-10).unwrap();
    assert!(r.rank_deficient);
    assert!(r.constraint_residual < 1e-10);

    let s = SampleSet::new(points, vec![1.0, -1.0, 1.0, -1.0, 1.0]).unwrap();
    assert!(matches!(
        min_norm_interpolate(&pair, &s, 1e-10),
        Err(Error::RankDeficient { .. })
    ));
}

fn hat_pair(grid_points: usize, spec: NormSpec) -> RkbsPair {
    let grid = uniform_grid(grid_points).unwrap();
    let n = grid.len();
    let map1 = FeatureMap::new(
        FeatureSpace::counting(n, spec.dual()).unwrap(),
        FeatureRule::Grid {
            profile: GridProfile::Hat,
            grid: grid.clone(),
        },
    )
    .unwrap();
    let map2 = FeatureMap::new(
        FeatureSpace::counting(n, spec).unwrap(),
        FeatureRule::Delta { grid },
    )
    .unwrap();
    RkbsPair::new(map1, map2).unwrap()
}

fn design_values(pair: &RkbsPair, points: &[f64], v: &[f64]) -> Vec<f64> {
    points
        .iter()
        .map(|&x| {
            let f = pair.map1().feature(x).unwrap();
            f.iter().zip(v).map(|(a, b)| a * b).sum()
        })
        .collect()
}

#[test]
fn l1_is_sparser_than_ridge_on_spikes() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let l1_pair = RkbsPair::hat_delta(41).unwrap();
    let l2_pair = hat_pair(41, NormSpec::P(2.0));
    let mut spikes = vec![0.0; 41];
    spikes[6] = 1.0;
    spikes[20] = -0.7;
    spikes[33] = 0.5;
    let points = jittered(&mut rng, 0.0, 1.0, 12);
    let targets = design_values(&l1_pair, &points, &spikes);
    let s = SampleSet::new(points, targets).unwrap();

    let sparse = l1_regnet(&l1_pair, &s, 1e-3, 1e-10).unwrap();
    assert!(sparse.converged);
    // the ridge weight whose fit residual is closest to the sparse fit
    let dense = (0..40)
        .map(|i| 10f64.powf(-9.0 + 0.2 * i as f64))
        .map(|l| regnet(&l2_pair, &s, l, Loss::Square, Regularizer::Square, 1e-9).unwrap())
        .min_by(|a, b| {
            let da = (a.constraint_residual - sparse.constraint_residual).abs();
            let db = (b.constraint_residual - sparse.constraint_residual).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let dense_count = dense.coef.iter().filter(|c| c.abs() > 1e-6).count();
    assert!(
        sparse.support_size <= dense_count,
        "{} vs {dense_count}",
        sparse.support_size
    );
    assert!(sparse.support_size <= s.len());
}

#[test]
fn l1_small_lambda_fits_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let pair = RkbsPair::hat_delta(21).unwrap();
    let points = jittered(&mut rng, 0.0, 1.0, 5);
    let targets = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = SampleSet::new(points, targets).unwrap();
    // m ≤ N with full row rank: the least-squares residual is zero
    let mut previous = f64::INFINITY;
    for lambda in [1e-2, 1e-4, 1e-6] {
        let r = l1_regnet(&pair, &s, lambda, 1e-11).unwrap();
        assert!(
            r.converged,
            "{lambda}: {} after {}",
            r.stationarity, r.iterations
        );
        assert!(r.constraint_residual <= previous + 1e-12);
        previous = r.constraint_residual;
    }
    assert!(previous < 1e-5, "{previous}");
}
