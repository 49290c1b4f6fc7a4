//! The invariant suite behind `rkbs verify`.
//!
//! Each check reports a measured value against a threshold. Sizes are kept
//! small so the suite runs in seconds; the full-scale runs live in the
//! acceptance tests.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkbs::duality::{
    dual_norm, duality_map, gateaux_directional, gateaux_fd, sip, sip_sphere_scan,
};
use rkbs::feature_space::{gauge_norm, orlicz_norm, p_norm, FeatureSpace, NormSpec};
use rkbs::kernel::{admissibility_check, gram, kernel_from_features, mercer_truncation_bound};
use rkbs::learn::{self, Loss, Regularizer, SampleSet};
use rkbs::numeric::singular_values;
use rkbs::{BFunction, FeatureMap, Kernel, MercerExpansion, RkbsPair, Side, YoungPair};

use crate::commands::{jittered, Outcome};
use crate::config::Settings;
use crate::output::{fmt_f64, Table};
use crate::RunError;

/// One measured quantity; passes when `value < threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
        }
    }

    /// A boolean property encoded as a violation count.
    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    pub fn passed(&self) -> bool {
        self.value < self.threshold
    }
}

pub fn run(settings: &Settings) -> Result<Outcome, RunError> {
    let seed = settings.seed()?;
    let checks = suite(seed)?;
    let mut table = Table::new(&["check", "value", "threshold", "pass"]);
    let mut summary = String::from("command: verify\n");
    let mut failed = 0;
    for c in &checks {
        table.push(vec![
            c.name.clone(),
            fmt_f64(c.value),
            fmt_f64(c.threshold),
            c.passed().to_string(),
        ]);
        let status = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            summary,
            "{status} {} ({:e} vs {:e})",
            c.name, c.value, c.threshold
        );
        failed += usize::from(!c.passed());
    }
    let _ = writeln!(summary, "checks: {}, failed: {failed}", checks.len());
    Ok(Outcome {
        table,
        summary,
        verification_failed: failed > 0,
    })
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect()
}

fn built_in_pairs() -> rkbs::Result<Vec<(&'static str, RkbsPair)>> {
    Ok(vec![
        ("rkhs", RkbsPair::gaussian_rkhs(30, 1.0)?),
        ("mercer_p3", RkbsPair::gaussian_p(3.0, 30, 1.0)?),
        ("hat_delta", RkbsPair::hat_delta(101)?),
        ("entropy_orlicz", RkbsPair::entropy_orlicz(30, 1.0)?),
    ])
}

/// Points of the domain of `side`; the delta map only accepts grid points.
fn domain_point(rng: &mut ChaCha8Rng, map: &FeatureMap) -> f64 {
    match map.rule() {
        rkbs::FeatureRule::Delta { grid } => grid[rng.random_range(0..grid.len())],
        _ => {
            let (lo, hi) = map.domain();
            rng.random_range(lo..=hi)
        }
    }
}

pub fn suite(seed: u64) -> Result<Vec<Check>, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    reproducing(&mut rng, &mut checks)?;
    norms(&mut rng, &mut checks)?;
    duality(&mut rng, &mut checks)?;
    sphere(&mut checks)?;
    interpolation(&mut rng, &mut checks)?;
    regularization(&mut rng, &mut checks)?;
    kernels(&mut rng, &mut checks)?;
    Ok(checks)
}

fn reproducing(rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), RunError> {
    for (name, pair) in built_in_pairs()? {
        let mut worst: f64 = 0.0;
        let mut bound_violation: f64 = 0.0;
        for side in [Side::B1, Side::B2] {
            let map = pair.feature_map(side);
            for _ in 0..20 {
                let f = BFunction {
                    side,
                    coef: random_vec(rng, pair.dim(), 1.0),
                };
                let pts: Vec<f64> = (0..20).map(|_| domain_point(rng, map)).collect();
                worst = worst.max(pair.reproduce_residual(&f, &pts)?);
                // the Orlicz-norm evaluation is costly; bound checks use the cheap sides
                if name != "entropy_orlicz" {
                    let n = pair.bnorm(&f)?;
                    for &x in pts.iter().take(3) {
                        let lhs = pair.eval(&f, x)?.abs();
                        let rhs = pair.point_eval_constant(x, side)? * n + 1e-12;
                        bound_violation = bound_violation.max(lhs - rhs);
                    }
                }
            }
        }
        checks.push(Check::new(
            format!("reproducing residual {name}"),
            worst,
            1e-10,
        ));
        checks.push(Check::holds(
            format!("point evaluation bound {name}"),
            bound_violation <= 0.0,
        ));
    }
    Ok(())
}

fn norms(rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), RunError> {
    let pair = YoungPair::entropy();
    let level = pair.unit_level();
    let mut violation: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(1..=20);
        let v = random_vec(rng, n, 3.0);
        let w = vec![1.0; n];
        let gauge = gauge_norm(&pair, &v, &w)?;
        let orlicz = orlicz_norm(&pair, &v, &w)?;
        violation = violation
            .max(level * gauge - orlicz)
            .max(orlicz - 2.0 * gauge);
    }
    checks.push(Check::new(
        "gauge/orlicz equivalence",
        violation.max(0.0),
        1e-8,
    ));

    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let young = YoungPair::power(p)?;
        for _ in 0..20 {
            let v = random_vec(rng, 10, 2.0);
            let w = vec![1.0; 10];
            let exact = p_norm(&v, &w, p);
            worst = worst.max((gauge_norm(&young, &v, &w)? - exact).abs() / exact);
        }
    }
    checks.push(Check::new("power gauge equals p-norm", worst, 1e-9));
    Ok(())
}

fn smooth_specs() -> Vec<(&'static str, NormSpec)> {
    vec![
        ("p=1.5", NormSpec::P(1.5)),
        ("p=2", NormSpec::P(2.0)),
        ("p=3", NormSpec::P(3.0)),
        ("entropy", NormSpec::OrliczGauge(YoungPair::entropy())),
    ]
}

fn duality(rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), RunError> {
    for (name, spec) in smooth_specs() {
        let n = 8;
        let space = FeatureSpace::counting(n, spec)?;
        let (mut pair_err, mut dual_err, mut grad_err, mut sip_err): (f64, f64, f64, f64) =
            (0.0, 0.0, 0.0, 0.0);
        let mut cs_ok = true;
        for _ in 0..10 {
            let f = random_vec(rng, n, 2.0);
            let g = random_vec(rng, n, 2.0);
            let h = random_vec(rng, n, 1.0);
            let nf = space.norm(&f)?;
            let j = duality_map(&space, &f)?;
            pair_err = pair_err.max((space.pairing(&f, &j)? - nf * nf).abs());
            dual_err = dual_err.max((dual_norm(&space, &j)? - nf).abs());
            let analytic = gateaux_directional(&space, &f, &h)?;
            let fd = gateaux_fd(&space, &f, &h, 1e-6)?;
            grad_err =
                grad_err.max((analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-12));
            sip_err = sip_err.max((sip(&space, &f, &f)?.value - nf * nf).abs());
            let s = sip(&space, &f, &g)?.value;
            cs_ok &= s.abs() <= nf * space.norm(&g)? + 1e-9;
        }
        checks.push(Check::new(
            format!("pairing(f, J f) = |f|^2 {name}"),
            pair_err,
            1e-9,
        ));
        checks.push(Check::new(
            format!("dual norm of J f {name}"),
            dual_err,
            1e-8,
        ));
        checks.push(Check::new(
            format!("gateaux gradient {name}"),
            grad_err,
            1e-5,
        ));
        checks.push(Check::new(
            format!("sip [f,f] = |f|^2 {name}"),
            sip_err,
            1e-10,
        ));
        checks.push(Check::holds(format!("sip cauchy-schwarz {name}"), cs_ok));
    }
    Ok(())
}

/// The small-`k` limit and the bracketing of the scan; the large-`k` value
/// approaches its limit only logarithmically and is not asserted here.
fn sphere(checks: &mut Vec<Check>) -> Result<(), RunError> {
    let scan = sip_sphere_scan(&[1.0, 0.0], &[1.0, 2.0], crate::commands::DEFAULT_K_LIST)?;
    checks.push(Check::new(
        "sphere scan k=1e-6 near 1/5",
        (scan.rows[0].1 - 0.2).abs(),
        1e-4,
    ));
    checks.push(Check::holds(
        "sphere scan between limits",
        scan.within_limits(0.0),
    ));
    checks.push(Check::holds(
        "sphere scan monotone",
        scan.monotone_in_k(0.0),
    ));
    Ok(())
}

fn samples(rng: &mut ChaCha8Rng, m: usize) -> rkbs::Result<SampleSet> {
    let points = jittered(rng, -1.0, 1.0, m);
    let targets = random_vec(rng, m, 1.0);
    SampleSet::new(points, targets)
}

fn interpolation(rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), RunError> {
    let pairs = vec![
        ("p=1.5", RkbsPair::gaussian_p(1.5, 40, 1.0)?),
        ("p=2", RkbsPair::gaussian_p(2.0, 40, 1.0)?),
        ("p=3", RkbsPair::gaussian_p(3.0, 40, 1.0)?),
        ("entropy", RkbsPair::entropy_orlicz(40, 1.0)?),
    ];
    for (name, pair) in &pairs {
        let s = samples(rng, 4)?;
        let r = learn::min_norm_interpolate(pair, &s, 1e-10)?;
        checks.push(Check::new(
            format!("interpolation constraints {name}"),
            r.constraint_residual,
            1e-8,
        ));
        checks.push(Check::new(
            format!("interpolation representer {name}"),
            r.representer_residual,
            1e-6,
        ));
        let o = learn::min_norm_oracle(pair, &s, 1e-10)?;
        checks.push(Check::new(
            format!("oracle agreement {name}"),
            (o.norm - r.norm).abs() / r.norm,
            1e-5,
        ));
    }

    let pair = &pairs[1].1;
    let s = samples(rng, 4)?;
    let r = learn::min_norm_interpolate(pair, &s, 1e-12)?;
    let k = rkbs_gram(pair, s.points())?;
    let no_solve = RunError::Solver(rkbs::Error::RankDeficient {
        rank: 0,
        needed: s.len(),
    });
    let c = k
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(s.targets()))
        .ok_or(no_solve)?;
    let err = c
        .iter()
        .zip(&r.representer_coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "p=2 interpolation matches gram solve",
        err,
        1e-8,
    ));
    Ok(())
}

fn rkbs_gram(pair: &RkbsPair, points: &[f64]) -> rkbs::Result<nalgebra::DMatrix<f64>> {
    let m = points.len();
    let mut k = nalgebra::DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = kernel_from_features(pair.map1(), pair.map2(), points[i], points[j])?;
        }
    }
    Ok(k)
}

fn regularization(rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), RunError> {
    let pair = RkbsPair::gaussian_p(3.0, 40, 1.0)?;
    let s = samples(rng, 4)?;
    let lambdas: Vec<f64> = (0..8).map(|i| 10f64.powi(i - 6)).collect();
    let path = learn::regnet_path(&pair, &s, &lambdas, Loss::Square, Regularizer::Square, 1e-8)?;
    let rise = path
        .windows(2)
        .map(|w| w[1].norm - w[0].norm)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new(
        "regnet path non-increasing",
        rise.max(0.0),
        1e-8 + f64::MIN_POSITIVE,
    ));
    checks.push(Check::holds(
        "regnet path stationary",
        path.iter().all(|r| r.converged),
    ));
    let big = learn::regnet(&pair, &s, 1e8, Loss::Square, Regularizer::Square, 1e-8)?;
    checks.push(Check::new("regnet lambda=1e8 norm", big.norm, 1e-6));
    let small = learn::regnet(&pair, &s, 1e-10, Loss::Square, Regularizer::Square, 1e-8)?;
    let mn = learn::min_norm_interpolate(&pair, &s, 1e-10)?;
    checks.push(Check::new(
        "regnet lambda=1e-10 recovers min norm",
        (small.norm - mn.norm).abs() / mn.norm,
        1e-3,
    ));

    let rkhs = RkbsPair::gaussian_rkhs(40, 1.0)?;
    let s = samples(rng, 4)?;
    let lambda = 0.05;
    let r = learn::regnet(&rkhs, &s, lambda, Loss::Square, Regularizer::Square, 1e-10)?;
    let mut k = rkbs_gram(&rkhs, s.points())?;
    for i in 0..s.len() {
        k[(i, i)] += lambda;
    }
    let c = k
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(s.targets()));
    let err = c.map_or(f64::INFINITY, |c| {
        c.iter()
            .zip(&r.representer_coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    checks.push(Check::new("p=2 regnet matches kernel ridge", err, 1e-8));

    let hat = RkbsPair::hat_delta(41)?;
    let pts = jittered(rng, 0.0, 1.0, 5);
    let s = SampleSet::new(pts, random_vec(rng, 5, 1.0))?;
    let r = learn::l1_regnet(&hat, &s, 1e-3, 1e-9)?;
    checks.push(Check::holds("l1 network optimality", r.converged));
    Ok(())
}

fn kernels(rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), RunError> {
    for (kind, terms, limit) in [
        (MercerExpansion::GaussianTaylor { gamma: 1.0 }, 40, 1e-12),
        (MercerExpansion::BrownianSine, 2000, 1.1e-4),
    ] {
        let space = FeatureSpace::counting(terms, NormSpec::P(2.0))?;
        let map = FeatureMap::new(space, kind.rule(terms))?;
        let closed = kind.closed_form();
        let (lo, hi) = map.domain();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let (x, y) = (rng.random_range(lo..=hi), rng.random_range(lo..=hi));
            worst =
                worst.max((kernel_from_features(&map, &map, x, y)? - closed.eval1(x, y)?).abs());
        }
        let name = match kind {
            MercerExpansion::GaussianTaylor { .. } => "gaussian taylor truncation",
            MercerExpansion::BrownianSine => "brownian sine truncation",
        };
        checks.push(Check::new(name, worst, limit));
        checks.push(Check::holds(
            format!("{name} within tail bound"),
            worst <= mercer_truncation_bound(kind, terms)? + 1e-14,
        ));
    }

    let gauss = Kernel::gaussian(1.0)?;
    let pts: Vec<Vec<f64>> = jittered(rng, -2.0, 2.0, 5)
        .into_iter()
        .map(|x| vec![x])
        .collect();
    let report = admissibility_check(&gauss, &pts)?;
    let s = singular_values(&gram(&gauss, &pts)?);
    checks.push(Check::holds(
        "gaussian gram nonsingular",
        report.nonsingular && s[4] > 1e-12 * s[0],
    ));
    let dup = vec![vec![0.3], vec![0.3]];
    checks.push(Check::holds(
        "duplicate points rejected",
        gram(&gauss, &dup).is_err(),
    ));
    Ok(())
}
