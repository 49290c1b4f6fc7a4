//! Full-scale acceptance run: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkbs::duality::{
    dual_norm, duality_map, gateaux_directional, gateaux_fd, sip, sip_sphere_scan,
};
use rkbs::feature_space::{gauge_norm, orlicz_norm, p_norm};
use rkbs::kernel::{gram, kernel_from_features};
use rkbs::learn::{
    min_norm_interpolate, min_norm_interpolate_from, min_norm_oracle, regnet, regnet_path, Loss,
    Regularizer,
};
use rkbs::numeric::singular_values;
use rkbs::{
    BFunction, FeatureMap, FeatureRule, FeatureSpace, Kernel, MercerExpansion, NormSpec, RkbsPair,
    SampleSet, Side, YoungPair,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect()
}

fn jittered(rng: &mut ChaCha8Rng, lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let h = (hi - lo) / m as f64;
    (0..m)
        .map(|j| lo + h * (j as f64 + 0.5) + h * rng.random_range(-0.25..=0.25))
        .collect()
}

fn instance(rng: &mut ChaCha8Rng, m: usize) -> Result<SampleSet, String> {
    let points = jittered(rng, -1.0, 1.0, m);
    let targets = random_vec(rng, m, 1.0);
    SampleSet::new(points, targets).map_err(err)
}

fn smooth_specs() -> Vec<(&'static str, NormSpec)> {
    vec![
        ("p=1.5", NormSpec::P(1.5)),
        ("p=2", NormSpec::P(2.0)),
        ("p=3", NormSpec::P(3.0)),
        ("entropy", NormSpec::OrliczGauge(YoungPair::entropy())),
    ]
}

fn smooth_pairs(terms: usize) -> Result<Vec<(&'static str, RkbsPair)>, String> {
    Ok(vec![
        ("p=1.5", RkbsPair::gaussian_p(1.5, terms, 1.0).map_err(err)?),
        ("p=2", RkbsPair::gaussian_p(2.0, terms, 1.0).map_err(err)?),
        ("p=3", RkbsPair::gaussian_p(3.0, terms, 1.0).map_err(err)?),
        (
            "entropy",
            RkbsPair::entropy_orlicz(terms, 1.0).map_err(err)?,
        ),
    ])
}

fn gram_of(pair: &RkbsPair, points: &[f64]) -> Result<DMatrix<f64>, String> {
    let m = points.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = kernel_from_features(pair.map1(), pair.map2(), points[i], points[j])
                .map_err(err)?;
        }
    }
    Ok(k)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn reproducing() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs = vec![
        ("rkhs", RkbsPair::gaussian_rkhs(40, 1.0).map_err(err)?),
        (
            "mercer (3, 1.5)",
            RkbsPair::gaussian_p(3.0, 40, 1.0).map_err(err)?,
        ),
        ("hat/delta", RkbsPair::hat_delta(101).map_err(err)?),
        ("entropy", RkbsPair::entropy_orlicz(40, 1.0).map_err(err)?),
    ];
    let mut worst: f64 = 0.0;
    for (_, pair) in &pairs {
        for k in 0..100 {
            let side = if k % 2 == 0 { Side::B1 } else { Side::B2 };
            let map = pair.feature_map(side);
            let pts: Vec<f64> = match map.rule() {
                FeatureRule::Delta { grid } => (0..100)
                    .map(|_| grid[rng.random_range(0..grid.len())])
                    .collect(),
                _ => {
                    let (lo, hi) = map.domain();
                    (0..100).map(|_| rng.random_range(lo..=hi)).collect()
                }
            };
            let f = BFunction {
                side,
                coef: random_vec(&mut rng, pair.dim(), 1.0),
            };
            worst = worst.max(pair.reproduce_residual(&f, &pts).map_err(err)?);
        }
    }
    let elapsed = start.elapsed();
    require(
        worst < 1e-10 && elapsed < Duration::from_secs(10),
        format!("max residual {worst:.3e}, {elapsed:.2?}"),
    )
}

fn norm_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let entropy = YoungPair::entropy();
    let level = entropy.unit_level();
    let mut slack: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=100);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let v = random_vec(&mut rng, n, scale);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let gauge = gauge_norm(&entropy, &v, &w).map_err(err)?;
        let orlicz = orlicz_norm(&entropy, &v, &w).map_err(err)?;
        slack = slack.max(level * gauge - orlicz).max(orlicz - 2.0 * gauge);
    }
    let mut power_err: f64 = 0.0;
    for p in [1.5, 2.0, 3.0, 4.5] {
        let young = YoungPair::power(p).map_err(err)?;
        for _ in 0..100 {
            let n = rng.random_range(1..=100);
            let v = random_vec(&mut rng, n, 2.0);
            let w = vec![1.0; n];
            let exact = p_norm(&v, &w, p);
            power_err = power_err.max((gauge_norm(&young, &v, &w).map_err(err)? - exact).abs());
        }
    }
    require(
        slack <= 1e-8 && power_err <= 1e-9,
        format!(
            "equivalence slack {:.3e}, power gauge error {power_err:.3e}",
            slack.max(0.0)
        ),
    )
}

fn duality_maps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in smooth_specs() {
        let (mut pe, mut de): (f64, f64) = (0.0, 0.0);
        for _ in 0..200 {
            let n = rng.random_range(1..=12);
            let space = FeatureSpace::counting(n, spec).map_err(err)?;
            let f = random_vec(&mut rng, n, 2.0);
            let nf = space.norm(&f).map_err(err)?;
            let j = duality_map(&space, &f).map_err(err)?;
            pe = pe.max((space.pairing(&f, &j).map_err(err)? - nf * nf).abs());
            de = de.max((dual_norm(&space, &j).map_err(err)? - nf).abs());
        }
        ok &= pe <= 1e-9 && de <= 1e-8;
        lines.push(format!("{name}: {pe:.1e}/{de:.1e}"));
    }
    require(ok, format!("pairing/dual-norm errors {}", lines.join(", ")))
}

fn gateaux() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for (_, spec) in smooth_specs() {
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let space = FeatureSpace::counting(n, spec).map_err(err)?;
            let f = random_vec(&mut rng, n, 2.0);
            let h = random_vec(&mut rng, n, 1.0);
            let analytic = gateaux_directional(&space, &f, &h).map_err(err)?;
            let fd = gateaux_fd(&space, &f, &h, 1e-6).map_err(err)?;
            worst = worst.max((analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-12));
        }
    }
    require(worst < 1e-5, format!("max relative error {worst:.3e}"))
}

fn sip_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut linear, mut diag, mut cs): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut positive = true;
    for i in 0..500 {
        let spec = smooth_specs()[i % 4].1;
        let n = rng.random_range(1..=10);
        let space = FeatureSpace::counting(n, spec).map_err(err)?;
        let f1 = random_vec(&mut rng, n, 2.0);
        let f2 = random_vec(&mut rng, n, 2.0);
        let g = random_vec(&mut rng, n, 2.0);
        let a = rng.random_range(-3.0..3.0);
        let s = |f: &[f64]| sip(&space, f, &g).map(|v| v.value).map_err(err);
        let sum: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| x + y).collect();
        let scaled: Vec<f64> = f1.iter().map(|x| a * x).collect();
        let (s1, s2) = (s(&f1)?, s(&f2)?);
        linear = linear
            .max((s(&sum)? - s1 - s2).abs())
            .max((s(&scaled)? - a * s1).abs());
        let nf = space.norm(&f1).map_err(err)?;
        let ff = sip(&space, &f1, &f1).map_err(err)?.value;
        positive &= ff > 0.0;
        diag = diag.max((ff - nf * nf).abs());
        cs = cs.max(s1.abs() - nf * space.norm(&g).map_err(err)?);
    }
    require(
        linear <= 1e-10 && diag <= 1e-10 && cs <= 1e-9 && positive,
        format!("linearity {linear:.1e}, [f,f] {diag:.1e}, cauchy-schwarz excess {cs:.1e}, positive {positive}"),
    )
}

fn sphere_limits() -> Outcome {
    let ks = [
        1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8,
    ];
    let scan = sip_sphere_scan(&[1.0, 0.0], &[1.0, 2.0], &ks).map_err(err)?;
    let small = (scan.rows[0].1 - 0.2).abs();
    let large = (scan.rows[ks.len() - 1].1 - 1.0 / 3.0).abs();
    let within = scan.within_limits(0.0);
    require(
        small < 1e-4 && large < 1e-4 && within,
        format!(
            "|S(1e-6) - 1/5| = {small:.3e}, |S(1e8) - 1/3| = {large:.3e}, within limits {within}"
        ),
    )
}

fn min_norm_interpolation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut cres, mut rres, mut spread, mut oracle): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (name, pair) in smooth_pairs(60)? {
        let s = instance(&mut rng, 5)?;
        let r = min_norm_interpolate(&pair, &s, 1e-11).map_err(err)?;
        if !r.converged {
            return Err(format!("{name}: not converged"));
        }
        cres = cres.max(r.constraint_residual);
        rres = rres.max(r.representer_residual);
        for _ in 0..5 {
            let c0: Vec<f64> = r
                .representer_coeffs
                .iter()
                .map(|c| {
                    c * (1.0 + 0.5 * rng.random_range(-1.0..1.0))
                        + 0.05 * rng.random_range(-1.0..1.0)
                })
                .collect();
            let other = min_norm_interpolate_from(&pair, &s, 1e-11, &c0).map_err(err)?;
            spread = spread.max(sup_diff(&r.coef, &other.coef));
        }
        let o = min_norm_oracle(&pair, &s, 1e-11).map_err(err)?;
        oracle = oracle.max((o.norm - r.norm).abs() / r.norm);
    }
    let elapsed = start.elapsed();
    require(
        cres < 1e-8 && rres < 1e-6 && spread < 1e-6 && oracle < 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "constraint {cres:.1e}, representer {rres:.1e}, multistart {spread:.1e}, oracle {oracle:.1e}, {elapsed:.2?}"
        ),
    )
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pair = RkbsPair::gaussian_rkhs(40, 1.0).map_err(err)?;
    let (mut interp, mut ridge): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let m = rng.random_range(2..=5);
        let s = instance(&mut rng, m)?;
        let t = DVector::from_column_slice(s.targets());
        let k = gram_of(&pair, s.points())?;
        let c = k.clone().lu().solve(&t).ok_or("singular gram")?;
        let r = min_norm_interpolate(&pair, &s, 1e-12).map_err(err)?;
        interp = interp.max(sup_diff(c.as_slice(), &r.representer_coeffs));

        let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
        let c = (k + DMatrix::identity(m, m) * lambda)
            .lu()
            .solve(&t)
            .ok_or("singular ridge system")?;
        let r = regnet(&pair, &s, lambda, Loss::Square, Regularizer::Square, 1e-11).map_err(err)?;
        ridge = ridge.max(sup_diff(c.as_slice(), &r.representer_coeffs));
    }
    require(
        interp < 1e-8 && ridge < 1e-8,
        format!("gram solve {interp:.1e}, kernel ridge {ridge:.1e}"),
    )
}

fn regularization_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lambdas: Vec<f64> = (0..8).map(|i| 10f64.powi(i - 5)).collect();
    let (mut rise, mut big, mut small): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (name, pair) in smooth_pairs(60)? {
        let s = instance(&mut rng, 5)?;
        let mn = min_norm_interpolate(&pair, &s, 1e-11).map_err(err)?;
        for reg in [Regularizer::Square, Regularizer::Identity] {
            let path = regnet_path(&pair, &s, &lambdas, Loss::Square, reg, 1e-8).map_err(err)?;
            if let Some(r) = path.iter().find(|r| !r.converged) {
                return Err(format!(
                    "{name} {reg:?}: stationarity {:.1e}",
                    r.stationarity
                ));
            }
            rise = path
                .windows(2)
                .map(|w| w[1].norm - w[0].norm)
                .fold(rise, f64::max);
            big = big.max(
                regnet(&pair, &s, 1e8, Loss::Square, reg, 1e-8)
                    .map_err(err)?
                    .norm,
            );
        }
        let r = regnet(&pair, &s, 1e-10, Loss::Square, Regularizer::Square, 1e-8).map_err(err)?;
        small = small.max((r.norm - mn.norm).abs() / mn.norm);
    }
    require(
        rise <= 1e-8 && big < 1e-6 && small < 1e-3,
        format!(
            "max norm increase {rise:.1e}, norm at 1e8 {big:.1e}, small-lambda gap {small:.1e}"
        ),
    )
}

fn mercer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, terms, limit) in [
        (MercerExpansion::GaussianTaylor { gamma: 1.0 }, 40, 1e-12),
        (MercerExpansion::BrownianSine, 2000, 1.1e-4),
    ] {
        let space = FeatureSpace::counting(terms, NormSpec::P(2.0)).map_err(err)?;
        let map = FeatureMap::new(space, kind.rule(terms)).map_err(err)?;
        let closed = kind.closed_form();
        let (lo, hi) = map.domain();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let (x, y) = (rng.random_range(lo..=hi), rng.random_range(lo..=hi));
            let approx = kernel_from_features(&map, &map, x, y).map_err(err)?;
            worst = worst.max((approx - closed.eval1(x, y).map_err(err)?).abs());
        }
        ok &= worst < limit;
        parts.push(format!("N={terms}: {worst:.2e}"));
    }
    require(ok, parts.join(", "))
}

fn admissibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let gauss = Kernel::gaussian(1.0).map_err(err)?;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let pts: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let s = singular_values(&gram(&gauss, &pts).map_err(err)?);
        worst = worst.min(s[4] / s[0]);
    }
    let rejected = gram(&gauss, &[vec![0.1], vec![0.4], vec![0.1]]).is_err();
    require(
        worst > 1e-12 && rejected,
        format!("min sigma ratio {worst:.2e}, duplicates rejected {rejected}"),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Result<(i32, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_rkbs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .map_err(err)?
        .status;
    let bytes = std::fs::read(out).unwrap_or_default();
    Ok((status.code().unwrap_or(-1), bytes))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let commands: [&[&str]; 7] = [
        &["verify", "--seed", "3"],
        &[
            "kernel-table",
            "--set",
            "kernel=gaussian",
            "--set",
            "grid_points=7",
        ],
        &[
            "norm",
            "--set",
            "vector=1,-2,0.5",
            "--set",
            "norm=orlicz_gauge",
        ],
        &["sip-scan"],
        &[
            "interpolate",
            "--seed",
            "4",
            "--set",
            "p=3",
            "--set",
            "terms=30",
        ],
        &[
            "regnet",
            "--seed",
            "4",
            "--set",
            "lambda_path=1e-3,1e-2,1e-1",
            "--set",
            "terms=30",
        ],
        &["l1", "--seed", "4", "--set", "grid_points=41"],
    ];
    let mut verify_code = None;
    for (i, args) in commands.iter().enumerate() {
        let (a, first) = run_cli(args, &dir.path().join(format!("{i}a.csv")))?;
        let (b, second) = run_cli(args, &dir.path().join(format!("{i}b.csv")))?;
        if i == 0 {
            verify_code = Some(a);
        } else if a != 0 {
            return Err(format!("`{}` exited {a}", args.join(" ")));
        }
        if a != b || first.is_empty() || first != second {
            return Err(format!("`{}` is not reproducible", args.join(" ")));
        }
    }
    require(
        verify_code == Some(0),
        format!(
            "verify exit {verify_code:?}, {} commands byte-identical on rerun",
            commands.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("reproducing property", reproducing),
        ("norm equivalence", norm_equivalence),
        ("duality map", duality_maps),
        ("gateaux gradient", gateaux),
        ("semi-inner-product axioms", sip_axioms),
        ("orlicz limit scan", sphere_limits),
        ("minimal norm interpolation", min_norm_interpolation),
        ("p=2 closed forms", closed_forms),
        ("regularization network", regularization_path),
        ("mercer truncations", mercer),
        ("admissibility", admissibility),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
