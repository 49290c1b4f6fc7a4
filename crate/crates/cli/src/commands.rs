//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkbs::duality::sip_sphere_scan;
use rkbs::feature_space::FeatureSpace;
use rkbs::kernel::uniform_grid;
use rkbs::learn::{self, SampleSet, SolveReport};
use rkbs::RkbsPair;

use crate::config::{Command, ConfigError, Settings};
use crate::output::{fmt_f64, Table};
use crate::verify;
use crate::RunError;

/// CSV table, plain-text summary and whether a verification failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: String,
    pub verification_failed: bool,
}

impl Outcome {
    fn ok(table: Table, summary: String) -> Self {
        Self {
            table,
            summary,
            verification_failed: false,
        }
    }
}

pub fn dispatch(settings: &Settings) -> Result<Outcome, RunError> {
    match settings.command()? {
        Command::KernelTable => kernel_table(settings),
        Command::Norm => norm(settings),
        Command::SipScan => sip_scan(settings),
        Command::Interpolate => interpolate(settings),
        Command::Regnet => regnet(settings),
        Command::L1 => l1(settings),
        Command::Verify => verify::run(settings),
    }
}

fn kernel_table(settings: &Settings) -> Result<Outcome, RunError> {
    let kernel = settings.kernel()?;
    let n = settings.usize_or("grid_points", 11)?;
    let grid = uniform_grid(n).map_err(|e| ConfigError::new("grid_points", e))?;
    let mut table = Table::new(&["x", "y", "k"]);
    for &x in &grid {
        for &y in &grid {
            let k = kernel.eval1(x, y)?;
            table.push(vec![fmt_f64(x), fmt_f64(y), fmt_f64(k)]);
        }
    }
    let summary = format!(
        "command: kernel-table\nkernel: {}\ngrid_points: {n}\nrows: {}\n",
        settings.get("kernel").unwrap_or("hat"),
        table.len()
    );
    Ok(Outcome::ok(table, summary))
}

fn norm(settings: &Settings) -> Result<Outcome, RunError> {
    let v = settings
        .list("vector")?
        .ok_or_else(|| ConfigError::new("vector", "required for the norm command"))?;
    let weights = settings.list_or("weights", &vec![1.0; v.len()])?;
    if weights.len() != v.len() {
        return Err(ConfigError::new(
            "weights",
            format!("expected {} entries, found {}", v.len(), weights.len()),
        )
        .into());
    }
    let spec = settings.norm_spec()?;
    let space = FeatureSpace::new(weights, spec).map_err(|e| ConfigError::new("weights", e))?;
    let dual = space.dual();
    let mut table = Table::new(&["space", "spec", "value"]);
    let value = space.norm(&v)?;
    let dual_value = dual.norm(&v)?;
    table.push(vec!["primal".into(), spec.to_string(), fmt_f64(value)]);
    table.push(vec![
        "dual".into(),
        dual.norm_spec().to_string(),
        fmt_f64(dual_value),
    ]);
    let summary = format!(
        "command: norm\nspec: {spec}\nnorm: {}\ndual_spec: {}\ndual_norm: {}\n",
        fmt_f64(value),
        dual.norm_spec(),
        fmt_f64(dual_value)
    );
    Ok(Outcome::ok(table, summary))
}

pub const DEFAULT_K_LIST: &[f64] = &[
    1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8,
];

fn sip_scan(settings: &Settings) -> Result<Outcome, RunError> {
    let x = settings.list_or("x", &[1.0, 0.0])?;
    let y = settings.list_or("y", &[1.0, 2.0])?;
    if x.len() != y.len() {
        return Err(ConfigError::new(
            "y",
            format!("length {} differs from x length {}", y.len(), x.len()),
        )
        .into());
    }
    if y.iter().all(|v| *v == 0.0) {
        return Err(ConfigError::new("y", "must be nonzero").into());
    }
    let ks = settings.list_or("k_list", DEFAULT_K_LIST)?;
    if let Some(k) = ks.iter().find(|k| **k <= 0.0) {
        return Err(
            ConfigError::new("k_list", format!("scales must be positive, found {k}")).into(),
        );
    }
    let scan = sip_sphere_scan(&x, &y, &ks)?;
    let mut table = Table::new(&["k", "s_k", "l2", "l1"]);
    for &(k, s) in &scan.rows {
        table.push(vec![
            fmt_f64(k),
            fmt_f64(s),
            fmt_f64(scan.l2),
            fmt_f64(scan.l1),
        ]);
    }
    let summary = format!(
        "command: sip-scan\nrows: {}\nl2_limit: {}\nl1_limit: {}\nwithin_limits: {}\nmonotone: {}\n",
        scan.rows.len(),
        fmt_f64(scan.l2),
        fmt_f64(scan.l1),
        scan.within_limits(1e-12),
        scan.monotone_in_k(1e-12)
    );
    Ok(Outcome::ok(table, summary))
}

/// Samples from the `samples` CSV (`x,t` columns, header row) or generated
/// on a jittered grid over the pair's domain with uniform targets in `[−1, 1]`.
pub fn load_samples(settings: &Settings, pair: &RkbsPair) -> Result<SampleSet, RunError> {
    if let Some(path) = settings.get("samples") {
        return read_samples(Path::new(path));
    }
    let m = settings.usize_or("sample_count", 5)?;
    if m == 0 {
        return Err(ConfigError::new("sample_count", "must be at least 1").into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed()?);
    let (lo, hi) = pair.map1().domain();
    let points = jittered(&mut rng, lo, hi, m);
    let targets = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok(SampleSet::new(points, targets).map_err(|e| ConfigError::new("sample_count", e))?)
}

/// One point per cell of an `m`-cell partition, jittered within the middle half.
pub fn jittered(rng: &mut ChaCha8Rng, lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let h = (hi - lo) / m as f64;
    (0..m)
        .map(|j| (lo + h * (j as f64 + 0.5) + h * rng.random_range(-0.25..=0.25)).clamp(lo, hi))
        .collect()
}

fn read_samples(path: &Path) -> Result<SampleSet, RunError> {
    let field = || "samples".to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| ConfigError::new(field(), e))?;
    let mut points = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ConfigError::new(field(), e))?;
        if record.len() != 2 {
            return Err(
                ConfigError::new(field(), format!("row {}: expected columns x,t", i + 1)).into(),
            );
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| ConfigError::new(field(), format!("row {}: `{s}`: {e}", i + 1)))
        };
        points.push(parse(&record[0])?);
        targets.push(parse(&record[1])?);
    }
    Ok(SampleSet::new(points, targets).map_err(|e| ConfigError::new(field(), e))?)
}

fn report_table(report: &SolveReport) -> Table {
    let mut table = Table::new(&["quantity", "index", "value"]);
    for (i, v) in report.coef.iter().enumerate() {
        table.push(vec!["coef".into(), i.to_string(), fmt_f64(*v)]);
    }
    for (i, c) in report.representer_coeffs.iter().enumerate() {
        table.push(vec!["representer".into(), i.to_string(), fmt_f64(*c)]);
    }
    table
}

fn report_summary(command: &str, report: &SolveReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command: {command}");
    let _ = writeln!(s, "converged: {}", report.converged);
    let _ = writeln!(s, "norm: {}", fmt_f64(report.norm));
    let _ = writeln!(s, "objective: {}", fmt_f64(report.objective));
    let _ = writeln!(
        s,
        "constraint_residual: {}",
        fmt_f64(report.constraint_residual)
    );
    let _ = writeln!(
        s,
        "representer_residual: {}",
        fmt_f64(report.representer_residual)
    );
    let _ = writeln!(s, "stationarity: {}", fmt_f64(report.stationarity));
    let _ = writeln!(s, "iterations: {}", report.iterations);
    let _ = writeln!(s, "support_size: {}", report.support_size);
    let _ = writeln!(s, "rank_deficient: {}", report.rank_deficient);
    s
}

fn require_converged(what: &'static str, report: &SolveReport) -> Result<(), RunError> {
    if report.converged {
        Ok(())
    } else {
        Err(RunError::Solver(rkbs::Error::NoConvergence {
            what,
            detail: format!("stationarity {:e}", report.stationarity),
        }))
    }
}

fn interpolate(settings: &Settings) -> Result<Outcome, RunError> {
    let pair = settings.pair("gaussian_p")?;
    let tol = settings.tol(1e-10)?;
    let samples = load_samples(settings, &pair)?;
    let report = learn::min_norm_interpolate(&pair, &samples, tol)?;
    require_converged("minimal norm interpolation", &report)?;
    Ok(Outcome::ok(
        report_table(&report),
        report_summary("interpolate", &report),
    ))
}

fn regnet(settings: &Settings) -> Result<Outcome, RunError> {
    let pair = settings.pair("gaussian_p")?;
    let tol = settings.tol(1e-8)?;
    let loss = settings.loss()?;
    let reg = settings.regularizer()?;
    let samples = load_samples(settings, &pair)?;
    if let Some(path) = settings.list("lambda_path")? {
        if let Some(l) = path.iter().find(|l| **l <= 0.0) {
            return Err(ConfigError::new(
                "lambda_path",
                format!("weights must be positive, found {l}"),
            )
            .into());
        }
        let reports = learn::regnet_path(&pair, &samples, &path, loss, reg, tol)?;
        let mut table = Table::new(&[
            "lambda",
            "norm",
            "objective",
            "constraint_residual",
            "stationarity",
            "converged",
        ]);
        for (l, r) in path.iter().zip(&reports) {
            table.push(vec![
                fmt_f64(*l),
                fmt_f64(r.norm),
                fmt_f64(r.objective),
                fmt_f64(r.constraint_residual),
                fmt_f64(r.stationarity),
                r.converged.to_string(),
            ]);
        }
        for r in &reports {
            require_converged("regularization network", r)?;
        }
        let summary = format!(
            "command: regnet\nlambda_path: {} values\nconverged: true\n",
            path.len()
        );
        return Ok(Outcome::ok(table, summary));
    }
    let lambda = settings.positive_or("lambda", 1e-2)?;
    let report = learn::regnet(&pair, &samples, lambda, loss, reg, tol)?;
    require_converged("regularization network", &report)?;
    Ok(Outcome::ok(
        report_table(&report),
        report_summary("regnet", &report),
    ))
}

fn l1(settings: &Settings) -> Result<Outcome, RunError> {
    let pair = settings.pair("hat_delta")?;
    let tol = settings.tol(1e-9)?;
    let lambda = settings.positive_or("lambda", 1e-2)?;
    let samples = load_samples(settings, &pair)?;
    let report = learn::l1_regnet(&pair, &samples, lambda, tol)?;
    require_converged("l1 regularization network", &report)?;
    Ok(Outcome::ok(
        report_table(&report),
        report_summary("l1", &report),
    ))
}
