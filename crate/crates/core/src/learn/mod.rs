//! Minimal norm interpolation and regularization networks on `B₁`.
//!
//! For smooth strictly convex `W₂` the minimiser satisfies
//! `J(v) ∈ span{Φ₁(x_j)}`, so candidates are parametrised by
//! `v(c) = J⁻¹(Σ_j c_j Φ₁(x_j))` and the solvers work in `c ∈ R^m`.
//! [`min_norm_oracle`] solves the same problem over all of `W₂` without that
//! parametrisation.

mod interpolate;
mod l1;
mod optim;
mod oracle;
mod regnet;

pub use interpolate::{min_norm_interpolate, min_norm_interpolate_from};
pub use l1::l1_regnet;
pub use oracle::min_norm_oracle;
pub use regnet::{regnet, regnet_path, Loss, Regularizer};

use std::str::FromStr;

use crate::duality::{gateaux_derivative, inverse_duality_map};
use crate::error::{Error, Result};
use crate::kernel::DISTINCT_TOL;
use crate::numeric::{euclid, project_onto_span};
use crate::rkbs::RkbsPair;

/// Points `x_j ∈ Ω₁` with targets `t_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    targets: Vec<f64>,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        if points.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: targets.len(),
            });
        }
        if let Some(bad) = points.iter().chain(&targets).find(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "sample value",
                value: *bad,
            });
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if (points[i] - points[j]).abs() <= DISTINCT_TOL {
                    return Err(Error::DuplicatePoints {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(Self { points, targets })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), targets)
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// The minimiser `v ∈ W₂`.
    pub coef: Vec<f64>,
    /// `c` with `J(v) = Σ c_j Φ₁(x_j)`; empty for solvers that do not use it.
    pub representer_coeffs: Vec<f64>,
    pub objective: f64,
    /// `‖v‖_{W₂}`.
    pub norm: f64,
    /// `max_j |f_v(x_j) − t_j|`.
    pub constraint_residual: f64,
    /// Relative distance of `G(v)` from `span{Φ₁(x_j)}`; NaN where not asserted.
    pub representer_residual: f64,
    /// Sup norm of the objective's gradient (or optimality defect) at `coef`.
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Entries of `coef` with magnitude above `1e-12`.
    pub support_size: usize,
    /// Set when the sampled features were dependent and an independent subset was solved.
    pub rank_deficient: bool,
}

/// Loss of the square type; `L_t(y) = Σ (y_j − t_j)²`.
pub(crate) fn square_loss(values: &[f64], targets: &[f64]) -> f64 {
    values
        .iter()
        .zip(targets)
        .map(|(y, t)| (y - t) * (y - t))
        .sum()
}

pub(crate) fn support_size(v: &[f64]) -> usize {
    v.iter().filter(|x| x.abs() > 1e-12).count()
}

/// Sampled features `Φ₁(x_j)` as rows.
pub(crate) fn feature_rows(pair: &RkbsPair, samples: &SampleSet) -> Result<Vec<Vec<f64>>> {
    samples
        .points()
        .iter()
        .map(|&x| pair.map1().feature(x))
        .collect()
}

/// Values `f_v(x_j) = ⟨Φ₁(x_j), v⟩`.
pub(crate) fn sample_values(pair: &RkbsPair, rows: &[Vec<f64>], v: &[f64]) -> Result<Vec<f64>> {
    rows.iter().map(|a| pair.space1().pairing(a, v)).collect()
}

pub(crate) fn max_residual(values: &[f64], targets: &[f64]) -> f64 {
    values
        .iter()
        .zip(targets)
        .map(|(y, t)| (y - t).abs())
        .fold(0.0, f64::max)
}

/// `Σ_j c_j a_j`.
pub(crate) fn combine(rows: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let n = rows.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (a, cj) in rows.iter().zip(c) {
        for (o, ai) in out.iter_mut().zip(a) {
            *o += cj * ai;
        }
    }
    out
}

/// `v(c) = J⁻¹(Σ c_j Φ₁(x_j))` in `W₂`.
pub(crate) fn representer_vector(
    pair: &RkbsPair,
    rows: &[Vec<f64>],
    c: &[f64],
) -> Result<Vec<f64>> {
    inverse_duality_map(pair.space2(), &combine(rows, c))
}

pub(crate) fn require_smooth(pair: &RkbsPair, operation: &'static str) -> Result<()> {
    let spec = pair.space2().norm_spec();
    if spec.is_smooth() {
        Ok(())
    } else {
        Err(Error::UnsupportedNorm {
            norm: spec.to_string(),
            operation,
        })
    }
}

/// `‖G(v) − P G(v)‖₂ / ‖G(v)‖₂` with `P` the projection onto `span{Φ₁(x_j)}`.
///
/// Zero for `v = 0`.
pub fn representer_residual(pair: &RkbsPair, v: &[f64], samples: &SampleSet) -> Result<f64> {
    let g = gateaux_derivative(pair.space2(), v)?;
    let gn = euclid(&g);
    if gn == 0.0 {
        return Ok(0.0);
    }
    let rows = feature_rows(pair, samples)?;
    let proj = project_onto_span(&rows, &g);
    let diff: Vec<f64> = g.iter().zip(&proj).map(|(a, b)| a - b).collect();
    Ok(euclid(&diff) / gn)
}

/// Indices of a maximal independent subset of `rows`, in order.
pub(crate) fn independent_subset(rows: &[Vec<f64>], tol: f64) -> Result<Vec<usize>> {
    let mut keep: Vec<usize> = Vec::new();
    let mut rank = 0;
    for i in 0..rows.len() {
        let mut trial: Vec<Vec<f64>> = keep.iter().map(|&k| rows[k].clone()).collect();
        trial.push(rows[i].clone());
        let r = crate::feature_space::independence_rank(&trial, tol)?;
        if r > rank {
            rank = r;
            keep.push(i);
        }
    }
    Ok(keep)
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Ok(Self::Square),
            other => Err(Error::UnknownKind {
                what: "loss",
                name: other.to_string(),
            }),
        }
    }
}

impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(Self::Identity),
            "square" => Ok(Self::Square),
            other => Err(Error::UnknownKind {
                what: "regularizer",
                name: other.to_string(),
            }),
        }
    }
}
