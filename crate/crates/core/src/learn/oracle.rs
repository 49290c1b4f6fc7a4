//! Penalised brute-force minimal norm solve over all of `W₂`.

use nalgebra::{DMatrix, DVector};

use super::optim::bfgs;
use super::{
    feature_rows, max_residual, representer_residual, require_smooth, sample_values, support_size,
    SampleSet, SolveReport,
};
use crate::duality::gateaux_derivative;
use crate::error::{Error, Result};
use crate::rkbs::RkbsPair;

pub const ORACLE_MAX_DIM: usize = 200;
pub const ORACLE_MAX_SAMPLES: usize = 10;
const STAGE_MAX_ITER: usize = 3000;

/// Minimises `‖v‖ + ρ Σ_j (f_v(x_j) − t_j)²` for `ρ = 1e2, 1e3, …, 1e8`.
///
/// Each stage is warm-started from the previous one and solved by BFGS with
/// backtracking, seeded with the inverse of `I/‖v‖ + 2ρ BᵀB` where `B` is the
/// Euclidean design matrix. No use is made of the representer structure.
pub fn min_norm_oracle(pair: &RkbsPair, samples: &SampleSet, tol: f64) -> Result<SolveReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        });
    }
    require_smooth(pair, "the penalised oracle")?;
    let n = pair.dim();
    let m = samples.len();
    if n > ORACLE_MAX_DIM {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: n as f64,
            reason: "oracle is limited to 200 features",
        });
    }
    if m > ORACLE_MAX_SAMPLES {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: m as f64,
            reason: "oracle is limited to 10 samples",
        });
    }
    let rows = feature_rows(pair, samples)?;
    let t = samples.targets();
    let space = pair.space2();
    let w = space.weights();
    // f_v = B v in Euclidean coordinates
    let b = DMatrix::from_fn(m, n, |j, i| w[i] * rows[j][i]);
    let t_vec = DVector::from_column_slice(t);

    if t.iter().all(|&x| x == 0.0) {
        return report(pair, samples, &rows, vec![0.0; n], 0.0, 0.0, 0, true);
    }

    let svd = b.clone().svd(true, true);
    let eps = svd.singular_values.max() * 1e-13;
    let start = svd.solve(&t_vec, eps).map_err(|e| Error::NoConvergence {
        what: "penalised oracle",
        detail: e.to_string(),
    })?;
    let mut v: Vec<f64> = start.as_slice().to_vec();
    let btb = b.transpose() * &b;

    let mut iterations = 0;
    let mut last = None;
    for stage in 2..=8 {
        let rho = 10f64.powi(stage);
        let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let r = &b * DVector::from_column_slice(x) - &t_vec;
            let norm = space.norm(x)?;
            let g = gateaux_derivative(space, x)?;
            let pen = b.transpose() * &r * (2.0 * rho);
            let grad = g
                .iter()
                .zip(w)
                .zip(pen.iter())
                .map(|((gi, wi), p)| wi * gi + p)
                .collect();
            Ok((norm + rho * r.norm_squared(), grad))
        };
        let nv = space.norm(&v)?.max(1e-12);
        let curvature = DMatrix::identity(n, n) / nv + &btb * (2.0 * rho);
        let h0 = curvature.try_inverse();
        let grad_tol = tol.max(1e-13 * rho);
        let min = bfgs(objective, &v, h0, grad_tol, STAGE_MAX_ITER)?;
        iterations += min.iterations;
        v = min.x;
        last = Some((min.value, min.grad_inf, min.converged));
    }
    let (value, grad_inf, converged) = last.expect("at least one penalty stage");
    report(
        pair, samples, &rows, v, value, grad_inf, iterations, converged,
    )
}

#[allow(clippy::too_many_arguments)]
fn report(
    pair: &RkbsPair,
    samples: &SampleSet,
    rows: &[Vec<f64>],
    v: Vec<f64>,
    objective: f64,
    stationarity: f64,
    iterations: usize,
    converged: bool,
) -> Result<SolveReport> {
    let values = sample_values(pair, rows, &v)?;
    let norm = pair.space2().norm(&v)?;
    Ok(SolveReport {
        representer_residual: representer_residual(pair, &v, samples)?,
        constraint_residual: max_residual(&values, samples.targets()),
        support_size: support_size(&v),
        coef: v,
        representer_coeffs: Vec::new(),
        objective,
        norm,
        stationarity,
        iterations,
        converged,
        rank_deficient: false,
    })
}
