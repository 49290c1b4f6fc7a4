//! Minimal norm interpolation `min ‖v‖_{W₂}` subject to `f_v(x_j) = t_j`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{bfgs, damped_newton, Root};
use super::{
    combine, feature_rows, independent_subset, max_residual, representer_residual,
    representer_vector, require_smooth, sample_values, support_size, SampleSet, SolveReport,
};
use crate::error::{Error, Result};
use crate::feature_space::independence_rank;
use crate::numeric::{dot, solve};
use crate::rkbs::{RkbsPair, RANK_TOL};

const NEWTON_MAX_ITER: usize = 100;
const RESTARTS: u64 = 5;
const DUAL_MAX_ITER: usize = 2000;

/// Solve by damped Newton on `F(c) = t`, `F_k(c) = ⟨Φ₁(x_k), v(c)⟩`.
///
/// The first start is the Gram solution rescaled along its ray (`F` is
/// homogeneous of degree one); five seeded random restarts follow a failure,
/// and a convex descent on the dual objective comes last.
pub fn min_norm_interpolate(pair: &RkbsPair, samples: &SampleSet, tol: f64) -> Result<SolveReport> {
    solve_with(pair, samples, tol, None)
}

/// Single Newton run from the given representer coefficients.
pub fn min_norm_interpolate_from(
    pair: &RkbsPair,
    samples: &SampleSet,
    tol: f64,
    c0: &[f64],
) -> Result<SolveReport> {
    if c0.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: c0.len(),
        });
    }
    solve_with(pair, samples, tol, Some(c0))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        })
    }
}

fn solve_with(
    pair: &RkbsPair,
    samples: &SampleSet,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<SolveReport> {
    check_tol(tol)?;
    require_smooth(pair, "minimal norm interpolation")?;
    let rows = feature_rows(pair, samples)?;
    let m = rows.len();
    let rank = independence_rank(&rows, RANK_TOL)?;
    let t = samples.targets();

    let (active, rank_deficient) = if rank < m {
        (independent_subset(&rows, RANK_TOL)?, true)
    } else {
        ((0..m).collect(), false)
    };
    let sub_rows: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].clone()).collect();
    let sub_t: Vec<f64> = active.iter().map(|&i| t[i]).collect();
    let sub_start: Option<Vec<f64>> = start.map(|c| active.iter().map(|&i| c[i]).collect());

    let (c_sub, iterations) = if sub_t.iter().all(|&x| x == 0.0) {
        (vec![0.0; active.len()], 0)
    } else {
        newton_multistart(pair, &sub_rows, &sub_t, tol, sub_start.as_deref())?
    };

    let mut c = vec![0.0; m];
    for (k, &i) in active.iter().enumerate() {
        c[i] = c_sub[k];
    }
    let v = representer_vector(pair, &sub_rows, &c_sub)?;
    let values = sample_values(pair, &rows, &v)?;
    let constraint_residual = max_residual(&values, t);
    if rank_deficient && constraint_residual > tol {
        // the dropped constraints are not implied by the kept ones
        return Err(Error::RankDeficient { rank, needed: m });
    }
    let norm = pair.space2().norm(&v)?;
    Ok(SolveReport {
        representer_residual: representer_residual(pair, &v, samples)?,
        support_size: support_size(&v),
        coef: v,
        representer_coeffs: c,
        objective: norm,
        norm,
        constraint_residual,
        stationarity: constraint_residual,
        iterations,
        converged: constraint_residual <= tol,
        rank_deficient,
    })
}

/// Returns the representer coefficients and the Newton iteration count.
fn newton_multistart(
    pair: &RkbsPair,
    rows: &[Vec<f64>],
    t: &[f64],
    tol: f64,
    start: Option<&[f64]>,
) -> Result<(Vec<f64>, usize)> {
    let residual = |c: &[f64]| -> Result<Vec<f64>> {
        let v = representer_vector(pair, rows, c)?;
        let f = sample_values(pair, rows, &v)?;
        Ok(f.iter().zip(t).map(|(a, b)| a - b).collect())
    };
    if let Some(c0) = start {
        let root = damped_newton(residual, c0, tol, NEWTON_MAX_ITER)?;
        if root.converged {
            return Ok((root.x, root.iterations));
        }
        let (root, its) = dual_descent(pair, rows, t, tol, c0)?;
        return if root.converged {
            Ok((root.x, root.iterations + its))
        } else {
            Err(no_convergence(root.residual_inf, 1))
        };
    }

    let base = gram_start(pair, rows, t)?;
    let mut total = 0;
    let mut best = f64::INFINITY;
    for attempt in 0..=RESTARTS {
        let c0 = if attempt == 0 {
            base.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(attempt);
            base.iter()
                .map(|x| {
                    x * (1.0 + 0.5 * rng.random_range(-1.0..1.0))
                        + 0.1 * rng.random_range(-1.0..1.0)
                })
                .collect()
        };
        let root = damped_newton(residual, &c0, tol, NEWTON_MAX_ITER)?;
        total += root.iterations;
        if root.converged {
            return Ok((root.x, total));
        }
        log::debug!(
            "interpolation start {attempt} stalled at residual {:e}",
            root.residual_inf
        );
        best = best.min(root.residual_inf);
    }
    let (root, its) = dual_descent(pair, rows, t, tol, &base)?;
    if root.converged {
        return Ok((root.x, total + its + root.iterations));
    }
    Err(no_convergence(
        best.min(root.residual_inf),
        RESTARTS as usize + 1,
    ))
}

/// Fallback for starts where Newton stalls on a non-smooth `F`.
///
/// `F(c) − t` is the gradient of the convex `h(c) = ½‖Σ c_j Φ₁(x_j)‖²_{W₁} − ⟨c, t⟩`,
/// so BFGS on `h` descends from any start; Newton then polishes the result.
fn dual_descent(
    pair: &RkbsPair,
    rows: &[Vec<f64>],
    t: &[f64],
    tol: f64,
    c0: &[f64],
) -> Result<(Root, usize)> {
    let residual = |c: &[f64]| -> Result<Vec<f64>> {
        let v = representer_vector(pair, rows, c)?;
        let f = sample_values(pair, rows, &v)?;
        Ok(f.iter().zip(t).map(|(a, b)| a - b).collect())
    };
    let h = |c: &[f64]| -> Result<(f64, Vec<f64>)> {
        let u = combine(rows, c);
        let n = pair.space1().norm(&u)?;
        Ok((0.5 * n * n - dot(c, t), residual(c)?))
    };
    let min = bfgs(h, c0, None, tol, DUAL_MAX_ITER)?;
    let root = damped_newton(residual, &min.x, tol, NEWTON_MAX_ITER)?;
    Ok((root, min.iterations))
}

fn no_convergence(residual: f64, starts: usize) -> Error {
    Error::NoConvergence {
        what: "minimal norm interpolation",
        detail: format!("best constraint residual {residual:e} after {starts} start(s)"),
    }
}

/// `c = G⁻¹t` for the Gram matrix `G_jk = ⟨Φ₁(x_j), Φ₁(x_k)⟩`, rescaled so
/// that `F(s·c)` best matches `t` along the ray.
fn gram_start(pair: &RkbsPair, rows: &[Vec<f64>], t: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let w = pair.space1().weights();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            g[(j, k)] = crate::feature_space::pairing(w, &rows[j], &rows[k])?;
        }
    }
    let c = solve(&g, t)
        .filter(|c| c.iter().all(|x| x.is_finite()))
        .unwrap_or_else(|| t.to_vec());
    let v = representer_vector(pair, rows, &c)?;
    let f = sample_values(pair, rows, &v)?;
    let ff = dot(&f, &f);
    let ft = dot(&f, t);
    let s = if ff > 0.0 && ft > 0.0 { ft / ff } else { 1.0 };
    Ok(c.into_iter().map(|x| s * x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_targets_give_zero() {
        let pair = RkbsPair::gaussian_p(3.0, 20, 1.0).unwrap();
        let s = SampleSet::new(vec![-0.4, 0.5], vec![0.0, 0.0]).unwrap();
        let r = min_norm_interpolate(&pair, &s, 1e-10).unwrap();
        assert_eq!(r.norm, 0.0);
        assert!(r.coef.iter().all(|x| *x == 0.0));
        assert!(r.converged);
    }

    #[test]
    fn single_constraint_closed_form() {
        let pair = RkbsPair::gaussian_rkhs(30, 1.0).unwrap();
        let (x, t) = (0.35, -1.7);
        let s = SampleSet::new(vec![x], vec![t]).unwrap();
        let r = min_norm_interpolate(&pair, &s, 1e-12).unwrap();
        let phi = pair.map1().feature(x).unwrap();
        let n2: f64 = phi.iter().map(|a| a * a).sum();
        // v = t Φ(x)/‖Φ(x)‖², ‖v‖ = |t|/‖Φ(x)‖
        for (vi, pi) in r.coef.iter().zip(&phi) {
            assert!((vi - t * pi / n2).abs() < 1e-10);
        }
        assert!((r.norm - t.abs() / n2.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn non_smooth_space_rejected() {
        let pair = RkbsPair::hat_delta(11).unwrap();
        let s = SampleSet::new(vec![0.2], vec![1.0]).unwrap();
        assert!(matches!(
            min_norm_interpolate(&pair, &s, 1e-8),
            Err(Error::UnsupportedNorm { .. })
        ));
    }
}
