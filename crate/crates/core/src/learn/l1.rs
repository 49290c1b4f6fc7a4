//! Sparse regularization network `min Σ (f_v(x_j) − t_j)² + λ ‖v‖₁`.

use nalgebra::{DMatrix, DVector};

use super::{feature_rows, max_residual, sample_values, support_size, SampleSet, SolveReport};
use crate::error::{Error, Result};
use crate::feature_space::NormSpec;
use crate::numeric::power_iteration_gram;
use crate::rkbs::RkbsPair;

const MAX_ITER: usize = 200_000;
const CHECK_EVERY: usize = 10;
const POLISH_EVERY: usize = 500;

/// Accelerated proximal gradient with soft thresholding.
///
/// The step is `1/L` with `L = 2σ_max(B)²` from power iteration on the
/// Euclidean design matrix `B_ji = w_i Φ₁(x_j)_i`, inflated by 1% to absorb
/// the iteration's underestimate. Momentum is restarted whenever the
/// objective increases. Every few hundred iterations the iterate seeds an active-set
/// refinement, accepted once it meets `tol`. No
/// representer property is asserted.
pub fn l1_regnet(
    pair: &RkbsPair,
    samples: &SampleSet,
    lambda: f64,
    tol: f64,
) -> Result<SolveReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "regularization weight must be positive",
        });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        });
    }
    let spec = pair.space2().norm_spec();
    if spec != NormSpec::P(1.0) {
        return Err(Error::UnsupportedNorm {
            norm: spec.to_string(),
            operation: "the l1 regularization network",
        });
    }
    let rows = feature_rows(pair, samples)?;
    let w = pair.space2().weights().to_vec();
    let (m, n) = (rows.len(), pair.dim());
    let b = DMatrix::from_fn(m, n, |j, i| w[i] * rows[j][i]);
    let t = DVector::from_column_slice(samples.targets());

    let objective = |v: &DVector<f64>| -> f64 {
        let r = &b * v - &t;
        r.norm_squared() + lambda * v.iter().zip(&w).map(|(x, wi)| wi * x.abs()).sum::<f64>()
    };
    let gradient = |v: &DVector<f64>| -> DVector<f64> { b.transpose() * (&b * v - &t) * 2.0 };
    // sup over coordinates of the distance from 0 to the subdifferential
    let defect = |v: &DVector<f64>, g: &DVector<f64>| -> f64 {
        v.iter()
            .zip(g.iter())
            .zip(&w)
            .map(|((x, gi), wi)| {
                if *x == 0.0 {
                    (gi.abs() - lambda * wi).max(0.0)
                } else {
                    (gi + lambda * wi * x.signum()).abs()
                }
            })
            .fold(0.0, f64::max)
    };

    let lipschitz = 2.0 * power_iteration_gram(&b, 10_000, 1e-12) * 1.01;
    let mut v = DVector::zeros(n);
    let mut iterations = 0;
    let mut opt_defect = defect(&v, &gradient(&v));
    if lipschitz > 0.0 && opt_defect > tol {
        let step = 1.0 / lipschitz;
        let soft = |z: f64, k: f64| z.signum() * (z.abs() - k).max(0.0);
        let mut y = v.clone();
        let mut theta: f64 = 1.0;
        let mut f_prev = objective(&v);
        while iterations < MAX_ITER {
            iterations += 1;
            let z = &y - gradient(&y) * step;
            let next = DVector::from_iterator(
                n,
                z.iter()
                    .zip(&w)
                    .map(|(zi, wi)| soft(*zi, step * lambda * wi)),
            );
            let f_next = objective(&next);
            if f_next > f_prev {
                // restart momentum from the current iterate
                theta = 1.0;
                y = v.clone();
                continue;
            }
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            y = &next + (&next - &v) * ((theta - 1.0) / theta_next);
            theta = theta_next;
            v = next;
            f_prev = f_next;
            if iterations % CHECK_EVERY == 0 {
                opt_defect = defect(&v, &gradient(&v));
                if opt_defect <= tol {
                    break;
                }
            }
            if iterations % POLISH_EVERY == 0 {
                if let Some(polished) = polish_active_set(&b, &t, &w, lambda, &v, tol) {
                    let d = defect(&polished, &gradient(&polished));
                    if d <= tol {
                        v = polished;
                        break;
                    }
                }
            }
        }
        opt_defect = defect(&v, &gradient(&v));
    }
    let coef: Vec<f64> = v.as_slice().to_vec();
    let values = sample_values(pair, &rows, &coef)?;
    let norm = pair.space2().norm(&coef)?;
    Ok(SolveReport {
        objective: objective(&v),
        constraint_residual: max_residual(&values, samples.targets()),
        support_size: support_size(&coef),
        coef,
        representer_coeffs: Vec::new(),
        norm,
        representer_residual: f64::NAN,
        stationarity: opt_defect,
        iterations,
        converged: opt_defect <= tol,
        rank_deficient: false,
    })
}

/// Active-set refinement started from `v`.
///
/// The signed active set `S` is kept with linearly independent columns of
/// `B` by moving along null directions of `B_S` that do not increase the
/// ℓ¹ term (the fit is unchanged). On `S` the objective is the quadratic
/// `‖B_S u − t‖² + λ Σ w_i s_i u_i`, minimised exactly; a sign change along
/// the way to that minimiser drops the blocking coordinate, and once signs
/// hold the worst violator of `|g_i| ≤ λ w_i` off `S` joins it.
fn polish_active_set(
    b: &DMatrix<f64>,
    t: &DVector<f64>,
    w: &[f64],
    lambda: f64,
    v: &DVector<f64>,
    tol: f64,
) -> Option<DVector<f64>> {
    let n = v.len();
    let mut v = v.clone();
    let mut signs: Vec<f64> = v
        .iter()
        .map(|x| if *x == 0.0 { 0.0 } else { x.signum() })
        .collect();
    let drop = |v: &mut DVector<f64>, signs: &mut [f64], j: usize| {
        v[j] = 0.0;
        signs[j] = 0.0;
    };
    for _ in 0..4 * n + 20 {
        // keep the active columns independent
        loop {
            let active: Vec<usize> = (0..n).filter(|&i| signs[i] != 0.0).collect();
            if active.is_empty() {
                break;
            }
            let eig = (b.select_columns(&active).transpose() * b.select_columns(&active))
                .symmetric_eigen();
            let top = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
            let k = eig.eigenvalues.imin();
            if eig.eigenvalues[k].abs() > 1e-12 * top {
                break;
            }
            let mut d = eig.eigenvectors.column(k).into_owned();
            if active
                .iter()
                .zip(d.iter())
                .map(|(&i, di)| w[i] * signs[i] * di)
                .sum::<f64>()
                > 0.0
            {
                d = -d;
            }
            let (pos, alpha) = active
                .iter()
                .zip(d.iter())
                .enumerate()
                .filter(|(_, (&i, di))| signs[i] * *di < 0.0)
                .map(|(p, (&i, di))| (p, (v[i] / di).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            for (&i, di) in active.iter().zip(d.iter()) {
                v[i] += alpha * di;
            }
            drop(&mut v, &mut signs, active[pos]);
        }
        let active: Vec<usize> = (0..n).filter(|&i| signs[i] != 0.0).collect();
        if !active.is_empty() {
            let bs = b.select_columns(&active);
            let rhs = bs.transpose() * t
                - DVector::from_iterator(
                    active.len(),
                    active.iter().map(|&i| 0.5 * lambda * w[i] * signs[i]),
                );
            let u = (bs.transpose() * &bs).cholesky()?.solve(&rhs);
            let blocking = active
                .iter()
                .zip(u.iter())
                .filter(|(&i, ui)| signs[i] * *ui <= 0.0)
                .map(|(&i, ui)| (i, v[i] / (v[i] - ui)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match blocking {
                Some((j, alpha)) => {
                    for (&i, ui) in active.iter().zip(u.iter()) {
                        v[i] += alpha * (ui - v[i]);
                    }
                    drop(&mut v, &mut signs, j);
                    continue;
                }
                None => {
                    for (&i, ui) in active.iter().zip(u.iter()) {
                        v[i] = *ui;
                    }
                }
            }
        }
        let g = b.transpose() * (b * &v - t) * 2.0;
        let worst = (0..n)
            .filter(|&i| signs[i] == 0.0)
            .map(|i| (i, g[i].abs() - lambda * w[i]))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((i, excess)) if excess > tol => signs[i] = -g[i].signum(),
            _ => return Some(v),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_space::FeatureSpace;
    use crate::kernel::{FeatureMap, FeatureRule};

    /// Two grid deltas: a single sample sees a single feature.
    fn delta_pair() -> RkbsPair {
        let map = |spec| {
            FeatureMap::new(
                FeatureSpace::counting(2, spec).unwrap(),
                FeatureRule::Delta {
                    grid: vec![0.0, 1.0],
                },
            )
            .unwrap()
        };
        RkbsPair::new(map(NormSpec::Sup), map(NormSpec::P(1.0))).unwrap()
    }

    #[test]
    fn scalar_soft_threshold() {
        // min (v − t)² + λ|v| → v = sgn(t) max(|t| − λ/2, 0)
        let pair = delta_pair();
        for (t, lambda, expected) in [(3.0, 1.0, 2.5), (-3.0, 2.0, -2.0), (0.4, 1.0, 0.0)] {
            let s = SampleSet::new(vec![1.0], vec![t]).unwrap();
            let r = l1_regnet(&pair, &s, lambda, 1e-12).unwrap();
            assert!(
                (r.coef[1] - expected).abs() < 1e-12,
                "{t} {lambda}: {:?}",
                r.coef
            );
            assert_eq!(r.coef[0], 0.0);
            assert!(r.converged);
        }
    }

    #[test]
    fn zero_threshold() {
        let pair = RkbsPair::hat_delta(21).unwrap();
        let s = SampleSet::new(vec![0.1, 0.5, 0.8], vec![1.0, -0.5, 2.0]).unwrap();
        let rows = feature_rows(&pair, &s).unwrap();
        let aty = (0..21)
            .map(|i| {
                rows.iter()
                    .zip(s.targets())
                    .map(|(a, t)| a[i] * t)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        let r = l1_regnet(&pair, &s, 2.0 * aty, 1e-10).unwrap();
        assert_eq!(r.support_size, 0);
        let r = l1_regnet(&pair, &s, 0.9 * 2.0 * aty, 1e-10).unwrap();
        assert!(r.support_size > 0);
    }

    #[test]
    fn rejects_smooth_spec() {
        let pair = RkbsPair::gaussian_rkhs(10, 1.0).unwrap();
        let s = SampleSet::new(vec![0.1], vec![1.0]).unwrap();
        assert!(l1_regnet(&pair, &s, 1.0, 1e-8).is_err());
    }
}
