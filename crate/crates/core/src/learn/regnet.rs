//! Regularization networks `min_v L_t(f_v(x)) + λ φ(‖v‖_{W₂})`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{bfgs, damped_newton, fd_jacobian};
use super::{
    combine, feature_rows, independent_subset, max_residual, representer_residual,
    representer_vector, require_smooth, sample_values, square_loss, support_size, SampleSet,
    SolveReport,
};
use crate::duality::gateaux_derivative;
use crate::error::{Error, Result};
use crate::feature_space::{independence_rank, pairing};
use crate::numeric::{dot, max_abs, solve};
use crate::rkbs::{RkbsPair, RANK_TOL};

const SEEDS: u64 = 3;
const BFGS_MAX_ITER: usize = 500;
const POLISH_MAX_ITER: usize = 60;
const FULL_SPACE_MAX_ITER: usize = 5000;

/// Data-fit term `L_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `Σ_j (y_j − t_j)²`
    Square,
}

impl Loss {
    pub fn value(&self, y: &[f64], t: &[f64]) -> f64 {
        match self {
            Self::Square => square_loss(y, t),
        }
    }

    /// `∂L_t/∂y_j`.
    pub fn gradient(&self, y: &[f64], t: &[f64]) -> Vec<f64> {
        match self {
            Self::Square => y.iter().zip(t).map(|(a, b)| 2.0 * (a - b)).collect(),
        }
    }
}

/// The increasing convex `φ` applied to the norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `φ(s) = s`
    Identity,
    /// `φ(s) = s²`
    Square,
}

impl Regularizer {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Self::Identity => s,
            Self::Square => s * s,
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Square => 2.0 * s,
        }
    }
}

/// Solves the regularization network over representer coordinates.
///
/// `E(c) = L_t(F(c)) + λ φ(‖v(c)‖)` is minimised by BFGS with backtracking
/// from three seeded starts, then the stationarity system
/// `R(c) = ∇L_t(F(c)) + λ φ'(‖v‖)/‖v‖ · c = 0` is polished by damped Newton.
/// If that fails the certificate, BFGS over all of `W₂` takes over. The
/// reported stationarity is the sup norm of the gradient of the objective
/// over all of `W₂`, evaluated directly at `v`.
pub fn regnet(
    pair: &RkbsPair,
    samples: &SampleSet,
    lambda: f64,
    loss: Loss,
    reg: Regularizer,
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
    require_smooth(pair, "a regularization network")?;
    let rows = feature_rows(pair, samples)?;
    let m = rows.len();
    let t = samples.targets();
    let rank = independence_rank(&rows, RANK_TOL)?;
    let (active, rank_deficient) = if rank < m {
        (independent_subset(&rows, RANK_TOL)?, true)
    } else {
        ((0..m).collect::<Vec<_>>(), false)
    };
    let sub_rows: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].clone()).collect();

    // v = 0 is optimal iff the loss gradient at 0 lies in λ ∂φ(‖·‖)(0)
    let grad0 = combine(&rows, &loss.gradient(&vec![0.0; m], t));
    let zero_optimal = match reg {
        Regularizer::Identity => pair.space1().norm(&grad0)? <= lambda,
        Regularizer::Square => max_abs(&grad0) == 0.0,
    };
    if zero_optimal {
        let v = vec![0.0; pair.dim()];
        return finish(
            pair,
            samples,
            &rows,
            v,
            vec![0.0; m],
            lambda,
            loss,
            reg,
            0,
            tol,
            rank_deficient,
        );
    }

    let problem = Problem {
        pair,
        rows: &sub_rows,
        t,
        lambda,
        loss,
        reg,
        all_rows: &rows,
        active: &active,
    };
    let base = problem.start()?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut solutions: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    for seed in 0..SEEDS {
        let c0: Vec<f64> = if seed == 0 {
            base.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<f64> = base
                .iter()
                .map(|x| x * (1.0 + 0.5 * rng.random_range(-1.0..1.0)))
                .collect();
            problem.rescale(&c)?
        };
        let (c, e, its) = problem.solve_from(&c0, tol)?;
        iterations += its;
        solutions.push(problem.vector(&c)?);
        if best.as_ref().is_none_or(|(_, be)| e < *be) {
            best = Some((c, e));
        }
    }
    let (c_sub, _) = best.expect("at least one seed");
    let v = problem.vector(&c_sub)?;
    let spread = solutions
        .iter()
        .map(|s| {
            s.iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    if spread > 1e-6 {
        log::warn!("regularization network starts disagree by {spread:e}");
    }
    let scatter = |c_sub: &[f64]| {
        let mut c = vec![0.0; m];
        for (k, &i) in active.iter().enumerate() {
            c[i] = c_sub[k];
        }
        c
    };
    let report = finish(
        pair,
        samples,
        &rows,
        v.clone(),
        scatter(&c_sub),
        lambda,
        loss,
        reg,
        iterations,
        tol,
        rank_deficient,
    )?;
    if report.converged {
        return Ok(report);
    }
    log::debug!(
        "representer descent stalled at {:e}; descending in W2",
        report.stationarity
    );
    let (c_alt, its) = problem.full_space_from(&v, tol)?;
    let alt = finish(
        pair,
        samples,
        &rows,
        problem.vector(&c_alt)?,
        scatter(&c_alt),
        lambda,
        loss,
        reg,
        iterations + its,
        tol,
        rank_deficient,
    )?;
    Ok(if alt.stationarity < report.stationarity {
        alt
    } else {
        report
    })
}

/// `regnet` along a list of regularization weights.
pub fn regnet_path(
    pair: &RkbsPair,
    samples: &SampleSet,
    lambdas: &[f64],
    loss: Loss,
    reg: Regularizer,
    tol: f64,
) -> Result<Vec<SolveReport>> {
    lambdas
        .iter()
        .map(|&l| regnet(pair, samples, l, loss, reg, tol))
        .collect()
}

struct Problem<'a> {
    pair: &'a RkbsPair,
    rows: &'a [Vec<f64>],
    t: &'a [f64],
    lambda: f64,
    loss: Loss,
    reg: Regularizer,
    all_rows: &'a [Vec<f64>],
    active: &'a [usize],
}

impl Problem<'_> {
    fn vector(&self, c: &[f64]) -> Result<Vec<f64>> {
        representer_vector(self.pair, self.rows, c)
    }

    /// Values at all samples.
    fn values(&self, v: &[f64]) -> Result<Vec<f64>> {
        sample_values(self.pair, self.all_rows, v)
    }

    fn energy(&self, c: &[f64]) -> Result<f64> {
        let v = self.vector(c)?;
        let y = self.values(&v)?;
        Ok(
            self.loss.value(&y, self.t)
                + self.lambda * self.reg.value(self.pair.space2().norm(&v)?),
        )
    }

    /// `R(c)` restricted to the active samples, via the pulled-back loss gradient.
    fn stationarity_system(&self, c: &[f64]) -> Result<Vec<f64>> {
        let v = self.vector(c)?;
        let y = self.values(&v)?;
        let dl = self.loss.gradient(&y, self.t);
        let n = self.pair.space2().norm(&v)?;
        let scale = if n > 0.0 {
            self.lambda * self.reg.derivative(n) / n
        } else {
            0.0
        };
        let d = if self.active.len() == self.all_rows.len() {
            dl
        } else {
            // loss gradients of dropped samples are carried by the kept features
            self.coordinates(&combine(self.all_rows, &dl))?
        };
        Ok(d.iter().zip(c).map(|(p, ci)| p + scale * ci).collect())
    }

    /// Coefficients of `g` in the active rows; exact when `g` lies in their span.
    fn coordinates(&self, g: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.rows.iter().map(|a| dot(a, g)).collect();
        solve(&self.gram(), &rhs).ok_or(Error::RankDeficient {
            rank: 0,
            needed: self.rows.len(),
        })
    }

    fn gram(&self) -> DMatrix<f64> {
        let m = self.rows.len();
        DMatrix::from_fn(m, m, |j, k| dot(&self.rows[j], &self.rows[k]))
    }

    fn map(&self, c: &[f64]) -> Result<Vec<f64>> {
        let v = self.vector(c)?;
        sample_values(self.pair, self.rows, &v)
    }

    /// `(E(c), Mᵀ R(c))` with `M` the forward-difference Jacobian of `F`.
    fn energy_and_gradient(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        let f = self.map(c)?;
        let mut map = |x: &[f64]| self.map(x);
        let jac = fd_jacobian(&mut map, c, &f)?;
        let r = self.stationarity_system(c)?;
        let grad = jac.transpose() * nalgebra::DVector::from_column_slice(&r);
        Ok((self.energy(c)?, grad.as_slice().to_vec()))
    }

    /// Ridge-type start on the active rows, rescaled along its ray.
    fn start(&self) -> Result<Vec<f64>> {
        let m = self.rows.len();
        let w = self.pair.space1().weights();
        let mut g = DMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                g[(j, k)] = pairing(w, &self.rows[j], &self.rows[k])?;
            }
            g[(j, j)] += self.lambda;
        }
        let t: Vec<f64> = self.active.iter().map(|&i| self.t[i]).collect();
        let c = solve(&g, &t).unwrap_or(t);
        self.rescale(&c)
    }

    /// Best multiple `s·c` using `v(sc) = s v(c)`.
    fn rescale(&self, c: &[f64]) -> Result<Vec<f64>> {
        let v = self.vector(c)?;
        let y = self.values(&v)?;
        let n = self.pair.space2().norm(&v)?;
        let (yy, yt) = (dot(&y, &y), dot(&y, self.t));
        let s = match (self.loss, self.reg) {
            (Loss::Square, Regularizer::Square) => yt / (yy + self.lambda * n * n),
            (Loss::Square, Regularizer::Identity) => (2.0 * yt - self.lambda * n) / (2.0 * yy),
        };
        let s = if s.is_finite() && s > 0.0 { s } else { 1e-3 };
        Ok(c.iter().map(|x| s * x).collect())
    }

    /// Inverse of `Mᵀ(2M + λ_eff I)`, the Gauss-Newton curvature of `E`.
    fn metric(&self, c: &[f64]) -> Result<Option<DMatrix<f64>>> {
        let f = self.map(c)?;
        let mut map = |x: &[f64]| self.map(x);
        let jac = fd_jacobian(&mut map, c, &f)?;
        let v = self.vector(c)?;
        let n = self.pair.space2().norm(&v)?;
        let eff = if n > 0.0 {
            self.lambda * self.reg.derivative(n) / n
        } else {
            self.lambda
        };
        let m = c.len();
        let curv = jac.transpose() * (&jac * 2.0 + DMatrix::identity(m, m) * eff);
        let sym = (&curv + curv.transpose()) * 0.5;
        Ok(sym.try_inverse())
    }

    /// Fallback when `F` is too rough for the representer descent: BFGS on
    /// the convex objective over all of `W₂`, then `c` read off the
    /// stationarity relation `∇L_t + λ φ'(‖v‖)/‖v‖ · c = 0` and polished.
    fn full_space_from(&self, v0: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
        let space = self.pair.space2();
        let w = space.weights();
        let n = v0.len();
        let b = DMatrix::from_fn(self.all_rows.len(), n, |j, i| w[i] * self.all_rows[j][i]);
        let objective = |v: &[f64]| -> Result<(f64, Vec<f64>)> {
            let y = self.values(v)?;
            let norm = space.norm(v)?;
            let data = combine(self.all_rows, &self.loss.gradient(&y, self.t));
            let g = gateaux_derivative(space, v)?;
            let d = self.lambda * self.reg.derivative(norm);
            let grad = data
                .iter()
                .zip(&g)
                .zip(w)
                .map(|((a, gi), wi)| wi * (a + d * gi))
                .collect();
            Ok((
                self.loss.value(&y, self.t) + self.lambda * self.reg.value(norm),
                grad,
            ))
        };
        let norm0 = space.norm(v0)?.max(1e-12);
        let eff = self.lambda * self.reg.derivative(norm0) / norm0;
        let h0 = (b.transpose() * &b * 2.0 + DMatrix::identity(n, n) * eff).try_inverse();
        let min = bfgs(objective, v0, h0, 1e-3 * tol, FULL_SPACE_MAX_ITER)?;
        let v = min.x;
        let norm = space.norm(&v)?;
        if norm == 0.0 {
            return Ok((vec![0.0; self.rows.len()], min.iterations));
        }
        let y = self.values(&v)?;
        let dl = combine(self.all_rows, &self.loss.gradient(&y, self.t));
        let scale = -norm / (self.lambda * self.reg.derivative(norm));
        let c: Vec<f64> = self.coordinates(&dl)?.iter().map(|x| scale * x).collect();
        let root = damped_newton(
            |x| self.stationarity_system(x),
            &c,
            1e-3 * tol,
            POLISH_MAX_ITER,
        )?;
        let c = if self.energy(&root.x)? <= self.energy(&c)? {
            root.x
        } else {
            c
        };
        Ok((c, min.iterations + root.iterations))
    }

    fn solve_from(&self, c0: &[f64], tol: f64) -> Result<(Vec<f64>, f64, usize)> {
        let h0 = self.metric(c0)?;
        let min = bfgs(
            |c| self.energy_and_gradient(c),
            c0,
            h0,
            1e-3 * tol,
            BFGS_MAX_ITER,
        )?;
        let mut c = min.x;
        let mut e = min.value;
        let mut iterations = min.iterations;
        let root = damped_newton(
            |x| self.stationarity_system(x),
            &c,
            1e-3 * tol,
            POLISH_MAX_ITER,
        )?;
        iterations += root.iterations;
        if let Ok(ep) = self.energy(&root.x) {
            if ep <= e + 1e-12 * e.abs().max(1e-300) {
                c = root.x;
                e = ep;
            }
        }
        Ok((c, e, iterations))
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    pair: &RkbsPair,
    samples: &SampleSet,
    rows: &[Vec<f64>],
    v: Vec<f64>,
    c: Vec<f64>,
    lambda: f64,
    loss: Loss,
    reg: Regularizer,
    iterations: usize,
    tol: f64,
    rank_deficient: bool,
) -> Result<SolveReport> {
    let t = samples.targets();
    let space = pair.space2();
    let w = space.weights();
    let y = sample_values(pair, rows, &v)?;
    let norm = space.norm(&v)?;
    let objective = loss.value(&y, t) + lambda * reg.value(norm);
    let stationarity = if norm == 0.0 {
        // subgradient condition: distance of the loss gradient from the λ-ball
        let g = combine(rows, &loss.gradient(&y, t));
        match reg {
            Regularizer::Identity => (pair.space1().norm(&g)? - lambda).max(0.0),
            Regularizer::Square => max_abs(&g),
        }
    } else {
        let dl = loss.gradient(&y, t);
        let data = combine(rows, &dl);
        let g = gateaux_derivative(space, &v)?;
        let d = lambda * reg.derivative(norm);
        data.iter()
            .zip(&g)
            .zip(w)
            .map(|((a, b), wi)| (wi * (a + d * b)).abs())
            .fold(0.0, f64::max)
    };
    Ok(SolveReport {
        representer_residual: representer_residual(pair, &v, samples)?,
        constraint_residual: max_residual(&y, t),
        support_size: support_size(&v),
        coef: v,
        representer_coeffs: c,
        objective,
        norm,
        stationarity,
        iterations,
        converged: stationarity <= tol,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_validation() {
        let pair = RkbsPair::gaussian_rkhs(10, 1.0).unwrap();
        let s = SampleSet::new(vec![0.1], vec![1.0]).unwrap();
        assert!(regnet(&pair, &s, 0.0, Loss::Square, Regularizer::Square, 1e-8).is_err());
        assert!(regnet(&pair, &s, -1.0, Loss::Square, Regularizer::Square, 1e-8).is_err());
    }

    #[test]
    fn identity_regularizer_zero_threshold() {
        let pair = RkbsPair::gaussian_p(3.0, 20, 1.0).unwrap();
        let s = SampleSet::new(vec![-0.3, 0.4], vec![0.5, -0.2]).unwrap();
        let rows = feature_rows(&pair, &s).unwrap();
        let g = combine(&rows, &[1.0, -0.4]);
        let threshold = pair.space1().norm(&g).unwrap();
        let above = regnet(
            &pair,
            &s,
            threshold * 1.01,
            Loss::Square,
            Regularizer::Identity,
            1e-9,
        )
        .unwrap();
        assert_eq!(above.norm, 0.0);
        assert!(above.converged);
        let below = regnet(
            &pair,
            &s,
            threshold * 0.5,
            Loss::Square,
            Regularizer::Identity,
            1e-9,
        )
        .unwrap();
        assert!(below.norm > 0.0);
        assert!(below.converged, "{}", below.stationarity);
    }

    #[test]
    fn single_sample_ridge_closed_form() {
        let pair = RkbsPair::gaussian_rkhs(30, 1.0).unwrap();
        let s = SampleSet::new(vec![0.2], vec![2.0]).unwrap();
        let lambda = 0.3;
        let r = regnet(&pair, &s, lambda, Loss::Square, Regularizer::Square, 1e-10).unwrap();
        let k = pair.kernel(0.2, 0.2).unwrap();
        assert!((r.representer_coeffs[0] - 2.0 / (k + lambda)).abs() < 1e-9);
    }
}
