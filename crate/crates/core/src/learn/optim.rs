//! Quasi-Newton descent and damped Newton root finding.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::numeric::max_abs;

pub(crate) const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS on the inverse Hessian with Armijo backtracking.
///
/// `h0` seeds the inverse Hessian; otherwise the identity is rescaled after
/// the first accepted step. Stops at `‖∇f‖∞ ≤ grad_tol`, or when no Armijo
/// step exists even from a reset metric.
pub(crate) fn bfgs<F>(
    mut f: F,
    x0: &[f64],
    h0: Option<DMatrix<f64>>,
    grad_tol: f64,
    max_iter: usize,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g) = f(x.as_slice())?;
    let mut g = DVector::from_vec(g);
    let seeded = h0.is_some();
    let mut h = h0.unwrap_or_else(|| DMatrix::identity(n, n));
    let mut scaled = seeded;
    let mut iterations = 0;
    let mut reset = false;

    while iterations < max_iter {
        if g.amax() <= grad_tol {
            break;
        }
        iterations += 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope.is_nan() || slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = -g.norm_squared();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + step * &d;
            match f(trial.as_slice()) {
                Ok((ft, gt)) if ft.is_finite() && ft <= fx + 1e-4 * step * slope => {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        let Some((xn, fxn, gn)) = accepted else {
            if reset {
                break;
            }
            // restart from steepest descent once before giving up
            reset = true;
            h = DMatrix::identity(n, n) * (1.0 / g.amax().max(1e-300));
            continue;
        };
        reset = false;
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 && sy.is_finite() {
            if !scaled {
                h *= sy / y.norm_squared();
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            h += ((1.0 + rho * yhy) * rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        let stalled = (fx - fxn).abs() <= 1e-16 * fx.abs().max(1e-300)
            && s.amax() <= 1e-16 * x.amax().max(1.0);
        x = xn;
        fx = fxn;
        g = gn;
        if stalled {
            break;
        }
    }
    let grad_inf = g.amax();
    Ok(Minimum {
        x: x.as_slice().to_vec(),
        value: fx,
        grad_inf,
        iterations,
        converged: grad_inf <= grad_tol,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct Root {
    pub x: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Forward-difference Jacobian with step `1e-7·(1 + |x_k|)`.
pub(crate) fn fd_jacobian<F>(f: &mut F, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let m = fx.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for k in 0..n {
        let h = 1e-7 * (1.0 + x[k].abs());
        xp[k] = x[k] + h;
        let fp = f(&xp)?;
        let h = xp[k] - x[k];
        for i in 0..m {
            jac[(i, k)] = (fp[i] - fx[i]) / h;
        }
        xp[k] = x[k];
    }
    Ok(jac)
}

fn newton_direction(jac: &DMatrix<f64>, r: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(r);
    if let Some(d) = jac.clone().lu().solve(&rhs) {
        if d.iter().all(|x| x.is_finite()) {
            return Some(d);
        }
    }
    let svd = jac.clone().svd(true, true);
    let eps = svd.singular_values.max() * 1e-14;
    svd.solve(&rhs, eps).ok()
}

/// Damped Newton for `r(x) = 0`: full step halved until `‖r‖₂` decreases.
///
/// Converged when `‖r‖∞ ≤ tol`; iterations then continue while `‖r‖₂`
/// still drops by at least half, to settle below the tolerance.
pub(crate) fn damped_newton<F>(mut r: F, x0: &[f64], tol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut rx = r(&x)?;
    let norm2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut iterations = 0;
    let mut polish = 0;
    while iterations < max_iter {
        let converged = max_abs(&rx) <= tol;
        if converged && polish >= 2 {
            break;
        }
        iterations += 1;
        let jac = fd_jacobian(&mut r, &x, &rx)?;
        let Some(d) = newton_direction(&jac, &rx) else {
            break;
        };
        let current = norm2(&rx);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
            if let Ok(rt) = r(&trial) {
                let n = norm2(&rt);
                if n.is_finite() && n < current {
                    accepted = Some((trial, rt, n));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, rn, n)) = accepted else {
            break;
        };
        let slow = n > 0.5 * current;
        x = xn;
        rx = rn;
        if max_abs(&rx) <= tol {
            polish += 1;
            if slow {
                break;
            }
        }
    }
    let residual_inf = max_abs(&rx);
    Ok(Root {
        x,
        residual_inf,
        iterations,
        converged: residual_inf <= tol,
    })
}
