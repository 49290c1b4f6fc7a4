//! Small numerical kernels shared by the modules: bracketed bisection,
//! golden-section search and a few dense linear-algebra wrappers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `sgn(0) = 0`.
#[inline]
pub fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclid(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Final bracket of a bisection run.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Root of a function that is positive at `lo`, nonpositive at `hi` and
/// changes sign once in between (values may be `+inf` near `lo`).
///
/// The initial bracket is widened geometrically by `factor` up to
/// `max_expand` times per side; bisection then runs until the relative
/// width drops below `rel_width` or the bracket can no longer be split.
pub(crate) fn bisect_root<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    factor: f64,
    max_expand: usize,
    rel_width: f64,
) -> Result<Bracket>
where
    F: Fn(f64) -> f64,
{
    let positive = |x: f64| f(x) > 0.0;
    let mut n = 0;
    while !positive(lo) {
        if n == max_expand {
            return Err(Error::NoConvergence {
                what: "bracket expansion",
                detail: format!("no sign change below [{lo:e}, {hi:e}]"),
            });
        }
        lo /= factor;
        n += 1;
    }
    n = 0;
    while positive(hi) {
        if n == max_expand {
            return Err(Error::NoConvergence {
                what: "bracket expansion",
                detail: format!("no sign change above [{lo:e}, {hi:e}]"),
            });
        }
        hi *= factor;
        n += 1;
    }
    for _ in 0..400 {
        if hi - lo <= rel_width * hi {
            break;
        }
        // geometric midpoint while the bracket spans decades
        let mid = if hi > 4.0 * lo && lo > 0.0 {
            lo.sqrt() * hi.sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket { lo, hi })
}

/// Golden-section maximisation on `[a, b]`; returns `(argmax, max)`.
pub(crate) fn golden_max<F>(f: F, mut a: f64, mut b: f64, width: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Row-major `rows x cols` matrix built from equal-length rows.
pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Solve a square system by LU with partial pivoting.
pub(crate) fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(b);
    a.clone()
        .lu()
        .solve(&rhs)
        .map(|x| x.iter().copied().collect())
}

/// Euclidean projection of `g` onto the span of `rows` (least squares via SVD).
pub(crate) fn project_onto_span(rows: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    // columns of `basis` span the subspace
    let basis = matrix_from_rows(rows).transpose();
    let rhs = DVector::from_column_slice(g);
    let svd = basis.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * (rows.len().max(g.len()) as f64);
    match svd.solve(&rhs, eps) {
        Ok(coef) => (&basis * coef).iter().copied().collect(),
        Err(_) => vec![0.0; g.len()],
    }
}

/// Largest eigenvalue of `AᵀA` by power iteration.
pub(crate) fn power_iteration_gram(a: &DMatrix<f64>, max_iter: usize, tol: f64) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = a.transpose() * (a * &x);
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / norm;
        if (next - lambda).abs() <= tol * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotient of the final iterate
    let y = a.transpose() * (a * &x);
    lambda.max(x.dot(&y))
}
