//! Finite-dimensional feature spaces.
//!
//! A [`FeatureSpace`] is `R^N` with a positive weight vector (a discrete
//! measure; all ones is the counting measure) and a norm. Every continuous
//! linear functional on a space is represented by a coefficient vector through
//! the weighted [`pairing`] `⟨u, v⟩ = Σ w_j u_j v_j`, so dual spaces share the
//! weights and only change the norm (see [`NormSpec::dual`]).

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{self, bisect_root, golden_max, max_abs};
use crate::young::{conjugate_exponent, YoungPair};

/// Coefficient vectors are plain `Vec<f64>` tied to a space by length.
pub type CoefVector = Vec<f64>;

/// Gauge-norm bisection stops at this relative bracket width.
const GAUGE_REL_WIDTH: f64 = 1e-13;
/// Half-width (in natural log) of the scale sweep of the Orlicz-norm search.
const ORLICZ_LOG_RANGE: f64 = 12.0;
const ORLICZ_GRID: usize = 97;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    /// Weighted `p`-norm for `p ∈ [1, ∞]`; `p = ∞` is the sup norm.
    P(f64),
    /// `max_j |v_j|`; the finite stand-in for `c₀`.
    Sup,
    /// Gauge (Luxemburg) norm `‖·‖_Φ` of the pair's `Φ`.
    OrliczGauge(YoungPair),
    /// Orlicz norm `|·|_Ψ` of the pair's `Ψ`, the dual of `OrliczGauge(pair)`.
    OrliczDual(YoungPair),
}

impl NormSpec {
    pub fn p(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "norm exponent must lie in [1, inf]",
            });
        }
        Ok(if p.is_infinite() {
            Self::Sup
        } else {
            Self::P(p)
        })
    }

    /// Norm of the dual space under the weighted pairing.
    pub fn dual(&self) -> Self {
        match *self {
            Self::P(1.0) => Self::Sup,
            Self::P(p) => Self::P(conjugate_exponent(p)),
            Self::Sup => Self::P(1.0),
            Self::OrliczGauge(pair) => Self::OrliczDual(pair),
            Self::OrliczDual(pair) => Self::OrliczGauge(pair),
        }
    }

    /// Exponent for the p and sup specs.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Self::P(p) => Some(p),
            Self::Sup => Some(f64::INFINITY),
            _ => None,
        }
    }

    /// Strictly convex and Gâteaux differentiable specs.
    pub fn is_smooth(&self) -> bool {
        match *self {
            Self::P(p) => p > 1.0 && p.is_finite(),
            Self::OrliczGauge(_) => true,
            _ => false,
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::P(p) => write!(f, "p={p}"),
            Self::Sup => f.write_str("sup"),
            Self::OrliczGauge(pair) => write!(f, "orlicz_gauge({})", describe(pair)),
            Self::OrliczDual(pair) => write!(f, "orlicz_dual({})", describe(pair)),
        }
    }
}

fn describe(pair: &YoungPair) -> String {
    match (pair.exponent(), pair.scale()) {
        (Some(p), _) => format!("power p={p}"),
        (None, Some(k)) if k != 1.0 => format!("scaled_entropy k={k}"),
        _ => "entropy".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    weights: Vec<f64>,
    norm: NormSpec,
}

impl FeatureSpace {
    pub fn new(weights: Vec<f64>, norm: NormSpec) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("feature space weights"));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "weight",
                value: w,
                reason: "weights must be positive and finite",
            });
        }
        if let NormSpec::P(p) = norm {
            NormSpec::p(p)?;
        }
        Ok(Self { weights, norm })
    }

    /// Counting measure on `dim` points.
    pub fn counting(dim: usize, norm: NormSpec) -> Result<Self> {
        Self::new(vec![1.0; dim], norm)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.norm
    }

    /// Same weights, dual norm.
    pub fn dual(&self) -> Self {
        Self {
            weights: self.weights.clone(),
            norm: self.norm.dual(),
        }
    }

    pub fn with_norm(&self, norm: NormSpec) -> Self {
        Self {
            weights: self.weights.clone(),
            norm,
        }
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `Σ_j w_j u_j v_j`.
    pub fn pairing(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        pairing(&self.weights, u, v)
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        let w = &self.weights;
        match self.norm {
            NormSpec::P(p) => Ok(p_norm(v, w, p)),
            NormSpec::Sup => Ok(max_abs(v)),
            NormSpec::OrliczGauge(pair) => gauge_norm(&pair, v, w),
            NormSpec::OrliczDual(pair) => orlicz_norm(&pair.conjugate(), v, w),
        }
    }

    /// Whether the two spaces can be paired (same dimension and weights).
    pub fn compatible(&self, other: &FeatureSpace) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if self.weights != other.weights {
            return Err(Error::WeightMismatch);
        }
        Ok(())
    }
}

/// Weighted bilinear form `Σ_j w_j u_j v_j`.
pub fn pairing(weights: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    for x in [u, v] {
        if x.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: x.len(),
            });
        }
    }
    Ok(weights
        .iter()
        .zip(u.iter().zip(v))
        .map(|(w, (a, b))| w * a * b)
        .sum())
}

/// Constant `C` with `|⟨u, v⟩| ≤ C ‖u‖₁ ‖v‖₂` for a pair of norm specs.
///
/// Supported pairs are the dual pairs (conjugate exponents, sup with ℓ¹,
/// Orlicz norm with gauge norm of the same Young pair), all with `C = 1`.
pub fn pairing_bound_constant(first: &NormSpec, second: &NormSpec) -> Result<f64> {
    let dual_exponents = |a: f64, b: f64| {
        if a.is_infinite() || b.is_infinite() {
            a.min(b) == 1.0
        } else {
            (1.0 / a + 1.0 / b - 1.0).abs() < 1e-12
        }
    };
    let ok = match (first, second) {
        (NormSpec::OrliczDual(a), NormSpec::OrliczGauge(b))
        | (NormSpec::OrliczGauge(a), NormSpec::OrliczDual(b)) => a == b,
        (a, b) => match (a.exponent(), b.exponent()) {
            (Some(p), Some(q)) => dual_exponents(p, q),
            _ => false,
        },
    };
    if ok {
        Ok(1.0)
    } else {
        Err(Error::UnsupportedNorm {
            norm: format!("{first} x {second}"),
            operation: "a pairing bound constant",
        })
    }
}

/// `(Σ w_j |v_j|^p)^{1/p}`; `p = ∞` is the sup norm.
pub fn p_norm(v: &[f64], weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return max_abs(v);
    }
    // rescale by the largest entry to avoid overflow and underflow
    let m = max_abs(v);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x.abs() / m).powf(p))
        .sum();
    if p == 1.0 {
        m * s
    } else if p == 2.0 {
        m * s.sqrt()
    } else {
        m * s.powf(1.0 / p)
    }
}

/// Gauge (Luxemburg) norm `inf{α > 0 : Σ w_j Φ(|v_j|/α) ≤ Φ(1)}`.
///
/// The level function is strictly decreasing in `α`, so the root is found by
/// bracketed bisection starting from `[1e-6, 1e6]·max|v_j|`, then polished
/// by Newton steps kept inside the final bracket.
pub fn gauge_norm(pair: &YoungPair, v: &[f64], weights: &[f64]) -> Result<f64> {
    if v.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: v.len(),
        });
    }
    let m = max_abs(v);
    if m == 0.0 {
        return Ok(0.0);
    }
    if !m.is_finite() {
        return Err(Error::Domain {
            what: "gauge norm",
            value: m,
        });
    }
    let level = pair.unit_level();
    let g = |alpha: f64| gauge_level(pair, v, weights, alpha) - level;
    let bracket = bisect_root(g, m * 1e-6, m * 1e6, 1e3, 10, GAUGE_REL_WIDTH)?;
    // Newton on the smooth level equation removes the bisection granularity
    let mut alpha = bracket.mid();
    for _ in 0..3 {
        let slope: f64 = -v
            .iter()
            .zip(weights)
            .map(|(x, w)| {
                let r = x.abs() / alpha;
                w * pair.derivative_raw(r) * r
            })
            .sum::<f64>()
            / alpha;
        if !(slope < 0.0 && slope.is_finite()) {
            break;
        }
        let next = alpha - g(alpha) / slope;
        if !next.is_finite() {
            break;
        }
        let next = next.clamp(bracket.lo, bracket.hi);
        let done = (next - alpha).abs() <= 4.0 * f64::EPSILON * alpha;
        alpha = next;
        if done {
            break;
        }
    }
    Ok(alpha)
}

/// `Σ_j w_j Φ(|v_j|/α)`; `+inf` where `Φ` overflows.
pub(crate) fn gauge_level(pair: &YoungPair, v: &[f64], weights: &[f64], alpha: f64) -> f64 {
    v.iter()
        .zip(weights)
        .map(|(x, w)| w * pair.young_raw(x.abs() / alpha))
        .sum()
}

/// Orlicz norm `|v|_Φ = sup{Σ w_j |v_j g_j| : ‖g‖_Ψ ≤ 1}`.
///
/// By the equality case of the Young inequality the supremum is attained at
/// `g ∝ φ(c|v|)` for some scale `c > 0`, normalised to the unit sphere of the
/// gauge norm of the conjugate pair. The scale is swept over
/// `log(c·max|v|) ∈ [−12, 12]` on a grid and then refined by golden section.
pub fn orlicz_norm(pair: &YoungPair, v: &[f64], weights: &[f64]) -> Result<f64> {
    if v.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: v.len(),
        });
    }
    let m = max_abs(v);
    if m == 0.0 {
        return Ok(0.0);
    }
    let conj = pair.conjugate();
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let objective = |log_c: f64| -> f64 {
        let c = log_c.exp() / m;
        let g: Vec<f64> = abs.iter().map(|x| pair.derivative_raw(c * x)).collect();
        if g.iter().any(|x| !x.is_finite()) {
            return f64::NAN;
        }
        match gauge_norm(&conj, &g, weights) {
            Ok(n) if n > 0.0 && n.is_finite() => {
                let num: f64 = abs
                    .iter()
                    .zip(&g)
                    .zip(weights)
                    .map(|((a, b), w)| w * a * b)
                    .sum();
                num / n
            }
            _ => f64::NAN,
        }
    };

    let step = 2.0 * ORLICZ_LOG_RANGE / (ORLICZ_GRID - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..ORLICZ_GRID)
        .map(|i| {
            let s = -ORLICZ_LOG_RANGE + step * i as f64;
            (s, objective(s))
        })
        .collect();
    let defined: Vec<(f64, f64)> = grid.into_iter().filter(|(_, f)| f.is_finite()).collect();
    let Some(&(best_s, best)) = defined.iter().max_by(|a, b| a.1.total_cmp(&b.1)) else {
        return Err(Error::NoConvergence {
            what: "orlicz norm search",
            detail: "objective undefined on the whole scale range".into(),
        });
    };

    // unimodality: nondecreasing up to the best grid value, nonincreasing after
    let noise = 1e-10 * best.abs();
    let best_idx = defined.iter().position(|&(s, _)| s == best_s).unwrap_or(0);
    for (i, w) in defined.windows(2).enumerate() {
        let rising = w[1].1 >= w[0].1 - noise;
        let falling = w[1].1 <= w[0].1 + noise;
        if (i < best_idx && !rising) || (i >= best_idx && !falling) {
            return Err(Error::NonUnimodal { at: w[1].0 });
        }
    }

    let lo = defined[best_idx.saturating_sub(1)].0;
    let hi = defined[(best_idx + 1).min(defined.len() - 1)].0;
    let (_, refined) = golden_max(
        |s| {
            let f = objective(s);
            if f.is_finite() {
                f
            } else {
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-9,
    );
    Ok(best.max(refined))
}

/// Numerical rank: singular values above `tol · σ_max` of the row matrix.
pub fn independence_rank(vectors: &[Vec<f64>], tol: f64) -> Result<usize> {
    let first = vectors.first().ok_or(Error::Empty("vector list"))?;
    if let Some(v) = vectors.iter().find(|v| v.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            found: v.len(),
        });
    }
    let s = numeric::singular_values(&numeric::matrix_from_rows(vectors));
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > tol * smax).count())
}
