//! Semi-inner products, duality maps and Gâteaux derivatives of norms.
//!
//! For a gauge norm `‖·‖_Φ` with rate `φ = Φ'`, the semi-inner product is
//!
//! ```text
//! [f, g] = α² Σ w f sgn(g) φ(|g|/α) / Σ w |g| φ(|g|/α),   α = ‖g‖_Φ,
//! ```
//!
//! and the duality map is `J(f) = α² sgn(f) φ(|f|/α) / Σ w |f| φ(|f|/α)`
//! with `α = ‖f‖_Φ`, so that `[h, f] = ⟨h, J(f)⟩`. The weighted `p`-norm is
//! the power case `φ(t) = t^{p−1}`. The Gâteaux derivative of the norm is
//! `G(f) = J(f)/‖f‖`.

use crate::error::{Error, Result};
use crate::feature_space::{gauge_level, gauge_norm, p_norm, pairing, FeatureSpace, NormSpec};
use crate::numeric::{bisect_root, max_abs, sgn};
use crate::young::YoungPair;

/// A semi-inner product value with the normalising scale used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipValue {
    pub value: f64,
    /// Gauge norm of the second argument, or 1 for sphere evaluation.
    pub alpha_used: f64,
}

/// The rate function that enters the s.i.p. for a space, if it has one.
enum Rate {
    Power(f64),
    Young(YoungPair),
}

impl Rate {
    fn of(space: &FeatureSpace, operation: &'static str, allow_l1: bool) -> Result<Self> {
        match space.norm_spec() {
            NormSpec::P(p) if p > 1.0 || allow_l1 => Ok(Self::Power(p)),
            NormSpec::OrliczGauge(pair) => Ok(Self::Young(pair)),
            spec => Err(Error::UnsupportedNorm {
                norm: spec.to_string(),
                operation,
            }),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Power(p) if *p == 1.0 => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Power(p) => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(p - 1.0)
                }
            }
            Self::Young(pair) => pair.derivative_raw(t),
        }
    }

    fn norm(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        match self {
            Self::Power(p) => Ok(p_norm(v, w, *p)),
            Self::Young(pair) => gauge_norm(pair, v, w),
        }
    }
}

/// Semi-inner product `[f, g]` of a p-norm (`1 ≤ p < ∞`) or gauge-norm space.
pub fn sip(space: &FeatureSpace, f: &[f64], g: &[f64]) -> Result<SipValue> {
    space.check(f)?;
    space.check(g)?;
    let rate = Rate::of(space, "a semi-inner product", true)?;
    let w = space.weights();
    let alpha = rate.norm(g, w)?;
    if alpha == 0.0 {
        return Err(Error::Domain {
            what: "semi-inner product second argument (zero vector)",
            value: 0.0,
        });
    }
    Ok(SipValue {
        value: alpha * alpha * sip_ratio(&rate, f, g, w, alpha),
        alpha_used: alpha,
    })
}

fn sip_ratio(rate: &Rate, f: &[f64], g: &[f64], w: &[f64], alpha: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((fi, gi), wi) in f.iter().zip(g).zip(w) {
        let r = rate.eval(gi.abs() / alpha);
        num += wi * fi * sgn(*gi) * r;
        den += wi * gi.abs() * r;
    }
    num / den
}

/// Duality map `J(f)`, the functional with `⟨f, J(f)⟩ = ‖f‖²` and dual norm `‖f‖`.
///
/// Defined for `p ∈ (1, ∞)` and gauge norms; `J(0) = 0`.
pub fn duality_map(space: &FeatureSpace, f: &[f64]) -> Result<Vec<f64>> {
    space.check(f)?;
    let rate = Rate::of(space, "a duality map", false)?;
    let w = space.weights();
    let alpha = rate.norm(f, w)?;
    if alpha == 0.0 {
        return Ok(vec![0.0; f.len()]);
    }
    if let Rate::Power(p) = rate {
        // sgn(f)|f|^{p−1} / ‖f‖^{p−2}, written on f/‖f‖ for range safety
        return Ok(f
            .iter()
            .map(|x| alpha * sgn(*x) * (x.abs() / alpha).powf(p - 1.0))
            .collect());
    }
    let rates: Vec<f64> = f.iter().map(|x| rate.eval(x.abs() / alpha)).collect();
    let den: f64 = f
        .iter()
        .zip(&rates)
        .zip(w)
        .map(|((x, r), wi)| wi * x.abs() * r)
        .sum();
    Ok(f.iter()
        .zip(&rates)
        .map(|(x, r)| alpha * alpha * sgn(*x) * r / den)
        .collect())
}

/// Inverse of the duality map: the `f` in `space` with `J(f) = j`.
///
/// For `p`-norms this is the duality map of the conjugate exponent. For a
/// gauge norm, `f = α·sgn(j)·ψ(s|j|)` where `s` puts `ψ(s|j|)` on the unit
/// sphere and `α = Σ w |j| ψ(s|j|)`.
pub fn inverse_duality_map(space: &FeatureSpace, j: &[f64]) -> Result<Vec<f64>> {
    space.check(j)?;
    let rate = Rate::of(space, "an inverse duality map", false)?;
    let w = space.weights();
    let m = max_abs(j);
    if m == 0.0 {
        return Ok(vec![0.0; j.len()]);
    }
    match rate {
        Rate::Power(p) => {
            let q = p / (p - 1.0);
            let n = p_norm(j, w, q);
            Ok(j.iter()
                .map(|x| n * sgn(*x) * (x.abs() / n).powf(q - 1.0))
                .collect())
        }
        Rate::Young(pair) => {
            let level = pair.unit_level();
            let profile = |s: f64| -> Vec<f64> {
                j.iter()
                    .map(|x| pair.inverse_derivative_raw(s * x.abs() / m))
                    .collect()
            };
            // Σ w Φ(ψ(s|j|)) increases with s
            let h = |s: f64| level - gauge_level(&pair, &profile(s), w, 1.0);
            let bracket = bisect_root(h, 1e-6, 1e6, 1e3, 10, 1e-15)?;
            let prof = profile(bracket.mid());
            let alpha: f64 = j
                .iter()
                .zip(&prof)
                .zip(w)
                .map(|((x, r), wi)| wi * x.abs() * r)
                .sum();
            Ok(j.iter()
                .zip(&prof)
                .map(|(x, r)| alpha * sgn(*x) * r)
                .collect())
        }
    }
}

/// Norm of `j` in the dual space of `space`.
pub fn dual_norm(space: &FeatureSpace, j: &[f64]) -> Result<f64> {
    space.dual().norm(j)
}

/// Gâteaux derivative `G(f) = J(f)/‖f‖` of the norm, with `G(0) = 0`.
pub fn gateaux_derivative(space: &FeatureSpace, f: &[f64]) -> Result<Vec<f64>> {
    let j = duality_map(space, f)?;
    let n = space.norm(f)?;
    if n == 0.0 {
        return Ok(j);
    }
    Ok(j.into_iter().map(|x| x / n).collect())
}

/// Central difference `(‖f + εh‖ − ‖f − εh‖) / 2ε`.
pub fn gateaux_fd(space: &FeatureSpace, f: &[f64], h: &[f64], eps: f64) -> Result<f64> {
    space.check(h)?;
    let plus: Vec<f64> = f.iter().zip(h).map(|(a, b)| a + eps * b).collect();
    let minus: Vec<f64> = f.iter().zip(h).map(|(a, b)| a - eps * b).collect();
    Ok((space.norm(&plus)? - space.norm(&minus)?) / (2.0 * eps))
}

/// Directional derivative predicted by `G`: `⟨h, G(f)⟩`.
pub fn gateaux_directional(space: &FeatureSpace, f: &[f64], h: &[f64]) -> Result<f64> {
    let g = gateaux_derivative(space, f)?;
    pairing(space.weights(), h, &g)
}

/// The `Φ_k` semi-inner product on the unit sphere (`α = 1`), counting measure:
/// `Σ x sgn(y) log(1+k|y|) / Σ |y| log(1+k|y|)`.
pub fn sip_sphere(x: &[f64], y: &[f64], k: f64) -> Result<SipValue> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: x.len(),
        });
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "scale must be positive",
        });
    }
    if max_abs(y) == 0.0 {
        return Err(Error::Domain {
            what: "sphere semi-inner product second argument (zero vector)",
            value: 0.0,
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let l = (k * yi.abs()).ln_1p();
        num += xi * sgn(*yi) * l;
        den += yi.abs() * l;
    }
    Ok(SipValue {
        value: num / den,
        alpha_used: 1.0,
    })
}

/// Sphere scan over a list of scales with the two limiting values.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereScan {
    /// `(k, S_k(x, y))` in the order given.
    pub rows: Vec<(f64, f64)>,
    /// `Σ x y / Σ y²`, the `k → 0` limit.
    pub l2: f64,
    /// `Σ x sgn(y) / Σ |y|`, the `k → ∞` limit.
    pub l1: f64,
}

impl SphereScan {
    /// Every value lies between the two limits (inclusive, with slack).
    pub fn within_limits(&self, slack: f64) -> bool {
        let (lo, hi) = (self.l1.min(self.l2), self.l1.max(self.l2));
        self.rows
            .iter()
            .all(|&(_, s)| s.is_finite() && s >= lo - slack && s <= hi + slack)
    }

    /// Values move monotonically from the ℓ² limit toward the ℓ¹ limit as `k` grows.
    pub fn monotone_in_k(&self, slack: f64) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dir = sgn(self.l1 - self.l2);
        rows.windows(2).all(|w| dir * (w[1].1 - w[0].1) >= -slack)
    }
}

pub fn sip_sphere_scan(x: &[f64], y: &[f64], k_list: &[f64]) -> Result<SphereScan> {
    if k_list.is_empty() {
        return Err(Error::Empty("k list"));
    }
    let rows = k_list
        .iter()
        .map(|&k| sip_sphere(x, y, k).map(|s| (k, s.value)))
        .collect::<Result<Vec<_>>>()?;
    let l2 =
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / y.iter().map(|b| b * b).sum::<f64>();
    let l1 = x.iter().zip(y).map(|(a, b)| a * sgn(*b)).sum::<f64>()
        / y.iter().map(|b| b.abs()).sum::<f64>();
    Ok(SphereScan { rows, l2, l1 })
}
