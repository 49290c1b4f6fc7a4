//! Conjugated Young function pairs.
//!
//! A pair is generated by a strictly increasing rate function `φ` with
//! `φ(0) = 0` and its inverse `ψ`; the Young functions are the integrals
//! `Φ(t) = ∫₀ᵗ φ` and `Ψ(t) = ∫₀ᵗ ψ`. Three families are built in:
//!
//! * power: `Φ(t) = t^p/p`, `Ψ(t) = t^q/q` with `1/p + 1/q = 1`,
//! * entropy: `Φ(t) = (1+t)log(1+t) − t`, `Ψ(t) = e^t − t − 1`,
//! * scaled entropy: `Φ_k(t) = Φ(kt)` with conjugate `Ψ_k(s) = Ψ(s/k)`.
//!
//! Every pair can be [conjugated](YoungPair::conjugate), which swaps the
//! roles of `(φ, Φ)` and `(ψ, Ψ)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Inputs below zero by at most this much are treated as round-off and clamped.
pub const NEGATIVE_CLAMP: f64 = 1e-14;

/// Largest argument for which `e^t` is finite.
const EXP_LIMIT: f64 = 709.782_712_893_384;

/// Below this argument the entropy Young functions use their power series.
const SERIES_CUTOFF: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YoungKind {
    Power,
    Entropy,
    ScaledEntropy,
}

impl FromStr for YoungKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "power" => Ok(Self::Power),
            "entropy" => Ok(Self::Entropy),
            "scaled_entropy" | "scaled" => Ok(Self::ScaledEntropy),
            other => Err(Error::UnknownKind {
                what: "young kind",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for YoungKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Power => "power",
            Self::Entropy => "entropy",
            Self::ScaledEntropy => "scaled_entropy",
        })
    }
}

/// Optional parameters for [`make_pair`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct YoungParams {
    /// Exponent of the power family.
    pub p: Option<f64>,
    /// Scale of the scaled-entropy family.
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    Power { p: f64, q: f64 },
    Entropy { k: f64 },
}

/// A conjugated nice Young pair `(φ, ψ, Φ, Ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungPair {
    kind: YoungKind,
    family: Family,
    conjugated: bool,
}

/// Build a pair of the given kind.
pub fn make_pair(kind: YoungKind, params: YoungParams) -> Result<YoungPair> {
    match kind {
        YoungKind::Power => {
            let p = params.p.ok_or(Error::InvalidParameter {
                name: "p",
                value: f64::NAN,
                reason: "power pair needs an exponent",
            })?;
            YoungPair::power(p)
        }
        YoungKind::Entropy => Ok(YoungPair::entropy()),
        YoungKind::ScaledEntropy => {
            let k = params.k.ok_or(Error::InvalidParameter {
                name: "k",
                value: f64::NAN,
                reason: "scaled entropy pair needs a scale",
            })?;
            YoungPair::scaled_entropy(k)
        }
    }
}

impl YoungPair {
    /// `Φ(t) = t^p/p` for `p ∈ (1, ∞)`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "exponent must lie in (1, inf)",
            });
        }
        Ok(Self {
            kind: YoungKind::Power,
            family: Family::Power {
                p,
                q: conjugate_exponent(p),
            },
            conjugated: false,
        })
    }

    /// `Φ(t) = (1+t)log(1+t) − t`, `Ψ(t) = e^t − t − 1`.
    pub fn entropy() -> Self {
        Self {
            kind: YoungKind::Entropy,
            family: Family::Entropy { k: 1.0 },
            conjugated: false,
        }
    }

    /// `Φ_k(t) = Φ(kt)` for `k > 0`.
    pub fn scaled_entropy(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "scale must be positive",
            });
        }
        Ok(Self {
            kind: YoungKind::ScaledEntropy,
            family: Family::Entropy { k },
            conjugated: false,
        })
    }

    pub fn kind(&self) -> YoungKind {
        self.kind
    }

    /// Power exponent `p` of `Φ` (after any conjugation).
    pub fn exponent(&self) -> Option<f64> {
        match self.family {
            Family::Power { p, q } => Some(if self.conjugated { q } else { p }),
            Family::Entropy { .. } => None,
        }
    }

    pub fn scale(&self) -> Option<f64> {
        match self.family {
            Family::Entropy { k } => Some(k),
            Family::Power { .. } => None,
        }
    }

    pub fn is_conjugated(&self) -> bool {
        self.conjugated
    }

    /// The complementary pair `(ψ, φ, Ψ, Φ)`.
    pub fn conjugate(&self) -> Self {
        match self.family {
            // the power family is closed under conjugation
            Family::Power { p, q } => Self {
                family: Family::Power { p: q, q: p },
                ..*self
            },
            Family::Entropy { .. } => Self {
                conjugated: !self.conjugated,
                ..*self
            },
        }
    }

    /// `φ(t)`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        let t = clamp_arg(t, "phi")?;
        finite(self.derivative_raw(t), "phi", t)
    }

    /// `ψ(t) = φ⁻¹(t)`; fails with [`Error::Overflow`] where `e^t` overflows.
    pub fn inverse_derivative(&self, t: f64) -> Result<f64> {
        let t = clamp_arg(t, "psi")?;
        finite(self.inverse_derivative_raw(t), "psi", t)
    }

    /// `Φ(t)`.
    pub fn young(&self, t: f64) -> Result<f64> {
        let t = clamp_arg(t, "Phi")?;
        finite(self.young_raw(t), "Phi", t)
    }

    /// `Ψ(t)`; fails with [`Error::Overflow`] where `e^t` overflows.
    pub fn complementary(&self, t: f64) -> Result<f64> {
        let t = clamp_arg(t, "Psi")?;
        finite(self.complementary_raw(t), "Psi", t)
    }

    /// `φ` on `t ≥ 0`; may return `+inf`.
    pub(crate) fn derivative_raw(&self, t: f64) -> f64 {
        match (self.family, self.conjugated) {
            (Family::Power { p, .. }, _) => power_rate(t, p),
            (Family::Entropy { k }, false) => entropy_rate(t, k),
            (Family::Entropy { k }, true) => entropy_inverse_rate(t, k),
        }
    }

    pub(crate) fn inverse_derivative_raw(&self, t: f64) -> f64 {
        match (self.family, self.conjugated) {
            (Family::Power { q, .. }, _) => power_rate(t, q),
            (Family::Entropy { k }, false) => entropy_inverse_rate(t, k),
            (Family::Entropy { k }, true) => entropy_rate(t, k),
        }
    }

    pub(crate) fn young_raw(&self, t: f64) -> f64 {
        match (self.family, self.conjugated) {
            (Family::Power { p, .. }, _) => t.powf(p) / p,
            (Family::Entropy { k }, false) => entropy_young(k * t),
            (Family::Entropy { k }, true) => entropy_complementary(t / k),
        }
    }

    pub(crate) fn complementary_raw(&self, t: f64) -> f64 {
        match (self.family, self.conjugated) {
            (Family::Power { q, .. }, _) => t.powf(q) / q,
            (Family::Entropy { k }, false) => entropy_complementary(t / k),
            (Family::Entropy { k }, true) => entropy_young(k * t),
        }
    }

    /// `Φ(1)`, the level used by the gauge norm.
    pub fn unit_level(&self) -> f64 {
        self.young_raw(1.0)
    }
}

/// Gap `Φ(x) + Ψ(y) − xy` of the Young inequality; zero iff `x = ψ(y)`.
pub fn young_gap(pair: &YoungPair, x: f64, y: f64) -> Result<f64> {
    let x = clamp_arg(x, "young gap")?;
    let y = clamp_arg(y, "young gap")?;
    Ok(pair.young(x)? + pair.complementary(y)? - x * y)
}

/// `q` with `1/p + 1/q = 1`; maps 1 to infinity and back.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn clamp_arg(t: f64, what: &'static str) -> Result<f64> {
    if t >= 0.0 {
        Ok(t)
    } else if t >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Domain { what, value: t })
    }
}

fn finite(y: f64, what: &'static str, t: f64) -> Result<f64> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Overflow { what, value: t })
    }
}

fn power_rate(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powf(p - 1.0)
    }
}

// d/dt (1+kt)log(1+kt) − kt
fn entropy_rate(t: f64, k: f64) -> f64 {
    k * (k * t).ln_1p()
}

fn entropy_inverse_rate(s: f64, k: f64) -> f64 {
    let a = s / k;
    if a > EXP_LIMIT {
        f64::INFINITY
    } else {
        a.exp_m1() / k
    }
}

/// `(1+t)log(1+t) − t = Σ_{n≥2} (−1)ⁿ tⁿ / (n(n−1))`.
fn entropy_young(t: f64) -> f64 {
    if t < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut pow = t * t;
        for n in 2..40 {
            let n = n as f64;
            let term = pow / (n * (n - 1.0));
            sum += if (n as u32).is_multiple_of(2) {
                term
            } else {
                -term
            };
            if term < 1e-18 * sum.abs() {
                break;
            }
            pow *= t;
        }
        sum
    } else if t.is_infinite() {
        f64::INFINITY
    } else {
        (1.0 + t) * t.ln_1p() - t
    }
}

/// `e^t − t − 1 = Σ_{n≥2} tⁿ/n!`.
fn entropy_complementary(t: f64) -> f64 {
    if t < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut term = t * t / 2.0;
        for n in 3..40 {
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            term *= t / n as f64;
        }
        sum
    } else if t > EXP_LIMIT {
        f64::INFINITY
    } else {
        t.exp_m1() - t
    }
}
