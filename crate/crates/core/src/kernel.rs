//! Kernels and feature maps.
//!
//! Closed-form kernels are evaluated directly. Feature maps send an input
//! point to a coefficient vector in a [`FeatureSpace`]; the kernel induced
//! by a pair of maps is `K(x, y) = ⟨Φ₁(x), Φ₂(y)⟩`. Two truncated Mercer
//! expansions carry certified tail bounds:
//!
//! * Gaussian on `[−1, 1]`: `φ_n(x) = e^{−γx²} √((2γ)ⁿ/n!) xⁿ`,
//! * Brownian bridge on `[0, 1]`: `φ_n(x) = √2 sin(nπx)/(nπ)`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::feature_space::{independence_rank, FeatureSpace};
use crate::numeric::singular_values;

/// Minimum separation for points to count as distinct.
pub const DISTINCT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `exp(−γ‖x−y‖₂²)` on `R^d`.
    Gaussian { gamma: f64 },
    /// `exp(−‖x−y‖₁)` on `R^d`.
    Exponential,
    /// `min{x, y} − xy` on `[0, 1]`.
    BrownianBridge,
    /// `1 − |x−y|` on `[0, 1]`.
    Hat,
    /// `(1+y)^x` on `[0, 1]`.
    PowerBase,
    /// `e^{xy}` on `[0, 1]`.
    ExpProduct,
    /// Kernel induced by a pair of feature maps.
    Mercer(Box<(FeatureMap, FeatureMap)>),
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(Self::Gaussian { gamma: 1.0 }),
            "exponential" => Ok(Self::Exponential),
            "brownian_bridge" | "brownian" => Ok(Self::BrownianBridge),
            "hat" => Ok(Self::Hat),
            "power_base" => Ok(Self::PowerBase),
            "exp_product" => Ok(Self::ExpProduct),
            other => Err(Error::UnknownKind {
                what: "kernel",
                name: other.to_string(),
            }),
        }
    }
}

impl Kernel {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "gaussian width must be positive",
            });
        }
        Ok(Self::Gaussian { gamma })
    }

    pub fn from_features(map1: FeatureMap, map2: FeatureMap) -> Result<Self> {
        map1.space().compatible(map2.space())?;
        Ok(Self::Mercer(Box::new((map1, map2))))
    }

    /// Inputs are one-dimensional in `[0, 1]` for the interval kernels.
    pub fn unit_interval(&self) -> bool {
        matches!(
            self,
            Self::BrownianBridge | Self::Hat | Self::PowerBase | Self::ExpProduct
        )
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Self::PowerBase | Self::Mercer(_))
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Empty("kernel input"));
        }
        if let Some(bad) = x.iter().chain(y).find(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "kernel input",
                value: *bad,
            });
        }
        match self {
            Self::Gaussian { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-gamma * d2).exp())
            }
            Self::Exponential => {
                let d1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                Ok((-d1).exp())
            }
            Self::Mercer(maps) => {
                let (a, b) = (scalar(x)?, scalar(y)?);
                kernel_from_features(&maps.0, &maps.1, a, b)
            }
            _ => {
                let (a, b) = (unit(scalar(x)?)?, unit(scalar(y)?)?);
                Ok(match self {
                    Self::BrownianBridge => a.min(b) - a * b,
                    Self::Hat => 1.0 - (a - b).abs(),
                    Self::PowerBase => (1.0 + b).powf(a),
                    Self::ExpProduct => (a * b).exp(),
                    _ => unreachable!(),
                })
            }
        }
    }

    /// `eval` on scalar inputs.
    pub fn eval1(&self, x: f64, y: f64) -> Result<f64> {
        self.eval(&[x], &[y])
    }
}

fn scalar(x: &[f64]) -> Result<f64> {
    match x {
        [v] => Ok(*v),
        _ => Err(Error::DimensionMismatch {
            expected: 1,
            found: x.len(),
        }),
    }
}

fn unit(x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::Domain {
            what: "unit-interval kernel",
            value: x,
        })
    }
}

/// Profiles `t ↦ Φ₁(x)(t)` for grid-sampled feature maps into `C([0,1])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridProfile {
    /// `1 − |t − x|`
    Hat,
    /// `(1 + t)^x`
    PowerBase,
    /// `e^{tx}`
    ExpProduct,
}

impl GridProfile {
    fn eval(self, t: f64, x: f64) -> f64 {
        match self {
            Self::Hat => 1.0 - (t - x).abs(),
            Self::PowerBase => (1.0 + t).powf(x),
            Self::ExpProduct => (t * x).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureRule {
    /// Taylor factorisation of the 1-D Gaussian on `[−1, 1]`.
    GaussianTaylor { gamma: f64, terms: usize },
    /// Sine eigen-expansion of the Brownian bridge on `[0, 1]`.
    BrownianSine { terms: usize },
    /// A function of `t` sampled on a grid in `[0, 1]`.
    Grid {
        profile: GridProfile,
        grid: Vec<f64>,
    },
    /// Canonical unit vector at a grid point; exact grid hits only.
    Delta { grid: Vec<f64> },
}

impl FeatureRule {
    pub fn dim(&self) -> usize {
        match self {
            Self::GaussianTaylor { terms, .. } | Self::BrownianSine { terms } => *terms,
            Self::Grid { grid, .. } | Self::Delta { grid } => grid.len(),
        }
    }

    /// Closed input interval of the rule.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::GaussianTaylor { .. } => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }
}

/// `n + 1` equally spaced points on `[0, 1]`.
pub fn uniform_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "grid points",
            value: points as f64,
            reason: "need at least two grid points",
        });
    }
    let n = (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 / n).collect())
}

/// A feature map into a fixed feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    space: FeatureSpace,
    rule: FeatureRule,
}

impl FeatureMap {
    pub fn new(space: FeatureSpace, rule: FeatureRule) -> Result<Self> {
        if rule.dim() == 0 {
            return Err(Error::Empty("feature rule"));
        }
        if space.dim() != rule.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: rule.dim(),
            });
        }
        match &rule {
            FeatureRule::GaussianTaylor { gamma, .. } if !(*gamma > 0.0 && gamma.is_finite()) => {
                return Err(Error::InvalidParameter {
                    name: "gamma",
                    value: *gamma,
                    reason: "gaussian width must be positive",
                });
            }
            FeatureRule::Grid { grid, .. } | FeatureRule::Delta { grid } => {
                if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                    return Err(Error::Domain {
                        what: "feature grid",
                        value: *t,
                    });
                }
                for (i, w) in grid.windows(2).enumerate() {
                    if w[1] - w[0] <= DISTINCT_TOL {
                        return Err(Error::DuplicatePoints {
                            first: i,
                            second: i + 1,
                        });
                    }
                }
            }
            _ => {}
        }
        Ok(Self { space, rule })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn rule(&self) -> &FeatureRule {
        &self.rule
    }

    pub fn dim(&self) -> usize {
        self.rule.dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.rule.domain()
    }

    /// `Φ(x)`.
    pub fn feature(&self, x: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain {
                what: "feature map",
                value: x,
            });
        }
        Ok(match &self.rule {
            FeatureRule::GaussianTaylor { gamma, terms } => {
                let mut out = Vec::with_capacity(*terms);
                let mut a = (-gamma * x * x).exp();
                let s = (2.0 * gamma).sqrt() * x;
                for n in 0..*terms {
                    out.push(a);
                    a *= s / ((n + 1) as f64).sqrt();
                }
                out
            }
            FeatureRule::BrownianSine { terms } => (1..=*terms)
                .map(|n| {
                    let w = n as f64 * PI;
                    std::f64::consts::SQRT_2 * (w * x).sin() / w
                })
                .collect(),
            FeatureRule::Grid { profile, grid } => {
                grid.iter().map(|&t| profile.eval(t, x)).collect()
            }
            FeatureRule::Delta { grid } => {
                let idx = grid
                    .iter()
                    .position(|&t| t == x)
                    .ok_or(Error::OffGrid { x })?;
                let mut e = vec![0.0; grid.len()];
                e[idx] = 1.0;
                e
            }
        })
    }

    /// Points at which the map is sampled for rank certificates.
    pub fn sample_points(&self, count: usize) -> Vec<f64> {
        match &self.rule {
            FeatureRule::Delta { grid } | FeatureRule::Grid { grid, .. } => grid.clone(),
            _ => {
                let (lo, hi) = self.domain();
                let n = count.max(2);
                // Chebyshev-Lobatto nodes cluster where polynomial features separate
                (0..n)
                    .map(|i| {
                        let c = (PI * i as f64 / (n - 1) as f64).cos();
                        let x = 0.5 * (lo + hi) - 0.5 * (hi - lo) * c;
                        x.clamp(lo, hi)
                    })
                    .collect()
            }
        }
    }
}

/// `K(x, y) = ⟨Φ₁(x), Φ₂(y)⟩`.
pub fn kernel_from_features(map1: &FeatureMap, map2: &FeatureMap, x: f64, y: f64) -> Result<f64> {
    map1.space().compatible(map2.space())?;
    let u = map1.feature(x)?;
    let v = map2.feature(y)?;
    map1.space().pairing(&u, &v)
}

/// The two truncated Mercer expansions with certified tail bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MercerExpansion {
    GaussianTaylor { gamma: f64 },
    BrownianSine,
}

impl MercerExpansion {
    pub fn rule(&self, terms: usize) -> FeatureRule {
        match *self {
            Self::GaussianTaylor { gamma } => FeatureRule::GaussianTaylor { gamma, terms },
            Self::BrownianSine => FeatureRule::BrownianSine { terms },
        }
    }

    /// The closed-form kernel the expansion converges to.
    pub fn closed_form(&self) -> Kernel {
        match *self {
            Self::GaussianTaylor { gamma } => Kernel::Gaussian { gamma },
            Self::BrownianSine => Kernel::BrownianBridge,
        }
    }

    /// Uniform bound on `|K − K_N|` over the expansion's domain.
    pub fn truncation_bound(&self, terms: usize) -> Result<f64> {
        mercer_truncation_bound(*self, terms)
    }
}

/// Uniform tail bound of an `N`-term truncation.
///
/// Gaussian-Taylor on `[−1, 1]²`: `Σ_{n≥N} (2γ)ⁿ/n!`, since `|e^{−γ(x²+y²)}(xy)ⁿ| ≤ 1`.
/// Brownian-sine on `[0, 1]²`: `Σ_{n>N} 2/(n²π²) ≤ 2/(π²N)`.
pub fn mercer_truncation_bound(kind: MercerExpansion, terms: usize) -> Result<f64> {
    if terms == 0 {
        return Err(Error::InvalidParameter {
            name: "terms",
            value: 0.0,
            reason: "truncation needs at least one term",
        });
    }
    match kind {
        MercerExpansion::GaussianTaylor { gamma } => {
            let a = 2.0 * gamma;
            // a^N / N! built incrementally, then the tail summed to negligibility
            let mut term = 1.0;
            for n in 1..=terms {
                term *= a / n as f64;
            }
            let mut sum = 0.0;
            let mut n = terms;
            while term > 0.0 && (term > 1e-20 * sum || sum == 0.0) && n < terms + 10_000 {
                sum += term;
                n += 1;
                term *= a / n as f64;
            }
            if sum == 0.0 && a > 0.0 {
                // a^N/N! underflowed; the tail is below the smallest normal
                sum = f64::MIN_POSITIVE;
            }
            Ok(sum)
        }
        MercerExpansion::BrownianSine => {
            // Σ_{n>N} 1/n² summed from the far tail inward, plus the integral remainder
            let far = 200 * terms.max(50);
            let mut s = 1.0 / far as f64;
            for n in (terms + 1..=far).rev() {
                s += 1.0 / (n as f64 * n as f64);
            }
            Ok(2.0 / (PI * PI) * s)
        }
    }
}

/// `[K(x_j, x_k)]`; points must be pairwise distinct.
pub fn gram(kernel: &Kernel, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_distinct(points)?;
    let m = points.len();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            g[(j, k)] = kernel.eval(&points[j], &points[k])?;
        }
    }
    Ok(g)
}

pub fn check_distinct(points: &[Vec<f64>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("point list"));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d <= DISTINCT_TOL {
                return Err(Error::DuplicatePoints {
                    first: i,
                    second: j,
                });
            }
        }
    }
    Ok(())
}

/// Finite-sample evidence for the admissibility requirements of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub min_singular: f64,
    pub max_singular: f64,
    /// Requirement (i) on this sample: `σ_min > 1e-12 σ_max`.
    pub nonsingular: bool,
    /// Requirement (ii) evidence: `max |K|` over a sampled domain grid.
    pub max_abs_kernel: f64,
    /// Requirement (iii) quantifies over infinite point sequences and is not decided.
    pub independence_note: &'static str,
}

pub fn admissibility_check(kernel: &Kernel, points: &[Vec<f64>]) -> Result<AdmissibilityReport> {
    let g = gram(kernel, points)?;
    let s = singular_values(&g);
    let max_singular = s.first().copied().unwrap_or(0.0);
    let min_singular = s.last().copied().unwrap_or(0.0);

    let mut sample: Vec<Vec<f64>> = points.to_vec();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sample.push(
                points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            );
        }
    }
    if kernel.unit_interval() || matches!(kernel, Kernel::Mercer(_)) {
        let (lo, hi) = match kernel {
            Kernel::Mercer(maps) => maps.0.domain(),
            _ => (0.0, 1.0),
        };
        sample.extend((0..=100).map(|i| vec![lo + (hi - lo) * i as f64 / 100.0]));
    }
    let mut max_abs_kernel: f64 = 0.0;
    for a in &sample {
        for b in &sample {
            max_abs_kernel = max_abs_kernel.max(kernel.eval(a, b)?.abs());
        }
    }
    Ok(AdmissibilityReport {
        min_singular,
        max_singular,
        nonsingular: min_singular > 1e-12 * max_singular,
        max_abs_kernel,
        independence_note: "finite-sample only",
    })
}

/// Rank of the images of `map` at its sample points (tolerance relative to σ_max).
pub fn feature_rank(map: &FeatureMap, tol: f64) -> Result<usize> {
    let pts = map.sample_points(map.dim() + 5);
    let rows = pts
        .iter()
        .map(|&x| map.feature(x))
        .collect::<Result<Vec<_>>>()?;
    independence_rank(&rows, tol)
}
