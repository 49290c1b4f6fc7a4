//! The function spaces `B₁ = {f_v}` and `B₂ = {g_u}` of a feature-map pair.
//!
//! With `Φ₁: Ω₁ → W₁`, `Φ₂: Ω₂ → W₂` and the pairing `⟨·,·⟩` on `W₁ × W₂`:
//!
//! * `f_v(x) = ⟨Φ₁(x), v⟩` for `v ∈ W₂`, with `‖f_v‖ = ‖v‖_{W₂}`,
//! * `g_u(y) = ⟨u, Φ₂(y)⟩` for `u ∈ W₁`, with `‖g_u‖ = ‖u‖_{W₁}`,
//! * `⟨f_v, g_u⟩ = ⟨u, v⟩` and `K(x, y) = ⟨Φ₁(x), Φ₂(y)⟩`.

use crate::error::{Error, Result};
use crate::feature_space::{pairing_bound_constant, FeatureSpace, NormSpec};
use crate::kernel::{
    feature_rank, kernel_from_features, uniform_grid, FeatureMap, FeatureRule, GridProfile,
    MercerExpansion,
};
use crate::young::YoungPair;

/// Relative singular-value cutoff of the rank certificate.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `f_v` with `v ∈ W₂`, evaluated on `Ω₁`.
    B1,
    /// `g_u` with `u ∈ W₁`, evaluated on `Ω₂`.
    B2,
}

/// A function of `B₁` or `B₂` stored by its coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BFunction {
    pub side: Side,
    pub coef: Vec<f64>,
}

impl BFunction {
    pub fn b1(v: Vec<f64>) -> Self {
        Self {
            side: Side::B1,
            coef: v,
        }
    }

    pub fn b2(u: Vec<f64>) -> Self {
        Self {
            side: Side::B2,
            coef: u,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            side: self.side,
            coef: self.coef.iter().map(|x| c * x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkbsPair {
    map1: FeatureMap,
    map2: FeatureMap,
    bound: f64,
    ranks: (usize, usize),
    coefficients_unique: bool,
}

impl RkbsPair {
    pub fn new(map1: FeatureMap, map2: FeatureMap) -> Result<Self> {
        map1.space().compatible(map2.space())?;
        let bound = pairing_bound_constant(&map1.space().norm_spec(), &map2.space().norm_spec())?;
        let ranks = (
            feature_rank(&map1, RANK_TOL)?,
            feature_rank(&map2, RANK_TOL)?,
        );
        let dim = map1.dim();
        let coefficients_unique = ranks.0 == dim && ranks.1 == dim;
        if !coefficients_unique {
            log::warn!(
                "feature images have ranks {:?} below dim {dim}; norms are semi-norms of representatives",
                ranks
            );
        }
        Ok(Self {
            map1,
            map2,
            bound,
            ranks,
            coefficients_unique,
        })
    }

    /// `W₁ = W₂ = ℓ²`, both maps the `terms`-term Gaussian Taylor features.
    pub fn gaussian_rkhs(terms: usize, gamma: f64) -> Result<Self> {
        Self::gaussian_p(2.0, terms, gamma)
    }

    /// `W₂ = ℓ^p`, `W₁ = ℓ^{p'}`, both maps Gaussian Taylor features.
    pub fn gaussian_p(p: f64, terms: usize, gamma: f64) -> Result<Self> {
        let spec2 = NormSpec::p(p)?;
        let spec1 = spec2.dual();
        Self::gaussian_with(spec1, spec2, terms, gamma)
    }

    /// `W₁ = |·|_Ψ` (Orlicz norm), `W₂ = ‖·‖_Φ` (gauge norm) for the entropy pair.
    pub fn entropy_orlicz(terms: usize, gamma: f64) -> Result<Self> {
        let pair = YoungPair::entropy();
        Self::gaussian_with(
            NormSpec::OrliczDual(pair),
            NormSpec::OrliczGauge(pair),
            terms,
            gamma,
        )
    }

    fn gaussian_with(spec1: NormSpec, spec2: NormSpec, terms: usize, gamma: f64) -> Result<Self> {
        let rule = MercerExpansion::GaussianTaylor { gamma }.rule(terms);
        let map1 = FeatureMap::new(FeatureSpace::counting(terms, spec1)?, rule.clone())?;
        let map2 = FeatureMap::new(FeatureSpace::counting(terms, spec2)?, rule)?;
        Self::new(map1, map2)
    }

    /// `W₁ = sup` with hat features `1 − |t_j − x|`, `W₂ = ℓ¹` with grid deltas.
    pub fn hat_delta(grid_points: usize) -> Result<Self> {
        let grid = uniform_grid(grid_points)?;
        let n = grid.len();
        let map1 = FeatureMap::new(
            FeatureSpace::counting(n, NormSpec::Sup)?,
            FeatureRule::Grid {
                profile: GridProfile::Hat,
                grid: grid.clone(),
            },
        )?;
        let map2 = FeatureMap::new(
            FeatureSpace::counting(n, NormSpec::P(1.0))?,
            FeatureRule::Delta { grid },
        )?;
        Self::new(map1, map2)
    }

    pub fn space1(&self) -> &FeatureSpace {
        self.map1.space()
    }

    pub fn space2(&self) -> &FeatureSpace {
        self.map2.space()
    }

    pub fn map1(&self) -> &FeatureMap {
        &self.map1
    }

    pub fn map2(&self) -> &FeatureMap {
        &self.map2
    }

    pub fn dim(&self) -> usize {
        self.map1.dim()
    }

    /// `C` in `|⟨u, v⟩| ≤ C ‖u‖_{W₁} ‖v‖_{W₂}`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Ranks of the sampled `Φ₁`, `Φ₂` images.
    pub fn ranks(&self) -> (usize, usize) {
        self.ranks
    }

    pub fn coefficients_unique(&self) -> bool {
        self.coefficients_unique
    }

    /// Coefficient space of functions on `side`.
    pub fn coef_space(&self, side: Side) -> &FeatureSpace {
        match side {
            Side::B1 => self.space2(),
            Side::B2 => self.space1(),
        }
    }

    /// Feature map evaluated to build functions' values on `side`.
    pub fn feature_map(&self, side: Side) -> &FeatureMap {
        match side {
            Side::B1 => &self.map1,
            Side::B2 => &self.map2,
        }
    }

    pub fn kernel(&self, x: f64, y: f64) -> Result<f64> {
        kernel_from_features(&self.map1, &self.map2, x, y)
    }

    /// `K(x, ·) = g_{Φ₁(x)}` on side B2.
    pub fn kernel_section_b2(&self, x: f64) -> Result<BFunction> {
        Ok(BFunction::b2(self.map1.feature(x)?))
    }

    /// `K(·, y) = f_{Φ₂(y)}` on side B1.
    pub fn kernel_section_b1(&self, y: f64) -> Result<BFunction> {
        Ok(BFunction::b1(self.map2.feature(y)?))
    }

    fn check(&self, f: &BFunction) -> Result<()> {
        self.coef_space(f.side).check(&f.coef)
    }

    pub fn eval(&self, f: &BFunction, point: f64) -> Result<f64> {
        self.check(f)?;
        let phi = self.feature_map(f.side).feature(point)?;
        self.space1().pairing(&phi, &f.coef)
    }

    pub fn bnorm(&self, f: &BFunction) -> Result<f64> {
        self.check(f)?;
        self.coef_space(f.side).norm(&f.coef)
    }

    /// `⟨f_v, g_u⟩ = ⟨u, v⟩`.
    pub fn b_pairing(&self, f: &BFunction, g: &BFunction) -> Result<f64> {
        if f.side != Side::B1 {
            return Err(Error::SideMismatch("first argument must lie in B1"));
        }
        if g.side != Side::B2 {
            return Err(Error::SideMismatch("second argument must lie in B2"));
        }
        self.check(f)?;
        self.check(g)?;
        self.space1().pairing(&g.coef, &f.coef)
    }

    /// `max |f(x) − ⟨f, K(x,·)⟩|` on B1, or `max |g(y) − ⟨K(·,y), g⟩|` on B2.
    pub fn reproduce_residual(&self, f: &BFunction, points: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &x in points {
            let direct = self.eval(f, x)?;
            let paired = match f.side {
                Side::B1 => self.b_pairing(f, &self.kernel_section_b2(x)?)?,
                Side::B2 => self.b_pairing(&self.kernel_section_b1(x)?, f)?,
            };
            worst = worst.max((direct - paired).abs());
        }
        Ok(worst)
    }

    /// `C ‖Φ₁(x)‖_{W₁}` on B1, `C ‖Φ₂(y)‖_{W₂}` on B2.
    pub fn point_eval_constant(&self, point: f64, side: Side) -> Result<f64> {
        let (map, space) = match side {
            Side::B1 => (&self.map1, self.space1()),
            Side::B2 => (&self.map2, self.space2()),
        };
        Ok(self.bound * space.norm(&map.feature(point)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hat() -> RkbsPair {
        RkbsPair::hat_delta(11).unwrap()
    }

    #[test]
    fn hat_pair_delta_coefficient() {
        let pair = hat();
        let mut v = vec![0.0; 11];
        v[3] = 1.0;
        let f = BFunction::b1(v);
        for x in [0.0, 0.17, 0.3, 0.9] {
            assert!((pair.eval(&f, x).unwrap() - (1.0 - (0.3f64 - x).abs())).abs() < 1e-15);
        }
        assert_eq!(pair.bnorm(&f).unwrap(), 1.0);
    }

    #[test]
    fn zero_function() {
        let pair = hat();
        let f = BFunction::b1(vec![0.0; 11]);
        assert_eq!(pair.eval(&f, 0.4).unwrap(), 0.0);
        assert_eq!(pair.bnorm(&f).unwrap(), 0.0);
        let g = BFunction::b2(vec![1.0; 11]);
        assert_eq!(pair.b_pairing(&f, &g).unwrap(), 0.0);
    }

    #[test]
    fn l1_bnorm() {
        let map = |spec| {
            FeatureMap::new(
                FeatureSpace::counting(2, spec).unwrap(),
                FeatureRule::Delta {
                    grid: vec![0.0, 1.0],
                },
            )
            .unwrap()
        };
        let pair = RkbsPair::new(map(NormSpec::Sup), map(NormSpec::P(1.0))).unwrap();
        let f = BFunction::b1(vec![1.0, -2.0]);
        assert_eq!(pair.bnorm(&f).unwrap(), 3.0);
        assert_eq!(pair.bnorm(&f.scaled(-2.5)).unwrap(), 7.5);
        assert!(pair.coefficients_unique());
    }

    #[test]
    fn kernel_sections_reproduce() {
        let pair = hat();
        let y0 = 0.6;
        let f = pair.kernel_section_b1(y0).unwrap();
        for x in [0.05, 0.5, 0.95] {
            let k = kernel_from_features(pair.map1(), pair.map2(), x, y0).unwrap();
            assert_eq!(pair.eval(&f, x).unwrap(), k);
        }
        assert!(pair.reproduce_residual(&f, &[0.1, 0.2, 0.77]).unwrap() < 1e-10);
        let g = pair.kernel_section_b2(0.33).unwrap();
        assert!(pair.reproduce_residual(&g, &[0.0, 0.5, 1.0]).unwrap() < 1e-10);
    }

    #[test]
    fn side_mismatch() {
        let pair = hat();
        let f = BFunction::b1(vec![0.0; 11]);
        assert!(matches!(
            pair.b_pairing(&f, &f),
            Err(Error::SideMismatch(_))
        ));
        assert!(pair.eval(&BFunction::b1(vec![0.0; 3]), 0.1).is_err());
    }

    #[test]
    fn hat_point_constant_on_grid() {
        let pair = hat();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(pair.point_eval_constant(x, Side::B1).unwrap(), 1.0);
        }
        // off grid: max_j (1 − |t_j − x|)
        let c = pair.point_eval_constant(0.25, Side::B1).unwrap();
        assert!((c - 0.95).abs() < 1e-15);
        assert_eq!(pair.point_eval_constant(0.3, Side::B2).unwrap(), 1.0);
    }

    #[test]
    fn point_bound_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for pair in [hat(), RkbsPair::gaussian_p(3.0, 20, 1.0).unwrap()] {
            let (lo, hi) = pair.map1().domain();
            for _ in 0..300 {
                let v: Vec<f64> = (0..pair.dim())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let f = BFunction::b1(v);
                let x = rng.random_range(lo..=hi);
                let bound =
                    pair.point_eval_constant(x, Side::B1).unwrap() * pair.bnorm(&f).unwrap();
                assert!(pair.eval(&f, x).unwrap().abs() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn rkhs_collapse() {
        let pair = RkbsPair::gaussian_rkhs(30, 1.0).unwrap();
        let pts = [-0.8, -0.1, 0.45, 0.9];
        let mut g = nalgebra::DMatrix::zeros(4, 4);
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                g[(i, j)] = pair.kernel(x, y).unwrap();
            }
        }
        assert!((&g - g.transpose()).amax() < 1e-15);
        assert!(g.symmetric_eigenvalues().min() > -1e-12);
    }

    #[test]
    fn built_in_pairs_construct() {
        assert_eq!(RkbsPair::hat_delta(101).unwrap().ranks(), (101, 101));
        let gauss = RkbsPair::gaussian_rkhs(60, 1.0).unwrap();
        // the Taylor tail falls below the rank tolerance long before 60 terms
        assert!(gauss.ranks().0 < 60);
        assert!(!gauss.coefficients_unique());
        assert_eq!(RkbsPair::entropy_orlicz(10, 1.0).unwrap().bound(), 1.0);
        assert!(RkbsPair::gaussian_p(1.0, 10, 1.0).is_ok());
    }
}
