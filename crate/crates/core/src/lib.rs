//! Reproducing kernel Banach spaces built from a pair of feature maps.
//!
//! The crate realises, at finite dimension, the construction of a pair of
//! function spaces `B₁`, `B₂` from two feature maps `Φ₁: Ω₁ → W₁`,
//! `Φ₂: Ω₂ → W₂` and a continuous bilinear form on `W₁ × W₂`:
//!
//! * [`young`]: conjugated Young function pairs,
//! * [`feature_space`]: weighted coefficient spaces, the pairing and all norms
//!   (p, sup, Orlicz gauge, Orlicz dual),
//! * [`duality`]: semi-inner products, duality maps and norm derivatives,
//! * [`kernel`]: closed-form kernels, feature maps and Mercer truncations,
//! * [`rkbs`]: the function spaces, evaluation and the reproducing property,
//! * [`learn`]: minimal norm interpolation and regularization networks.

pub mod duality;
pub mod error;
pub mod feature_space;
pub mod kernel;
pub mod learn;
pub mod numeric;
pub mod rkbs;
pub mod young;

pub use error::{Error, Result};
pub use feature_space::{FeatureSpace, NormSpec};
pub use kernel::{FeatureMap, FeatureRule, Kernel, MercerExpansion};
pub use learn::{SampleSet, SolveReport};
pub use rkbs::{BFunction, RkbsPair, Side};
pub use young::{YoungKind, YoungPair};
