//! Gaussian mean estimation when an adversary may hide samples.
//!
//! Each draw x ~ N(mu, I) is shown with probability f(x)/p(x) and replaced by a
//! missingness marker otherwise, where the adversary's sub-density satisfies
//! (1 - eps) p <= f <= p. The crate builds such adversaries, checks their moment
//! and distance properties, and estimates mu from the visible samples.

pub mod adversary;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod hermite;
pub mod io;
pub mod legendre;
pub mod model;
pub mod moments;
pub mod normal;
pub mod quadrature;
pub mod scalar;

pub use adversary::{Adversary1D, CouplingPair, HiddenDirectionSampler, Piece, PieceKind};
pub use error::{Error, Result};
pub use estimators::EstimateResult;
pub use model::{derive_params, ContaminationParams, Dataset, DerivationConstants, GaussianSpec, ObservedSample};
pub use scalar::Real;

pub type HermiteTensorF64 = hermite::HermiteTensor<f64>;
pub type HermiteTensorF32 = hermite::HermiteTensor<f32>;
pub type FlattenedTensorF64 = hermite::FlattenedTensor<f64>;
pub type GramMatrixExact = Vec<Vec<num_rational::BigRational>>;
