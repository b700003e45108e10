//! Numerical laboratory for the central limit theorem of iterated stochastic
//! integrals driven by independent fractional Brownian motions with `H > 1/2`.
//!
//! The crate is organised around four pieces:
//!
//! * [`fbm`]: the covariance kernel `R(s, t)` and exact Gaussian synthesis of
//!   multidimensional fBm paths (Cholesky on arbitrary grids, circulant
//!   embedding on uniform ones).
//! * [`iterint`]: the nested Riemann-sum evaluation of
//!   `Y_{k^t} = ∫₁^{k^t}∫₁^{s_q}⋯ s_q^{-qH} dB¹⋯dB^q` and the planar winding
//!   functionals.
//! * [`quad`]: deterministic and importance-sampled Monte Carlo evaluation of
//!   the limiting variances, the exact finite-`k` second moments, the four-point
//!   integral family controlling the contractions, and the `q = 2` contraction
//!   norm.
//! * [`cltlab`]: the Monte Carlo experiment driver and the statistics used to
//!   check convergence, tightness and the rate of convergence.
//!
//! All Monte Carlo work is split into a fixed number of batches, each with its
//! own random stream derived from a master seed (see [`rng`]), so results are
//! bit-identical for any rayon thread count.

pub mod cltlab;
pub mod error;
pub mod fbm;
pub mod iterint;
mod par;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use fbm::{covariance, covariance_matrix, sample_fbm, FbmPathSet, FbmSampler, Hurst, SamplingMethod, SpacingMode, TimeGrid};
pub use iterint::{iterated_integral, winding_functional, winding_terms, IterConfig, IterIntegralEstimate, Scheme, WindingVariant};
pub use quad::{QuadMethod, QuadResult};
