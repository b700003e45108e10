//! Limit variances, exact finite-`k` second moments and four-point integrals.
//!
//! Deterministic results come from adaptive Gauss–Kronrod after power
//! substitutions that remove the endpoint singularities. Monte Carlo results
//! come from importance sampling, with the work split into [`MC_BATCHES`]
//! batches on independent streams and a 1-sigma error taken from the spread
//! of the batch means.

mod fourpoint;
mod gk;
mod mc;
mod oracle;
mod sigma;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use fourpoint::{contraction_norm_q2, four_point_integral, lemma41_integral};
pub use mc::MC_BATCHES;
pub use oracle::{
    variance_oracle, variance_oracle_mc, variance_oracle_quadrature, winding_cross_moment, OracleOptions,
};
pub use sigma::{sigma2_integrand, sigma2_squared, sigma2_squared_truncated, sigmaq_squared};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMethod {
    AdaptiveDeterministic,
    SimplexMc,
}

/// A numeric estimate with an absolute error estimate (1-sigma for Monte
/// Carlo, a conservative bound for deterministic rules).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    #[serde(rename = "error")]
    pub error_estimate: f64,
    pub n_evals: u64,
    pub method: QuadMethod,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl QuadResult {
    pub(crate) fn new(value: f64, error_estimate: f64, n_evals: u64, method: QuadMethod) -> Self {
        Self { value, error_estimate: error_estimate.max(0.0), n_evals: n_evals.max(1), method, params: Map::new() }
    }

    pub(crate) fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    /// Relative error estimate `error / |value|`.
    pub fn relative_error(&self) -> f64 {
        self.error_estimate / self.value.abs()
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.value *= c;
        self.error_estimate *= c.abs();
        self
    }
}
