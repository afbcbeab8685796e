//! Dynamic initial margin: an IM number at every node of a simulated cube,
//! computed by
//!
//! * brute force: finite-difference sensitivities from the pricer at every node;
//! * Chebyshev tensors on model space: per time point and factor, a tensor of
//!   `x -> S_i(g(x))` over the box spanned by the simulated model states;
//! * Chebyshev tensors on market space: per time point and factor, a 1-D tensor
//!   of `s -> S_i(h(s))` where `h` interpolates between simulated curves;
//! * regressions of the 10-day PnL variance on the model state (polynomial or
//!   Nadaraya-Watson) with a normal quantile.
//!
//! All node-level work is parallel and collected in node order, so results
//! do not depend on the number of worker threads.

mod brute;
mod market_space;
mod model_space;
mod profile;
mod regression;

pub use brute::brute_force_dim;
pub use market_space::{cheb_market_space_dim, MarketSpaceSlice};
pub use model_space::cheb_model_space_dim;
pub use profile::{profile_error, profiles, DimProfile, ProfileError, ProfileKind};
pub use regression::{nadaraya_watson, regression_dim, RegressionVariant};

use std::fmt;

use thiserror::Error;

use crate::cheb::ChebError;
use crate::pricers::{BumpConfig, Pricer, PricingError, Trade};
use crate::rfem::{ModelError, RiskFactorModel, ScenarioCube};
use crate::simm::{simm_margin, SimmConfig, SimmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimError {
    #[error(transparent)]
    Cheb(#[from] ChebError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Simm(#[from] SimmError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("regression needs a cube simulated with a risk horizon")]
    MissingHorizon,
    #[error("profile error undefined: every benchmark point is below epsilon")]
    UndefinedMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    BruteForce,
    ChebModelSpace,
    ChebMarketSpace,
    RegressionPolynomial,
    RegressionNadarayaWatson,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::BruteForce,
        Method::ChebModelSpace,
        Method::ChebMarketSpace,
        Method::RegressionPolynomial,
        Method::RegressionNadarayaWatson,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::BruteForce => "brute_force",
            Method::ChebModelSpace => "cheb_model_space",
            Method::ChebMarketSpace => "cheb_market_space",
            Method::RegressionPolynomial => "regression_polynomial",
            Method::RegressionNadarayaWatson => "regression_nadaraya_watson",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::BruteForce => "Benchmark",
            Method::ChebModelSpace => "Chebyshev on Model Space",
            Method::ChebMarketSpace => "Chebyshev on Market Space",
            Method::RegressionPolynomial => "Polynomial regression",
            Method::RegressionNadarayaWatson => "Nadaraya-Watson regression",
        }
    }

    pub fn from_label(label: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.label() == label)
    }

    pub fn is_regression(self) -> bool {
        matches!(
            self,
            Method::RegressionPolynomial | Method::RegressionNadarayaWatson
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Everything a DIM method reads. The cube must have been produced by
/// `model`, and `pricer` must share its pillar layout.
#[derive(Debug, Clone, Copy)]
pub struct DimInputs<'a> {
    pub cube: &'a ScenarioCube,
    pub model: &'a RiskFactorModel,
    pub pricer: &'a Pricer,
    pub trade: &'a Trade,
    pub bumps: &'a BumpConfig,
    pub simm: &'a SimmConfig,
}

impl DimInputs<'_> {
    fn factor_count(&self) -> usize {
        self.model.pillars.factor_count()
    }

    fn check(&self) -> Result<(), DimError> {
        self.trade.validate()?;
        if self.pricer.pillars != self.model.pillars {
            return Err(DimError::InvalidArgument(
                "pricer and model use different pillar layouts".into(),
            ));
        }
        let l = self.factor_count();
        if self.simm.rate_pillars() + self.simm.vol_pillars() != l {
            return Err(DimError::InvalidArgument(format!(
                "SIMM config covers {} factors, market has {l}",
                self.simm.rate_pillars() + self.simm.vol_pillars()
            )));
        }
        Ok(())
    }
}

/// Per-node sensitivities, time-major: node `(p, t)` holds
/// `values[(t * paths + p) * factors ..][..factors]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub method: Method,
    pub paths: usize,
    pub factors: usize,
    pub time_points: Vec<f64>,
    pub values: Vec<f64>,
    pub pricer_calls: u64,
}

impl SensitivityMatrix {
    pub fn node(&self, path: usize, t: usize) -> &[f64] {
        let start = (t * self.paths + path) * self.factors;
        &self.values[start..start + self.factors]
    }
}

/// IM per node, time-major like [`SensitivityMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DimSurface {
    pub method: Method,
    pub paths: usize,
    pub time_points: Vec<f64>,
    pub im: Vec<f64>,
}

impl DimSurface {
    pub fn at(&self, path: usize, t: usize) -> f64 {
        self.im[t * self.paths + path]
    }

    pub fn slice(&self, t: usize) -> &[f64] {
        &self.im[t * self.paths..(t + 1) * self.paths]
    }
}

/// Result of one DIM method on one trade.
#[derive(Debug, Clone, PartialEq)]
pub struct DimResult {
    pub sensitivities: Option<SensitivityMatrix>,
    pub surface: DimSurface,
    pub pricer_calls: u64,
}

/// Turns per-node sensitivity rows into a sensitivity matrix and IM surface.
fn finish_sensitivity_method(
    method: Method,
    inputs: &DimInputs<'_>,
    values: Vec<f64>,
    pricer_calls: u64,
) -> Result<DimResult, DimError> {
    let l = inputs.factor_count();
    let im = values
        .chunks(l)
        .map(|s| simm_margin(s, inputs.simm).map(|m| m.total))
        .collect::<Result<Vec<_>, _>>()?;
    let time_points = inputs.cube.time_points().to_vec();
    Ok(DimResult {
        sensitivities: Some(SensitivityMatrix {
            method,
            paths: inputs.cube.paths(),
            factors: l,
            time_points: time_points.clone(),
            values,
            pricer_calls,
        }),
        surface: DimSurface {
            method,
            paths: inputs.cube.paths(),
            time_points,
            im,
        },
        pricer_calls,
    })
}

/// Closed-form pricer-call counts for each method on a given cube.
pub mod call_counts {
    use super::market_space::slice_is_degenerate;
    use super::model_space::active_dims;
    use crate::rfem::ScenarioCube;

    /// `2 * l * m * T`.
    pub fn brute_force(cube: &ScenarioCube, factors: usize) -> u64 {
        2 * (factors * cube.paths() * cube.time_points().len()) as u64
    }

    /// `2 * l * sum_t prod_{active dims} mesh_d`; a dimension whose simulated
    /// range is a single value contributes one sample.
    pub fn model_space(cube: &ScenarioCube, factors: usize, mesh: &[usize]) -> u64 {
        (0..cube.time_points().len())
            .map(|t| {
                let (_, _, active) = active_dims(cube.model_slice(t));
                let nodes: usize = active.iter().map(|&d| mesh_for(mesh, d)).product();
                2 * (factors * nodes) as u64
            })
            .sum()
    }

    /// `2 * sum_t sum_i n_i(t)` with `n_i = mesh` unless factor `i` takes a
    /// single value across paths at `t`, in which case `n_i = 1`.
    pub fn market_space(cube: &ScenarioCube, factors: usize, mesh: usize) -> u64 {
        (0..cube.time_points().len())
            .map(|t| {
                (0..factors)
                    .map(|i| {
                        if slice_is_degenerate(cube.market_slice(t), i) {
                            2
                        } else {
                            2 * mesh as u64
                        }
                    })
                    .sum::<u64>()
            })
            .sum()
    }

    /// `2 * m * T`.
    pub fn regression(cube: &ScenarioCube) -> u64 {
        2 * (cube.paths() * cube.time_points().len()) as u64
    }

    pub(crate) fn mesh_for(mesh: &[usize], dim: usize) -> usize {
        if mesh.len() == 1 {
            mesh[0]
        } else {
            mesh[dim]
        }
    }
}
