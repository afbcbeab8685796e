use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::model_space::active_dims;
use super::{DimError, DimInputs, DimResult, DimSurface, Method};
use crate::pricers::CallCounter;

/// Conditional-variance estimator used by [`regression_dim`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressionVariant {
    /// Least squares on all monomials of the standardized regressors up to
    /// the given total degree.
    Polynomial { degree: usize },
    /// Gaussian product kernel with Silverman's rule-of-thumb bandwidths.
    NadarayaWatson,
}

impl RegressionVariant {
    fn method(self) -> Method {
        match self {
            RegressionVariant::Polynomial { .. } => Method::RegressionPolynomial,
            RegressionVariant::NadarayaWatson => Method::RegressionNadarayaWatson,
        }
    }
}

/// DIM by regressing the risk-horizon PnL on the model state.
///
/// At each time point the PnL `V(t + delta, x') - V(t, x)` is computed on
/// every path (two pricer calls per node), its conditional mean is
/// regressed on the model state, then the squared residuals are regressed
/// to get the conditional variance. IM is `z * sqrt(variance)`, with `z` the
/// quantile of the SIMM configuration. PnL is shifted by the first path's
/// value before fitting; this does not change the variance and makes a
/// cube with identical paths give exactly zero IM.
pub fn regression_dim(
    inputs: &DimInputs<'_>,
    variant: RegressionVariant,
) -> Result<DimResult, DimError> {
    inputs.check()?;
    if let RegressionVariant::Polynomial { degree } = variant {
        if degree == 0 {
            return Err(DimError::InvalidArgument(
                "polynomial degree must be at least 1".into(),
            ));
        }
    }
    let cube = inputs.cube;
    let horizon = cube.horizon_states().ok_or(DimError::MissingHorizon)?;
    let method = variant.method();
    let counter = CallCounter::new(method.label());
    let m = cube.paths();
    let z = inputs.simm.quantile_z();

    let mut im = Vec::with_capacity(cube.node_count());
    for (t, &time) in cube.time_points().iter().enumerate() {
        let pnl = (0..m)
            .into_par_iter()
            .map(|p| -> Result<f64, DimError> {
                let now = inputs
                    .pricer
                    .price(inputs.trade, cube.market_state(p, t), time, &counter)?;
                let later = inputs.pricer.price(
                    inputs.trade,
                    &horizon.market_states[t * m + p],
                    time + horizon.horizon,
                    &counter,
                )?;
                Ok(later.pv - now.pv)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let base = pnl[0];
        let y: Vec<f64> = pnl.iter().map(|v| v - base).collect();

        let states = cube.model_slice(t);
        let (_, _, active) = active_dims(states);
        let x: Vec<Vec<f64>> = states
            .iter()
            .map(|s| active.iter().map(|&d| s.factors[d]).collect())
            .collect();

        let variance = match variant {
            RegressionVariant::Polynomial { degree } => {
                let fit = |target: &[f64]| polynomial_fit(&x, target, degree, time);
                let mean = fit(&y);
                let sq: Vec<f64> = y.iter().zip(&mean).map(|(v, mu)| (v - mu).powi(2)).collect();
                fit(&sq)
            }
            RegressionVariant::NadarayaWatson => {
                let kernel = KernelWeights::new(&x);
                let mean = kernel.smooth(&y);
                let sq: Vec<f64> = y.iter().zip(&mean).map(|(v, mu)| (v - mu).powi(2)).collect();
                kernel.smooth(&sq)
            }
        };
        im.extend(variance.into_iter().map(|v| z * v.max(0.0).sqrt()));
    }

    Ok(DimResult {
        sensitivities: None,
        surface: DimSurface {
            method,
            paths: m,
            time_points: cube.time_points().to_vec(),
            im,
        },
        pricer_calls: counter.get(),
    })
}

/// Standardizes each regressor column to zero mean and unit variance.
fn standardize(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x.first().map_or(0, Vec::len);
    let n = x.len() as f64;
    let mut out = x.to_vec();
    for j in 0..d {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for row in &mut out {
            row[j] = (row[j] - mean) / sd;
        }
    }
    out
}

/// Exponent vectors of every monomial in `d` variables with total degree
/// at most `degree`, starting with the constant.
fn monomials(d: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    let mut frontier = vec![vec![0; d]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for e in &frontier {
            // Only raise variables at or after the last raised one, so each
            // monomial is produced once.
            let start = e.iter().rposition(|&p| p > 0).unwrap_or(0);
            for j in start..d {
                let mut f = e.clone();
                f[j] += 1;
                next.push(f);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Least-squares polynomial fit of `y` on `x`, returned at the sample points.
/// Falls back to the sample mean when the design matrix is rank deficient.
fn polynomial_fit(x: &[Vec<f64>], y: &[f64], degree: usize, time: f64) -> Vec<f64> {
    let n = y.len();
    let d = x.first().map_or(0, Vec::len);
    let xs = standardize(x);
    let basis = monomials(d, degree);
    let design = DMatrix::from_fn(n, basis.len(), |r, c| {
        basis[c]
            .iter()
            .zip(&xs[r])
            .map(|(&p, &v)| v.powi(p as i32))
            .product::<f64>()
    });
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if basis.len() > n || !(s_min > 1e-10 * s_max) {
        warn!(
            "polynomial regression at t={time}: design matrix is rank deficient, \
             using the unconditional mean"
        );
        let mean = y.iter().sum::<f64>() / n as f64;
        return vec![mean; n];
    }
    let rhs = DVector::from_column_slice(y);
    match svd.solve(&rhs, 0.0) {
        Ok(beta) => (design * beta).iter().copied().collect(),
        Err(e) => {
            warn!("polynomial regression at t={time}: {e}; using the unconditional mean");
            let mean = y.iter().sum::<f64>() / n as f64;
            vec![mean; n]
        }
    }
}

/// Pairwise Gaussian product-kernel weights between sample points.
struct KernelWeights {
    n: usize,
    weights: Vec<f64>,
}

impl KernelWeights {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        let bandwidths = silverman_bandwidths(x);
        let weights = (0..n)
            .into_par_iter()
            .flat_map_iter(|q| {
                let bandwidths = &bandwidths;
                (0..n).map(move |p| {
                    let e: f64 = (0..d)
                        .map(|j| ((x[q][j] - x[p][j]) / bandwidths[j]).powi(2))
                        .sum();
                    (-0.5 * e).exp()
                })
            })
            .collect();
        Self { n, weights }
    }

    fn smooth(&self, y: &[f64]) -> Vec<f64> {
        self.weights
            .par_chunks(self.n)
            .map(|row| {
                let (num, den) = row
                    .iter()
                    .zip(y)
                    .fold((0.0, 0.0), |(a, b), (w, v)| (a + w * v, b + w));
                num / den
            })
            .collect()
    }
}

/// `h_j = (4 / (d + 2))^(1 / (d + 4)) * n^(-1 / (d + 4)) * sd_j`.
fn silverman_bandwidths(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len() as f64;
    let d = x.first().map_or(0, Vec::len);
    let df = d as f64;
    let factor = (4.0 / (df + 2.0)).powf(1.0 / (df + 4.0)) * n.powf(-1.0 / (df + 4.0));
    (0..d)
        .map(|j| {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let sd = (x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
            factor * sd
        })
        .collect()
}

/// Nadaraya-Watson estimate of `E[y | x]` at each query point, with a
/// Gaussian product kernel and Silverman bandwidths computed from `x`.
/// Regressors with zero spread are ignored.
pub fn nadaraya_watson(x: &[Vec<f64>], y: &[f64], queries: &[Vec<f64>]) -> Result<Vec<f64>, DimError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(DimError::InvalidArgument(format!(
            "need matching non-empty samples, got {} regressors and {} targets",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if x.iter().chain(queries).any(|r| r.len() != d) {
        return Err(DimError::InvalidArgument(
            "regressor rows differ in length".into(),
        ));
    }
    let h = silverman_bandwidths(x);
    Ok(queries
        .iter()
        .map(|q| {
            let (num, den) = x.iter().zip(y).fold((0.0, 0.0), |(a, b), (row, v)| {
                let e: f64 = (0..d)
                    .filter(|&j| h[j] > 0.0)
                    .map(|j| ((q[j] - row[j]) / h[j]).powi(2))
                    .sum();
                let w = (-0.5 * e).exp();
                (a + w * v, b + w)
            });
            num / den
        })
        .collect())
}
