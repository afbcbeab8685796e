use rayon::prelude::*;

use super::call_counts::mesh_for;
use super::{finish_sensitivity_method, DimError, DimInputs, DimResult, Method};
use crate::cheb::{ChebyshevGrid, ChebyshevTensor, HyperRectangle, Interval};
use crate::pricers::CallCounter;
use crate::rfem::ModelState;

/// Per-dimension minimum, maximum and the dimensions whose range is not a
/// single value.
pub(crate) fn active_dims(states: &[ModelState]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let k = states.first().map_or(0, |s| s.factors.len());
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for s in states {
        for (d, &x) in s.factors.iter().enumerate() {
            lo[d] = lo[d].min(x);
            hi[d] = hi[d].max(x);
        }
    }
    let active = (0..k).filter(|&d| lo[d] < hi[d]).collect();
    (lo, hi, active)
}

/// A per-factor sensitivity approximation over one time slice of model space.
enum SliceApprox {
    /// Every path shares the same model state.
    Constant(f64),
    /// Tensor over the active dimensions.
    Tensor(ChebyshevTensor),
}

/// DIM from Chebyshev tensors on model space. At each time point and for
/// each market factor `i`, a tensor of `x -> S_i(g(x))` is built over the
/// box spanned by the simulated model states and evaluated at every path.
///
/// `mesh` gives the number of Chebyshev points per model dimension; a single
/// entry applies to every dimension. Dimensions whose simulated range is a
/// single value are not gridded and contribute one sample.
pub fn cheb_model_space_dim(inputs: &DimInputs<'_>, mesh: &[usize]) -> Result<DimResult, DimError> {
    inputs.check()?;
    let k = inputs.model.model_dim();
    if mesh.is_empty() || (mesh.len() != 1 && mesh.len() != k) {
        return Err(DimError::InvalidArgument(format!(
            "model-space mesh needs 1 or {k} entries, got {}",
            mesh.len()
        )));
    }
    if mesh.iter().any(|&n| n < 2) {
        return Err(DimError::InvalidArgument(
            "model-space mesh sizes must be at least 2".into(),
        ));
    }

    let cube = inputs.cube;
    let l = inputs.factor_count();
    let m = cube.paths();
    let counter = CallCounter::new(Method::ChebModelSpace.label());
    let jobs: Vec<(usize, usize)> = (0..cube.time_points().len())
        .flat_map(|t| (0..l).map(move |i| (t, i)))
        .collect();

    // One column of sensitivities (one per path) for every (time, factor).
    let columns = jobs
        .par_iter()
        .map(|&(t, i)| -> Result<Vec<f64>, DimError> {
            let states = cube.model_slice(t);
            let (lo, hi, active) = active_dims(states);
            let time = cube.time_points()[t];
            let request = inputs.bumps.request(&inputs.pricer.pillars, i);
            let phi = |x: &[f64]| -> Result<f64, DimError> {
                let market = inputs.model.g_map(&ModelState { factors: x.to_vec() })?;
                Ok(inputs
                    .pricer
                    .fd_sensitivity(inputs.trade, &market, time, request, &counter)?)
            };
            let approx = build_slice(&lo, &hi, &active, mesh, phi)?;
            states
                .iter()
                .map(|s| match &approx {
                    SliceApprox::Constant(v) => Ok(*v),
                    SliceApprox::Tensor(tensor) => {
                        let point: Vec<f64> = active.iter().map(|&d| s.factors[d]).collect();
                        Ok(tensor.eval(&point)?)
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut values = vec![0.0; cube.node_count() * l];
    for (&(t, i), column) in jobs.iter().zip(&columns) {
        for (p, &v) in column.iter().enumerate() {
            values[(t * m + p) * l + i] = v;
        }
    }
    finish_sensitivity_method(Method::ChebModelSpace, inputs, values, counter.get())
}

fn build_slice(
    lo: &[f64],
    hi: &[f64],
    active: &[usize],
    mesh: &[usize],
    mut phi: impl FnMut(&[f64]) -> Result<f64, DimError>,
) -> Result<SliceApprox, DimError> {
    if active.is_empty() {
        return Ok(SliceApprox::Constant(phi(lo)?));
    }
    let domain = HyperRectangle::new(
        active
            .iter()
            .map(|&d| Interval::new(lo[d], hi[d]))
            .collect::<Result<Vec<_>, _>>()?,
    )?;
    let counts: Vec<usize> = active.iter().map(|&d| mesh_for(mesh, d)).collect();
    let grid = ChebyshevGrid::new(domain, &counts)?;
    let mut full = lo.to_vec();
    let tensor = ChebyshevTensor::try_build(grid, |x: &[f64]| {
        for (&d, &v) in active.iter().zip(x) {
            full[d] = v;
        }
        phi(&full)
    })?;
    Ok(SliceApprox::Tensor(tensor))
}

/// Evaluates the approximation a run would build for an arbitrary `f`.
#[cfg(test)]
pub(crate) fn model_space_value(
    states: &[ModelState],
    mesh: &[usize],
    f: impl Fn(&ModelState) -> f64,
    at: &ModelState,
) -> f64 {
    let (lo, hi, active) = active_dims(states);
    match build_slice(&lo, &hi, &active, mesh, |x| {
        Ok(f(&ModelState { factors: x.to_vec() }))
    })
    .unwrap()
    {
        SliceApprox::Constant(v) => v,
        SliceApprox::Tensor(t) => {
            let point: Vec<f64> = active.iter().map(|&d| at.factors[d]).collect();
            t.eval(&point).unwrap()
        }
    }
}
