use rayon::prelude::*;

use super::{finish_sensitivity_method, DimError, DimInputs, DimResult, Method};
use crate::cheb::{ChebyshevGrid, ChebyshevTensor, Interval};
use crate::pricers::CallCounter;
use crate::rfem::MarketState;

pub(crate) fn slice_is_degenerate(states: &[MarketState], factor: usize) -> bool {
    let first = states[0].factor(factor);
    states.iter().all(|s| s.factor(factor) == first)
}

/// The simulated market states at one time point, ordered by one factor.
/// Provides the interpolating curve `h(s)` that sweeps that factor across
/// its simulated range while the other factors follow the neighbouring
/// simulated curves.
#[derive(Debug, Clone)]
pub struct MarketSpaceSlice<'a> {
    factor: usize,
    /// `(value of factor, path index)`, sorted by value then path.
    entries: Vec<(f64, usize)>,
    states: &'a [MarketState],
}

impl<'a> MarketSpaceSlice<'a> {
    pub fn new(states: &'a [MarketState], factor: usize) -> Result<Self, DimError> {
        let first = states
            .first()
            .ok_or_else(|| DimError::InvalidArgument("empty market slice".into()))?;
        if factor >= first.factor_count() {
            return Err(DimError::InvalidArgument(format!(
                "factor {factor} out of range for {} factors",
                first.factor_count()
            )));
        }
        let mut entries: Vec<(f64, usize)> = states
            .iter()
            .enumerate()
            .map(|(p, s)| (s.factor(factor), p))
            .collect();
        if entries.iter().any(|e| !e.0.is_finite()) {
            return Err(DimError::InvalidArgument(format!(
                "non-finite value of factor {factor} in market slice"
            )));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(Self {
            factor,
            entries,
            states,
        })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn min(&self) -> f64 {
        self.entries[0].0
    }

    pub fn max(&self) -> f64 {
        self.entries[self.entries.len() - 1].0
    }

    pub fn is_degenerate(&self) -> bool {
        self.min() == self.max()
    }

    /// The market state with factor `i` equal to `s`. With `a1` the greatest
    /// simulated value `<= s` and `a2` the smallest `>= s` (the lowest path
    /// index wins ties), every other factor is linearly interpolated between
    /// the two paths' states. When `s` is itself a simulated value, that
    /// path's state is returned with factor `i` set to `s`.
    pub fn build_h(&self, s: f64) -> Result<MarketState, DimError> {
        if !(s >= self.min() && s <= self.max()) {
            return Err(DimError::InvalidArgument(format!(
                "value {s} outside simulated range [{}, {}] of factor {}",
                self.min(),
                self.max(),
                self.factor
            )));
        }
        let upper = self.entries.partition_point(|e| e.0 < s);
        let (a2, p2) = self.entries[upper];
        if a2 == s {
            return Ok(self.states[p2].with_factor(self.factor, s));
        }
        // Last entry <= s, then the first entry sharing its value.
        let mut lower = self.entries.partition_point(|e| e.0 <= s) - 1;
        let a1 = self.entries[lower].0;
        while lower > 0 && self.entries[lower - 1].0 == a1 {
            lower -= 1;
        }
        let p1 = self.entries[lower].1;
        let w = (s - a1) / (a2 - a1);
        let (lo, hi) = (&self.states[p1], &self.states[p2]);
        let mut out = lo.clone();
        for j in 0..out.factor_count() {
            let (b1, b2) = (lo.factor(j), hi.factor(j));
            *out.factor_mut(j) = b1 + w * (b2 - b1);
        }
        *out.factor_mut(self.factor) = s;
        Ok(out)
    }
}

/// DIM from 1-D Chebyshev tensors on market space. At each time point and
/// for each factor `i`, a tensor of `s -> S_i(h_i(s))` with `mesh` points is
/// built over the simulated range of factor `i` and evaluated at each
/// path's own value of that factor. A factor that takes a single value
/// across paths is sampled once.
pub fn cheb_market_space_dim(inputs: &DimInputs<'_>, mesh: usize) -> Result<DimResult, DimError> {
    inputs.check()?;
    if mesh < 2 {
        return Err(DimError::InvalidArgument(
            "market-space mesh must be at least 2".into(),
        ));
    }
    let cube = inputs.cube;
    let l = inputs.factor_count();
    let m = cube.paths();
    let counter = CallCounter::new(Method::ChebMarketSpace.label());
    let jobs: Vec<(usize, usize)> = (0..cube.time_points().len())
        .flat_map(|t| (0..l).map(move |i| (t, i)))
        .collect();

    let columns = jobs
        .par_iter()
        .map(|&(t, i)| -> Result<Vec<f64>, DimError> {
            let states = cube.market_slice(t);
            let slice = MarketSpaceSlice::new(states, i)?;
            let time = cube.time_points()[t];
            let request = inputs.bumps.request(&inputs.pricer.pillars, i);
            let psi = |s: f64| -> Result<f64, DimError> {
                let market = slice.build_h(s)?;
                Ok(inputs
                    .pricer
                    .fd_sensitivity(inputs.trade, &market, time, request, &counter)?)
            };
            if slice.is_degenerate() {
                let v = psi(slice.min())?;
                return Ok(vec![v; m]);
            }
            let grid = ChebyshevGrid::new(Interval::new(slice.min(), slice.max())?.into(), &[mesh])?;
            let tensor = ChebyshevTensor::try_build(grid, |x: &[f64]| psi(x[0]))?;
            states
                .iter()
                .map(|s| Ok(tensor.eval_1d(s.factor(i))?))
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut values = vec![0.0; cube.node_count() * l];
    for (&(t, i), column) in jobs.iter().zip(&columns) {
        for (p, &v) in column.iter().enumerate() {
            values[(t * m + p) * l + i] = v;
        }
    }
    finish_sensitivity_method(Method::ChebMarketSpace, inputs, values, counter.get())
}
