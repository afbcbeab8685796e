//! Chebyshev grids, tensors and barycentric evaluation in one and many
//! dimensions.
//!
//! Point ordering is fixed crate-wide: index `j = 0..n` maps to
//! `cos(j*pi/n)`, so points run from the upper end of an interval down to
//! the lower end. Tensor values are stored row-major over the dimensions in
//! declared order (the last dimension varies fastest).

mod convergence;
mod io;
mod tensor;

pub use convergence::{convergence_study, ConvergenceReport};
pub use io::{read_tensor, write_tensor};
pub use tensor::{ChebyshevGrid, ChebyshevTensor};

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChebError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("coordinate {value} in dimension {dim} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at grid node {node:?}")]
    NonFiniteValue { node: Vec<f64>, value: f64 },
    #[error("malformed tensor file: {0}")]
    Parse(String),
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ChebError> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(ChebError::DegenerateInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Affine image of a canonical coordinate `u` in `[-1, 1]`.
    pub fn from_canonical(&self, u: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * u
    }

    /// Pull-back of `x` to the canonical interval `[-1, 1]`.
    pub fn to_canonical(&self, x: f64) -> f64 {
        (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo)
    }
}

/// Cartesian product of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperRectangle {
    intervals: Vec<Interval>,
}

impl HyperRectangle {
    pub fn new(intervals: Vec<Interval>) -> Result<Self, ChebError> {
        if intervals.is_empty() {
            return Err(ChebError::InvalidArgument(
                "a hyper-rectangle needs at least one interval".into(),
            ));
        }
        Ok(Self { intervals })
    }

    /// `[-1, 1]^dims`.
    pub fn canonical(dims: usize) -> Result<Self, ChebError> {
        Self::new(vec![Interval { lo: -1.0, hi: 1.0 }; dims])
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }
}

impl From<Interval> for HyperRectangle {
    fn from(interval: Interval) -> Self {
        Self {
            intervals: vec![interval],
        }
    }
}

/// Chebyshev points of the second kind on `domain`, ordered `j = 0..count-1`
/// (descending). The canonical points are computed as
/// `sin(pi*(n-2j)/(2n))`, which equals `cos(j*pi/n)` but is exactly
/// antisymmetric about the midpoint; the two endpoints are pinned to the
/// interval bounds.
pub fn cheb_points(count: usize, domain: &Interval) -> Result<Vec<f64>, ChebError> {
    if count < 2 {
        return Err(ChebError::InvalidArgument(format!(
            "at least 2 Chebyshev points are required, got {count}"
        )));
    }
    let n = (count - 1) as f64;
    let last = count - 1;
    Ok((0..count)
        .map(|j| {
            if j == 0 {
                domain.hi
            } else if j == last {
                domain.lo
            } else {
                let u = (PI * (n - 2.0 * j as f64) / (2.0 * n)).sin();
                domain.from_canonical(u)
            }
        })
        .collect())
}
