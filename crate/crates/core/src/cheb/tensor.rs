use super::{cheb_points, ChebError, HyperRectangle};

/// Tensor-product Chebyshev grid on a hyper-rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    domain: HyperRectangle,
    counts: Vec<usize>,
    points: Vec<Vec<f64>>,
}

impl ChebyshevGrid {
    pub fn new(domain: HyperRectangle, counts: &[usize]) -> Result<Self, ChebError> {
        if counts.len() != domain.dims() {
            return Err(ChebError::DimensionMismatch {
                expected: domain.dims(),
                got: counts.len(),
            });
        }
        let points = domain
            .intervals()
            .iter()
            .zip(counts)
            .map(|(iv, &c)| cheb_points(c, iv))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            domain,
            counts: counts.to_vec(),
            points,
        })
    }

    /// Same number of points in every dimension.
    pub fn uniform(domain: HyperRectangle, count: usize) -> Result<Self, ChebError> {
        let counts = vec![count; domain.dims()];
        Self::new(domain, &counts)
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    pub fn dims(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn points(&self, dim: usize) -> &[f64] {
        &self.points[dim]
    }

    /// Total node count, `prod m_i`.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the node at flat row-major `index`.
    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.dims()];
        self.write_node(index, &mut coords);
        coords
    }

    fn write_node(&self, mut index: usize, coords: &mut [f64]) {
        for d in (0..self.dims()).rev() {
            let m = self.counts[d];
            coords[d] = self.points[d][index % m];
            index /= m;
        }
    }
}

/// Sampled values of a function on a [`ChebyshevGrid`]; the unique
/// interpolating polynomial of per-dimension degree `m_i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevTensor {
    grid: ChebyshevGrid,
    values: Vec<f64>,
}

impl ChebyshevTensor {
    /// Samples `f` once per grid node in row-major order.
    pub fn build<F>(grid: ChebyshevGrid, mut f: F) -> Result<Self, ChebError>
    where
        F: FnMut(&[f64]) -> f64,
    {
        Self::try_build(grid, |x| Ok::<_, ChebError>(f(x)))
    }

    /// Like [`ChebyshevTensor::build`] but for fallible samplers. Sampling
    /// stops at the first error.
    pub fn try_build<F, E>(grid: ChebyshevGrid, mut f: F) -> Result<Self, E>
    where
        F: FnMut(&[f64]) -> Result<f64, E>,
        E: From<ChebError>,
    {
        let total = grid.len();
        let mut values = Vec::with_capacity(total);
        let mut coords = vec![0.0; grid.dims()];
        for index in 0..total {
            grid.write_node(index, &mut coords);
            let v = f(&coords)?;
            if !v.is_finite() {
                return Err(ChebError::NonFiniteValue {
                    node: coords.clone(),
                    value: v,
                }
                .into());
            }
            values.push(v);
        }
        Ok(Self { grid, values })
    }

    /// Wraps precomputed row-major values.
    pub fn from_values(grid: ChebyshevGrid, values: Vec<f64>) -> Result<Self, ChebError> {
        if values.len() != grid.len() {
            return Err(ChebError::InvalidArgument(format!(
                "grid has {} nodes but {} values were supplied",
                grid.len(),
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ChebError::NonFiniteValue {
                node: grid.node(i),
                value: *v,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &ChebyshevGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    /// One-dimensional barycentric evaluation.
    pub fn eval_1d(&self, x: f64) -> Result<f64, ChebError> {
        if self.dims() != 1 {
            return Err(ChebError::DimensionMismatch {
                expected: self.dims(),
                got: 1,
            });
        }
        self.eval(&[x])
    }

    /// Evaluates the interpolant at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, ChebError> {
        let mut calls = 0;
        self.eval_impl(point, &mut calls)
    }

    /// Evaluates and also reports how many one-dimensional barycentric
    /// formula applications the dimension reduction performed.
    pub fn eval_counted(&self, point: &[f64]) -> Result<(f64, u64), ChebError> {
        let mut calls = 0;
        let v = self.eval_impl(point, &mut calls)?;
        Ok((v, calls))
    }

    fn eval_impl(&self, point: &[f64], calls: &mut u64) -> Result<f64, ChebError> {
        let dims = self.dims();
        if point.len() != dims {
            return Err(ChebError::DimensionMismatch {
                expected: dims,
                got: point.len(),
            });
        }
        for (dim, (&x, iv)) in point
            .iter()
            .zip(self.grid.domain.intervals())
            .enumerate()
        {
            if !iv.contains(x) {
                return Err(ChebError::OutOfDomain {
                    dim,
                    value: x,
                    lo: iv.lo(),
                    hi: iv.hi(),
                });
            }
        }

        // Collapse dimension 0 first: every line along it is a 1-D
        // interpolant evaluated at point[0], leaving a tensor over the
        // remaining dimensions.
        let mut current: Vec<f64> = Vec::new();
        for (dim, &x) in point.iter().enumerate() {
            let source: &[f64] = if dim == 0 { &self.values } else { &current };
            let m = self.grid.counts[dim];
            let rest = source.len() / m;
            let mut reduced = vec![0.0; rest];
            Kernel::new(&self.grid.points[dim], x).apply_strided(source, rest, &mut reduced);
            *calls += rest as u64;
            current = reduced;
        }
        Ok(current[0])
    }
}

/// Precomputed barycentric coefficients for one coordinate.
enum Kernel {
    Node(usize),
    Weights { coeffs: Vec<f64>, denom: f64 },
}

impl Kernel {
    fn new(points: &[f64], x: f64) -> Self {
        if let Some(i) = points.iter().position(|&p| p == x) {
            return Kernel::Node(i);
        }
        let last = points.len() - 1;
        let coeffs: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let w = if i == 0 || i == last { 0.5 * sign } else { sign };
                w / (x - p)
            })
            .collect();
        let denom = coeffs.iter().sum();
        Kernel::Weights { coeffs, denom }
    }

    /// For each of `rest` interleaved lines in `values` (line `r` is
    /// `values[j * rest + r]`), writes the interpolated value into `out[r]`.
    fn apply_strided(&self, values: &[f64], rest: usize, out: &mut [f64]) {
        match self {
            Kernel::Node(i) => out.copy_from_slice(&values[i * rest..(i + 1) * rest]),
            // Written relative to the first line's value: identical to the
            // plain quotient in exact arithmetic, and exact for constants.
            Kernel::Weights { coeffs, denom } => {
                let base = &values[..rest];
                for (j, c) in coeffs.iter().enumerate().skip(1) {
                    let row = &values[j * rest..(j + 1) * rest];
                    for ((o, v), b) in out.iter_mut().zip(row).zip(base) {
                        *o += c * (v - b);
                    }
                }
                for (o, b) in out.iter_mut().zip(base) {
                    *o = b + *o / denom;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::Interval;

    fn canonical_grid(dims: usize, count: usize) -> ChebyshevGrid {
        ChebyshevGrid::uniform(HyperRectangle::canonical(dims).unwrap(), count).unwrap()
    }

    #[test]
    fn constant_function_gives_constant_values() {
        let t = ChebyshevTensor::build(canonical_grid(2, 4), |_| 7.0).unwrap();
        assert!(t.values().iter().all(|&v| v == 7.0));
        assert_eq!(t.eval(&[0.3, -0.9]).unwrap(), 7.0);
    }

    #[test]
    fn identity_sampled_at_nodes() {
        let t = ChebyshevTensor::build(canonical_grid(1, 3), |x| x[0]).unwrap();
        assert_eq!(t.values(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn product_sampled_row_major() {
        let g = canonical_grid(2, 3);
        let t = ChebyshevTensor::build(g, |x| x[0] * x[1]).unwrap();
        let pts = [1.0, 0.0, -1.0];
        let mut expected = Vec::new();
        for x in pts {
            for y in pts {
                expected.push(x * y);
            }
        }
        assert_eq!(t.values(), expected.as_slice());
    }

    #[test]
    fn build_calls_f_once_per_node() {
        let g = ChebyshevGrid::new(HyperRectangle::canonical(3).unwrap(), &[3, 4, 5]).unwrap();
        let mut calls = 0;
        ChebyshevTensor::build(g, |_| {
            calls += 1;
            1.0
        })
        .unwrap();
        assert_eq!(calls, 60);
    }

    #[test]
    fn non_finite_sample_names_node() {
        let err = ChebyshevTensor::build(canonical_grid(1, 3), |x| 1.0 / x[0]).unwrap_err();
        match err {
            ChebError::NonFiniteValue { node, value } => {
                assert_eq!(node, vec![0.0]);
                assert!(value.is_infinite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eval_1d_examples() {
        let sq = ChebyshevTensor::build(canonical_grid(1, 3), |x| x[0] * x[0]).unwrap();
        assert_eq!(sq.eval_1d(0.0).unwrap(), 0.0);
        let c = ChebyshevTensor::build(canonical_grid(1, 6), |_| 3.0).unwrap();
        assert_eq!(c.eval_1d(0.123).unwrap(), 3.0);
        let cube = ChebyshevTensor::build(canonical_grid(1, 4), |x| x[0].powi(3)).unwrap();
        assert!((cube.eval_1d(0.5).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn eval_nd_examples() {
        let t = ChebyshevTensor::build(canonical_grid(2, 3), |x| x[0] * x[1]).unwrap();
        assert!((t.eval(&[0.5, -0.5]).unwrap() + 0.25).abs() < 1e-15);
        let s = ChebyshevTensor::build(canonical_grid(3, 2), |x| x[0] + x[1] + x[2]).unwrap();
        assert!(s.eval(&[0.0, 0.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn out_of_domain_and_dimension_errors() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        let g = ChebyshevGrid::uniform(iv.into(), 5).unwrap();
        let t = ChebyshevTensor::build(g, |x| x[0]).unwrap();
        assert!(matches!(
            t.eval_1d(2.0000001),
            Err(ChebError::OutOfDomain { dim: 0, .. })
        ));
        assert!(matches!(t.eval_1d(f64::NAN), Err(ChebError::OutOfDomain { .. })));
        assert!(matches!(
            t.eval(&[1.0, 1.0]),
            Err(ChebError::DimensionMismatch { expected: 1, got: 2 })
        ));
        let t2 = ChebyshevTensor::build(canonical_grid(2, 3), |x| x[0]).unwrap();
        assert!(matches!(
            t2.eval(&[0.0, 1.5]),
            Err(ChebError::OutOfDomain { dim: 1, .. })
        ));
        assert!(t2.eval_1d(0.0).is_err());
    }

    #[test]
    fn barycentric_call_count_law() {
        for (dims, m) in [(1, 7), (2, 5), (3, 10), (4, 3)] {
            let t = ChebyshevTensor::build(canonical_grid(dims, m), |x| x.iter().sum()).unwrap();
            let point = vec![0.123; dims];
            let (_, calls) = t.eval_counted(&point).unwrap();
            let expected: u64 = (0..dims as u32).map(|j| (m as u64).pow(j)).sum();
            assert_eq!(calls, expected);
        }
    }

    #[test]
    fn from_values_checks_length() {
        let g = canonical_grid(2, 3);
        assert!(ChebyshevTensor::from_values(g.clone(), vec![0.0; 8]).is_err());
        assert!(ChebyshevTensor::from_values(g, vec![0.0; 9]).is_ok());
    }
}
