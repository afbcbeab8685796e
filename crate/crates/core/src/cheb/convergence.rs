use super::{ChebError, ChebyshevGrid, ChebyshevTensor, HyperRectangle};

/// Empirical convergence of Chebyshev interpolation for a fixed function.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub counts_tried: Vec<usize>,
    /// Sup-norm error over the probe set, one per entry of `counts_tried`.
    pub max_abs_errors: Vec<f64>,
    /// `rho` in `error ~ C * rho^(-count)`, from a least-squares line through
    /// `(count, ln error)`. Infinite when fewer than two errors are nonzero.
    pub fitted_decay_rate: f64,
    /// `ln C` of the same fit.
    pub fitted_log_intercept: f64,
    /// Coefficient of determination of the log-linear fit.
    pub fit_r_squared: f64,
}

/// Builds tensors with `counts[k]` points in every dimension and measures the
/// sup-norm error on an equispaced probe lattice of about `probe_count`
/// points (never fewer than `probe_count` per dimension in 1-D).
pub fn convergence_study<F>(
    f: F,
    domain: &HyperRectangle,
    counts: &[usize],
    probe_count: usize,
) -> Result<ConvergenceReport, ChebError>
where
    F: Fn(&[f64]) -> f64,
{
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ChebError::InvalidArgument(
            "counts must be non-empty and strictly increasing".into(),
        ));
    }
    if probe_count < 100 {
        return Err(ChebError::InvalidArgument(format!(
            "probe_count must be at least 100, got {probe_count}"
        )));
    }

    let probes = probe_lattice(domain, probe_count);
    let exact: Vec<f64> = probes.iter().map(|p| f(p)).collect();

    let mut max_abs_errors = Vec::with_capacity(counts.len());
    for &count in counts {
        let grid = ChebyshevGrid::uniform(domain.clone(), count)?;
        let tensor = ChebyshevTensor::build(grid, &f)?;
        let mut worst = 0.0_f64;
        for (p, e) in probes.iter().zip(&exact) {
            worst = worst.max((tensor.eval(p)? - e).abs());
        }
        max_abs_errors.push(worst);
    }

    let (rate, intercept, r2) = fit_geometric_decay(counts, &max_abs_errors);
    Ok(ConvergenceReport {
        counts_tried: counts.to_vec(),
        max_abs_errors,
        fitted_decay_rate: rate,
        fitted_log_intercept: intercept,
        fit_r_squared: r2,
    })
}

fn probe_lattice(domain: &HyperRectangle, probe_count: usize) -> Vec<Vec<f64>> {
    let dims = domain.dims();
    let per_dim = ((probe_count as f64).powf(1.0 / dims as f64).ceil() as usize).max(3);
    let axes: Vec<Vec<f64>> = domain
        .intervals()
        .iter()
        .map(|iv| {
            (0..per_dim)
                .map(|k| {
                    if k + 1 == per_dim {
                        iv.hi()
                    } else {
                        iv.lo() + (iv.hi() - iv.lo()) * k as f64 / (per_dim - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let total = per_dim.pow(dims as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; dims];
            for d in (0..dims).rev() {
                p[d] = axes[d][idx % per_dim];
                idx /= per_dim;
            }
            p
        })
        .collect()
}

/// Least squares of `ln e` on `n` over the strictly positive errors.
/// Returns `(rho, ln C, r^2)` with `e ~ C rho^-n`.
fn fit_geometric_decay(counts: &[usize], errors: &[f64]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&n, &e)| (n as f64, e.ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::INFINITY, f64::NEG_INFINITY, f64::NAN);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    ((-slope).exp(), intercept, r2)
}
