use std::fmt;

use super::{DimError, DimSurface, Method};

/// Which profile statistic an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileKind {
    Eim,
    Q95,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 2] = [ProfileKind::Eim, ProfileKind::Q95];

    pub fn label(self) -> &'static str {
        match self {
            ProfileKind::Eim => "eim",
            ProfileKind::Q95 => "q95",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == label)
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Expected IM and 95th-percentile IM per time point.
#[derive(Debug, Clone, PartialEq)]
pub struct DimProfile {
    pub method: Method,
    pub time_points: Vec<f64>,
    pub eim: Vec<f64>,
    pub q95: Vec<f64>,
}

impl DimProfile {
    pub fn get(&self, kind: ProfileKind) -> &[f64] {
        match kind {
            ProfileKind::Eim => &self.eim,
            ProfileKind::Q95 => &self.q95,
        }
    }
}

/// Mean and 95th percentile of the IM across paths at each time point.
/// The percentile interpolates linearly between order statistics at
/// position `0.95 * (n - 1)`.
pub fn profiles(surface: &DimSurface) -> DimProfile {
    let (mut eim, mut q95) = (Vec::new(), Vec::new());
    for t in 0..surface.time_points.len() {
        let values = surface.slice(t);
        eim.push(mean(values));
        q95.push(quantile(values, 0.95));
    }
    DimProfile {
        method: surface.method,
        time_points: surface.time_points.clone(),
        eim,
        q95,
    }
}

/// Arithmetic mean accumulated relative to the first value, so a constant
/// sample returns that constant exactly.
fn mean(values: &[f64]) -> f64 {
    let base = values[0];
    base + values.iter().map(|v| v - base).sum::<f64>() / values.len() as f64
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Mean relative deviation of a profile from its benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileError {
    pub value: f64,
    /// Time points excluded because the benchmark was numerically zero.
    pub skipped: usize,
    pub used: usize,
}

/// `mean_t |pbm_t - palt_t| / pbm_t` over time points where the benchmark
/// exceeds `1e-12 * max(pbm)`; the others are skipped and counted.
pub fn profile_error(benchmark: &[f64], alternative: &[f64]) -> Result<ProfileError, DimError> {
    if benchmark.len() != alternative.len() {
        return Err(DimError::InvalidArgument(format!(
            "profiles have {} and {} time points",
            benchmark.len(),
            alternative.len()
        )));
    }
    let eps = 1e-12 * benchmark.iter().fold(0.0f64, |a, &b| a.max(b));
    let (mut total, mut used) = (0.0, 0usize);
    for (&b, &a) in benchmark.iter().zip(alternative) {
        if b > eps {
            total += (b - a).abs() / b;
            used += 1;
        }
    }
    if used == 0 {
        return Err(DimError::UndefinedMetric);
    }
    Ok(ProfileError {
        value: total / used as f64,
        skipped: benchmark.len() - used,
        used,
    })
}
