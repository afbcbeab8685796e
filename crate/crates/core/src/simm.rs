//! Single-bucket SIMM-style margin: risk-weighted delta over rate pillars and
//! vega over vol pillars, each aggregated with an intra-bucket correlation
//! matrix. Parameters are illustrative and replaceable through config; they
//! are not ISDA-calibrated.

use nalgebra::DMatrix;
use serde::Deserialize;
use thiserror::Error;

use crate::rfem::PillarConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimmError {
    #[error("sensitivity vector has length {got}, configuration expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid SIMM configuration: {0}")]
    InvalidConfig(String),
}

/// Validated margin parameters for a fixed pillar layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SimmConfig {
    delta_risk_weights: Vec<f64>,
    vega_risk_weight: f64,
    delta_correlations: DMatrix<f64>,
    vega_correlations: DMatrix<f64>,
    quantile_z: f64,
}

/// On-disk form of [`SimmConfig`]. Correlation matrices may be given
/// explicitly or generated as `floor + (1 - floor) * exp(-decay * |dT|)`
/// over pillar tenors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimmSpec {
    #[serde(default)]
    pub delta_risk_weights: Option<Vec<f64>>,
    #[serde(default = "default_delta_rw")]
    pub delta_risk_weight: f64,
    #[serde(default = "default_vega_rw")]
    pub vega_risk_weight: f64,
    #[serde(default)]
    pub delta_correlations: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub vega_correlations: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_floor")]
    pub correlation_floor: f64,
    #[serde(default = "default_decay")]
    pub correlation_decay: f64,
    #[serde(default = "default_z")]
    pub quantile_z: f64,
}

fn default_delta_rw() -> f64 {
    0.005
}
fn default_vega_rw() -> f64 {
    0.01
}
fn default_floor() -> f64 {
    0.5
}
fn default_decay() -> f64 {
    0.3
}
fn default_z() -> f64 {
    2.326
}

impl Default for SimmSpec {
    fn default() -> Self {
        Self {
            delta_risk_weights: None,
            delta_risk_weight: default_delta_rw(),
            vega_risk_weight: default_vega_rw(),
            delta_correlations: None,
            vega_correlations: None,
            correlation_floor: default_floor(),
            correlation_decay: default_decay(),
            quantile_z: default_z(),
        }
    }
}

impl SimmSpec {
    pub fn resolve(&self, pillars: &PillarConfig) -> Result<SimmConfig, SimmError> {
        let rate_tenors: Vec<f64> = pillars.swap_tenors.iter().map(|&t| t as f64).collect();
        let weights = self
            .delta_risk_weights
            .clone()
            .unwrap_or_else(|| vec![self.delta_risk_weight; rate_tenors.len()]);
        let delta = match &self.delta_correlations {
            Some(rows) => matrix_from_rows(rows)?,
            None => decay_matrix(&rate_tenors, self.correlation_floor, self.correlation_decay),
        };
        let vega = match &self.vega_correlations {
            Some(rows) => matrix_from_rows(rows)?,
            None => decay_matrix(
                &pillars.vol_expiries,
                self.correlation_floor,
                self.correlation_decay,
            ),
        };
        SimmConfig::new(weights, self.vega_risk_weight, delta, vega, self.quantile_z)
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, SimmError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(SimmError::InvalidConfig(
            "correlation matrix must be square".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn decay_matrix(tenors: &[f64], floor: f64, decay: f64) -> DMatrix<f64> {
    let n = tenors.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            floor + (1.0 - floor) * (-decay * (tenors[i] - tenors[j]).abs()).exp()
        }
    })
}

fn validate_correlation(name: &str, m: &DMatrix<f64>) -> Result<(), SimmError> {
    let n = m.nrows();
    for i in 0..n {
        if m[(i, i)] != 1.0 {
            return Err(SimmError::InvalidConfig(format!(
                "{name}: diagonal entry {i} is {} (must be 1)",
                m[(i, i)]
            )));
        }
        for j in 0..n {
            let v = m[(i, j)];
            if !(-1.0..=1.0).contains(&v) {
                return Err(SimmError::InvalidConfig(format!(
                    "{name}: entry ({i},{j}) = {v} outside [-1, 1]"
                )));
            }
            if v != m[(j, i)] {
                return Err(SimmError::InvalidConfig(format!(
                    "{name}: not symmetric at ({i},{j})"
                )));
            }
        }
    }
    if n > 0 {
        let min_eig = m.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-12 {
            return Err(SimmError::InvalidConfig(format!(
                "{name}: not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
    }
    Ok(())
}

impl SimmConfig {
    pub fn new(
        delta_risk_weights: Vec<f64>,
        vega_risk_weight: f64,
        delta_correlations: DMatrix<f64>,
        vega_correlations: DMatrix<f64>,
        quantile_z: f64,
    ) -> Result<Self, SimmError> {
        if delta_risk_weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(SimmError::InvalidConfig(
                "delta risk weights must be positive".into(),
            ));
        }
        if !(vega_risk_weight > 0.0 && vega_risk_weight.is_finite()) {
            return Err(SimmError::InvalidConfig(
                "vega risk weight must be positive".into(),
            ));
        }
        if !(quantile_z > 0.0 && quantile_z.is_finite()) {
            return Err(SimmError::InvalidConfig("quantile_z must be positive".into()));
        }
        if delta_correlations.nrows() != delta_risk_weights.len() {
            return Err(SimmError::InvalidConfig(format!(
                "delta correlation matrix is {}x{}, expected {} pillars",
                delta_correlations.nrows(),
                delta_correlations.ncols(),
                delta_risk_weights.len()
            )));
        }
        validate_correlation("delta correlations", &delta_correlations)?;
        validate_correlation("vega correlations", &vega_correlations)?;
        Ok(Self {
            delta_risk_weights,
            vega_risk_weight,
            delta_correlations,
            vega_correlations,
            quantile_z,
        })
    }

    /// Illustrative defaults for a pillar layout.
    pub fn illustrative(pillars: &PillarConfig) -> Self {
        SimmSpec::default()
            .resolve(pillars)
            .expect("default SIMM parameters are valid")
    }

    pub fn rate_pillars(&self) -> usize {
        self.delta_risk_weights.len()
    }

    pub fn vol_pillars(&self) -> usize {
        self.vega_correlations.nrows()
    }

    pub fn quantile_z(&self) -> f64 {
        self.quantile_z
    }

    pub fn delta_risk_weights(&self) -> &[f64] {
        &self.delta_risk_weights
    }

    pub fn with_delta_risk_weights(&self, weights: Vec<f64>) -> Result<Self, SimmError> {
        Self::new(
            weights,
            self.vega_risk_weight,
            self.delta_correlations.clone(),
            self.vega_correlations.clone(),
            self.quantile_z,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginResult {
    pub delta_margin: f64,
    pub vega_margin: f64,
    pub total: f64,
}

/// Margin for one node's flattened sensitivities (rate pillars, then vol
/// pillars).
pub fn simm_margin(sensitivities: &[f64], config: &SimmConfig) -> Result<MarginResult, SimmError> {
    let p = config.rate_pillars();
    let q = config.vol_pillars();
    if sensitivities.len() != p + q {
        return Err(SimmError::LengthMismatch {
            expected: p + q,
            got: sensitivities.len(),
        });
    }
    let ws_delta: Vec<f64> = sensitivities[..p]
        .iter()
        .zip(&config.delta_risk_weights)
        .map(|(s, w)| s * w)
        .collect();
    let ws_vega: Vec<f64> = sensitivities[p..]
        .iter()
        .map(|s| s * config.vega_risk_weight)
        .collect();
    let delta_margin = aggregate(&ws_delta, &config.delta_correlations);
    let vega_margin = aggregate(&ws_vega, &config.vega_correlations);
    Ok(MarginResult {
        delta_margin,
        vega_margin,
        total: delta_margin + vega_margin,
    })
}

/// `sqrt(sum_k sum_l rho_kl ws_k ws_l)`, clamped at zero.
fn aggregate(ws: &[f64], rho: &DMatrix<f64>) -> f64 {
    let mut q = 0.0;
    for (k, a) in ws.iter().enumerate() {
        for (l, b) in ws.iter().enumerate() {
            q += rho[(k, l)] * a * b;
        }
    }
    q.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pillar(rho: f64, weights: [f64; 2]) -> SimmConfig {
        SimmConfig::new(
            weights.to_vec(),
            0.01,
            DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
            DMatrix::identity(1, 1),
            2.326,
        )
        .unwrap()
    }

    #[test]
    fn single_sensitivity() {
        let cfg = SimmConfig::illustrative(&PillarConfig::default());
        let mut s = vec![0.0; 7];
        s[3] = -2500.0;
        let m = simm_margin(&s, &cfg).unwrap();
        assert!((m.delta_margin - 0.005 * 2500.0).abs() < 1e-12);
        assert_eq!(m.vega_margin, 0.0);
        assert_eq!(m.total, m.delta_margin + m.vega_margin);
    }

    #[test]
    fn perfect_correlation_collapses_to_sum() {
        let cfg = two_pillar(1.0, [0.004, 0.006]);
        let m = simm_margin(&[100.0, 300.0, 0.0], &cfg).unwrap();
        assert!((m.delta_margin - (0.4 + 1.8)).abs() < 1e-12);
    }

    #[test]
    fn zero_sensitivities_give_zero() {
        let cfg = SimmConfig::illustrative(&PillarConfig::default());
        assert_eq!(simm_margin(&[0.0; 7], &cfg).unwrap().total, 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let cfg = SimmConfig::illustrative(&PillarConfig::default());
        assert_eq!(
            simm_margin(&[1.0; 6], &cfg),
            Err(SimmError::LengthMismatch { expected: 7, got: 6 })
        );
    }

    #[test]
    fn rejects_bad_correlations() {
        let bad = SimmConfig::new(
            vec![0.01; 3],
            0.01,
            DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]),
            DMatrix::identity(1, 1),
            2.326,
        );
        assert!(matches!(bad, Err(SimmError::InvalidConfig(m)) if m.contains("semidefinite")));
        let asym = SimmConfig::new(
            vec![0.01; 2],
            0.01,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]),
            DMatrix::identity(1, 1),
            2.326,
        );
        assert!(asym.is_err());
        let diag = SimmConfig::new(
            vec![0.01; 2],
            0.01,
            DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 1.0]),
            DMatrix::identity(1, 1),
            2.326,
        );
        assert!(diag.is_err());
    }

    #[test]
    fn default_matrix_is_valid_and_decays() {
        let cfg = SimmConfig::illustrative(&PillarConfig::default());
        let m = &cfg.delta_correlations;
        assert!(m[(0, 1)] > m[(0, 5)]);
        assert!(m[(0, 5)] >= 0.5);
    }

    proptest! {
        #[test]
        fn positively_homogeneous(s in prop::collection::vec(-1e5f64..1e5, 7), c in -10.0f64..10.0) {
            let cfg = SimmConfig::illustrative(&PillarConfig::default());
            let base = simm_margin(&s, &cfg).unwrap().total;
            let scaled: Vec<f64> = s.iter().map(|x| c * x).collect();
            let m = simm_margin(&scaled, &cfg).unwrap().total;
            prop_assert!((m - c.abs() * base).abs() <= 1e-10 * (1.0 + base * c.abs()));
        }

        #[test]
        fn weights_monotone(s in prop::collection::vec(-1e4f64..1e4, 3), bump in 0.0f64..0.01, k in 0usize..2) {
            let cfg = two_pillar(0.4, [0.005, 0.007]);
            let base = simm_margin(&s, &cfg).unwrap().delta_margin;
            let mut w = [0.005, 0.007];
            w[k] += bump;
            let bumped = two_pillar(0.4, w);
            let m = simm_margin(&s, &bumped).unwrap().delta_margin;
            // With opposite-sign sensitivities a larger weight can net down the
            // cross term, so monotonicity is only claimed for same-sign vectors.
            if s[0] * s[1] >= 0.0 {
                prop_assert!(m >= base - 1e-12 * (1.0 + base));
            }
        }

        #[test]
        fn permutation_invariant(s in prop::collection::vec(-1e4f64..1e4, 6)) {
            let pillars = PillarConfig { swap_tenors: vec![1, 2, 3, 5, 7], vol_expiries: vec![1.0] };
            let cfg = SimmConfig::illustrative(&pillars);
            let base = simm_margin(&s, &cfg).unwrap().total;
            let perm = [3usize, 0, 4, 1, 2];
            let rho = &cfg.delta_correlations;
            let prho = DMatrix::from_fn(5, 5, |i, j| rho[(perm[i], perm[j])]);
            let pw: Vec<f64> = perm.iter().map(|&i| cfg.delta_risk_weights[i]).collect();
            let pcfg = SimmConfig::new(pw, 0.01, prho, cfg.vega_correlations.clone(), 2.326).unwrap();
            let mut ps: Vec<f64> = perm.iter().map(|&i| s[i]).collect();
            ps.push(s[5]);
            let m = simm_margin(&ps, &pcfg).unwrap().total;
            prop_assert!((m - base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
