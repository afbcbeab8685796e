//! Risk-factor evolution: a one-factor Hull-White short rate with constant
//! mean-reversion level, an optional lognormal SABR-style volatility state,
//! and the map from model states to market risk factors (par swap rates and
//! volatility pillars).

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid simulation setup: {0}")]
    InvalidSetup(String),
    #[error("model state has {got} factors, model expects {expected}")]
    StateDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct HullWhiteParams {
    pub mean_reversion: f64,
    pub volatility: f64,
    pub initial_rate: f64,
    pub long_term_level: f64,
}

impl HullWhiteParams {
    /// `volatility = 0` is accepted and gives the deterministic limit.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.mean_reversion > 0.0 && self.mean_reversion.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "mean_reversion must be > 0, got {}",
                self.mean_reversion
            )));
        }
        if !(self.volatility >= 0.0 && self.volatility.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "volatility must be >= 0, got {}",
                self.volatility
            )));
        }
        if !(self.initial_rate.is_finite() && self.long_term_level.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "initial_rate and long_term_level must be finite".into(),
            ));
        }
        Ok(())
    }

    /// `B(tau) = (1 - exp(-kappa tau)) / kappa`.
    pub fn b(&self, tau: f64) -> f64 {
        -(-self.mean_reversion * tau).exp_m1() / self.mean_reversion
    }

    /// Zero-coupon bond price `A(tau) exp(-B(tau) r)` for time to maturity
    /// `tau` given short rate `r`.
    pub fn zero_bond(&self, r: f64, tau: f64) -> f64 {
        let k = self.mean_reversion;
        let s2 = self.volatility * self.volatility;
        let b = self.b(tau);
        let ln_a = (self.long_term_level - s2 / (2.0 * k * k)) * (b - tau) - s2 * b * b / (4.0 * k);
        (ln_a - b * r).exp()
    }

    /// Conditional mean and standard deviation of `r(t + dt)` given `r(t)`.
    pub fn transition(&self, r: f64, dt: f64) -> (f64, f64) {
        let k = self.mean_reversion;
        let decay = (-k * dt).exp();
        let mean = self.long_term_level + (r - self.long_term_level) * decay;
        let var = -self.volatility * self.volatility * (-2.0 * k * dt).exp_m1() / (2.0 * k);
        (mean, var.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SabrParams {
    pub initial_vol: f64,
    pub vol_of_vol: f64,
    pub beta: f64,
    pub correlation: f64,
}

impl SabrParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.initial_vol > 0.0 && self.initial_vol.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "initial_vol must be > 0, got {}",
                self.initial_vol
            )));
        }
        if !(self.vol_of_vol >= 0.0 && self.vol_of_vol.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "vol_of_vol must be >= 0, got {}",
                self.vol_of_vol
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ModelError::InvalidParameter(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !(self.correlation > -1.0 && self.correlation < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "correlation must lie in (-1, 1), got {}",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// Market-space layout: par swap rate tenors (whole years, annual fixed
/// coupons) followed by volatility pillars keyed by option expiry.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PillarConfig {
    pub swap_tenors: Vec<u32>,
    pub vol_expiries: Vec<f64>,
}

impl Default for PillarConfig {
    fn default() -> Self {
        Self {
            swap_tenors: vec![1, 2, 3, 5, 7, 10],
            vol_expiries: vec![1.0],
        }
    }
}

impl PillarConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.swap_tenors.is_empty() {
            return Err(ModelError::InvalidParameter(
                "at least one swap tenor is required".into(),
            ));
        }
        if self.swap_tenors[0] == 0 || self.swap_tenors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidParameter(
                "swap tenors must be positive and strictly increasing".into(),
            ));
        }
        if self.vol_expiries.iter().any(|&e| !(e > 0.0))
            || self.vol_expiries.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ModelError::InvalidParameter(
                "vol expiries must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn rate_count(&self) -> usize {
        self.swap_tenors.len()
    }

    pub fn vol_count(&self) -> usize {
        self.vol_expiries.len()
    }

    /// Length of the flattened factor list.
    pub fn factor_count(&self) -> usize {
        self.rate_count() + self.vol_count()
    }

    pub fn is_vol_factor(&self, index: usize) -> bool {
        index >= self.rate_count()
    }

    pub fn factor_label(&self, index: usize) -> String {
        if index < self.rate_count() {
            format!("swap_{}y", self.swap_tenors[index])
        } else {
            format!("vol_{}y", self.vol_expiries[index - self.rate_count()])
        }
    }
}

/// Point in model space: `[r]` or `[r, ln(vol)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub factors: Vec<f64>,
}

impl ModelState {
    pub fn rate(&self) -> f64 {
        self.factors[0]
    }
}

/// Point in market space.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub swap_rates: Vec<f64>,
    pub vols: Vec<f64>,
}

impl MarketState {
    pub fn factor_count(&self) -> usize {
        self.swap_rates.len() + self.vols.len()
    }

    /// Flattened factor `index`: swap rates first, then vols.
    pub fn factor(&self, index: usize) -> f64 {
        let p = self.swap_rates.len();
        if index < p {
            self.swap_rates[index]
        } else {
            self.vols[index - p]
        }
    }

    pub fn factor_mut(&mut self, index: usize) -> &mut f64 {
        let p = self.swap_rates.len();
        if index < p {
            &mut self.swap_rates[index]
        } else {
            &mut self.vols[index - p]
        }
    }

    pub fn with_factor(&self, index: usize, value: f64) -> Self {
        let mut s = self.clone();
        *s.factor_mut(index) = value;
        s
    }
}

/// Hull-White rates plus either a stochastic (SABR vol process) or a static
/// volatility level, together with the pillar layout that `g` maps onto.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskFactorModel {
    pub hull_white: HullWhiteParams,
    pub sabr: SabrParams,
    pub pillars: PillarConfig,
    pub stochastic_vol: bool,
}

impl RiskFactorModel {
    pub fn new(
        hull_white: HullWhiteParams,
        sabr: SabrParams,
        pillars: PillarConfig,
        stochastic_vol: bool,
    ) -> Result<Self, ModelError> {
        hull_white.validate()?;
        sabr.validate()?;
        pillars.validate()?;
        Ok(Self {
            hull_white,
            sabr,
            pillars,
            stochastic_vol,
        })
    }

    /// Model-space dimension `k`.
    pub fn model_dim(&self) -> usize {
        if self.stochastic_vol {
            2
        } else {
            1
        }
    }

    pub fn initial_state(&self) -> ModelState {
        let mut factors = vec![self.hull_white.initial_rate];
        if self.stochastic_vol {
            factors.push(self.sabr.initial_vol.ln());
        }
        ModelState { factors }
    }

    /// The map `g` from model space to market space. Rates: par swap rates
    /// with annual coupons off the Hull-White discount curve at short rate
    /// `r`. Vols: every pillar set to the current volatility level.
    pub fn g_map(&self, state: &ModelState) -> Result<MarketState, ModelError> {
        if state.factors.len() != self.model_dim() {
            return Err(ModelError::StateDimension {
                expected: self.model_dim(),
                got: state.factors.len(),
            });
        }
        let r = state.rate();
        let max_tenor = *self.pillars.swap_tenors.last().unwrap() as usize;
        let mut annuity = 0.0;
        let mut annuities = Vec::with_capacity(max_tenor);
        let mut bonds = Vec::with_capacity(max_tenor);
        for k in 1..=max_tenor {
            let p = self.hull_white.zero_bond(r, k as f64);
            annuity += p;
            annuities.push(annuity);
            bonds.push(p);
        }
        let swap_rates = self
            .pillars
            .swap_tenors
            .iter()
            .map(|&n| {
                let n = n as usize;
                (1.0 - bonds[n - 1]) / annuities[n - 1]
            })
            .collect();
        let vol = if self.stochastic_vol {
            state.factors[1].exp()
        } else {
            self.sabr.initial_vol
        };
        Ok(MarketState {
            swap_rates,
            vols: vec![vol; self.pillars.vol_count()],
        })
    }

    /// Simulates `paths` paths on `time_points` with the exact Gaussian
    /// transition for the short rate and a driftless lognormal vol.
    pub fn simulate(
        &self,
        paths: usize,
        time_points: &[f64],
        seed: u64,
    ) -> Result<ScenarioCube, ModelError> {
        self.simulate_impl(paths, time_points, seed, None)
    }

    /// As [`RiskFactorModel::simulate`], additionally stepping every node
    /// forward by `horizon` years on an independent per-path auxiliary
    /// stream. The main paths are identical to those of `simulate`.
    pub fn simulate_with_horizon(
        &self,
        paths: usize,
        time_points: &[f64],
        seed: u64,
        horizon: f64,
    ) -> Result<ScenarioCube, ModelError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ModelError::InvalidSetup(format!(
                "horizon must be > 0, got {horizon}"
            )));
        }
        self.simulate_impl(paths, time_points, seed, Some(horizon))
    }

    fn simulate_impl(
        &self,
        paths: usize,
        time_points: &[f64],
        seed: u64,
        horizon: Option<f64>,
    ) -> Result<ScenarioCube, ModelError> {
        if paths == 0 {
            return Err(ModelError::InvalidSetup("paths must be >= 1".into()));
        }
        if time_points.is_empty()
            || !(time_points[0] > 0.0)
            || time_points.windows(2).any(|w| w[0] >= w[1])
            || time_points.iter().any(|t| !t.is_finite())
        {
            return Err(ModelError::InvalidSetup(
                "time points must be finite, positive and strictly increasing".into(),
            ));
        }

        let per_path: Vec<(Vec<ModelState>, Vec<ModelState>)> = (0..paths)
            .into_par_iter()
            .map(|p| self.simulate_path(p as u64, time_points, seed, horizon))
            .collect();

        let t_count = time_points.len();
        let mut model_states = Vec::with_capacity(paths * t_count);
        let mut aux_states = Vec::with_capacity(if horizon.is_some() { paths * t_count } else { 0 });
        for t in 0..t_count {
            for (main, aux) in &per_path {
                model_states.push(main[t].clone());
                if horizon.is_some() {
                    aux_states.push(aux[t].clone());
                }
            }
        }
        let market_states = self.map_all(&model_states)?;
        let horizon_states = match horizon {
            Some(h) => {
                let market = self.map_all(&aux_states)?;
                Some(HorizonStates {
                    horizon: h,
                    model_states: aux_states,
                    market_states: market,
                })
            }
            None => None,
        };
        Ok(ScenarioCube {
            paths,
            time_points: time_points.to_vec(),
            model_states,
            market_states,
            horizon_states,
            seed,
        })
    }

    fn map_all(&self, states: &[ModelState]) -> Result<Vec<MarketState>, ModelError> {
        states.par_iter().map(|s| self.g_map(s)).collect()
    }

    fn step(&self, state: &ModelState, dt: f64, rng: &mut ChaCha8Rng) -> ModelState {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let (mean, sd) = self.hull_white.transition(state.rate(), dt);
        let mut factors = vec![mean + sd * z1];
        if self.stochastic_vol {
            let nu = self.sabr.vol_of_vol;
            let rho = self.sabr.correlation;
            let zv = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
            factors.push(state.factors[1] - 0.5 * nu * nu * dt + nu * dt.sqrt() * zv);
        }
        ModelState { factors }
    }

    fn simulate_path(
        &self,
        path: u64,
        time_points: &[f64],
        seed: u64,
        horizon: Option<f64>,
    ) -> (Vec<ModelState>, Vec<ModelState>) {
        let mut main_rng = ChaCha8Rng::seed_from_u64(seed);
        main_rng.set_stream(2 * path);
        let mut aux_rng = ChaCha8Rng::seed_from_u64(seed);
        aux_rng.set_stream(2 * path + 1);

        let mut state = self.initial_state();
        let mut t_prev = 0.0;
        let mut main = Vec::with_capacity(time_points.len());
        let mut aux = Vec::new();
        for &t in time_points {
            state = self.step(&state, t - t_prev, &mut main_rng);
            t_prev = t;
            if let Some(h) = horizon {
                aux.push(self.step(&state, h, &mut aux_rng));
            }
            main.push(state.clone());
        }
        (main, aux)
    }
}

/// States one risk horizon after every node of a cube.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonStates {
    pub horizon: f64,
    pub model_states: Vec<ModelState>,
    pub market_states: Vec<MarketState>,
}

/// Simulated model and market states, stored time-major: node `(p, t)` lives
/// at `t * paths + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCube {
    paths: usize,
    time_points: Vec<f64>,
    model_states: Vec<ModelState>,
    market_states: Vec<MarketState>,
    horizon_states: Option<HorizonStates>,
    seed: u64,
}

impl ScenarioCube {
    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn time_points(&self) -> &[f64] {
        &self.time_points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_count(&self) -> usize {
        self.model_states.len()
    }

    pub fn model_state(&self, path: usize, t: usize) -> &ModelState {
        &self.model_states[t * self.paths + path]
    }

    pub fn market_state(&self, path: usize, t: usize) -> &MarketState {
        &self.market_states[t * self.paths + path]
    }

    /// All paths' model states at time index `t`.
    pub fn model_slice(&self, t: usize) -> &[ModelState] {
        &self.model_states[t * self.paths..(t + 1) * self.paths]
    }

    pub fn market_slice(&self, t: usize) -> &[MarketState] {
        &self.market_states[t * self.paths..(t + 1) * self.paths]
    }

    pub fn horizon_states(&self) -> Option<&HorizonStates> {
        self.horizon_states.as_ref()
    }

    /// True when every market state equals `g` of its model state.
    pub fn regenerates(&self, model: &RiskFactorModel) -> bool {
        let check = |ms: &[ModelState], mk: &[MarketState]| {
            ms.iter()
                .zip(mk)
                .all(|(m, k)| model.g_map(m).map(|g| &g == k).unwrap_or(false))
        };
        check(&self.model_states, &self.market_states)
            && self
                .horizon_states
                .as_ref()
                .is_none_or(|h| check(&h.model_states, &h.market_states))
    }

    /// Debug dump: one row per node with model and market factor columns.
    pub fn write_csv<W: Write>(&self, pillars: &PillarConfig, mut out: W) -> std::io::Result<()> {
        let k = self.model_states.first().map_or(0, |s| s.factors.len());
        write!(out, "path,time,rate")?;
        if k > 1 {
            write!(out, ",log_vol")?;
        }
        for i in 0..pillars.factor_count() {
            write!(out, ",{}", pillars.factor_label(i))?;
        }
        writeln!(out)?;
        for (t, &time) in self.time_points.iter().enumerate() {
            for p in 0..self.paths {
                write!(out, "{p},{time}")?;
                for f in &self.model_state(p, t).factors {
                    write!(out, ",{f:?}")?;
                }
                let m = self.market_state(p, t);
                for i in 0..m.factor_count() {
                    write!(out, ",{:?}", m.factor(i))?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn model(sigma: f64, nu: f64, stochastic_vol: bool) -> RiskFactorModel {
        RiskFactorModel::new(
            HullWhiteParams {
                mean_reversion: 0.1,
                volatility: sigma,
                initial_rate: 0.03,
                long_term_level: 0.04,
            },
            SabrParams {
                initial_vol: 0.04,
                vol_of_vol: nu,
                beta: 0.5,
                correlation: -0.3,
            },
            PillarConfig::default(),
            stochastic_vol,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_limit() {
        let m = model(0.0, 0.0, true);
        let times = [0.5, 1.0, 2.0, 5.0];
        let cube = m.simulate(7, &times, 11).unwrap();
        for (t, &time) in times.iter().enumerate() {
            let expected = 0.04 + (0.03 - 0.04) * (-0.1 * time).exp();
            for p in 0..7 {
                let s = cube.model_state(p, t);
                assert!((s.rate() - expected).abs() < 1e-15);
                assert!((s.factors[1].exp() - 0.04).abs() < 1e-15);
                assert_eq!(s, cube.model_state(0, t));
            }
        }
    }

    #[test]
    fn same_seed_same_cube() {
        let m = model(0.01, 0.3, true);
        let a = m.simulate_with_horizon(50, &[0.25, 0.5], 3, 10.0 / 252.0).unwrap();
        let b = m.simulate_with_horizon(50, &[0.25, 0.5], 3, 10.0 / 252.0).unwrap();
        assert_eq!(a, b);
        let c = m.simulate(50, &[0.25, 0.5], 4).unwrap();
        assert_ne!(a.model_slice(0), c.model_slice(0));
    }

    #[test]
    fn horizon_does_not_perturb_main_paths() {
        let m = model(0.01, 0.3, true);
        let a = m.simulate(20, &[0.5, 1.0], 9).unwrap();
        let b = m.simulate_with_horizon(20, &[0.5, 1.0], 9, 0.04).unwrap();
        assert_eq!(a.model_slice(1), b.model_slice(1));
        assert!(b.regenerates(&m));
    }

    #[test]
    fn ou_mean_within_three_standard_errors() {
        let m = model(0.01, 0.0, false);
        let cube = m.simulate(2000, &[1.0], 2024).unwrap();
        let xs: Vec<f64> = cube.model_slice(0).iter().map(|s| s.rate()).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let exact = 0.04 + (0.03 - 0.04) * (-0.1f64).exp();
        assert!((mean - exact).abs() < 3.0 * (var / n).sqrt());
        // transition variance
        let exact_var = 0.01f64.powi(2) * (1.0 - (-0.2f64).exp()) / 0.2;
        assert!((var / exact_var - 1.0).abs() < 0.1);
    }

    #[test]
    fn b_closed_form() {
        let hw = HullWhiteParams {
            mean_reversion: 1.0,
            volatility: 0.01,
            initial_rate: 0.0,
            long_term_level: 0.0,
        };
        assert!((hw.b(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((hw.b(1.0) - 0.6321206).abs() < 1e-7);
    }

    #[test]
    fn flat_curve_gives_equal_par_rates() {
        let r = 0.035;
        let m = RiskFactorModel::new(
            HullWhiteParams {
                mean_reversion: 0.2,
                volatility: 0.0,
                initial_rate: r,
                long_term_level: r,
            },
            model(0.0, 0.0, false).sabr,
            PillarConfig::default(),
            false,
        )
        .unwrap();
        let mk = m.g_map(&ModelState { factors: vec![r] }).unwrap();
        // Brute-force bond algebra on P(k) = exp(-r k).
        for (&n, &s) in m.pillars.swap_tenors.iter().zip(&mk.swap_rates) {
            let annuity: f64 = (1..=n).map(|k| (-r * k as f64).exp()).sum();
            let par = (1.0 - (-r * n as f64).exp()) / annuity;
            assert!((s - par).abs() < 1e-14);
            assert!((s - r.exp_m1()).abs() < 1e-14);
        }
    }

    #[test]
    fn vol_pillars_are_flat() {
        let m = RiskFactorModel::new(
            model(0.0, 0.0, true).hull_white,
            model(0.0, 0.0, true).sabr,
            PillarConfig {
                swap_tenors: vec![1, 5],
                vol_expiries: vec![0.5, 1.0, 2.0],
            },
            true,
        )
        .unwrap();
        let v: f64 = 0.031;
        let mk = m.g_map(&ModelState { factors: vec![0.02, v.ln()] }).unwrap();
        assert_eq!(mk.vols.len(), 3);
        assert!(mk.vols.iter().all(|&x| (x - v).abs() < 1e-16));
    }

    #[test]
    fn par_rates_increase_in_r_and_are_smooth() {
        let m = model(0.01, 0.0, false);
        let rs: Vec<f64> = (0..=400).map(|i| -0.05 + 0.15 * i as f64 / 400.0).collect();
        let curves: Vec<Vec<f64>> = rs
            .iter()
            .map(|&r| m.g_map(&ModelState { factors: vec![r] }).unwrap().swap_rates)
            .collect();
        for w in curves.windows(2) {
            assert!(w[0].iter().zip(&w[1]).all(|(a, b)| b > a));
        }
        let h = rs[1] - rs[0];
        for i in 0..m.pillars.rate_count() {
            let d2: Vec<f64> = curves
                .windows(3)
                .map(|w| (w[2][i] - 2.0 * w[1][i] + w[0][i]) / (h * h))
                .collect();
            assert!(d2.iter().all(|x| x.is_finite() && x.abs() < 10.0));
            for w in d2.windows(2) {
                let scale = w[0].abs().max(w[1].abs()).max(1e-3);
                assert!((w[1] - w[0]).abs() < 1e3 * scale);
            }
        }
    }

    #[test]
    fn rejects_bad_setup() {
        let m = model(0.01, 0.3, true);
        assert!(m.simulate(0, &[1.0], 1).is_err());
        assert!(m.simulate(10, &[], 1).is_err());
        assert!(m.simulate(10, &[0.0, 1.0], 1).is_err());
        assert!(m.simulate(10, &[1.0, 1.0], 1).is_err());
        assert!(m.g_map(&ModelState { factors: vec![0.01] }).is_err());
        let mut hw = m.hull_white;
        hw.mean_reversion = 0.0;
        assert!(hw.validate().is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let m = model(0.01, 0.3, true);
        let cube = m.simulate(3, &[0.5, 1.0], 1).unwrap();
        let mut buf = Vec::new();
        cube.write_csv(&m.pillars, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "path,time,rate,log_vol,swap_1y,swap_2y,swap_3y,swap_5y,swap_7y,swap_10y,vol_1y"
        );
        assert_eq!(lines.count(), 6);
    }
}
