//! TOML run configuration.
//!
//! ```toml
//! [simulation]
//! paths = 1000
//! time_points = [0.5, 1.5, 2.5]
//! seed = 20240607
//! horizon_days = 10          # risk horizon for the regression PnL, in 252-day years
//! threads = 4                # optional; default uses every core
//!
//! [hull_white]
//! mean_reversion = 0.1
//! volatility = 0.01
//! initial_rate = 0.035
//! long_term_level = 0.04
//!
//! [sabr]
//! initial_vol = 0.04
//! vol_of_vol = 0.3
//! beta = 0.5
//! correlation = -0.3
//!
//! [market]
//! swap_tenors = [1, 2, 3, 5, 7, 10]
//! vol_expiries = [1.0]
//! stochastic_vol = false
//!
//! [[trades]]
//! name = "swap_10y"
//! type = "swap"
//! notional = 1_000_000.0
//! fixed_rate = "par"         # or a number
//! maturity = 10
//! direction = "payer"
//!
//! [[trades]]
//! name = "swaption_atm"
//! type = "swaption"
//! notional = 1_000_000.0
//! expiry = 1.0
//! underlying_tenor = 5
//! direction = "payer"
//! moneyness = "ATM"          # ATM / ITM / OTM, or give `strike` directly
//!
//! [methods]
//! run = ["brute_force", "cheb_model_space", "cheb_market_space",
//!        "regression_polynomial", "regression_nadaraya_watson"]
//! model_space_mesh = [5]
//! market_space_mesh = 10
//! polynomial_degree = 2
//! compute_errors = true
//!
//! [bumps]
//! rate = 1e-4
//! vol = 1e-3
//!
//! [simm]
//! file = "simm_default.toml" # relative to this file; or give the fields inline
//!
//! [output]
//! dir = "out/swap"           # relative to the working directory
//! record_wall_time = true
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::HarnessError;
use crate::dim::Method;
use crate::pricers::{BumpConfig, Direction, Moneyness};
use crate::rfem::{HullWhiteParams, PillarConfig, SabrParams};
use crate::simm::SimmSpec;

/// Strike offset of ITM/OTM swaptions, relative to the ATM forward.
pub const MONEYNESS_OFFSET: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub hull_white: HullWhiteParams,
    pub sabr: SabrParams,
    #[serde(default)]
    pub market: MarketConfig,
    pub trades: Vec<TradeConfig>,
    #[serde(default)]
    pub methods: MethodsConfig,
    #[serde(default)]
    pub bumps: BumpConfig,
    #[serde(default)]
    pub simm: Option<toml::Table>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths inside the config resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub paths: usize,
    pub time_points: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_horizon_days")]
    pub horizon_days: f64,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_horizon_days() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    #[serde(default = "default_swap_tenors")]
    pub swap_tenors: Vec<u32>,
    #[serde(default = "default_vol_expiries")]
    pub vol_expiries: Vec<f64>,
    #[serde(default)]
    pub stochastic_vol: bool,
}

fn default_swap_tenors() -> Vec<u32> {
    PillarConfig::default().swap_tenors
}

fn default_vol_expiries() -> Vec<f64> {
    PillarConfig::default().vol_expiries
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            swap_tenors: default_swap_tenors(),
            vol_expiries: default_vol_expiries(),
            stochastic_vol: false,
        }
    }
}

impl MarketConfig {
    pub fn pillars(&self) -> PillarConfig {
        PillarConfig {
            swap_tenors: self.swap_tenors.clone(),
            vol_expiries: self.vol_expiries.clone(),
        }
    }
}

/// A fixed rate given as a number or as `"par"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FixedRate {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TradeConfig {
    Swap {
        name: String,
        notional: f64,
        fixed_rate: FixedRate,
        maturity: u32,
        direction: Direction,
    },
    Swaption {
        name: String,
        notional: f64,
        expiry: f64,
        underlying_tenor: u32,
        direction: Direction,
        #[serde(default)]
        strike: Option<f64>,
        #[serde(default)]
        moneyness: Option<Moneyness>,
    },
}

impl TradeConfig {
    pub fn name(&self) -> &str {
        match self {
            TradeConfig::Swap { name, .. } | TradeConfig::Swaption { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsConfig {
    #[serde(default = "default_methods")]
    pub run: Vec<String>,
    #[serde(default = "default_model_mesh")]
    pub model_space_mesh: Vec<usize>,
    #[serde(default = "default_market_mesh")]
    pub market_space_mesh: usize,
    #[serde(default = "default_degree")]
    pub polynomial_degree: usize,
    /// Compare every method against brute force; requires brute force.
    #[serde(default = "default_true")]
    pub compute_errors: bool,
}

fn default_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.label().to_string()).collect()
}

fn default_model_mesh() -> Vec<usize> {
    vec![5]
}

fn default_market_mesh() -> usize {
    10
}

fn default_degree() -> usize {
    2
}

fn default_true() -> bool {
    true
}

impl Default for MethodsConfig {
    fn default() -> Self {
        Self {
            run: default_methods(),
            model_space_mesh: default_model_mesh(),
            market_space_mesh: default_market_mesh(),
            polynomial_degree: default_degree(),
            compute_errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// When false, wall times are written as 0 so outputs are reproducible
    /// byte for byte.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            record_wall_time: true,
        }
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub methods: Option<Vec<String>>,
    pub threads: Option<usize>,
    pub record_wall_time: Option<bool>,
}

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.simulation.seed = seed;
        }
        if let Some(paths) = o.paths {
            self.simulation.paths = paths;
        }
        if let Some(dir) = &o.out_dir {
            self.output.dir = dir.clone();
        }
        if let Some(methods) = &o.methods {
            self.methods.run = methods.clone();
        }
        if let Some(threads) = o.threads {
            self.simulation.threads = Some(threads);
        }
        if let Some(flag) = o.record_wall_time {
            self.output.record_wall_time = flag;
        }
    }

    /// Requested methods in canonical order, without duplicates.
    pub fn methods(&self) -> Result<Vec<Method>, HarnessError> {
        let mut set = BTreeSet::new();
        for label in &self.methods.run {
            let m = Method::from_label(label).ok_or_else(|| {
                invalid(
                    "methods.run",
                    format!(
                        "unknown method {label:?}; expected one of {}",
                        Method::ALL.map(Method::label).join(", ")
                    ),
                )
            })?;
            set.insert(m);
        }
        Ok(set.into_iter().collect())
    }

    pub fn horizon_years(&self) -> f64 {
        self.simulation.horizon_days / 252.0
    }

    pub fn simm_spec(&self) -> Result<SimmSpec, HarnessError> {
        let Some(table) = &self.simm else {
            return Ok(SimmSpec::default());
        };
        if let Some(file) = table.get("file") {
            if table.len() > 1 {
                return Err(invalid("simm", "give either `file` or inline fields, not both"));
            }
            let rel = file
                .as_str()
                .ok_or_else(|| invalid("simm.file", "must be a string"))?;
            let path = self.base_dir.join(rel);
            let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                source: e,
            })?;
            return toml::from_str(&text)
                .map_err(|e| invalid("simm.file", format!("{}: {e}", path.display())));
        }
        table
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| invalid("simm", e.to_string()))
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let sim = &self.simulation;
        if sim.paths == 0 {
            return Err(invalid("simulation.paths", "must be at least 1"));
        }
        if sim.time_points.is_empty() {
            return Err(invalid("simulation.time_points", "must not be empty"));
        }
        if !sim
            .time_points
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
            || sim.time_points.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid(
                "simulation.time_points",
                "must be positive, finite and strictly increasing",
            ));
        }
        if !(sim.horizon_days > 0.0 && sim.horizon_days.is_finite()) {
            return Err(invalid("simulation.horizon_days", "must be positive"));
        }
        if sim.threads == Some(0) {
            return Err(invalid("simulation.threads", "must be at least 1"));
        }
        self.hull_white
            .validate()
            .map_err(|e| invalid("hull_white", e.to_string()))?;
        self.sabr.validate().map_err(|e| invalid("sabr", e.to_string()))?;
        self.market
            .pillars()
            .validate()
            .map_err(|e| invalid("market", e.to_string()))?;

        if self.trades.is_empty() {
            return Err(invalid("trades", "at least one trade is required"));
        }
        let mut names = BTreeSet::new();
        for (k, trade) in self.trades.iter().enumerate() {
            let field = format!("trades[{k}]");
            let name = trade.name();
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(invalid(
                    &format!("{field}.name"),
                    "must be non-empty and use only letters, digits, '_' or '-'",
                ));
            }
            if !names.insert(name.to_string()) {
                return Err(invalid(&format!("{field}.name"), format!("duplicate name {name:?}")));
            }
            match trade {
                TradeConfig::Swap { fixed_rate, .. } => {
                    if let FixedRate::Keyword(k) = fixed_rate {
                        if k != "par" {
                            return Err(invalid(
                                &format!("{field}.fixed_rate"),
                                format!("expected a number or \"par\", got {k:?}"),
                            ));
                        }
                    }
                }
                TradeConfig::Swaption {
                    strike, moneyness, ..
                } => {
                    if strike.is_some() == moneyness.is_some() {
                        return Err(invalid(
                            &field,
                            "give exactly one of `strike` or `moneyness`",
                        ));
                    }
                }
            }
        }

        let methods = self.methods()?;
        if methods.is_empty() {
            return Err(invalid("methods.run", "at least one method is required"));
        }
        if self.methods.compute_errors
            && methods.len() > 1
            && !methods.contains(&Method::BruteForce)
        {
            return Err(invalid(
                "methods.run",
                "brute_force is required to compute profile errors \
                 (add it or set methods.compute_errors = false)",
            ));
        }
        let k = if self.market.stochastic_vol { 2 } else { 1 };
        let mesh = &self.methods.model_space_mesh;
        if !(mesh.len() == 1 || mesh.len() == k) || mesh.iter().any(|&n| n < 2) {
            return Err(invalid(
                "methods.model_space_mesh",
                format!("needs 1 or {k} entries, each at least 2"),
            ));
        }
        if self.methods.market_space_mesh < 2 {
            return Err(invalid("methods.market_space_mesh", "must be at least 2"));
        }
        if self.methods.polynomial_degree == 0 {
            return Err(invalid("methods.polynomial_degree", "must be at least 1"));
        }
        if !(self.bumps.rate > 0.0 && self.bumps.vol > 0.0) {
            return Err(invalid("bumps", "bump sizes must be positive"));
        }
        self.simm_spec()?
            .resolve(&self.market.pillars())
            .map_err(|e| invalid("simm", e.to_string()))?;
        Ok(())
    }
}
