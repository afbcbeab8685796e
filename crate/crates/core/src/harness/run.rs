use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::{info, warn};

use super::config::{FixedRate, RunConfig, TradeConfig, MONEYNESS_OFFSET};
use super::report::{compare, RunSummary, SummaryRow};
use super::HarnessError;
use crate::dim::{
    brute_force_dim, cheb_market_space_dim, cheb_model_space_dim, profile_error, profiles,
    regression_dim, DimError, DimInputs, DimProfile, DimResult, Method, ProfileError, ProfileKind,
    RegressionVariant,
};
use crate::pricers::{Direction, Moneyness, Pricer, Swap, Swaption, Trade};
use crate::rfem::{MarketState, RiskFactorModel, ScenarioCube};

/// One method's output on one trade.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub result: DimResult,
    pub profile: DimProfile,
    /// Profile errors against brute force, `[eim, q95]`; `None` for brute
    /// force itself or when errors are not computed. An inner `None` means
    /// every benchmark point was zero.
    pub errors: Option<[Option<ProfileError>; 2]>,
    pub wall_time_ms: f64,
}

impl MethodOutcome {
    pub fn error(&self, kind: ProfileKind) -> Option<ProfileError> {
        let errors = self.errors.as_ref()?;
        match kind {
            ProfileKind::Eim => errors[0],
            ProfileKind::Q95 => errors[1],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TradeOutcome {
    pub name: String,
    pub trade: Trade,
    pub methods: Vec<MethodOutcome>,
}

impl TradeOutcome {
    pub fn method(&self, method: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: RiskFactorModel,
    pub cube: ScenarioCube,
    pub trades: Vec<TradeOutcome>,
    pub summary: RunSummary,
}

/// Turns a trade description into a priced trade. Par swaps take the
/// time-0 par rate; swaptions given by moneyness strike at the time-0
/// forward, shifted by [`MONEYNESS_OFFSET`] in the direction that makes
/// them in or out of the money.
pub fn resolve_trade(tc: &TradeConfig, pricer: &Pricer, today: &MarketState) -> Trade {
    match tc {
        TradeConfig::Swap {
            notional,
            fixed_rate,
            maturity,
            direction,
            ..
        } => Trade::Swap(Swap {
            notional: *notional,
            fixed_rate: match fixed_rate {
                FixedRate::Value(v) => *v,
                FixedRate::Keyword(_) => pricer.par_swap_rate(today, *maturity),
            },
            maturity: *maturity,
            direction: *direction,
        }),
        TradeConfig::Swaption {
            notional,
            expiry,
            underlying_tenor,
            direction,
            strike,
            moneyness,
            ..
        } => {
            let strike = strike.unwrap_or_else(|| {
                let (forward, _) = pricer.forward_and_annuity(today, 0.0, *expiry, *underlying_tenor);
                // A payer is in the money when the strike is below the forward.
                let sign = match direction {
                    Direction::Payer => 1.0,
                    Direction::Receiver => -1.0,
                };
                match moneyness.unwrap_or(Moneyness::Atm) {
                    Moneyness::Atm => forward,
                    Moneyness::Itm => forward * (1.0 - sign * MONEYNESS_OFFSET),
                    Moneyness::Otm => forward * (1.0 + sign * MONEYNESS_OFFSET),
                }
            });
            Trade::Swaption(Swaption {
                notional: *notional,
                strike,
                expiry: *expiry,
                underlying_tenor: *underlying_tenor,
                direction: *direction,
                moneyness: *moneyness,
            })
        }
    }
}

/// Runs the experiment without writing files. Uses a dedicated thread pool
/// when the config sets a thread count.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    match cfg.simulation.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::ThreadPool(e.to_string()))?
            .install(|| execute_inner(cfg)),
        None => execute_inner(cfg),
    }
}

/// Runs the experiment, writes every output file and returns the outcome.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    let outcome = execute(cfg)?;
    write_outputs(cfg, &outcome)?;
    Ok(outcome)
}

fn execute_inner(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    let pillars = cfg.market.pillars();
    let model = RiskFactorModel::new(cfg.hull_white, cfg.sabr, pillars.clone(), cfg.market.stochastic_vol)?;
    let pricer = Pricer::new(pillars.clone(), cfg.sabr);
    let simm = cfg
        .simm_spec()?
        .resolve(&pillars)
        .map_err(|e| HarnessError::Config {
            field: "simm".into(),
            message: e.to_string(),
        })?;
    let methods = cfg.methods()?;

    info!(
        "simulating {} paths x {} time points (seed {})",
        cfg.simulation.paths,
        cfg.simulation.time_points.len(),
        cfg.simulation.seed
    );
    let cube = model.simulate_with_horizon(
        cfg.simulation.paths,
        &cfg.simulation.time_points,
        cfg.simulation.seed,
        cfg.horizon_years(),
    )?;
    let today = model.g_map(&model.initial_state())?;

    let mut trades = Vec::new();
    let mut rows = Vec::new();
    for tc in &cfg.trades {
        let name = tc.name().to_string();
        let trade = resolve_trade(tc, &pricer, &today);
        trade.validate().map_err(|e| HarnessError::Trade {
            trade: name.clone(),
            message: e.to_string(),
        })?;
        let inputs = DimInputs {
            cube: &cube,
            model: &model,
            pricer: &pricer,
            trade: &trade,
            bumps: &cfg.bumps,
            simm: &simm,
        };
        let mut outcomes = Vec::new();
        for &method in &methods {
            info!("trade {name}: running {method}");
            let start = Instant::now();
            let result = run_method(&inputs, method, cfg).map_err(|source| HarnessError::Method {
                method,
                trade: name.clone(),
                source,
            })?;
            let wall_time_ms = if cfg.output.record_wall_time {
                (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
            } else {
                0.0
            };
            let profile = profiles(&result.surface);
            outcomes.push(MethodOutcome {
                method,
                result,
                profile,
                errors: None,
                wall_time_ms,
            });
        }
        if cfg.methods.compute_errors {
            attach_errors(&name, &mut outcomes);
        }
        for o in &outcomes {
            for kind in ProfileKind::ALL {
                let err = o.error(kind);
                rows.push(SummaryRow {
                    trade: name.clone(),
                    method: o.method.label().to_string(),
                    profile_kind: kind.label().to_string(),
                    eq5_error: err.map(|e| e.value),
                    skipped_points: err.map(|e| e.skipped),
                    pricer_calls: o.result.pricer_calls,
                    wall_time_ms: o.wall_time_ms,
                });
            }
        }
        trades.push(TradeOutcome {
            name,
            trade,
            methods: outcomes,
        });
    }
    Ok(RunOutcome {
        model,
        cube,
        trades,
        summary: RunSummary { rows },
    })
}

fn run_method(inputs: &DimInputs<'_>, method: Method, cfg: &RunConfig) -> Result<DimResult, DimError> {
    match method {
        Method::BruteForce => brute_force_dim(inputs),
        Method::ChebModelSpace => cheb_model_space_dim(inputs, &cfg.methods.model_space_mesh),
        Method::ChebMarketSpace => cheb_market_space_dim(inputs, cfg.methods.market_space_mesh),
        Method::RegressionPolynomial => regression_dim(
            inputs,
            RegressionVariant::Polynomial {
                degree: cfg.methods.polynomial_degree,
            },
        ),
        Method::RegressionNadarayaWatson => regression_dim(inputs, RegressionVariant::NadarayaWatson),
    }
}

fn attach_errors(trade: &str, outcomes: &mut [MethodOutcome]) {
    let Some(bench) = outcomes
        .iter()
        .find(|o| o.method == Method::BruteForce)
        .map(|o| o.profile.clone())
    else {
        return;
    };
    for o in outcomes.iter_mut().filter(|o| o.method != Method::BruteForce) {
        let mut errors = [None, None];
        for (slot, kind) in errors.iter_mut().zip(ProfileKind::ALL) {
            match profile_error(bench.get(kind), o.profile.get(kind)) {
                Ok(e) => *slot = Some(e),
                Err(e) => warn!("trade {trade}, {} {kind}: {e}", o.method),
            }
        }
        o.errors = Some(errors);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Writes, under the output directory:
///
/// * `summary.csv` and `report.txt` for the whole run;
/// * per trade, `surface.csv` (`path,time,im,method`), `profile.csv`
///   (`time,eim,q95,method`) and `profiles.dat`, a whitespace-separated
///   column file for plotting with one EIM and one q95 column per method.
pub fn write_outputs(cfg: &RunConfig, outcome: &RunOutcome) -> Result<(), HarnessError> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let summary_path = dir.join("summary.csv");
    outcome.summary.write_csv(&summary_path)?;
    let report_path = dir.join("report.txt");
    let mut report = create(&report_path)?;
    report
        .write_all(compare(&outcome.summary).as_bytes())
        .and_then(|_| report.flush())
        .map_err(io_err(&report_path))?;

    for trade in &outcome.trades {
        let tdir = dir.join(&trade.name);
        fs::create_dir_all(&tdir).map_err(io_err(&tdir))?;
        write_surface(&tdir.join("surface.csv"), trade)?;
        write_profile(&tdir.join("profile.csv"), trade)?;
        write_plot_data(&tdir.join("profiles.dat"), trade)?;
    }
    Ok(())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_surface(path: &Path, trade: &TradeOutcome) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["path", "time", "im", "method"]).map_err(csv_err(path))?;
    for o in &trade.methods {
        let s = &o.result.surface;
        for (t, time) in s.time_points.iter().enumerate() {
            for p in 0..s.paths {
                w.write_record([
                    p.to_string(),
                    time.to_string(),
                    s.at(p, t).to_string(),
                    o.method.label().to_string(),
                ])
                .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

fn write_profile(path: &Path, trade: &TradeOutcome) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["time", "eim", "q95", "method"]).map_err(csv_err(path))?;
    for o in &trade.methods {
        let pr = &o.profile;
        for (t, time) in pr.time_points.iter().enumerate() {
            w.write_record([
                time.to_string(),
                pr.eim[t].to_string(),
                pr.q95[t].to_string(),
                o.method.label().to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

fn write_plot_data(path: &Path, trade: &TradeOutcome) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str(&format!("# DIM profiles for {}\n# time", trade.name));
    for o in &trade.methods {
        out.push_str(&format!(" eim_{m} q95_{m}", m = o.method.label()));
    }
    out.push('\n');
    let Some(first) = trade.methods.first() else {
        return Ok(());
    };
    for (t, time) in first.profile.time_points.iter().enumerate() {
        out.push_str(&time.to_string());
        for o in &trade.methods {
            out.push_str(&format!(" {} {}", o.profile.eim[t], o.profile.q95[t]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}
