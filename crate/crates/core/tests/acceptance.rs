//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.
//!
//! Built with `harness = false` so the lines are always shown.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use chebdim::cheb::{
    convergence_study, ChebyshevGrid, ChebyshevTensor, HyperRectangle, Interval,
};
use chebdim::dim::{call_counts, Method, ProfileKind};
use chebdim::harness::{execute, run, RunConfig, RunOutcome};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).expect("shipped config loads")
}

// ---------------------------------------------------------------------------
// 1. Barycentric correctness

/// Monomial coefficients in the canonical variable `u` in [-1, 1].
fn poly(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn interval_strategy() -> impl Strategy<Value = (f64, f64)> {
    (-100.0f64..100.0, 1e-3f64..50.0).prop_map(|(lo, w)| (lo, lo + w))
}

fn check_1d(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (
        interval_strategy(),
        (2usize..=30).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(-1e6f64..1e6, n),
                prop::collection::vec(0.0f64..=1.0, 10),
                0usize..n,
            )
        }),
    );
    runner
        .run(&strategy, |((lo, hi), (n, coeffs, raw, probes, degree_cut))| {
            let dom = Interval::new(lo, hi).unwrap();
            let grid = ChebyshevGrid::new(dom.into(), &[n]).unwrap();
            // Node exactness with arbitrary values.
            let t = ChebyshevTensor::from_values(grid.clone(), raw.clone()).unwrap();
            for (j, &x) in grid.points(0).iter().enumerate() {
                let v = t.eval_1d(x).unwrap();
                if v.to_bits() != raw[j].to_bits() {
                    return Err(TestCaseError::fail(format!("node {j}: {v} != {}", raw[j])));
                }
            }
            // Reproduction of a polynomial of degree <= n - 1.
            let c = &coeffs[..=degree_cut.min(n - 1)];
            let p = ChebyshevTensor::build(grid.clone(), |x| poly(c, dom.to_canonical(x[0]))).unwrap();
            let scale = p.values().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
            for &q in &probes {
                let x = lo + q * (hi - lo);
                let exact = poly(c, dom.to_canonical(x));
                let got = p.eval_1d(x).unwrap();
                if (got - exact).abs() > 1e-12 * scale {
                    return Err(TestCaseError::fail(format!(
                        "n={n} x={x}: {got} vs {exact} (scale {scale})"
                    )));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn check_nd(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = prop::collection::vec((interval_strategy(), 2usize..=7), 2..=3).prop_flat_map(|dims| {
        let d = dims.len();
        (
            Just(dims),
            // Up to four tensor-product terms: coefficient and per-dimension degree seeds.
            prop::collection::vec((-1.0f64..1.0, prop::collection::vec(0usize..100, d)), 1..=4),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, d), 8),
            prop::collection::vec(-1e3f64..1e3, 7usize.pow(d as u32)),
        )
    });
    runner
        .run(&strategy, |(dims, terms, probes, raw)| {
            let intervals: Vec<Interval> = dims.iter().map(|&((lo, hi), _)| Interval::new(lo, hi).unwrap()).collect();
            let counts: Vec<usize> = dims.iter().map(|&(_, n)| n).collect();
            let domain = HyperRectangle::new(intervals.clone()).unwrap();
            let grid = ChebyshevGrid::new(domain, &counts).unwrap();

            let values: Vec<f64> = raw[..grid.len()].to_vec();
            let t = ChebyshevTensor::from_values(grid.clone(), values.clone()).unwrap();
            for (k, &v) in values.iter().enumerate() {
                let got = t.eval(&grid.node(k)).unwrap();
                if got.to_bits() != v.to_bits() {
                    return Err(TestCaseError::fail(format!("node {k}: {got} != {v}")));
                }
            }

            let f = |x: &[f64]| -> f64 {
                terms
                    .iter()
                    .map(|(c, seeds)| {
                        c * x
                            .iter()
                            .enumerate()
                            .map(|(j, &xj)| {
                                let deg = seeds[j] % counts[j];
                                intervals[j].to_canonical(xj).powi(deg as i32)
                            })
                            .product::<f64>()
                    })
                    .sum()
            };
            let p = ChebyshevTensor::build(grid.clone(), f).unwrap();
            let scale = p.values().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
            for q in &probes {
                let x: Vec<f64> = q
                    .iter()
                    .zip(&intervals)
                    .map(|(&u, iv)| iv.lo() + u * (iv.hi() - iv.lo()))
                    .collect();
                let (got, exact) = (p.eval(&x).unwrap(), f(&x));
                if (got - exact).abs() > 1e-12 * scale {
                    return Err(TestCaseError::fail(format!("{x:?}: {got} vs {exact}")));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cases = 1000;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let one = check_1d(&mut runner);
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let multi = check_nd(&mut runner);
    let secs = start.elapsed().as_secs_f64();
    match (one, multi) {
        (Ok(()), Ok(())) if secs < 10.0 => verdict(
            true,
            format!("{cases} 1-D and {cases} N-D cases, node-exact and polynomial-exact, {secs:.2} s"),
        ),
        (Ok(()), Ok(())) => verdict(false, format!("took {secs:.2} s (limit 10 s)")),
        (a, b) => verdict(false, format!("1-D: {a:?}; N-D: {b:?}")),
    }
}

// ---------------------------------------------------------------------------
// 2. Geometric convergence

fn criterion_2() -> Verdict {
    let domain = HyperRectangle::new(vec![Interval::new(-1.0, 1.0).unwrap()]).unwrap();
    let f = |x: &[f64]| x[0].exp();
    // The fit uses counts before the error reaches machine precision.
    let fit = convergence_study(f, &domain, &[4, 6, 8, 10, 12], 1000).unwrap();
    let at20 = convergence_study(f, &domain, &[20], 1000).unwrap().max_abs_errors[0];
    let slope = -fit.fitted_decay_rate.ln();
    let pass = at20 < 1e-12 && slope < -1.0 && fit.fit_r_squared > 0.99;
    verdict(
        pass,
        format!(
            "error(20) = {at20:.2e}, log-error slope = {slope:.3}, R^2 = {:.5}",
            fit.fit_r_squared
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Evaluation call-count law

fn criterion_3() -> Verdict {
    let grid = ChebyshevGrid::uniform(HyperRectangle::canonical(3).unwrap(), 10).unwrap();
    let t = ChebyshevTensor::build(grid, |x| x[0] * x[1] + x[2].sin()).unwrap();
    let (_, calls) = t.eval_counted(&[0.3, -0.2, 0.77]).unwrap();
    verdict(calls == 111, format!("d=3, m=10: {calls} barycentric calls"))
}

// ---------------------------------------------------------------------------
// 4 & 5. Desk-scale DIM accuracy

fn error(outcome: &RunOutcome, trade: usize, method: Method, kind: ProfileKind) -> f64 {
    outcome.trades[trade]
        .method(method)
        .and_then(|m| m.error(kind))
        .map_or(f64::INFINITY, |e| e.value)
}

fn criterion_4(swap: &RunOutcome, secs: f64) -> Verdict {
    let me = error(swap, 0, Method::ChebModelSpace, ProfileKind::Eim);
    let mq = error(swap, 0, Method::ChebModelSpace, ProfileKind::Q95);
    let ke = error(swap, 0, Method::ChebMarketSpace, ProfileKind::Eim);
    let kq = error(swap, 0, Method::ChebMarketSpace, ProfileKind::Q95);
    let pass = me <= 1e-4 && mq <= 1e-3 && ke <= 1e-2 && kq <= 1e-2 && secs < 300.0;
    verdict(
        pass,
        format!(
            "model space {me:.2e}/{mq:.2e} (EIM/q95), market space {ke:.2e}/{kq:.2e}, {secs:.1} s"
        ),
    )
}

fn criterion_5(swo: &RunOutcome) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, trade) in swo.trades.iter().enumerate() {
        let mut worst_model: f64 = 0.0;
        let mut worst_market: f64 = 0.0;
        let mut best_regression = f64::INFINITY;
        for kind in ProfileKind::ALL {
            let model = error(swo, k, Method::ChebModelSpace, kind);
            let market = error(swo, k, Method::ChebMarketSpace, kind);
            worst_model = worst_model.max(model);
            worst_market = worst_market.max(market);
            for r in [Method::RegressionPolynomial, Method::RegressionNadarayaWatson] {
                let reg = error(swo, k, r, kind);
                best_regression = best_regression.min(reg);
                pass &= reg > model && reg > market;
            }
        }
        pass &= worst_model <= 1e-2 && worst_market <= 1e-1;
        parts.push(format!(
            "{}: model {worst_model:.2e}, market {worst_market:.2e}, regression >= {best_regression:.2e}",
            trade.name
        ));
    }
    let times = swo.cube.time_points();
    pass &= times.len() == 8 && swo.cube.paths() == 1000;
    verdict(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 6. Cost accounting

fn criterion_6(swap: &RunOutcome, swap_cfg: &RunConfig, swo: &RunOutcome, swo_cfg: &RunConfig) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (outcome, cfg) in [(swap, swap_cfg), (swo, swo_cfg)] {
        let l = outcome.model.pillars.factor_count();
        let cube = &outcome.cube;
        for trade in &outcome.trades {
            let calls = |m: Method| trade.method(m).map(|o| o.result.pricer_calls).unwrap_or(0);
            let expected = [
                (Method::BruteForce, call_counts::brute_force(cube, l)),
                (
                    Method::ChebModelSpace,
                    call_counts::model_space(cube, l, &cfg.methods.model_space_mesh),
                ),
                (
                    Method::ChebMarketSpace,
                    call_counts::market_space(cube, l, cfg.methods.market_space_mesh),
                ),
                (Method::RegressionPolynomial, call_counts::regression(cube)),
                (Method::RegressionNadarayaWatson, call_counts::regression(cube)),
            ];
            for (m, e) in expected {
                pass &= calls(m) == e;
                pass &= outcome.summary.pricer_calls(&trade.name, m.label()) == Some(e);
            }
            let (b, mo, ma) = (
                calls(Method::BruteForce),
                calls(Method::ChebModelSpace),
                calls(Method::ChebMarketSpace),
            );
            pass &= b >= 10 * mo && b >= 10 * ma;
            parts.push(format!("{}: brute {b}, model {mo}, market {ma}", trade.name));
        }
    }
    // Full-scale parameterization: 10,000 paths, 100 time points, 10 to 50
    // sensitivities, 10 nodes per 1-D tensor.
    let (m, t) = (10_000u64, 100u64);
    let regression = 2 * m * t;
    let full_scale_ok = [10u64, 50].iter().all(|&l| {
        let market = 2 * l * 10 * t;
        regression >= 10 * market
    });
    pass &= full_scale_ok;
    parts.push(format!(
        "full scale: regression {regression} vs market space {}..{} calls",
        2 * 10 * 10 * t,
        2 * 50 * 10 * t
    ));
    verdict(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 7. Degenerate equivalence

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["paper_desk_scale.toml", "paper_desk_scale_swaptions.toml"] {
        let mut cfg = load(name);
        cfg.hull_white.volatility = 0.0;
        cfg.sabr.vol_of_vol = 0.0;
        cfg.simulation.paths = 200;
        let outcome = match execute(&cfg) {
            Ok(o) => o,
            Err(e) => return verdict(false, format!("{name}: {e}")),
        };
        for trade in &outcome.trades {
            let brute = &trade.method(Method::BruteForce).unwrap().result.surface.im;
            for m in [Method::ChebModelSpace, Method::ChebMarketSpace] {
                let im = &trade.method(m).unwrap().result.surface.im;
                let same = im.len() == brute.len()
                    && im.iter().zip(brute).all(|(a, b)| a.to_bits() == b.to_bits());
                pass &= same;
            }
            for m in [Method::RegressionPolynomial, Method::RegressionNadarayaWatson] {
                pass &= trade
                    .method(m)
                    .unwrap()
                    .result
                    .surface
                    .im
                    .iter()
                    .all(|&v| v == 0.0);
            }
            pass &= brute.iter().any(|&v| v > 0.0);
            parts.push(trade.name.clone());
        }
    }
    verdict(
        pass,
        format!(
            "zero-vol cubes; Chebyshev == brute force bit for bit and regressions == 0 on {}",
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Determinism

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let n = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let mut pass = true;
    let mut files = 0;
    for name in ["paper_desk_scale.toml", "paper_desk_scale_swaptions.toml"] {
        let mut trees = Vec::new();
        for (k, threads) in [1, 1, n, n].into_iter().enumerate() {
            let mut cfg = load(name);
            cfg.simulation.threads = Some(threads);
            cfg.output.record_wall_time = false;
            cfg.output.dir = tmp.path().join(format!("{name}-{k}"));
            if let Err(e) = run(&cfg) {
                return verdict(false, format!("{name}: {e}"));
            }
            trees.push(read_tree(&cfg.output.dir));
        }
        files += trees[0].len();
        pass &= !trees[0].is_empty() && trees.iter().all(|t| *t == trees[0]);
    }
    verdict(
        pass,
        format!("{files} output files byte-identical across two runs each at 1 and {n} threads"),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a name filter
    // that does not match this target skips the suite.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }

    let swap_cfg = load("paper_desk_scale.toml");
    let swo_cfg = load("paper_desk_scale_swaptions.toml");
    let start = Instant::now();
    let swap = execute(&swap_cfg).expect("swap run");
    let swap_secs = start.elapsed().as_secs_f64();
    let swo = execute(&swo_cfg).expect("swaption run");

    let results = [
        ("barycentric correctness", criterion_1()),
        ("geometric convergence", criterion_2()),
        ("evaluation call-count law", criterion_3()),
        ("desk-scale swap DIM", criterion_4(&swap, swap_secs)),
        ("desk-scale swaption DIM", criterion_5(&swo)),
        ("cost accounting", criterion_6(&swap, &swap_cfg, &swo, &swo_cfg)),
        ("degenerate equivalence", criterion_7()),
        ("determinism", criterion_8()),
    ];
    let mut failed = 0;
    for (k, (name, v)) in results.iter().enumerate() {
        println!(
            "criterion {}: {} - {name}: {}",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 8 criteria passed");
}
