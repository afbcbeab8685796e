//! Trades, present values on market states, and bump-and-reprice
//! sensitivities.
//!
//! Every call to [`Pricer::price`] increments the supplied [`CallCounter`]
//! exactly once, whatever the outcome, so pricer cost can be audited per
//! method.

mod black;
mod curve;

pub use black::{black, hagan_lognormal_vol};

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Deserialize;
use thiserror::Error;

use crate::rfem::{MarketState, PillarConfig, SabrParams};
use curve::DiscountCurve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("invalid trade: {0}")]
    InvalidTrade(String),
    #[error("market state has {got} factors, pillar layout expects {expected}")]
    MarketShape { expected: usize, got: usize },
    #[error("non-positive forward {forward} or strike {strike} in lognormal pricing")]
    NonPositiveForward { forward: f64, strike: f64 },
    #[error("sensitivity factor {index} out of range ({count} factors)")]
    FactorIndex { index: usize, count: usize },
    #[error("bump size must be > 0, got {0}")]
    BumpSize(f64),
    #[error("no volatility pillar available for swaption pricing")]
    NoVolPillar,
    #[error("non-finite price")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Pay fixed.
    Payer,
    /// Receive fixed.
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Moneyness {
    Atm,
    Itm,
    Otm,
}

/// Annual fixed vs floating swap starting at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Swap {
    pub notional: f64,
    pub fixed_rate: f64,
    /// Whole years; fixed and floating legs pay on years `1..=maturity`.
    pub maturity: u32,
    pub direction: Direction,
}

/// European option on a spot-starting annual swap of `underlying_tenor`
/// years beginning at `expiry`.
#[derive(Debug, Clone, PartialEq)]
pub struct Swaption {
    pub notional: f64,
    pub strike: f64,
    pub expiry: f64,
    pub underlying_tenor: u32,
    pub direction: Direction,
    pub moneyness: Option<Moneyness>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trade {
    Swap(Swap),
    Swaption(Swaption),
}

impl Trade {
    pub fn validate(&self) -> Result<(), PricingError> {
        let (notional, life) = match self {
            Trade::Swap(s) => (s.notional, s.maturity as f64),
            Trade::Swaption(s) => {
                if s.underlying_tenor == 0 {
                    return Err(PricingError::InvalidTrade(
                        "underlying tenor must be positive".into(),
                    ));
                }
                (s.notional, s.expiry)
            }
        };
        if notional == 0.0 || !notional.is_finite() {
            return Err(PricingError::InvalidTrade("notional must be nonzero".into()));
        }
        if !(life > 0.0) || !life.is_finite() {
            return Err(PricingError::InvalidTrade(
                "maturity/expiry must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Time after which the trade has no value.
    pub fn end_time(&self) -> f64 {
        match self {
            Trade::Swap(s) => s.maturity as f64,
            Trade::Swaption(s) => s.expiry,
        }
    }
}

/// Monotone pricer-call counter; safe to share across threads.
#[derive(Debug, Default)]
pub struct CallCounter {
    label: String,
    calls: AtomicU64,
}

impl CallCounter {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            calls: AtomicU64::new(0),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn increment(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Adds another counter's calls into this one.
    pub fn absorb(&self, other: &CallCounter) {
        self.calls.fetch_add(other.get(), Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceResult {
    pub pv: f64,
    /// Set when the trade is past its last cashflow/expiry; `pv` is then 0.
    pub expired: bool,
}

/// Which market factor to bump, and by how much (absolute).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRequest {
    pub factor_index: usize,
    pub bump_size: f64,
}

/// Absolute central-difference bump sizes per factor kind.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    #[serde(default = "default_rate_bump")]
    pub rate: f64,
    #[serde(default = "default_vol_bump")]
    pub vol: f64,
}

fn default_rate_bump() -> f64 {
    1e-4
}

fn default_vol_bump() -> f64 {
    1e-3
}

impl Default for BumpConfig {
    fn default() -> Self {
        Self {
            rate: default_rate_bump(),
            vol: default_vol_bump(),
        }
    }
}

impl BumpConfig {
    pub fn request(&self, pillars: &PillarConfig, factor_index: usize) -> SensitivityRequest {
        SensitivityRequest {
            factor_index,
            bump_size: if pillars.is_vol_factor(factor_index) {
                self.vol
            } else {
                self.rate
            },
        }
    }
}

/// Prices trades off a [`MarketState`] laid out by `pillars`. Swaption
/// volatilities come from Hagan's formula with the market vol pillar as the
/// SABR `alpha` and `beta`, `nu`, `rho` taken from `sabr`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pricer {
    pub pillars: PillarConfig,
    pub sabr: SabrParams,
}

impl Pricer {
    pub fn new(pillars: PillarConfig, sabr: SabrParams) -> Self {
        Self { pillars, sabr }
    }

    pub fn price(
        &self,
        trade: &Trade,
        market: &MarketState,
        t: f64,
        counter: &CallCounter,
    ) -> Result<PriceResult, PricingError> {
        counter.increment();
        if market.swap_rates.len() != self.pillars.rate_count()
            || market.vols.len() != self.pillars.vol_count()
        {
            return Err(PricingError::MarketShape {
                expected: self.pillars.factor_count(),
                got: market.factor_count(),
            });
        }
        let res = match trade {
            Trade::Swap(s) => self.price_swap(s, market, t),
            Trade::Swaption(s) => self.price_swaption(s, market, t)?,
        };
        if !res.pv.is_finite() {
            return Err(PricingError::NonFinite);
        }
        Ok(res)
    }

    fn price_swap(&self, swap: &Swap, market: &MarketState, t: f64) -> PriceResult {
        let maturity = swap.maturity as f64;
        if t >= maturity {
            return PriceResult {
                pv: 0.0,
                expired: true,
            };
        }
        let curve = DiscountCurve::bootstrap(&self.pillars, market, maturity - t);
        let first = t.floor() as u32 + 1;
        let fixed_annuity: f64 = (first..=swap.maturity)
            .map(|k| curve.df(k as f64 - t))
            .sum();
        // Floating leg treated as reset at t: its value is 1 - DF(maturity).
        let floating = 1.0 - curve.df(maturity - t);
        let payer_pv = swap.notional * (floating - swap.fixed_rate * fixed_annuity);
        PriceResult {
            pv: match swap.direction {
                Direction::Payer => payer_pv,
                Direction::Receiver => -payer_pv,
            },
            expired: false,
        }
    }

    fn price_swaption(
        &self,
        opt: &Swaption,
        market: &MarketState,
        t: f64,
    ) -> Result<PriceResult, PricingError> {
        if t > opt.expiry {
            return Ok(PriceResult {
                pv: 0.0,
                expired: true,
            });
        }
        let tau = opt.expiry - t;
        let (forward, annuity) = self.forward_and_annuity(market, t, opt.expiry, opt.underlying_tenor);
        let payer = opt.direction == Direction::Payer;
        let per_annuity = if tau == 0.0 {
            black(forward, opt.strike, 0.0, payer)
        } else {
            if !(forward > 0.0 && opt.strike > 0.0) {
                return Err(PricingError::NonPositiveForward {
                    forward,
                    strike: opt.strike,
                });
            }
            let alpha = self.vol_for_expiry(market, opt.expiry)?;
            let vol = hagan_lognormal_vol(
                forward,
                opt.strike,
                tau,
                alpha,
                self.sabr.beta,
                self.sabr.vol_of_vol,
                self.sabr.correlation,
            );
            black(forward, opt.strike, vol * tau.sqrt(), payer)
        };
        Ok(PriceResult {
            pv: opt.notional * annuity * per_annuity,
            expired: false,
        })
    }

    fn vol_for_expiry(&self, market: &MarketState, expiry: f64) -> Result<f64, PricingError> {
        self.pillars
            .vol_expiries
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - expiry).abs().total_cmp(&(b.1 - expiry).abs()))
            .map(|(i, _)| market.vols[i])
            .ok_or(PricingError::NoVolPillar)
    }

    /// Forward par rate and annuity at `t` of the swap starting at `start`
    /// with `tenor` annual periods.
    pub fn forward_and_annuity(
        &self,
        market: &MarketState,
        t: f64,
        start: f64,
        tenor: u32,
    ) -> (f64, f64) {
        let tau0 = start - t;
        let end = tau0 + tenor as f64;
        let curve = DiscountCurve::bootstrap(&self.pillars, market, end);
        let annuity: f64 = (1..=tenor).map(|k| curve.df(tau0 + k as f64)).sum();
        let forward = (curve.df(tau0) - curve.df(end)) / annuity;
        (forward, annuity)
    }

    /// Fixed rate that makes a swap of `maturity` years from 0 worth zero at
    /// time 0 under `market`.
    pub fn par_swap_rate(&self, market: &MarketState, maturity: u32) -> f64 {
        self.forward_and_annuity(market, 0.0, 0.0, maturity).0
    }

    /// Central difference `(f(s_i + h) - f(s_i - h)) / 2h`; two pricer calls.
    pub fn fd_sensitivity(
        &self,
        trade: &Trade,
        market: &MarketState,
        t: f64,
        request: SensitivityRequest,
        counter: &CallCounter,
    ) -> Result<f64, PricingError> {
        let count = market.factor_count();
        if request.factor_index >= count {
            return Err(PricingError::FactorIndex {
                index: request.factor_index,
                count,
            });
        }
        if !(request.bump_size > 0.0) {
            return Err(PricingError::BumpSize(request.bump_size));
        }
        let i = request.factor_index;
        let h = request.bump_size;
        let base = market.factor(i);
        let up = self.price(trade, &market.with_factor(i, base + h), t, counter)?;
        let down = self.price(trade, &market.with_factor(i, base - h), t, counter)?;
        Ok((up.pv - down.pv) / (2.0 * h))
    }

    /// FD sensitivity to every flattened factor; `2 * factor_count` calls.
    pub fn all_sensitivities(
        &self,
        trade: &Trade,
        market: &MarketState,
        t: f64,
        bumps: &BumpConfig,
        counter: &CallCounter,
    ) -> Result<Vec<f64>, PricingError> {
        (0..self.pillars.factor_count())
            .map(|i| self.fd_sensitivity(trade, market, t, bumps.request(&self.pillars, i), counter))
            .collect()
    }
}
