use crate::rfem::{MarketState, PillarConfig};

/// Annual discount factors bootstrapped from par swap rate pillars.
///
/// Par rates for whole-year tenors between pillars are linearly
/// interpolated and held flat outside the pillar range. Discount factors at
/// fractional times are log-linear between whole years.
#[derive(Debug, Clone)]
pub(crate) struct DiscountCurve {
    /// `dfs[n]` is the discount factor to year `n`; `dfs[0] = 1`.
    dfs: Vec<f64>,
}

impl DiscountCurve {
    pub(crate) fn bootstrap(pillars: &PillarConfig, market: &MarketState, horizon: f64) -> Self {
        let years = horizon.max(0.0).ceil() as usize;
        let mut dfs = Vec::with_capacity(years + 1);
        dfs.push(1.0);
        let mut annuity = 0.0;
        for n in 1..=years {
            let s = par_rate_for_tenor(pillars, &market.swap_rates, n as f64);
            let df = (1.0 - s * annuity) / (1.0 + s);
            annuity += df;
            dfs.push(df);
        }
        Self { dfs }
    }

    pub(crate) fn df(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 1.0;
        }
        let lo = tau.floor() as usize;
        let w = tau - lo as f64;
        if w == 0.0 {
            return self.dfs[lo];
        }
        let (a, b) = (self.dfs[lo], self.dfs[lo + 1]);
        (a.ln() * (1.0 - w) + b.ln() * w).exp()
    }
}

fn par_rate_for_tenor(pillars: &PillarConfig, rates: &[f64], n: f64) -> f64 {
    let tenors = &pillars.swap_tenors;
    let first = tenors[0] as f64;
    let last = *tenors.last().unwrap() as f64;
    if n <= first {
        return rates[0];
    }
    if n >= last {
        return rates[rates.len() - 1];
    }
    let hi = tenors.iter().position(|&t| t as f64 >= n).unwrap();
    let (t0, t1) = (tenors[hi - 1] as f64, tenors[hi] as f64);
    let w = (n - t0) / (t1 - t0);
    rates[hi - 1] + w * (rates[hi] - rates[hi - 1])
}
