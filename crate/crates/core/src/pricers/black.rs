//! Black's formula on a forward and Hagan's lognormal SABR volatility.

use statrs::distribution::{ContinuousCDF, Normal};

/// Undiscounted Black price per unit annuity. `total_vol` is `sigma * sqrt(T)`.
pub fn black(forward: f64, strike: f64, total_vol: f64, payer: bool) -> f64 {
    let intrinsic = if payer {
        (forward - strike).max(0.0)
    } else {
        (strike - forward).max(0.0)
    };
    if total_vol <= 0.0 {
        return intrinsic;
    }
    let n = Normal::standard();
    let d1 = (forward / strike).ln() / total_vol + 0.5 * total_vol;
    let d2 = d1 - total_vol;
    if payer {
        forward * n.cdf(d1) - strike * n.cdf(d2)
    } else {
        strike * n.cdf(-d2) - forward * n.cdf(-d1)
    }
}

/// Hagan et al. (2002) lognormal implied volatility for SABR.
pub fn hagan_lognormal_vol(
    forward: f64,
    strike: f64,
    expiry: f64,
    alpha: f64,
    beta: f64,
    nu: f64,
    rho: f64,
) -> f64 {
    let one_b = 1.0 - beta;
    let fk = forward * strike;
    let fk_pow = fk.powf(0.5 * one_b);
    let log_fk = (forward / strike).ln();
    let l2 = log_fk * log_fk;
    let denom = fk_pow * (1.0 + one_b * one_b / 24.0 * l2 + one_b.powi(4) / 1920.0 * l2 * l2);
    let z = nu / alpha * fk_pow * log_fk;
    let correction = 1.0
        + (one_b * one_b / 24.0 * alpha * alpha / (fk_pow * fk_pow)
            + rho * beta * nu * alpha / (4.0 * fk_pow)
            + (2.0 - 3.0 * rho * rho) / 24.0 * nu * nu)
            * expiry;
    alpha / denom * z_over_x(z, rho) * correction
}

/// `z / x(z)` with `x(z) = ln((sqrt(1 - 2 rho z + z^2) + z - rho) / (1 - rho))`.
fn z_over_x(z: f64, rho: f64) -> f64 {
    if z.abs() < 1e-7 {
        return 1.0 - 0.5 * rho * z + (2.0 - 3.0 * rho * rho) / 12.0 * z * z;
    }
    let root = (1.0 - 2.0 * rho * z + z * z).sqrt();
    let x = (((z * z - 2.0 * rho * z) / (root + 1.0) + z) / (1.0 - rho)).ln_1p();
    z / x
}
