use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub m: usize,
    pub k: usize,
    pub kappa: usize,
    pub w: f64,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub q: f64,
    pub n_leaders: usize,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParam("m must be at least 1".into()));
        }
        if !(self.lambda > 0.0) || !(self.w > 0.0) {
            return Err(Error::InvalidParam("lambda and w must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.q) {
            return Err(Error::InvalidParam("q must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn p(&self) -> Result<f64> {
        p_k_lambda(self.m, self.k, self.w, self.lambda, self.q, self.n_leaders)
    }

    pub fn epsilon(&self) -> Result<f64> {
        epsilon_equilibrium(self.lambda, self.big_lambda, self.n_leaders, self.p()?)
    }
}

/// `1 - (1 - exp(-x))^(2^k)` evaluated without cancellation.
fn tail(x: f64, k: usize) -> f64 {
    let e = (-x).exp();
    if e >= 1.0 {
        return 1.0;
    }
    let log_keep = (-e).ln_1p() * 2f64.powi(k as i32);
    (-log_keep.exp_m1()).clamp(0.0, 1.0)
}

/// `P[revenue >= κw] <= 1 - (1 - exp(-2mκw/λ))^(2^k)`, clamped to `[0, 1]`.
pub fn revenue_tail_bound(m: usize, kappa: usize, w: f64, lambda: f64, k: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidParam("m must be at least 1".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam("lambda must be positive".into()));
    }
    Ok(tail(2.0 * m as f64 * kappa as f64 * w / lambda, k))
}

/// Maximum of the tail bound over `k' in 1..=k` with the `(1-q)^{n_ℓ}` factor.
pub fn p_k_lambda(m: usize, k: usize, w: f64, lambda: f64, q: f64, n_leaders: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    if m < 1 {
        return Err(Error::InvalidParam("m must be at least 1".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam("lambda must be positive".into()));
    }
    let factor = (1.0 - q).powi(n_leaders as i32);
    Ok((1..=k)
        .map(|kp| tail(2.0 * m as f64 * factor * kp as f64 * w / lambda, k))
        .fold(0.0, f64::max))
}

pub fn epsilon_equilibrium(lambda: f64, big_lambda: f64, n_leaders: usize, p: f64) -> Result<f64> {
    if lambda < 0.0 || big_lambda < 0.0 || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParam("epsilon inputs must be non-negative, p in [0, 1]".into()));
    }
    Ok((lambda / 2f64.powi(n_leaders as i32)).max(p * big_lambda))
}
