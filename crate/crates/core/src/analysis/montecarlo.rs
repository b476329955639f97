use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::biased_permutation_attack;
use crate::amount;
use crate::error::{Error, Result};
use crate::execution::{sandwich_revenue, sandwich_revenue_f64, PoolState};
use crate::randomness::fresh_seed;
use crate::rng::derive;
use crate::types::Permutation;

/// Sandwich triple scaled so that its `m = 1` front/victim/back revenue is `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCalibration {
    pub x: f64,
    pub y: f64,
    pub fee: f64,
    pub front: f64,
    pub victim: f64,
}

impl SandwichCalibration {
    pub fn reference() -> Self {
        SandwichCalibration {
            x: 100.0,
            y: 100.0,
            fee: 0.0,
            front: 10.0,
            victim: 10.0,
        }
    }

    pub fn canonical_revenue(&self) -> f64 {
        self.revenue(&[0, 1, 2], 1)
    }

    pub fn for_lambda(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParam("lambda must be positive".into()));
        }
        let r = Self::reference();
        let exact = sandwich_revenue(
            &PoolState::new(amount::int(100), amount::int(100), amount::zero())?,
            &amount::int(10),
            &amount::int(10),
            &Permutation::identity(3),
            1,
        )?;
        let c = lambda / amount::to_f64(&exact);
        Ok(SandwichCalibration {
            x: r.x * c,
            y: r.y * c,
            fee: r.fee,
            front: r.front * c,
            victim: r.victim * c,
        })
    }

    pub fn revenue(&self, order: &[usize], m: usize) -> f64 {
        sandwich_revenue_f64(self.x, self.y, self.fee, self.front, self.victim, order, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub trials: usize,
    pub hits: usize,
    pub p: f64,
    pub se: f64,
    /// Half-width of the normal 95% interval.
    pub ci95: f64,
}

impl TailEstimate {
    pub fn from_hits(hits: usize, trials: usize) -> Self {
        let p = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        TailEstimate {
            trials,
            hits,
            p,
            se,
            ci95: 1.96 * se,
        }
    }
}

/// Per-trial gain of the best withholding subset over opening everything,
/// net of `w` burned per withheld seed. Trial `t` draws its honest and
/// coalition seeds from stream `t` under `seed`, so equal seeds pair trials
/// across different `m`.
pub fn advantage_samples(m: usize, k: usize, w: f64, lambda: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if m < 1 || trials < 1 {
        return Err(Error::InvalidParam("need m >= 1 and trials >= 1".into()));
    }
    if k > 20 {
        return Err(Error::SearchTooLarge(k));
    }
    let cal = SandwichCalibration::for_lambda(lambda)?;
    let costs = vec![w; k];
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive(seed, t as u64);
            let base = fresh_seed(&mut rng, 256);
            let seeds: Vec<_> = (0..k).map(|_| fresh_seed(&mut rng, 256)).collect();
            let out = biased_permutation_attack(&base, &seeds, &costs, 3 * m, |p| cal.revenue(p.mapping(), m))?;
            Ok(out.advantage())
        })
        .collect()
}

/// Empirical probability that withholding gains strictly positive utility
/// of at least `κ·w` with `κ = k`.
pub fn montecarlo_tail(m: usize, k: usize, w: f64, lambda: f64, trials: usize, seed: u64) -> Result<TailEstimate> {
    let kappa = k as f64;
    let adv = advantage_samples(m, k, w, lambda, trials, seed)?;
    let hits = adv.iter().filter(|&&a| a > 0.0 && a >= kappa * w).count();
    Ok(TailEstimate::from_hits(hits, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::bounds::revenue_tail_bound;

    #[test]
    fn calibration_hits_lambda() {
        for lambda in [0.5, 6.37, 109.0] {
            let c = SandwichCalibration::for_lambda(lambda).unwrap();
            assert!((c.canonical_revenue() - lambda).abs() < 1e-9 * lambda);
        }
    }

    #[test]
    fn k0_never_exceeds() {
        let e = montecarlo_tail(1, 0, 1.0, 10.0, 500, 3).unwrap();
        assert_eq!(e.hits, 0);
    }

    #[test]
    fn deterministic() {
        let a = montecarlo_tail(2, 2, 1.0, 3.0, 400, 9).unwrap();
        let b = montecarlo_tail(2, 2, 1.0, 3.0, 400, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_ratio_below_bound() {
        let e = montecarlo_tail(1, 1, 2.0, 1.0, 10_000, 5).unwrap();
        let b = revenue_tail_bound(1, 1, 2.0, 1.0, 1).unwrap();
        assert!(e.p <= b + 3.0 * e.se, "{} vs {b}", e.p);
    }
}
