//! Coalition strategies: biased and chosen permutation attacks, leader
//! streaks, and slippage-controlled sandwiches.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::amount::{self, Amount};
use crate::error::{Error, Result};
use crate::execution::{execute_serial, swap_exact_in, ExecStatus, LedgerState, PoolSpec, PoolState};
use crate::randomness::{combine_seeds, commit, fresh_seed, perm_from_rand_bits};
use crate::types::{Commitment, Direction, PartialSeed, PartyId, Permutation, Transaction, TxKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionSpec {
    pub members: Vec<PartyId>,
    pub k: usize,
    pub k_tilde: usize,
    #[serde(with = "amount::serde_str")]
    pub coordination_cost: Amount,
}

impl CoalitionSpec {
    pub fn kappa(&self) -> usize {
        self.k.min(self.k_tilde)
    }

    pub fn validate(&self, n_leaders: usize) -> Result<()> {
        if self.k > n_leaders {
            return Err(Error::InvalidParam(format!(
                "coalition controls {} commitments but only {n_leaders} exist",
                self.k
            )));
        }
        if self.coordination_cost < amount::zero() {
            return Err(Error::InvalidParam("coordination cost must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlippageAttackParams {
    #[serde(with = "amount::serde_str")]
    pub alpha: Amount,
    #[serde(with = "amount::serde_str")]
    pub beta: Amount,
    #[serde(with = "amount::serde_str")]
    pub gamma: Amount,
    #[serde(with = "amount::serde_str")]
    pub eps1: Amount,
    #[serde(with = "amount::serde_str")]
    pub eps2: Amount,
}

impl SlippageAttackParams {
    pub fn validate(&self) -> Result<()> {
        let z = amount::zero();
        if !(z <= self.beta && self.beta < self.alpha && self.alpha < self.gamma) {
            return Err(Error::InvalidParam("need 0 <= beta < alpha < gamma".into()));
        }
        if self.eps1 <= z || self.eps2 <= z {
            return Err(Error::InvalidParam("slippage margins must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasedOutcome {
    /// Indices into the coalition's seeds that are withheld.
    pub withheld: Vec<usize>,
    pub permutation: Permutation,
    pub revenue: f64,
    pub net: f64,
    pub honest_revenue: f64,
}

impl BiasedOutcome {
    /// Net gain over opening everything.
    pub fn advantage(&self) -> f64 {
        self.net - self.honest_revenue
    }
}

/// Tries every open/withhold subset of the coalition's seeds. `base` is the
/// XOR of the honest openings; withholding seed `s` costs `costs[s]`. Ties go
/// to fewer withheld seeds, then to the lowest subset mask.
pub fn biased_permutation_attack(
    base: &PartialSeed,
    seeds: &[PartialSeed],
    costs: &[f64],
    slots: usize,
    evaluate: impl Fn(&Permutation) -> f64,
) -> Result<BiasedOutcome> {
    let k = seeds.len();
    if k > 20 {
        return Err(Error::SearchTooLarge(k));
    }
    if costs.len() != k {
        return Err(Error::InvalidParam("one cost per coalition seed required".into()));
    }
    let bits = base.bits();
    let mut best: Option<(f64, u32, u32, BiasedOutcome)> = None;
    let mut honest_revenue = 0.0;
    for mask in 0u32..(1 << k) {
        let opened = (0..k).filter(|s| mask & (1 << s) == 0).map(|s| Some(&seeds[s]));
        let seed = combine_seeds(std::iter::once(Some(base)).chain(opened), bits);
        let perm = perm_from_rand_bits(&seed, slots);
        let revenue = evaluate(&perm);
        if mask == 0 {
            honest_revenue = revenue;
        }
        let withheld: Vec<usize> = (0..k).filter(|s| mask & (1 << s) != 0).collect();
        let net = revenue - withheld.iter().map(|&s| costs[s]).sum::<f64>();
        let better = match &best {
            None => true,
            Some((bn, bc, bm, _)) => {
                net > *bn || (net == *bn && (mask.count_ones(), mask) < (*bc, *bm))
            }
        };
        if better {
            best = Some((
                net,
                mask.count_ones(),
                mask,
                BiasedOutcome {
                    withheld,
                    permutation: perm,
                    revenue,
                    net,
                    honest_revenue: 0.0,
                },
            ));
        }
    }
    let mut out = best.expect("at least the empty subset").3;
    out.honest_revenue = honest_revenue;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenOutcome {
    pub seeds: Vec<PartialSeed>,
    pub commitments: Vec<Commitment>,
    pub permutation: Permutation,
    pub planned_revenue: f64,
    pub net: f64,
    pub trials: usize,
}

/// Grinds the coalition's first seed until the derived permutation scores at
/// least `stop_at` or `budget` trials are spent; keeps the best found.
pub fn chosen_permutation_attack(
    n_leaders: usize,
    lambda_bits: usize,
    slots: usize,
    objective: impl Fn(&Permutation) -> f64,
    stop_at: Option<f64>,
    budget: usize,
    coordination_cost: f64,
    rng: &mut dyn RngCore,
) -> Result<ChosenOutcome> {
    if n_leaders == 0 || budget == 0 {
        return Err(Error::InvalidParam("need at least one leader and one trial".into()));
    }
    let mut seeds: Vec<PartialSeed> = (0..n_leaders).map(|_| fresh_seed(rng, lambda_bits)).collect();
    let rest = combine_seeds(seeds[1..].iter().map(Some), lambda_bits);
    let mut best: Option<(f64, PartialSeed, Permutation)> = None;
    let mut trials = 0;
    for _ in 0..budget {
        trials += 1;
        let s0 = fresh_seed(rng, lambda_bits);
        let seed = combine_seeds([Some(&s0), Some(&rest)], lambda_bits);
        let perm = perm_from_rand_bits(&seed, slots);
        let v = objective(&perm);
        if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
            best = Some((v, s0, perm));
        }
        if stop_at.is_some_and(|t| v >= t) {
            break;
        }
    }
    let (planned_revenue, s0, permutation) = best.expect("budget >= 1");
    seeds[0] = s0;
    Ok(ChosenOutcome {
        commitments: seeds.iter().map(commit).collect(),
        seeds,
        permutation,
        planned_revenue,
        net: planned_revenue - coordination_cost,
        trials,
    })
}

/// Permutation realized when the leader at `honest_index` is honest and
/// contributes `honest_seed` instead of the coalition's planned seed.
pub fn realize_with_honest(outcome: &ChosenOutcome, honest_index: usize, honest_seed: &PartialSeed, slots: usize) -> Permutation {
    let bits = honest_seed.bits();
    let seeds = outcome
        .seeds
        .iter()
        .enumerate()
        .map(|(i, s)| if i == honest_index { honest_seed } else { s });
    perm_from_rand_bits(&combine_seeds(seeds.map(Some), bits), slots)
}

/// Probability that one miner with power `p` mines all `n_leaders` blocks of
/// a leader window.
pub fn single_miner_streak_probability(p: f64, n_leaders: usize) -> Result<f64> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::Precondition(format!("power {p} outside [0, 1/2]")));
    }
    Ok(p.powi(n_leaders as i32))
}

/// Fraction of length-`n_leaders` windows fully mined by the adversary in a
/// simulated lottery of `blocks` blocks.
pub fn streak_frequency(p: f64, n_leaders: usize, blocks: usize, rng: &mut impl Rng) -> f64 {
    let miners: Vec<bool> = (0..blocks).map(|_| rng.gen_bool(p)).collect();
    let windows = miners.windows(n_leaders);
    let total = windows.len();
    let hits = miners.windows(n_leaders).filter(|w| w.iter().all(|&a| a)).count();
    hits as f64 / total.max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipTx {
    Tx1,
    Victim,
    Tx2,
}

/// Front-run `tx1` (X to Y), the victim `t*` (X to Y) and back-run `tx2`
/// (Y to X, selling what `tx1` buys at the initial pool).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipScenario {
    pub pool: PoolState,
    #[serde(with = "amount::serde_str")]
    pub tx1_in: Amount,
    #[serde(with = "amount::serde_str")]
    pub victim_in: Amount,
    pub params: SlippageAttackParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlipRates {
    pub tx2_in: String,
    pub xy_tx0: String,
    pub xy_victim: String,
    pub yx_tx1: String,
    pub yx_victim: String,
    pub yx_both: String,
    pub tx1_bound: String,
    pub tx2_bound: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlipRow {
    pub order: [SlipTx; 3],
    pub tx1_executed: bool,
    pub tx2_executed: bool,
    #[serde(with = "amount::serde_str")]
    pub utility: Amount,
    /// Adversary X gain plus Y gain valued at the initial pool price.
    #[serde(with = "amount::serde_str")]
    pub cpmm_revenue: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlipReport {
    pub rows: Vec<SlipRow>,
    #[serde(with = "amount::serde_str")]
    pub expectation: Amount,
    pub rates: SlipRates,
}

pub const SLIP_ORDERS: [[SlipTx; 3]; 6] = {
    use SlipTx::*;
    [
        [Tx1, Victim, Tx2],
        [Tx1, Tx2, Victim],
        [Victim, Tx1, Tx2],
        [Victim, Tx2, Tx1],
        [Tx2, Tx1, Victim],
        [Tx2, Victim, Tx1],
    ]
};

struct Derived {
    tx2_in: Amount,
    xy_tx0: Amount,
    xy_victim: Amount,
    yx_tx1: Amount,
    yx_victim: Amount,
    yx_both: Amount,
    bound1: Amount,
    bound2: Amount,
}

impl SlipScenario {
    fn derive(&self) -> Result<Derived> {
        self.pool.validate()?;
        let p0 = &self.pool;
        let tx1_0 = swap_exact_in(p0, Direction::XToY, &self.tx1_in)?;
        let vic_0 = swap_exact_in(p0, Direction::XToY, &self.victim_in)?;
        let tx2_in = tx1_0.amount_out.clone();
        let xy_victim = swap_exact_in(&vic_0.pool, Direction::XToY, &self.tx1_in)?.rate;
        let yx_tx1 = swap_exact_in(&tx1_0.pool, Direction::YToX, &tx2_in)?.rate;
        let yx_victim = swap_exact_in(&vic_0.pool, Direction::YToX, &tx2_in)?.rate;
        let both = swap_exact_in(&tx1_0.pool, Direction::XToY, &self.victim_in)?.pool;
        let yx_both = swap_exact_in(&both, Direction::YToX, &tx2_in)?.rate;
        Ok(Derived {
            bound1: &tx1_0.rate + &self.params.eps1,
            bound2: &yx_both + &self.params.eps2,
            xy_tx0: tx1_0.rate,
            tx2_in,
            xy_victim,
            yx_tx1,
            yx_victim,
            yx_both,
        })
    }

    fn check_eps1(&self, d: &Derived) -> Result<()> {
        if self.params.eps1 >= &d.xy_victim - &d.xy_tx0 {
            return Err(Error::Precondition(format!(
                "eps1 {} not below {}",
                amount::format(&self.params.eps1),
                amount::format(&(&d.xy_victim - &d.xy_tx0))
            )));
        }
        Ok(())
    }

    fn check_eps2(&self, d: &Derived) -> Result<()> {
        let gap = d.yx_tx1.clone().min(d.yx_victim.clone()) - &d.yx_both;
        if self.params.eps2 >= gap {
            return Err(Error::Precondition(format!(
                "eps2 {} not below {}",
                amount::format(&self.params.eps2),
                amount::format(&gap)
            )));
        }
        Ok(())
    }

    /// Smallest tx1 slippage bound under which the attack's timing is safe.
    pub fn tx1_bound(&self) -> Result<Amount> {
        Ok(self.derive()?.bound1)
    }

    pub fn tx2_bound(&self) -> Result<Amount> {
        Ok(self.derive()?.bound2)
    }

    pub fn tx2_in(&self) -> Result<Amount> {
        Ok(self.derive()?.tx2_in)
    }
}

fn slip_utility(order: &[SlipTx; 3], tx1: bool, tx2: bool, p: &SlippageAttackParams) -> Amount {
    let pos = |t: SlipTx| order.iter().position(|&o| o == t).expect("all three present");
    let (a, v, b) = (pos(SlipTx::Tx1), pos(SlipTx::Victim), pos(SlipTx::Tx2));
    match (tx1, tx2) {
        (true, true) if a < v && v < b => p.alpha.clone(),
        (true, true) if b < v && v < a => -p.alpha.clone(),
        (true, true) => amount::zero(),
        (true, false) if a < v => p.beta.clone(),
        (false, true) if b < v => -p.gamma.clone(),
        _ => amount::zero(),
    }
}

pub fn slip_attack(s: &SlipScenario) -> Result<SlipReport> {
    s.params.validate()?;
    let d = s.derive()?;
    s.check_eps1(&d)?;
    s.check_eps2(&d)?;
    let p_ref = s.pool.price_y_in_x();
    let mut rows = Vec::with_capacity(6);
    for order in SLIP_ORDERS {
        let mut pool = s.pool.clone();
        let (mut tx1, mut tx2) = (false, false);
        let (mut dx, mut dy) = (amount::zero(), amount::zero());
        for t in order {
            match t {
                SlipTx::Victim => pool = swap_exact_in(&pool, Direction::XToY, &s.victim_in)?.pool,
                SlipTx::Tx1 => {
                    let o = swap_exact_in(&pool, Direction::XToY, &s.tx1_in)?;
                    if o.rate <= d.bound1 {
                        tx1 = true;
                        dx -= &s.tx1_in;
                        dy += &o.amount_out;
                        pool = o.pool;
                    }
                }
                SlipTx::Tx2 => {
                    let o = swap_exact_in(&pool, Direction::YToX, &d.tx2_in)?;
                    if o.rate <= d.bound2 {
                        tx2 = true;
                        dy -= &d.tx2_in;
                        dx += &o.amount_out;
                        pool = o.pool;
                    }
                }
            }
        }
        rows.push(SlipRow {
            order,
            tx1_executed: tx1,
            tx2_executed: tx2,
            utility: slip_utility(&order, tx1, tx2, &s.params),
            cpmm_revenue: dx + dy * &p_ref,
        });
    }
    let expectation = rows.iter().fold(amount::zero(), |a, r| a + &r.utility) / amount::int(6);
    let f = amount::format;
    Ok(SlipReport {
        rows,
        expectation,
        rates: SlipRates {
            tx2_in: f(&d.tx2_in),
            xy_tx0: f(&d.xy_tx0),
            xy_victim: f(&d.xy_victim),
            yx_tx1: f(&d.yx_tx1),
            yx_victim: f(&d.yx_victim),
            yx_both: f(&d.yx_both),
            tx1_bound: f(&d.bound1),
            tx2_bound: f(&d.bound2),
        },
    })
}

/// Expected utility when `tx2` is a later conditional transaction.
pub fn long_range_slip_attack(s: &SlipScenario) -> Result<Amount> {
    s.params.validate()?;
    let d = s.derive()?;
    s.check_eps1(&d)?;
    Ok(s.params.beta.clone() / amount::int(2))
}

/// Mean utility over `trials` blocks in which `tx1` and the victim are placed
/// by a random permutation; `tx2` follows in the next block conditioned on
/// `tx1` having executed.
pub fn long_range_slip_mc(s: &SlipScenario, trials: usize, rng: &mut dyn RngCore) -> Result<f64> {
    s.params.validate()?;
    let d = s.derive()?;
    s.check_eps1(&d)?;
    let adv: u32 = 1;
    let victim: u32 = 2;
    let mut base = LedgerState::new();
    base.add_pool(
        PoolSpec {
            account: 1000,
            asset_x: 0,
            asset_y: 1,
            fee: s.pool.fee.clone(),
            quantum: amount::zero(),
        },
        &s.pool,
    )?;
    base.credit(adv, 0, &s.tx1_in);
    base.credit(adv, 1, &d.tx2_in);
    base.credit(victim, 0, &s.victim_in);
    let swap = |id, trader, direction, amount_in: &Amount, max_rate: Option<Amount>| {
        Transaction::new(
            id,
            PartyId(trader as usize),
            TxKind::Swap {
                pool: 0,
                trader,
                direction,
                amount_in: amount_in.clone(),
                max_rate,
            },
        )
    };
    let tx1 = swap(1, adv, Direction::XToY, &s.tx1_in, Some(d.bound1.clone()));
    let vic = swap(2, victim, Direction::XToY, &s.victim_in, None);
    let mut tx2 = swap(3, adv, Direction::YToX, &d.tx2_in, None);
    tx2.requires = Some(1);
    let beta = amount::to_f64(&s.params.beta);
    let mut total = 0.0;
    for _ in 0..trials {
        let perm = perm_from_rand_bits(&fresh_seed(rng, 256), 2);
        let mut st = base.clone();
        let block = perm.apply(&[tx1.clone(), vic.clone()]);
        let r1 = execute_serial(&mut st, &block);
        let r2 = execute_serial(&mut st, std::slice::from_ref(&tx2));
        let tx1_ok = r1.contains(&(1, ExecStatus::Executed));
        if tx1_ok && r2[0].1 == ExecStatus::Executed {
            total += beta;
        }
    }
    Ok(total / trials as f64)
}
