//! Two-stage chunked execution over constant-product pools.
//!
//! Stage one runs every transaction serially in miner order on a scratch copy
//! of the state and records the transfers it produces. Each valid transaction
//! is then split into `m` chunks of `1/m` of those transfers. Stage two walks
//! the chunks in the permuted order. When a parent's first chunk is reached
//! its code is re-run against the committed state, and any difference from
//! the stage-one transfers aborts the whole parent. A parent's chunk deltas
//! are buffered and only committed once all `m` chunks executed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::amount::{self, Amount};
use crate::error::{Error, Result};
use crate::types::{
    AccountId, AssetId, Chunk, Direction, Permutation, Transaction, Transfer, TxId, TxKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    #[serde(with = "amount::serde_str")]
    pub x_reserve: Amount,
    #[serde(with = "amount::serde_str")]
    pub y_reserve: Amount,
    #[serde(with = "amount::serde_str")]
    pub fee: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapOutcome {
    pub amount_out: Amount,
    /// `amount_in / amount_out`.
    pub rate: Amount,
    pub pool: PoolState,
}

impl PoolState {
    pub fn new(x_reserve: Amount, y_reserve: Amount, fee: Amount) -> Result<Self> {
        let p = PoolState {
            x_reserve,
            y_reserve,
            fee,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !amount::is_positive(&self.x_reserve) || !amount::is_positive(&self.y_reserve) {
            return Err(Error::InvalidParam("pool reserves must be positive".into()));
        }
        if self.fee < amount::zero() || self.fee >= amount::one() {
            return Err(Error::InvalidParam("pool fee must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn product(&self) -> Amount {
        &self.x_reserve * &self.y_reserve
    }

    /// Price of one unit of Y in units of X.
    pub fn price_y_in_x(&self) -> Amount {
        &self.x_reserve / &self.y_reserve
    }
}

pub fn swap_exact_in(pool: &PoolState, direction: Direction, amount_in: &Amount) -> Result<SwapOutcome> {
    if !amount::is_positive(amount_in) {
        return Err(Error::NonPositiveAmount(amount::format(amount_in)));
    }
    let (r_in, r_out) = match direction {
        Direction::XToY => (&pool.x_reserve, &pool.y_reserve),
        Direction::YToX => (&pool.y_reserve, &pool.x_reserve),
    };
    let eff = (amount::one() - &pool.fee) * amount_in;
    let amount_out = r_out * &eff / (r_in + &eff);
    let rate = amount_in / &amount_out;
    let new_in = r_in + amount_in;
    let new_out = r_out - &amount_out;
    let pool = match direction {
        Direction::XToY => PoolState {
            x_reserve: new_in,
            y_reserve: new_out,
            fee: pool.fee.clone(),
        },
        Direction::YToX => PoolState {
            x_reserve: new_out,
            y_reserve: new_in,
            fee: pool.fee.clone(),
        },
    };
    Ok(SwapOutcome {
        amount_out,
        rate,
        pool,
    })
}

/// Floating-point mirror of [`swap_exact_in`] returning `(amount_out, x, y)`.
pub fn swap_exact_in_f64(x: f64, y: f64, fee: f64, direction: Direction, amount_in: f64) -> (f64, f64, f64) {
    let eff = (1.0 - fee) * amount_in;
    match direction {
        Direction::XToY => {
            let out = y * eff / (x + eff);
            (out, x + amount_in, y - out)
        }
        Direction::YToX => {
            let out = x * eff / (y + eff);
            (out, x - out, y + amount_in)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub account: AccountId,
    pub asset_x: AssetId,
    pub asset_y: AssetId,
    #[serde(with = "amount::serde_str")]
    pub fee: Amount,
    /// Swap outputs are floored to a multiple of this; zero keeps them exact.
    #[serde(with = "amount::serde_str", default = "amount::zero")]
    pub quantum: Amount,
}

/// Account balances; pool reserves are the balances of each pool's account.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LedgerState {
    balances: BTreeMap<(AccountId, AssetId), Amount>,
    pools: Vec<PoolSpec>,
    executed: BTreeSet<TxId>,
}

impl LedgerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pool(&mut self, spec: PoolSpec, state: &PoolState) -> Result<usize> {
        state.validate()?;
        self.credit(spec.account, spec.asset_x, &state.x_reserve);
        self.credit(spec.account, spec.asset_y, &state.y_reserve);
        self.pools.push(PoolSpec {
            fee: state.fee.clone(),
            ..spec
        });
        Ok(self.pools.len() - 1)
    }

    pub fn credit(&mut self, account: AccountId, asset: AssetId, amt: &Amount) {
        let e = self.balances.entry((account, asset)).or_insert_with(amount::zero);
        *e += amt;
    }

    pub fn balance(&self, account: AccountId, asset: AssetId) -> Amount {
        self.balances.get(&(account, asset)).cloned().unwrap_or_else(amount::zero)
    }

    pub fn balances(&self) -> &BTreeMap<(AccountId, AssetId), Amount> {
        &self.balances
    }

    pub fn pools(&self) -> &[PoolSpec] {
        &self.pools
    }

    pub fn pool_state(&self, pool: usize) -> Option<PoolState> {
        let spec = self.pools.get(pool)?;
        Some(PoolState {
            x_reserve: self.balance(spec.account, spec.asset_x),
            y_reserve: self.balance(spec.account, spec.asset_y),
            fee: spec.fee.clone(),
        })
    }

    pub fn has_executed(&self, id: TxId) -> bool {
        self.executed.contains(&id)
    }

    pub fn mark_executed(&mut self, id: TxId) {
        self.executed.insert(id);
    }

    pub fn apply(&mut self, t: &Transfer) {
        self.credit(t.source, t.asset, &-t.amount.clone());
        self.credit(t.dest, t.asset, &t.amount);
    }

    /// Per-asset total over all accounts, pools included.
    pub fn totals(&self) -> BTreeMap<AssetId, Amount> {
        let mut out: BTreeMap<AssetId, Amount> = BTreeMap::new();
        for ((_, asset), v) in &self.balances {
            *out.entry(*asset).or_insert_with(amount::zero) += v;
        }
        out
    }

    pub fn all_non_negative(&self) -> bool {
        self.balances.values().all(|v| *v >= amount::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Slippage,
    InsufficientBalance,
    UnmetCondition,
    UnknownPool,
}

/// Runs a transaction's code against `state` without mutating it.
pub fn run_code(state: &LedgerState, tx: &Transaction) -> std::result::Result<Vec<Transfer>, Failure> {
    if let Some(req) = tx.requires {
        if !state.has_executed(req) {
            return Err(Failure::UnmetCondition);
        }
    }
    match &tx.kind {
        TxKind::PlainTransfer { from, to, asset, amount: amt } => {
            if state.balance(*from, *asset) < *amt {
                return Err(Failure::InsufficientBalance);
            }
            Ok(vec![Transfer {
                source: *from,
                dest: *to,
                asset: *asset,
                amount: amt.clone(),
            }])
        }
        TxKind::Swap {
            pool,
            trader,
            direction,
            amount_in,
            max_rate,
        } => {
            let spec = state.pools.get(*pool).ok_or(Failure::UnknownPool)?;
            let ps = state.pool_state(*pool).ok_or(Failure::UnknownPool)?;
            let mut out = swap_exact_in(&ps, *direction, amount_in).map_err(|_| Failure::InsufficientBalance)?;
            if amount::is_positive(&spec.quantum) {
                out.amount_out = (&out.amount_out / &spec.quantum).floor() * &spec.quantum;
                if !amount::is_positive(&out.amount_out) {
                    return Err(Failure::InsufficientBalance);
                }
                out.rate = amount_in / &out.amount_out;
            }
            if let Some(bound) = max_rate {
                if out.rate > *bound {
                    return Err(Failure::Slippage);
                }
            }
            let (asset_in, asset_out) = match direction {
                Direction::XToY => (spec.asset_x, spec.asset_y),
                Direction::YToX => (spec.asset_y, spec.asset_x),
            };
            if state.balance(*trader, asset_in) < *amount_in {
                return Err(Failure::InsufficientBalance);
            }
            Ok(vec![
                Transfer {
                    source: *trader,
                    dest: spec.account,
                    asset: asset_in,
                    amount: amount_in.clone(),
                },
                Transfer {
                    source: spec.account,
                    dest: *trader,
                    asset: asset_out,
                    amount: out.amount_out,
                },
            ])
        }
        TxKind::Open { .. } | TxKind::Noop => Ok(Vec::new()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOneResult {
    pub transfers: Vec<Transfer>,
    pub failure: Option<Failure>,
}

impl StageOneResult {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn stage_one_execute(state: &LedgerState, txs: &[Transaction]) -> Vec<StageOneResult> {
    let mut scratch = state.clone();
    txs.iter()
        .map(|tx| match run_code(&scratch, tx) {
            Ok(transfers) => {
                for t in &transfers {
                    scratch.apply(t);
                }
                StageOneResult {
                    transfers,
                    failure: None,
                }
            }
            Err(f) => StageOneResult {
                transfers: Vec::new(),
                failure: Some(f),
            },
        })
        .collect()
}

pub fn chunk(parent: TxId, transfers: &[Transfer], m: usize) -> Vec<Chunk> {
    assert!(m >= 1, "m must be at least 1");
    let part = amount::ratio(1, m as i64);
    (1..=m)
        .map(|index| Chunk {
            parent,
            index,
            transfers: transfers.iter().map(|t| t.scaled(&part)).collect(),
            carries_code: index == 1,
        })
        .collect()
}

/// Swaps each parent's chunk 1 with that parent's earliest-positioned chunk.
pub fn swap_chunk_positions<T, K: Ord + Copy>(items: &mut [T], key: impl Fn(&T) -> (K, usize)) {
    let mut earliest: BTreeMap<K, usize> = BTreeMap::new();
    let mut first: BTreeMap<K, usize> = BTreeMap::new();
    for (pos, it) in items.iter().enumerate() {
        let (parent, index) = key(it);
        earliest.entry(parent).or_insert(pos);
        if index == 1 {
            first.insert(parent, pos);
        }
    }
    for (parent, p1) in first {
        let pe = earliest[&parent];
        if pe != p1 {
            items.swap(pe, p1);
        }
    }
}

pub fn swap_chunks(mut permuted: Vec<Chunk>) -> Vec<Chunk> {
    swap_chunk_positions(&mut permuted, |c| (c.parent, c.index));
    permuted
}

/// Chunk visiting order for `n_txs` transactions: slot `t*m + (c-1)` holds
/// chunk `c` of transaction `t`; slots are permuted, then chunk 1 is swapped
/// to the front of each parent.
pub fn block_chunk_order(perm: &Permutation, n_txs: usize, m: usize) -> Vec<(usize, usize)> {
    let slots: Vec<(usize, usize)> = (0..n_txs * m).map(|s| (s / m, s % m + 1)).collect();
    let mut order = perm.apply(&slots);
    swap_chunk_positions(&mut order, |&(t, c)| (t, c));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Executed,
    Aborted,
    SkippedSlippage,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub parent: TxId,
    pub index: usize,
    pub status: ExecStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceDelta {
    pub account: AccountId,
    pub asset: AssetId,
    #[serde(with = "amount::serde_str")]
    pub amount: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReceipt {
    pub chunks: Vec<ChunkRecord>,
    pub parents: Vec<(TxId, ExecStatus)>,
    pub deltas: Vec<BalanceDelta>,
    pub pools: Vec<PoolState>,
}

impl ExecutionReceipt {
    pub fn status_of(&self, id: TxId) -> Option<ExecStatus> {
        self.parents.iter().find(|(p, _)| *p == id).map(|(_, s)| *s)
    }
}

fn failure_status(f: Failure) -> ExecStatus {
    match f {
        Failure::Slippage => ExecStatus::SkippedSlippage,
        _ => ExecStatus::Invalid,
    }
}

pub fn stage_two_execute(
    state: &mut LedgerState,
    txs: &[Transaction],
    stage_one: &[StageOneResult],
    order: &[(usize, usize)],
    m: usize,
) -> ExecutionReceipt {
    let before = state.balances.clone();
    let part = amount::ratio(1, m as i64);
    let mut status: Vec<Option<ExecStatus>> = stage_one
        .iter()
        .map(|r| r.failure.map(failure_status))
        .collect();
    let mut buffers: Vec<Vec<Transfer>> = vec![Vec::new(); txs.len()];
    let mut done = vec![0usize; txs.len()];
    let mut chunks = Vec::with_capacity(order.len());

    for &(t, c) in order {
        let tx = &txs[t];
        if let Some(s) = status[t] {
            chunks.push(ChunkRecord {
                parent: tx.id,
                index: c,
                status: s,
            });
            continue;
        }
        if c == 1 {
            let rerun = run_code(state, tx);
            let matches = matches!(&rerun, Ok(tr) if *tr == stage_one[t].transfers);
            if !matches {
                let s = match rerun {
                    Err(Failure::Slippage) => ExecStatus::SkippedSlippage,
                    _ => ExecStatus::Aborted,
                };
                status[t] = Some(s);
                buffers[t].clear();
                chunks.push(ChunkRecord {
                    parent: tx.id,
                    index: c,
                    status: s,
                });
                continue;
            }
        }
        buffers[t].extend(stage_one[t].transfers.iter().map(|tr| tr.scaled(&part)));
        done[t] += 1;
        chunks.push(ChunkRecord {
            parent: tx.id,
            index: c,
            status: ExecStatus::Executed,
        });
        if done[t] == m {
            let mut trial = state.clone();
            for tr in &buffers[t] {
                trial.apply(tr);
            }
            if trial.all_non_negative() {
                *state = trial;
                state.executed.insert(tx.id);
                status[t] = Some(ExecStatus::Executed);
            } else {
                status[t] = Some(ExecStatus::Aborted);
            }
            buffers[t].clear();
        }
    }

    // Chunks recorded as executed belong to parents that later aborted.
    for rec in chunks.iter_mut() {
        let t = txs.iter().position(|x| x.id == rec.parent).expect("chunk parent in block");
        if rec.status == ExecStatus::Executed && status[t] != Some(ExecStatus::Executed) {
            rec.status = status[t].unwrap_or(ExecStatus::Aborted);
        }
    }

    let parents = txs
        .iter()
        .zip(&status)
        .map(|(tx, s)| (tx.id, s.unwrap_or(ExecStatus::Aborted)))
        .collect();
    let mut deltas = Vec::new();
    let keys: BTreeSet<_> = before.keys().chain(state.balances.keys()).copied().collect();
    for k in keys {
        let b = before.get(&k).cloned().unwrap_or_else(amount::zero);
        let a = state.balances.get(&k).cloned().unwrap_or_else(amount::zero);
        if a != b {
            deltas.push(BalanceDelta {
                account: k.0,
                asset: k.1,
                amount: a - b,
            });
        }
    }
    let pools = (0..state.pools.len())
        .map(|i| state.pool_state(i).expect("pool index"))
        .collect();
    ExecutionReceipt {
        chunks,
        parents,
        deltas,
        pools,
    }
}

/// Stage one, chunk ordering under `perm`, and stage two.
pub fn execute_block(
    state: &mut LedgerState,
    txs: &[Transaction],
    perm: &Permutation,
    m: usize,
) -> ExecutionReceipt {
    let s1 = stage_one_execute(state, txs);
    let order = block_chunk_order(perm, txs.len(), m);
    stage_two_execute(state, txs, &s1, &order, m)
}

/// Plain serial execution of one block in the given order, for reference.
/// Conditions only see transactions from earlier blocks.
pub fn execute_serial(state: &mut LedgerState, txs: &[Transaction]) -> Vec<(TxId, ExecStatus)> {
    let out: Vec<(TxId, ExecStatus)> = txs
        .iter()
        .map(|tx| match run_code(state, tx) {
            Ok(transfers) => {
                for t in &transfers {
                    state.apply(t);
                }
                (tx.id, ExecStatus::Executed)
            }
            Err(f) => (tx.id, failure_status(f)),
        })
        .collect();
    for (id, s) in &out {
        if *s == ExecStatus::Executed {
            state.executed.insert(*id);
        }
    }
    out
}

/// Adversary net X from a front-run / victim / back-run triple whose `3m`
/// chunks execute as live swaps in `order` (slot `p*m + c`, with parent 0 the
/// front-run, 1 the victim, 2 the back-run). The back-run sells the Y the
/// front-run would have received at the initial pool.
pub fn sandwich_revenue(
    pool: &PoolState,
    front: &Amount,
    victim: &Amount,
    order: &Permutation,
    m: usize,
) -> Result<Amount> {
    if order.len() != 3 * m {
        return Err(Error::InvalidParam(format!(
            "order has length {}, expected {}",
            order.len(),
            3 * m
        )));
    }
    let y_front = swap_exact_in(pool, Direction::XToY, front)?.amount_out;
    let part = amount::ratio(1, m as i64);
    let legs = [
        (Direction::XToY, front * &part),
        (Direction::XToY, victim * &part),
        (Direction::YToX, &y_front * &part),
    ];
    let mut p = pool.clone();
    let mut proceeds = amount::zero();
    for &slot in order.mapping() {
        let parent = slot / m;
        let (dir, amt) = &legs[parent];
        let out = swap_exact_in(&p, *dir, amt)?;
        if parent == 2 {
            proceeds += &out.amount_out;
        }
        p = out.pool;
    }
    Ok(proceeds - front)
}

/// Floating-point mirror of [`sandwich_revenue`] over a raw slot order.
pub fn sandwich_revenue_f64(x: f64, y: f64, fee: f64, front: f64, victim: f64, order: &[usize], m: usize) -> f64 {
    let (y_front, _, _) = swap_exact_in_f64(x, y, fee, Direction::XToY, front);
    let mf = m as f64;
    let legs = [
        (Direction::XToY, front / mf),
        (Direction::XToY, victim / mf),
        (Direction::YToX, y_front / mf),
    ];
    let (mut px, mut py) = (x, y);
    let mut proceeds = 0.0;
    for &slot in order {
        let parent = slot / m;
        let (dir, amt) = legs[parent];
        let (out, nx, ny) = swap_exact_in_f64(px, py, fee, dir, amt);
        if parent == 2 {
            proceeds += out;
        }
        px = nx;
        py = ny;
    }
    proceeds - front
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::{int, ratio};
    use crate::types::PartyId;

    fn pool100() -> PoolState {
        PoolState::new(int(100), int(100), int(0)).unwrap()
    }

    #[test]
    fn swap_formula_example() {
        let out = swap_exact_in(&pool100(), Direction::XToY, &int(10)).unwrap();
        assert_eq!(out.amount_out, ratio(100, 11));
        assert_eq!(out.rate, ratio(11, 10));
        assert_eq!(out.pool.product(), pool100().product());
    }

    #[test]
    fn marginal_rate_limit() {
        let tiny = ratio(1, 1_000_000_000);
        let out = swap_exact_in(&pool100(), Direction::XToY, &tiny).unwrap();
        assert!((amount::to_f64(&out.rate) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn swap_rejects_non_positive() {
        assert!(swap_exact_in(&pool100(), Direction::XToY, &int(0)).is_err());
        assert!(swap_exact_in(&pool100(), Direction::YToX, &int(-1)).is_err());
    }

    #[test]
    fn fee_reduces_output() {
        let p = PoolState::new(int(100), int(100), ratio(3, 1000)).unwrap();
        let with_fee = swap_exact_in(&p, Direction::XToY, &int(10)).unwrap();
        assert!(with_fee.amount_out < ratio(100, 11));
        assert!(with_fee.pool.product() > pool100().product());
    }

    #[test]
    fn chunk_examples() {
        let t = Transfer::new(0, 1, 0, int(1)).unwrap();
        let c = chunk(7, std::slice::from_ref(&t), 4);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|ch| ch.transfers[0].amount == ratio(1, 4)));
        assert!(c[0].carries_code && !c[1].carries_code);
        let one = chunk(7, std::slice::from_ref(&t), 1);
        assert_eq!(one[0].transfers, vec![t]);
        let odd = Transfer::new(0, 1, 0, ratio(10, 3)).unwrap();
        let c3 = chunk(8, &[odd], 3);
        assert!(c3.iter().all(|ch| ch.transfers[0].amount == ratio(10, 9)));
    }

    #[test]
    fn swap_chunks_defining_case() {
        let mk = |parent: TxId, index: usize| Chunk {
            parent,
            index,
            transfers: vec![],
            carries_code: index == 1,
        };
        let mut v: Vec<Chunk> = (0..10).map(|i| mk(100 + i, 1)).collect();
        v[7] = mk(1, 1);
        v[2] = mk(1, 2);
        v[9] = mk(1, 3);
        let out = swap_chunks(v.clone());
        assert_eq!((out[2].parent, out[2].index), (1, 1));
        assert_eq!((out[7].parent, out[7].index), (1, 2));
        assert_eq!((out[9].parent, out[9].index), (1, 3));
        let fixed = swap_chunks(out.clone());
        assert_eq!(fixed, out);
    }

    #[test]
    fn sandwich_canonical_order() {
        let order = Permutation::new(vec![0, 1, 2]).unwrap();
        let rev = sandwich_revenue(&pool100(), &int(10), &int(10), &order, 1).unwrap();
        let y_f = ratio(100, 11);
        let expected = int(120) * &y_f / (ratio(250, 3) + &y_f) - int(10);
        assert_eq!(rev, expected);
        assert!((amount::to_f64(&rev) - 1.803_278_688_5).abs() < 1e-9);
    }

    #[test]
    fn sandwich_reverse_order_negative() {
        let order = Permutation::new(vec![2, 1, 0]).unwrap();
        let rev = sandwich_revenue(&pool100(), &int(10), &int(10), &order, 1).unwrap();
        assert!(rev < int(0));
    }

    #[test]
    fn sandwich_f64_matches_exact() {
        let order = Permutation::new(vec![3, 0, 5, 1, 4, 2]).unwrap();
        let exact = sandwich_revenue(&pool100(), &int(10), &int(7), &order, 2).unwrap();
        let fast = sandwich_revenue_f64(100.0, 100.0, 0.0, 10.0, 7.0, order.mapping(), 2);
        assert!((amount::to_f64(&exact) - fast).abs() < 1e-10);
    }

    fn setup() -> LedgerState {
        let mut s = LedgerState::new();
        let spec = PoolSpec {
            account: 1000,
            asset_x: 0,
            asset_y: 1,
            fee: int(0),
            quantum: int(0),
        };
        s.add_pool(spec, &pool100()).unwrap();
        for a in 0..4 {
            s.credit(a, 0, &int(50));
            s.credit(a, 1, &int(50));
        }
        s
    }

    fn swap(id: TxId, trader: AccountId, dir: Direction, amt: i64) -> Transaction {
        Transaction::new(
            id,
            PartyId(0),
            TxKind::Swap {
                pool: 0,
                trader,
                direction: dir,
                amount_in: int(amt),
                max_rate: None,
            },
        )
    }

    #[test]
    fn stage_one_is_serial() {
        let s = setup();
        let txs = vec![swap(1, 0, Direction::XToY, 10), swap(2, 1, Direction::XToY, 10)];
        let r = stage_one_execute(&s, &txs);
        assert_eq!(r[0].transfers[1].amount, ratio(100, 11));
        let after_first = swap_exact_in(&pool100(), Direction::XToY, &int(10)).unwrap().pool;
        let second = swap_exact_in(&after_first, Direction::XToY, &int(10)).unwrap();
        assert_eq!(r[1].transfers[1].amount, second.amount_out);
    }

    #[test]
    fn stage_one_plain_transfer_and_slippage() {
        let s = setup();
        let plain = Transaction::new(
            1,
            PartyId(0),
            TxKind::PlainTransfer {
                from: 0,
                to: 1,
                asset: 0,
                amount: int(1),
            },
        );
        let mut tight = swap(2, 0, Direction::XToY, 10);
        if let TxKind::Swap { max_rate, .. } = &mut tight.kind {
            *max_rate = Some(int(1));
        }
        let r = stage_one_execute(&s, &[plain, tight]);
        assert_eq!(r[0].transfers, vec![Transfer::new(0, 1, 0, int(1)).unwrap()]);
        assert_eq!(r[1].failure, Some(Failure::Slippage));
        assert!(r[1].transfers.is_empty());
    }

    #[test]
    fn interleaved_victim_aborts_with_zero_effect() {
        let m = 2;
        let txs = vec![swap(1, 0, Direction::XToY, 10), swap(2, 1, Direction::XToY, 10)];
        let mut s = setup();
        let s1 = stage_one_execute(&s, &txs);
        // Victim chunk 1 runs while the front-run is only half done.
        let order = vec![(0, 1), (1, 1), (0, 2), (1, 2)];
        let rec = stage_two_execute(&mut s, &txs, &s1, &order, m);
        assert_eq!(rec.status_of(2), Some(ExecStatus::Aborted));
        assert_eq!(rec.status_of(1), Some(ExecStatus::Executed));
        assert_eq!(s.balance(1, 0), int(50));
        assert_eq!(s.balance(1, 1), int(50));
    }

    #[test]
    fn early_sibling_chunks_roll_back() {
        let m = 3;
        let txs = vec![swap(1, 0, Direction::XToY, 10), swap(2, 1, Direction::XToY, 10)];
        let mut s = setup();
        let s1 = stage_one_execute(&s, &txs);
        let order = vec![(1, 2), (1, 3), (0, 1), (0, 2), (0, 3), (1, 1)];
        let before = s.clone();
        let rec = stage_two_execute(&mut s, &txs, &s1, &order, m);
        assert_eq!(rec.status_of(2), Some(ExecStatus::Executed));
        let mut s2 = before.clone();
        let order2 = vec![(1, 2), (1, 3), (1, 1), (0, 1), (0, 2), (0, 3)];
        let rec2 = stage_two_execute(&mut s2, &txs, &s1, &order2, m);
        assert_eq!(rec2.status_of(2), Some(ExecStatus::Aborted));
        assert_eq!(s2.balance(1, 0), before.balance(1, 0));
        assert_eq!(s2.balance(1, 1), before.balance(1, 1));
        assert_eq!(s2.totals(), before.totals());
    }

    #[test]
    fn m1_identity_matches_serial() {
        let txs = vec![
            swap(1, 0, Direction::XToY, 10),
            swap(2, 1, Direction::YToX, 4),
            swap(3, 2, Direction::XToY, 7),
        ];
        let mut a = setup();
        let mut b = setup();
        execute_block(&mut a, &txs, &Permutation::identity(3), 1);
        execute_serial(&mut b, &txs);
        assert_eq!(a.balances(), b.balances());
    }

    #[test]
    fn conditional_requires_prior_execution() {
        let mut s = setup();
        let mut tx = swap(5, 0, Direction::XToY, 1);
        tx.requires = Some(99);
        assert_eq!(run_code(&s, &tx), Err(Failure::UnmetCondition));
        s.mark_executed(99);
        assert!(run_code(&s, &tx).is_ok());
    }
}
