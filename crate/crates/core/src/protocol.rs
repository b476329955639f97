//! Commit-reveal ordering layer.
//!
//! Every mined block carries `n_ℓ` fresh commitments; commitment `j` of block
//! `i` seeds block `i + j`. When the adopted chain reaches height `h`, each
//! party opens its seeds for block `h - τ1 - 1`. When the base chain delivers
//! height `h`, block `i_del = h - τ1 - τ2` is delivered with the permutation
//! derived from the XOR of the openings posted in its loud phase.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basechain::{BlockStore, ChainView};
use crate::error::{Error, Result};
use crate::execution::block_chunk_order;
use crate::randomness::{combine_seeds, commit, fresh_seed, perm_from_rand_bits, verify_opening, SeedMatrixEntry};
use crate::types::{
    Block, BlockId, Commitment, PartialSeed, PartyId, Permutation, ProtocolParams, Transaction, TxId,
    TxKind,
};

pub trait ChainAccess {
    fn block_at(&self, height: u64) -> Option<&Block>;
}

impl ChainAccess for [Block] {
    fn block_at(&self, height: u64) -> Option<&Block> {
        self.get(height as usize)
    }
}

impl ChainAccess for Vec<Block> {
    fn block_at(&self, height: u64) -> Option<&Block> {
        self.get(height as usize)
    }
}

/// A party's adopted chain resolved against the global block store.
pub struct ViewChain<'a> {
    pub store: &'a BlockStore,
    pub view: &'a ChainView,
}

impl ChainAccess for ViewChain<'_> {
    fn block_at(&self, height: u64) -> Option<&Block> {
        self.view.at(height).map(|id| self.store.get(id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CommitStatus {
    Opened { appender: PartyId, at: u64 },
    Stolen { by: PartyId, at: u64 },
    Burned,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitOutcome {
    pub i: u64,
    pub j: usize,
    pub committer: PartyId,
    #[serde(flatten)]
    pub status: CommitStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pi3Delivery {
    pub height: u64,
    pub block: BlockId,
    pub miner: Option<PartyId>,
    pub seed_hex: String,
    pub permutation: Permutation,
    pub chunk_order: Vec<(usize, usize)>,
    pub outcomes: Vec<CommitOutcome>,
    pub confirmed_by: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Pi3State {
    sigma_store: BTreeMap<BlockId, Vec<PartialSeed>>,
    seed_matrix: BTreeMap<(u64, usize), SeedMatrixEntry>,
    excluded: BTreeSet<PartyId>,
    pub delivered: Vec<Pi3Delivery>,
}

impl Pi3State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store_seeds(&mut self, block: BlockId, seeds: Vec<PartialSeed>) {
        self.sigma_store.insert(block, seeds);
    }

    pub fn seeds_for(&self, block: BlockId) -> Option<&[PartialSeed]> {
        self.sigma_store.get(&block).map(Vec::as_slice)
    }

    pub fn seed_entry(&self, i: u64, j: usize) -> Option<&SeedMatrixEntry> {
        self.seed_matrix.get(&(i, j))
    }

    pub fn seed_matrix(&self) -> impl Iterator<Item = &SeedMatrixEntry> {
        self.seed_matrix.values()
    }

    pub fn excluded(&self) -> &BTreeSet<PartyId> {
        &self.excluded
    }

    fn record(&mut self, e: SeedMatrixEntry) {
        self.seed_matrix.entry((e.i, e.j)).or_insert(e);
    }
}

pub fn open_tx_id(i: u64, j: usize, sigma: &PartialSeed) -> TxId {
    let mut h = Sha256::new();
    h.update(b"open");
    h.update(i.to_be_bytes());
    h.update((j as u64).to_be_bytes());
    h.update(sigma.bytes());
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn open_tx(i: u64, j: usize, sigma: &PartialSeed, submitter: PartyId) -> Transaction {
    Transaction::new(
        open_tx_id(i, j, sigma),
        submitter,
        TxKind::Open {
            i,
            j,
            sigma: sigma.bytes().to_vec(),
        },
    )
}

/// Fresh seeds and their commitments for a new block.
pub fn make_commitments(params: &ProtocolParams, rng: &mut dyn RngCore) -> (Vec<Option<Commitment>>, Vec<PartialSeed>) {
    let seeds: Vec<PartialSeed> = (0..params.n_leaders)
        .map(|_| fresh_seed(rng, params.lambda_bits))
        .collect();
    (seeds.iter().map(|s| Some(commit(s))).collect(), seeds)
}

pub fn make_block(
    parent: &Block,
    miner: PartyId,
    txs: Vec<Transaction>,
    params: &ProtocolParams,
    rng: &mut dyn RngCore,
) -> Result<(Block, Vec<PartialSeed>)> {
    if txs.len() != params.n_t {
        return Err(Error::InvalidParam(format!(
            "block needs exactly {} transactions, got {}",
            params.n_t,
            txs.len()
        )));
    }
    let (coms, seeds) = make_commitments(params, rng);
    Ok((Block::new(parent, miner, txs, coms), seeds))
}

/// Openings that `me` owes once the chain reaches `height`.
pub fn on_mined(
    chain: &(impl ChainAccess + ?Sized),
    height: u64,
    me: &[PartyId],
    state: &Pi3State,
    params: &ProtocolParams,
) -> Vec<Transaction> {
    let Some(i_open) = height.checked_sub(params.tau1 + 1) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for j in 1..=params.n_leaders {
        let Some(i) = i_open.checked_sub(j as u64).filter(|&i| i >= 1) else {
            continue;
        };
        let Some(b) = chain.block_at(i) else { continue };
        let Some(miner) = b.miner.filter(|m| me.contains(m)) else {
            continue;
        };
        if let Some(sigma) = state.seeds_for(b.id).and_then(|s| s.get(j - 1)) {
            out.push(open_tx(i, j, sigma, miner));
        }
    }
    out
}

fn openings_in(b: &Block) -> impl Iterator<Item = (u64, usize, &[u8])> {
    b.txs.iter().filter_map(|t| match &t.kind {
        TxKind::Open { i, j, sigma } => Some((*i, *j, sigma.as_slice())),
        _ => None,
    })
}

fn find_opening(
    chain: &(impl ChainAccess + ?Sized),
    heights: std::ops::RangeInclusive<u64>,
    i: u64,
    j: usize,
    c: &Commitment,
    lambda_bits: usize,
) -> Option<(PartialSeed, PartyId, u64)> {
    for h in heights {
        let b = chain.block_at(h)?;
        for (k, l, sigma) in openings_in(b) {
            if k != i || l != j {
                continue;
            }
            let Ok(s) = PartialSeed::new(sigma.to_vec(), lambda_bits) else {
                continue;
            };
            if verify_opening(&s, c) {
                return Some((s, b.miner?, h));
            }
        }
    }
    None
}

/// Processes base-chain delivery of `height`; returns the delivery of
/// `height - τ1 - τ2` once that index is positive.
pub fn on_delivered(
    chain: &(impl ChainAccess + ?Sized),
    height: u64,
    confirmed_by: u64,
    state: &mut Pi3State,
    params: &ProtocolParams,
) -> Option<Pi3Delivery> {
    let i_del = height.checked_sub(params.tau1 + params.tau2).filter(|&h| h >= 1)?;
    let block = chain.block_at(i_del)?;
    let leaders: BTreeSet<PartyId> = (1..=params.n_leaders as u64)
        .filter_map(|j| i_del.checked_sub(j).filter(|&i| i >= 1))
        .filter_map(|i| chain.block_at(i)?.miner)
        .collect();
    let loud = i_del + params.tau1 + 1..=i_del + params.tau1 + params.tau2;
    let silent = i_del + 1..=i_del + params.tau1;

    let mut outcomes = Vec::new();
    let mut opened = Vec::new();
    let mut newly_excluded = Vec::new();
    for j in 1..=params.n_leaders {
        let Some(i) = i_del.checked_sub(j as u64).filter(|&i| i >= 1) else {
            continue;
        };
        let src = chain.block_at(i)?;
        let (Some(committer), Some(Some(c))) = (src.miner, src.coms.get(j - 1)) else {
            continue;
        };
        let mut entry = SeedMatrixEntry {
            i,
            j,
            sigma: None,
            commitment: *c,
        };
        let status = if state.excluded.contains(&committer) {
            CommitStatus::Excluded
        } else if let Some((_, by, at)) = find_opening(chain, silent.clone(), i, j, c, params.lambda_bits)
            .filter(|(_, by, _)| *by != committer && leaders.contains(by))
        {
            newly_excluded.push(committer);
            CommitStatus::Stolen { by, at }
        } else if let Some((s, appender, at)) = find_opening(chain, loud.clone(), i, j, c, params.lambda_bits) {
            entry.sigma = Some(s.clone());
            opened.push(s);
            CommitStatus::Opened { appender, at }
        } else {
            CommitStatus::Burned
        };
        state.record(entry);
        outcomes.push(CommitOutcome {
            i,
            j,
            committer,
            status,
        });
    }
    state.excluded.extend(newly_excluded);

    let seed = combine_seeds(opened.iter().map(Some), params.lambda_bits);
    let slots = block.txs.len() * params.m;
    let permutation = if i_del <= params.bootstrap_height() {
        Permutation::identity(slots)
    } else {
        perm_from_rand_bits(&seed, slots)
    };
    let chunk_order = block_chunk_order(&permutation, block.txs.len(), params.m);
    let d = Pi3Delivery {
        height: i_del,
        block: block.id,
        miner: block.miner,
        seed_hex: seed.to_hex(),
        permutation,
        chunk_order,
        outcomes,
        confirmed_by,
    };
    state.delivered.push(d.clone());
    Some(d)
}

/// Pending transactions ordered by arrival; duplicate ids are dropped.
#[derive(Debug, Clone, Default)]
pub struct Mempool {
    queue: BTreeMap<u64, Transaction>,
    ids: BTreeSet<TxId>,
    next: u64,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, tx: Transaction) -> bool {
        if !self.ids.insert(tx.id) {
            return false;
        }
        self.queue.insert(self.next, tx);
        self.next += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.ids.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.queue.values()
    }

    pub fn remove_where(&mut self, mut pred: impl FnMut(&Transaction) -> bool) {
        let ids = &mut self.ids;
        self.queue.retain(|_, t| {
            let drop = pred(t);
            if drop {
                ids.remove(&t.id);
            }
            !drop
        });
    }
}

/// Whether an opening may still land in a block at `height`.
pub fn opening_in_loud_phase(tx: &Transaction, height: u64, params: &ProtocolParams) -> bool {
    match tx.kind {
        TxKind::Open { i, j, .. } => {
            let target = i + j as u64;
            height > target + params.tau1 && height <= target + params.tau1 + params.tau2
        }
        _ => false,
    }
}

pub fn opening_expired(tx: &Transaction, height: u64, params: &ProtocolParams) -> bool {
    match tx.kind {
        TxKind::Open { i, j, .. } => height > i + j as u64 + params.tau1 + params.tau2,
        _ => false,
    }
}

/// Honest block contents at `height`: loud-phase openings, then the oldest
/// other pending transactions, then no-ops up to exactly `n_t`.
pub fn honest_selection(
    pool: &Mempool,
    height: u64,
    params: &ProtocolParams,
    miner: PartyId,
    parent: BlockId,
    mut usable: impl FnMut(&Transaction) -> bool,
) -> Vec<Transaction> {
    let mut out: Vec<Transaction> = Vec::with_capacity(params.n_t);
    for tx in pool.iter() {
        if out.len() == params.n_t {
            break;
        }
        if opening_in_loud_phase(tx, height, params) && usable(tx) {
            out.push(tx.clone());
        }
    }
    for tx in pool.iter() {
        if out.len() == params.n_t {
            break;
        }
        if !tx.is_open() && !matches!(tx.kind, TxKind::Noop) && usable(tx) {
            out.push(tx.clone());
        }
    }
    pad_noops(&mut out, params.n_t, miner, parent);
    out
}

pub fn noop_id(parent: BlockId, slot: usize) -> TxId {
    let mut h = Sha256::new();
    h.update(b"noop");
    h.update(parent.0.to_be_bytes());
    h.update((slot as u64).to_be_bytes());
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn pad_noops(txs: &mut Vec<Transaction>, n_t: usize, miner: PartyId, parent: BlockId) {
    let mut slot = 0;
    while txs.len() < n_t {
        txs.push(Transaction::noop(noop_id(parent, slot), miner));
        slot += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    fn params() -> ProtocolParams {
        ProtocolParams {
            n_leaders: 3,
            tau1: 5,
            tau2: 3,
            d: 2,
            n_t: 4,
            ..ProtocolParams::default()
        }
    }

    /// Chain of `len` blocks mined round-robin by `miners`, keeping seeds.
    fn build(len: u64, miners: &[usize], p: &ProtocolParams) -> (Vec<Block>, Vec<Vec<PartialSeed>>) {
        let mut rng = derive(42, 0);
        let mut blocks = vec![Block::genesis(p.n_leaders)];
        let mut seeds = vec![Vec::new()];
        for h in 1..=len {
            let miner = PartyId(miners[h as usize % miners.len()]);
            let mut txs = Vec::new();
            pad_noops(&mut txs, p.n_t, miner, blocks.last().unwrap().id);
            let (b, s) = make_block(blocks.last().unwrap(), miner, txs, p, &mut rng).unwrap();
            blocks.push(b);
            seeds.push(s);
        }
        (blocks, seeds)
    }

    fn put_open(blocks: &mut [Block], at: u64, i: u64, j: usize, sigma: &PartialSeed) {
        let miner = blocks[at as usize].miner.unwrap();
        blocks[at as usize].txs[0] = open_tx(i, j, sigma, miner);
    }

    #[test]
    fn make_block_commitments_verify() {
        let p = params();
        let (blocks, seeds) = build(2, &[0], &p);
        assert_eq!(blocks[1].coms.len(), 3);
        assert!(crate::types::validate_block(&blocks[1], 3, |_| true));
        for (c, s) in blocks[1].coms.iter().zip(&seeds[1]) {
            assert!(verify_opening(s, c.as_ref().unwrap()));
        }
        let a: BTreeSet<_> = blocks[1].coms.iter().collect();
        assert!(blocks[2].coms.iter().all(|c| !a.contains(c)));
        let wrong = make_block(&blocks[0], PartyId(0), vec![], &p, &mut derive(1, 1));
        assert!(wrong.is_err());
    }

    #[test]
    fn on_mined_targets_and_offsets() {
        let p = params();
        let (blocks, seeds) = build(30, &[0, 1, 2, 3], &p);
        let mut st = Pi3State::new();
        // Party 2 mined heights 2, 6, 10, 14, 18.
        for &bh in &[14u64, 18] {
            st.store_seeds(blocks[bh as usize].id, seeds[bh as usize].clone());
        }
        // Height 22 opens for block 16, whose offset-2 leader mined block 14.
        let opens = on_mined(&blocks, 22, &[PartyId(2)], &st, &p);
        assert_eq!(opens.len(), 1);
        let TxKind::Open { i, j, sigma } = &opens[0].kind else { panic!() };
        assert_eq!((*i, *j), (14, 2));
        assert_eq!(sigma, seeds[14][1].bytes());
        // With τ1 = 5, height 20 opens for block 14.
        let at20 = on_mined(&blocks, 20, &[PartyId(0), PartyId(1), PartyId(3)], &st, &p);
        assert!(at20.is_empty());
        assert!(on_mined(&blocks, 22, &[PartyId(9)], &st, &p).is_empty());
        assert!(on_mined(&blocks, p.tau1, &[PartyId(2)], &st, &p).is_empty());
    }

    #[test]
    fn on_mined_index_arithmetic() {
        let p = params();
        let (blocks, seeds) = build(30, &[0], &p);
        let mut st = Pi3State::new();
        for h in 1..=30 {
            st.store_seeds(blocks[h].id, seeds[h].clone());
        }
        let opens = on_mined(&blocks, 20, &[PartyId(0)], &st, &p);
        assert_eq!(opens.len(), p.n_leaders);
        for o in &opens {
            let TxKind::Open { i, j, .. } = o.kind else { panic!() };
            assert_eq!(i + j as u64, 14);
        }
    }

    fn full_open(blocks: &mut [Block], seeds: &[Vec<PartialSeed>], p: &ProtocolParams, target: u64) {
        for j in 1..=p.n_leaders {
            let i = target - j as u64;
            let at = target + p.tau1 + 1 + (j as u64 - 1) % p.tau2;
            let idx = blocks[at as usize].txs.iter().position(|t| matches!(t.kind, TxKind::Noop)).unwrap();
            let miner = blocks[at as usize].miner.unwrap();
            blocks[at as usize].txs[idx] = open_tx(i, j, &seeds[i as usize][j - 1], miner);
        }
    }

    #[test]
    fn full_openings_seed_is_xor() {
        let p = params();
        let (mut blocks, seeds) = build(40, &[0, 1, 2], &p);
        let target = 20;
        full_open(&mut blocks, &seeds, &p, target);
        let mut st = Pi3State::new();
        let d = on_delivered(&blocks, target + p.tau1 + p.tau2, 0, &mut st, &p).unwrap();
        let expect = combine_seeds((1..=3).map(|j| Some(&seeds[target as usize - j][j - 1])), 256);
        assert_eq!(d.seed_hex, expect.to_hex());
        assert_eq!(d.permutation, perm_from_rand_bits(&expect, p.slots()));
        assert!(d.outcomes.iter().all(|o| matches!(o.status, CommitStatus::Opened { .. })));
    }

    #[test]
    fn wrong_preimage_and_late_opening_excluded() {
        let p = params();
        let (mut blocks, seeds) = build(40, &[0, 1, 2], &p);
        let target = 20u64;
        let s2 = &seeds[target as usize - 2][1];
        let s3 = &seeds[target as usize - 3][2];
        put_open(&mut blocks, target + p.tau1 + 1, target - 1, 1, &seeds[0].first().cloned().unwrap_or_else(|| PartialSeed::zero(256)));
        put_open(&mut blocks, target + p.tau1 + 2, target - 2, 2, s2);
        put_open(&mut blocks, target + p.tau1 + p.tau2 + 1, target - 3, 3, s3);
        let mut st = Pi3State::new();
        let d = on_delivered(&blocks, target + p.tau1 + p.tau2, 0, &mut st, &p).unwrap();
        assert_eq!(d.seed_hex, s2.to_hex());
        let burned = d.outcomes.iter().filter(|o| o.status == CommitStatus::Burned).count();
        assert_eq!(burned, 2);
    }

    #[test]
    fn rival_leader_theft_excludes_committer() {
        let p = params();
        let (mut blocks, seeds) = build(60, &[0, 1, 2], &p);
        let target = 21u64;
        // Block 20 (party 2) commitment 1 revealed early in block 22 by party 1.
        assert_eq!(blocks[22].miner, Some(PartyId(1)));
        put_open(&mut blocks, 22, 20, 1, &seeds[20][0]);
        let mut st = Pi3State::new();
        for h in 1..=target + p.tau1 + p.tau2 + 6 {
            on_delivered(&blocks, h, 0, &mut st, &p);
        }
        let d = st.delivered.iter().find(|d| d.height == target).unwrap();
        let o = d.outcomes.iter().find(|o| o.i == 20).unwrap();
        assert_eq!(o.status, CommitStatus::Stolen { by: PartyId(1), at: 22 });
        assert!(st.excluded().contains(&PartyId(2)));
        let later = st.delivered.iter().find(|d| d.height == target + 3).unwrap();
        assert!(later
            .outcomes
            .iter()
            .filter(|o| o.committer == PartyId(2))
            .all(|o| o.status == CommitStatus::Excluded));
    }

    #[test]
    fn bootstrap_uses_identity() {
        let p = params();
        let (blocks, _) = build(30, &[0], &p);
        let mut st = Pi3State::new();
        let d = on_delivered(&blocks, p.bootstrap_height() + p.tau1 + p.tau2, 0, &mut st, &p).unwrap();
        assert_eq!(d.height, p.bootstrap_height());
        assert_eq!(d.permutation, Permutation::identity(p.slots()));
        assert!(on_delivered(&blocks, p.tau1 + p.tau2, 0, &mut st, &p).is_none());
    }

    #[test]
    fn mempool_dedups_and_selects() {
        let p = params();
        let mut pool = Mempool::new();
        let t = Transaction::noop(1, PartyId(0));
        assert!(pool.add(t.clone()));
        assert!(!pool.add(t));
        let sigma = PartialSeed::zero(256);
        pool.add(Transaction::new(
            7,
            PartyId(0),
            TxKind::PlainTransfer { from: 0, to: 1, asset: 0, amount: crate::amount::int(1) },
        ));
        pool.add(open_tx(10, 2, &sigma, PartyId(1)));
        let sel = honest_selection(&pool, 12 + p.tau1 + 1, &p, PartyId(0), BlockId(5), |_| true);
        assert_eq!(sel.len(), p.n_t);
        assert!(sel[0].is_open());
        assert_eq!(sel[1].id, 7);
        let early = honest_selection(&pool, 12 + p.tau1, &p, PartyId(0), BlockId(5), |_| true);
        assert!(!early.iter().any(Transaction::is_open));
    }
}
