//! End-to-end simulation: base chain, ordering layer, execution, rewards and
//! the coalition's strategy, driven from one master seed.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::adversary::{biased_permutation_attack, slip_attack, SlipScenario};
use crate::amount::{self, Amount};
use crate::analysis::p_k_lambda;
use crate::basechain::{Basechain, BlockStore, Event, Hooks, MiningModel};
use crate::checks;
use crate::error::Result;
use crate::execution::{
    block_chunk_order, execute_block, sandwich_revenue, swap_exact_in, LedgerState, PoolSpec, PoolState,
};
use crate::protocol::{
    honest_selection, make_commitments, on_delivered, on_mined, opening_expired, opening_in_loud_phase, ChainAccess, Mempool, Pi3State,
    ViewChain,
};
use crate::randomness::{combine_seeds, perm_from_rand_bits};
use crate::rewards::{expected_honest_utility, RewardLedger};
use crate::rng::derive;
use crate::scenario::{
    AdversaryReport, BlockReceipt, BoundReport, ChainSummary, RewardSummary, RunReport, ScenarioConfig, Strategy,
};
use crate::types::{
    validate_block, AccountId, AssetId, Block, BlockId, Commitment, Direction, PartialSeed, PartyId, Permutation,
    ProtocolParams, Transaction, TxId, TxKind, TxValidity,
};

pub const POOL_ACCOUNT_BASE: AccountId = 1_000_000;

pub fn pool_account(pool: usize) -> AccountId {
    POOL_ACCOUNT_BASE + pool as AccountId
}

pub fn pool_assets(pool: usize) -> (AssetId, AssetId) {
    (2 * pool as AssetId, 2 * pool as AssetId + 1)
}

/// Ledger holding every pool and `balance` of each asset for each party.
pub fn initial_ledger(cfg: &ScenarioConfig) -> Result<LedgerState> {
    let mut l = LedgerState::new();
    for (i, p) in cfg.pools.iter().enumerate() {
        let (x, y) = pool_assets(i);
        l.add_pool(
            PoolSpec {
                account: pool_account(i),
                asset_x: x,
                asset_y: y,
                fee: p.fee.clone(),
                quantum: p.quantum.clone(),
            },
            &p.state()?,
        )?;
        for party in 0..cfg.network.parties {
            l.credit(party as AccountId, x, &cfg.workload.initial_balance);
            l.credit(party as AccountId, y, &cfg.workload.initial_balance);
        }
    }
    Ok(l)
}

struct Actor {
    parties: Vec<PartyId>,
    honest: bool,
    pi3: Pi3State,
    ledger: LedgerState,
    mempool: Mempool,
    receipts: Vec<BlockReceipt>,
    rng: ChaCha20Rng,
}

#[derive(Debug, Default)]
struct Stats {
    sandwiches: usize,
    withheld: usize,
    chosen: usize,
}

struct World {
    cfg: ScenarioConfig,
    params: ProtocolParams,
    actors: Vec<Actor>,
    validity: TxValidity,
    rewards: RewardLedger,
    adv_accounts: Vec<AccountId>,
    p_ref: Vec<Amount>,
    seq: u64,
    stats: Stats,
}

/// The first honest actor; its ledger and rewards are the ones reported.
const REFERENCE: usize = 0;

impl World {
    fn next_id(&mut self, tag: &[u8]) -> TxId {
        self.seq += 1;
        let mut h = Sha256::new();
        h.update(tag);
        h.update(self.cfg.master_seed.to_be_bytes());
        h.update(self.seq.to_be_bytes());
        u64::from_be_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
    }

    fn broadcast(&mut self, tx: Transaction) {
        for a in &mut self.actors {
            a.mempool.add(tx.clone());
        }
    }

    fn is_adv_swap(&self, t: &Transaction) -> bool {
        matches!(&t.kind, TxKind::Swap { trader, .. } if self.adv_accounts.contains(trader))
    }

    fn is_victim_swap(&self, t: &Transaction) -> bool {
        matches!(&t.kind, TxKind::Swap { trader, .. } if !self.adv_accounts.contains(trader)) && t.requires.is_none()
    }

    /// Coalition holdings, Y assets valued at the initial pool price.
    fn coalition_value(&self, l: &LedgerState) -> Amount {
        let mut v = amount::zero();
        for &acct in &self.adv_accounts {
            for (i, p) in self.p_ref.iter().enumerate() {
                let (x, y) = pool_assets(i);
                v += l.balance(acct, x) + l.balance(acct, y) * p;
            }
        }
        v
    }

    /// Withholding choice of a last-revealing coalition for block `target`.
    fn biased_filter(&mut self, chain: &Basechain, actor: usize, height: u64, opens: Vec<Transaction>) -> Vec<Transaction> {
        let p = &self.params;
        let Some(target) = height.checked_sub(p.tau1 + 1) else {
            return opens;
        };
        if target <= p.bootstrap_height() || opens.is_empty() || self.cfg.adversary.k == 0 {
            return opens;
        }
        let vc = ViewChain {
            store: &chain.store,
            view: chain.view(actor),
        };
        let Some(block) = vc.block_at(target) else {
            return opens;
        };
        if !block.txs.iter().any(|t| self.is_adv_swap(t)) {
            return opens;
        }
        let mut known: Vec<PartialSeed> = Vec::new();
        for j in 1..=p.n_leaders {
            let Some(b) = target.checked_sub(j as u64).filter(|&i| i >= 1).and_then(|i| vc.block_at(i)) else {
                continue;
            };
            let Some(miner) = b.miner else { continue };
            let owner = chain.actor_of(miner);
            if owner == actor {
                continue;
            }
            if let Some(s) = self.actors[owner].pi3.seeds_for(b.id).and_then(|s| s.get(j - 1)) {
                known.push(s.clone());
            }
        }
        let seed_of = |t: &Transaction| match &t.kind {
            TxKind::Open { sigma, .. } => PartialSeed::new(sigma.clone(), p.lambda_bits).ok(),
            _ => None,
        };
        let k = self.cfg.adversary.k.min(opens.len());
        let candidates: Vec<PartialSeed> = opens[..k].iter().filter_map(seed_of).collect();
        known.extend(opens[k..].iter().filter_map(seed_of));
        let base = combine_seeds(known.iter().map(Some), p.lambda_bits);
        let w = amount::to_f64(&p.w);
        let ledger = &self.actors[actor].ledger;
        let before = amount::to_f64(&self.coalition_value(ledger));
        let m = p.m;
        let outcome = biased_permutation_attack(&base, &candidates, &vec![w; k], block.txs.len() * m, |perm| {
            let mut s = ledger.clone();
            execute_block(&mut s, &block.txs, perm, m);
            amount::to_f64(&self.coalition_value(&s)) - before
        });
        let Ok(outcome) = outcome else { return opens };
        self.stats.withheld += outcome.withheld.len();
        let drop: BTreeSet<usize> = outcome.withheld.into_iter().collect();
        opens
            .into_iter()
            .enumerate()
            .filter(|(idx, _)| !drop.contains(idx))
            .map(|(_, t)| t)
            .collect()
    }

    /// Seeds for the block at `height` when the coalition mined every leader block.
    fn coalition_seed_for(&self, chain: &Basechain, actor: usize, height: u64) -> Option<PartialSeed> {
        let p = &self.params;
        if height <= p.bootstrap_height() {
            return None;
        }
        let vc = ViewChain {
            store: &chain.store,
            view: chain.view(actor),
        };
        let mut seeds = Vec::with_capacity(p.n_leaders);
        for j in 1..=p.n_leaders {
            let b = vc.block_at(height - j as u64)?;
            if chain.actor_of(b.miner?) != actor {
                return None;
            }
            seeds.push(self.actors[actor].pi3.seeds_for(b.id)?.get(j - 1)?.clone());
        }
        Some(combine_seeds(seeds.iter().map(Some), p.lambda_bits))
    }

    fn adversarial_selection(
        &mut self,
        chain: &Basechain,
        actor: usize,
        miner: PartyId,
        parent: BlockId,
        height: u64,
    ) -> Vec<Transaction> {
        let params = self.params.clone();
        let store = &chain.store;
        let usable = |t: &Transaction| !store.chain_contains_tx(parent, t.id) && !opening_expired(t, height, &params);
        let victim = self.actors[actor]
            .mempool
            .iter()
            .find(|t| self.is_victim_swap(t) && usable(t))
            .cloned();
        let fallback = |w: &World| honest_selection(&w.actors[actor].mempool, height, &params, miner, parent, usable);
        let Some(victim) = victim else {
            return fallback(self);
        };
        let strategy = self.cfg.adversary.strategy;
        let loud = self.actors[actor]
            .mempool
            .iter()
            .filter(|t| opening_in_loud_phase(t, height, &params) && usable(t))
            .count();
        let core_len = if strategy == Strategy::Longslip { 2 } else { 3 };
        if loud + core_len > params.n_t {
            return fallback(self);
        }
        let TxKind::Swap {
            pool,
            direction,
            amount_in: victim_in,
            ..
        } = victim.kind.clone()
        else {
            return fallback(self);
        };
        let Some(ps) = self.actors[actor].ledger.pool_state(pool) else {
            return fallback(self);
        };
        let front_in = self.cfg.adversary.front_amount.clone();
        let Ok(front) = swap_exact_in(&ps, direction, &front_in) else {
            return fallback(self);
        };
        let (bound1, bound2) = if matches!(strategy, Strategy::Slip | Strategy::Longslip) {
            let oriented = match direction {
                Direction::XToY => ps.clone(),
                Direction::YToX => PoolState {
                    x_reserve: ps.y_reserve.clone(),
                    y_reserve: ps.x_reserve.clone(),
                    fee: ps.fee.clone(),
                },
            };
            let s = SlipScenario {
                pool: oriented,
                tx1_in: front_in.clone(),
                victim_in,
                params: self.cfg.adversary.slippage.clone().expect("validated"),
            };
            if slip_attack(&s).is_err() {
                return fallback(self);
            }
            (s.tx1_bound().ok(), s.tx2_bound().ok())
        } else {
            (None, None)
        };
        let trader = self.adv_accounts[0];
        let f = Transaction::new(
            self.next_id(b"front"),
            miner,
            TxKind::Swap {
                pool,
                trader,
                direction,
                amount_in: front_in,
                max_rate: bound1,
            },
        );
        let mut b = Transaction::new(
            self.next_id(b"back"),
            miner,
            TxKind::Swap {
                pool,
                trader,
                direction: direction.reverse(),
                amount_in: front.amount_out,
                max_rate: bound2,
            },
        );
        self.stats.sandwiches += 1;
        let mut core = vec![f.clone(), victim.clone()];
        if strategy == Strategy::Longslip {
            b.requires = Some(f.id);
            self.broadcast(b);
        } else {
            core.push(b);
        }
        let mut rest_params = params.clone();
        rest_params.n_t = params.n_t - core.len();
        let vid = victim.id;
        let rest = honest_selection(
            &self.actors[actor].mempool,
            height,
            &rest_params,
            miner,
            parent,
            |t| t.id != vid && usable(t),
        );
        if strategy == Strategy::Chosen {
            if let Some(seed) = self.coalition_seed_for(chain, actor, height) {
                self.stats.chosen += 1;
                return place_for(&perm_from_rand_bits(&seed, params.slots()), params.n_t, params.m, core, rest);
            }
        }
        core.extend(rest);
        core
    }
}

/// Arranges `core` so that, under `perm`, each core parent's chunks all run
/// before the next one's first chunk when possible, otherwise by first chunk.
fn place_for(perm: &Permutation, n_t: usize, m: usize, core: Vec<Transaction>, rest: Vec<Transaction>) -> Vec<Transaction> {
    let order = block_chunk_order(perm, n_t, m);
    let mut first = vec![usize::MAX; n_t];
    let mut last = vec![0usize; n_t];
    for (pos, &(t, _)) in order.iter().enumerate() {
        first[t] = first[t].min(pos);
        last[t] = last[t].max(pos);
    }
    let mut by_first: Vec<usize> = (0..n_t).collect();
    by_first.sort_by_key(|&t| first[t]);
    let mut chosen: Vec<usize> = by_first[..core.len()].to_vec();
    let mut stack = Vec::with_capacity(core.len());
    if find_chain(&first, &last, core.len(), &mut stack) {
        chosen = stack;
    }
    let mut slots: Vec<Option<Transaction>> = vec![None; n_t];
    for (tx, &idx) in core.into_iter().zip(&chosen) {
        slots[idx] = Some(tx);
    }
    let mut rest = rest.into_iter();
    slots
        .into_iter()
        .map(|s| s.unwrap_or_else(|| rest.next().expect("n_t transactions")))
        .collect()
}

fn find_chain(first: &[usize], last: &[usize], len: usize, stack: &mut Vec<usize>) -> bool {
    if stack.len() == len {
        return true;
    }
    for t in 0..first.len() {
        if stack.contains(&t) || stack.last().is_some_and(|&p| last[p] >= first[t]) {
            continue;
        }
        stack.push(t);
        if find_chain(first, last, len, stack) {
            return true;
        }
        stack.pop();
    }
    false
}

impl Hooks for World {
    fn on_new_height(&mut self, chain: &Basechain, actor: usize, height: u64) {
        let a = &self.actors[actor];
        let vc = ViewChain {
            store: &chain.store,
            view: chain.view(actor),
        };
        let opens = on_mined(&vc, height, &a.parties, &a.pi3, &self.params);
        let opens = if !a.honest && self.cfg.adversary.strategy == Strategy::Biased {
            self.biased_filter(chain, actor, height, opens)
        } else {
            opens
        };
        for tx in opens {
            self.broadcast(tx);
        }
    }

    fn build_block(
        &mut self,
        chain: &Basechain,
        actor: usize,
        miner: PartyId,
        parent: BlockId,
    ) -> (Vec<Transaction>, Vec<Option<Commitment>>) {
        let height = chain.block(parent).height + 1;
        let txs = if self.actors[actor].honest || self.cfg.adversary.strategy == Strategy::Honest {
            let params = &self.params;
            let store = &chain.store;
            honest_selection(&self.actors[actor].mempool, height, params, miner, parent, |t| {
                !store.chain_contains_tx(parent, t.id) && !opening_expired(t, height, params)
            })
        } else {
            self.adversarial_selection(chain, actor, miner, parent, height)
        };
        let (coms, seeds) = make_commitments(&self.params, &mut self.actors[actor].rng);
        let id = Block::new(chain.block(parent), miner, txs.clone(), coms.clone()).id;
        self.actors[actor].pi3.store_seeds(id, seeds);
        (txs, coms)
    }

    fn validate(&self, _store: &BlockStore, block: &Block) -> bool {
        block.txs.len() == self.params.n_t && validate_block(block, self.params.n_leaders, |t| self.validity.check(t))
    }

    fn on_delivered(&mut self, chain: &Basechain, actor: usize, height: u64, confirmed_by: u64) {
        let params = &self.params;
        let a = &mut self.actors[actor];
        let vc = ViewChain {
            store: &chain.store,
            view: chain.view(actor),
        };
        if let Some(d) = on_delivered(&vc, height, confirmed_by, &mut a.pi3, params) {
            let block = chain.store.get(d.block);
            let receipt = execute_block(&mut a.ledger, &block.txs, &d.permutation, params.m);
            a.receipts.push(BlockReceipt {
                height: d.height,
                receipt,
            });
            if actor == REFERENCE {
                self.rewards.process_delivery(&d);
            }
        }
        if let Some(b) = vc.block_at(height) {
            let ids: BTreeSet<TxId> = b.tx_ids().collect();
            let next = chain.view(actor).tip_height() + 1;
            a.mempool
                .remove_where(|t| ids.contains(&t.id) || opening_expired(t, next, params));
        }
    }
}

/// Complete run: the report plus the base-chain event log.
pub struct RunOutput {
    pub report: RunReport,
    pub events: Vec<Event>,
}

impl RunOutput {
    /// Events as newline-delimited JSON.
    pub fn event_log(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunReport> {
    Ok(run_with_events(cfg)?.report)
}

pub fn run_with_events(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let params = cfg.protocol.clone();
    let seed = cfg.master_seed;
    let corrupt: Vec<bool> = (0..cfg.network.parties)
        .map(|p| cfg.adversary.parties.contains(&p))
        .collect();
    let mining = MiningModel::new(cfg.network.power.clone(), cfg.network.block_prob)?;
    let mut chain = Basechain::new(
        Block::genesis(params.n_leaders),
        &corrupt,
        mining,
        cfg.network.scheduling.clone(),
        params.d,
        derive(seed, 0),
    )?;
    let initial = initial_ledger(cfg)?;
    let actors = (0..chain.actors())
        .map(|a| Actor {
            parties: chain.parties_of(a),
            honest: chain.is_honest(a),
            pi3: Pi3State::new(),
            ledger: initial.clone(),
            mempool: Mempool::new(),
            receipts: Vec::new(),
            rng: derive(seed, 1 + a as u64),
        })
        .collect();
    let pools: Vec<PoolState> = cfg.pools.iter().map(|p| p.state()).collect::<Result<_>>()?;
    let mut world = World {
        cfg: cfg.clone(),
        params: params.clone(),
        actors,
        validity: TxValidity::new(params.lambda_bits),
        rewards: RewardLedger::new(params.clone()),
        adv_accounts: cfg.adversary.parties.iter().map(|&p| p as AccountId).collect(),
        p_ref: pools.iter().map(PoolState::price_y_in_x).collect(),
        seq: 0,
        stats: Stats::default(),
    };

    let honest_parties: Vec<usize> = (0..cfg.network.parties).filter(|p| !corrupt[*p]).collect();
    let mut workload_rng = derive(seed, u64::MAX);
    let mut submitted: Vec<(u64, TxId)> = Vec::new();
    let mut events = Vec::new();
    for round in 0..cfg.network.rounds {
        if cfg.workload.swap_prob > 0.0 && workload_rng.gen_bool(cfg.workload.swap_prob) {
            let party = honest_parties[workload_rng.gen_range(0..honest_parties.len())];
            let pool = workload_rng.gen_range(0..pools.len());
            let direction = if workload_rng.gen_bool(0.5) {
                Direction::XToY
            } else {
                Direction::YToX
            };
            let amount_in = cfg.workload.amount.clone();
            let max_rate = match (&cfg.workload.max_slippage, world.actors[REFERENCE].ledger.pool_state(pool)) {
                (Some(s), Some(ps)) => swap_exact_in(&ps, direction, &amount_in)
                    .ok()
                    .map(|o| o.rate * (amount::one() + s)),
                _ => None,
            };
            let id = world.next_id(b"swap");
            let tx = Transaction::new(
                id,
                PartyId(party),
                TxKind::Swap {
                    pool,
                    trader: party as AccountId,
                    direction,
                    amount_in,
                    max_rate,
                },
            );
            world.broadcast(tx);
            submitted.push((round, id));
        }
        events.extend(chain.advance_round(&mut world));
    }

    let report = assemble(cfg, &chain, &world, &initial, &events, &submitted)?;
    Ok(RunOutput { report, events })
}

fn assemble(
    cfg: &ScenarioConfig,
    chain: &Basechain,
    world: &World,
    initial: &LedgerState,
    events: &[Event],
    submitted: &[(u64, TxId)],
) -> Result<RunReport> {
    let params = &world.params;
    let honest: Vec<usize> = (0..chain.actors()).filter(|&a| chain.is_honest(a)).collect();
    let logs: Vec<&[_]> = honest.iter().map(|&a| world.actors[a].pi3.delivered.as_slice()).collect();
    let prefixes: Vec<&[BlockId]> = honest.iter().map(|&a| chain.view(a).delivered()).collect();
    let receipts: Vec<&[BlockReceipt]> = honest.iter().map(|&a| world.actors[a].receipts.as_slice()).collect();
    let ledgers: Vec<&LedgerState> = honest.iter().map(|&a| &world.actors[a].ledger).collect();
    let reference = &world.actors[REFERENCE];
    let ref_prefix = chain.view(REFERENCE).delivered();

    let is_corrupt = |p: PartyId| cfg.adversary.parties.contains(&p.0);
    let honest_miner: Vec<bool> = ref_prefix
        .iter()
        .map(|&id| chain.block(id).miner.is_some_and(|m| !is_corrupt(m)))
        .collect();

    let mut assertions = vec![
        checks::agreement(&logs),
        checks::execution_agreement(&receipts),
        checks::total_order(&prefixes),
        checks::no_duplication(&logs, &prefixes),
        checks::integrity(events, &prefixes),
        checks::external_validity(&chain.store, &prefixes, |id| world.validate(&chain.store, chain.block(id))),
        checks::latency(&logs, params),
        checks::order_equivalence(&logs, &prefixes, params),
        checks::commitment_count(&chain.store, params.n_leaders),
        checks::conservation(&initial.totals(), &ledgers),
        checks::receipt_balance(&reference.receipts),
        checks::reward_conservation(&world.rewards),
        checks::no_violations(events),
    ];
    if let (Some(mu), Some(window)) = (cfg.assertions.fairness_min_honest, cfg.assertions.fairness_window) {
        assertions.push(checks::fairness(&honest_miner, window, mu));
    }
    if let Some(age) = cfg.assertions.validity_rounds {
        let cutoff = cfg.network.rounds.saturating_sub(age);
        let tip = ref_prefix.last().copied().unwrap_or_else(|| chain.store.genesis());
        let missing: Vec<u64> = submitted
            .iter()
            .filter(|(r, _)| *r < cutoff)
            .filter(|(_, id)| !chain.store.chain_contains_tx(tip, *id))
            .map(|(_, id)| *id)
            .collect();
        assertions.push(checks::validity(&missing));
    }

    let mined: Vec<&Event> = events.iter().filter(|e| matches!(e, Event::Mined { .. })).collect();
    let coalition_blocks = mined
        .iter()
        .filter(|e| matches!(e, Event::Mined { miner, .. } if is_corrupt(*miner)))
        .count();
    let depths = chain.reorg_depths();
    let chain_summary = ChainSummary {
        tip_height: chain.view(REFERENCE).tip_height(),
        blocks_mined: mined.len(),
        coalition_blocks,
        delivered: ref_prefix.len(),
        pi3_delivered: reference.pi3.delivered.len(),
        honest_fraction: if honest_miner.is_empty() {
            1.0
        } else {
            honest_miner.iter().filter(|&&h| h).count() as f64 / honest_miner.len() as f64
        },
        reorgs: depths.len(),
        max_reorg_depth: depths.iter().copied().max().unwrap_or(0),
    };

    let r = &world.rewards;
    let rewards = RewardSummary {
        minted: amount::format(r.minted()),
        burned: amount::format(r.burned()),
        released: amount::format(&r.released_total()),
        released_blocks: r.released_blocks(),
        mean_miner_reward: r.mean_miner_reward().map(|a| amount::format(&a)),
        expected_honest_utility: expected_honest_utility(params, 0.0),
        parties: r.party_summaries(),
        entries: r.entries().cloned().collect(),
    };

    let revenue = world.coalition_value(&reference.ledger) - world.coalition_value(initial);
    let adv_rewards = cfg
        .adversary
        .parties
        .iter()
        .fold(amount::zero(), |acc, &p| acc + r.released_to(PartyId(p)));
    let adversary = AdversaryReport {
        strategy: cfg.adversary.strategy,
        revenue_f64: amount::to_f64(&revenue),
        revenue: amount::format(&revenue),
        rewards: amount::format(&adv_rewards),
        sandwiches: world.stats.sandwiches,
        withheld_openings: world.stats.withheld,
        chosen_placements: world.stats.chosen,
    };

    let bound = match (cfg.pools.first(), cfg.adversary.k) {
        (Some(p), k) if k >= 1 => {
            let lambda = sandwich_revenue(
                &p.state()?,
                &cfg.adversary.front_amount,
                &cfg.workload.amount,
                &Permutation::identity(3),
                1,
            )
            .map(|a| amount::to_f64(&a))
            .ok()
            .filter(|l| *l > 0.0);
            match lambda {
                Some(lambda) => Some(BoundReport {
                    lambda,
                    k,
                    p_k_lambda: p_k_lambda(params.m, k, amount::to_f64(&params.w), lambda, 0.0, params.n_leaders)?,
                }),
                None => None,
            }
        }
        _ => None,
    };

    let passed = assertions.iter().all(|a| a.passed);
    Ok(RunReport {
        master_seed: cfg.master_seed,
        rounds: cfg.network.rounds,
        chain: chain_summary,
        deliveries: reference.pi3.delivered.clone(),
        receipts: reference.receipts.clone(),
        rewards,
        adversary,
        bound,
        assertions,
        passed,
    })
}

/// Independent replicas with master seeds `master_seed, master_seed + 1, …`.
pub fn run_replicas(cfg: &ScenarioConfig, replicas: usize) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut c = cfg.clone();
            c.master_seed = cfg.master_seed.wrapping_add(r);
            run(&c)
        })
        .collect()
}
