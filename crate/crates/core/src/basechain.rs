//! Simulated base chain: synchronous rounds, a weighted mining lottery,
//! longest-chain fork choice and depth-`d` delivery.
//!
//! Each honest party is its own actor with a private [`ChainView`]; all
//! corrupted parties share one coalition actor. Honest blocks reach every
//! honest inbox one round after they are mined and honest parties relay what
//! they receive, so a block that any honest party holds reaches the rest one
//! round later. The coalition is rushing: it reads every honest block in the
//! round it is mined and its own released blocks are queued ahead of honest
//! traffic.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Block, BlockId, Commitment, PartyId, Transaction, TxId};

#[derive(Debug, Clone, Default)]
pub struct BlockStore {
    blocks: BTreeMap<BlockId, Block>,
    valid: BTreeMap<BlockId, bool>,
    tx_index: BTreeMap<TxId, Vec<BlockId>>,
    genesis: BlockId,
}

impl BlockStore {
    pub fn new(genesis: Block) -> Self {
        let id = genesis.id;
        let mut s = BlockStore {
            genesis: id,
            ..Default::default()
        };
        s.valid.insert(id, true);
        s.blocks.insert(id, genesis);
        s
    }

    pub fn genesis(&self) -> BlockId {
        self.genesis
    }

    pub fn insert(&mut self, block: Block, valid: bool) -> BlockId {
        let id = block.id;
        let parent_ok = block
            .parent
            .and_then(|p| self.valid.get(&p).copied())
            .unwrap_or(false);
        self.valid.insert(id, valid && parent_ok);
        for t in block.tx_ids() {
            self.tx_index.entry(t).or_default().push(id);
        }
        self.blocks.insert(id, block);
        id
    }

    pub fn get(&self, id: BlockId) -> &Block {
        &self.blocks[&id]
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.blocks.contains_key(&id)
    }

    pub fn is_valid(&self, id: BlockId) -> bool {
        self.valid.get(&id).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn blocks_with_tx(&self, tx: TxId) -> &[BlockId] {
        self.tx_index.get(&tx).map_or(&[], Vec::as_slice)
    }

    pub fn ancestor_at(&self, mut id: BlockId, height: u64) -> Option<BlockId> {
        loop {
            let b = self.get(id);
            if b.height == height {
                return Some(id);
            }
            if b.height < height {
                return None;
            }
            id = b.parent?;
        }
    }

    pub fn is_ancestor(&self, anc: BlockId, of: BlockId) -> bool {
        let h = self.get(anc).height;
        self.ancestor_at(of, h) == Some(anc)
    }

    /// Height of the deepest block shared by both chains.
    pub fn common_ancestor_height(&self, a: BlockId, b: BlockId) -> u64 {
        let h = self.get(a).height.min(self.get(b).height);
        let mut x = self.ancestor_at(a, h).expect("chains reach genesis");
        let mut y = self.ancestor_at(b, h).expect("chains reach genesis");
        while x != y {
            x = self.get(x).parent.expect("distinct genesis blocks");
            y = self.get(y).parent.expect("distinct genesis blocks");
        }
        self.get(x).height
    }

    /// Whether `tx` appears in `tip` or any of its ancestors.
    pub fn chain_contains_tx(&self, tip: BlockId, tx: TxId) -> bool {
        self.blocks_with_tx(tx).iter().any(|&b| self.is_ancestor(b, tip))
    }
}

#[derive(Debug, Clone)]
pub struct TipChange {
    pub old_tip: BlockId,
    pub new_tip: BlockId,
    /// Lowest height whose block changed.
    pub fork_height: u64,
}

#[derive(Debug, Clone)]
pub struct ChainView {
    tip: BlockId,
    main: Vec<BlockId>,
    known: BTreeSet<BlockId>,
    orphans: BTreeMap<BlockId, Vec<BlockId>>,
    delivered: Vec<BlockId>,
}

impl ChainView {
    pub fn new(store: &BlockStore) -> Self {
        let g = store.genesis();
        ChainView {
            tip: g,
            main: vec![g],
            known: BTreeSet::from([g]),
            orphans: BTreeMap::new(),
            delivered: Vec::new(),
        }
    }

    pub fn tip(&self) -> BlockId {
        self.tip
    }

    pub fn tip_height(&self) -> u64 {
        self.main.len() as u64 - 1
    }

    /// Block ids of the adopted chain indexed by height.
    pub fn main_chain(&self) -> &[BlockId] {
        &self.main
    }

    pub fn at(&self, height: u64) -> Option<BlockId> {
        self.main.get(height as usize).copied()
    }

    pub fn knows(&self, id: BlockId) -> bool {
        self.known.contains(&id)
    }

    /// Delivered prefix; entry `k` is the block at height `k + 1`.
    pub fn delivered(&self) -> &[BlockId] {
        &self.delivered
    }

    pub fn contains_tx(&self, store: &BlockStore, tx: TxId) -> bool {
        store
            .blocks_with_tx(tx)
            .iter()
            .any(|&b| self.at(store.get(b).height) == Some(b))
    }

    /// Adds a block; switches tip when `adopt(candidate_height, tip_height)`.
    pub fn receive(
        &mut self,
        store: &BlockStore,
        id: BlockId,
        adopt: &dyn Fn(u64, u64) -> bool,
    ) -> Option<TipChange> {
        if self.known.contains(&id) {
            return None;
        }
        let parent = store.get(id).parent.expect("only genesis lacks a parent");
        if !self.known.contains(&parent) {
            self.orphans.entry(parent).or_default().push(id);
            return None;
        }
        let mut change: Option<TipChange> = None;
        let mut queue = vec![id];
        while let Some(b) = queue.pop() {
            if !self.known.insert(b) {
                continue;
            }
            let h = store.get(b).height;
            if store.is_valid(b) && h > self.tip_height() && adopt(h, self.tip_height()) {
                let c = self.switch_to(store, b);
                change = Some(match change {
                    Some(prev) => TipChange {
                        old_tip: prev.old_tip,
                        new_tip: c.new_tip,
                        fork_height: prev.fork_height.min(c.fork_height),
                    },
                    None => c,
                });
            }
            if let Some(children) = self.orphans.remove(&b) {
                queue.extend(children);
            }
        }
        change
    }

    fn switch_to(&mut self, store: &BlockStore, new_tip: BlockId) -> TipChange {
        let old_tip = self.tip;
        let mut branch = Vec::new();
        let mut cur = new_tip;
        loop {
            let h = store.get(cur).height as usize;
            if self.main.get(h) == Some(&cur) {
                break;
            }
            branch.push(cur);
            cur = store.get(cur).parent.expect("branch reaches genesis");
        }
        let fork_height = store.get(cur).height + 1;
        self.main.truncate(fork_height as usize);
        self.main.extend(branch.into_iter().rev());
        self.tip = new_tip;
        TipChange {
            old_tip,
            new_tip,
            fork_height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningModel {
    pub power: Vec<f64>,
    pub block_prob: f64,
}

impl MiningModel {
    pub fn new(power: Vec<f64>, block_prob: f64) -> Result<Self> {
        let m = MiningModel { power, block_prob };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.power.is_empty() || self.power.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParam("power must be a non-empty non-negative vector".into()));
        }
        let s: f64 = self.power.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!("power sums to {s}, expected 1")));
        }
        if !(self.block_prob > 0.0 && self.block_prob <= 1.0) {
            return Err(Error::InvalidParam("block_prob must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut ChaCha20Rng) -> Option<PartyId> {
        if !rng.gen_bool(self.block_prob) {
            return None;
        }
        let dist = WeightedIndex::new(&self.power).expect("validated power vector");
        Some(PartyId(dist.sample(rng)))
    }
}

/// How the coalition schedules its own blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheduling {
    /// Broadcast like an honest party.
    Honest,
    /// Deliver to each honest party next round with probability `direct`,
    /// otherwise one round later.
    Selective { direct: f64 },
    /// Mine privately and release when an honest block lands while the lead
    /// is zero or one. A fork that would orphan more than `max_reorg` blocks
    /// of any honest party is abandoned instead.
    PrivateFork { max_reorg: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Mined {
        round: u64,
        height: u64,
        miner: PartyId,
        block: BlockId,
    },
    Received {
        round: u64,
        actor: usize,
        height: u64,
        block: BlockId,
    },
    Delivered {
        round: u64,
        actor: usize,
        height: u64,
        block: BlockId,
        confirmed_by: u64,
    },
    Violation {
        round: u64,
        actor: usize,
        height: u64,
        detail: String,
    },
}

/// Callbacks into the layer running on top of the chain.
pub trait Hooks {
    /// The actor's adopted chain reached `height` for the first time.
    fn on_new_height(&mut self, chain: &Basechain, actor: usize, height: u64);
    fn build_block(
        &mut self,
        chain: &Basechain,
        actor: usize,
        miner: PartyId,
        parent: BlockId,
    ) -> (Vec<Transaction>, Vec<Option<Commitment>>);
    fn validate(&self, store: &BlockStore, block: &Block) -> bool;
    fn on_delivered(&mut self, chain: &Basechain, actor: usize, height: u64, confirmed_by: u64);
}

#[derive(Debug, Clone)]
pub struct Basechain {
    pub store: BlockStore,
    views: Vec<ChainView>,
    actor_of: Vec<usize>,
    honest: Vec<bool>,
    seen_height: Vec<u64>,
    pub mining: MiningModel,
    pub scheduling: Scheduling,
    pub d: u64,
    round: u64,
    inbox: BTreeMap<u64, Vec<(usize, BlockId)>>,
    withheld: Vec<BlockId>,
    reorg_depths: Vec<u64>,
    rng: ChaCha20Rng,
}

impl Basechain {
    /// `corrupt[p]` marks parties folded into the single coalition actor.
    pub fn new(
        genesis: Block,
        corrupt: &[bool],
        mining: MiningModel,
        scheduling: Scheduling,
        d: u64,
        rng: ChaCha20Rng,
    ) -> Result<Self> {
        mining.validate()?;
        if corrupt.len() != mining.power.len() {
            return Err(Error::InvalidParam("corrupt flags and power differ in length".into()));
        }
        if d < 1 {
            return Err(Error::InvalidParam("d must be at least 1".into()));
        }
        let store = BlockStore::new(genesis);
        let mut actor_of = Vec::with_capacity(corrupt.len());
        let mut honest = Vec::new();
        for &c in corrupt {
            if !c {
                actor_of.push(honest.len());
                honest.push(true);
            } else {
                actor_of.push(usize::MAX);
            }
        }
        if corrupt.iter().any(|&c| c) {
            let coalition = honest.len();
            honest.push(false);
            for a in actor_of.iter_mut().filter(|a| **a == usize::MAX) {
                *a = coalition;
            }
        }
        let views = vec![ChainView::new(&store); honest.len()];
        Ok(Basechain {
            store,
            seen_height: vec![0; views.len()],
            views,
            actor_of,
            honest,
            mining,
            scheduling,
            d,
            round: 0,
            inbox: BTreeMap::new(),
            withheld: Vec::new(),
            reorg_depths: Vec::new(),
            rng,
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn actors(&self) -> usize {
        self.views.len()
    }

    pub fn actor_of(&self, p: PartyId) -> usize {
        self.actor_of[p.0]
    }

    pub fn parties_of(&self, actor: usize) -> Vec<PartyId> {
        (0..self.actor_of.len())
            .filter(|&p| self.actor_of[p] == actor)
            .map(PartyId)
            .collect()
    }

    pub fn is_honest(&self, actor: usize) -> bool {
        self.honest[actor]
    }

    pub fn coalition(&self) -> Option<usize> {
        self.honest.iter().position(|h| !h)
    }

    pub fn view(&self, actor: usize) -> &ChainView {
        &self.views[actor]
    }

    pub fn block(&self, id: BlockId) -> &Block {
        self.store.get(id)
    }

    pub fn withheld(&self) -> &[BlockId] {
        &self.withheld
    }

    fn adopt_rule(&self, actor: usize) -> impl Fn(u64, u64) -> bool {
        let sticky = !self.honest[actor]
            && matches!(self.scheduling, Scheduling::PrivateFork { .. })
            && !self.withheld.is_empty();
        move |cand, tip| if sticky { cand >= tip + 2 } else { cand > tip }
    }

    fn receive(&mut self, actor: usize, id: BlockId, events: &mut Vec<Event>) {
        if self.views[actor].knows(id) {
            return;
        }
        let old_height = self.views[actor].tip_height();
        let adopt = self.adopt_rule(actor);
        let change = self.views[actor].receive(&self.store, id, &adopt);
        events.push(Event::Received {
            round: self.round,
            actor,
            height: self.store.get(id).height,
            block: id,
        });
        if self.honest[actor] {
            for other in 0..self.views.len() {
                if other != actor {
                    self.inbox.entry(self.round + 1).or_default().push((other, id));
                }
            }
        } else if change.is_some() {
            let tip = self.views[actor].tip();
            let store = &self.store;
            self.withheld.retain(|&w| store.is_ancestor(w, tip));
        }
        if let Some(c) = change {
            self.check_prefix(actor, c.fork_height, old_height, events);
        }
    }

    /// Depths of every honest reorg observed so far.
    pub fn reorg_depths(&self) -> &[u64] {
        &self.reorg_depths
    }

    fn check_prefix(&mut self, actor: usize, fork_height: u64, old_height: u64, events: &mut Vec<Event>) {
        if self.honest[actor] && fork_height <= old_height {
            self.reorg_depths.push(old_height + 1 - fork_height);
        }
        let delivered = self.views[actor].delivered.len() as u64;
        if self.honest[actor] && fork_height <= delivered {
            events.push(Event::Violation {
                round: self.round,
                actor,
                height: fork_height,
                detail: format!("reorg at height {fork_height} below delivered height {delivered}"),
            });
        }
    }

    fn notify_heights<H: Hooks>(&mut self, hooks: &mut H) {
        for actor in 0..self.views.len() {
            let tip = self.views[actor].tip_height();
            while self.seen_height[actor] < tip {
                self.seen_height[actor] += 1;
                let h = self.seen_height[actor];
                hooks.on_new_height(self, actor, h);
            }
        }
    }

    fn schedule(&mut self, round: u64, actor: usize, id: BlockId, front: bool) {
        let q = self.inbox.entry(round).or_default();
        if front {
            q.insert(0, (actor, id));
        } else {
            q.push((actor, id));
        }
    }

    fn honest_tip_height(&self) -> u64 {
        (0..self.views.len())
            .filter(|&a| self.honest[a])
            .map(|a| self.views[a].tip_height())
            .max()
            .unwrap_or(0)
    }

    fn best_honest_tip(&self) -> Option<BlockId> {
        (0..self.views.len())
            .filter(|&a| self.honest[a])
            .max_by_key(|&a| self.views[a].tip_height())
            .map(|a| self.views[a].tip())
    }

    fn publish_withheld(&mut self) {
        let blocks = std::mem::take(&mut self.withheld);
        let next = self.round + 1;
        for (k, &id) in blocks.iter().enumerate() {
            for a in 0..self.views.len() {
                if self.honest[a] {
                    let q = self.inbox.entry(next).or_default();
                    q.insert(k.min(q.len()), (a, id));
                }
            }
        }
    }

    pub fn advance_round<H: Hooks>(&mut self, hooks: &mut H) -> Vec<Event> {
        let mut events = Vec::new();
        if let Some(msgs) = self.inbox.remove(&self.round) {
            for (actor, id) in msgs {
                self.receive(actor, id, &mut events);
            }
        }
        self.notify_heights(hooks);

        let mut honest_mined = false;
        if let Some(winner) = self.mining.draw(&mut self.rng) {
            let actor = self.actor_of[winner.0];
            let parent = self.views[actor].tip();
            let (txs, coms) = hooks.build_block(self, actor, winner, parent);
            let block = Block::new(self.store.get(parent), winner, txs, coms);
            let valid = hooks.validate(&self.store, &block);
            let height = block.height;
            let id = self.store.insert(block, valid);
            events.push(Event::Mined {
                round: self.round,
                height,
                miner: winner,
                block: id,
            });
            let old_height = self.views[actor].tip_height();
            let change = self.views[actor].receive(&self.store, id, &|c, t| c > t);
            if let Some(c) = change {
                self.check_prefix(actor, c.fork_height, old_height, &mut events);
            }
            if self.honest[actor] {
                honest_mined = true;
                for other in 0..self.views.len() {
                    if other == actor {
                        continue;
                    }
                    if self.honest[other] {
                        self.schedule(self.round + 1, other, id, false);
                    } else {
                        self.receive(other, id, &mut events);
                    }
                }
            } else {
                match self.scheduling.clone() {
                    Scheduling::Honest => {
                        for a in 0..self.views.len() {
                            if self.honest[a] {
                                self.schedule(self.round + 1, a, id, true);
                            }
                        }
                    }
                    Scheduling::Selective { direct } => {
                        for a in 0..self.views.len() {
                            if self.honest[a] {
                                let lag = if self.rng.gen_bool(direct.clamp(0.0, 1.0)) { 1 } else { 2 };
                                self.schedule(self.round + lag, a, id, true);
                            }
                        }
                    }
                    Scheduling::PrivateFork { .. } => self.withheld.push(id),
                }
            }
            self.notify_heights(hooks);
        }

        if let Scheduling::PrivateFork { max_reorg } = self.scheduling {
            if let (Some(coalition), Some(best), false) = (self.coalition(), self.best_honest_tip(), self.withheld.is_empty()) {
                let ptip = self.views[coalition].tip();
                let lead = self.views[coalition].tip_height() as i64 - self.honest_tip_height() as i64;
                let worst = (0..self.views.len())
                    .filter(|&a| self.honest[a])
                    .map(|a| {
                        let v = &self.views[a];
                        v.tip_height() - self.store.common_ancestor_height(v.tip(), ptip)
                    })
                    .max()
                    .unwrap_or(0);
                let publish = match worst.cmp(&max_reorg) {
                    std::cmp::Ordering::Less => honest_mined && (0..=1).contains(&lead),
                    std::cmp::Ordering::Equal => lead >= 1,
                    std::cmp::Ordering::Greater => false,
                };
                if publish {
                    self.publish_withheld();
                } else if worst >= max_reorg {
                    self.withheld.clear();
                    let old_height = self.views[coalition].tip_height();
                    let change = self.views[coalition].switch_to(&self.store, best);
                    self.check_prefix(coalition, change.fork_height, old_height, &mut events);
                }
            }
        }

        for actor in 0..self.views.len() {
            let tip = self.views[actor].tip_height();
            while tip >= self.views[actor].delivered.len() as u64 + 1 + self.d {
                let h = self.views[actor].delivered.len() as u64 + 1;
                let id = self.views[actor].main[h as usize];
                self.views[actor].delivered.push(id);
                events.push(Event::Delivered {
                    round: self.round,
                    actor,
                    height: h,
                    block: id,
                    confirmed_by: h + self.d,
                });
                hooks.on_delivered(self, actor, h, h + self.d);
            }
        }
        self.round += 1;
        events
    }
}

/// Closed-form probability that a rushing adversary with power `p` catches
/// up after the honest chain is `depth` blocks above the target.
pub fn reorg_success_probability(p: f64, depth: u64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    (p / (1.0 - p)).powi(depth as i32 + 1)
}

/// Private-fork race to replace the block at `target`. The adversary starts
/// `tip - target + 1` blocks behind and wins on reaching a tie.
pub fn attempt_reorg(p: f64, tip: u64, target: u64, rng: &mut impl Rng) -> Result<bool> {
    if target > tip {
        return Err(Error::HeightOutOfRange { target, tip });
    }
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Precondition(format!("adversary power {p} not below 1/2")));
    }
    if p == 0.0 {
        return Ok(false);
    }
    let start = (tip - target + 1) as i64;
    let give_up = start + 64;
    let mut deficit = start;
    while deficit > 0 && deficit < give_up {
        if rng.gen_bool(p) {
            deficit -= 1;
        } else {
            deficit += 1;
        }
    }
    Ok(deficit <= 0)
}
