//! Delayed block rewards.
//!
//! A block's reward `w` is held for the waiting phase and resolved from the
//! outcome of its `n_ℓ` commitments: a rival leader that posts a preimage in
//! the silent window claims all of `w`; any unopened commitment burns `w`;
//! otherwise the miner receives `α·w` and every appender of an opening
//! receives `(1-α)·w/n_ℓ` per opening.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::amount::{self, Amount};
use crate::protocol::{CommitStatus, Pi3Delivery};
use crate::types::{PartyId, ProtocolParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "resolution", rename_all = "snake_case")]
pub enum Resolution {
    Split,
    Stolen { by: PartyId },
    Burned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardEntry {
    pub miner: PartyId,
    pub height: u64,
    pub statuses: Vec<Option<CommitStatus>>,
    pub release_height: u64,
    pub resolution: Option<Resolution>,
    #[serde(with = "amount::serde_str")]
    pub miner_share: Amount,
    pub appender_shares: Vec<(PartyId, String)>,
    #[serde(with = "amount::serde_str")]
    pub burned: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyRewards {
    pub party: PartyId,
    #[serde(with = "amount::serde_str")]
    pub as_miner: Amount,
    #[serde(with = "amount::serde_str")]
    pub as_appender: Amount,
    #[serde(with = "amount::serde_str")]
    pub claimed: Amount,
}

impl PartyRewards {
    fn new(party: PartyId) -> Self {
        PartyRewards {
            party,
            as_miner: amount::zero(),
            as_appender: amount::zero(),
            claimed: amount::zero(),
        }
    }

    pub fn total(&self) -> Amount {
        &self.as_miner + &self.as_appender + &self.claimed
    }
}

#[derive(Debug, Clone)]
pub struct RewardLedger {
    params: ProtocolParams,
    entries: BTreeMap<u64, RewardEntry>,
    parties: BTreeMap<PartyId, PartyRewards>,
    minted: Amount,
    burned: Amount,
    released_blocks: u64,
}

impl RewardLedger {
    pub fn new(params: ProtocolParams) -> Self {
        RewardLedger {
            params,
            entries: BTreeMap::new(),
            parties: BTreeMap::new(),
            minted: amount::zero(),
            burned: amount::zero(),
            released_blocks: 0,
        }
    }

    pub fn release_height(&self, height: u64) -> u64 {
        height + self.params.waiting_phase()
    }

    pub fn register_block(&mut self, height: u64, miner: PartyId) {
        let release_height = self.release_height(height);
        let n = self.params.n_leaders;
        self.entries.entry(height).or_insert_with(|| RewardEntry {
            miner,
            height,
            statuses: vec![None; n],
            release_height,
            resolution: None,
            miner_share: amount::zero(),
            appender_shares: Vec::new(),
            burned: amount::zero(),
        });
    }

    pub fn record(&mut self, i: u64, j: usize, status: CommitStatus) {
        if let Some(e) = self.entries.get_mut(&i) {
            if let Some(slot) = e.statuses.get_mut(j - 1) {
                slot.get_or_insert(status);
            }
        }
    }

    pub fn process_delivery(&mut self, d: &Pi3Delivery) {
        if let Some(miner) = d.miner {
            self.register_block(d.height, miner);
        }
        for o in &d.outcomes {
            self.record(o.i, o.j, o.status.clone());
        }
        self.release_up_to(d.confirmed_by);
    }

    /// Resolves every complete entry whose release height is at most `height`.
    pub fn release_up_to(&mut self, height: u64) {
        let ready: Vec<u64> = self
            .entries
            .values()
            .filter(|e| e.resolution.is_none() && e.release_height <= height)
            .filter(|e| e.statuses.iter().all(Option::is_some))
            .map(|e| e.height)
            .collect();
        for h in ready {
            self.resolve(h);
        }
    }

    fn credit(&mut self, p: PartyId) -> &mut PartyRewards {
        self.parties.entry(p).or_insert_with(|| PartyRewards::new(p))
    }

    fn resolve(&mut self, height: u64) {
        let w = self.params.w.clone();
        let alpha = self.params.alpha.clone();
        let n = self.params.n_leaders as i64;
        let e = self.entries[&height].clone();
        let statuses: Vec<CommitStatus> = e.statuses.iter().flatten().cloned().collect();
        let first_theft = statuses
            .iter()
            .filter_map(|s| match s {
                CommitStatus::Stolen { by, at } => Some((*at, *by)),
                _ => None,
            })
            .min();
        let any_unopened = statuses
            .iter()
            .any(|s| matches!(s, CommitStatus::Burned | CommitStatus::Excluded));
        let mut entry = e.clone();
        self.minted += &w;
        self.released_blocks += 1;
        if let Some((_, by)) = first_theft {
            self.credit(by).claimed += &w;
            entry.resolution = Some(Resolution::Stolen { by });
        } else if any_unopened {
            self.burned += &w;
            entry.burned = w.clone();
            entry.resolution = Some(Resolution::Burned);
        } else {
            let miner_share = &alpha * &w;
            let per_opening = (amount::one() - &alpha) * &w / amount::int(n);
            self.credit(e.miner).as_miner += &miner_share;
            for s in &statuses {
                if let CommitStatus::Opened { appender, .. } = s {
                    self.credit(*appender).as_appender += &per_opening;
                    entry
                        .appender_shares
                        .push((*appender, amount::format(&per_opening)));
                }
            }
            entry.miner_share = miner_share;
            entry.resolution = Some(Resolution::Split);
        }
        self.entries.insert(height, entry);
    }

    pub fn entry(&self, height: u64) -> Option<&RewardEntry> {
        self.entries.get(&height)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RewardEntry> {
        self.entries.values()
    }

    pub fn released_to(&self, p: PartyId) -> Amount {
        self.parties.get(&p).map_or_else(amount::zero, PartyRewards::total)
    }

    pub fn party_summaries(&self) -> Vec<PartyRewards> {
        self.parties.values().cloned().collect()
    }

    pub fn minted(&self) -> &Amount {
        &self.minted
    }

    pub fn burned(&self) -> &Amount {
        &self.burned
    }

    pub fn released_total(&self) -> Amount {
        self.parties.values().map(PartyRewards::total).fold(amount::zero(), |a, b| a + b)
    }

    pub fn released_blocks(&self) -> u64 {
        self.released_blocks
    }

    /// Mean miner share over released blocks.
    pub fn mean_miner_reward(&self) -> Option<Amount> {
        if self.released_blocks == 0 {
            return None;
        }
        let total = self
            .parties
            .values()
            .fold(amount::zero(), |a, p| a + &p.as_miner);
        Some(total / amount::int(self.released_blocks as i64))
    }
}

/// Lower bound on an honest leader's expected reward: `(1-q)^{n_ℓ}·α·w`.
pub fn expected_honest_utility(params: &ProtocolParams, q: f64) -> f64 {
    (1.0 - q).powi(params.n_leaders as i32) * amount::to_f64(&params.alpha) * amount::to_f64(&params.w)
}
