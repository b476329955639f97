//! Run-level invariant checks. Each returns one named assertion.

use std::collections::{BTreeMap, BTreeSet};

use crate::amount::{self, Amount};
use crate::basechain::{BlockStore, Event};
use crate::execution::LedgerState;
use crate::protocol::Pi3Delivery;
use crate::rewards::RewardLedger;
use crate::scenario::{Assertion, BlockReceipt};
use crate::types::{AssetId, BlockId, ProtocolParams};

fn verdict(name: &str, problems: Vec<String>, ok: String) -> Assertion {
    Assertion {
        name: name.to_string(),
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            ok
        } else {
            problems.into_iter().take(5).collect::<Vec<_>>().join("; ")
        },
    }
}

fn prefix_consistent<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    let n = a.len().min(b.len());
    a[..n] == b[..n]
}

/// Honest delivery logs are pairwise prefixes of each other.
pub fn agreement(logs: &[&[Pi3Delivery]]) -> Assertion {
    let mut bad = Vec::new();
    for x in 0..logs.len() {
        for y in x + 1..logs.len() {
            if !prefix_consistent(logs[x], logs[y]) {
                bad.push(format!("actors {x} and {y} delivered different blocks or permutations"));
            }
        }
    }
    verdict("agreement", bad, format!("{} honest logs agree", logs.len()))
}

pub fn execution_agreement(receipts: &[&[BlockReceipt]]) -> Assertion {
    let mut bad = Vec::new();
    for x in 0..receipts.len() {
        for y in x + 1..receipts.len() {
            if !prefix_consistent(receipts[x], receipts[y]) {
                bad.push(format!("actors {x} and {y} executed blocks differently"));
            }
        }
    }
    verdict("execution_agreement", bad, "identical receipts on common prefixes".into())
}

/// Base-chain delivered prefixes are pairwise consistent.
pub fn total_order(prefixes: &[&[BlockId]]) -> Assertion {
    let mut bad = Vec::new();
    for x in 0..prefixes.len() {
        for y in x + 1..prefixes.len() {
            if !prefix_consistent(prefixes[x], prefixes[y]) {
                bad.push(format!("actors {x} and {y} delivered conflicting prefixes"));
            }
        }
    }
    verdict("total_order", bad, "delivered prefixes consistent".into())
}

pub fn no_duplication(logs: &[&[Pi3Delivery]], prefixes: &[&[BlockId]]) -> Assertion {
    let mut bad = Vec::new();
    for (a, log) in logs.iter().enumerate() {
        for (k, d) in log.iter().enumerate() {
            if d.height != k as u64 + 1 {
                bad.push(format!("actor {a} delivered height {} at position {}", d.height, k + 1));
                break;
            }
        }
        let ids: BTreeSet<_> = log.iter().map(|d| d.block).collect();
        if ids.len() != log.len() {
            bad.push(format!("actor {a} delivered a block twice"));
        }
    }
    for (a, p) in prefixes.iter().enumerate() {
        if p.iter().collect::<BTreeSet<_>>().len() != p.len() {
            bad.push(format!("actor {a} base-delivered a block twice"));
        }
    }
    verdict("no_duplication", bad, "each height delivered once".into())
}

/// Every delivered block was announced by exactly one mined event.
pub fn integrity(events: &[Event], prefixes: &[&[BlockId]]) -> Assertion {
    let mut mined: BTreeMap<BlockId, usize> = BTreeMap::new();
    for e in events {
        if let Event::Mined { block, .. } = e {
            *mined.entry(*block).or_default() += 1;
        }
    }
    let mut bad = Vec::new();
    for p in prefixes {
        for id in p.iter() {
            let c = mined.get(id).copied().unwrap_or(0);
            if c != 1 {
                bad.push(format!("block {:016x} mined {c} times", id.0));
            }
        }
    }
    bad.dedup();
    verdict("integrity", bad, "every delivered block mined once".into())
}

pub fn external_validity(store: &BlockStore, prefixes: &[&[BlockId]], valid: impl Fn(BlockId) -> bool) -> Assertion {
    let mut bad = Vec::new();
    for p in prefixes {
        for &id in p.iter() {
            if !store.is_valid(id) || !valid(id) {
                bad.push(format!("invalid block {:016x} at height {}", id.0, store.get(id).height));
            }
        }
    }
    bad.dedup();
    verdict("external_validity", bad, "all delivered blocks valid".into())
}

/// Delivery of block `i` is confirmed at base height `i + τ1 + τ2 + d`.
pub fn latency(logs: &[&[Pi3Delivery]], params: &ProtocolParams) -> Assertion {
    let lag = params.tau1 + params.tau2 + params.d;
    let bad: Vec<String> = logs
        .iter()
        .flat_map(|l| l.iter())
        .filter(|d| d.confirmed_by != d.height + lag)
        .map(|d| format!("height {} confirmed at {}", d.height, d.confirmed_by))
        .collect();
    verdict("latency", bad, format!("lag {lag} everywhere"))
}

/// The ordered-delivery count trails the base-delivery count by `τ1 + τ2`.
pub fn order_equivalence(logs: &[&[Pi3Delivery]], prefixes: &[&[BlockId]], params: &ProtocolParams) -> Assertion {
    let shift = params.tau1 + params.tau2;
    let mut bad = Vec::new();
    for (a, (l, p)) in logs.iter().zip(prefixes).enumerate() {
        let expect = (p.len() as u64).saturating_sub(shift);
        if l.len() as u64 != expect {
            bad.push(format!("actor {a}: {} ordered deliveries, expected {expect}", l.len()));
            continue;
        }
        if l.iter().any(|d| p[(d.height - 1) as usize] != d.block) {
            bad.push(format!("actor {a}: ordered delivery differs from base chain"));
        }
    }
    verdict("order_equivalence", bad, "ordered log equals base log shifted".into())
}

pub fn commitment_count(store: &BlockStore, n_leaders: usize) -> Assertion {
    let bad: Vec<String> = store
        .blocks()
        .filter(|b| b.miner.is_some())
        .filter(|b| b.coms.len() != n_leaders || b.coms.iter().any(Option::is_none))
        .map(|b| format!("block at height {} carries {} commitments", b.height, b.coms.len()))
        .collect();
    verdict("commitment_count", bad, format!("{n_leaders} commitments in every mined block"))
}

pub fn conservation(initial: &BTreeMap<AssetId, Amount>, ledgers: &[&LedgerState]) -> Assertion {
    let bad: Vec<String> = ledgers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.totals() != *initial || !l.all_non_negative())
        .map(|(a, _)| format!("actor {a} changed asset totals or holds a negative balance"))
        .collect();
    verdict("conservation", bad, "per-asset totals unchanged".into())
}

pub fn receipt_balance(receipts: &[BlockReceipt]) -> Assertion {
    let mut bad = Vec::new();
    for r in receipts {
        let mut net: BTreeMap<AssetId, Amount> = BTreeMap::new();
        for d in &r.receipt.deltas {
            *net.entry(d.asset).or_insert_with(amount::zero) += &d.amount;
        }
        if net.values().any(|v| *v != amount::zero()) {
            bad.push(format!("block {} receipt does not net to zero", r.height));
        }
    }
    verdict("receipt_balance", bad, "every receipt nets to zero per asset".into())
}

pub fn reward_conservation(ledger: &RewardLedger) -> Assertion {
    let lhs = ledger.minted() - ledger.burned();
    let rhs = ledger.released_total();
    let bad = if lhs == rhs {
        Vec::new()
    } else {
        vec![format!(
            "minted - burned = {} but released {}",
            amount::format(&lhs),
            amount::format(&rhs)
        )]
    };
    verdict("reward_conservation", bad, format!("released {}", amount::format(&rhs)))
}

pub fn no_violations(events: &[Event]) -> Assertion {
    let bad: Vec<String> = events
        .iter()
        .filter_map(|e| match e {
            Event::Violation { detail, actor, .. } => Some(format!("actor {actor}: {detail}")),
            _ => None,
        })
        .collect();
    verdict("no_violations", bad, "no delivered block was reorganized".into())
}

/// Honest-miner fraction over every window of `window` consecutive blocks.
pub fn fairness(honest_miner: &[bool], window: usize, min_fraction: f64) -> Assertion {
    let mut bad = Vec::new();
    let mut worst = 1.0f64;
    if honest_miner.len() >= window && window > 0 {
        for w in honest_miner.windows(window) {
            let f = w.iter().filter(|&&h| h).count() as f64 / window as f64;
            worst = worst.min(f);
        }
        if worst < min_fraction {
            bad.push(format!("honest fraction {worst:.3} below {min_fraction}"));
        }
    }
    verdict("fairness", bad, format!("worst window fraction {worst:.3}"))
}

pub fn validity(missing: &[u64]) -> Assertion {
    let bad = missing.iter().map(|id| format!("swap {id:016x} never delivered")).collect();
    verdict("validity", bad, "old honest swaps all delivered".into())
}
