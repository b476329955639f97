//! Scenario files (TOML) and run reports (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::SlippageAttackParams;
use crate::amount::{self, Amount};
use crate::basechain::Scheduling;
use crate::error::{Error, Result};
use crate::execution::{ExecutionReceipt, PoolState};
use crate::protocol::Pi3Delivery;
use crate::rewards::{PartyRewards, RewardEntry};
use crate::types::ProtocolParams;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Honest,
    Biased,
    Chosen,
    Slip,
    Longslip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub parties: usize,
    pub power: Vec<f64>,
    pub block_prob: f64,
    pub rounds: u64,
    #[serde(default = "default_scheduling")]
    pub scheduling: Scheduling,
}

fn default_scheduling() -> Scheduling {
    Scheduling::Honest
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    #[serde(with = "amount::serde_str")]
    pub x: Amount,
    #[serde(with = "amount::serde_str")]
    pub y: Amount,
    #[serde(with = "amount::serde_str")]
    pub fee: Amount,
    /// Output grid for swaps; zero means exact rational outputs.
    #[serde(with = "amount::serde_str", default = "default_quantum")]
    pub quantum: Amount,
}

pub fn default_quantum() -> Amount {
    amount::ratio(1, 1_000_000_000_000)
}

impl PoolConfig {
    pub fn state(&self) -> Result<PoolState> {
        PoolState::new(self.x.clone(), self.y.clone(), self.fee.clone())
    }
}

/// Victim swap stream submitted by honest parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Probability that a swap is submitted in a round.
    pub swap_prob: f64,
    #[serde(with = "amount::serde_str")]
    pub amount: Amount,
    /// Accepted rate is at most `(1 + max_slippage)` times the quoted rate.
    #[serde(with = "amount::serde_str_opt", default, skip_serializing_if = "Option::is_none")]
    pub max_slippage: Option<Amount>,
    /// Starting balance of every asset in every party's account.
    #[serde(with = "amount::serde_str")]
    pub initial_balance: Amount,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            swap_prob: 0.0,
            amount: amount::int(1),
            max_slippage: None,
            initial_balance: amount::int(1000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    #[serde(default)]
    pub strategy: Strategy,
    /// Corrupted party indices.
    #[serde(default)]
    pub parties: Vec<usize>,
    /// Most commitments per block the coalition is willing to withhold.
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub k_tilde: usize,
    #[serde(with = "amount::serde_str", default = "amount::zero")]
    pub coordination_cost: Amount,
    /// Front-run size in the victim's input asset.
    #[serde(with = "amount::serde_str", default = "amount::one")]
    pub front_amount: Amount,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slippage: Option<SlippageAttackParams>,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            strategy: Strategy::Honest,
            parties: Vec::new(),
            k: 0,
            k_tilde: 0,
            coordination_cost: amount::zero(),
            front_amount: amount::one(),
            slippage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionConfig {
    /// Reject configurations whose coalition holds half the power or more.
    #[serde(default = "yes")]
    pub secure_chain: bool,
    /// Minimum honest-miner fraction over every window of `fairness_window`
    /// delivered blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness_min_honest: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness_window: Option<usize>,
    /// Honest swaps older than this many rounds at the end of the run must
    /// be on the delivered chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_rounds: Option<u64>,
}

fn yes() -> bool {
    true
}

impl Default for AssertionConfig {
    fn default() -> Self {
        AssertionConfig {
            secure_chain: true,
            fairness_min_honest: None,
            fairness_window: None,
            validity_rounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub master_seed: u64,
    pub protocol: ProtocolParams,
    pub network: NetworkConfig,
    #[serde(default)]
    pub pools: Vec<PoolConfig>,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default)]
    pub assertions: AssertionConfig,
}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn coalition_power(&self) -> f64 {
        self.adversary
            .parties
            .iter()
            .filter_map(|&p| self.network.power.get(p))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.protocol.validate()?;
        if self.protocol.tau2 < 2 {
            return bad("tau2 must be at least 2 so openings can land after the first loud block".into());
        }
        let n = &self.network;
        if n.parties == 0 || n.power.len() != n.parties {
            return bad(format!("power has {} entries for {} parties", n.power.len(), n.parties));
        }
        if n.power.iter().any(|p| !(*p >= 0.0)) {
            return bad("power entries must be non-negative".into());
        }
        if (n.power.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("power must sum to 1".into());
        }
        if !(0.0..=1.0).contains(&n.block_prob) {
            return bad("block_prob must lie in [0, 1]".into());
        }
        match n.scheduling {
            Scheduling::Selective { direct } if !(0.0..=1.0).contains(&direct) => {
                return bad("selective delivery probability must lie in [0, 1]".into())
            }
            Scheduling::PrivateFork { max_reorg } if max_reorg < 1 => return bad("max_reorg must be at least 1".into()),
            _ => {}
        }
        for p in &self.pools {
            p.state()?;
            if p.quantum < amount::zero() {
                return bad("quantum must be non-negative".into());
            }
        }
        let wl = &self.workload;
        if !(0.0..=1.0).contains(&wl.swap_prob) {
            return bad("swap_prob must lie in [0, 1]".into());
        }
        if wl.swap_prob > 0.0 && self.pools.is_empty() {
            return bad("a swap workload needs at least one pool".into());
        }
        if !amount::is_positive(&wl.amount) || wl.initial_balance < amount::zero() {
            return bad("swap amount must be positive and balances non-negative".into());
        }
        if wl.max_slippage.as_ref().is_some_and(|s| *s < amount::zero()) {
            return bad("max_slippage must be non-negative".into());
        }
        let a = &self.adversary;
        let mut seen = std::collections::BTreeSet::new();
        for &p in &a.parties {
            if p >= n.parties || !seen.insert(p) {
                return bad(format!("adversary party {p} is out of range or repeated"));
            }
        }
        if a.parties.len() == n.parties {
            return bad("at least one party must be honest".into());
        }
        if a.strategy != Strategy::Honest && a.parties.is_empty() {
            return bad("an adversarial strategy needs corrupted parties".into());
        }
        if a.k > 20 {
            return Err(Error::SearchTooLarge(a.k));
        }
        if a.coordination_cost < amount::zero() || !amount::is_positive(&a.front_amount) {
            return bad("coordination cost must be non-negative and front amount positive".into());
        }
        if matches!(a.strategy, Strategy::Slip | Strategy::Longslip) {
            match &a.slippage {
                Some(s) => s.validate()?,
                None => return bad("slip strategies need [adversary.slippage]".into()),
            }
        }
        if a.strategy != Strategy::Honest && self.protocol.n_t < 3 {
            return bad("sandwich strategies need n_t >= 3".into());
        }
        if self.assertions.secure_chain && self.coalition_power() >= 0.5 {
            return bad(format!("coalition power {} is not below 1/2", self.coalition_power()));
        }
        if let Some(mu) = self.assertions.fairness_min_honest {
            if !(0.0..=1.0).contains(&mu) || self.assertions.fairness_window.is_none_or(|w| w == 0) {
                return bad("fairness needs a fraction in [0, 1] and a positive window".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub tip_height: u64,
    pub blocks_mined: usize,
    pub coalition_blocks: usize,
    pub delivered: usize,
    pub pi3_delivered: usize,
    pub honest_fraction: f64,
    pub reorgs: usize,
    pub max_reorg_depth: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockReceipt {
    pub height: u64,
    pub receipt: ExecutionReceipt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSummary {
    pub minted: String,
    pub burned: String,
    pub released: String,
    pub released_blocks: u64,
    pub mean_miner_reward: Option<String>,
    pub expected_honest_utility: f64,
    pub parties: Vec<PartyRewards>,
    pub entries: Vec<RewardEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub strategy: Strategy,
    /// Trading gain of the coalition accounts; Y assets valued at each
    /// pool's initial price.
    pub revenue: String,
    pub revenue_f64: f64,
    pub rewards: String,
    pub sandwiches: usize,
    pub withheld_openings: usize,
    pub chosen_placements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Canonical-order sandwich revenue on the first pool.
    pub lambda: f64,
    pub k: usize,
    pub p_k_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub master_seed: u64,
    pub rounds: u64,
    pub chain: ChainSummary,
    pub deliveries: Vec<Pi3Delivery>,
    pub receipts: Vec<BlockReceipt>,
    pub rewards: RewardSummary,
    pub adversary: AdversaryReport,
    pub bound: Option<BoundReport>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One `{height, miner, seed_hex, permutation, chunk_order}` record per line.
    pub fn delivery_log(&self) -> String {
        let mut out = String::new();
        for d in &self.deliveries {
            let line = serde_json::json!({
                "height": d.height,
                "miner": d.miner,
                "seed_hex": d.seed_hex,
                "permutation": d.permutation,
                "chunk_order": d.chunk_order,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    pub fn failed(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replicas: usize,
    pub mean_revenue: f64,
    pub revenue_se: f64,
    pub all_passed: bool,
    pub failed_replicas: Vec<u64>,
}

impl ReplicaSummary {
    pub fn from_reports(reports: &[RunReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let rev: Vec<f64> = reports.iter().map(|r| r.adversary.revenue_f64).collect();
        let mean = rev.iter().sum::<f64>() / n;
        let var = if rev.len() > 1 {
            rev.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let failed: Vec<u64> = reports.iter().filter(|r| !r.passed).map(|r| r.master_seed).collect();
        ReplicaSummary {
            replicas: reports.len(),
            mean_revenue: mean,
            revenue_se: (var / n).sqrt(),
            all_passed: failed.is_empty(),
            failed_replicas: failed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
master_seed = 11

[protocol]
n_leaders = 3
tau1 = 8
tau2 = 3
d = 6
m = 2
alpha = "1/2"
w = "2"
n_t = 6

[network]
parties = 4
power = [0.3, 0.3, 0.2, 0.2]
block_prob = 0.25
rounds = 200
scheduling = { kind = "selective", direct = 0.5 }

[[pools]]
x = "1000"
y = "1000"
fee = "3/1000"

[workload]
swap_prob = 0.3
amount = "5"
max_slippage = "1/20"
initial_balance = "500"

[adversary]
strategy = "biased"
parties = [3]
k = 2
front_amount = "10"
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = ScenarioConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.protocol.m, 2);
        assert_eq!(cfg.adversary.strategy, Strategy::Biased);
        assert_eq!(cfg.network.scheduling, Scheduling::Selective { direct: 0.5 });
        let again = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_power() {
        let s = SAMPLE.replace("[0.3, 0.3, 0.2, 0.2]", "[0.3, 0.3, 0.2, 0.3]");
        assert!(matches!(ScenarioConfig::from_toml(&s), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_majority_coalition() {
        let s = SAMPLE.replace("parties = [3]", "parties = [0, 1]");
        assert!(ScenarioConfig::from_toml(&s).is_err());
        let s = s.replace("[adversary]", "[assertions]\nsecure_chain = false\n\n[adversary]");
        assert!(ScenarioConfig::from_toml(&s).is_ok());
    }

    #[test]
    fn rejects_unknown_keys() {
        let s = SAMPLE.replace("rounds = 200", "rounds = 200\nlatency = 3");
        assert!(ScenarioConfig::from_toml(&s).is_err());
    }
}
