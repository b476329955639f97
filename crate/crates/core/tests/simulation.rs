mod common;

use pi3_core::amount;
use pi3_core::basechain::Scheduling;
use pi3_core::protocol::CommitStatus;
use pi3_core::rewards::Resolution;
use pi3_core::scenario::{ReplicaSummary, Strategy};
use pi3_core::sim::{run, run_replicas, run_with_events};
use pi3_core::types::PartyId;

#[test]
fn honest_run_burns_nothing_and_pays_alpha_w() {
    let cfg = common::cfg(common::HONEST);
    let r = run(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.failed());
    assert_eq!(r.rewards.burned, "0");
    assert_eq!(r.adversary.revenue, "0");
    assert!(r.rewards.released_blocks > 50);
    assert_eq!(r.rewards.mean_miner_reward.as_deref(), Some("1"));
    assert_eq!(r.rewards.minted, r.rewards.released);
    assert_eq!(r.chain.honest_fraction, 1.0);
}

#[test]
fn identical_seeds_replay_byte_for_byte() {
    let cfg = common::cfg(common::BIASED);
    let a = run(&cfg).unwrap().to_json();
    let b = run(&cfg).unwrap().to_json();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.master_seed += 1;
    assert_ne!(run(&other).unwrap().to_json(), a);
}

#[test]
fn replicas_use_consecutive_seeds() {
    let mut cfg = common::cfg(common::HONEST);
    cfg.network.rounds = 120;
    let reps = run_replicas(&cfg, 4).unwrap();
    for (i, r) in reps.iter().enumerate() {
        let mut c = cfg.clone();
        c.master_seed = cfg.master_seed + i as u64;
        assert_eq!(r, &run(&c).unwrap());
    }
}

#[test]
fn biased_revenue_is_lower_with_more_chunks() {
    let mut cfg = common::cfg(common::BIASED);
    cfg.network.rounds = 200;
    let one = ReplicaSummary::from_reports(&run_replicas(&cfg, 200).unwrap());
    cfg.protocol.m = 10;
    let ten = ReplicaSummary::from_reports(&run_replicas(&cfg, 200).unwrap());
    assert!(one.all_passed && ten.all_passed);
    assert!(ten.mean_revenue < one.mean_revenue, "m=1 {} vs m=10 {}", one.mean_revenue, ten.mean_revenue);
}

#[test]
fn withheld_openings_burn_exactly_w() {
    let cfg = common::cfg(common::BIASED);
    let r = run(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.failed());
    assert!(r.adversary.withheld_openings > 0);
    let w = &cfg.protocol.w;
    let mut burned = 0;
    for e in &r.rewards.entries {
        if e.resolution.is_none() {
            continue;
        }
        let unopened = e.statuses.iter().flatten().any(|s| matches!(s, CommitStatus::Burned));
        if !unopened {
            assert_eq!(e.burned, amount::zero());
            continue;
        }
        burned += 1;
        assert_eq!(e.resolution, Some(Resolution::Burned));
        assert_eq!(&e.burned, w);
        assert_eq!(e.miner, PartyId(3));
        assert_eq!(e.miner_share, amount::zero());
    }
    assert!(burned > 0 && burned as u64 <= r.adversary.withheld_openings as u64);
    let total = amount::parse(&r.rewards.burned).unwrap();
    assert_eq!(total, w * amount::int(burned));
}

#[test]
fn private_forks_reorganize_without_violations() {
    let mut cfg = common::cfg(common::HONEST);
    cfg.network.power = vec![0.24, 0.24, 0.24, 0.28];
    cfg.network.scheduling = Scheduling::PrivateFork { max_reorg: cfg.protocol.d - 1 };
    cfg.adversary.parties = vec![3];
    cfg.network.rounds = 1500;
    let r = run(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.failed());
    assert!(r.chain.reorgs > 0);
    assert!(r.chain.max_reorg_depth < cfg.protocol.d);
    assert!(r.chain.coalition_blocks > 0);
}

#[test]
fn logs_are_line_delimited_json() {
    let mut cfg = common::cfg(common::HONEST);
    cfg.network.rounds = 150;
    let out = run_with_events(&cfg).unwrap();
    let log = out.event_log();
    assert_eq!(log.lines().count(), out.events.len());
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("event").is_some() && v.get("round").is_some());
    }
    let deliveries = out.report.delivery_log();
    assert_eq!(deliveries.lines().count(), out.report.deliveries.len());
    for line in deliveries.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["height", "miner", "seed_hex", "permutation", "chunk_order"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn chosen_coalition_places_its_sandwich() {
    let mut cfg = common::cfg(common::BIASED);
    cfg.adversary.strategy = Strategy::Chosen;
    cfg.network.power = vec![0.2, 0.2, 0.15, 0.45];
    cfg.network.rounds = 600;
    let r = run(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.failed());
    assert!(r.adversary.sandwiches > 0);
    assert!(r.adversary.chosen_placements > 0);
    assert_eq!(r.adversary.withheld_openings, 0);
}

#[test]
fn slip_strategies_run() {
    for strategy in [Strategy::Slip, Strategy::Longslip] {
        let mut cfg = common::cfg(common::BIASED);
        cfg.adversary.strategy = strategy;
        cfg.adversary.slippage = Some(pi3_core::adversary::SlippageAttackParams {
            alpha: amount::int(2),
            beta: amount::int(1),
            gamma: amount::int(3),
            eps1: amount::ratio(1, 1_000_000),
            eps2: amount::ratio(1, 1_000_000),
        });
        let r = run(&cfg).unwrap();
        assert!(r.passed, "{strategy:?}: {:?}", r.failed());
        assert!(r.adversary.sandwiches > 0, "{strategy:?}");
    }
}

#[test]
fn bound_is_reported_for_coalitions() {
    let r = run(&common::cfg(common::BIASED)).unwrap();
    let b = r.bound.expect("bound");
    assert_eq!(b.k, 2);
    assert!(b.lambda > 0.0 && (0.0..=1.0).contains(&b.p_k_lambda));
}
