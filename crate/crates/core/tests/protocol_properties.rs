mod common;

use pi3_core::amount::ratio;
use pi3_core::basechain::Scheduling;
use pi3_core::scenario::Strategy as Attack;
use pi3_core::sim::run;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    honest: usize,
    corrupt: usize,
    adv_power: f64,
    d: u64,
    tau1_extra: u64,
    tau2: u64,
    n_leaders: usize,
    m: usize,
    n_t: usize,
    block_prob: f64,
    schedule: u8,
    direct: f64,
    strategy: u8,
    seed: u64,
}

fn case() -> impl Strategy<Value = Case> {
    (
        (2usize..6, 0usize..3, 0.0f64..=0.3, 2u64..6, 1u64..5, 2u64..5),
        (1usize..5, 1usize..4, 3usize..7, 0.1f64..0.5, 0u8..3, 0.0f64..=1.0, 0u8..3, any::<u64>()),
    )
        .prop_map(
            |((honest, corrupt, adv_power, d, tau1_extra, tau2), (n_leaders, m, n_t, block_prob, schedule, direct, strategy, seed))| Case {
                honest,
                corrupt,
                adv_power,
                d,
                tau1_extra,
                tau2,
                n_leaders,
                m,
                n_t,
                block_prob,
                schedule,
                direct,
                strategy,
                seed,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn delivery_properties_hold(c in case()) {
        let mut cfg = common::cfg(common::HONEST);
        let n = c.honest + c.corrupt;
        let adv = if c.corrupt == 0 { 0.0 } else { c.adv_power };
        let mut power = vec![(1.0 - adv) / c.honest as f64; c.honest];
        power.extend(vec![adv / c.corrupt.max(1) as f64; c.corrupt]);
        let drift = 1.0 - power.iter().sum::<f64>();
        power[0] += drift;
        cfg.master_seed = c.seed;
        cfg.network.parties = n;
        cfg.network.power = power;
        cfg.network.block_prob = c.block_prob;
        cfg.network.rounds = 250;
        cfg.network.scheduling = match c.schedule {
            0 => Scheduling::Honest,
            1 => Scheduling::Selective { direct: c.direct },
            _ => Scheduling::PrivateFork { max_reorg: c.d - 1 },
        };
        cfg.protocol.d = c.d;
        cfg.protocol.tau1 = c.d + c.tau1_extra;
        cfg.protocol.tau2 = c.tau2;
        cfg.protocol.n_leaders = c.n_leaders;
        cfg.protocol.m = c.m;
        cfg.protocol.n_t = c.n_t;
        cfg.protocol.w = ratio(1, 20);
        cfg.adversary.parties = (c.honest..n).collect();
        cfg.adversary.k = 2;
        cfg.adversary.strategy = match (c.corrupt, c.strategy) {
            (0, _) | (_, 0) => Attack::Honest,
            (_, 1) => Attack::Biased,
            _ => Attack::Chosen,
        };
        cfg.adversary.front_amount = ratio(20, 1);
        prop_assert!(cfg.protocol.tau1 > cfg.protocol.d);
        let r = run(&cfg).unwrap();
        let failed: Vec<String> = r.failed().iter().map(|a| format!("{}: {}", a.name, a.detail)).collect();
        prop_assert!(failed.is_empty(), "{:?} failed: {:?}", c, failed);
        for name in ["agreement", "total_order", "no_duplication", "integrity", "external_validity", "latency", "commitment_count"] {
            prop_assert!(r.assertions.iter().any(|a| a.name == name && a.passed), "{} missing", name);
        }
    }
}
