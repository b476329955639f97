use std::collections::BTreeMap;

use pi3_core::amount::{self, int, ratio, Amount};
use pi3_core::execution::{execute_block, execute_serial, stage_one_execute, ExecStatus, LedgerState, PoolSpec, PoolState};
use pi3_core::randomness::perm_from_rand_bits;
use pi3_core::types::{Direction, PartialSeed, PartyId, Permutation, Transaction, TxKind};
use proptest::prelude::*;

fn ledger() -> LedgerState {
    let mut l = LedgerState::new();
    for (i, fee) in [(0u32, int(0)), (1, ratio(3, 1000))] {
        l.add_pool(
            PoolSpec {
                account: 1000 + i,
                asset_x: 2 * i,
                asset_y: 2 * i + 1,
                fee: fee.clone(),
                quantum: int(0),
            },
            &PoolState::new(int(400), int(300), fee).unwrap(),
        )
        .unwrap();
    }
    for acct in 0..4 {
        for asset in 0..4 {
            l.credit(acct, asset, &int(60));
        }
    }
    l
}

#[derive(Debug, Clone)]
struct Spec {
    kind: u8,
    a: u32,
    b: u32,
    asset: u32,
    amt: i64,
    dir: bool,
    bound: Option<i64>,
    requires_prev: bool,
}

fn spec() -> impl Strategy<Value = Spec> {
    (0u8..3, 0u32..4, 0u32..4, 0u32..4, 1i64..90, any::<bool>(), proptest::option::of(1i64..4), proptest::bool::weighted(0.1))
        .prop_map(|(kind, a, b, asset, amt, dir, bound, requires_prev)| Spec {
            kind,
            a,
            b,
            asset,
            amt,
            dir,
            bound,
            requires_prev,
        })
}

fn build(specs: &[Spec]) -> Vec<Transaction> {
    let mut out: Vec<Transaction> = Vec::new();
    for (n, s) in specs.iter().enumerate() {
        let kind = match s.kind {
            0 => TxKind::PlainTransfer {
                from: s.a,
                to: s.b,
                asset: s.asset,
                amount: int(s.amt),
            },
            1 => TxKind::Swap {
                pool: (s.asset % 2) as usize,
                trader: s.a,
                direction: if s.dir { Direction::XToY } else { Direction::YToX },
                amount_in: ratio(s.amt, 3),
                max_rate: s.bound.map(|b| ratio(b * 3, 2)),
            },
            _ => TxKind::Noop,
        };
        let mut tx = Transaction::new(n as u64 + 1, PartyId(s.a as usize), kind);
        if s.requires_prev && n > 0 {
            tx.requires = Some(n as u64);
        }
        out.push(tx);
    }
    out
}

fn seed(bytes: [u8; 32]) -> PartialSeed {
    PartialSeed::new(bytes.to_vec(), 256).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn single_chunk_identity_equals_serial(specs in proptest::collection::vec(spec(), 1..9)) {
        let txs = build(&specs);
        let mut a = ledger();
        let mut b = ledger();
        let receipt = execute_block(&mut a, &txs, &Permutation::identity(txs.len()), 1);
        let serial = execute_serial(&mut b, &txs);
        prop_assert_eq!(&receipt.parents, &serial);
        prop_assert_eq!(a.balances(), b.balances());
    }

    #[test]
    fn chunked_execution_conserves_and_isolates_aborts(
        specs in proptest::collection::vec(spec(), 1..9),
        m in 1usize..6,
        bytes in any::<[u8; 32]>(),
    ) {
        let txs = build(&specs);
        let start = ledger();
        let s1 = stage_one_execute(&start, &txs);
        let perm = perm_from_rand_bits(&seed(bytes), txs.len() * m);
        let mut state = start.clone();
        let receipt = execute_block(&mut state, &txs, &perm, m);
        prop_assert_eq!(state.totals(), start.totals());
        prop_assert!(state.all_non_negative());

        let mut expected: BTreeMap<(u32, u32), Amount> = start.balances().clone();
        for (t, (_, status)) in receipt.parents.iter().enumerate() {
            if *status == ExecStatus::Executed {
                for tr in &s1[t].transfers {
                    *expected.entry((tr.source, tr.asset)).or_insert_with(amount::zero) -= &tr.amount;
                    *expected.entry((tr.dest, tr.asset)).or_insert_with(amount::zero) += &tr.amount;
                }
            }
        }
        for (k, v) in &expected {
            prop_assert_eq!(&state.balance(k.0, k.1), v);
        }
        for d in &receipt.deltas {
            prop_assert_eq!(&expected[&(d.account, d.asset)] - &start.balance(d.account, d.asset), d.amount.clone());
        }
        prop_assert_eq!(receipt.chunks.len(), txs.len() * m);
    }
}
