mod common;

use std::collections::BTreeMap;

use ariel_core::backbone::{
    alpha_update, AlphaCount, AlphaParams, Db, DbDelta, DeltaBody, ErrorClass, ErrorNotification,
    Judgment, Seq,
};
use ariel_core::entity::EntityRef;
use ariel_core::topology::{TaskInfo, Topology};
use ariel_core::vm::{RecoveryCommand, Verb};
use proptest::prelude::*;

fn topology() -> Topology {
    let tasks = (0..4)
        .map(|t| {
            (
                t,
                TaskInfo {
                    node: t % 3,
                    spare: t == 3,
                    heartbeat_ms: None,
                },
            )
        })
        .collect();
    Topology {
        nodes: 3,
        tasks,
        groups: BTreeMap::from([(9, vec![0, 1])]),
    }
}

fn delta(origin: u32, counter: u64, kind: u8, target: u32, stamp: f64) -> DbDelta {
    let seq = Seq::new(origin, counter);
    let task = EntityRef::task(target % 4);
    let body = match kind % 5 {
        0 | 1 => DeltaBody::Notification(ErrorNotification {
            seq,
            detector: 1,
            entity: task,
            class: ErrorClass::Exception,
            local_time: stamp,
        }),
        2 => DeltaBody::Effect {
            command: RecoveryCommand::new(Verb::Restart, task),
            trigger: Seq::new(origin, 0),
        },
        3 => DeltaBody::Rejoin { node: target % 3 },
        _ => DeltaBody::Phase {
            task: target % 4,
            phase: target,
        },
    };
    DbDelta { seq, stamp, body }
}

fn arb_deltas() -> impl Strategy<Value = Vec<DbDelta>> {
    prop::collection::vec((0u32..3, 0u8..5, 0u32..8, 0.0f64..20_000.0), 0..30).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (o, k, t, s))| delta(o, i as u64, k, t, s))
            .collect()
    })
}

proptest! {
    #[test]
    fn replicas_converge_regardless_of_order(
        deltas in arb_deltas(),
        order in any::<prop::sample::Index>(),
        dup in any::<prop::sample::Index>(),
    ) {
        let topo = topology();
        let params = AlphaParams::default();
        let mut a = Db::new();
        for d in &deltas {
            a.insert(*d);
        }
        let mut shuffled = deltas.clone();
        if !shuffled.is_empty() {
            let r = order.index(shuffled.len());
            shuffled.rotate_left(r);
            shuffled.reverse();
            shuffled.push(deltas[dup.index(deltas.len())]);
        }
        let mut b = Db::new();
        for d in &shuffled {
            b.insert(*d);
        }
        prop_assert_eq!(a.digest(), b.digest());
        prop_assert_eq!(a.content_hash(&topo, &params), b.content_hash(&topo, &params));
        prop_assert_eq!(
            a.materialize(&topo, &params, Some(30_000.0)),
            b.materialize(&topo, &params, Some(30_000.0))
        );
    }

    #[test]
    fn reinsert_is_idempotent(deltas in arb_deltas()) {
        let mut db = Db::new();
        for d in &deltas {
            db.insert(*d);
        }
        let len = db.len();
        for d in &deltas {
            prop_assert!(!db.insert(*d));
        }
        prop_assert_eq!(db.len(), len);
    }

    #[test]
    fn digest_exchange_fills_the_gap(deltas in arb_deltas(), split in any::<prop::sample::Index>()) {
        let mut a = Db::new();
        let mut b = Db::new();
        let cut = if deltas.is_empty() { 0 } else { split.index(deltas.len()) };
        for d in &deltas[..cut] { a.insert(*d); }
        for d in &deltas[cut..] { b.insert(*d); }
        for d in a.missing_from(&b.digest()) { b.insert(d); }
        for d in b.missing_from(&a.digest()) { a.insert(d); }
        prop_assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn alpha_matches_closed_form(
        stream in prop::collection::vec(any::<bool>(), 0..50),
        k in 0.01f64..0.99,
        t in 0.5f64..10.0,
    ) {
        let mut a = AlphaCount::new(k, t);
        for (i, &err) in stream.iter().enumerate() {
            a = alpha_update(a, if err { Judgment::Error } else { Judgment::NoError });
            let expect = common::alpha_closed_form(&stream[..=i], k);
            prop_assert!((a.score - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            prop_assert_eq!(a.is_non_transient(), a.score >= t);
        }
    }
}
