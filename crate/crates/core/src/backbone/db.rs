//! The replicated notification database.
//!
//! A replica is a set of deltas keyed by sequence id. Entity states are not
//! stored but folded from the deltas in `(stamp, seq)` order, so any two
//! replicas holding the same set agree on every state regardless of the
//! order or multiplicity in which deltas arrived.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};

use super::alpha::{AlphaParams, AlphaTrack};
use crate::entity::{DbSnapshot, EntityKind, EntityRef, NodeId};
use crate::topology::Topology;
use crate::vm::{RecoveryCommand, Verb};

/// Globally unique delta id: origin node and a per-node counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seq {
    pub origin: NodeId,
    pub counter: u64,
}

impl Seq {
    pub fn new(origin: NodeId, counter: u64) -> Self {
        Seq { origin, counter }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (o, c) = s.split_once(':')?;
        Some(Seq::new(o.parse().ok()?, c.parse().ok()?))
    }
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.origin, self.counter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorClass {
    Crash,
    TransientCandidate,
    Exception,
    WdTimeout,
    MinorityVote,
}

impl ErrorClass {
    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Crash => "CRASH",
            ErrorClass::TransientCandidate => "TRANSIENT_CANDIDATE",
            ErrorClass::Exception => "EXCEPTION",
            ErrorClass::WdTimeout => "WD_TIMEOUT",
            ErrorClass::MinorityVote => "MINORITY_VOTE",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNotification {
    pub seq: Seq,
    pub detector: u32,
    pub entity: EntityRef,
    pub class: ErrorClass,
    /// Milliseconds on the origin node's clock.
    pub local_time: f64,
}

/// What a delta records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaBody {
    Notification(ErrorNotification),
    /// A recovery command applied to a single node or task.
    Effect {
        command: RecoveryCommand,
        trigger: Seq,
    },
    /// RINT has run for this notification; replicas must not run it again.
    Evaluated {
        notification: Seq,
    },
    /// A node suspected crashed is reachable again.
    Rejoin {
        node: NodeId,
    },
    /// A task declared its current phase.
    Phase {
        task: u32,
        phase: u32,
    },
}

/// One entry of the replicated log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbDelta {
    pub seq: Seq,
    /// Local time at the origin, used to order the fold.
    pub stamp: f64,
    pub body: DeltaBody,
}

/// A single field change produced by a delta, for tracing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateChange {
    pub entity: EntityRef,
    pub field: &'static str,
    pub value: bool,
}

impl DbDelta {
    pub fn notification(&self) -> Option<&ErrorNotification> {
        match &self.body {
            DeltaBody::Notification(n) => Some(n),
            _ => None,
        }
    }

    /// Field updates this delta applies, independent of α-count state.
    pub fn state_changes(&self) -> Vec<StateChange> {
        let ch = |entity, field, value| StateChange {
            entity,
            field,
            value,
        };
        match self.body {
            DeltaBody::Notification(n) => {
                let mut v = vec![ch(n.entity, "faulty", true)];
                if n.class == ErrorClass::Crash {
                    v.push(ch(n.entity, "active", false));
                }
                v
            }
            DeltaBody::Effect { command, .. } => {
                let e = command.target;
                match command.verb {
                    Verb::Restart => vec![
                        ch(e, "restarted", true),
                        ch(e, "faulty", false),
                        ch(e, "active", true),
                    ],
                    Verb::Start => vec![ch(e, "active", true), ch(e, "faulty", false)],
                    Verb::Terminate => vec![ch(e, "active", false), ch(e, "restarted", false)],
                    Verb::Isolate => vec![
                        ch(e, "isolated", true),
                        ch(e, "active", false),
                        ch(e, "restarted", false),
                    ],
                    Verb::Send | Verb::Warn => Vec::new(),
                }
            }
            DeltaBody::Rejoin { node } => vec![
                ch(EntityRef::node(node), "active", true),
                ch(EntityRef::node(node), "faulty", false),
            ],
            DeltaBody::Evaluated { .. } | DeltaBody::Phase { .. } => Vec::new(),
        }
    }
}

/// Entity states folded from a replica at a given local time.
#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub states: DbSnapshot,
    pub alpha: BTreeMap<EntityRef, f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Db {
    deltas: BTreeMap<Seq, DbDelta>,
    evaluated: BTreeSet<Seq>,
}

impl Db {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn contains(&self, seq: Seq) -> bool {
        self.deltas.contains_key(&seq)
    }

    pub fn get(&self, seq: Seq) -> Option<&DbDelta> {
        self.deltas.get(&seq)
    }

    /// Stores `d`; returns `false` if its seq was already present.
    pub fn insert(&mut self, d: DbDelta) -> bool {
        if self.deltas.contains_key(&d.seq) {
            return false;
        }
        if let DeltaBody::Evaluated { notification } = d.body {
            self.evaluated.insert(notification);
        }
        self.deltas.insert(d.seq, d);
        true
    }

    pub fn is_evaluated(&self, notification: Seq) -> bool {
        self.evaluated.contains(&notification)
    }

    pub fn digest(&self) -> BTreeSet<Seq> {
        self.deltas.keys().copied().collect()
    }

    /// Every stored delta whose seq the peer does not have.
    pub fn missing_from(&self, peer: &BTreeSet<Seq>) -> Vec<DbDelta> {
        self.deltas
            .values()
            .filter(|d| !peer.contains(&d.seq))
            .copied()
            .collect()
    }

    pub fn deltas(&self) -> impl Iterator<Item = &DbDelta> {
        self.deltas.values()
    }

    pub fn notifications(&self) -> impl Iterator<Item = &ErrorNotification> {
        self.deltas.values().filter_map(|d| d.notification())
    }

    /// Stored notifications RINT has not evaluated anywhere, in fold order.
    pub fn pending(&self) -> Vec<Seq> {
        let mut v: Vec<&DbDelta> = self
            .deltas
            .values()
            .filter(|d| d.notification().is_some() && !self.evaluated.contains(&d.seq))
            .collect();
        v.sort_by(|a, b| a.stamp.total_cmp(&b.stamp).then(a.seq.cmp(&b.seq)));
        v.into_iter().map(|d| d.seq).collect()
    }

    fn ordered(&self) -> Vec<&DbDelta> {
        let mut v: Vec<&DbDelta> = self.deltas.values().collect();
        v.sort_by(|a, b| a.stamp.total_cmp(&b.stamp).then(a.seq.cmp(&b.seq)));
        v
    }

    /// Folds the replica into entity states. With `now`, error-free judgment
    /// windows up to `now` are applied to the α-counts; without it, scores
    /// stay as of the latest error so the result depends on the delta set
    /// alone.
    pub fn materialize(
        &self,
        topology: &Topology,
        params: &AlphaParams,
        now: Option<f64>,
    ) -> Materialized {
        let mut states = topology.initial_states();
        let mut alpha: BTreeMap<EntityRef, AlphaTrack> = BTreeMap::new();
        for d in self.ordered() {
            if let DeltaBody::Notification(n) = d.body {
                alpha
                    .entry(n.entity)
                    .or_insert_with(|| AlphaTrack::new(params))
                    .error_at(params.window(d.stamp));
            }
            if let DeltaBody::Phase { task, phase } = d.body {
                states.entry(EntityRef::task(task)).or_default().phase = phase;
            }
            for c in d.state_changes() {
                let s = states.entry(c.entity).or_default();
                match c.field {
                    "faulty" => s.faulty = c.value,
                    "active" => s.active = c.value,
                    "isolated" => s.isolated = c.value,
                    "restarted" => s.restarted = c.value,
                    other => unreachable!("unknown field {other}"),
                }
            }
        }
        if let Some(now) = now {
            let w = params.window(now);
            for track in alpha.values_mut() {
                track.judge_until(w);
            }
        }
        for (e, s) in states.iter_mut() {
            let score = alpha.get(e).map_or(0.0, |t| t.score());
            s.transient = s.faulty && score < params.threshold;
        }
        let down: BTreeSet<NodeId> = states
            .iter()
            .filter(|(e, s)| e.kind == EntityKind::Node && !s.active)
            .map(|(e, _)| e.id)
            .collect();
        for (e, s) in states.iter_mut() {
            if e.kind == EntityKind::Task
                && topology.host_of(e.id).is_some_and(|h| down.contains(&h))
            {
                s.active = false;
            }
            if s.isolated {
                s.active = false;
            }
        }
        Materialized {
            states,
            alpha: alpha.into_iter().map(|(e, t)| (e, t.score())).collect(),
        }
    }

    /// Short hash of the seq set and the time-independent entity states.
    pub fn content_hash(&self, topology: &Topology, params: &AlphaParams) -> String {
        let m = self.materialize(topology, params, None);
        let mut h = Sha256::new();
        for seq in self.deltas.keys() {
            h.update(seq.origin.to_le_bytes());
            h.update(seq.counter.to_le_bytes());
        }
        for (e, s) in &m.states {
            h.update([e.kind.code() as u8]);
            h.update(e.id.to_le_bytes());
            h.update([
                s.active as u8,
                s.faulty as u8,
                s.transient as u8,
                s.isolated as u8,
                s.restarted as u8,
            ]);
            h.update(s.phase.to_le_bytes());
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TaskInfo;

    fn topo() -> Topology {
        let mut t = Topology {
            nodes: 3,
            ..Default::default()
        };
        for (id, node) in [(10, 2), (11, 2), (12, 1)] {
            t.tasks.insert(
                id,
                TaskInfo {
                    node,
                    spare: false,
                    heartbeat_ms: None,
                },
            );
        }
        t.groups.insert(3, vec![10, 12]);
        t
    }

    fn note(origin: NodeId, counter: u64, e: EntityRef, class: ErrorClass, at: f64) -> DbDelta {
        let seq = Seq::new(origin, counter);
        DbDelta {
            seq,
            stamp: at,
            body: DeltaBody::Notification(ErrorNotification {
                seq,
                detector: 0,
                entity: e,
                class,
                local_time: at,
            }),
        }
    }

    #[test]
    fn first_transient_candidate_is_transient() {
        let mut db = Db::new();
        db.insert(note(
            0,
            0,
            EntityRef::task(10),
            ErrorClass::TransientCandidate,
            100.0,
        ));
        let m = db.materialize(&topo(), &AlphaParams::default(), Some(100.0));
        let s = m.states[&EntityRef::task(10)];
        assert!(s.faulty && s.transient);
        assert_eq!(m.alpha[&EntityRef::task(10)], 1.0);
    }

    #[test]
    fn node_crash_deactivates_hosted_tasks() {
        let mut db = Db::new();
        db.insert(note(0, 0, EntityRef::node(2), ErrorClass::Crash, 50.0));
        let m = db.materialize(&topo(), &AlphaParams::default(), Some(60.0));
        let n2 = m.states[&EntityRef::node(2)];
        assert!(n2.faulty && !n2.active);
        assert!(!m.states[&EntityRef::task(10)].active);
        assert!(!m.states[&EntityRef::task(11)].active);
        assert!(m.states[&EntityRef::task(12)].active);
    }

    #[test]
    fn duplicate_insert_is_noop() {
        let mut db = Db::new();
        let d = note(1, 4, EntityRef::task(10), ErrorClass::Exception, 5.0);
        assert!(db.insert(d));
        assert!(!db.insert(d));
        assert_eq!(db.len(), 1);
    }

    #[test]
    fn unknown_entity_auto_registered() {
        let mut db = Db::new();
        db.insert(note(1, 0, EntityRef::task(99), ErrorClass::Exception, 5.0));
        let m = db.materialize(&topo(), &AlphaParams::default(), None);
        let s = m.states[&EntityRef::task(99)];
        assert!(s.faulty && !s.active);
    }

    #[test]
    fn restart_clears_fault_but_keeps_score() {
        let mut db = Db::new();
        db.insert(note(1, 0, EntityRef::task(10), ErrorClass::WdTimeout, 10.0));
        db.insert(DbDelta {
            seq: Seq::new(2, 0),
            stamp: 20.0,
            body: DeltaBody::Effect {
                command: RecoveryCommand::new(Verb::Restart, EntityRef::task(10)),
                trigger: Seq::new(1, 0),
            },
        });
        let m = db.materialize(&topo(), &AlphaParams::default(), Some(30.0));
        let s = m.states[&EntityRef::task(10)];
        assert!(s.active && s.restarted && !s.faulty && !s.transient);
        assert_eq!(m.alpha[&EntityRef::task(10)], 1.0);
    }

    #[test]
    fn missing_from_is_set_difference() {
        let mut a = Db::new();
        let mut b = Db::new();
        for i in 0..2 {
            a.insert(note(
                0,
                i,
                EntityRef::task(10),
                ErrorClass::Exception,
                i as f64,
            ));
        }
        for i in 0..3 {
            b.insert(note(
                1,
                i,
                EntityRef::task(12),
                ErrorClass::Exception,
                i as f64,
            ));
        }
        assert_eq!(a.missing_from(&b.digest()).len(), 2);
        assert_eq!(b.missing_from(&a.digest()).len(), 3);
        assert!(a.missing_from(&a.digest()).is_empty());
    }

    #[test]
    fn pending_excludes_evaluated() {
        let mut db = Db::new();
        db.insert(note(0, 0, EntityRef::task(10), ErrorClass::Exception, 2.0));
        db.insert(note(1, 0, EntityRef::task(12), ErrorClass::Exception, 1.0));
        assert_eq!(db.pending(), vec![Seq::new(1, 0), Seq::new(0, 0)]);
        db.insert(DbDelta {
            seq: Seq::new(0, 1),
            stamp: 3.0,
            body: DeltaBody::Evaluated {
                notification: Seq::new(1, 0),
            },
        });
        assert_eq!(db.pending(), vec![Seq::new(0, 0)]);
    }
}
