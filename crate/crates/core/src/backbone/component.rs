//! The per-node backbone (BB) agent.
//!
//! The agent is sans-IO: callers feed it messages, timer polls and local
//! error reports together with the node's local time, and it answers with
//! [`BbOutput`]s for the caller to put on the wire or act upon.
//!
//! Every node keeps a replica of the notification database and a view of
//! which peers are alive. The lowest alive node id acts as executor: it runs
//! RINT once per stored notification and dispatches the resulting recovery
//! commands.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::alpha::AlphaParams;
use super::db::{Db, DbDelta, DeltaBody, ErrorClass, ErrorNotification, Seq};
use super::tom::{TimeoutId, Tom};
use crate::entity::{DbSnapshot, EntityKind, EntityRef, NodeId};
use crate::rcode::RCodeProgram;
use crate::topology::Topology;
use crate::vm::{self, RecoveryCommand, Verb, VmFault};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbConfig {
    /// Interval between BB heartbeats.
    pub heartbeat_ms: f64,
    /// Silence after which a peer is considered down.
    pub suspect_ms: f64,
    pub anti_entropy_ms: f64,
}

impl BbConfig {
    /// Timings derived from the largest network delay: peers are suspected
    /// after four delays of silence and heartbeats go out twice as often;
    /// anti-entropy runs every twenty delays.
    pub fn for_max_delay(d_max: f64) -> Self {
        BbConfig {
            heartbeat_ms: 2.0 * d_max,
            suspect_ms: 4.0 * d_max,
            anti_entropy_ms: 20.0 * d_max,
        }
    }
}

impl Default for BbConfig {
    fn default() -> Self {
        Self::for_max_delay(10.0)
    }
}

/// Configuration every agent of one system shares.
#[derive(Debug, Clone)]
pub struct BackboneShared {
    pub topology: Topology,
    pub alpha: AlphaParams,
    pub program: RCodeProgram,
    pub config: BbConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BbMessage {
    Heartbeat,
    /// A freshly recorded delta.
    Delta(DbDelta),
    /// The sender's full set of seqs.
    Digest(BTreeSet<Seq>),
    /// Anti-entropy reply: deltas the recipient lacks.
    Deltas(Vec<DbDelta>),
    /// Carry out a command on an entity hosted by the recipient.
    Cmd {
        command: RecoveryCommand,
        trigger: Seq,
    },
}

impl BbMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            BbMessage::Heartbeat => "BB_HEARTBEAT",
            BbMessage::Delta(_) => "DELTA",
            BbMessage::Digest(_) => "DIGEST",
            BbMessage::Deltas(_) => "DELTAS",
            BbMessage::Cmd { .. } => "CMD",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BbOutput {
    Broadcast(BbMessage),
    Unicast(NodeId, BbMessage),
    /// Deliver a SEND or WARN to one task.
    ToTask {
        task: u32,
        command: RecoveryCommand,
        trigger: Seq,
    },
    /// Carry out a command on a task or on this node.
    Apply {
        command: RecoveryCommand,
        trigger: Seq,
    },
    Trace {
        component: &'static str,
        kind: &'static str,
        detail: String,
    },
    Fault(VmFault),
}

fn trace(out: &mut Vec<BbOutput>, component: &'static str, kind: &'static str, detail: String) {
    out.push(BbOutput::Trace {
        component,
        kind,
        detail,
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum BbTimer {
    Heartbeat,
    AntiEntropy,
    Suspect(NodeId),
    Ready,
}

pub fn elect_executor(alive: &BTreeSet<NodeId>) -> Option<NodeId> {
    alive.first().copied()
}

#[derive(Debug, Clone)]
pub struct Backbone {
    id: NodeId,
    shared: Arc<BackboneShared>,
    db: Db,
    counter: u64,
    alive: BTreeSet<NodeId>,
    suspect: BTreeMap<NodeId, TimeoutId>,
    tom: Tom<BbTimer>,
    executor: Option<NodeId>,
    /// A rebooted agent does not execute until it has resynchronized.
    ready: bool,
    dirty: bool,
}

impl Backbone {
    /// `epoch` counts reboots of this node; it keeps sequence numbers of
    /// successive incarnations apart.
    pub fn new(id: NodeId, shared: Arc<BackboneShared>, epoch: u32) -> Self {
        let alive = shared.topology.node_ids().chain([id]).collect();
        Backbone {
            id,
            shared,
            db: Db::new(),
            counter: (epoch as u64) << 32,
            alive,
            suspect: BTreeMap::new(),
            tom: Tom::new(),
            executor: None,
            ready: epoch == 0,
            dirty: true,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn db(&self) -> &Db {
        &self.db
    }

    pub fn alive(&self) -> &BTreeSet<NodeId> {
        &self.alive
    }

    pub fn executor(&self) -> Option<NodeId> {
        elect_executor(&self.alive)
    }

    pub fn next_deadline(&self) -> Option<f64> {
        self.tom.next_deadline()
    }

    pub fn snapshot(&self, now: f64) -> DbSnapshot {
        let s = &self.shared;
        self.db.materialize(&s.topology, &s.alpha, Some(now)).states
    }

    pub fn content_hash(&self) -> String {
        self.db
            .content_hash(&self.shared.topology, &self.shared.alpha)
    }

    /// Arms timers and announces the agent.
    pub fn start(&mut self, now: f64) -> Vec<BbOutput> {
        let cfg = self.shared.config;
        self.tom
            .schedule_cyclic(now, cfg.heartbeat_ms, BbTimer::Heartbeat)
            .expect("positive heartbeat period");
        self.tom
            .schedule_cyclic(now, cfg.anti_entropy_ms, BbTimer::AntiEntropy)
            .expect("positive anti-entropy period");
        let peers: Vec<NodeId> = self
            .alive
            .iter()
            .copied()
            .filter(|p| *p != self.id)
            .collect();
        for p in peers {
            self.arm_suspect(now, p);
        }
        let mut out = vec![BbOutput::Broadcast(BbMessage::Heartbeat)];
        if !self.ready {
            self.tom
                .schedule(now, now + cfg.anti_entropy_ms, BbTimer::Ready, None)
                .expect("future deadline");
            out.push(BbOutput::Broadcast(BbMessage::Digest(self.db.digest())));
        }
        self.maybe_execute(now, &mut out);
        out
    }

    fn arm_suspect(&mut self, now: f64, peer: NodeId) {
        let deadline = now + self.shared.config.suspect_ms;
        match self.suspect.get(&peer) {
            Some(id) if self.tom.is_scheduled(*id) => {
                self.tom.renew(*id, now, deadline).expect("future deadline");
            }
            _ => {
                let id = self
                    .tom
                    .schedule(now, deadline, BbTimer::Suspect(peer), None)
                    .expect("future deadline");
                self.suspect.insert(peer, id);
            }
        }
    }

    pub fn on_timer(&mut self, now: f64) -> Vec<BbOutput> {
        let mut out = Vec::new();
        for t in self.tom.poll(now) {
            match t.tag {
                BbTimer::Heartbeat => out.push(BbOutput::Broadcast(BbMessage::Heartbeat)),
                BbTimer::AntiEntropy => {
                    trace(
                        &mut out,
                        "BB",
                        "DB_DIGEST",
                        format!("hash={} deltas={}", self.content_hash(), self.db.len()),
                    );
                    out.push(BbOutput::Broadcast(BbMessage::Digest(self.db.digest())));
                }
                BbTimer::Suspect(p) => {
                    self.suspect.remove(&p);
                    if self.alive.remove(&p) {
                        trace(&mut out, "BB", "PEER_DOWN", format!("peer={p}"));
                        self.dirty = true;
                    }
                }
                BbTimer::Ready => self.set_ready(),
            }
        }
        self.maybe_execute(now, &mut out);
        out
    }

    fn set_ready(&mut self) {
        if !self.ready {
            self.ready = true;
            self.dirty = true;
        }
    }

    pub fn on_message(&mut self, now: f64, from: NodeId, msg: BbMessage) -> Vec<BbOutput> {
        let mut out = Vec::new();
        if from != self.id {
            self.arm_suspect(now, from);
            if self.alive.insert(from) {
                trace(&mut out, "BB", "PEER_UP", format!("peer={from}"));
                out.push(BbOutput::Unicast(from, BbMessage::Digest(self.db.digest())));
                self.dirty = true;
            }
        }
        match msg {
            BbMessage::Heartbeat => {}
            BbMessage::Delta(d) => {
                if self.db.insert(d) {
                    self.dirty = true;
                }
            }
            BbMessage::Digest(theirs) => {
                let missing = self.db.missing_from(&theirs);
                let lacking = theirs.iter().any(|s| !self.db.contains(*s));
                trace(
                    &mut out,
                    "BB",
                    "DIGEST",
                    format!("from={from} theirs={} send={}", theirs.len(), missing.len()),
                );
                if !missing.is_empty() {
                    out.push(BbOutput::Unicast(from, BbMessage::Deltas(missing)));
                }
                if lacking {
                    out.push(BbOutput::Unicast(from, BbMessage::Digest(self.db.digest())));
                } else {
                    self.set_ready();
                }
            }
            BbMessage::Deltas(ds) => {
                let fresh = ds.into_iter().filter(|d| self.db.insert(*d)).count();
                trace(&mut out, "BB", "DELTAS", format!("from={from} new={fresh}"));
                if fresh > 0 {
                    self.dirty = true;
                }
                self.set_ready();
            }
            BbMessage::Cmd { command, trigger } => self.apply_local(command, trigger, &mut out),
        }
        self.maybe_execute(now, &mut out);
        out
    }

    fn apply_local(&self, command: RecoveryCommand, trigger: Seq, out: &mut Vec<BbOutput>) {
        if self.shared.topology.home_of(command.target) == Some(self.id) {
            trace(out, "BB", "APPLY", format!("{command} trigger={trigger}"));
            out.push(BbOutput::Apply { command, trigger });
        } else {
            trace(
                out,
                "BB",
                "CMD_DROP",
                format!("{command} trigger={trigger} reason=NotHosted"),
            );
        }
    }

    fn record(
        &mut self,
        now: f64,
        body: impl FnOnce(Seq) -> DeltaBody,
        out: &mut Vec<BbOutput>,
    ) -> DbDelta {
        let seq = Seq::new(self.id, self.counter);
        self.counter += 1;
        let d = DbDelta {
            seq,
            stamp: now,
            body: body(seq),
        };
        self.db.insert(d);
        self.dirty = true;
        out.push(BbOutput::Broadcast(BbMessage::Delta(d)));
        d
    }

    fn record_notification_into(
        &mut self,
        now: f64,
        detector: u32,
        entity: EntityRef,
        class: ErrorClass,
        out: &mut Vec<BbOutput>,
    ) -> Seq {
        let d = self.record(
            now,
            |seq| {
                DeltaBody::Notification(ErrorNotification {
                    seq,
                    detector,
                    entity,
                    class,
                    local_time: now,
                })
            },
            out,
        );
        let s = &self.shared;
        let m = self.db.materialize(&s.topology, &s.alpha, Some(now));
        let alpha = m.alpha.get(&entity).copied().unwrap_or(0.0);
        let transient = m.states.get(&entity).is_some_and(|st| st.transient);
        trace(
            out,
            "BB",
            "NOTIFY",
            format!(
                "seq={} class={class} entity={entity} detector={detector} alpha={alpha:.3} transient={}",
                d.seq, transient as u8
            ),
        );
        d.seq
    }

    /// Stores an error notification raised by a detector on this node.
    pub fn record_notification(
        &mut self,
        now: f64,
        detector: u32,
        entity: EntityRef,
        class: ErrorClass,
    ) -> (Seq, Vec<BbOutput>) {
        let mut out = Vec::new();
        let seq = self.record_notification_into(now, detector, entity, class, &mut out);
        self.maybe_execute(now, &mut out);
        (seq, out)
    }

    /// Stores the current phase of a task.
    pub fn record_phase(&mut self, now: f64, task: u32, phase: u32) -> Vec<BbOutput> {
        let mut out = Vec::new();
        let d = self.record(now, |_| DeltaBody::Phase { task, phase }, &mut out);
        trace(
            &mut out,
            "BB",
            "PHASE",
            format!("seq={} task=T{task} phase={phase}", d.seq),
        );
        self.maybe_execute(now, &mut out);
        out
    }

    fn maybe_execute(&mut self, now: f64, out: &mut Vec<BbOutput>) {
        if !self.dirty {
            return;
        }
        self.dirty = false;
        let exec = self.executor();
        if exec != self.executor {
            self.executor = exec;
            if let Some(e) = exec {
                trace(out, "BB", "EXECUTOR", format!("node={e}"));
            }
        }
        if exec != Some(self.id) || !self.ready {
            return;
        }
        self.reconcile(now, out);
        for seq in self.db.pending() {
            self.evaluate(now, seq, out);
        }
        self.dirty = false;
    }

    /// Brings node liveness in the database in line with the current view.
    fn reconcile(&mut self, now: f64, out: &mut Vec<BbOutput>) {
        let states = self.snapshot(now);
        let nodes: Vec<NodeId> = self.shared.topology.node_ids().collect();
        for n in nodes {
            let st = states.get(&EntityRef::node(n)).copied().unwrap_or_default();
            let up = self.alive.contains(&n);
            if up && !st.active && !st.isolated {
                let d = self.record(now, |_| DeltaBody::Rejoin { node: n }, out);
                trace(out, "BB", "REJOIN", format!("seq={} node=N{n}", d.seq));
            } else if !up && st.active {
                self.record_notification_into(
                    now,
                    self.id,
                    EntityRef::node(n),
                    ErrorClass::Crash,
                    out,
                );
            }
        }
    }

    fn evaluate(&mut self, now: f64, seq: Seq, out: &mut Vec<BbOutput>) {
        let snapshot = self.snapshot(now);
        let result = vm::run(&self.shared.program, &snapshot);
        // Mark first so the marker leaves before any command can take this
        // node down.
        self.record(now, |_| DeltaBody::Evaluated { notification: seq }, out);
        match result {
            Ok(cmds) => {
                trace(
                    out,
                    "RINT",
                    "RINT_RUN",
                    format!("trigger={seq} commands={}", cmds.len()),
                );
                for c in cmds {
                    self.dispatch(now, c, seq, out);
                }
            }
            Err(f) => {
                trace(
                    out,
                    "RINT",
                    "RINT_FAULT",
                    format!("trigger={seq} pc={} reason={}", f.pc, f.reason),
                );
                out.push(BbOutput::Fault(f));
            }
        }
    }

    fn dispatch(
        &mut self,
        now: f64,
        command: RecoveryCommand,
        trigger: Seq,
        out: &mut Vec<BbOutput>,
    ) {
        let topo = &self.shared.topology;
        if !topo.contains(command.target) {
            trace(
                out,
                "RINT",
                "CMD_DROP",
                format!("{command} trigger={trigger} reason=TargetUnknown"),
            );
            return;
        }
        trace(out, "RINT", "CMD", format!("{command} trigger={trigger}"));
        let targets = match command.target.kind {
            EntityKind::Group => topo.member_tasks(command.target),
            _ => vec![command.target],
        };
        if matches!(command.verb, Verb::Send | Verb::Warn) {
            for t in targets {
                out.push(BbOutput::ToTask {
                    task: t.id,
                    command,
                    trigger,
                });
            }
            return;
        }
        for t in targets {
            let single = RecoveryCommand {
                target: t,
                ..command
            };
            self.record(
                now,
                |_| DeltaBody::Effect {
                    command: single,
                    trigger,
                },
                out,
            );
            match self.shared.topology.home_of(t) {
                Some(h) if h == self.id => self.apply_local(single, trigger, out),
                Some(h) => out.push(BbOutput::Unicast(
                    h,
                    BbMessage::Cmd {
                        command: single,
                        trigger,
                    },
                )),
                None => {}
            }
        }
    }
}
