//! The simulated system: nodes with drifting clocks, tasks, detection tools
//! and backbone agents, connected by the datagram network.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::clock::ClockModel;
use super::kernel::Kernel;
use super::net::{NetParams, Network, PartitionSchedule};
use super::scenario::{FaultKind, FaultSpec, Scenario, ScenarioError};
use crate::ariel::BtConfig;
use crate::backbone::{
    AlphaParams, Backbone, BackboneShared, BbConfig, BbMessage, BbOutput, ErrorClass, Seq,
    TimeoutId, Tom,
};
use crate::entity::{EntityKind, EntityRef, NodeId};
use crate::rcode::RCodeProgram;
use crate::tools::{vote, VoteRound, WatchdogState};
use crate::topology::Topology;
use crate::trace::TraceRecord;
use crate::vm::{RecoveryCommand, Verb, VmFault};

/// Run length used when neither the caller nor the scenario sets one.
pub const DEFAULT_UNTIL_MS: f64 = 10_000.0;

/// Everything needed to build a world, minus the seed.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub topology: Topology,
    pub configs: Vec<BtConfig>,
    pub program: RCodeProgram,
    pub alpha: AlphaParams,
    pub bb: BbConfig,
    pub net: NetParams,
    pub rho: f64,
    pub reboot_delay: f64,
    pub voting_period: f64,
    pub faults: Vec<FaultSpec>,
    pub partitions: PartitionSchedule,
    pub until: f64,
}

fn config_error(message: String) -> ScenarioError {
    ScenarioError { line: 0, message }
}

impl SystemSpec {
    /// Combines a parsed scenario with the tools and program of its script.
    pub fn new(
        scenario: &Scenario,
        configs: Vec<BtConfig>,
        program: RCodeProgram,
    ) -> Result<Self, ScenarioError> {
        let topo = &scenario.topology;
        let mut shortest = None::<u32>;
        for c in &configs {
            match c {
                BtConfig::Watchdog(w) => {
                    for e in [w.watched, w.warn_target] {
                        if !topo.contains(e) {
                            return Err(config_error(format!(
                                "watchdog {} refers to unknown task {e}",
                                w.wid
                            )));
                        }
                    }
                    shortest = Some(shortest.map_or(w.period_ms, |s| s.min(w.period_ms)));
                }
                BtConfig::ReplicatedGroup(g) => {
                    for m in &g.members {
                        if !topo.contains(*m) {
                            return Err(config_error(format!(
                                "replicated group {} refers to unknown task {m}",
                                g.group
                            )));
                        }
                    }
                }
            }
        }
        let mut alpha = AlphaParams::for_shortest_watchdog(shortest);
        let o = scenario.alpha;
        alpha.decay = o.decay.unwrap_or(alpha.decay);
        alpha.threshold = o.threshold.unwrap_or(alpha.threshold);
        alpha.judgment_period_ms = o.judgment_period_ms.unwrap_or(alpha.judgment_period_ms);
        let mut bb = BbConfig::for_max_delay(scenario.net.d_max.max(1.0));
        if let Some(s) = scenario.bb_hb {
            bb.suspect_ms = s;
            bb.heartbeat_ms = s / 2.0;
        }
        if let Some(ae) = scenario.anti_entropy {
            bb.anti_entropy_ms = ae;
        }
        Ok(SystemSpec {
            topology: topo.clone(),
            configs,
            program,
            alpha,
            bb,
            net: scenario.net,
            rho: scenario.rho,
            reboot_delay: scenario.reboot_delay,
            voting_period: scenario.voting_period,
            faults: scenario.faults.clone(),
            partitions: PartitionSchedule {
                windows: scenario.partitions.clone(),
            },
            until: scenario.until.unwrap_or(DEFAULT_UNTIL_MS),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Bb(BbMessage),
    Heartbeat {
        wid: u32,
        task: u32,
    },
    Alarm {
        wid: u32,
        watched: u32,
        warn_target: u32,
    },
    Exception {
        task: u32,
        code: i64,
    },
    Ballot {
        group: u32,
        round: u64,
        task: u32,
        value: i64,
    },
    ToTask {
        task: u32,
        command: RecoveryCommand,
        trigger: Seq,
    },
}

impl Payload {
    fn sender_task(&self) -> Option<u32> {
        match self {
            Payload::Heartbeat { task, .. }
            | Payload::Exception { task, .. }
            | Payload::Ballot { task, .. } => Some(*task),
            _ => None,
        }
    }

    fn is_chatter(&self) -> bool {
        matches!(self, Payload::Bb(BbMessage::Heartbeat))
    }

    fn describe(&self) -> String {
        match self {
            Payload::Bb(m) => m.kind().to_string(),
            Payload::Heartbeat { wid, task } => format!("HB wid={wid} task=T{task}"),
            Payload::Alarm { wid, watched, .. } => format!("ALARM wid={wid} watched=T{watched}"),
            Payload::Exception { task, code } => format!("EXCEPTION task=T{task} code={code}"),
            Payload::Ballot {
                group, round, task, ..
            } => format!("BALLOT group=G{group} round={round} task=T{task}"),
            Payload::ToTask {
                task,
                command,
                trigger,
            } => format!("{} task=T{task} trigger={trigger}", command.verb),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Datagram {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
enum Event {
    Deliver(Datagram),
    Wake(u64),
    Fault(usize),
    HangEnd {
        task: u32,
        inc: u32,
    },
    Boot,
    NodeCommand {
        command: RecoveryCommand,
        trigger: Seq,
    },
    PartitionStart(usize),
    PartitionEnd(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum NodeTimer {
    Watchdog(u32),
    Heartbeat(u32),
    Ballot(u32),
    VoteClose(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Running,
    Hung,
    Crashed,
    Terminated,
    Dormant,
}

#[derive(Debug, Clone)]
struct TaskRt {
    node: NodeId,
    spare: bool,
    state: TaskState,
    inc: u32,
    isolated: bool,
    hb_interval: Option<f64>,
    hb_timer: Option<TimeoutId>,
    ballot_timer: Option<TimeoutId>,
    corrupt_next: Option<i64>,
    wids: Vec<u32>,
    vote_groups: Vec<u32>,
}

#[derive(Debug, Clone)]
struct WatchdogRt {
    host: NodeId,
    state: WatchdogState,
}

#[derive(Debug, Clone)]
struct VoterRt {
    host: NodeId,
    members: Vec<u32>,
    rounds: BTreeMap<u64, VoteRound>,
    closed_through: u64,
}

struct NodeRt {
    up: bool,
    epoch: u32,
    isolated: bool,
    boot_pending: bool,
    bb: Backbone,
    tom: Tom<NodeTimer>,
    last_local: f64,
    wake_local: Option<f64>,
    wake_gen: u64,
}

/// Result of a simulation run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub fault: Option<VmFault>,
    pub end_time: f64,
}

pub struct World {
    spec: Arc<SystemSpec>,
    shared: Arc<BackboneShared>,
    kernel: Kernel<Event>,
    clock: ClockModel,
    net: Network,
    nodes: Vec<NodeRt>,
    tasks: BTreeMap<u32, TaskRt>,
    watchdogs: BTreeMap<u32, WatchdogRt>,
    voters: BTreeMap<u32, VoterRt>,
    trace: Vec<TraceRecord>,
    fault: Option<VmFault>,
}

impl World {
    pub fn new(spec: Arc<SystemSpec>, seed: u64) -> Self {
        let shared = Arc::new(BackboneShared {
            topology: spec.topology.clone(),
            alpha: spec.alpha,
            program: spec.program.clone(),
            config: spec.bb,
        });
        let topo = &spec.topology;
        let nodes = topo
            .node_ids()
            .map(|n| NodeRt {
                up: true,
                epoch: 0,
                isolated: false,
                boot_pending: false,
                bb: Backbone::new(n, shared.clone(), 0),
                tom: Tom::new(),
                last_local: 0.0,
                wake_local: None,
                wake_gen: 0,
            })
            .collect();
        let mut tasks: BTreeMap<u32, TaskRt> = topo
            .tasks
            .iter()
            .map(|(id, t)| {
                let rt = TaskRt {
                    node: t.node,
                    spare: t.spare,
                    state: TaskState::Dormant,
                    inc: 0,
                    isolated: false,
                    hb_interval: t.heartbeat_ms.map(f64::from),
                    hb_timer: None,
                    ballot_timer: None,
                    corrupt_next: None,
                    wids: Vec::new(),
                    vote_groups: Vec::new(),
                };
                (*id, rt)
            })
            .collect();
        let mut watchdogs = BTreeMap::new();
        let mut voters = BTreeMap::new();
        for c in &spec.configs {
            match c {
                BtConfig::Watchdog(w) => {
                    let t = tasks
                        .get_mut(&w.watched.id)
                        .expect("validated watchdog target");
                    t.wids.push(w.wid);
                    if topo.tasks[&w.watched.id].heartbeat_ms.is_none() {
                        let hb = (2 * w.period_ms / 3).max(1) as f64;
                        t.hb_interval = Some(t.hb_interval.map_or(hb, |h| h.min(hb)));
                    }
                    let host = topo
                        .host_of(w.warn_target.id)
                        .expect("validated warn target");
                    watchdogs.insert(
                        w.wid,
                        WatchdogRt {
                            host,
                            state: WatchdogState::new(*w),
                        },
                    );
                }
                BtConfig::ReplicatedGroup(g) => {
                    let members: Vec<u32> = g.members.iter().map(|m| m.id).collect();
                    for m in &members {
                        tasks
                            .get_mut(m)
                            .expect("validated member")
                            .vote_groups
                            .push(g.group.id);
                    }
                    let lowest = *members.iter().min().expect("at least two members");
                    voters.insert(
                        g.group.id,
                        VoterRt {
                            host: topo.host_of(lowest).expect("validated member"),
                            members,
                            rounds: BTreeMap::new(),
                            closed_through: 0,
                        },
                    );
                }
            }
        }
        World {
            clock: ClockModel::seeded(topo.nodes, spec.rho, seed),
            net: Network::new(spec.net, seed),
            shared,
            kernel: Kernel::new(),
            nodes,
            tasks,
            watchdogs,
            voters,
            trace: Vec::new(),
            fault: None,
            spec,
        }
    }

    pub fn now(&self) -> f64 {
        self.kernel.now()
    }

    pub fn backbone(&self, n: NodeId) -> &Backbone {
        &self.nodes[n as usize].bb
    }

    pub fn node_up(&self, n: NodeId) -> bool {
        self.nodes[n as usize].up
    }

    pub fn task_state(&self, task: u32) -> Option<TaskState> {
        self.tasks.get(&task).map(|t| t.state)
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Runs the whole scenario up to its configured end time.
    pub fn run(spec: Arc<SystemSpec>, seed: u64) -> RunOutput {
        let until = spec.until;
        let mut w = World::new(spec, seed);
        w.run_until(until);
        w.finish()
    }

    pub fn finish(self) -> RunOutput {
        RunOutput {
            end_time: self.kernel.now(),
            trace: self.trace,
            fault: self.fault,
        }
    }

    fn emit(&mut self, node: Option<NodeId>, component: &str, kind: &str, detail: String) {
        self.trace.push(TraceRecord {
            time: self.kernel.now(),
            node,
            component: component.to_string(),
            kind: kind.to_string(),
            detail,
        });
    }

    fn schedule(&mut self, at: f64, node: Option<NodeId>, ev: Event) {
        let at = at.max(self.kernel.now());
        self.kernel.schedule(at, node, ev).expect("not in the past");
    }

    fn local(&mut self, n: NodeId) -> f64 {
        let l = self.clock.local(n, self.kernel.now());
        let node = &mut self.nodes[n as usize];
        node.last_local = node.last_local.max(l);
        node.last_local
    }

    /// Processes events up to and including global time `until`, or until
    /// RINT faults.
    pub fn run_until(&mut self, until: f64) {
        if self.kernel.now() == 0.0 && self.trace.is_empty() {
            self.start();
        }
        while let Some(t) = self.kernel.peek_time() {
            if t > until || self.fault.is_some() {
                break;
            }
            let ev = self.kernel.advance().expect("peeked");
            self.handle(ev.node, ev.kind);
        }
    }

    fn start(&mut self) {
        let spec = self.spec.clone();
        let summary = format!(
            "nodes={} tasks={} seed_drift={}",
            spec.topology.nodes,
            spec.topology.tasks.len(),
            self.clock
                .drifts
                .iter()
                .map(|d| format!("{d:+.6}"))
                .collect::<Vec<_>>()
                .join(",")
        );
        self.emit(None, "SIM", "START", summary);
        for (i, f) in spec.faults.iter().enumerate() {
            let node = spec.topology.home_of(f.target);
            self.schedule(f.at, node, Event::Fault(i));
        }
        for (i, w) in spec.partitions.windows.iter().enumerate() {
            self.schedule(w.start, None, Event::PartitionStart(i));
            self.schedule(w.end, None, Event::PartitionEnd(i));
        }
        for n in spec.topology.node_ids() {
            self.boot_components(n);
        }
    }

    /// Starts the backbone agent, tasks and tools of a node that just came
    /// up.
    fn boot_components(&mut self, n: NodeId) {
        let local = self.local(n);
        let outs = self.nodes[n as usize].bb.start(local);
        let hosted: Vec<u32> = self
            .tasks
            .iter()
            .filter(|(_, t)| t.node == n)
            .map(|(id, _)| *id)
            .collect();
        for id in hosted {
            let t = self.tasks.get_mut(&id).expect("hosted task");
            t.isolated = false;
            t.corrupt_next = None;
            if t.spare {
                t.state = TaskState::Dormant;
            } else {
                self.start_task(id, local);
            }
        }
        let period = self.spec.voting_period;
        let groups: Vec<u32> = self
            .voters
            .iter()
            .filter(|(_, v)| v.host == n)
            .map(|(g, _)| *g)
            .collect();
        for g in groups {
            let k = (local / period).floor() as u64;
            let v = self.voters.get_mut(&g).expect("voter");
            v.rounds.clear();
            v.closed_through = k;
            let first = (k as f64 + 1.5) * period;
            self.nodes[n as usize]
                .tom
                .schedule(local, first, NodeTimer::VoteClose(g), Some(period))
                .expect("future deadline");
        }
        for w in self.watchdogs.values_mut().filter(|w| w.host == n) {
            w.state = WatchdogState::new(w.state.config);
        }
        self.handle_bb(n, outs);
        self.rearm(n);
    }

    fn cancel_task_timers(&mut self, task: u32) {
        let t = self.tasks.get_mut(&task).expect("task");
        let tom = &mut self.nodes[t.node as usize].tom;
        for id in [t.hb_timer.take(), t.ballot_timer.take()]
            .into_iter()
            .flatten()
        {
            let _ = tom.cancel(id);
        }
    }

    /// (Re)starts a task in a fresh incarnation.
    fn start_task(&mut self, task: u32, local: f64) {
        self.cancel_task_timers(task);
        let period = self.spec.voting_period;
        let t = self.tasks.get_mut(&task).expect("task");
        t.state = TaskState::Running;
        t.inc += 1;
        let tom = &mut self.nodes[t.node as usize].tom;
        if let Some(hb) = t.hb_interval.filter(|_| !t.wids.is_empty()) {
            t.hb_timer = Some(
                tom.schedule_cyclic(local, hb, NodeTimer::Heartbeat(task))
                    .expect("positive interval"),
            );
        }
        if !t.vote_groups.is_empty() {
            let first = ((local / period).floor() + 1.0) * period;
            t.ballot_timer = Some(
                tom.schedule(local, first, NodeTimer::Ballot(task), Some(period))
                    .expect("future deadline"),
            );
        }
        self.send_heartbeats(task);
    }

    fn send_heartbeats(&mut self, task: u32) {
        let t = &self.tasks[&task];
        if t.state != TaskState::Running {
            return;
        }
        let src = t.node;
        let wids = t.wids.clone();
        for wid in wids {
            let dst = self.watchdogs[&wid].host;
            self.emit(
                Some(src),
                "TASK",
                "HB_SEND",
                format!("task=T{task} wid={wid}"),
            );
            self.send(src, dst, Payload::Heartbeat { wid, task });
        }
    }

    /// Schedules the next wake-up of node `n` at its earliest pending
    /// deadline.
    fn rearm(&mut self, n: NodeId) {
        let node = &mut self.nodes[n as usize];
        if !node.up {
            return;
        }
        let next = match (node.bb.next_deadline(), node.tom.next_deadline()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if next == node.wake_local {
            return;
        }
        node.wake_local = next;
        node.wake_gen += 1;
        let gen = node.wake_gen;
        if let Some(d) = next {
            let at = self.clock.global(n, d);
            self.schedule(at, Some(n), Event::Wake(gen));
        }
    }

    fn handle(&mut self, node: Option<NodeId>, ev: Event) {
        match ev {
            Event::Wake(gen) => {
                let n = node.expect("node event");
                let rt = &mut self.nodes[n as usize];
                if !rt.up || gen != rt.wake_gen {
                    return;
                }
                if let Some(d) = rt.wake_local.take() {
                    rt.last_local = rt.last_local.max(d);
                }
                let local = self.local(n);
                let outs = self.nodes[n as usize].bb.on_timer(local);
                self.handle_bb(n, outs);
                loop {
                    let rt = &mut self.nodes[n as usize];
                    if !rt.up {
                        break;
                    }
                    let Some(t) = rt.tom.pop_due(local) else {
                        break;
                    };
                    self.on_node_timer(n, t.tag, t.deadline, local);
                }
                self.rearm(n);
            }
            Event::Deliver(d) => {
                let n = d.dst;
                self.deliver(d);
                self.rearm(n);
            }
            Event::Fault(i) => {
                let f = self.spec.faults[i];
                self.inject(f);
                if let Some(n) = node {
                    self.rearm(n);
                }
            }
            Event::HangEnd { task, inc } => {
                let t = self.tasks.get_mut(&task).expect("task");
                if t.inc == inc && t.state == TaskState::Hung && self.nodes[t.node as usize].up {
                    t.state = TaskState::Running;
                    let n = t.node;
                    self.emit(Some(n), "TASK", "RESUMED", format!("task=T{task}"));
                    self.send_heartbeats(task);
                    self.rearm(n);
                }
            }
            Event::Boot => {
                let n = node.expect("node event");
                let rt = &mut self.nodes[n as usize];
                rt.boot_pending = false;
                if rt.up {
                    return;
                }
                rt.up = true;
                rt.isolated = false;
                rt.epoch += 1;
                rt.bb = Backbone::new(n, self.shared.clone(), rt.epoch);
                rt.tom.clear();
                rt.wake_local = None;
                let epoch = rt.epoch;
                self.emit(
                    Some(n),
                    "SIM",
                    "NODE_BOOT",
                    format!("node=N{n} epoch={epoch}"),
                );
                self.boot_components(n);
            }
            Event::NodeCommand { command, trigger } => self.node_command(command, trigger),
            Event::PartitionStart(i) => {
                let w = &self.spec.partitions.windows[i];
                let blocks = w
                    .blocks
                    .iter()
                    .map(|b| {
                        b.iter()
                            .map(|n| n.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect::<Vec<_>>()
                    .join("|");
                let detail = format!("blocks={blocks} until={}", w.end);
                self.emit(None, "SIM", "PARTITION", detail);
            }
            Event::PartitionEnd(i) => {
                let detail = match self.spec.partitions.effective(self.kernel.now()) {
                    Some(_) => format!("window={i} partial=1"),
                    None => format!("window={i}"),
                };
                self.emit(None, "SIM", "HEAL", detail);
            }
        }
    }

    fn on_node_timer(&mut self, n: NodeId, tag: NodeTimer, deadline: f64, local: f64) {
        match tag {
            NodeTimer::Heartbeat(task) => self.send_heartbeats(task),
            NodeTimer::Watchdog(wid) => {
                let wd = self.watchdogs.get_mut(&wid).expect("watchdog");
                let Some(alarm) = wd.state.on_timeout(local) else {
                    return;
                };
                let dst = self
                    .spec
                    .topology
                    .host_of(alarm.warn_target)
                    .expect("warn target");
                self.send(
                    n,
                    dst,
                    Payload::Alarm {
                        wid,
                        watched: alarm.watched,
                        warn_target: alarm.warn_target,
                    },
                );
                self.emit(
                    Some(n),
                    "WD",
                    "WD_TIMEOUT",
                    format!(
                        "wid={wid} task=T{} warn=T{}",
                        alarm.watched, alarm.warn_target
                    ),
                );
                let (_, outs) = self.nodes[n as usize].bb.record_notification(
                    local,
                    wid,
                    EntityRef::task(alarm.watched),
                    ErrorClass::WdTimeout,
                );
                self.handle_bb(n, outs);
            }
            NodeTimer::Ballot(task) => {
                let period = self.spec.voting_period;
                let round = (deadline / period).round() as u64;
                let t = self.tasks.get_mut(&task).expect("task");
                if t.state != TaskState::Running {
                    return;
                }
                let value = t.corrupt_next.take().unwrap_or(round as i64);
                for g in t.vote_groups.clone() {
                    let dst = self.voters[&g].host;
                    self.emit(
                        Some(n),
                        "TASK",
                        "BALLOT",
                        format!("task=T{task} group=G{g} round={round} value={value}"),
                    );
                    self.send(
                        n,
                        dst,
                        Payload::Ballot {
                            group: g,
                            round,
                            task,
                            value,
                        },
                    );
                }
            }
            NodeTimer::VoteClose(g) => {
                let period = self.spec.voting_period;
                let round = ((deadline - period / 2.0) / period).round() as u64;
                let v = self.voters.get_mut(&g).expect("voter");
                let r = v
                    .rounds
                    .remove(&round)
                    .unwrap_or_else(|| VoteRound::new(g, round, v.members.clone(), deadline));
                v.rounds.retain(|k, _| *k > round);
                v.closed_through = v.closed_through.max(round);
                let outcome = vote(&r);
                let winner = outcome.winner.map_or("none".to_string(), |w| w.to_string());
                let minority = if outcome.minority.is_empty() {
                    "-".to_string()
                } else {
                    outcome
                        .minority
                        .iter()
                        .map(|m| format!("T{m}"))
                        .collect::<Vec<_>>()
                        .join(",")
                };
                self.emit(
                    Some(n),
                    "VOTER",
                    "VOTE",
                    format!(
                        "group=G{g} round={round} ballots={} winner={winner} minority={minority}",
                        r.ballots.len()
                    ),
                );
                for m in outcome.minority {
                    let (_, outs) = self.nodes[n as usize].bb.record_notification(
                        local,
                        g,
                        EntityRef::task(m),
                        ErrorClass::MinorityVote,
                    );
                    self.handle_bb(n, outs);
                }
            }
        }
    }

    fn drop_datagram(&mut self, node: NodeId, d: &Payload, src: NodeId, dst: NodeId, reason: &str) {
        if !d.is_chatter() {
            let detail = format!("{} src={src} dst={dst} reason={reason}", d.describe());
            self.emit(Some(node), "NET", "DROP", detail);
        }
    }

    fn send(&mut self, src: NodeId, dst: NodeId, payload: Payload) {
        if !self.nodes[src as usize].up {
            return;
        }
        let decision = self.net.decide(src, dst);
        let now = self.kernel.now();
        let reason = if self.nodes[src as usize].isolated || self.nodes[dst as usize].isolated {
            Some("isolated")
        } else if payload
            .sender_task()
            .is_some_and(|t| self.tasks[&t].isolated)
        {
            Some("task_isolated")
        } else if self.spec.partitions.separated(src, dst, now) {
            Some("partition")
        } else {
            None
        };
        if let Some(reason) = reason {
            self.drop_datagram(src, &payload, src, dst, reason);
            return;
        }
        match decision.delay() {
            None => self.drop_datagram(src, &payload, src, dst, "omission"),
            Some(delay) => {
                self.schedule(
                    now + delay,
                    Some(dst),
                    Event::Deliver(Datagram { src, dst, payload }),
                );
            }
        }
    }

    fn deliver(&mut self, d: Datagram) {
        let n = d.dst;
        if !self.nodes[n as usize].up {
            // attributed to the sender: a crashed node emits nothing
            self.drop_datagram(d.src, &d.payload, d.src, n, "dst_down");
            return;
        }
        if self.nodes[n as usize].isolated {
            self.drop_datagram(n, &d.payload, d.src, n, "isolated");
            return;
        }
        let local = self.local(n);
        match d.payload {
            Payload::Bb(m) => {
                let outs = self.nodes[n as usize].bb.on_message(local, d.src, m);
                self.handle_bb(n, outs);
            }
            Payload::Heartbeat { wid, task } => {
                let Some(wd) = self.watchdogs.get_mut(&wid).filter(|w| w.host == n) else {
                    return;
                };
                let Some(deadline) = wd.state.on_heartbeat(local, task) else {
                    return;
                };
                let tom = &mut self.nodes[n as usize].tom;
                match wd.state.timeout_id.filter(|id| tom.is_scheduled(*id)) {
                    Some(id) => tom.renew(id, local, deadline).expect("future deadline"),
                    None => {
                        let id = tom
                            .schedule(local, deadline, NodeTimer::Watchdog(wid), None)
                            .expect("future deadline");
                        wd.state.set_timeout(id);
                    }
                }
            }
            Payload::Alarm {
                wid,
                watched,
                warn_target,
            } => {
                if self.tasks[&warn_target].state == TaskState::Running {
                    self.emit(
                        Some(n),
                        "TASK",
                        "ALARM",
                        format!("task=T{warn_target} wid={wid} watched=T{watched}"),
                    );
                }
            }
            Payload::Exception { task, code } => {
                self.emit(
                    Some(n),
                    "TASK",
                    "EXCEPTION",
                    format!("task=T{task} code={code}"),
                );
                let (_, outs) = self.nodes[n as usize].bb.record_notification(
                    local,
                    task,
                    EntityRef::task(task),
                    ErrorClass::Exception,
                );
                self.handle_bb(n, outs);
            }
            Payload::Ballot {
                group,
                round,
                task,
                value,
            } => {
                let period = self.spec.voting_period;
                let Some(v) = self.voters.get_mut(&group).filter(|v| v.host == n) else {
                    return;
                };
                if round <= v.closed_through {
                    let detail = format!("group=G{group} round={round} task=T{task}");
                    self.emit(Some(n), "VOTER", "LATE_BALLOT", detail);
                    return;
                }
                let members = v.members.clone();
                v.rounds
                    .entry(round)
                    .or_insert_with(|| {
                        VoteRound::new(group, round, members, (round as f64 + 0.5) * period)
                    })
                    .submit(task, value);
            }
            Payload::ToTask {
                task,
                command,
                trigger,
            } => {
                let t = &self.tasks[&task];
                if t.isolated || t.state != TaskState::Running {
                    let p = Payload::ToTask {
                        task,
                        command,
                        trigger,
                    };
                    self.drop_datagram(n, &p, d.src, n, "task_unavailable");
                    return;
                }
                self.emit(
                    Some(n),
                    "TASK",
                    "RECV",
                    format!("task=T{task} {command} trigger={trigger}"),
                );
            }
        }
    }

    fn handle_bb(&mut self, n: NodeId, outs: Vec<BbOutput>) {
        for o in outs {
            match o {
                BbOutput::Broadcast(m) => {
                    for d in self.spec.topology.node_ids() {
                        if d != n {
                            self.send(n, d, Payload::Bb(m.clone()));
                        }
                    }
                }
                BbOutput::Unicast(_, BbMessage::Cmd { command, trigger })
                    if command.target.kind == EntityKind::Node =>
                {
                    let target = command.target.id;
                    self.schedule(
                        self.kernel.now(),
                        Some(target),
                        Event::NodeCommand { command, trigger },
                    );
                }
                BbOutput::Unicast(d, m) => self.send(n, d, Payload::Bb(m)),
                BbOutput::ToTask {
                    task,
                    command,
                    trigger,
                } => {
                    let dst = self
                        .spec
                        .topology
                        .host_of(task)
                        .expect("dispatched to known task");
                    self.send(
                        n,
                        dst,
                        Payload::ToTask {
                            task,
                            command,
                            trigger,
                        },
                    );
                }
                BbOutput::Apply { command, trigger } => {
                    if command.target.kind == EntityKind::Node {
                        self.schedule(
                            self.kernel.now(),
                            Some(n),
                            Event::NodeCommand { command, trigger },
                        );
                    } else {
                        self.apply_task_command(command, trigger);
                    }
                }
                BbOutput::Trace {
                    component,
                    kind,
                    detail,
                } => self.emit(Some(n), component, kind, detail),
                BbOutput::Fault(f) => {
                    if self.fault.is_none() {
                        self.fault = Some(f);
                    }
                }
            }
        }
    }

    fn apply_task_command(&mut self, command: RecoveryCommand, trigger: Seq) {
        let task = command.target.id;
        let Some(t) = self.tasks.get_mut(&task) else {
            return;
        };
        let n = t.node;
        if !self.nodes[n as usize].up {
            return;
        }
        let local = self.local(n);
        let t = self.tasks.get_mut(&task).expect("task");
        let detail = format!("task=T{task} trigger={trigger}");
        match command.verb {
            Verb::Restart => {
                self.start_task(task, local);
                let inc = self.tasks[&task].inc;
                self.emit(Some(n), "TASK", "RESTARTED", format!("{detail} inc={inc}"));
            }
            Verb::Start => {
                if matches!(t.state, TaskState::Running | TaskState::Hung) {
                    self.emit(Some(n), "TASK", "ALREADY_RUNNING", detail);
                } else {
                    self.start_task(task, local);
                    let inc = self.tasks[&task].inc;
                    self.emit(Some(n), "TASK", "STARTED", format!("{detail} inc={inc}"));
                }
            }
            Verb::Terminate => {
                t.state = TaskState::Terminated;
                self.cancel_task_timers(task);
                self.emit(Some(n), "TASK", "TERMINATED", detail);
            }
            Verb::Isolate => {
                t.isolated = true;
                self.emit(Some(n), "TASK", "ISOLATED", detail);
            }
            Verb::Send | Verb::Warn => {}
        }
        self.rearm(n);
    }

    /// Node-level commands act through the out-of-band maintenance path, so
    /// they also reach nodes that are down.
    fn node_command(&mut self, command: RecoveryCommand, trigger: Seq) {
        let n = command.target.id;
        self.emit(
            Some(n),
            "SIM",
            "NODE_CMD",
            format!("{command} trigger={trigger}"),
        );
        match command.verb {
            Verb::Restart => {
                if self.nodes[n as usize].up {
                    self.crash_node(n);
                }
                self.schedule_boot(n);
            }
            Verb::Start => {
                if !self.nodes[n as usize].up {
                    self.schedule_boot(n);
                }
            }
            Verb::Terminate => {
                if self.nodes[n as usize].up {
                    self.crash_node(n);
                }
            }
            Verb::Isolate => self.nodes[n as usize].isolated = true,
            Verb::Send | Verb::Warn => {}
        }
    }

    fn schedule_boot(&mut self, n: NodeId) {
        let rt = &mut self.nodes[n as usize];
        if rt.boot_pending {
            return;
        }
        rt.boot_pending = true;
        let at = self.kernel.now() + self.spec.reboot_delay;
        self.schedule(at, Some(n), Event::Boot);
    }

    fn crash_node(&mut self, n: NodeId) {
        let rt = &mut self.nodes[n as usize];
        rt.up = false;
        rt.tom.clear();
        rt.wake_local = None;
        rt.wake_gen += 1;
        for t in self.tasks.values_mut().filter(|t| t.node == n) {
            if t.state != TaskState::Dormant {
                t.state = TaskState::Crashed;
            }
            t.hb_timer = None;
            t.ballot_timer = None;
        }
        self.emit(Some(n), "SIM", "NODE_DOWN", format!("node=N{n}"));
    }

    fn inject(&mut self, f: FaultSpec) {
        let node = self.spec.topology.home_of(f.target);
        self.emit(node, "SIM", "FAULT", f.describe());
        let n = node.expect("validated target");
        if !self.nodes[n as usize].up {
            return;
        }
        let task = f.target.id;
        match f.kind {
            FaultKind::CrashNode => self.crash_node(n),
            FaultKind::CrashTask => {
                if let Some(t) = self.tasks.get_mut(&task) {
                    if t.state != TaskState::Dormant {
                        t.state = TaskState::Crashed;
                    }
                    self.cancel_task_timers(task);
                }
            }
            FaultKind::HangTask { duration } => {
                let t = self.tasks.get_mut(&task).expect("validated task");
                if t.state == TaskState::Running {
                    t.state = TaskState::Hung;
                    let inc = t.inc;
                    let at = self.kernel.now() + duration;
                    self.schedule(at, Some(n), Event::HangEnd { task, inc });
                }
            }
            FaultKind::RaiseException { code } => {
                if self.tasks[&task].state == TaskState::Running {
                    self.send(n, n, Payload::Exception { task, code });
                }
            }
            FaultKind::CorruptBallot { value } => {
                self.tasks
                    .get_mut(&task)
                    .expect("validated task")
                    .corrupt_next = Some(value);
            }
        }
    }
}
