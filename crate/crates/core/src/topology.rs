//! Static system layout: nodes, task placement and group membership.

use std::collections::BTreeMap;

use crate::entity::{EntityKind, EntityRef, EntityState, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskInfo {
    pub node: NodeId,
    /// Spare tasks stay dormant until started by a recovery action.
    pub spare: bool,
    /// Heartbeat interval override in milliseconds.
    pub heartbeat_ms: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topology {
    pub nodes: u32,
    pub tasks: BTreeMap<u32, TaskInfo>,
    pub groups: BTreeMap<u32, Vec<u32>>,
}

impl Topology {
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes
    }

    pub fn host_of(&self, task: u32) -> Option<NodeId> {
        self.tasks.get(&task).map(|t| t.node)
    }

    pub fn contains(&self, e: EntityRef) -> bool {
        match e.kind {
            EntityKind::Node => e.id < self.nodes,
            EntityKind::Task => self.tasks.contains_key(&e.id),
            EntityKind::Group => self.groups.contains_key(&e.id),
        }
    }

    /// Node an entity lives on; groups have none.
    pub fn home_of(&self, e: EntityRef) -> Option<NodeId> {
        match e.kind {
            EntityKind::Node => (e.id < self.nodes).then_some(e.id),
            EntityKind::Task => self.host_of(e.id),
            EntityKind::Group => None,
        }
    }

    /// The tasks an entity stands for: itself for a task, the members for a
    /// group, nothing for a node.
    pub fn member_tasks(&self, e: EntityRef) -> Vec<EntityRef> {
        match e.kind {
            EntityKind::Task => vec![e],
            EntityKind::Group => self
                .groups
                .get(&e.id)
                .map(|ms| ms.iter().map(|m| EntityRef::task(*m)).collect())
                .unwrap_or_default(),
            EntityKind::Node => Vec::new(),
        }
    }

    pub fn tasks_on(&self, node: NodeId) -> impl Iterator<Item = u32> + '_ {
        self.tasks
            .iter()
            .filter(move |(_, t)| t.node == node)
            .map(|(id, _)| *id)
    }

    /// Database contents before any delta: everything active except spares.
    pub fn initial_states(&self) -> BTreeMap<EntityRef, EntityState> {
        let mut m = BTreeMap::new();
        for n in self.node_ids() {
            m.insert(EntityRef::node(n), EntityState::active());
        }
        for (id, t) in &self.tasks {
            let st = if t.spare {
                EntityState::default()
            } else {
                EntityState::active()
            };
            m.insert(EntityRef::task(*id), st);
        }
        for id in self.groups.keys() {
            m.insert(EntityRef::group(*id), EntityState::active());
        }
        m
    }
}
