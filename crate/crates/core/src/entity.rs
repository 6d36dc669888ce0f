//! Entity identities and the per-entity dependability state record.

use std::collections::BTreeMap;
use std::fmt;

/// Processing node identifier.
pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Node,
    Task,
    Group,
}

impl EntityKind {
    /// Numeric code used in r-code operands.
    pub fn code(self) -> u32 {
        match self {
            EntityKind::Node => 0,
            EntityKind::Task => 1,
            EntityKind::Group => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(EntityKind::Node),
            1 => Some(EntityKind::Task),
            2 => Some(EntityKind::Group),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            EntityKind::Node => 'N',
            EntityKind::Task => 'T',
            EntityKind::Group => 'G',
        }
    }
}

/// A node, task or group. The `(kind, id)` pair is the only identity an
/// entity has at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityRef {
    pub kind: EntityKind,
    pub id: u32,
}

impl EntityRef {
    pub const fn node(id: u32) -> Self {
        EntityRef {
            kind: EntityKind::Node,
            id,
        }
    }

    pub const fn task(id: u32) -> Self {
        EntityRef {
            kind: EntityKind::Task,
            id,
        }
    }

    pub const fn group(id: u32) -> Self {
        EntityRef {
            kind: EntityKind::Group,
            id,
        }
    }

    /// Parses the compact `T10` / `N2` / `G3` form used in scenario and
    /// assertion files.
    pub fn parse_compact(s: &str) -> Option<Self> {
        let mut chars = s.chars();
        let kind = match chars.next()? {
            'N' => EntityKind::Node,
            'T' => EntityKind::Task,
            'G' => EntityKind::Group,
            _ => return None,
        };
        let id = chars.as_str().parse().ok()?;
        Some(EntityRef { kind, id })
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.letter(), self.id)
    }
}

/// Dependability state of one entity as seen through the backbone database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct EntityState {
    pub active: bool,
    pub faulty: bool,
    pub transient: bool,
    pub isolated: bool,
    pub restarted: bool,
    pub phase: u32,
}

impl EntityState {
    pub fn active() -> Self {
        EntityState {
            active: true,
            ..Default::default()
        }
    }
}

/// An immutable read of the database. Entities without an entry read as the
/// all-false default with phase 0.
pub type DbSnapshot = BTreeMap<EntityRef, EntityState>;

/// Read access to entity states, so the VM can run against any store.
pub trait StateView {
    fn state(&self, entity: EntityRef) -> EntityState;
}

impl StateView for DbSnapshot {
    fn state(&self, entity: EntityRef) -> EntityState {
        self.get(&entity).copied().unwrap_or_default()
    }
}
