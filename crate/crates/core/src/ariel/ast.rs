use crate::entity::EntityRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predicate {
    Faulty,
    Transient,
    Isolated,
    Restarted,
    Active,
}

impl Predicate {
    pub const ALL: [Predicate; 5] = [
        Predicate::Faulty,
        Predicate::Transient,
        Predicate::Isolated,
        Predicate::Restarted,
        Predicate::Active,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Predicate::Faulty => "FAULTY",
            Predicate::Transient => "TRANSIENT",
            Predicate::Isolated => "ISOLATED",
            Predicate::Restarted => "RESTARTED",
            Predicate::Active => "ACTIVE",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|p| p.keyword() == kw)
    }
}

/// Boolean condition over entity states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    Pred(Predicate, EntityRef),
    PhaseEq(EntityRef, u32),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

impl Guard {
    pub fn and(l: Guard, r: Guard) -> Guard {
        Guard::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Guard, r: Guard) -> Guard {
        Guard::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Restart(EntityRef),
    Terminate(EntityRef),
    Isolate(EntityRef),
    Start(EntityRef),
    Send { payload: u32, target: EntityRef },
    Warn(EntityRef),
    If(IfClause),
}

/// `IF [ guard ] THEN actions [ELSE actions] FI`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IfClause {
    pub guard: Guard,
    pub then: Vec<Action>,
    pub otherwise: Vec<Action>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WatchdogConfig {
    pub wid: u32,
    pub watched: EntityRef,
    pub period_ms: u32,
    pub warn_target: EntityRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VotingPolicy {
    Majority,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReplicatedGroupConfig {
    pub group: EntityRef,
    pub members: Vec<EntityRef>,
    pub policy: VotingPolicy,
}

/// Configured instance of a basic tool.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BtConfig {
    Watchdog(WatchdogConfig),
    ReplicatedGroup(ReplicatedGroupConfig),
}

/// A parsed ARIEL source file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub includes: Vec<String>,
    pub rules: Vec<IfClause>,
    pub configs: Vec<BtConfig>,
}
