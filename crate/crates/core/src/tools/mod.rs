//! Basic detection tools. Each is a state machine owned by one node and
//! forwards what it detects to that node's backbone agent.

pub mod voter;
pub mod watchdog;

pub use voter::{vote, VoteOutcome, VoteRound};
pub use watchdog::{WatchdogAlarm, WatchdogState};

use crate::backbone::ErrorClass;
use crate::entity::EntityRef;

/// A task reporting a caught exception to its local backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExceptionReport {
    pub task: u32,
    pub code: i64,
}

impl ExceptionReport {
    /// Entity and class of the notification the report turns into.
    pub fn notification(&self) -> (EntityRef, ErrorClass) {
        (EntityRef::task(self.task), ErrorClass::Exception)
    }
}
