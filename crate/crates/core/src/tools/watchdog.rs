//! Watchdog timer. Armed by the first heartbeat of the watched task, renewed
//! by every later one, and disarmed again after it fires.

use crate::ariel::WatchdogConfig;
use crate::backbone::TimeoutId;

#[derive(Debug, Clone, PartialEq)]
pub struct WatchdogState {
    pub config: WatchdogConfig,
    pub enabled: bool,
    pub timeout_id: Option<TimeoutId>,
    deadline: Option<f64>,
}

/// What an expiry produces: an alarm for the warn target and a
/// `WD_TIMEOUT` notification for the watched task, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WatchdogAlarm {
    pub wid: u32,
    pub watched: u32,
    pub warn_target: u32,
}

impl WatchdogState {
    pub fn new(config: WatchdogConfig) -> Self {
        WatchdogState {
            config,
            enabled: false,
            timeout_id: None,
            deadline: None,
        }
    }

    pub fn period(&self) -> f64 {
        self.config.period_ms as f64
    }

    pub fn deadline(&self) -> Option<f64> {
        self.deadline
    }

    /// Registers a heartbeat from `sender` and returns the new deadline.
    /// Heartbeats from other tasks are ignored.
    pub fn on_heartbeat(&mut self, now: f64, sender: u32) -> Option<f64> {
        if sender != self.config.watched.id {
            return None;
        }
        self.enabled = true;
        let d = now + self.period();
        self.deadline = Some(d);
        Some(d)
    }

    /// Records the TOM timeout backing the current deadline.
    pub fn set_timeout(&mut self, id: TimeoutId) {
        self.timeout_id = Some(id);
    }

    /// Fires if enabled and the deadline has passed without renewal.
    pub fn on_timeout(&mut self, now: f64) -> Option<WatchdogAlarm> {
        match self.deadline {
            Some(d) if self.enabled && now >= d => {
                self.enabled = false;
                self.deadline = None;
                self.timeout_id = None;
                Some(WatchdogAlarm {
                    wid: self.config.wid,
                    watched: self.config.watched.id,
                    warn_target: self.config.warn_target.id,
                })
            }
            _ => None,
        }
    }
}
