//! TOM, the time-out manager: one-shot and cyclic deadlines on a node-local
//! clock, with cancellation and renewal.

use std::collections::{BTreeMap, BTreeSet};

use ordered_float::OrderedFloat;
use thiserror::Error;

pub type TimeoutId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Timeout<T> {
    pub id: TimeoutId,
    pub deadline: f64,
    pub tag: T,
    /// Re-arm period for cyclic timeouts.
    pub period: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TomError {
    #[error("unknown timeout {0}")]
    UnknownTimeout(TimeoutId),
    #[error("deadline {deadline} is not after now ({now})")]
    NotInFuture { deadline: f64, now: f64 },
    #[error("cyclic period must be positive")]
    BadPeriod,
}

/// Pending timeouts ordered by `(deadline, tag, id)`, so timeouts expiring
/// together fire in tag order.
#[derive(Debug, Clone)]
pub struct Tom<T: Ord + Clone> {
    next_id: TimeoutId,
    active: BTreeMap<TimeoutId, Timeout<T>>,
    queue: BTreeSet<(OrderedFloat<f64>, T, TimeoutId)>,
}

impl<T: Ord + Clone> Default for Tom<T> {
    fn default() -> Self {
        Tom {
            next_id: 1,
            active: BTreeMap::new(),
            queue: BTreeSet::new(),
        }
    }
}

impl<T: Ord + Clone> Tom<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(
        &mut self,
        now: f64,
        deadline: f64,
        tag: T,
        period: Option<f64>,
    ) -> Result<TimeoutId, TomError> {
        if deadline <= now {
            return Err(TomError::NotInFuture { deadline, now });
        }
        if period.is_some_and(|p| p <= 0.0) {
            return Err(TomError::BadPeriod);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.queue.insert((OrderedFloat(deadline), tag.clone(), id));
        self.active.insert(
            id,
            Timeout {
                id,
                deadline,
                tag,
                period,
            },
        );
        Ok(id)
    }

    /// Cyclic timeout first expiring one period from now.
    pub fn schedule_cyclic(
        &mut self,
        now: f64,
        period: f64,
        tag: T,
    ) -> Result<TimeoutId, TomError> {
        self.schedule(now, now + period, tag, Some(period))
    }

    pub fn cancel(&mut self, id: TimeoutId) -> Result<(), TomError> {
        let t = self
            .active
            .remove(&id)
            .ok_or(TomError::UnknownTimeout(id))?;
        self.queue.remove(&(OrderedFloat(t.deadline), t.tag, id));
        Ok(())
    }

    pub fn renew(&mut self, id: TimeoutId, now: f64, deadline: f64) -> Result<(), TomError> {
        if deadline <= now {
            return Err(TomError::NotInFuture { deadline, now });
        }
        let t = self
            .active
            .get_mut(&id)
            .ok_or(TomError::UnknownTimeout(id))?;
        self.queue
            .remove(&(OrderedFloat(t.deadline), t.tag.clone(), id));
        t.deadline = deadline;
        self.queue
            .insert((OrderedFloat(deadline), t.tag.clone(), id));
        Ok(())
    }

    pub fn get(&self, id: TimeoutId) -> Option<&Timeout<T>> {
        self.active.get(&id)
    }

    pub fn is_scheduled(&self, id: TimeoutId) -> bool {
        self.active.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn next_deadline(&self) -> Option<f64> {
        self.queue.first().map(|(d, _, _)| d.0)
    }

    /// Removes and returns the earliest timeout due at `now`, re-arming it
    /// first when cyclic.
    pub fn pop_due(&mut self, now: f64) -> Option<Timeout<T>> {
        let (deadline, tag, id) = self.queue.first()?.clone();
        if deadline.0 > now {
            return None;
        }
        self.queue.remove(&(deadline, tag.clone(), id));
        let t = self.active.get_mut(&id).expect("queued timeout is active");
        let fired = t.clone();
        match t.period {
            Some(p) => {
                t.deadline += p;
                self.queue.insert((OrderedFloat(t.deadline), tag, id));
            }
            None => {
                self.active.remove(&id);
            }
        }
        Some(fired)
    }

    /// Fires everything due at `now`, in order.
    pub fn poll(&mut self, now: f64) -> Vec<Timeout<T>> {
        std::iter::from_fn(|| self.pop_due(now)).collect()
    }

    pub fn clear(&mut self) {
        self.active.clear();
        self.queue.clear();
    }
}
