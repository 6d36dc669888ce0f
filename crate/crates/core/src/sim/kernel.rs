//! Discrete-event queue with a total, deterministic processing order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use thiserror::Error;

use crate::entity::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("event at {at} scheduled in the past (now {now})")]
    ScheduleInPast { at: f64, now: f64 },
    #[error("event queue is empty")]
    EmptyQueue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<E> {
    pub time: f64,
    /// Node the event belongs to; world-level events have none and sort
    /// after node events at the same instant.
    pub node: Option<NodeId>,
    pub kind: E,
}

type Key = (OrderedFloat<f64>, u64, u64);

#[derive(Debug)]
struct Entry<E> {
    key: Key,
    event: SimEvent<E>,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<E> Eq for Entry<E> {}
impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

/// Events come out ordered by `(time, node, insertion counter)`.
#[derive(Debug)]
pub struct Kernel<E> {
    now: f64,
    counter: u64,
    queue: BinaryHeap<Reverse<Entry<E>>>,
}

impl<E> Default for Kernel<E> {
    fn default() -> Self {
        Kernel {
            now: 0.0,
            counter: 0,
            queue: BinaryHeap::new(),
        }
    }
}

impl<E> Kernel<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn schedule(&mut self, at: f64, node: Option<NodeId>, kind: E) -> Result<(), KernelError> {
        if at < self.now || at.is_nan() {
            return Err(KernelError::ScheduleInPast { at, now: self.now });
        }
        let node_key = node.map_or(u64::MAX, u64::from);
        let key = (OrderedFloat(at), node_key, self.counter);
        self.counter += 1;
        self.queue.push(Reverse(Entry {
            key,
            event: SimEvent {
                time: at,
                node,
                kind,
            },
        }));
        Ok(())
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.queue.peek().map(|e| e.0.event.time)
    }

    pub fn advance(&mut self) -> Result<SimEvent<E>, KernelError> {
        let Reverse(e) = self.queue.pop().ok_or(KernelError::EmptyQueue)?;
        self.now = e.event.time;
        Ok(e.event)
    }
}
