//! Datagram network with omission and performance failures, and partition
//! schedules.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entity::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetParams {
    pub d_min: f64,
    pub d_max: f64,
    pub p_omit: f64,
    pub p_late: f64,
    pub late_factor: f64,
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            d_min: 1.0,
            d_max: 10.0,
            p_omit: 0.0,
            p_late: 0.0,
            late_factor: 5.0,
        }
    }
}

impl NetParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.d_min && self.d_min <= self.d_max) {
            return Err(format!(
                "need 0 <= d_min <= d_max, got {} and {}",
                self.d_min, self.d_max
            ));
        }
        for (name, p) in [("p_omit", self.p_omit), ("p_late", self.p_late)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be a probability, got {p}"));
            }
        }
        if self.late_factor <= 1.0 {
            return Err(format!(
                "late_factor must exceed 1, got {}",
                self.late_factor
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery {
    Omitted,
    /// Delivered after the given delay.
    OnTime(f64),
    Late(f64),
}

impl Delivery {
    pub fn delay(self) -> Option<f64> {
        match self {
            Delivery::Omitted => None,
            Delivery::OnTime(d) | Delivery::Late(d) => Some(d),
        }
    }
}

/// One independent generator per directed channel, so traffic on one
/// channel never shifts the decisions of another.
#[derive(Debug, Clone)]
pub struct Network {
    pub params: NetParams,
    seed: u64,
    channels: BTreeMap<(NodeId, NodeId), ChaCha8Rng>,
}

fn channel_seed(seed: u64, src: NodeId, dst: NodeId) -> u64 {
    let mut x = seed ^ ((src as u64) << 32 | dst as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Network {
    pub fn new(params: NetParams, seed: u64) -> Self {
        Network {
            params,
            seed,
            channels: BTreeMap::new(),
        }
    }

    /// Decides the fate of one datagram. Every call consumes exactly three
    /// draws from the channel's generator.
    pub fn decide(&mut self, src: NodeId, dst: NodeId) -> Delivery {
        let seed = self.seed;
        let rng = self
            .channels
            .entry((src, dst))
            .or_insert_with(|| ChaCha8Rng::seed_from_u64(channel_seed(seed, src, dst)));
        let omit: f64 = rng.random();
        let late: f64 = rng.random();
        let u: f64 = rng.random();
        let p = &self.params;
        if omit < p.p_omit {
            Delivery::Omitted
        } else if late < p.p_late {
            Delivery::Late(p.d_max * p.late_factor)
        } else {
            Delivery::OnTime(p.d_min + u * (p.d_max - p.d_min))
        }
    }
}

/// A period of instability during which nodes are split into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionWindow {
    pub start: f64,
    pub end: f64,
    pub blocks: Vec<Vec<NodeId>>,
}

impl PartitionWindow {
    pub fn block_of(&self, n: NodeId) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&n))
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartitionSchedule {
    pub windows: Vec<PartitionWindow>,
}

impl PartitionSchedule {
    /// The partition in force at `t`: the latest-starting active window.
    pub fn effective(&self, t: f64) -> Option<&PartitionWindow> {
        self.windows
            .iter()
            .filter(|w| w.is_active(t))
            .max_by(|a, b| a.start.total_cmp(&b.start))
    }

    pub fn separated(&self, a: NodeId, b: NodeId, t: f64) -> bool {
        self.effective(t)
            .is_some_and(|w| w.block_of(a) != w.block_of(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_bounds_fix_delay() {
        let mut n = Network::new(
            NetParams {
                d_min: 5.0,
                d_max: 5.0,
                ..Default::default()
            },
            1,
        );
        for _ in 0..100 {
            assert_eq!(n.decide(0, 1), Delivery::OnTime(5.0));
        }
    }

    #[test]
    fn delays_within_bounds() {
        let mut n = Network::new(NetParams::default(), 9);
        for _ in 0..1000 {
            let d = n.decide(1, 2).delay().unwrap();
            assert!((1.0..=10.0).contains(&d));
        }
    }

    #[test]
    fn omission_frequency() {
        let mut n = Network::new(
            NetParams {
                p_omit: 0.5,
                ..Default::default()
            },
            77,
        );
        let dropped = (0..10_000)
            .filter(|_| n.decide(0, 1) == Delivery::Omitted)
            .count();
        assert!((dropped as f64 / 1e4 - 0.5).abs() < 0.05, "{dropped}");
    }

    #[test]
    fn late_delivery() {
        let mut n = Network::new(
            NetParams {
                p_late: 1.0,
                ..Default::default()
            },
            3,
        );
        assert_eq!(n.decide(0, 1), Delivery::Late(50.0));
    }

    #[test]
    fn channels_independent() {
        let mut a = Network::new(NetParams::default(), 5);
        let mut b = Network::new(NetParams::default(), 5);
        for _ in 0..50 {
            b.decide(2, 3);
        }
        for _ in 0..50 {
            assert_eq!(a.decide(0, 1), b.decide(0, 1));
        }
    }

    #[test]
    fn latest_window_wins() {
        let s = PartitionSchedule {
            windows: vec![
                PartitionWindow {
                    start: 0.0,
                    end: 100.0,
                    blocks: vec![vec![0, 1], vec![2, 3]],
                },
                PartitionWindow {
                    start: 50.0,
                    end: 80.0,
                    blocks: vec![vec![0], vec![1, 2, 3]],
                },
            ],
        };
        assert!(s.separated(1, 2, 10.0));
        assert!(!s.separated(0, 1, 10.0));
        assert!(s.separated(0, 1, 60.0));
        assert!(!s.separated(1, 2, 60.0));
        assert!(s.separated(1, 2, 90.0));
        assert!(!s.separated(1, 2, 100.0));
    }
}
