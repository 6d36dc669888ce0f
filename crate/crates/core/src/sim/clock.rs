//! Drifting node-local clocks: `local(n, t) = (1 + drift_n) * t`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entity::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct ClockModel {
    pub rho: f64,
    pub drifts: Vec<f64>,
}

impl ClockModel {
    /// Drifts drawn uniformly from `[-rho, rho]`.
    pub fn seeded(nodes: u32, rho: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc10c_c10c_c10c_c10c);
        let drifts = (0..nodes)
            .map(|_| {
                if rho > 0.0 {
                    rng.random_range(-rho..=rho)
                } else {
                    0.0
                }
            })
            .collect();
        ClockModel { rho, drifts }
    }

    pub fn exact(nodes: u32) -> Self {
        ClockModel {
            rho: 0.0,
            drifts: vec![0.0; nodes as usize],
        }
    }

    pub fn local(&self, node: NodeId, global: f64) -> f64 {
        (1.0 + self.drifts[node as usize]) * global
    }

    pub fn global(&self, node: NodeId, local: f64) -> f64 {
        local / (1.0 + self.drifts[node as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_is_identity() {
        let c = ClockModel::exact(2);
        assert_eq!(c.local(1, 1234.5), 1234.5);
    }

    #[test]
    fn formula() {
        let c = ClockModel {
            rho: 1e-3,
            drifts: vec![1e-3],
        };
        assert!((c.local(0, 1e6) - 1_001_000.0).abs() < 1e-6);
        assert!((c.global(0, c.local(0, 777.0)) - 777.0).abs() < 1e-9);
    }

    #[test]
    fn drift_bounded() {
        let c = ClockModel::seeded(16, 1e-3, 42);
        for n in 0..16 {
            for t in [0.0, 1.0, 1e3, 1e6] {
                assert!((c.local(n, t) - t).abs() <= 1e-3 * t + 1e-9);
            }
        }
        assert_eq!(c, ClockModel::seeded(16, 1e-3, 42));
    }
}
