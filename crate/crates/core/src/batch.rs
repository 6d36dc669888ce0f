//! Batch evaluation over independent inputs: many seeds of one scenario, or
//! one r-code program over many database snapshots.
//!
//! With the `parallel` feature the top-level functions spread work over a
//! rayon pool; [`sequential`] always runs on the calling thread. Both give
//! results in input order, so their outputs are identical.

use std::sync::Arc;

use crate::entity::DbSnapshot;
use crate::rcode::RCodeProgram;
use crate::sim::{RunOutput, SystemSpec, World};
use crate::vm::{self, RecoveryCommand, VmFault};

#[cfg(feature = "parallel")]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    sequential::map(items, f)
}

pub fn run_seeds(spec: &Arc<SystemSpec>, seeds: &[u64]) -> Vec<RunOutput> {
    map(seeds, |s| World::run(spec.clone(), *s))
}

pub fn evaluate_many(
    program: &RCodeProgram,
    snapshots: &[DbSnapshot],
) -> Vec<Result<Vec<RecoveryCommand>, VmFault>> {
    map(snapshots, |s| vm::run(program, s))
}

pub mod sequential {
    use super::*;

    pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        items.iter().map(f).collect()
    }

    pub fn run_seeds(spec: &Arc<SystemSpec>, seeds: &[u64]) -> Vec<RunOutput> {
        map(seeds, |s| World::run(spec.clone(), *s))
    }

    pub fn evaluate_many(
        program: &RCodeProgram,
        snapshots: &[DbSnapshot],
    ) -> Vec<Result<Vec<RecoveryCommand>, VmFault>> {
        map(snapshots, |s| vm::run(program, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ariel::{translate, ConstantTable, NoIncludes};
    use crate::entity::{EntityRef, EntityState};
    use crate::sim::parse_scenario;
    use crate::trace::render;

    #[test]
    fn parallel_matches_sequential() {
        let sc = parse_scenario(
            "[NODES] 3\n[TASKS]\n1 ON 2\n[FAULTS]\n300 CRASH_NODE N2\n[RUN] until=800\n",
        )
        .unwrap();
        let tr = translate(
            "IF [ FAULTY NODE 2 ] THEN START TASK 1 FI",
            &ConstantTable::default(),
            &NoIncludes,
        )
        .unwrap();
        let spec = Arc::new(SystemSpec::new(&sc, tr.script.configs, tr.program).unwrap());
        let seeds: Vec<u64> = (0..6).collect();
        let a = run_seeds(&spec, &seeds);
        let b = sequential::run_seeds(&spec, &seeds);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(render(&x.trace), render(&y.trace));
        }
    }

    #[test]
    fn snapshots_in_order() {
        let p = translate(
            "IF [ FAULTY TASK 1 ] THEN RESTART TASK 1 FI",
            &ConstantTable::default(),
            &NoIncludes,
        )
        .unwrap()
        .program;
        let snaps: Vec<DbSnapshot> = (0..64)
            .map(|i| {
                let st = EntityState {
                    faulty: i % 2 == 0,
                    ..Default::default()
                };
                [(EntityRef::task(1), st)].into_iter().collect()
            })
            .collect();
        let out = evaluate_many(&p, &snaps);
        assert_eq!(out, sequential::evaluate_many(&p, &snaps));
        assert_eq!(out[0].as_ref().unwrap().len(), 1);
        assert!(out[1].as_ref().unwrap().is_empty());
    }
}
