//! Recovery-language toolchain and run-time.
//!
//! - [`ariel`]: the configuration and recovery language, compiled to r-code
//! - [`rcode`]: the r-code instruction set and its binary container
//! - [`vm`]: RINT, the interpreter evaluating guarded actions
//! - [`backbone`]: the replicated notification database, TOM and α-count
//! - [`tools`]: watchdog, exception reporter and majority voter
//! - [`sim`]: the deterministic discrete-event world the above run in
//! - [`harness`]: compile / run / check work-flow used by the CLI
//! - [`batch`]: data-parallel sweeps over seeds and snapshots

pub mod ariel;
pub mod backbone;
pub mod batch;
pub mod entity;
pub mod harness;
pub mod rcode;
pub mod sim;
pub mod tools;
pub mod topology;
pub mod trace;
pub mod vm;
