//! Deterministic discrete-event simulation of the timed asynchronous
//! system the backbone runs in.

pub mod clock;
pub mod kernel;
pub mod net;
pub mod scenario;
pub mod world;

pub use clock::ClockModel;
pub use kernel::{Kernel, KernelError, SimEvent};
pub use net::{Delivery, NetParams, Network, PartitionSchedule, PartitionWindow};
pub use scenario::{parse_scenario, AlphaOverrides, FaultKind, FaultSpec, Scenario, ScenarioError};
pub use world::{Datagram, Payload, RunOutput, SystemSpec, TaskState, World, DEFAULT_UNTIL_MS};
