//! The backbone: replicated notification database, time-out manager and
//! α-count, plus the per-node agent tying them together.

pub mod alpha;
pub mod component;
pub mod db;
pub mod tom;

pub use alpha::{alpha_update, AlphaCount, AlphaParams, AlphaTrack, Judgment};
pub use component::{elect_executor, Backbone, BackboneShared, BbConfig, BbMessage, BbOutput};
pub use db::{
    Db, DbDelta, DeltaBody, ErrorClass, ErrorNotification, Materialized, Seq, StateChange,
};
pub use tom::{Timeout, TimeoutId, Tom, TomError};
