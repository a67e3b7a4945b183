//! Rule-guided inductive process discovery.

pub mod declare;
pub mod discovery;
pub mod log;
pub mod model;
pub mod par;
pub mod report;
pub mod synth;
pub mod tree;

pub use declare::{DeclareRule, Template, ValidationReport};
pub use discovery::{discover, Cut, DiscoveryParams, Operator};
pub use log::{Dfg, EventLog};
pub use tree::ProcessTree;
