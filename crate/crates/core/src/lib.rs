//! Deterministic simulator of a functional processor farm.
//!
//! A workload (an ordered array of functions with domains, costs, waits and
//! dependencies) is decoded into addressed functions, fed to domain-specialized
//! FPUs, scheduled by priority with bakery-ticket FIFO tie-breaking, executed
//! through a five-state function lifecycle, and re-assembled in address order.

pub mod bakery;
pub mod cli;
pub mod depgraph;
pub mod farm;
pub mod funpiler;
pub mod integrator;
pub mod workload;

pub use farm::{run, Report, SimConfig, Trace};
pub use funpiler::DomainConfig;
pub use workload::{parse_workload, validate, Workload};
