//! The FPU farm: function state machine, priority-decay scheduling and the
//! discrete-event engine that drives fed functions to exit.

mod engine;
mod report;
mod sched;
mod state;
mod trace;

use serde::{Deserialize, Serialize};

pub use engine::{run, FpuUnit, SimError, Simulation};
pub use report::{FpuReport, FunctionReport, Outcome, Report};
pub use sched::{current_penalty, effective_priority, select_next};
pub use state::{FunctionState, IllegalTransition, RuntimeFunction, TimeInState, TransitionKind};
pub use trace::{EventKind, SimEvent, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time slice in ticks.
    pub quantum: u64,
    /// Recency value set on every deschedule.
    pub penalty0: u64,
    /// Recency decrease per tick off the FPU.
    pub decay: u64,
    /// Result-message delivery delay in ticks.
    pub msg_latency: u64,
    /// Local-store units per FPU.
    pub ls_capacity: u64,
    pub tick_cap: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            quantum: 10,
            penalty0: 10,
            decay: 1,
            msg_latency: 1,
            ls_capacity: 256,
            tick_cap: 1_000_000,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<(), String> {
        for (name, value) in [
            ("quantum", self.quantum),
            ("decay", self.decay),
            ("ls capacity", self.ls_capacity),
            ("tick cap", self.tick_cap),
        ] {
            if value == 0 {
                return Err(format!("{name} must be >= 1"));
            }
        }
        Ok(())
    }
}
