use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bakery::Ticket;
use crate::funpiler::AssignedFunction;
use crate::workload::WaitPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FunctionState {
    Ready,
    Running,
    Sleeping,
    Stopped,
    Exited,
}

impl FunctionState {
    pub const ALL: [FunctionState; 5] = [
        FunctionState::Ready,
        FunctionState::Running,
        FunctionState::Sleeping,
        FunctionState::Stopped,
        FunctionState::Exited,
    ];

    /// The target state of `kind` from `self`, if that edge exists.
    pub fn apply(self, kind: TransitionKind) -> Result<FunctionState, IllegalTransition> {
        use FunctionState::*;
        use TransitionKind::*;
        let next = match (self, kind) {
            (Ready, Dispatch) => Running,
            (Running, TimerRunout) | (Running, Preempt) => Ready,
            (Running, Block) => Sleeping,
            (Sleeping, Unblock) => Ready,
            (Running, Stop) => Stopped,
            (Stopped, Continue) => Ready,
            (Running, Exit) => Exited,
            _ => return Err(IllegalTransition { from: self, kind }),
        };
        Ok(next)
    }
}

impl fmt::Display for FunctionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FunctionState::Ready => "READY",
            FunctionState::Running => "RUNNING",
            FunctionState::Sleeping => "SLEEPING",
            FunctionState::Stopped => "STOPPED",
            FunctionState::Exited => "EXITED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TransitionKind {
    Dispatch,
    TimerRunout,
    Preempt,
    Block,
    Unblock,
    Stop,
    Continue,
    Exit,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 8] = [
        TransitionKind::Dispatch,
        TransitionKind::TimerRunout,
        TransitionKind::Preempt,
        TransitionKind::Block,
        TransitionKind::Unblock,
        TransitionKind::Stop,
        TransitionKind::Continue,
        TransitionKind::Exit,
    ];
}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("illegal transition {kind:?} from {from}")]
pub struct IllegalTransition {
    pub from: FunctionState,
    pub kind: TransitionKind,
}

/// What a sleeping function is waiting for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Blocker {
    Peer(String),
    IoUntil(u64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeInState {
    pub run: u64,
    pub ready: u64,
    pub sleep: u64,
    pub stopped: u64,
}

#[derive(Debug, Clone)]
pub struct RuntimeFunction {
    pub assigned: AssignedFunction,
    pub state: FunctionState,
    pub cycles_done: u64,
    /// Recency value recorded at the last deschedule.
    pub penalty: u64,
    pub descheduled_at: Option<u64>,
    pub ticket: Option<Ticket>,
    pub pending_waits: VecDeque<WaitPoint>,
    /// Senders whose result message has been delivered.
    pub inbox: BTreeSet<String>,
    pub(crate) blocked_on: Option<Blocker>,
    pub(crate) stop_pending: bool,
    pub(crate) slice_used: u64,
    pub(crate) running_priority: i64,
    pub(crate) resident: bool,
    pub(crate) time: TimeInState,
    pub(crate) exit_tick: Option<u64>,
}

impl RuntimeFunction {
    pub fn new(assigned: AssignedFunction) -> Self {
        let pending_waits = assigned.spec.wait_points.iter().cloned().collect();
        RuntimeFunction {
            assigned,
            state: FunctionState::Ready,
            cycles_done: 0,
            penalty: 0,
            descheduled_at: None,
            ticket: None,
            pending_waits,
            inbox: BTreeSet::new(),
            blocked_on: None,
            stop_pending: false,
            slice_used: 0,
            running_priority: 0,
            resident: false,
            time: TimeInState::default(),
            exit_tick: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.assigned.spec.name
    }

    /// Applies one state-table edge; on error nothing changes.
    pub fn transition(&mut self, kind: TransitionKind) -> Result<(), IllegalTransition> {
        self.state = self.state.apply(kind)?;
        Ok(())
    }

    pub fn time_in_state(&self) -> TimeInState {
        self.time
    }

    pub fn exit_tick(&self) -> Option<u64> {
        self.exit_tick
    }
}
