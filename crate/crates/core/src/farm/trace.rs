//! Simulation events and their JSON Lines encoding.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::state::TransitionKind;
use crate::funpiler::{Fid, FpuId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Dispatch,
    TimerRunout,
    Preempt,
    Block,
    Unblock,
    Stop,
    Continue,
    Exit,
    Msg,
    Integrate,
    Deadlock,
}

impl From<TransitionKind> for EventKind {
    fn from(k: TransitionKind) -> Self {
        match k {
            TransitionKind::Dispatch => EventKind::Dispatch,
            TransitionKind::TimerRunout => EventKind::TimerRunout,
            TransitionKind::Preempt => EventKind::Preempt,
            TransitionKind::Block => EventKind::Block,
            TransitionKind::Unblock => EventKind::Unblock,
            TransitionKind::Stop => EventKind::Stop,
            TransitionKind::Continue => EventKind::Continue,
            TransitionKind::Exit => EventKind::Exit,
        }
    }
}

/// One trace line. Key order is fixed: `tick, event, fn, fid, fpu`, then
/// `from` on `MSG` lines (the sender; `fn` is the recipient).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub tick: u64,
    #[serde(rename = "event")]
    pub kind: EventKind,
    #[serde(rename = "fn")]
    pub function: String,
    pub fid: Fid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpu: Option<FpuId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace(pub Vec<SimEvent>);

impl Trace {
    pub fn events(&self) -> &[SimEvent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.0.iter().filter(move |e| e.kind == kind)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.0 {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Trace> {
        let mut events = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line)?);
        }
        Ok(Trace(events))
    }
}
