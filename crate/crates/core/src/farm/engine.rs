//! The tick-driven farm engine.
//!
//! Each tick applies its rules in a fixed order: deliver due messages, apply
//! due signals, wake satisfied sleepers, resolve running functions (exit,
//! block, stop, preempt, timer runout), then dispatch onto idle FPUs. Within a
//! rule, functions are visited in address order and FPUs in id order.
//!
//! A state observed at the end of tick `t` holds over `[t, t+1)`; a function
//! dispatched at tick `t` therefore completes its first cycle at `t + 1`.

use std::collections::VecDeque;

use thiserror::Error;

use super::report::{fairness, FpuReport, FunctionReport, Outcome, Report};
use super::sched::{effective_priority, select_next};
use super::state::{Blocker, FunctionState, RuntimeFunction, TransitionKind};
use super::trace::{EventKind, SimEvent, Trace};
use super::SimConfig;
use crate::bakery::BakeryState;
use crate::depgraph::{elementary_cycles, AdjacencyMatrix};
use crate::funpiler::{self, DomainConfig, FpuId, FunpilerError};
use crate::integrator::{IntegrationBuffer, ResultPacket};
use crate::workload::{SignalDecl, SignalKind, WaitPoint, WaitTarget, Workload};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Funpiler(#[from] FunpilerError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("tick cap {cap} exceeded")]
    TickCapExceeded { cap: u64, trace: Trace },
    #[error("simulation already finished")]
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpuUnit {
    pub id: FpuId,
    pub ls_capacity: u64,
    pub ls_used: u64,
    /// Address of the running function.
    pub running: Option<usize>,
    pub busy_ticks: u64,
    /// Feed queue: addresses in admission order; position = bakery participant.
    queue: Vec<usize>,
    bakery: Option<BakeryState>,
}

#[derive(Debug, Clone)]
enum Payload {
    Integrate(ResultPacket),
    Inbox { to: usize, from: usize },
}

#[derive(Debug, Clone)]
struct Message {
    due: u64,
    payload: Payload,
}

pub struct Simulation {
    cfg: SimConfig,
    now: u64,
    fpus: Vec<FpuUnit>,
    functions: Vec<RuntimeFunction>,
    /// (fpu index, bakery participant) per address.
    slots: Vec<(usize, usize)>,
    /// Addresses that receive each function's result message.
    recipients: Vec<Vec<usize>>,
    signals: Vec<SignalDecl>,
    next_signal: usize,
    messages: VecDeque<Message>,
    integrator: IntegrationBuffer,
    trace: Vec<SimEvent>,
    deadlock: Option<Vec<String>>,
    notes: Vec<String>,
}

/// Explicit waits plus one cycle-0 peer wait per synchronized dependency the
/// author did not already cover with an explicit wait.
fn effective_waits(w: &Workload, index: usize) -> Vec<WaitPoint> {
    let spec = &w.functions[index];
    let mut waits = spec.wait_points.clone();
    for dep in w.dependencies.iter().filter(|d| d.sync && d.from == spec.name) {
        let covered = waits
            .iter()
            .any(|wp| matches!(&wp.target, WaitTarget::Peer(p) if *p == dep.to));
        if !covered {
            let pos = waits.iter().take_while(|wp| wp.at_cycle == 0).count();
            waits.insert(
                pos,
                WaitPoint {
                    at_cycle: 0,
                    target: WaitTarget::Peer(dep.to.clone()),
                },
            );
        }
    }
    waits
}

impl Simulation {
    pub fn new(w: &Workload, domains: &DomainConfig, cfg: SimConfig) -> Result<Self, SimError> {
        cfg.check().map_err(SimError::Config)?;
        let assigned = funpiler::assign(w, domains)?;
        let queues = funpiler::feed_queues(&assigned, domains);

        let mut functions: Vec<RuntimeFunction> = assigned
            .into_iter()
            .enumerate()
            .map(|(i, af)| {
                let mut rf = RuntimeFunction::new(af);
                rf.pending_waits = effective_waits(w, i).into();
                rf
            })
            .collect();

        let mut recipients = vec![Vec::new(); functions.len()];
        for (i, f) in functions.iter().enumerate() {
            for wp in &f.pending_waits {
                if let WaitTarget::Peer(p) = &wp.target {
                    if let Some(j) = w.index_of(p) {
                        recipients[j].push(i);
                    }
                }
            }
        }
        for d in &w.dependencies {
            if let (Some(i), Some(j)) = (w.index_of(&d.from), w.index_of(&d.to)) {
                recipients[j].push(i);
            }
        }
        for r in &mut recipients {
            r.sort_unstable();
            r.dedup();
        }

        let mut slots = vec![(0, 0); functions.len()];
        let mut fpus = Vec::with_capacity(queues.len());
        for (fpu_index, (id, queue)) in queues.into_iter().enumerate() {
            let queue: Vec<usize> = queue.into_iter().map(|a| a.0).collect();
            let mut bakery = (!queue.is_empty())
                .then(|| BakeryState::new(queue.len()).expect("non-empty queue"));
            for (participant, &addr) in queue.iter().enumerate() {
                slots[addr] = (fpu_index, participant);
                if let Some(b) = bakery.as_mut() {
                    functions[addr].ticket = Some(b.take_ticket(participant).expect("in range"));
                }
            }
            fpus.push(FpuUnit {
                id,
                ls_capacity: cfg.ls_capacity,
                ls_used: 0,
                running: None,
                busy_ticks: 0,
                queue,
                bakery,
            });
        }

        let mut signals = w.signals.clone();
        signals.sort_by_key(|s| s.at_tick);

        Ok(Simulation {
            cfg,
            now: 0,
            integrator: IntegrationBuffer::new(functions.len()),
            fpus,
            functions,
            slots,
            recipients,
            signals,
            next_signal: 0,
            messages: VecDeque::new(),
            trace: Vec::new(),
            deadlock: None,
            notes: Vec::new(),
        })
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn functions(&self) -> &[RuntimeFunction] {
        &self.functions
    }

    pub fn fpus(&self) -> &[FpuUnit] {
        &self.fpus
    }

    pub fn trace(&self) -> &[SimEvent] {
        &self.trace
    }

    pub fn deadlock(&self) -> Option<&[String]> {
        self.deadlock.as_deref()
    }

    /// All functions exited and every result message delivered, or deadlocked.
    pub fn is_finished(&self) -> bool {
        self.deadlock.is_some()
            || (self.messages.is_empty()
                && self.functions.iter().all(|f| f.state == FunctionState::Exited))
    }

    fn emit(&mut self, kind: EventKind, addr: usize, on_fpu: bool) {
        let f = &self.functions[addr];
        self.trace.push(SimEvent {
            tick: self.now,
            kind,
            function: f.name().to_string(),
            fid: f.assigned.fid,
            fpu: on_fpu.then_some(f.assigned.target_fpu),
            from: None,
        });
    }

    fn apply(&mut self, addr: usize, kind: TransitionKind) {
        self.functions[addr]
            .transition(kind)
            .unwrap_or_else(|e| panic!("engine attempted {e}"));
        let on_fpu = !matches!(kind, TransitionKind::Unblock | TransitionKind::Continue);
        self.emit(kind.into(), addr, on_fpu);
    }

    fn take_ticket(&mut self, addr: usize) {
        let (fpu, participant) = self.slots[addr];
        let bakery = self.fpus[fpu].bakery.as_mut().expect("queue holds this function");
        self.functions[addr].ticket = Some(bakery.take_ticket(participant).expect("idle participant"));
    }

    fn drop_ticket(&mut self, addr: usize) {
        let (fpu, participant) = self.slots[addr];
        if let Some(b) = self.fpus[fpu].bakery.as_mut() {
            b.withdraw(participant).expect("ready function holds a ticket");
        }
        self.functions[addr].ticket = None;
    }

    /// RUNNING → `kind`, releasing the FPU and starting the recency penalty.
    fn deschedule(&mut self, addr: usize, kind: TransitionKind) {
        let fpu = self.slots[addr].0;
        self.apply(addr, kind);
        self.fpus[fpu].running = None;
        let penalty0 = self.cfg.penalty0;
        let f = &mut self.functions[addr];
        f.penalty = penalty0;
        f.descheduled_at = Some(self.now);
        if f.state == FunctionState::Ready {
            self.take_ticket(addr);
        }
    }

    fn deliver_due(&mut self) {
        while self.messages.front().is_some_and(|m| m.due <= self.now) {
            let msg = self.messages.pop_front().expect("checked non-empty");
            match msg.payload {
                Payload::Integrate(packet) => {
                    let emitted = self
                        .integrator
                        .submit(packet)
                        .expect("each address completes exactly once");
                    for p in emitted {
                        self.emit(EventKind::Integrate, p.address.0, false);
                    }
                }
                Payload::Inbox { to, from } => {
                    let sender = self.functions[from].name().to_string();
                    self.functions[to].inbox.insert(sender.clone());
                    self.emit(EventKind::Msg, to, false);
                    self.trace.last_mut().expect("just pushed").from = Some(sender);
                }
            }
        }
    }

    fn apply_signals(&mut self) {
        while self.next_signal < self.signals.len() && self.signals[self.next_signal].at_tick <= self.now {
            let sig = self.signals[self.next_signal].clone();
            self.next_signal += 1;
            let Some(addr) = self.functions.iter().position(|f| f.name() == sig.target) else {
                continue;
            };
            let state = self.functions[addr].state;
            match sig.kind {
                SignalKind::Stop => match state {
                    FunctionState::Exited => self
                        .notes
                        .push(format!("tick {}: stop for exited `{}` ignored", self.now, sig.target)),
                    FunctionState::Running => self.functions[addr].stop_pending = true,
                    _ => {
                        self.functions[addr].stop_pending = true;
                        self.notes.push(format!(
                            "tick {}: stop for `{}` deferred while {state}",
                            self.now, sig.target
                        ));
                    }
                },
                SignalKind::Continue => {
                    if state == FunctionState::Stopped {
                        self.apply(addr, TransitionKind::Continue);
                        self.take_ticket(addr);
                    } else if self.functions[addr].stop_pending {
                        self.functions[addr].stop_pending = false;
                        self.notes.push(format!(
                            "tick {}: continue cancels deferred stop of `{}`",
                            self.now, sig.target
                        ));
                    } else {
                        self.notes.push(format!(
                            "tick {}: continue for `{}` ignored while {state}",
                            self.now, sig.target
                        ));
                    }
                }
            }
        }
    }

    fn wake_satisfied(&self, f: &RuntimeFunction) -> bool {
        match &f.blocked_on {
            Some(Blocker::Peer(p)) => f.inbox.contains(p),
            Some(Blocker::IoUntil(t)) => self.now >= *t,
            None => true,
        }
    }

    fn wake_sleepers(&mut self) {
        for addr in 0..self.functions.len() {
            let f = &self.functions[addr];
            if f.state == FunctionState::Sleeping && self.wake_satisfied(f) {
                self.functions[addr].blocked_on = None;
                self.apply(addr, TransitionKind::Unblock);
                self.take_ticket(addr);
            }
        }
    }

    /// Consumes wait points due at the current cycle count; returns the first
    /// one that is not already satisfied.
    fn due_blocker(&mut self, addr: usize) -> Option<Blocker> {
        let now = self.now;
        let f = &mut self.functions[addr];
        while f.pending_waits.front().is_some_and(|wp| wp.at_cycle == f.cycles_done) {
            let wp = f.pending_waits.pop_front().expect("checked non-empty");
            match wp.target {
                WaitTarget::Peer(p) if f.inbox.contains(&p) => continue,
                WaitTarget::Peer(p) => return Some(Blocker::Peer(p)),
                WaitTarget::Io(d) => return Some(Blocker::IoUntil(now + d)),
            }
        }
        None
    }

    fn block(&mut self, addr: usize, blocker: Blocker) {
        self.functions[addr].blocked_on = Some(blocker);
        self.deschedule(addr, TransitionKind::Block);
    }

    fn exit(&mut self, addr: usize) {
        let fpu = self.slots[addr].0;
        self.apply(addr, TransitionKind::Exit);
        let ls = self.functions[addr].assigned.spec.ls_units;
        let unit = &mut self.fpus[fpu];
        unit.running = None;
        unit.ls_used -= ls;
        let f = &mut self.functions[addr];
        f.resident = false;
        f.exit_tick = Some(self.now);

        let due = self.now + self.cfg.msg_latency;
        let f = &self.functions[addr];
        self.messages.push_back(Message {
            due,
            payload: Payload::Integrate(ResultPacket {
                address: f.assigned.address,
                fid: f.assigned.fid,
                producer: f.name().to_string(),
                completion_tick: self.now,
            }),
        });
        for &to in &self.recipients[addr] {
            self.messages.push_back(Message {
                due,
                payload: Payload::Inbox { to, from: addr },
            });
        }
    }

    fn ready_on(&self, fpu: usize) -> impl Iterator<Item = &RuntimeFunction> {
        self.fpus[fpu]
            .queue
            .iter()
            .map(|&a| &self.functions[a])
            .filter(|f| f.state == FunctionState::Ready)
    }

    fn free_ls(&self, fpu: usize) -> u64 {
        self.fpus[fpu].ls_capacity - self.fpus[fpu].ls_used
    }

    fn best_ready(&self, fpu: usize) -> Option<usize> {
        select_next(self.ready_on(fpu), self.now, self.cfg.decay, self.free_ls(fpu))
            .map(|f| f.assigned.address.0)
    }

    fn resolve_running(&mut self) {
        let mut running: Vec<usize> = self.fpus.iter().filter_map(|u| u.running).collect();
        running.sort_unstable();
        for addr in running {
            let fpu = self.slots[addr].0;
            let f = &mut self.functions[addr];
            f.cycles_done += 1;
            f.slice_used += 1;
            if f.cycles_done == f.assigned.spec.cost {
                self.exit(addr);
                continue;
            }
            if let Some(blocker) = self.due_blocker(addr) {
                self.block(addr, blocker);
                continue;
            }
            if self.functions[addr].stop_pending {
                self.functions[addr].stop_pending = false;
                self.deschedule(addr, TransitionKind::Stop);
                continue;
            }
            let running_priority = self.functions[addr].running_priority;
            let challenger = self
                .best_ready(fpu)
                .map(|a| effective_priority(&self.functions[a], self.now, self.cfg.decay));
            if challenger.is_some_and(|p| p > running_priority) {
                self.deschedule(addr, TransitionKind::Preempt);
                continue;
            }
            if self.functions[addr].slice_used >= self.cfg.quantum {
                self.deschedule(addr, TransitionKind::TimerRunout);
            }
        }
    }

    fn dispatch_idle(&mut self) {
        for fpu in 0..self.fpus.len() {
            while self.fpus[fpu].running.is_none() {
                let Some(addr) = self.best_ready(fpu) else {
                    break;
                };
                let priority = effective_priority(&self.functions[addr], self.now, self.cfg.decay);
                self.drop_ticket(addr);
                self.apply(addr, TransitionKind::Dispatch);
                let ls = self.functions[addr].assigned.spec.ls_units;
                let f = &mut self.functions[addr];
                f.running_priority = priority;
                f.slice_used = 0;
                if !f.resident {
                    f.resident = true;
                    self.fpus[fpu].ls_used += ls;
                }
                self.fpus[fpu].running = Some(addr);

                if let Some(blocker) = self.due_blocker(addr) {
                    self.block(addr, blocker);
                } else if self.functions[addr].stop_pending {
                    self.functions[addr].stop_pending = false;
                    self.deschedule(addr, TransitionKind::Stop);
                }
            }
        }
    }

    fn account(&mut self) {
        for f in &mut self.functions {
            match f.state {
                FunctionState::Running => f.time.run += 1,
                FunctionState::Ready => f.time.ready += 1,
                FunctionState::Sleeping => f.time.sleep += 1,
                FunctionState::Stopped => f.time.stopped += 1,
                FunctionState::Exited => {}
            }
        }
        for u in &mut self.fpus {
            if u.running.is_some() {
                u.busy_ticks += 1;
            }
        }
    }

    fn progress_possible(&self) -> bool {
        self.fpus.iter().any(|u| u.running.is_some())
            || !self.messages.is_empty()
            || self.next_signal < self.signals.len()
            || self
                .functions
                .iter()
                .any(|f| f.state == FunctionState::Sleeping && matches!(f.blocked_on, Some(Blocker::IoUntil(_)) | None))
            || self
                .functions
                .iter()
                .any(|f| f.state == FunctionState::Sleeping && self.wake_satisfied(f))
    }

    /// Wait-for cycle among sleeping functions, or every unfinished function.
    fn stuck_set(&self) -> Vec<usize> {
        let n = self.functions.len();
        let mut waits_for = AdjacencyMatrix::zeros(n);
        for (i, f) in self.functions.iter().enumerate() {
            if let (FunctionState::Sleeping, Some(Blocker::Peer(p))) = (f.state, &f.blocked_on) {
                if let Some(j) = self.functions.iter().position(|g| g.name() == p) {
                    waits_for.set(i, j);
                }
            }
        }
        elementary_cycles(&waits_for).into_iter().next().unwrap_or_else(|| {
            (0..n)
                .filter(|&i| self.functions[i].state != FunctionState::Exited)
                .collect()
        })
    }

    fn detect_deadlock(&mut self) {
        let unfinished = self.functions.iter().any(|f| f.state != FunctionState::Exited);
        if !unfinished || self.progress_possible() {
            return;
        }
        let stuck = self.stuck_set();
        for &addr in &stuck {
            self.emit(EventKind::Deadlock, addr, false);
        }
        self.deadlock = Some(stuck.iter().map(|&a| self.functions[a].name().to_string()).collect());
    }

    /// Advances one tick and returns the events it produced.
    pub fn step(&mut self) -> Result<&[SimEvent], SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        let start = self.trace.len();
        self.deliver_due();
        self.apply_signals();
        self.wake_sleepers();
        self.resolve_running();
        // zero-latency results land before dispatch
        self.deliver_due();
        self.dispatch_idle();
        self.account();
        self.detect_deadlock();
        self.now += 1;
        Ok(&self.trace[start..])
    }

    pub fn report(&self) -> Report {
        let makespan = self.functions.iter().filter_map(|f| f.exit_tick).max().unwrap_or(0);
        let fpus = self
            .fpus
            .iter()
            .map(|u| FpuReport {
                id: u.id,
                domain: u.id.domain,
                busy_ticks: u.busy_ticks,
                utilization: if makespan == 0 {
                    0.0
                } else {
                    100.0 * u.busy_ticks as f64 / makespan as f64
                },
            })
            .collect();
        let functions: Vec<FunctionReport> = self
            .functions
            .iter()
            .map(|f| FunctionReport {
                name: f.name().to_string(),
                fid: f.assigned.fid,
                address: f.assigned.address,
                run_ticks: f.time.run,
                ready_ticks: f.time.ready,
                sleep_ticks: f.time.sleep,
                stopped_ticks: f.time.stopped,
                exit_tick: f.exit_tick,
            })
            .collect();
        let (results, missing) = match self.integrator.finalize() {
            Ok(r) => (r, Vec::new()),
            Err(crate::integrator::IntegrationError::Missing(m)) => {
                (self.integrator.emitted().to_vec(), m)
            }
            Err(e) => unreachable!("finalize only reports missing addresses: {e}"),
        };
        Report {
            outcome: match &self.deadlock {
                Some(cycle) => Outcome::Deadlock { cycle: cycle.clone() },
                None => Outcome::Completed,
            },
            fairness: fairness(functions.iter().map(|f| f.run_ticks)),
            fpus,
            functions,
            makespan,
            results,
            missing,
            notes: self.notes.clone(),
        }
    }

    pub fn into_trace(self) -> Trace {
        Trace(self.trace)
    }
}

/// Steps a fresh simulation until completion, deadlock or the tick cap.
pub fn run(w: &Workload, domains: &DomainConfig, cfg: SimConfig) -> Result<(Trace, Report), SimError> {
    let cap = cfg.tick_cap;
    let mut sim = Simulation::new(w, domains, cfg)?;
    while !sim.is_finished() {
        if sim.now() >= cap {
            return Err(SimError::TickCapExceeded {
                cap,
                trace: sim.into_trace(),
            });
        }
        sim.step()?;
    }
    let report = sim.report();
    Ok((sim.into_trace(), report))
}
