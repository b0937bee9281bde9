#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use fpufarm::bakery::{BakeryState, Phase, StepOutcome};
use fpufarm::farm::{EventKind, Report, Trace};
use fpufarm::funpiler::{DomainConfig, DEFAULT_DOMAINS};
use fpufarm::workload::{
    DepKind, DependencyDecl, Domain, FunctionSpec, SignalDecl, SignalKind, WaitTarget, Workload,
};

pub const RING_EXAMPLE: &str = include_str!("../fixtures/ring_cycle.wl");

pub fn domains_with_a() -> DomainConfig {
    DomainConfig::default()
        .with_overrides([(Domain::new('A').unwrap(), 1)])
        .unwrap()
}

/// Random FPU layout: up to `max_fpus` units spread over a random subset of
/// the default domains.
pub fn random_domains(rng: &mut impl Rng, max_fpus: usize) -> DomainConfig {
    let total = rng.gen_range(1..=max_fpus);
    let mut letters = DEFAULT_DOMAINS.to_vec();
    letters.shuffle(rng);
    let used = rng.gen_range(1..=total.min(letters.len()));
    let mut counts: BTreeMap<Domain, usize> = letters[..used]
        .iter()
        .map(|&c| (Domain::new(c).unwrap(), 1))
        .collect();
    let keys: Vec<Domain> = counts.keys().copied().collect();
    for _ in used..total {
        *counts.get_mut(&keys[rng.gen_range(0..keys.len())]).unwrap() += 1;
    }
    DomainConfig::new(counts).unwrap()
}

/// A valid workload whose waits and dependencies only point at earlier
/// functions, so no wait-for cycle can form.
pub fn random_acyclic_workload(rng: &mut impl Rng, cfg: &DomainConfig, max_fns: usize) -> Workload {
    let domains: Vec<Domain> = cfg.domains().map(|(d, _)| d).collect();
    let n = rng.gen_range(1..=max_fns);
    let mut w = Workload::default();
    for i in 0..n {
        let cost = rng.gen_range(1..=60u64);
        let mut f = FunctionSpec::new(format!("f{i}"), domains[rng.gen_range(0..domains.len())], cost)
            .with_priority(rng.gen_range(-3..=3))
            .with_ls_units(rng.gen_range(1..=4));
        let mut at = 0u64;
        while at < cost && rng.gen_bool(0.4) {
            let target = if i > 0 && rng.gen_bool(0.5) {
                WaitTarget::Peer(format!("f{}", rng.gen_range(0..i)))
            } else {
                WaitTarget::Io(rng.gen_range(1..=8))
            };
            f = f.with_wait(at, target);
            at += rng.gen_range(1..=cost.max(2));
        }
        w.functions.push(f);
        if i > 0 {
            let mut targets: Vec<usize> = (0..i).collect();
            targets.shuffle(rng);
            for &j in targets.iter().take(rng.gen_range(0..=2)) {
                w.dependencies.push(DependencyDecl {
                    from: format!("f{i}"),
                    to: format!("f{j}"),
                    kind: if rng.gen_bool(0.5) { DepKind::Communication } else { DepKind::Cooperation },
                    sync: rng.gen_bool(0.5),
                });
            }
        }
        if rng.gen_bool(0.15) {
            let stop = rng.gen_range(0..200);
            let cont = stop + rng.gen_range(1..50);
            for (kind, at_tick) in [(SignalKind::Stop, stop), (SignalKind::Continue, cont)] {
                w.signals.push(SignalDecl {
                    kind,
                    target: format!("f{i}"),
                    at_tick,
                });
            }
        }
    }
    w
}

/// Replays the trace and checks that no FPU ever holds two running functions
/// and that every release matches the current occupant.
pub fn check_single_occupancy(trace: &Trace) -> Result<(), String> {
    let mut occupant: BTreeMap<String, String> = BTreeMap::new();
    for e in trace.events() {
        let Some(fpu) = e.fpu.map(|f| f.to_string()) else { continue };
        match e.kind {
            EventKind::Dispatch => {
                if let Some(other) = occupant.insert(fpu.clone(), e.function.clone()) {
                    return Err(format!("tick {}: {} dispatched on {fpu} held by {other}", e.tick, e.function));
                }
            }
            EventKind::TimerRunout | EventKind::Preempt | EventKind::Block | EventKind::Stop | EventKind::Exit => {
                match occupant.remove(&fpu) {
                    Some(f) if f == e.function => {}
                    other => return Err(format!("tick {}: {} left {fpu} held by {other:?}", e.tick, e.function)),
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Per-function time conservation and per-FPU busy accounting.
pub fn check_conservation(w: &Workload, cfg: &DomainConfig, report: &Report) -> Result<(), String> {
    for (spec, f) in w.functions.iter().zip(&report.functions) {
        if f.run_ticks != spec.cost {
            return Err(format!("{}: ran {} of cost {}", f.name, f.run_ticks, spec.cost));
        }
        let exit = f.exit_tick.ok_or_else(|| format!("{} never exited", f.name))?;
        let total = f.run_ticks + f.ready_ticks + f.sleep_ticks + f.stopped_ticks;
        if total != exit {
            return Err(format!("{}: state time {} != exit tick {}", f.name, total, exit));
        }
    }
    let mut per_fpu: BTreeMap<String, u64> = BTreeMap::new();
    let assigned = fpufarm::funpiler::assign(w, cfg).map_err(|e| e.to_string())?;
    for (a, f) in assigned.iter().zip(&report.functions) {
        *per_fpu.entry(a.target_fpu.to_string()).or_default() += f.run_ticks;
    }
    for u in &report.fpus {
        let sum = per_fpu.get(&u.id.to_string()).copied().unwrap_or(0);
        if sum != u.busy_ticks {
            return Err(format!("{}: run ticks {} != busy {}", u.id, sum, u.busy_ticks));
        }
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct BakeryTally {
    pub runs: u64,
    pub actions: u64,
    pub entries: u64,
    pub mutex_violations: u64,
    pub fcfs_violations: u64,
    pub stuck_states: u64,
}

/// Drives a bakery one action at a time: a critical participant releases,
/// any other steps. Tracks doorway timing to check first-come-first-served.
#[derive(Debug, Clone)]
pub struct BakeryDriver {
    pub state: BakeryState,
    doorway_begin: Vec<Option<u64>>,
    doorway_end: Vec<Option<u64>>,
    clock: u64,
}

impl BakeryDriver {
    pub fn new(n: usize) -> Self {
        BakeryDriver {
            state: BakeryState::new(n).unwrap(),
            doorway_begin: vec![None; n],
            doorway_end: vec![None; n],
            clock: 0,
        }
    }

    pub fn act(&mut self, p: usize, tally: &mut BakeryTally) {
        tally.actions += 1;
        self.clock += 1;
        let before = self.state.phase(p);
        if before == Phase::Critical {
            self.state.release(p).unwrap();
            self.doorway_begin[p] = None;
            self.doorway_end[p] = None;
            return;
        }
        let outcome = self.state.step(p).unwrap();
        match before {
            Phase::Idle => self.doorway_begin[p] = Some(self.clock),
            Phase::Doorway => self.doorway_end[p] = Some(self.clock),
            _ => {}
        }
        if self.state.critical().count() > 1 {
            tally.mutex_violations += 1;
        }
        if outcome == StepOutcome::EnteredCritical {
            tally.entries += 1;
            let began = self.doorway_begin[p].expect("entered through the doorway");
            for q in 0..self.state.len() {
                let waiting = matches!(self.state.phase(q), Phase::Scanning(_));
                if q != p && waiting && self.doorway_end[q].is_some_and(|e| e < began) {
                    tally.fcfs_violations += 1;
                }
            }
        }
        if !(0..self.state.len()).any(|q| self.state.can_progress(q)) {
            tally.stuck_states += 1;
        }
    }
}

/// Every interleaving of `n` participants up to `depth` actions.
pub fn exhaustive_bakery(n: usize, depth: usize) -> BakeryTally {
    fn dfs(d: &BakeryDriver, n: usize, depth: usize, tally: &mut BakeryTally) {
        if depth == 0 {
            tally.runs += 1;
            return;
        }
        for p in 0..n {
            let mut next = d.clone();
            next.act(p, tally);
            dfs(&next, n, depth - 1, tally);
        }
    }
    let mut tally = BakeryTally::default();
    dfs(&BakeryDriver::new(n), n, depth, &mut tally);
    tally
}

pub fn random_bakery(rng: &mut impl Rng, runs: u64, max_n: usize, len: usize) -> BakeryTally {
    let mut tally = BakeryTally::default();
    for _ in 0..runs {
        let n = rng.gen_range(2..=max_n);
        let mut d = BakeryDriver::new(n);
        for _ in 0..len {
            d.act(rng.gen_range(0..n), &mut tally);
        }
        tally.runs += 1;
    }
    tally
}
