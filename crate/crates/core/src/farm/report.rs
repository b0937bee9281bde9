use std::fmt;

use serde::{Deserialize, Serialize};

use crate::funpiler::{Fid, FpuId, IntegrationAddress};
use crate::integrator::ResultPacket;
use crate::workload::Domain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpuReport {
    pub id: FpuId,
    pub domain: Domain,
    pub busy_ticks: u64,
    /// Percent of the makespan.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionReport {
    pub name: String,
    pub fid: Fid,
    pub address: IntegrationAddress,
    pub run_ticks: u64,
    pub ready_ticks: u64,
    pub sleep_ticks: u64,
    pub stopped_ticks: u64,
    pub exit_tick: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// `cycle` is the wait-for cycle if one exists, otherwise every function
    /// that could not finish.
    Deadlock { cycle: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub outcome: Outcome,
    pub fpus: Vec<FpuReport>,
    pub functions: Vec<FunctionReport>,
    /// Last exit tick.
    pub makespan: u64,
    /// min/max run ticks across functions; 1.0 is perfectly even.
    pub fairness: f64,
    pub results: Vec<ResultPacket>,
    pub missing: Vec<IntegrationAddress>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn is_deadlock(&self) -> bool {
        matches!(self.outcome, Outcome::Deadlock { .. })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionReport> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub(crate) fn fairness(run_ticks: impl IntoIterator<Item = u64>) -> f64 {
    let (mut lo, mut hi) = (u64::MAX, 0);
    for t in run_ticks {
        lo = lo.min(t);
        hi = hi.max(t);
    }
    if hi == 0 {
        1.0
    } else {
        lo as f64 / hi as f64
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:<6} {:>10} {:>8}", "FPU", "DOMAIN", "BUSY", "UTIL%")?;
        for u in &self.fpus {
            writeln!(
                f,
                "{:<6} {:<6} {:>10} {:>8.2}",
                u.id.to_string(),
                u.domain.to_string(),
                u.busy_ticks,
                u.utilization
            )?;
        }
        writeln!(f)?;
        let name_w = self.functions.iter().map(|x| x.name.len()).max().unwrap_or(0).max(8);
        writeln!(
            f,
            "{:<name_w$} {:<8} {:>4} {:>8} {:>8} {:>8} {:>8} {:>6}",
            "FUNCTION", "FID", "ADDR", "RUN", "READY", "SLEEP", "STOPPED", "EXIT"
        )?;
        for x in &self.functions {
            let exit = x.exit_tick.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<name_w$} {:<8} {:>4} {:>8} {:>8} {:>8} {:>8} {:>6}",
                x.name,
                x.fid.to_string(),
                x.address.0,
                x.run_ticks,
                x.ready_ticks,
                x.sleep_ticks,
                x.stopped_ticks,
                exit
            )?;
        }
        writeln!(f)?;
        if let Outcome::Deadlock { cycle } = &self.outcome {
            writeln!(f, "deadlock={}", cycle.join(","))?;
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        writeln!(f, "makespan={}", self.makespan)?;
        writeln!(f, "fairness={:.4}", self.fairness)
    }
}
