//! Command-line front end: `validate`, `analyze` and `run`.
//!
//! Exit codes: 0 success, 1 invalid workload, 2 usage or I/O error,
//! 3 deadlock, 4 tick cap exceeded.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::depgraph;
use crate::farm::{self, SimConfig, SimError};
use crate::funpiler::DomainConfig;
use crate::integrator::ResultPacket;
use crate::workload::{self, Domain, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InvalidWorkload = 1,
    Usage = 2,
    Deadlock = 3,
    TickCap = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "fpufarm", version, about = "Functional processor farm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a workload file and print diagnostics.
    Validate(CommonArgs),
    /// Print adjacency and dependency matrices with relationship counts.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Emit JSON instead of text tables.
        #[arg(long)]
        machine: bool,
    },
    /// Simulate the workload on the FPU farm.
    Run(RunOptions),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Workload file.
    pub workload: PathBuf,
    /// FPUs per domain, merged over the default eight, e.g. `G=2,A=1`.
    #[arg(long, value_parser = parse_domains)]
    pub domains: Option<DomainOverrides>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainOverrides(pub Vec<(Domain, usize)>);

fn parse_domains(s: &str) -> Result<DomainOverrides, String> {
    s.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            let (letter, count) = part
                .trim()
                .split_once('=')
                .ok_or_else(|| format!("expected LETTER=COUNT, got `{part}`"))?;
            let domain: Domain = letter.parse().map_err(|e| format!("{e}"))?;
            let count: usize = count
                .parse()
                .map_err(|_| format!("FPU count must be an integer, got `{count}`"))?;
            if count == 0 {
                return Err(format!("domain {domain} needs at least one FPU"));
            }
            Ok((domain, count))
        })
        .collect::<Result<_, _>>()
        .map(DomainOverrides)
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub quantum: u64,
    #[arg(long, default_value_t = 10)]
    pub penalty0: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub decay: u64,
    #[arg(long, default_value_t = 1)]
    pub msg_latency: u64,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub ls_capacity: u64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub tick_cap: u64,
    /// Write the event trace as JSON Lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write integrated results as JSON Lines, ascending address.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    pub machine: bool,
}

impl RunOptions {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            quantum: self.quantum,
            penalty0: self.penalty0,
            decay: self.decay,
            msg_latency: self.msg_latency,
            ls_capacity: self.ls_capacity,
            tick_cap: self.tick_cap,
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, out, err).code(),
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            if e.use_stderr() {
                ExitStatus::Usage.code()
            } else {
                let _ = write!(out, "{}", e.render());
                ExitStatus::Success.code()
            }
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let result = match &cli.command {
        Command::Validate(common) => cmd_validate(common, out),
        Command::Analyze { common, machine } => cmd_analyze(common, *machine, out, err),
        Command::Run(opts) => cmd_run(opts, out, err),
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::Usage
        }
    }
}

fn domain_config(common: &CommonArgs) -> Result<DomainConfig, String> {
    let overrides = common.domains.clone().map(|d| d.0).unwrap_or_default();
    DomainConfig::default()
        .with_overrides(overrides)
        .map_err(|e| e.to_string())
}

enum Loaded {
    Ok(Workload, DomainConfig),
    Invalid,
}

/// Reads, parses and validates; prints diagnostics to `diag`.
fn load(common: &CommonArgs, diag: &mut dyn Write) -> io::Result<Result<Loaded, String>> {
    let cfg = match domain_config(common) {
        Ok(c) => c,
        Err(e) => return Ok(Err(e)),
    };
    let text = match fs::read_to_string(&common.workload) {
        Ok(t) => t,
        Err(e) => return Ok(Err(format!("cannot read {}: {e}", common.workload.display()))),
    };
    let w = match workload::parse_workload(&text) {
        Ok(w) => w,
        Err(e) => {
            writeln!(diag, "error: {e}")?;
            return Ok(Ok(Loaded::Invalid));
        }
    };
    let diags = workload::validate(&w, &cfg);
    for d in &diags {
        writeln!(diag, "{d}")?;
    }
    if workload::has_errors(&diags) {
        Ok(Ok(Loaded::Invalid))
    } else {
        Ok(Ok(Loaded::Ok(w, cfg)))
    }
}

fn cmd_validate(common: &CommonArgs, out: &mut dyn Write) -> Result<ExitStatus, String> {
    match load(common, out).map_err(|e| e.to_string())?? {
        Loaded::Ok(..) => Ok(ExitStatus::Success),
        Loaded::Invalid => Ok(ExitStatus::InvalidWorkload),
    }
}

fn cmd_analyze(
    common: &CommonArgs,
    machine: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<ExitStatus, String> {
    let Loaded::Ok(w, _) = load(common, err).map_err(|e| e.to_string())?? else {
        return Ok(ExitStatus::InvalidWorkload);
    };
    let analysis = depgraph::analyze(&w);
    let written = if machine {
        serde_json::to_string_pretty(&analysis)
            .map_err(io::Error::other)
            .and_then(|s| writeln!(out, "{s}"))
    } else {
        write!(out, "{analysis}")
    };
    written.map_err(|e| e.to_string())?;
    Ok(ExitStatus::Success)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn write_results_jsonl<W: Write>(results: &[ResultPacket], mut out: W) -> io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn cmd_run(opts: &RunOptions, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus, String> {
    let Loaded::Ok(w, domains) = load(&opts.common, err).map_err(|e| e.to_string())?? else {
        return Ok(ExitStatus::InvalidWorkload);
    };
    let (trace, report) = match farm::run(&w, &domains, opts.sim_config()) {
        Ok(done) => done,
        Err(SimError::TickCapExceeded { cap, trace }) => {
            if let Some(path) = &opts.trace {
                write_file(path, |f| trace.write_jsonl(f))?;
            }
            let _ = writeln!(err, "error: tick cap {cap} exceeded");
            return Ok(ExitStatus::TickCap);
        }
        Err(e) => return Err(e.to_string()),
    };
    if let Some(path) = &opts.trace {
        write_file(path, |f| trace.write_jsonl(f))?;
    }
    if let Some(path) = &opts.out {
        write_file(path, |f| write_results_jsonl(&report.results, f))?;
    }
    let printed = if opts.machine {
        writeln!(out, "{}", report.to_json())
    } else {
        write!(out, "{report}")
    };
    printed.map_err(|e| e.to_string())?;
    if report.is_deadlock() {
        let _ = writeln!(err, "error: deadlock among {}", match &report.outcome {
            farm::Outcome::Deadlock { cycle } => cycle.join(", "),
            farm::Outcome::Completed => String::new(),
        });
        Ok(ExitStatus::Deadlock)
    } else {
        Ok(ExitStatus::Success)
    }
}
