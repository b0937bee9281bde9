//! Workload description: functions, dependencies, wait points and signals.
//!
//! A workload file is line-oriented, one directive per line:
//!
//! ```text
//! function <name> domain=<LETTER> cost=<int> [priority=<int>] [ls=<int>]
//! wait <name> at=<int> for=<name>
//! wait <name> at=<int> io=<int>
//! dep <from> <to> type=<C|Co> sync=<yes|no>
//! signal <stop|continue> <name> at=<int>
//! ```
//!
//! `#` starts a comment. Function order in the file is program order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph;
use crate::funpiler::DomainConfig;

/// Single uppercase letter naming a processor domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "char", into = "char")]
pub struct Domain(char);

impl Domain {
    pub fn new(letter: char) -> Result<Self, InvalidDomain> {
        if letter.is_ascii_uppercase() {
            Ok(Domain(letter))
        } else {
            Err(InvalidDomain(letter.to_string()))
        }
    }

    pub fn letter(self) -> char {
        self.0
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("domain must be a single uppercase letter, got `{0}`")]
pub struct InvalidDomain(pub String);

impl TryFrom<char> for Domain {
    type Error = InvalidDomain;
    fn try_from(c: char) -> Result<Self, Self::Error> {
        Domain::new(c)
    }
}

impl From<Domain> for char {
    fn from(d: Domain) -> char {
        d.0
    }
}

impl FromStr for Domain {
    type Err = InvalidDomain;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Domain::new(c),
            _ => Err(InvalidDomain(s.to_string())),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaitTarget {
    /// Block until the named peer's result message arrives.
    Peer(String),
    /// Block for a fixed number of ticks.
    Io(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaitPoint {
    /// Cycles of execution completed before blocking.
    pub at_cycle: u64,
    pub target: WaitTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    pub domain: Domain,
    pub cost: u64,
    pub base_priority: i64,
    pub ls_units: u64,
    pub wait_points: Vec<WaitPoint>,
}

impl FunctionSpec {
    pub fn new(name: impl Into<String>, domain: Domain, cost: u64) -> Self {
        FunctionSpec {
            name: name.into(),
            domain,
            cost,
            base_priority: 0,
            ls_units: 1,
            wait_points: Vec::new(),
        }
    }

    pub fn with_priority(mut self, priority: i64) -> Self {
        self.base_priority = priority;
        self
    }

    pub fn with_ls_units(mut self, units: u64) -> Self {
        self.ls_units = units;
        self
    }

    pub fn with_wait(mut self, at_cycle: u64, target: WaitTarget) -> Self {
        self.wait_points.push(WaitPoint { at_cycle, target });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepKind {
    Communication,
    Cooperation,
}

impl DepKind {
    /// Short label: `C` or `Co`.
    pub fn code(self) -> &'static str {
        match self {
            DepKind::Communication => "C",
            DepKind::Cooperation => "Co",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyDecl {
    pub from: String,
    pub to: String,
    pub kind: DepKind,
    pub sync: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalKind {
    Stop,
    Continue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDecl {
    pub kind: SignalKind,
    pub target: String,
    pub at_tick: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    /// Program order.
    pub functions: Vec<FunctionSpec>,
    pub dependencies: Vec<DependencyDecl>,
    pub signals: Vec<SignalDecl>,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Program-order index of a function by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.name.as_str()).collect()
    }

    /// Renders the workload in the file grammar accepted by [`parse_workload`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for func in &self.functions {
            writeln!(
                f,
                "function {} domain={} cost={} priority={} ls={}",
                func.name, func.domain, func.cost, func.base_priority, func.ls_units
            )?;
        }
        for func in &self.functions {
            for wp in &func.wait_points {
                match &wp.target {
                    WaitTarget::Peer(peer) => {
                        writeln!(f, "wait {} at={} for={}", func.name, wp.at_cycle, peer)?
                    }
                    WaitTarget::Io(d) => {
                        writeln!(f, "wait {} at={} io={}", func.name, wp.at_cycle, d)?
                    }
                }
            }
        }
        for dep in &self.dependencies {
            writeln!(
                f,
                "dep {} {} type={} sync={}",
                dep.from,
                dep.to,
                dep.kind.code(),
                if dep.sync { "yes" } else { "no" }
            )?;
        }
        for sig in &self.signals {
            let kind = match sig.kind {
                SignalKind::Stop => "stop",
                SignalKind::Continue => "continue",
            };
            writeln!(f, "signal {} {} at={}", kind, sig.target, sig.at_tick)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate function name `{0}`")]
    DuplicateFunction(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        line,
        kind: ParseErrorKind::Syntax(msg.into()),
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '\''))
}

/// `key=value` options following the positional tokens of a directive.
struct Options<'a> {
    line: usize,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Options<'a> {
    fn parse(line: usize, tokens: &[&'a str], allowed: &[&str]) -> Result<Self, ParseError> {
        let mut values = BTreeMap::new();
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected key=value, got `{tok}`")))?;
            if !allowed.contains(&key) {
                return Err(syntax(line, format!("unexpected option `{key}`")));
            }
            if values.insert(key, value).is_some() {
                return Err(syntax(line, format!("option `{key}` given twice")));
            }
        }
        Ok(Options { line, values })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.values.get(key).copied()
    }

    fn required(&self, key: &str) -> Result<&'a str, ParseError> {
        self.get(key)
            .ok_or_else(|| syntax(self.line, format!("missing `{key}=`")))
    }

    fn int<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, ParseError> {
        raw.parse()
            .map_err(|_| syntax(self.line, format!("`{key}` must be an integer, got `{raw}`")))
    }
}

fn name_token(line: usize, tok: Option<&&str>, what: &str) -> Result<String, ParseError> {
    match tok {
        Some(t) if is_identifier(t) => Ok(t.to_string()),
        Some(t) => Err(syntax(line, format!("invalid {what} `{t}`"))),
        None => Err(syntax(line, format!("missing {what}"))),
    }
}

fn positive(line: usize, key: &str, v: u64) -> Result<u64, ParseError> {
    if v == 0 {
        Err(syntax(line, format!("{key} must be >= 1")))
    } else {
        Ok(v)
    }
}

/// Parses workload-file text. Waits may appear anywhere in the file; they are
/// attached to their owner in file order once all functions are known.
pub fn parse_workload(text: &str) -> Result<Workload, ParseError> {
    let mut w = Workload::default();
    let mut waits: Vec<(usize, String, WaitPoint)> = Vec::new();
    let mut seen = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((&directive, rest)) = tokens.split_first() else {
            continue;
        };
        match directive {
            "function" => {
                let name = name_token(line, rest.first(), "function name")?;
                let opts = Options::parse(line, &rest[1..], &["domain", "cost", "priority", "ls"])?;
                let domain: Domain = opts
                    .required("domain")?
                    .parse()
                    .map_err(|e: InvalidDomain| syntax(line, e.to_string()))?;
                let cost = positive(line, "cost", opts.int("cost", opts.required("cost")?)?)?;
                let base_priority = match opts.get("priority") {
                    Some(v) => opts.int("priority", v)?,
                    None => 0,
                };
                let ls_units = match opts.get("ls") {
                    Some(v) => positive(line, "ls", opts.int("ls", v)?)?,
                    None => 1,
                };
                if !seen.insert(name.clone()) {
                    return Err(ParseError {
                        line,
                        kind: ParseErrorKind::DuplicateFunction(name),
                    });
                }
                w.functions.push(FunctionSpec {
                    name,
                    domain,
                    cost,
                    base_priority,
                    ls_units,
                    wait_points: Vec::new(),
                });
            }
            "wait" => {
                let owner = name_token(line, rest.first(), "function name")?;
                let opts = Options::parse(line, &rest[1..], &["at", "for", "io"])?;
                let at_cycle = opts.int("at", opts.required("at")?)?;
                let target = match (opts.get("for"), opts.get("io")) {
                    (Some(peer), None) => {
                        if !is_identifier(peer) {
                            return Err(syntax(line, format!("invalid function name `{peer}`")));
                        }
                        WaitTarget::Peer(peer.to_string())
                    }
                    (None, Some(d)) => WaitTarget::Io(positive(line, "io", opts.int("io", d)?)?),
                    _ => return Err(syntax(line, "wait needs exactly one of `for=` or `io=`")),
                };
                waits.push((line, owner, WaitPoint { at_cycle, target }));
            }
            "dep" => {
                let from = name_token(line, rest.first(), "dependency source")?;
                let to = name_token(line, rest.get(1), "dependency target")?;
                let opts = Options::parse(line, rest.get(2..).unwrap_or(&[]), &["type", "sync"])?;
                let kind = match opts.required("type")? {
                    "C" => DepKind::Communication,
                    "Co" => DepKind::Cooperation,
                    other => return Err(syntax(line, format!("type must be C or Co, got `{other}`"))),
                };
                let sync = match opts.required("sync")? {
                    "yes" => true,
                    "no" => false,
                    other => return Err(syntax(line, format!("sync must be yes or no, got `{other}`"))),
                };
                w.dependencies.push(DependencyDecl { from, to, kind, sync });
            }
            "signal" => {
                let kind = match rest.first() {
                    Some(&"stop") => SignalKind::Stop,
                    Some(&"continue") => SignalKind::Continue,
                    Some(other) => {
                        return Err(syntax(line, format!("signal must be stop or continue, got `{other}`")))
                    }
                    None => return Err(syntax(line, "missing signal kind")),
                };
                let target = name_token(line, rest.get(1), "signal target")?;
                let opts = Options::parse(line, rest.get(2..).unwrap_or(&[]), &["at"])?;
                let at_tick = opts.int("at", opts.required("at")?)?;
                w.signals.push(SignalDecl { kind, target, at_tick });
            }
            other => {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::UnknownDirective(other.to_string()),
                })
            }
        }
    }

    for (line, owner, wp) in waits {
        let func = w
            .functions
            .iter_mut()
            .find(|f| f.name == owner)
            .ok_or_else(|| syntax(line, format!("wait for undeclared function `{owner}`")))?;
        func.wait_points.push(wp);
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "error: {}", self.message),
            Severity::Warning => write!(f, "warning: {}", self.message),
        }
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Checks every workload invariant against `cfg`. Errors first in declaration
/// order, then sync-cycle warnings.
pub fn validate(w: &Workload, cfg: &DomainConfig) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut names = BTreeSet::new();

    for f in &w.functions {
        if !is_identifier(&f.name) {
            diags.push(Diagnostic::error(format!("invalid function name `{}`", f.name)));
        }
        if !names.insert(f.name.as_str()) {
            diags.push(Diagnostic::error(format!("duplicate function name `{}`", f.name)));
        }
    }

    for f in &w.functions {
        if cfg.fpu_count(f.domain) == 0 {
            diags.push(Diagnostic::error(format!(
                "function `{}`: unknown domain `{}`",
                f.name, f.domain
            )));
        }
        if f.cost == 0 {
            diags.push(Diagnostic::error(format!("function `{}`: cost must be >= 1", f.name)));
        }
        if f.ls_units == 0 {
            diags.push(Diagnostic::error(format!("function `{}`: ls must be >= 1", f.name)));
        }
        for pair in f.wait_points.windows(2) {
            if pair[0].at_cycle >= pair[1].at_cycle {
                diags.push(Diagnostic::error(format!(
                    "function `{}`: wait points must be strictly ascending (at={} then at={})",
                    f.name, pair[0].at_cycle, pair[1].at_cycle
                )));
            }
        }
        for wp in &f.wait_points {
            if wp.at_cycle >= f.cost {
                diags.push(Diagnostic::error(format!(
                    "function `{}`: wait at={} is not below cost {}",
                    f.name, wp.at_cycle, f.cost
                )));
            }
            match &wp.target {
                WaitTarget::Peer(peer) if peer == &f.name => diags.push(Diagnostic::error(format!(
                    "function `{}`: cannot wait for itself",
                    f.name
                ))),
                WaitTarget::Peer(peer) if !names.contains(peer.as_str()) => {
                    diags.push(Diagnostic::error(format!(
                        "function `{}`: wait for unknown function `{peer}`",
                        f.name
                    )))
                }
                WaitTarget::Io(0) => diags.push(Diagnostic::error(format!(
                    "function `{}`: io wait must be >= 1",
                    f.name
                ))),
                _ => {}
            }
        }
    }

    let mut pairs = BTreeSet::new();
    for dep in &w.dependencies {
        let mut resolved = true;
        for end in [&dep.from, &dep.to] {
            if !names.contains(end.as_str()) {
                diags.push(Diagnostic::error(format!(
                    "dep {} {}: unknown function `{end}`",
                    dep.from, dep.to
                )));
                resolved = false;
            }
        }
        if resolved && dep.from == dep.to {
            diags.push(Diagnostic::error(format!(
                "dep {} {}: a function cannot depend on itself",
                dep.from, dep.to
            )));
        }
        if !pairs.insert((dep.from.as_str(), dep.to.as_str())) {
            diags.push(Diagnostic::error(format!(
                "dep {} {}: declared more than once",
                dep.from, dep.to
            )));
        }
    }

    let mut per_target: BTreeMap<&str, Vec<&SignalDecl>> = BTreeMap::new();
    for sig in &w.signals {
        if names.contains(sig.target.as_str()) {
            per_target.entry(sig.target.as_str()).or_default().push(sig);
        } else {
            diags.push(Diagnostic::error(format!(
                "signal for unknown function `{}`",
                sig.target
            )));
        }
    }
    for (target, mut sigs) in per_target {
        sigs.sort_by_key(|s| s.at_tick);
        for (i, sig) in sigs.iter().enumerate() {
            let expected = if i % 2 == 0 { SignalKind::Stop } else { SignalKind::Continue };
            if sig.kind != expected {
                diags.push(Diagnostic::error(format!(
                    "function `{target}`: signals must alternate stop/continue starting with stop (tick {})",
                    sig.at_tick
                )));
                break;
            }
            if i > 0 && sigs[i - 1].at_tick == sig.at_tick {
                diags.push(Diagnostic::error(format!(
                    "function `{target}`: two signals at tick {}",
                    sig.at_tick
                )));
                break;
            }
        }
    }

    if !has_errors(&diags) {
        for cycle in depgraph::find_sync_cycles(w) {
            let mut path = cycle.join(" -> ");
            path.push_str(" -> ");
            path.push_str(&cycle[0]);
            diags.push(Diagnostic::warning(format!(
                "cycle among synchronized dependencies: {path}"
            )));
        }
    }
    diags
}
