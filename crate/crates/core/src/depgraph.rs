//! Dependency analysis: pair relations, combination counting, adjacency and
//! labeled dependency matrices, and synchronized-cycle detection.
//!
//! Matrices are indexed 0-based internally. Reports name cells 1-based, so the
//! cell at `(0, 1)` is printed as `A(1,2)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::{DepKind, Workload};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DepGraphError {
    #[error("C({n},{k}) is undefined: k exceeds n")]
    KExceedsN { n: u64, k: u64 },
    #[error("relationship space needs at least two functions, got {0}")]
    TooFewFunctions(u64),
    #[error("pair ({0},{0}) is a self-loop")]
    SelfPair(usize),
    #[error("index {index} out of range for {n} functions")]
    OutOfRange { index: usize, n: usize },
}

/// Binomial coefficient C(n, k), exact for every result that fits in `u64`
/// (all of n <= 62).
pub fn combinations(n: u64, k: u64) -> Result<u64, DepGraphError> {
    if k > n {
        return Err(DepGraphError::KExceedsN { n, k });
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) since acc = C(n, i).
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    Ok(acc as u64)
}

/// Number of edges of a complete simple graph on `n` nodes.
pub fn edge_count(n: u64) -> u64 {
    (u128::from(n) * u128::from(n.saturating_sub(1)) / 2) as u64
}

/// Four relation kinds per unordered pair.
pub fn relationship_space(n: u64) -> Result<u64, DepGraphError> {
    if n < 2 {
        return Err(DepGraphError::TooFewFunctions(n));
    }
    Ok(4 * combinations(n, 2)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    n: usize,
    cells: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn zeros(n: usize) -> Self {
        AdjacencyMatrix {
            n,
            cells: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.n + j]
    }

    /// Sets `(i, j)` to 1. Diagonal entries are ignored.
    pub fn set(&mut self, i: usize, j: usize) {
        if i != j {
            self.cells[i * self.n + j] = 1;
        }
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.cells.chunks(self.n.max(1)).take(self.n).map(<[u8]>::to_vec).collect()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j) == 1)
    }
}

/// Label of a dependency matrix cell, rendered as `S,Co`, `S,C`, `Co` or `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepLabel {
    pub sync: bool,
    pub kind: DepKind,
}

impl fmt::Display for DepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sync {
            write!(f, "S,{}", self.kind.code())
        } else {
            f.write_str(self.kind.code())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyMatrix {
    n: usize,
    cells: Vec<Option<DepLabel>>,
}

impl DependencyMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<DepLabel> {
        self.cells[i * self.n + j]
    }

    /// Cell labels as text, blank where no dependency exists.
    pub fn text_rows(&self) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.get(i, j).map(|l| l.to_string()).unwrap_or_default())
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairRelation {
    /// `i` depends on `j`.
    Forward,
    /// `j` depends on `i`.
    Backward,
    Bidirectional,
    Null,
}

impl PairRelation {
    pub fn arrow(self) -> &'static str {
        match self {
            PairRelation::Forward => "->",
            PairRelation::Backward => "<-",
            PairRelation::Bidirectional => "<->",
            PairRelation::Null => "NULL",
        }
    }
}

/// Rows and columns follow program order; dependencies naming unknown
/// functions are skipped.
pub fn build_matrices(w: &Workload) -> (AdjacencyMatrix, DependencyMatrix) {
    let n = w.len();
    let mut adj = AdjacencyMatrix::zeros(n);
    let mut dep = DependencyMatrix {
        n,
        cells: vec![None; n * n],
    };
    for d in &w.dependencies {
        let (Some(i), Some(j)) = (w.index_of(&d.from), w.index_of(&d.to)) else {
            continue;
        };
        if i == j {
            continue;
        }
        adj.set(i, j);
        dep.cells[i * n + j] = Some(DepLabel {
            sync: d.sync,
            kind: d.kind,
        });
    }
    (adj, dep)
}

pub fn classify_pair(m: &AdjacencyMatrix, i: usize, j: usize) -> Result<PairRelation, DepGraphError> {
    for index in [i, j] {
        if index >= m.n() {
            return Err(DepGraphError::OutOfRange { index, n: m.n() });
        }
    }
    if i == j {
        return Err(DepGraphError::SelfPair(i));
    }
    Ok(match (m.get(i, j), m.get(j, i)) {
        (1, 0) => PairRelation::Forward,
        (0, 1) => PairRelation::Backward,
        (1, 1) => PairRelation::Bidirectional,
        _ => PairRelation::Null,
    })
}

/// Every elementary cycle of `m`, each rotated to start at its smallest node
/// and the list sorted lexicographically by node sequence.
pub fn elementary_cycles(m: &AdjacencyMatrix) -> Vec<Vec<usize>> {
    fn extend(
        m: &AdjacencyMatrix,
        start: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().expect("path starts non-empty");
        for next in m.successors(last) {
            if next == start {
                out.push(path.clone());
            } else if next > start && !on_path[next] {
                on_path[next] = true;
                path.push(next);
                extend(m, start, path, on_path, out);
                path.pop();
                on_path[next] = false;
            }
        }
    }

    let mut out = Vec::new();
    let mut on_path = vec![false; m.n()];
    for start in 0..m.n() {
        let mut path = vec![start];
        on_path[start] = true;
        extend(m, start, &mut path, &mut on_path, &mut out);
        on_path[start] = false;
    }
    out.sort();
    out
}

/// Elementary cycles among `sync=yes` dependencies, by function name.
pub fn find_sync_cycles(w: &Workload) -> Vec<Vec<String>> {
    let mut sync_only = AdjacencyMatrix::zeros(w.len());
    for d in w.dependencies.iter().filter(|d| d.sync) {
        if let (Some(i), Some(j)) = (w.index_of(&d.from), w.index_of(&d.to)) {
            sync_only.set(i, j);
        }
    }
    elementary_cycles(&sync_only)
        .into_iter()
        .map(|c| c.into_iter().map(|i| w.functions[i].name.clone()).collect())
        .collect()
}

/// One unordered pair as reported, with 1-based matrix coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub row: usize,
    pub col: usize,
    pub a: String,
    pub b: String,
    pub relation: PairRelation,
}

/// Everything the `analyze` command reports about a workload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    pub functions: Vec<String>,
    pub adjacency: Vec<Vec<u8>>,
    pub dependency: Vec<Vec<String>>,
    pub pairs: Vec<PairReport>,
    /// C(n, 2); absent below two functions.
    pub combinations: Option<u64>,
    pub edge_count: u64,
    pub relationship_space: Option<u64>,
    pub sync_cycles: Vec<Vec<String>>,
}

pub fn analyze(w: &Workload) -> Analysis {
    let (adj, dep) = build_matrices(w);
    let n = w.len();
    let names: Vec<String> = w.functions.iter().map(|f| f.name.clone()).collect();
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| PairReport {
            row: i + 1,
            col: j + 1,
            a: names[i].clone(),
            b: names[j].clone(),
            relation: classify_pair(&adj, i, j).expect("distinct in-range pair"),
        })
        .collect();
    Analysis {
        adjacency: adj.rows(),
        dependency: dep.text_rows(),
        pairs,
        combinations: combinations(n as u64, 2).ok(),
        edge_count: edge_count(n as u64),
        relationship_space: relationship_space(n as u64).ok(),
        sync_cycles: find_sync_cycles(w),
        functions: names,
    }
}

fn write_matrix(f: &mut fmt::Formatter<'_>, names: &[String], rows: &[Vec<String>]) -> fmt::Result {
    let width = names
        .iter()
        .map(String::len)
        .chain(rows.iter().flatten().map(String::len))
        .max()
        .unwrap_or(1)
        .max(1);
    write!(f, "{:width$}", "")?;
    for name in names {
        write!(f, " {name:>width$}")?;
    }
    writeln!(f)?;
    for (name, row) in names.iter().zip(rows) {
        write!(f, "{name:width$}")?;
        for cell in row {
            write!(f, " {cell:>width$}")?;
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let adjacency: Vec<Vec<String>> = self
            .adjacency
            .iter()
            .map(|r| r.iter().map(u8::to_string).collect())
            .collect();
        writeln!(f, "adjacency matrix:")?;
        write_matrix(f, &self.functions, &adjacency)?;
        writeln!(f)?;
        writeln!(f, "dependency matrix:")?;
        write_matrix(f, &self.functions, &self.dependency)?;
        writeln!(f)?;
        writeln!(f, "pairs:")?;
        for p in &self.pairs {
            writeln!(
                f,
                "  A({},{}) {} {} {} ({:?})",
                p.row,
                p.col,
                p.a,
                p.relation.arrow(),
                p.b,
                p.relation
            )?;
        }
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_else(|| "n/a".into());
        writeln!(f)?;
        writeln!(f, "combinations C({},2)={}", self.functions.len(), opt(self.combinations))?;
        writeln!(f, "edge_count={}", self.edge_count)?;
        writeln!(f, "relationship_space={}", opt(self.relationship_space))?;
        if self.sync_cycles.is_empty() {
            writeln!(f, "sync_cycles=none")
        } else {
            for c in &self.sync_cycles {
                writeln!(f, "sync_cycle={} -> {}", c.join(" -> "), c[0])?;
            }
            Ok(())
        }
    }
}
