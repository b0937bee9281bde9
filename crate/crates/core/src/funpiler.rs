//! Fine decoding: function IDs, integration addresses and feed queues.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::{Domain, FunctionSpec, Workload};

/// Function ID: domain letter plus 1-based ordinal within that domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Fid {
    pub domain: Domain,
    pub ordinal: u32,
}

impl fmt::Display for Fid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FID-{}{}", self.domain, self.ordinal)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("malformed FID `{0}`")]
pub struct InvalidFid(pub String);

impl FromStr for Fid {
    type Err = InvalidFid;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidFid(s.to_string());
        let rest = s.strip_prefix("FID-").ok_or_else(bad)?;
        let mut chars = rest.chars();
        let domain = chars.next().and_then(|c| Domain::new(c).ok()).ok_or_else(bad)?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let ordinal: u32 = digits.parse().map_err(|_| bad())?;
        if ordinal == 0 {
            return Err(bad());
        }
        Ok(Fid { domain, ordinal })
    }
}

impl TryFrom<String> for Fid {
    type Error = InvalidFid;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Fid> for String {
    fn from(f: Fid) -> String {
        f.to_string()
    }
}

/// 0-based program-order position used to re-align results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntegrationAddress(pub usize);

impl fmt::Display for IntegrationAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A processor unit: its domain and 0-based index among that domain's units.
/// Printed as e.g. `G0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FpuId {
    pub domain: Domain,
    pub index: usize,
}

impl fmt::Display for FpuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.domain, self.index)
    }
}

impl FromStr for FpuId {
    type Err = InvalidFid;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidFid(s.to_string());
        let mut chars = s.chars();
        let domain = chars.next().and_then(|c| Domain::new(c).ok()).ok_or_else(bad)?;
        let index = chars.as_str().parse().map_err(|_| bad())?;
        Ok(FpuId { domain, index })
    }
}

impl TryFrom<String> for FpuId {
    type Error = InvalidFid;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FpuId> for String {
    fn from(f: FpuId) -> String {
        f.to_string()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FunpilerError {
    #[error("domain `{0}` must map to at least one FPU")]
    EmptyDomain(Domain),
    #[error("domain configuration needs at least one FPU")]
    NoFpus,
    #[error("function `{name}`: no FPU hosts domain `{domain}`")]
    UnknownDomain { name: String, domain: Domain },
}

/// Domain letter → number of FPUs hosting it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainConfig {
    counts: BTreeMap<Domain, usize>,
}

/// Graphics, lighting, physics, FFT, matrix, cryptography, scientific, business.
pub const DEFAULT_DOMAINS: [char; 8] = ['G', 'L', 'P', 'F', 'M', 'C', 'S', 'B'];

impl Default for DomainConfig {
    fn default() -> Self {
        let counts = DEFAULT_DOMAINS
            .iter()
            .map(|&c| (Domain::new(c).expect("uppercase"), 1))
            .collect();
        DomainConfig { counts }
    }
}

impl DomainConfig {
    pub fn new(counts: impl IntoIterator<Item = (Domain, usize)>) -> Result<Self, FunpilerError> {
        let counts: BTreeMap<_, _> = counts.into_iter().collect();
        if let Some((&d, _)) = counts.iter().find(|(_, &n)| n == 0) {
            return Err(FunpilerError::EmptyDomain(d));
        }
        if counts.is_empty() {
            return Err(FunpilerError::NoFpus);
        }
        Ok(DomainConfig { counts })
    }

    /// Default eight domains with `overrides` merged on top.
    pub fn with_overrides(
        self,
        overrides: impl IntoIterator<Item = (Domain, usize)>,
    ) -> Result<Self, FunpilerError> {
        let mut counts = self.counts;
        counts.extend(overrides);
        DomainConfig::new(counts)
    }

    pub fn fpu_count(&self, domain: Domain) -> usize {
        self.counts.get(&domain).copied().unwrap_or(0)
    }

    pub fn total_fpus(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn domains(&self) -> impl Iterator<Item = (Domain, usize)> + '_ {
        self.counts.iter().map(|(&d, &n)| (d, n))
    }

    /// Every FPU, ordered by domain letter then index.
    pub fn fpus(&self) -> Vec<FpuId> {
        self.counts
            .iter()
            .flat_map(|(&domain, &n)| (0..n).map(move |index| FpuId { domain, index }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignedFunction {
    pub spec: FunctionSpec,
    pub fid: Fid,
    pub address: IntegrationAddress,
    pub target_fpu: FpuId,
}

/// Assigns FIDs, addresses and target FPUs in program order. Within a domain
/// hosted by `k` FPUs, the function with ordinal `o` goes to unit `(o-1) mod k`.
pub fn assign(w: &Workload, cfg: &DomainConfig) -> Result<Vec<AssignedFunction>, FunpilerError> {
    let mut ordinals: BTreeMap<Domain, u32> = BTreeMap::new();
    w.functions
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let k = cfg.fpu_count(spec.domain);
            if k == 0 {
                return Err(FunpilerError::UnknownDomain {
                    name: spec.name.clone(),
                    domain: spec.domain,
                });
            }
            let ordinal = ordinals.entry(spec.domain).or_insert(0);
            *ordinal += 1;
            Ok(AssignedFunction {
                spec: spec.clone(),
                fid: Fid {
                    domain: spec.domain,
                    ordinal: *ordinal,
                },
                address: IntegrationAddress(i),
                target_fpu: FpuId {
                    domain: spec.domain,
                    index: (*ordinal as usize - 1) % k,
                },
            })
        })
        .collect()
}

/// Per-FPU queues of addresses, in program order.
pub type FeedQueues = BTreeMap<FpuId, Vec<IntegrationAddress>>;

/// Pushes each assigned function onto its target FPU's queue. Every FPU in
/// `cfg` gets an entry, possibly empty.
pub fn feed_queues(assigned: &[AssignedFunction], cfg: &DomainConfig) -> FeedQueues {
    let mut queues: FeedQueues = cfg.fpus().into_iter().map(|id| (id, Vec::new())).collect();
    for af in assigned {
        queues.entry(af.target_fpu).or_default().push(af.address);
    }
    queues
}
