//! Integration unit: results arrive in completion order and leave in address
//! order, like an in-order commit buffer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funpiler::{Fid, IntegrationAddress};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultPacket {
    pub address: IntegrationAddress,
    pub fid: Fid,
    pub producer: String,
    pub completion_tick: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IntegrationError {
    #[error("address {0} submitted twice")]
    Duplicate(IntegrationAddress),
    #[error("address {address} outside program of size {size}")]
    OutOfRange { address: IntegrationAddress, size: usize },
    #[error("missing results for addresses {}", join(.0))]
    Missing(Vec<IntegrationAddress>),
}

fn join(addrs: &[IntegrationAddress]) -> String {
    addrs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Default)]
pub struct IntegrationBuffer {
    size: usize,
    next_expected: usize,
    pending: BTreeMap<usize, ResultPacket>,
    emitted: Vec<ResultPacket>,
}

impl IntegrationBuffer {
    pub fn new(program_size: usize) -> Self {
        IntegrationBuffer {
            size: program_size,
            ..Default::default()
        }
    }

    pub fn next_expected(&self) -> IntegrationAddress {
        IntegrationAddress(self.next_expected)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn emitted(&self) -> &[ResultPacket] {
        &self.emitted
    }

    /// Buffers `p` and returns whatever consecutive run it releases.
    pub fn submit(&mut self, p: ResultPacket) -> Result<Vec<ResultPacket>, IntegrationError> {
        let addr = p.address.0;
        if addr >= self.size {
            return Err(IntegrationError::OutOfRange {
                address: p.address,
                size: self.size,
            });
        }
        if addr < self.next_expected || self.pending.contains_key(&addr) {
            return Err(IntegrationError::Duplicate(p.address));
        }
        self.pending.insert(addr, p);
        let start = self.emitted.len();
        while let Some(next) = self.pending.remove(&self.next_expected) {
            self.emitted.push(next);
            self.next_expected += 1;
        }
        Ok(self.emitted[start..].to_vec())
    }

    /// All results in address order, or the addresses that never arrived.
    pub fn finalize(&self) -> Result<Vec<ResultPacket>, IntegrationError> {
        if self.emitted.len() == self.size {
            return Ok(self.emitted.clone());
        }
        let missing = (self.next_expected..self.size)
            .filter(|a| !self.pending.contains_key(a))
            .map(IntegrationAddress)
            .collect();
        Err(IntegrationError::Missing(missing))
    }
}
