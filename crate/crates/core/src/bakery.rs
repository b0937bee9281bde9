//! Lamport's bakery algorithm as a steppable state machine.
//!
//! Each call to [`BakeryState::step`] performs one atomic action of one
//! participant, so an external driver controls the interleaving. The doorway
//! is coarse: entering it sets `choosing` and reads the maximum ticket in one
//! action; leaving it publishes `1 + max` and clears `choosing`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Doorway,
    /// Waiting room; `0..next` have already been checked.
    Scanning(usize),
    Critical,
}

/// Lexicographic `(number, id)` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ticket {
    pub number: u64,
    pub id: usize,
}

impl Ord for Ticket {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.number, self.id).cmp(&(other.number, other.id))
    }
}

impl PartialOrd for Ticket {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    /// An earlier ticket (or a participant still choosing) stands in the way;
    /// state unchanged.
    Blocked,
    EnteredCritical,
    AlreadyCritical,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BakeryError {
    #[error("bakery needs at least one participant")]
    NoParticipants,
    #[error("participant {index} out of range ({n} participants)")]
    OutOfRange { index: usize, n: usize },
    #[error("participant {0} is not in its critical section")]
    NotCritical(usize),
    #[error("participant {0} holds no ticket")]
    NoTicket(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BakeryState {
    choosing: Vec<bool>,
    number: Vec<u64>,
    phase: Vec<Phase>,
    /// Maximum read on doorway entry, published on doorway exit.
    observed_max: Vec<u64>,
}

impl BakeryState {
    pub fn new(n: usize) -> Result<Self, BakeryError> {
        if n == 0 {
            return Err(BakeryError::NoParticipants);
        }
        Ok(BakeryState {
            choosing: vec![false; n],
            number: vec![0; n],
            phase: vec![Phase::Idle; n],
            observed_max: vec![0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn phase(&self, p: usize) -> Phase {
        self.phase[p]
    }

    pub fn choosing(&self, p: usize) -> bool {
        self.choosing[p]
    }

    pub fn number(&self, p: usize) -> u64 {
        self.number[p]
    }

    pub fn ticket(&self, p: usize) -> Option<Ticket> {
        (self.number[p] > 0).then_some(Ticket {
            number: self.number[p],
            id: p,
        })
    }

    pub fn critical(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&p| self.phase[p] == Phase::Critical)
    }

    fn check(&self, p: usize) -> Result<(), BakeryError> {
        if p >= self.len() {
            Err(BakeryError::OutOfRange { index: p, n: self.len() })
        } else {
            Ok(())
        }
    }

    /// Advances `p` by one atomic action.
    pub fn step(&mut self, p: usize) -> Result<StepOutcome, BakeryError> {
        self.check(p)?;
        let n = self.len();
        match self.phase[p] {
            Phase::Idle => {
                self.choosing[p] = true;
                self.observed_max[p] = self.number.iter().copied().max().unwrap_or(0);
                self.phase[p] = Phase::Doorway;
                Ok(StepOutcome::Advanced)
            }
            Phase::Doorway => {
                self.number[p] = self.observed_max[p] + 1;
                self.choosing[p] = false;
                self.phase[p] = Phase::Scanning(0);
                Ok(StepOutcome::Advanced)
            }
            Phase::Scanning(mut j) => {
                if j == p {
                    j += 1;
                }
                if j < n {
                    let mine = Ticket { number: self.number[p], id: p };
                    let theirs = Ticket { number: self.number[j], id: j };
                    if self.choosing[j] || (theirs.number != 0 && theirs < mine) {
                        return Ok(StepOutcome::Blocked);
                    }
                    j += 1;
                    if j == p {
                        j += 1;
                    }
                }
                if j >= n {
                    self.phase[p] = Phase::Critical;
                    Ok(StepOutcome::EnteredCritical)
                } else {
                    self.phase[p] = Phase::Scanning(j);
                    Ok(StepOutcome::Advanced)
                }
            }
            Phase::Critical => Ok(StepOutcome::AlreadyCritical),
        }
    }

    /// Exit protocol: drops the ticket and returns to `Idle`.
    pub fn release(&mut self, p: usize) -> Result<(), BakeryError> {
        self.check(p)?;
        if self.phase[p] != Phase::Critical {
            return Err(BakeryError::NotCritical(p));
        }
        self.number[p] = 0;
        self.phase[p] = Phase::Idle;
        Ok(())
    }

    /// Leaves the waiting room without entering, dropping the ticket. Used by
    /// the farm, which consumes tickets as a FIFO key rather than a lock.
    pub fn withdraw(&mut self, p: usize) -> Result<(), BakeryError> {
        self.check(p)?;
        match self.phase[p] {
            Phase::Scanning(_) | Phase::Critical => {
                self.number[p] = 0;
                self.phase[p] = Phase::Idle;
                Ok(())
            }
            _ => Err(BakeryError::NoTicket(p)),
        }
    }

    /// Runs `p` through the doorway and returns its ticket.
    pub fn take_ticket(&mut self, p: usize) -> Result<Ticket, BakeryError> {
        self.check(p)?;
        while matches!(self.phase[p], Phase::Idle | Phase::Doorway) {
            self.step(p)?;
        }
        self.ticket(p).ok_or(BakeryError::NoTicket(p))
    }

    /// True if `p`'s next action would change the state.
    pub fn can_progress(&self, p: usize) -> bool {
        match self.phase[p] {
            Phase::Critical => true, // may release
            _ => !matches!(self.clone().step(p), Ok(StepOutcome::Blocked)),
        }
    }
}
