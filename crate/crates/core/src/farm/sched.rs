//! Priority with recency decay, and ready-queue selection.

use std::cmp::Reverse;

use super::state::RuntimeFunction;

/// Recency value still in effect at `now`: linear decay from the value
/// recorded at the last deschedule, floored at zero.
pub fn current_penalty(f: &RuntimeFunction, now: u64, decay: u64) -> u64 {
    match f.descheduled_at {
        None => f.penalty,
        Some(at) => f
            .penalty
            .saturating_sub(decay.saturating_mul(now.saturating_sub(at))),
    }
}

/// Programmed priority minus the current recency value.
pub fn effective_priority(f: &RuntimeFunction, now: u64, decay: u64) -> i64 {
    let penalty = i64::try_from(current_penalty(f, now, decay)).unwrap_or(i64::MAX);
    f.assigned.spec.base_priority.saturating_sub(penalty)
}

/// Picks the ready function with the highest effective priority, ties broken
/// by ticket then address. Returns `None` if the winner is not yet resident
/// and does not fit in `free_ls` units of local store.
pub fn select_next<'a>(
    ready: impl IntoIterator<Item = &'a RuntimeFunction>,
    now: u64,
    decay: u64,
    free_ls: u64,
) -> Option<&'a RuntimeFunction> {
    let winner = ready.into_iter().min_by_key(|f| {
        (
            Reverse(effective_priority(f, now, decay)),
            f.ticket.map(|t| (t.number, t.id)).unwrap_or((u64::MAX, usize::MAX)),
            f.assigned.address,
        )
    })?;
    (winner.resident || winner.assigned.spec.ls_units <= free_ls).then_some(winner)
}
