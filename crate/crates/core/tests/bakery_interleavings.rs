mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_bakery, random_bakery, BakeryDriver, BakeryTally};

fn assert_clean(t: &BakeryTally) {
    assert_eq!(t.mutex_violations, 0, "{t:?}");
    assert_eq!(t.fcfs_violations, 0, "{t:?}");
    assert_eq!(t.stuck_states, 0, "{t:?}");
    assert!(t.entries > 0, "{t:?}");
}

#[test]
fn exhaustive_two_participants() {
    let t = exhaustive_bakery(2, 16);
    assert_eq!(t.runs, 1 << 16);
    assert_clean(&t);
}

#[test]
fn exhaustive_three_participants() {
    let t = exhaustive_bakery(3, 11);
    assert_eq!(t.runs, 3u64.pow(11));
    assert_clean(&t);
}

#[test]
fn random_interleavings_up_to_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA4E);
    let t = random_bakery(&mut rng, 10_000, 8, 200);
    assert_eq!(t.runs, 10_000);
    assert_clean(&t);
}

#[test]
fn identical_interleavings_are_identical() {
    let schedule = [0, 1, 2, 1, 0, 0, 2, 2, 1, 0, 1, 2, 0, 0, 1, 1, 2, 2, 2, 0];
    let run = || {
        let mut d = BakeryDriver::new(3);
        let mut tally = BakeryTally::default();
        let mut states = Vec::new();
        for &p in &schedule {
            d.act(p, &mut tally);
            states.push(d.state.clone());
        }
        states
    };
    assert_eq!(run(), run());
}

#[test]
fn released_participant_admits_the_next_ticket() {
    use fpufarm::bakery::{BakeryState, StepOutcome};
    let mut s = BakeryState::new(3).unwrap();
    for p in 0..3 {
        s.take_ticket(p).unwrap();
    }
    while s.step(0).unwrap() != StepOutcome::EnteredCritical {}
    assert_eq!(s.step(2).unwrap(), StepOutcome::Blocked);
    assert_eq!(s.step(1).unwrap(), StepOutcome::Blocked);
    s.release(0).unwrap();
    assert_eq!(s.step(2).unwrap(), StepOutcome::Advanced); // passes 0
    assert_eq!(s.step(2).unwrap(), StepOutcome::Blocked); // 1 is ahead
    assert_eq!(s.step(1).unwrap(), StepOutcome::Advanced);
    assert_eq!(s.step(1).unwrap(), StepOutcome::EnteredCritical);
}
