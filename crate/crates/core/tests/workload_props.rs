mod common;

use proptest::prelude::*;

use fpufarm::funpiler::DomainConfig;
use fpufarm::workload::{
    self, parse_workload, validate, DepKind, DependencyDecl, Domain, FunctionSpec, SignalDecl,
    SignalKind, WaitPoint, WaitTarget, Workload,
};

fn valid_workload() -> impl Strategy<Value = Workload> {
    let letters = prop::sample::select(vec!['G', 'L', 'P', 'F', 'M', 'C', 'S', 'B']);
    let func = (letters, 1u64..50, -20i64..20, 1u64..6);
    prop::collection::vec(func, 0..8).prop_flat_map(|fns| {
        let n = fns.len();
        let waits = prop::collection::vec(
            prop::collection::vec((any::<bool>(), 0usize..8, 1u64..9), 0..3),
            n,
        );
        let deps = prop::collection::vec((0usize..8, 0usize..8, any::<bool>(), any::<bool>()), 0..10);
        let sigs = prop::collection::vec((0usize..8, 0u64..100, 1u64..50), 0..3);
        (Just(fns), waits, deps, sigs).prop_map(move |(fns, waits, deps, sigs)| {
            let mut w = Workload::default();
            for (i, (letter, cost, priority, ls)) in fns.iter().enumerate() {
                let mut f = FunctionSpec::new(format!("fn{i}"), Domain::new(*letter).unwrap(), *cost)
                    .with_priority(*priority)
                    .with_ls_units(*ls);
                let mut at = 0;
                for &(peer, other, dur) in &waits[i] {
                    if at >= *cost {
                        break;
                    }
                    let target = if peer && n > 1 {
                        WaitTarget::Peer(format!("fn{}", (i + 1 + other % (n - 1)) % n))
                    } else {
                        WaitTarget::Io(dur)
                    };
                    f.wait_points.push(WaitPoint { at_cycle: at, target });
                    at += dur;
                }
                w.functions.push(f);
            }
            if n > 1 {
                for (a, b, co, sync) in deps {
                    let (a, b) = (a % n, b % n);
                    let (from, to) = (format!("fn{a}"), format!("fn{b}"));
                    if a == b || w.dependencies.iter().any(|d| d.from == from && d.to == to) {
                        continue;
                    }
                    let kind = if co { DepKind::Cooperation } else { DepKind::Communication };
                    w.dependencies.push(DependencyDecl { from, to, kind, sync });
                }
            }
            if n > 0 {
                for (t, at, gap) in sigs {
                    let target = format!("fn{}", t % n);
                    if w.signals.iter().any(|s| s.target == target) {
                        continue;
                    }
                    w.signals.push(SignalDecl { kind: SignalKind::Stop, target: target.clone(), at_tick: at });
                    w.signals.push(SignalDecl { kind: SignalKind::Continue, target, at_tick: at + gap });
                }
            }
            w
        })
    })
}

#[derive(Debug, Clone)]
enum Corruption {
    ZeroCost,
    ZeroLs,
    WaitPastCost,
    SelfWait,
    UnknownPeer,
    SelfDep,
    DuplicateName,
    ContinueFirst,
    UnknownDomain,
}

fn corruption() -> impl Strategy<Value = Corruption> {
    prop_oneof![
        Just(Corruption::ZeroCost),
        Just(Corruption::ZeroLs),
        Just(Corruption::WaitPastCost),
        Just(Corruption::SelfWait),
        Just(Corruption::UnknownPeer),
        Just(Corruption::SelfDep),
        Just(Corruption::DuplicateName),
        Just(Corruption::ContinueFirst),
        Just(Corruption::UnknownDomain),
    ]
}

fn corrupt(mut w: Workload, c: &Corruption) -> Workload {
    if w.functions.is_empty() {
        w.functions.push(FunctionSpec::new("seed", Domain::new('G').unwrap(), 5));
    }
    let f = &mut w.functions[0];
    match c {
        Corruption::ZeroCost => f.cost = 0,
        Corruption::ZeroLs => f.ls_units = 0,
        Corruption::WaitPastCost => {
            f.wait_points.clear();
            f.wait_points.push(WaitPoint { at_cycle: f.cost, target: WaitTarget::Io(1) });
        }
        Corruption::SelfWait => {
            f.wait_points.clear();
            f.wait_points.push(WaitPoint { at_cycle: 0, target: WaitTarget::Peer(f.name.clone()) });
        }
        Corruption::UnknownPeer => {
            f.wait_points.clear();
            f.wait_points.push(WaitPoint { at_cycle: 0, target: WaitTarget::Peer("ghost".into()) });
        }
        Corruption::SelfDep => {
            let name = f.name.clone();
            w.dependencies.push(DependencyDecl { from: name.clone(), to: name, kind: DepKind::Communication, sync: false });
        }
        Corruption::DuplicateName => {
            let dup = f.clone();
            w.functions.push(dup);
        }
        Corruption::ContinueFirst => {
            let target = f.name.clone();
            w.signals.retain(|s| s.target != target);
            w.signals.push(SignalDecl { kind: SignalKind::Continue, target, at_tick: 3 });
        }
        Corruption::UnknownDomain => f.domain = Domain::new('Q').unwrap(),
    }
    w
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(w in valid_workload()) {
        let text = w.to_text();
        prop_assert_eq!(parse_workload(&text).unwrap(), w);
    }

    #[test]
    fn generated_workloads_have_no_errors(w in valid_workload()) {
        let diags = validate(&w, &DomainConfig::default());
        prop_assert!(!workload::has_errors(&diags), "{:?}", diags);
    }

    #[test]
    fn any_broken_invariant_is_an_error(w in valid_workload(), c in corruption()) {
        let broken = corrupt(w, &c);
        let diags = validate(&broken, &DomainConfig::default());
        prop_assert!(workload::has_errors(&diags), "{:?} not caught", c);
    }

    #[test]
    fn program_order_is_declaration_order(names in prop::collection::btree_set("[a-z][a-z0-9_]{0,6}", 1..12)) {
        // reverse of the sorted set is a non-trivial order
        let names: Vec<String> = names.into_iter().rev().collect();
        let text: String = names.iter().map(|n| format!("function {n} domain=G cost=1\n")).collect();
        let w = parse_workload(&text).unwrap();
        prop_assert_eq!(w.names(), names.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

#[test]
fn ring_fixture_matches_expected_structure() {
    let w = parse_workload(common::RING_EXAMPLE).unwrap();
    assert_eq!(w.names(), ["A", "B", "C"]);
    assert!(w.functions.iter().all(|f| f.cost == 10 && f.domain.letter() == 'A'));
    let deps: Vec<(&str, &str, DepKind, bool)> = w
        .dependencies
        .iter()
        .map(|d| (d.from.as_str(), d.to.as_str(), d.kind, d.sync))
        .collect();
    assert_eq!(
        deps,
        [
            ("A", "B", DepKind::Cooperation, true),
            ("B", "C", DepKind::Communication, true),
            ("C", "A", DepKind::Communication, true)
        ]
    );
    let diags = validate(&w, &common::domains_with_a());
    assert_eq!(diags.len(), 1);
    assert!(!diags[0].is_error());
}
