use proptest::prelude::*;

use fpufarm::depgraph::{
    build_matrices, classify_pair, combinations, edge_count, elementary_cycles, find_sync_cycles,
    relationship_space, AdjacencyMatrix, PairRelation,
};
use fpufarm::workload::{DepKind, DependencyDecl, Domain, FunctionSpec, Workload};

/// All elementary cycles by brute force: every ordered subset that starts at
/// its minimum and closes through existing edges.
fn brute_force_cycles(m: &AdjacencyMatrix) -> Vec<Vec<usize>> {
    fn perms(rest: &[usize], acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(acc.clone());
        for (i, &x) in rest.iter().enumerate() {
            let mut r = rest.to_vec();
            r.remove(i);
            acc.push(x);
            perms(&r, acc, out);
            acc.pop();
        }
    }
    let n = m.n();
    let mut found = Vec::new();
    for start in 0..n {
        let higher: Vec<usize> = (start + 1..n).collect();
        let mut seqs = Vec::new();
        perms(&higher, &mut vec![start], &mut seqs);
        for seq in seqs {
            let closes = seq.windows(2).all(|p| m.get(p[0], p[1]) == 1)
                && m.get(*seq.last().unwrap(), start) == 1
                && (seq.len() > 1 || m.get(start, start) == 1);
            if closes {
                found.push(seq);
            }
        }
    }
    found.sort();
    found
}

fn matrix(n: usize, bits: &[bool]) -> AdjacencyMatrix {
    let mut m = AdjacencyMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if bits[i * n + j] {
                m.set(i, j);
            }
        }
    }
    m
}

fn workload_from(n: usize, edges: &[(usize, usize, bool, bool)]) -> Workload {
    let g = Domain::new('G').unwrap();
    let mut w = Workload {
        functions: (0..n).map(|i| FunctionSpec::new(format!("n{i}"), g, 1)).collect(),
        ..Default::default()
    };
    for &(a, b, sync, co) in edges {
        let (from, to) = (format!("n{a}"), format!("n{b}"));
        if a != b && !w.dependencies.iter().any(|d| d.from == from && d.to == to) {
            let kind = if co { DepKind::Cooperation } else { DepKind::Communication };
            w.dependencies.push(DependencyDecl { from, to, kind, sync });
        }
    }
    w
}

fn edges(n: usize) -> impl Strategy<Value = Vec<(usize, usize, bool, bool)>> {
    prop::collection::vec((0..n, 0..n, any::<bool>(), any::<bool>()), 0..(n * n + 1))
}

#[test]
fn pascal_rule_on_grid() {
    for n in 1..=62u64 {
        for k in 1..=n {
            let lhs = combinations(n, k).unwrap();
            let rhs = combinations(n - 1, k - 1).unwrap() + combinations(n - 1, k).unwrap_or(0);
            assert_eq!(lhs, rhs, "C({n},{k})");
        }
    }
}

#[test]
fn counting_operations_agree() {
    for n in 2..=62u64 {
        assert_eq!(edge_count(n), combinations(n, 2).unwrap());
        assert_eq!(relationship_space(n).unwrap(), 4 * combinations(n, 2).unwrap());
    }
}

proptest! {
    #[test]
    fn cycle_enumeration_matches_brute_force(
        (n, bits) in (1usize..6).prop_flat_map(|n| (Just(n), prop::collection::vec(any::<bool>(), n * n)))
    ) {
        let m = matrix(n, &bits);
        prop_assert_eq!(elementary_cycles(&m), brute_force_cycles(&m));
    }

    #[test]
    fn adjacency_agrees_with_pair_classification(
        (n, es) in (2usize..8).prop_flat_map(|n| (Just(n), edges(n)))
    ) {
        let w = workload_from(n, &es);
        let (adj, dep) = build_matrices(&w);
        for i in 0..n {
            prop_assert_eq!(adj.get(i, i), 0);
            for j in 0..n {
                prop_assert_eq!(dep.get(i, j).is_some(), adj.get(i, j) == 1);
                if i == j {
                    continue;
                }
                let rel = classify_pair(&adj, i, j).unwrap();
                let forwardish = matches!(rel, PairRelation::Forward | PairRelation::Bidirectional);
                prop_assert_eq!(adj.get(i, j) == 1, forwardish);
                let declared = w.dependencies.iter().find(|d| d.from == format!("n{i}") && d.to == format!("n{j}"));
                prop_assert_eq!(declared.is_some(), adj.get(i, j) == 1);
                if let (Some(d), Some(label)) = (declared, dep.get(i, j)) {
                    prop_assert_eq!(label.sync, d.sync);
                    prop_assert_eq!(label.to_string().starts_with("S,"), d.sync);
                }
            }
        }
    }

    #[test]
    fn sync_cycles_use_only_sync_edges(
        (n, es) in (2usize..6).prop_flat_map(|n| (Just(n), edges(n)))
    ) {
        let w = workload_from(n, &es);
        let mut sync_only = AdjacencyMatrix::zeros(n);
        for &(a, b, sync, _) in &es {
            if sync && a != b {
                // first declaration of a pair wins in workload_from
                let d = w.dependencies.iter().find(|d| d.from == format!("n{a}") && d.to == format!("n{b}")).unwrap();
                if d.sync {
                    sync_only.set(a, b);
                }
            }
        }
        let expected: Vec<Vec<String>> = brute_force_cycles(&sync_only)
            .into_iter()
            .map(|c| c.into_iter().map(|i| format!("n{i}")).collect())
            .collect();
        prop_assert_eq!(find_sync_cycles(&w), expected);
    }
}
