use credal_core::graph::{Dag, NodeSet, Separation};
use proptest::prelude::*;

fn random_dag(n: usize, edge_bits: &[bool]) -> Dag {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            if edge_bits[k] {
                edges.push((a, b));
            }
            k += 1;
        }
    }
    Dag::from_indices(names, &edges).unwrap()
}

fn dag_strategy(max: usize) -> impl Strategy<Value = Dag> {
    (2..=max).prop_flat_map(|n| {
        proptest::collection::vec(proptest::bool::weighted(0.35), n * (n - 1) / 2)
            .prop_map(move |bits| random_dag(n, &bits))
    })
}

/// Assigns each node to I (0), S (1), C (2) or nothing (3).
fn split(labels: &[u8], n: usize) -> (NodeSet, NodeSet, NodeSet) {
    let pick = |t| (0..n).filter(|&v| labels[v] == t).collect();
    (pick(0), pick(1), pick(2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reachability_agrees_with_path_enumeration(
        g in dag_strategy(7),
        masks in proptest::collection::vec((0u8..128, 0u8..128, 0u8..128), 20),
    ) {
        let n = g.len();
        for (a, b, c) in masks {
            let to_set = |m: u8| (0..n).filter(|v| m >> v & 1 == 1).collect::<NodeSet>();
            let (i, s, c) = (to_set(a), to_set(b), to_set(c));
            for mode in [Separation::Asymmetric, Separation::Classical] {
                prop_assert_eq!(g.separated(&i, &s, &c, mode), g.separated_by_paths(&i, &s, &c, mode));
            }
        }
    }

    #[test]
    fn reachability_agrees_with_closed_witness(
        g in dag_strategy(7),
        labels in proptest::collection::vec(proptest::collection::vec(0u8..4, 7), 20),
    ) {
        let n = g.len();
        for l in labels {
            let (i, s, c) = split(&l, n);
            let witness = g.ad_separated_closed(&i, &s, &c).unwrap();
            prop_assert_eq!(g.ad_separated(&i, &s, &c), witness.is_some());
            if let Some(k) = witness {
                prop_assert!(g.is_closed(&k));
                prop_assert!(s.is_subset(&k));
                prop_assert!(g.set_parents(&k).is_subset(&c));
            }
        }
    }

    #[test]
    fn d_separation_is_symmetric_and_implied_by_ad(
        g in dag_strategy(7),
        labels in proptest::collection::vec(0u8..4, 7),
    ) {
        let (i, s, c) = split(&labels, g.len());
        prop_assert_eq!(g.d_separated(&i, &s, &c), g.d_separated(&s, &i, &c));
        if g.ad_separated(&i, &s, &c) {
            prop_assert!(g.d_separated(&i, &s, &c));
        }
    }

    #[test]
    fn set_relations_partition_the_graph(g in dag_strategy(8), m in 1u8..=255) {
        let n = g.len();
        let k: NodeSet = (0..n).filter(|v| m >> v & 1 == 1).collect();
        prop_assume!(!k.is_empty());
        let r = g.set_relations(&k);
        let union: NodeSet = k.iter().chain(r.descendants.iter()).chain(r.non_descendants.iter()).copied().collect();
        prop_assert_eq!(union.len(), n);
        if g.is_closed(&k) {
            prop_assert!(r.parents.is_subset(&r.non_descendants));
        }
        let closure = g.closure(&k);
        prop_assert!(g.is_closed(&closure));
        prop_assert_eq!(g.is_closed(&k), closure == k);
        let d_union: NodeSet = k.iter().flat_map(|&s| g.descendants(s)).filter(|v| !k.contains(v)).collect();
        prop_assert_eq!(d_union, r.descendants);
    }
}
