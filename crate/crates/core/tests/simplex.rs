use credal_core::simplex::{Field, LinearProgram, Outcome, RowKind};
use proptest::prelude::*;

fn kind(k: u8) -> RowKind {
    match k % 3 {
        0 => RowKind::Ge,
        1 => RowKind::Le,
        _ => RowKind::Eq,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn float_and_exact_agree(
        n in 1usize..5,
        free in any::<bool>(),
        obj in proptest::collection::vec(-5i32..6, 5),
        rows in proptest::collection::vec((proptest::collection::vec(-4i32..5, 5), 0u8..3, -6i32..7), 1..7),
    ) {
        let mut lp = LinearProgram::<f64>::new(n, free);
        lp.objective = obj[..n].iter().map(|&x| x as f64).collect();
        for (c, k, b) in &rows {
            lp.push(c[..n].iter().map(|&x| x as f64 / 2.0).collect(), kind(*k), *b as f64);
        }
        let a = lp.solve().unwrap();
        let b = lp.to_exact().solve().unwrap();
        match (&a, &b) {
            (Outcome::Optimal { value: va, x, .. }, Outcome::Optimal { value: vb, .. }) => {
                prop_assert!((va - vb.to_f64()).abs() < 1e-9, "{} vs {}", va, vb.to_f64());
                for r in &lp.rows {
                    let lhs: f64 = r.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
                    let ok = match r.kind {
                        RowKind::Ge => lhs >= r.rhs - 1e-9,
                        RowKind::Le => lhs <= r.rhs + 1e-9,
                        RowKind::Eq => (lhs - r.rhs).abs() <= 1e-9,
                    };
                    prop_assert!(ok);
                }
                if !free {
                    prop_assert!(x.iter().all(|v| *v >= -1e-9));
                }
            }
            (Outcome::Infeasible, Outcome::Infeasible) | (Outcome::Unbounded, Outcome::Unbounded) => {}
            _ => prop_assert!(false, "float {:?} exact {:?}", a, b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn dual_route_matches_primal(
        n in 1usize..5,
        free in any::<bool>(),
        obj in proptest::collection::vec(-5i32..6, 5),
        rows in proptest::collection::vec((proptest::collection::vec(-4i32..5, 5), 0u8..3, -6i32..7), 1..7),
    ) {
        let mut lp = LinearProgram::<f64>::new(n, free);
        lp.objective = obj[..n].iter().map(|&x| x as f64).collect();
        for (c, k, b) in &rows {
            lp.push(c[..n].iter().map(|&x| x as f64 / 2.0).collect(), kind(*k), *b as f64);
        }
        let direct = lp.solve().unwrap();
        let via = lp.solve_via_dual().unwrap();
        match (&direct, &via) {
            (Outcome::Optimal { value: a, .. }, Outcome::Optimal { value: b, x, duals }) => {
                prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
                for r in &lp.rows {
                    let lhs: f64 = r.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
                    let ok = match r.kind {
                        RowKind::Ge => lhs >= r.rhs - 1e-9,
                        RowKind::Le => lhs <= r.rhs + 1e-9,
                        RowKind::Eq => (lhs - r.rhs).abs() <= 1e-9,
                    };
                    prop_assert!(ok);
                }
                // The multipliers certify the optimum.
                let bound: f64 = duals.iter().zip(&lp.rows).map(|(y, r)| y * r.rhs).sum();
                prop_assert!((bound - b).abs() < 1e-9);
                for (y, r) in duals.iter().zip(&lp.rows) {
                    match r.kind {
                        RowKind::Ge => prop_assert!(*y >= -1e-9),
                        RowKind::Le => prop_assert!(*y <= 1e-9),
                        RowKind::Eq => {}
                    }
                }
            }
            (Outcome::Infeasible, Outcome::Infeasible) | (Outcome::Unbounded, Outcome::Unbounded) => {}
            _ => prop_assert!(false, "primal {:?} via dual {:?}", direct, via),
        }
    }

    #[test]
    fn primal_multipliers_certify_the_optimum(
        n in 1usize..5,
        obj in proptest::collection::vec(-5i32..6, 5),
        rows in proptest::collection::vec((proptest::collection::vec(-4i32..5, 5), 0u8..3, -6i32..7), 1..7),
    ) {
        let mut lp = LinearProgram::<f64>::new(n, false);
        lp.objective = obj[..n].iter().map(|&x| x as f64).collect();
        for (c, k, b) in &rows {
            lp.push(c[..n].iter().map(|&x| x as f64 / 2.0).collect(), kind(*k), *b as f64);
        }
        if let Outcome::Optimal { value, duals, .. } = lp.solve().unwrap() {
            let bound: f64 = duals.iter().zip(&lp.rows).map(|(y, r)| y * r.rhs).sum();
            prop_assert!((bound - value).abs() < 1e-9, "{} vs {}", bound, value);
            for j in 0..n {
                let reduced = lp.objective[j] - duals.iter().zip(&lp.rows).map(|(y, r)| y * r.coeffs[j]).sum::<f64>();
                prop_assert!(reduced >= -1e-9);
            }
        }
    }
}
