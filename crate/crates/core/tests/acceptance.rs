//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits with a failure status if any of them fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use credal_core::chains::{
    chain_forward, chain_order, chain_reverse_conditional, complete_evidence_lower, hmm_conditional, HmmSpec,
};
use credal_core::conditioning::{
    condition, conditional, natural_conditional, reduce_then_condition, BracketResult, RhoEvaluator, Rule,
};
use credal_core::decompose::{
    self, atom, combined, external_additivity, factorise, iterated_lower_expectation, marginalise,
};
use credal_core::graph::{NodeId, NodeSet};
use credal_core::io::NetworkFile;
use credal_core::joint_lp::{
    atom_bounds, is_mass_function, joint_extreme_points, lower_expectation_lp, lower_expectation_lp_with,
    upper_expectation_lp,
};
use credal_core::network::{Assignment, CredalNetwork, Event, Factor};
use credal_core::oracle::{complete_extension_lower, irr_fractional_conditional};
use credal_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;
const BRACKET_TOL: f64 = 1e-12;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_net(name: &str) -> CredalNetwork {
    let text = std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    NetworkFile::parse(&text).unwrap().to_network().unwrap()
}

/// Fixture networks with at most four nodes.
fn small_fixtures() -> Vec<(&'static str, CredalNetwork)> {
    ["two_coins.json", "chain3.json", "hmm2.json"].into_iter().map(|n| (n, fixture_net(n))).collect()
}

fn random_assignment(rng: &mut ChaCha8Rng, net: &CredalNetwork, nodes: &NodeSet) -> Assignment {
    nodes.iter().map(|&s| (s, rng.gen_range(0..net.card(s)))).collect()
}

fn random_event_on(rng: &mut ChaCha8Rng, net: &CredalNetwork, nodes: &NodeSet) -> Event {
    let scope: Vec<NodeId> = nodes.iter().copied().collect();
    let cards = net.cards(&scope);
    let n: usize = cards.iter().product();
    loop {
        let members: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        if members.iter().any(|&b| b) {
            return Event::new(scope.clone(), cards.clone(), members).unwrap();
        }
    }
}

fn random_factor_on(rng: &mut ChaCha8Rng, net: &CredalNetwork, nodes: &NodeSet, nonneg: bool) -> Factor {
    let f = random_factor(rng, net, nodes.iter().copied().collect());
    if nonneg {
        f.map(f64::abs)
    } else {
        f
    }
}

fn intersect(a: &Event, b: &Event) -> Event {
    let f = a.indicator().product(&b.indicator()).unwrap();
    Event::new(f.scope().to_vec(), f.cards().to_vec(), f.values().iter().map(|&v| v > 0.5).collect()).unwrap()
}

fn cylinder(net: &CredalNetwork, x: &Assignment) -> Event {
    Event::cylinder(net, x).unwrap()
}

fn lp_lower(net: &CredalNetwork, f: &Factor) -> f64 {
    lower_expectation_lp(net, f).unwrap().value
}

fn lp_conditional(net: &CredalNetwork, f: &Factor, b: &Event, rule: Rule) -> Result<BracketResult> {
    conditional(&RhoEvaluator::lp(net, f, b)?, rule, BRACKET_TOL)
}

/// The smallest hidden Markov shape, `s1 → o1` and `s1 → s2`, with node
/// ids `s1 = 0`, `o1 = 1`, `s2 = 2`.
const HMM_EDGES: [(usize, usize); 2] = [(0, 1), (0, 2)];

fn chain_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let net = two_coins();
    let agree = Factor::from_fn(vec![0, 1], vec![2, 2], |x| (x[0] == x[1]) as u8 as f64).unwrap();
    let a = lp_lower(&net, &agree);
    check(close(a, 0.25, TOL), || format!("lp gives {a}"))?;
    let points = joint_extreme_points(&net).unwrap();
    let b = points.iter().map(|p| p[0] + p[3]).fold(f64::INFINITY, f64::min);
    check(close(b, 0.25, TOL), || format!("extreme points give {b}"))?;
    let certain = Event::certain();
    let r = RhoEvaluator::lp(&net, &agree, &certain).unwrap();
    for k in 0..=32 {
        let mu = k as f64 / 32.0;
        let rho = r.rho(mu).unwrap();
        check(close(rho, 0.25 - mu, TOL), || format!("rho({mu}) = {rho}"))?;
    }
    let c = natural_conditional(&r, BRACKET_TOL).unwrap().value;
    check(close(c, 0.25, TOL), || format!("root of rho is {c}"))?;
    let t = start.elapsed();
    check(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("lp={a} vertices={b} rho-root={c} in {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let points = joint_extreme_points(&two_coins()).unwrap();
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-6)) {
            distinct.push(p);
        }
    }
    check(distinct.len() == 6, || format!("{} extreme points", distinct.len()))?;
    let target = [0.125, 0.375, 0.375, 0.125];
    check(distinct.iter().any(|p| p.iter().zip(&target).all(|(a, b)| close(*a, *b, TOL))), || {
        "(1/8, 3/8, 3/8, 1/8) is missing".into()
    })?;
    Ok("6 extreme points, including (1/8, 3/8, 3/8, 1/8)".into())
}

fn criterion_3() -> Outcome {
    let dag = ten_node_dag();
    let set = |names: &[&str]| dag.ids(names).unwrap();
    let (six, nine, c1) = (set(&["6"]), set(&["9"]), set(&["3", "4"]));
    check(dag.ad_separated(&six, &nine, &c1) && dag.ad_separated(&nine, &six, &c1), || "({6},{9}|{3,4}) not separated both ways".into())?;
    let (i, s, c) = (set(&["1", "6"]), set(&["5", "7"]), set(&["3", "4", "9"]));
    check(dag.ad_separated(&i, &s, &c), || "({1,6},{5,7}|{3,4,9}) not separated".into())?;
    check(!dag.ad_separated(&s, &i, &c), || "({5,7},{1,6}|{3,4,9}) separated".into())?;
    check(dag.d_separated(&i, &s, &c) && dag.d_separated(&s, &i, &c), || "d-separation fails".into())?;
    Ok("AD- and d-separation as expected on the ten-node graph".into())
}

#[derive(Default)]
struct Tally {
    planner: usize,
    marginalise: usize,
    iterated: usize,
    factorise: usize,
    additivity: usize,
    combined: usize,
    atoms: usize,
    chain: usize,
    hmm: usize,
    complete: usize,
    reduce: usize,
    condition: usize,
}

fn equivalence_on(rng: &mut ChaCha8Rng, net: &CredalNetwork, t: &mut Tally) -> std::result::Result<(), String> {
    const EQ: f64 = 1e-6;
    let n = net.len();
    let dag = net.dag();

    let f = random_function(rng, net);
    let (got, want) = (decompose::lower_expectation(net, &f).unwrap().value, lp_lower(net, &f));
    check(close(got, want, EQ), || format!("planner {got} vs lp {want}"))?;
    t.planner += 1;

    let k = dag.closure(&random_scope(rng, n).into_iter().collect());
    let rel = dag.set_relations(&k);
    let x_pa = random_assignment(rng, net, &rel.parents);
    let fk = random_factor_on(rng, net, &k, false);
    let b_k = if rng.gen_bool(0.5) { Event::certain() } else { random_event_on(rng, net, &k) };
    let b_nn = if rel.non_parent_non_descendants.is_empty() || rng.gen_bool(0.3) {
        Event::certain()
    } else {
        random_event_on(rng, net, &rel.non_parent_non_descendants)
    };
    let b = intersect(&intersect(&b_k, &cylinder(net, &x_pa)), &b_nn);
    if let Ok(direct) = lp_conditional(net, &fk, &b, Rule::Natural) {
        let got = marginalise(net, &k, &x_pa, &fk, &b_k, &b_nn).unwrap().value;
        check(close(got, direct.value, EQ), || format!("marginalisation {got} vs {}", direct.value))?;
        t.marginalise += 1;
    }

    let full = random_factor(rng, net, (0..n).collect());
    let want = lp_lower(net, &full);
    for mask in 0..1usize << n {
        let s: NodeSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        match iterated_lower_expectation(net, &s, &full) {
            Ok(p) => {
                check(close(p.value, want, EQ), || format!("iterated {} vs {want}", p.value))?;
                t.iterated += 1;
            }
            Err(Error::Hypothesis(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
    }

    let g = random_factor_on(rng, net, &rel.non_parent_non_descendants, true);
    let h = random_factor_on(rng, net, &rel.non_descendants, false);
    let ix = cylinder(net, &x_pa).indicator();
    let got = factorise(net, &k, &x_pa, &fk, &g).unwrap().value;
    let want = lp_lower(net, &g.product(&ix).unwrap().product(&fk).unwrap());
    check(close(got, want, EQ), || format!("factorisation {got} vs {want}"))?;
    t.factorise += 1;
    let got = combined(net, &k, &x_pa, &fk, &h, &g).unwrap().value;
    let want = lp_lower(net, &h.sum(&g.product(&ix).unwrap().product(&fk).unwrap()).unwrap());
    check(close(got, want, EQ), || format!("combined {got} vs {want}"))?;
    t.combined += 1;
    if rel.parents.is_empty() {
        let h = random_factor_on(rng, net, &rel.non_parent_non_descendants, false);
        let got = external_additivity(net, &k, &fk, &h).unwrap().value;
        let want = lp_lower(net, &fk.sum(&h).unwrap());
        check(close(got, want, EQ), || format!("additivity {got} vs {want}"))?;
        t.additivity += 1;
    }

    let x: Assignment = (0..n).map(|s| (s, rng.gen_range(0..net.card(s)))).collect();
    let ind = cylinder(net, &x).indicator();
    let (lo, hi) = atom_bounds(net, &x).unwrap();
    let (want_lo, want_hi) = (lp_lower(net, &ind), upper_expectation_lp(net, &ind).unwrap());
    check(close(lo, want_lo, EQ) && close(hi, want_hi, EQ), || format!("atom [{lo}, {hi}] vs [{want_lo}, {want_hi}]"))?;
    check(close(atom(net, &x).unwrap().value, want_lo, EQ), || "atom record".into())?;
    t.atoms += 1;

    if let Ok(order) = chain_order(net) {
        let (first, last) = (order[0], *order.last().unwrap());
        let hl = random_factor(rng, net, vec![last]);
        let got = chain_forward(net, &hl).unwrap();
        check(close(got, lp_lower(net, &hl), EQ), || format!("chain forward {got}"))?;
        if n > 1 {
            let hf = random_factor(rng, net, vec![first]);
            let v = rng.gen_range(0..net.card(last));
            let b = cylinder(net, &[(last, v)].into_iter().collect());
            for rule in [Rule::Natural, Rule::Regular] {
                let got = chain_reverse_conditional(net, &hf, v, rule, BRACKET_TOL).unwrap().value;
                let want = lp_conditional(net, &hf, &b, rule).unwrap().value;
                check(close(got, want, EQ), || format!("chain reverse {got} vs {want}"))?;
            }
        }
        t.chain += 1;
    }

    if let Some(spec) = (0..n).filter_map(|s| HmmSpec::from_last_state(net, s).ok()).find(|h| !h.observations().is_empty()) {
        let obs: Vec<usize> = spec.observations().iter().map(|&o| rng.gen_range(0..net.card(o))).collect();
        let last = spec.last_state();
        let f = random_factor(rng, net, vec![last]);
        let x: Assignment = spec.observations().iter().copied().zip(obs.iter().copied()).collect();
        let b = cylinder(net, &x);
        for rule in [Rule::Natural, Rule::Regular] {
            let got = hmm_conditional(&spec, &f, &obs, rule, BRACKET_TOL).unwrap().value;
            let want = lp_conditional(net, &f, &b, rule).unwrap().value;
            check(close(got, want, EQ), || format!("hmm {got} vs {want}"))?;
        }
        t.hmm += 1;
    }

    if n > 1 {
        let q = rng.gen_range(0..n);
        let x_e: Assignment = (0..n).filter(|&s| s != q).map(|s| (s, rng.gen_range(0..net.card(s)))).collect();
        let f = random_factor(rng, net, vec![q]);
        let b = cylinder(net, &x_e);
        for rule in [Rule::Natural, Rule::Regular] {
            if let (Ok(want), Ok(got)) = (irr_fractional_conditional(net, &f, &b, rule), complete_evidence_lower(net, q, &x_e, &f, rule, BRACKET_TOL)) {
                check(close(got.value, want, EQ), || format!("complete evidence {} vs {want}", got.value))?;
                t.complete += 1;
            }
        }
    }

    let observed: NodeSet = random_scope(rng, n).into_iter().collect();
    let x_e = random_assignment(rng, net, &observed);
    let f = random_function(rng, net);
    let b = cylinder(net, &x_e);
    for rule in [Rule::Natural, Rule::Regular] {
        if let (Ok(want), Ok(got)) = (irr_fractional_conditional(net, &f, &b, rule), reduce_then_condition(net, &f, &x_e, rule, BRACKET_TOL)) {
            check(close(got.result.value, want, EQ), || format!("reduced conditioning {} vs {want}", got.result.value))?;
            t.reduce += 1;
        }
    }
    let scope: NodeSet = random_scope(rng, n).into_iter().collect();
    let ev = random_event_on(rng, net, &scope);
    if let Ok(want) = lp_conditional(net, &f, &ev, Rule::Natural) {
        let got = condition(net, &f, &ev, Rule::Natural, BRACKET_TOL).unwrap().result.value;
        check(close(got, want.value, EQ), || format!("conditioning {got} vs {}", want.value))?;
        t.condition += 1;
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut t = Tally::default();
    let mut nets: Vec<(String, CredalNetwork)> = small_fixtures().into_iter().map(|(n, net)| (n.to_string(), net)).collect();
    nets.push(("diamond".into(), random_net_on(&mut rng, 4, &[(0, 1), (0, 2), (1, 3), (2, 3)], 2)));
    for i in 0..200 {
        let net = match i % 5 {
            0 => {
                let n = rng.gen_range(1..=4);
                random_net_on(&mut rng, n, &chain_edges(n), 2)
            }
            1 => random_net_on(&mut rng, 3, &HMM_EDGES, 2),
            _ => random_net(&mut rng, 4, 2),
        };
        nets.push((format!("random net {i}"), net));
    }
    for (name, net) in &nets {
        for _ in 0..3 {
            equivalence_on(&mut rng, net, &mut t).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    let counts = [t.planner, t.marginalise, t.iterated, t.factorise, t.additivity, t.combined, t.atoms, t.chain, t.hmm, t.complete, t.reduce, t.condition];
    check(counts.iter().all(|&c| c > 0), || format!("some reduction was never exercised: {counts:?}"))?;
    Ok(format!(
        "{} nets; planner {} marginalisation {} iterated {} factorisation {} additivity {} combined {} atoms {} chain {} hmm {} complete-evidence {} reduced {} general {} in {elapsed:.2?}",
        nets.len(),
        t.planner,
        t.marginalise,
        t.iterated,
        t.factorise,
        t.additivity,
        t.combined,
        t.atoms,
        t.chain,
        t.hmm,
        t.complete,
        t.reduce,
        t.condition
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut nets: Vec<(CredalNetwork, bool)> = small_fixtures().into_iter().map(|(_, n)| (n, false)).collect();
    for i in 0..40 {
        let vertices = if i % 2 == 0 { 2 } else { 1 };
        nets.push((random_net(&mut rng, 4, vertices), vertices == 1));
    }
    let mut equalities = 0;
    for (net, precise) in &nets {
        for _ in 0..50 {
            let f = random_function(&mut rng, net);
            let ext = complete_extension_lower(net, &f).unwrap();
            let irr = lp_lower(net, &f);
            check(ext >= irr - TOL, || format!("complete extension {ext} below {irr}"))?;
            if *precise {
                check(close(ext, irr, TOL), || format!("precise network: {ext} vs {irr}"))?;
                equalities += 1;
            }
        }
    }
    Ok(format!("{} nets x 50 factors, {equalities} precise equalities", nets.len()))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let names = ["two_coins.json", "chain3.json", "hmm2.json", "ten_node.json"];
    let mut solved = 0;
    for name in names {
        let net = fixture_net(name);
        for _ in 0..5 {
            let f = random_function(&mut rng, &net);
            let free = lower_expectation_lp_with(&net, &f, false).unwrap();
            let nonneg = lower_expectation_lp_with(&net, &f, true).unwrap();
            check(close(free.value, nonneg.value, TOL), || format!("{name}: {} vs {}", free.value, nonneg.value))?;
            check(is_mass_function(&free.argmin) && is_mass_function(&nonneg.argmin), || format!("{name}: argmin is not a mass function"))?;
            solved += 1;
        }
    }
    Ok(format!("{solved} programs on {} fixture nets", names.len()))
}

/// Disjoint `(I, S, C)` with `I` and `S` non-empty, over `n` nodes.
fn triples(n: usize) -> Vec<(NodeSet, NodeSet, NodeSet)> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let (mut i, mut s, mut c) = (NodeSet::new(), NodeSet::new(), NodeSet::new());
        for v in 0..n {
            match code / 4usize.pow(v as u32) % 4 {
                1 => i.insert(v),
                2 => s.insert(v),
                3 => c.insert(v),
                _ => false,
            };
        }
        if !i.is_empty() && !s.is_empty() {
            out.push((i, s, c));
        }
    }
    out
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let (mut checked, mut zero) = (0, 0);
    for _ in 0..20 {
        let net = random_net(&mut rng, 4, 2);
        for (i, s, c) in triples(net.len()) {
            if !net.dag().ad_separated(&i, &s, &c) {
                continue;
            }
            let f = random_factor_on(&mut rng, &net, &s, false);
            let b_s = random_event_on(&mut rng, &net, &s);
            let b_i = random_event_on(&mut rng, &net, &i);
            let x_c = cylinder(&net, &random_assignment(&mut rng, &net, &c));
            let without = intersect(&b_s, &x_c);
            let with = intersect(&without, &b_i);
            let r_without = RhoEvaluator::lp(&net, &f, &without).unwrap();
            let r_with = RhoEvaluator::lp(&net, &f, &with).unwrap();
            if !r_without.lower_prob_positive().unwrap() || !r_with.lower_prob_positive().unwrap() {
                zero += 1;
                continue;
            }
            let a = natural_conditional(&r_with, BRACKET_TOL).unwrap().value;
            let b = natural_conditional(&r_without, BRACKET_TOL).unwrap().value;
            check(close(a, b, 1e-6), || format!("I={i:?} S={s:?} C={c:?}: {a} vs {b}"))?;
            checked += 1;
        }
    }
    check(checked > 0, || "no separated triple was checked".into())?;
    Ok(format!("{checked} separated triples agree, {zero} with zero lower probability skipped"))
}

/// One engine evaluated on a target function: lower and upper values and
/// the bounds of the target on the conditioning event.
struct Case<'a> {
    name: &'static str,
    lower: Box<dyn Fn(&Factor) -> f64 + 'a>,
    upper: Box<dyn Fn(&Factor) -> f64 + 'a>,
    event: Event,
}

fn coherence(case: &Case, f: &Factor, g: &Factor, c: f64) -> std::result::Result<(), String> {
    let lo = |h: &Factor| (case.lower)(h);
    let name = case.name;
    let lf = lo(f);
    let plus = lo(&f.map(|v| v + c));
    check(close(plus, lf + c, TOL), || format!("{name}: constant additivity {plus} vs {}", lf + c))?;
    for lambda in [0.0, 0.5, 2.0] {
        let scaled = lo(&f.map(|v| lambda * v));
        check(close(scaled, lambda * lf, TOL), || format!("{name}: homogeneity at {lambda}: {scaled} vs {}", lambda * lf))?;
    }
    let sum = lo(&f.sum(g).unwrap());
    let lg = lo(g);
    check(sum >= lf + lg - TOL, || format!("{name}: superadditivity {sum} < {}", lf + lg))?;
    let (fmin, fmax) = credal_core::conditioning::range_on_event(f, &case.event).unwrap();
    let uf = (case.upper)(f);
    check(lf >= fmin - TOL && uf <= fmax + TOL && lf <= uf + TOL, || format!("{name}: bounds {fmin} <= {lf} <= {uf} <= {fmax}"))?;
    let conj = -lo(&f.neg());
    check(close(uf, conj, TOL), || format!("{name}: conjugacy {uf} vs {conj}"))?;
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let mut counts: Vec<(&'static str, usize)> = Vec::new();
    let mut total = 0;
    let value = |r: Result<BracketResult>| r.unwrap().value;
    for i in 0..500 {
        let kind = i % 7;
        let (net, scope): (CredalNetwork, Vec<NodeId>) = match kind {
            2 | 3 => {
                let n = rng.gen_range(2..=4);
                let net = random_net_on(&mut rng, n, &chain_edges(n), 2);
                (net, vec![if kind == 2 { n - 1 } else { 0 }])
            }
            4 => (random_net_on(&mut rng, 3, &HMM_EDGES, 2), vec![2]),
            _ => {
                let net = random_net(&mut rng, 4, 2);
                let scope = random_scope(&mut rng, net.len());
                (net, scope)
            }
        };
        let n = net.len();
        let f = random_factor(&mut rng, &net, scope.clone());
        let g = random_factor(&mut rng, &net, scope.clone());
        let c: f64 = rng.gen_range(-2.0..2.0);
        let case = match kind {
            0 => Case {
                name: "lp",
                lower: Box::new(|h: &Factor| lp_lower(&net, h)),
                upper: Box::new(|h: &Factor| upper_expectation_lp(&net, h).unwrap()),
                event: Event::certain(),
            },
            1 => Case {
                name: "planner",
                lower: Box::new(|h: &Factor| decompose::lower_expectation(&net, h).unwrap().value),
                upper: Box::new(|h: &Factor| decompose::upper_expectation(&net, h).unwrap().value),
                event: Event::certain(),
            },
            2 => Case {
                name: "chain",
                lower: Box::new(|h: &Factor| chain_forward(&net, h).unwrap()),
                upper: Box::new(|h: &Factor| -chain_forward(&net, &h.neg()).unwrap()),
                event: Event::certain(),
            },
            3 => {
                let v = rng.gen_range(0..2);
                let net = &net;
                Case {
                    name: "chain-reverse",
                    lower: Box::new(move |h: &Factor| value(chain_reverse_conditional(net, h, v, Rule::Natural, BRACKET_TOL))),
                    upper: Box::new(move |h: &Factor| -value(chain_reverse_conditional(net, &h.neg(), v, Rule::Natural, BRACKET_TOL))),
                    event: cylinder(net, &[(n - 1, v)].into_iter().collect()),
                }
            }
            4 => {
                let obs = vec![rng.gen_range(0..2)];
                let event = cylinder(&net, &[(1, obs[0])].into_iter().collect());
                let (spec, spec2) = (HmmSpec::from_last_state(&net, 2).unwrap(), HmmSpec::from_last_state(&net, 2).unwrap());
                let obs2 = obs.clone();
                Case {
                    name: "hmm",
                    lower: Box::new(move |h: &Factor| value(hmm_conditional(&spec, h, &obs, Rule::Regular, BRACKET_TOL))),
                    upper: Box::new(move |h: &Factor| -value(hmm_conditional(&spec2, &h.neg(), &obs2, Rule::Regular, BRACKET_TOL))),
                    event,
                }
            }
            5 => {
                let x_e: Assignment = (1..n).map(|s| (s, rng.gen_range(0..2))).collect();
                let q = 0;
                let event = cylinder(&net, &x_e);
                let f0 = random_factor(&mut rng, &net, vec![q]);
                let g0 = random_factor(&mut rng, &net, vec![q]);
                let net = &net;
                let x2 = x_e.clone();
                let case = Case {
                    name: "complete-evidence",
                    lower: Box::new(move |h: &Factor| value(complete_evidence_lower(net, q, &x_e, h, Rule::Natural, BRACKET_TOL))),
                    upper: Box::new(move |h: &Factor| -value(complete_evidence_lower(net, q, &x2, &h.neg(), Rule::Natural, BRACKET_TOL))),
                    event,
                };
                coherence(&case, &f0, &g0, c)?;
                total += 1;
                bump(&mut counts, case.name);
                continue;
            }
            _ => {
                let observed: NodeSet = random_scope(&mut rng, n).into_iter().collect();
                let x_e = random_assignment(&mut rng, &net, &observed);
                let event = cylinder(&net, &x_e);
                let net = &net;
                let x2 = x_e.clone();
                Case {
                    name: "conditioning",
                    lower: Box::new(move |h: &Factor| reduce_then_condition(net, h, &x_e, Rule::Natural, BRACKET_TOL).unwrap().result.value),
                    upper: Box::new(move |h: &Factor| -reduce_then_condition(net, &h.neg(), &x2, Rule::Natural, BRACKET_TOL).unwrap().result.value),
                    event,
                }
            }
        };
        coherence(&case, &f, &g, c)?;
        total += 1;
        bump(&mut counts, case.name);
    }
    let detail: Vec<String> = counts.iter().map(|(n, c)| format!("{n} {c}")).collect();
    Ok(format!("{total} cases: {}", detail.join(", ")))
}

fn bump(counts: &mut Vec<(&'static str, usize)>, name: &'static str) {
    match counts.iter_mut().find(|(n, _)| *n == name) {
        Some((_, c)) => *c += 1,
        None => counts.push((name, 1)),
    }
}

/// Best per-call time over several batches, each long enough to time.
fn time_per_call(mut run: impl FnMut()) -> f64 {
    let mut reps = 1usize;
    loop {
        let t = Instant::now();
        for _ in 0..reps {
            run();
        }
        if t.elapsed() >= Duration::from_millis(20) {
            break;
        }
        reps *= 2;
    }
    (0..7)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..reps {
                run();
            }
            t.elapsed().as_secs_f64() / reps as f64
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let lengths = [100usize, 1_000, 10_000];
    let limits = [0.01, 0.1, 1.0];
    let mut times = Vec::new();
    for (&n, &limit) in lengths.iter().zip(&limits) {
        let bounds: Vec<(f64, f64)> = (0..2 * n)
            .map(|_| {
                let a: f64 = rng.gen_range(0.05..0.95);
                let b: f64 = rng.gen_range(0.05..0.95);
                (a.min(b), a.max(b))
            })
            .collect();
        let net = interval_net(n, &chain_edges(n), |s, c| bounds[2 * s + c]);
        let h = random_factor(&mut rng, &net, vec![n - 1]);
        let once = Instant::now();
        std::hint::black_box(chain_forward(&net, &h).unwrap());
        let cold = once.elapsed().as_secs_f64();
        check(cold < limit, || format!("length {n} took {cold:.3e} s"))?;
        let t = time_per_call(|| {
            std::hint::black_box(chain_forward(&net, &h).unwrap());
        });
        check(t < limit, || format!("length {n} took {t:.3e} s"))?;
        times.push(t);
    }
    let ratios = [times[1] / times[0], times[2] / times[1]];
    for r in ratios {
        check((5.0..=20.0).contains(&r), || format!("runtime ratio {r:.2} is not within 2x of 10; times {times:?}"))?;
    }
    Ok(format!(
        "{:.3e} s / {:.3e} s / {:.3e} s per call, ratios {:.2} and {:.2}",
        times[0], times[1], times[2], ratios[0], ratios[1]
    ))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut strict = 0;
    for i in 0..50 {
        let net = if i % 3 == 0 { random_net_with_zeros(&mut rng, 4) } else { random_net(&mut rng, 4, 2) };
        let f = random_function(&mut rng, &net);
        let scope: NodeSet = random_scope(&mut rng, net.len()).into_iter().collect();
        let b = random_event_on(&mut rng, &net, &scope);
        let r = RhoEvaluator::lp(&net, &f, &b).unwrap();
        let lower_b = lp_lower(&net, &b.indicator());
        let (lo, hi) = (r.fmin - 0.5, r.fmax + 0.5);
        let step = (hi - lo) / 32.0;
        let rho: Vec<f64> = (0..=32).map(|k| r.rho(lo + k as f64 * step).unwrap()).collect();
        for k in 0..32 {
            check(rho[k + 1] <= rho[k] + TOL, || format!("query {i}: rho increases at grid point {k}"))?;
            if lower_b > TOL {
                let slope = (rho[k + 1] - rho[k]) / step;
                check(slope <= -lower_b + TOL, || format!("query {i}: slope {slope} above -{lower_b}"))?;
            }
        }
        for k in 1..32 {
            check(rho[k] >= (rho[k - 1] + rho[k + 1]) / 2.0 - TOL, || format!("query {i}: not concave at grid point {k}"))?;
        }
        if lower_b > TOL {
            strict += 1;
        }
    }
    Ok(format!("50 queries, {strict} with positive lower probability"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("agreement event lower probability", criterion_1),
        ("extreme points of the two-coin polytope", criterion_2),
        ("separation on the ten-node graph", criterion_3),
        ("reductions agree with the global program", criterion_4),
        ("complete extension dominates", criterion_5),
        ("non-negativity rows are redundant", criterion_6),
        ("separation implies irrelevance", criterion_7),
        ("coherence properties", criterion_8),
        ("chain recursion scales linearly", criterion_9),
        ("shape of rho", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
