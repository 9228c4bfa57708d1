//! Exact reductions of lower expectations to smaller networks, and a greedy
//! planner that chains them.
//!
//! Every reduction returns its value together with a [`Reduction`] record
//! naming the step, the premise that licensed it and the records of its
//! sub-problems.

use std::fmt::Write as _;

use crate::conditioning::{natural_conditional, RhoEvaluator, DEFAULT_TOLERANCE};
use crate::error::{hypothesis, input, Result};
use crate::graph::{NodeId, NodeSet};
use crate::joint_lp::lower_expectation_lp;
pub use crate::joint_lp::atom_bounds;
use crate::network::{decode, joint_size, Assignment, CredalNetwork, Event, Factor};

/// Relative tolerance of the rank-one test in the factorisation step.
const RANK_TOL: f64 = 1e-12;
/// Most sub-network solves the planner spends on one iterated step.
const MAX_INNER_SOLVES: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    Marginalisation,
    Iterated,
    Factorisation,
    Additivity,
    Combined,
    Atom,
    /// A single local model.
    Local,
    /// A function that does not depend on any node.
    Constant,
    /// The global linear program.
    Lp,
}

impl ReductionKind {
    pub fn label(self) -> &'static str {
        match self {
            ReductionKind::Marginalisation => "marginalisation",
            ReductionKind::Iterated => "iterated",
            ReductionKind::Factorisation => "factorisation",
            ReductionKind::Additivity => "additivity",
            ReductionKind::Combined => "combined",
            ReductionKind::Atom => "atom",
            ReductionKind::Local => "local",
            ReductionKind::Constant => "constant",
            ReductionKind::Lp => "lp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub kind: ReductionKind,
    /// Named facts the step relied on, rendered with node and state names.
    pub premise: Vec<(String, String)>,
    pub value: f64,
    pub sub: Vec<Reduction>,
}

impl Reduction {
    fn new(kind: ReductionKind, premise: Vec<(String, String)>, value: f64, sub: Vec<Reduction>) -> Reduction {
        Reduction { kind, premise, value, sub }
    }

    /// One line per step, depth first:
    /// `depth=D kind=K key=value ... value=V`.
    pub fn audit_log(&self) -> String {
        let mut out = String::new();
        self.write_log(0, &mut out);
        out
    }

    fn write_log(&self, depth: usize, out: &mut String) {
        let _ = write!(out, "depth={depth} kind={}", self.kind.label());
        for (k, v) in &self.premise {
            let _ = write!(out, " {k}={v}");
        }
        let _ = writeln!(out, " value={}", self.value);
        for s in &self.sub {
            s.write_log(depth + 1, out);
        }
    }

    /// Every step of the given kind, this one included.
    pub fn count(&self, kind: ReductionKind) -> usize {
        (self.kind == kind) as usize + self.sub.iter().map(|s| s.count(kind)).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Planned {
    pub value: f64,
    pub trace: Reduction,
}

impl Planned {
    fn new(kind: ReductionKind, premise: Vec<(String, String)>, value: f64, sub: Vec<Reduction>) -> Planned {
        Planned { value, trace: Reduction::new(kind, premise, value, sub) }
    }
}

pub(crate) fn fmt_set(net: &CredalNetwork, k: &NodeSet) -> String {
    let names: Vec<&str> = k.iter().map(|&s| net.dag().name(s)).collect();
    format!("{{{}}}", names.join(","))
}

pub(crate) fn fmt_assignment(net: &CredalNetwork, x: &Assignment) -> String {
    let parts: Vec<String> = x.iter().map(|(&s, &v)| format!("{}:{}", net.dag().name(s), net.states(s)[v])).collect();
    format!("{{{}}}", parts.join(","))
}

fn kv(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

/// Renames a factor on `old` nodes (sorted) to the indices of a sub-network.
pub(crate) fn to_sub(f: &Factor, old: &[NodeId]) -> Result<Factor> {
    f.relabel(|s| old.binary_search(&s).ok())
}

pub(crate) fn event_to_sub(b: &Event, old: &[NodeId]) -> Result<Event> {
    b.relabel(|s| old.binary_search(&s).ok())
}

fn check_scope(what: &str, scope: &[NodeId], allowed: &NodeSet) -> Result<()> {
    if scope.iter().all(|s| allowed.contains(s)) {
        Ok(())
    } else {
        input(format!("{what} depends on nodes outside its permitted set"))
    }
}

fn check_closed(net: &CredalNetwork, k: &NodeSet) -> Result<()> {
    if net.dag().is_closed(k) {
        Ok(())
    } else {
        hypothesis(format!("{} is not closed", fmt_set(net, k)))
    }
}

fn check_parents(net: &CredalNetwork, k: &NodeSet, x: &Assignment) -> Result<()> {
    let pk = net.dag().set_parents(k);
    if x.keys().copied().collect::<NodeSet>() != pk {
        return input(format!("parent assignment must fix exactly {}", fmt_set(net, &pk)));
    }
    if x.iter().any(|(&s, &v)| v >= net.card(s)) {
        return input("parent assignment has a state out of range");
    }
    Ok(())
}

fn check_nonneg(g: &Factor) -> Result<()> {
    if g.min() < 0.0 {
        hypothesis("co-factor must be non-negative")
    } else {
        Ok(())
    }
}

fn is_nonempty(b: &Event) -> Result<()> {
    if b.members().iter().any(|&m| m) {
        Ok(())
    } else {
        input("conditioning event is empty")
    }
}

/// Lower expectation of `f` through the planner: barren-node removal,
/// peeling of a single last node, factorisation at a sink, iterating over
/// the sinks when they come after every other node, and the global linear
/// program for whatever remains.
pub fn lower_expectation(net: &CredalNetwork, f: &Factor) -> Result<Planned> {
    if f.scope().iter().any(|&s| s >= net.len()) {
        return input("function depends on a node outside the network");
    }
    plan(net, f)
}

pub fn upper_expectation(net: &CredalNetwork, f: &Factor) -> Result<Planned> {
    let p = lower_expectation(net, &f.neg())?;
    Ok(Planned { value: -p.value, trace: p.trace })
}

fn plan(net: &CredalNetwork, f: &Factor) -> Result<Planned> {
    if f.min() == f.max() {
        return Ok(Planned::new(ReductionKind::Constant, Vec::new(), f.min(), Vec::new()));
    }
    let dag = net.dag();
    let n = net.len();
    let all = dag.all();
    if n == 1 {
        let v = net.locals(0)[0].lower(f.extend(&[0], &[net.card(0)])?.values());
        return Ok(Planned::new(ReductionKind::Local, vec![kv("node", dag.name(0))], v, Vec::new()));
    }
    // Barren nodes: the ancestral closure of the scope is closed and has no
    // parents, so the lower expectation is unchanged on it.
    let anc = dag.ancestral_closure(&f.scope_set());
    if anc != all {
        let (sub, old) = net.sub_network(&anc, &Assignment::new())?;
        let inner = plan(&sub, &to_sub(f, &old)?)?;
        let premise = vec![kv("K", fmt_set(net, &anc)), kv("parents", "{}")];
        return Ok(Planned::new(ReductionKind::Marginalisation, premise, inner.value, vec![inner.trace]));
    }
    // A node below every other one can be peeled off.
    if let Some(l) = (0..n).find(|&s| dag.ancestors(s).len() == n - 1) {
        return peel(net, f, l);
    }
    for l in (0..n).filter(|&s| dag.children(s).is_empty()) {
        if let Some(split) = rank_one_split(net, f, l)? {
            return factorise_at_sink(net, l, split);
        }
    }
    // All sinks at once, when everything else precedes each of them.
    let sinks: NodeSet = (0..n).filter(|&s| dag.children(s).is_empty()).collect();
    let below_rest = sinks.iter().all(|&s| dag.ancestors(s).len() == n - sinks.len());
    if below_rest && sinks.len() < n {
        let mut hs: NodeSet = dag.set_parents(&sinks);
        hs.extend(f.scope().iter().copied().filter(|v| !sinks.contains(v)));
        if net.cards(&hs.into_iter().collect::<Vec<_>>()).iter().product::<usize>() <= MAX_INNER_SOLVES {
            return iterated_lower_expectation(net, &sinks, f);
        }
    }
    let v = lower_expectation_lp(net, f)?.value;
    Ok(Planned::new(ReductionKind::Lp, vec![kv("nodes", n.to_string())], v, Vec::new()))
}

/// Iterated lower expectation with `S = {l}` and `l` below every other node.
fn peel(net: &CredalNetwork, f: &Factor, l: NodeId) -> Result<Planned> {
    let dag = net.dag();
    let mut hs: NodeSet = f.scope_set();
    hs.remove(&l);
    hs.extend(dag.parents(l).iter().copied());
    let h_scope: Vec<NodeId> = hs.iter().copied().collect();
    let h_cards = net.cards(&h_scope);
    let fl: Vec<NodeId> = {
        let mut v: Vec<NodeId> = h_scope.clone();
        v.push(l);
        v.sort_unstable();
        v
    };
    let fl_cards = net.cards(&fl);
    let fx = f.extend(&fl, &fl_cards)?;
    let h = Factor::from_fn(h_scope.clone(), h_cards, |x| {
        let mut full = vec![0; net.len()];
        for (s, v) in h_scope.iter().zip(x) {
            full[*s] = *v;
        }
        let phi: Vec<f64> = (0..net.card(l))
            .map(|v| {
                let mut y = full.clone();
                y[l] = v;
                fx.eval(&y)
            })
            .collect();
        net.local_at(l, &full).lower(&phi)
    })?;
    let t: NodeSet = dag.all().into_iter().filter(|&s| s != l).collect();
    let (sub, old) = net.sub_network(&t, &Assignment::new())?;
    let outer = plan(&sub, &to_sub(&h, &old)?)?;
    let premise = vec![kv("S", fmt_set(net, &[l].into_iter().collect())), kv("T", fmt_set(net, &t))];
    Ok(Planned::new(ReductionKind::Iterated, premise, outer.value, vec![outer.trace]))
}

struct Split {
    parents: Assignment,
    /// Co-factor on the nodes other than the sink and its parents.
    g: Factor,
    phi: Vec<f64>,
}

/// Writes `f` as `g · I_c(parents) · φ(sink)` with `g ≥ 0`, if possible.
fn rank_one_split(net: &CredalNetwork, f: &Factor, l: NodeId) -> Result<Option<Split>> {
    let dag = net.dag();
    let pa: Vec<NodeId> = dag.parents(l).to_vec();
    let pa_cards = net.cards(&pa);
    let mut scope: NodeSet = f.scope_set();
    scope.insert(l);
    scope.extend(pa.iter().copied());
    let scope: Vec<NodeId> = scope.into_iter().collect();
    let fx = f.extend(&scope, &net.cards(&scope))?;
    let mut hit = None;
    for (i, c) in (0..joint_size(&pa_cards)?).map(|i| (i, decode(i, &pa_cards))) {
        let x: Assignment = pa.iter().copied().zip(c).collect();
        let r = fx.restrict(&x);
        if r.values().iter().any(|&v| v != 0.0) {
            if hit.is_some() {
                return Ok(None);
            }
            hit = Some((i, x, r));
        }
    }
    let Some((_, parents, r)) = hit else {
        return Ok(None);
    };
    // Rows: configurations of the remaining nodes; columns: sink states.
    let k = net.card(l);
    let pos = r.scope().iter().position(|&s| s == l).expect("sink is in scope");
    let rest: Vec<NodeId> = r.scope().iter().copied().filter(|&s| s != l).collect();
    let rest_cards = net.cards(&rest);
    let n_rows = joint_size(&rest_cards)?;
    let mut m = vec![vec![0.0; k]; n_rows];
    for (idx, &v) in r.values().iter().enumerate() {
        let d = decode(idx, r.cards());
        let mut row_digits = d.clone();
        let col = row_digits.remove(pos);
        let row = crate::network::encode(&row_digits, &rest_cards);
        m[row][col] = v;
    }
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let scale = m.iter().map(|row| norm(row)).fold(0.0, f64::max);
    let top = m.iter().max_by(|a, b| norm(a).total_cmp(&norm(b))).expect("at least one row").clone();
    let tt: f64 = top.iter().map(|x| x * x).sum();
    let mut alpha = Vec::with_capacity(n_rows);
    for row in &m {
        let a = row.iter().zip(&top).map(|(x, y)| x * y).sum::<f64>() / tt;
        if row.iter().zip(&top).any(|(x, y)| (x - a * y).abs() > RANK_TOL * scale) {
            return Ok(None);
        }
        alpha.push(a);
    }
    let tiny = RANK_TOL * scale;
    let (alpha, phi) = if alpha.iter().all(|&a| a >= -tiny) {
        (alpha.iter().map(|a| a.max(0.0)).collect::<Vec<_>>(), top)
    } else if alpha.iter().all(|&a| a <= tiny) {
        (alpha.iter().map(|a| (-a).max(0.0)).collect(), top.iter().map(|x| -x).collect())
    } else {
        return Ok(None);
    };
    let g = Factor::new(rest, rest_cards, alpha)?;
    Ok(Some(Split { parents, g, phi }))
}

fn factorise_at_sink(net: &CredalNetwork, l: NodeId, split: Split) -> Result<Planned> {
    let inner = net.local_given(l, &split.parents)?.lower(&split.phi);
    let nk: NodeSet = net.dag().all().into_iter().filter(|&s| s != l).collect();
    let (sub, old) = net.sub_network(&nk, &Assignment::new())?;
    let ind = indicator_of(net, &split.parents)?;
    let co = to_sub(&split.g.product(&ind)?, &old)?;
    let (co_value, co_trace, sign) = co_factor(&sub, &co, inner)?;
    let premise = vec![
        kv("K", fmt_set(net, &[l].into_iter().collect())),
        kv("parents", fmt_assignment(net, &split.parents)),
        kv("sign", sign),
        kv("inner", inner.to_string()),
    ];
    Ok(Planned::new(ReductionKind::Factorisation, premise, inner * co_value, vec![co_trace]))
}

/// Lower or upper expectation of the co-factor, by the sign of the inner
/// value.
fn co_factor(sub: &CredalNetwork, co: &Factor, inner: f64) -> Result<(f64, Reduction, &'static str)> {
    if inner >= 0.0 {
        let p = plan(sub, co)?;
        Ok((p.value, p.trace, "nonneg"))
    } else {
        let p = plan(sub, &co.neg())?;
        Ok((-p.value, p.trace, "neg"))
    }
}

fn indicator_of(net: &CredalNetwork, x: &Assignment) -> Result<Factor> {
    let scope: Vec<NodeId> = x.keys().copied().collect();
    let state: Vec<usize> = x.values().copied().collect();
    Factor::indicator(scope.clone(), net.cards(&scope), &state)
}

/// Lower expectation of `f` in the sub-network on `k` with parents fixed by
/// `x`, through the planner.
fn sub_lower(net: &CredalNetwork, k: &NodeSet, x: &Assignment, f: &Factor) -> Result<Planned> {
    let (sub, old) = net.sub_network(k, x)?;
    plan(&sub, &to_sub(&f.restrict(x), &old)?)
}

/// Conditional lower expectation of `f` given `B_K`, `x_P(K)` and `B_NN(K)`,
/// computed in the sub-network on the closed set `k`. The event on the
/// non-parent non-descendants does not influence the value.
pub fn marginalise(
    net: &CredalNetwork,
    k: &NodeSet,
    x_pa: &Assignment,
    f: &Factor,
    b_k: &Event,
    b_nn: &Event,
) -> Result<Planned> {
    check_closed(net, k)?;
    check_parents(net, k, x_pa)?;
    let rel = net.dag().set_relations(k);
    check_scope("function", f.scope(), k)?;
    check_scope("event on K", b_k.scope(), k)?;
    check_scope("event outside K", b_nn.scope(), &rel.non_parent_non_descendants)?;
    is_nonempty(b_k)?;
    is_nonempty(b_nn)?;
    let mut premise = vec![kv("K", fmt_set(net, k)), kv("parents", fmt_assignment(net, x_pa))];
    let (sub, old) = net.sub_network(k, x_pa)?;
    let fs = to_sub(f, &old)?;
    if b_k.members().iter().all(|&m| m) {
        let p = plan(&sub, &fs)?;
        return Ok(Planned::new(ReductionKind::Marginalisation, premise, p.value, vec![p.trace]));
    }
    let bs = event_to_sub(b_k, &old)?;
    let r = RhoEvaluator::planned(&sub, &fs, &bs)?;
    let out = natural_conditional(&r, DEFAULT_TOLERANCE)?;
    premise.push(kv("bracket", out.kind.label()));
    Ok(Planned::new(ReductionKind::Marginalisation, premise, out.value, Vec::new()))
}

/// Lower expectation of `f` on the whole network as the lower expectation,
/// on `T = G \ S`, of the conditional lower expectations on `S`. Every node
/// of `T` must be a strict ancestor of every node of `S`.
pub fn iterated_lower_expectation(net: &CredalNetwork, s: &NodeSet, f: &Factor) -> Result<Planned> {
    let dag = net.dag();
    if s.iter().any(|&v| v >= net.len()) || f.scope().iter().any(|&v| v >= net.len()) {
        return input("node out of range");
    }
    let t: NodeSet = dag.all().difference(s).copied().collect();
    for &v in s {
        let anc = dag.ancestors(v);
        if let Some(&bad) = t.iter().find(|u| !anc.contains(u)) {
            return hypothesis(format!("{} does not precede {}", dag.name(bad), dag.name(v)));
        }
    }
    let premise = vec![kv("S", fmt_set(net, s)), kv("T", fmt_set(net, &t))];
    if s.is_empty() || t.is_empty() {
        let p = plan(net, f)?;
        return Ok(Planned::new(ReductionKind::Iterated, premise, p.value, vec![p.trace]));
    }
    let ps = dag.set_parents(s);
    let mut hs: NodeSet = f.scope().iter().copied().filter(|v| t.contains(v)).collect();
    hs.extend(ps.iter().copied());
    let h_scope: Vec<NodeId> = hs.into_iter().collect();
    let h_cards = net.cards(&h_scope);
    let mut values = Vec::with_capacity(joint_size(&h_cards)?);
    for i in 0..joint_size(&h_cards)? {
        let x: Assignment = h_scope.iter().copied().zip(decode(i, &h_cards)).collect();
        let fixed: Assignment = x.iter().filter(|(v, _)| ps.contains(v)).map(|(&a, &b)| (a, b)).collect();
        let (sub, old) = net.sub_network(s, &fixed)?;
        let g = to_sub(&f.restrict(&x), &old)?;
        values.push(plan(&sub, &g)?.value);
    }
    let h = Factor::new(h_scope, h_cards, values)?;
    let outer = sub_lower(net, &t, &Assignment::new(), &h)?;
    Ok(Planned::new(ReductionKind::Iterated, premise, outer.value, vec![outer.trace]))
}

/// Lower expectation of `g · I_{x_pa} · f` with `f` on the closed set `k`
/// and `g ≥ 0` on its non-parent non-descendants.
pub fn factorise(net: &CredalNetwork, k: &NodeSet, x_pa: &Assignment, f: &Factor, g: &Factor) -> Result<Planned> {
    check_closed(net, k)?;
    check_parents(net, k, x_pa)?;
    let rel = net.dag().set_relations(k);
    check_scope("function", f.scope(), k)?;
    check_scope("co-factor", g.scope(), &rel.non_parent_non_descendants)?;
    check_nonneg(g)?;
    let inner = sub_lower(net, k, x_pa, f)?;
    let co = g.product(&indicator_of(net, x_pa)?)?;
    let (sub, old) = net.sub_network(&rel.non_descendants, &Assignment::new())?;
    let (co_value, co_trace, sign) = co_factor(&sub, &to_sub(&co, &old)?, inner.value)?;
    let premise = vec![kv("K", fmt_set(net, k)), kv("parents", fmt_assignment(net, x_pa)), kv("sign", sign)];
    Ok(Planned::new(ReductionKind::Factorisation, premise, inner.value * co_value, vec![inner.trace, co_trace]))
}

/// Lower expectation of `h + f` with `f` on a closed parentless set `k` and
/// `h` on its non-descendants.
pub fn external_additivity(net: &CredalNetwork, k: &NodeSet, f: &Factor, h: &Factor) -> Result<Planned> {
    check_closed(net, k)?;
    let rel = net.dag().set_relations(k);
    if !rel.parents.is_empty() {
        return hypothesis(format!("{} has parents {}", fmt_set(net, k), fmt_set(net, &rel.parents)));
    }
    check_scope("function", f.scope(), k)?;
    check_scope("second function", h.scope(), &rel.non_parent_non_descendants)?;
    let a = sub_lower(net, k, &Assignment::new(), f)?;
    let b = sub_lower(net, &rel.non_descendants, &Assignment::new(), h)?;
    let premise = vec![kv("K", fmt_set(net, k))];
    Ok(Planned::new(ReductionKind::Additivity, premise, a.value + b.value, vec![a.trace, b.trace]))
}

/// Lower expectation of `h + g · I_{x_pa} · f` with `f` on the closed set
/// `k`, `h` on its non-descendants and `g ≥ 0` on its non-parent
/// non-descendants: `f` is replaced by its sub-network lower expectation.
pub fn combined(
    net: &CredalNetwork,
    k: &NodeSet,
    x_pa: &Assignment,
    f: &Factor,
    h: &Factor,
    g: &Factor,
) -> Result<Planned> {
    check_closed(net, k)?;
    check_parents(net, k, x_pa)?;
    let rel = net.dag().set_relations(k);
    check_scope("function", f.scope(), k)?;
    check_scope("additive term", h.scope(), &rel.non_descendants)?;
    check_scope("co-factor", g.scope(), &rel.non_parent_non_descendants)?;
    check_nonneg(g)?;
    let inner = sub_lower(net, k, x_pa, f)?;
    let reduced = h.sum(&g.product(&indicator_of(net, x_pa)?)?.map(|v| v * inner.value))?;
    let outer = sub_lower(net, &rel.non_descendants, &Assignment::new(), &reduced)?;
    let premise = vec![kv("K", fmt_set(net, k)), kv("parents", fmt_assignment(net, x_pa))];
    Ok(Planned::new(ReductionKind::Combined, premise, outer.value, vec![inner.trace, outer.trace]))
}

/// Lower probability of a single joint state with its audit record.
pub fn atom(net: &CredalNetwork, x: &Assignment) -> Result<Planned> {
    let (lo, hi) = atom_bounds(net, x)?;
    let premise = vec![kv("state", fmt_assignment(net, x)), kv("upper", hi.to_string())];
    Ok(Planned::new(ReductionKind::Atom, premise, lo, Vec::new()))
}
