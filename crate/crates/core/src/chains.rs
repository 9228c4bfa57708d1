//! Linear-time recursions for chains, hidden Markov models and single-node
//! queries under complete evidence.

use crate::conditioning::{natural_conditional, regular_conditional, BracketKind, BracketResult, RhoEvaluator, Rule, TAU_SIGN};
use crate::error::{hypothesis, input, Error, Result};
use crate::graph::NodeId;
use crate::network::{Assignment, CredalNetwork, Factor};

/// The nodes of a simple chain, root first.
pub fn chain_order(net: &CredalNetwork) -> Result<Vec<NodeId>> {
    let dag = net.dag();
    let roots: Vec<NodeId> = (0..net.len()).filter(|&s| dag.parents(s).is_empty()).collect();
    if roots.len() != 1 || (0..net.len()).any(|s| dag.parents(s).len() > 1 || dag.children(s).len() > 1) {
        return hypothesis("the graph is not a simple chain");
    }
    let mut order = vec![roots[0]];
    while let Some(&c) = dag.children(*order.last().expect("non-empty")).first() {
        order.push(c);
    }
    debug_assert_eq!(order.len(), net.len());
    Ok(order)
}

/// Lower transfer from a chain node to its parent:
/// `g ↦ (x ↦ E_{k|x}(g))`.
#[derive(Debug, Clone, Copy)]
pub struct TransferOperator<'a> {
    net: &'a CredalNetwork,
    source: NodeId,
}

impl<'a> TransferOperator<'a> {
    pub fn new(net: &'a CredalNetwork, source: NodeId) -> Result<TransferOperator<'a>> {
        if source >= net.len() || net.dag().parents(source).len() != 1 {
            return input("a transfer operator needs a node with exactly one parent");
        }
        Ok(TransferOperator { net, source })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn target(&self) -> NodeId {
        self.net.dag().parents(self.source)[0]
    }

    /// `g` holds one value per state of the source; the result one per
    /// state of the target.
    pub fn lower(&self, g: &[f64]) -> Vec<f64> {
        (0..self.net.locals(self.source).len()).map(|c| self.net.local_lower(self.source, c, g)).collect()
    }

    pub fn upper(&self, g: &[f64]) -> Vec<f64> {
        self.net.locals(self.source).iter().map(|l| l.upper(g)).collect()
    }
}

fn values_on(net: &CredalNetwork, h: &Factor, s: NodeId, what: &str) -> Result<Vec<f64>> {
    if h.scope().iter().any(|&t| t != s) {
        return input(format!("the function must depend on the {what} node only"));
    }
    Ok(h.extend(&[s], &[net.card(s)])?.values().to_vec())
}

/// Lower expectation of a function of the last chain node, by backward
/// composition of transfer operators.
pub fn chain_forward(net: &CredalNetwork, h: &Factor) -> Result<f64> {
    let order = chain_order(net)?;
    let last = *order.last().expect("non-empty");
    let mut g = values_on(net, h, last, "last")?;
    let mut next = Vec::with_capacity(g.len());
    for &s in order[1..].iter().rev() {
        next.clear();
        next.extend((0..net.locals(s).len()).map(|c| net.local_lower(s, c, &g)));
        std::mem::swap(&mut g, &mut next);
    }
    Ok(net.local_lower(order[0], 0, &g))
}

/// `ρ(μ) = E(I_{x_n}(X_n) (h(X_1) − μ))` for a function `h` of the first
/// chain node and a state `x_n` of the last.
pub fn chain_reverse_rho(net: &CredalNetwork, h: &Factor, x_n: usize, mu: f64) -> Result<f64> {
    let order = chain_order(net)?;
    let first = order[0];
    let last = *order.last().expect("non-empty");
    if x_n >= net.card(last) {
        return input("terminal state out of range");
    }
    let hv = values_on(net, h, first, "first")?;
    let (lo, hi) = terminal_weights(net, &order, x_n)?;
    let g: Vec<f64> = (0..hv.len()).map(|x| if hv[x] >= mu { lo[x] * (hv[x] - mu) } else { hi[x] * (hv[x] - mu) }).collect();
    Ok(net.locals(first)[0].lower(&g))
}

/// Lower and upper probability of the terminal state given each state of
/// the first node.
fn terminal_weights(net: &CredalNetwork, order: &[NodeId], x_n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let last = *order.last().expect("non-empty");
    let mut lo: Vec<f64> = (0..net.card(last)).map(|v| if v == x_n { 1.0 } else { 0.0 }).collect();
    let mut hi = lo.clone();
    for &s in order[1..].iter().rev() {
        let t = TransferOperator::new(net, s)?;
        lo = t.lower(&lo);
        hi = t.upper(&hi);
    }
    Ok((lo, hi))
}

/// Conditional lower expectation of `h(X_1)` given the last node's state.
pub fn chain_reverse_conditional(net: &CredalNetwork, h: &Factor, x_n: usize, rule: Rule, tol: f64) -> Result<BracketResult> {
    let order = chain_order(net)?;
    let hv = values_on(net, h, order[0], "first")?;
    let fmin = hv.iter().copied().fold(f64::INFINITY, f64::min);
    let fmax = hv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r = RhoEvaluator::new(fmin, fmax, |mu| chain_reverse_rho(net, h, x_n, mu));
    match rule {
        Rule::Natural => natural_conditional(&r, tol),
        Rule::Regular => regular_conditional(&r, tol),
    }
}

/// A hidden Markov model embedded in a network: state nodes `s_1..s_{n+1}`
/// and observation nodes `o_1..o_n`, where `o_k` has the single parent
/// `s_k`. In order 1 the parent of `s_k` is `s_{k−1}`; in order 2 its
/// parents are `s_{k−2}` and `s_{k−1}`.
#[derive(Debug, Clone)]
pub struct HmmSpec<'a> {
    net: &'a CredalNetwork,
    states: Vec<NodeId>,
    observations: Vec<NodeId>,
    order: usize,
}

impl<'a> HmmSpec<'a> {
    pub fn new(net: &'a CredalNetwork, states: Vec<NodeId>, observations: Vec<NodeId>, order: usize) -> Result<HmmSpec<'a>> {
        let dag = net.dag();
        if order != 1 && order != 2 {
            return hypothesis("hidden Markov models of order 1 or 2 only");
        }
        let n = observations.len();
        let mut seen: Vec<NodeId> = states.iter().chain(&observations).copied().collect();
        seen.sort_unstable();
        seen.dedup();
        if states.len() != n + 1 || seen.len() != net.len() || seen.last().is_some_and(|&s| s >= net.len()) {
            return hypothesis("states and observations must partition the network, with one more state than observations");
        }
        for (k, &s) in states.iter().enumerate() {
            let mut want: Vec<NodeId> = states[k.saturating_sub(order)..k].to_vec();
            want.sort_unstable();
            if dag.parents(s) != want.as_slice() {
                return hypothesis(format!("state {} does not have the parents of an order-{order} model", dag.name(s)));
            }
        }
        for (k, &o) in observations.iter().enumerate() {
            if dag.parents(o) != [states[k]] || !dag.children(o).is_empty() {
                return hypothesis(format!("observation {} must be a leaf below state {}", dag.name(o), dag.name(states[k])));
            }
        }
        Ok(HmmSpec { net, states, observations, order })
    }

    /// Recovers the model from its last state: the states are that node's
    /// ancestors, everything else is an observation.
    pub fn from_last_state(net: &'a CredalNetwork, last: NodeId) -> Result<HmmSpec<'a>> {
        if last >= net.len() {
            return input("unknown node");
        }
        let dag = net.dag();
        let mut states: Vec<NodeId> = dag.ancestors(last).into_iter().collect();
        states.push(last);
        states.sort_by_key(|&s| dag.ancestors(s).len());
        let mut observations = Vec::new();
        for &s in &states[..states.len() - 1] {
            let obs: Vec<NodeId> = dag.children(s).iter().copied().filter(|c| !states.contains(c)).collect();
            if obs.len() != 1 {
                return hypothesis(format!("state {} needs exactly one observation", dag.name(s)));
            }
            observations.push(obs[0]);
        }
        let order = states.iter().map(|&s| dag.parents(s).len()).max().unwrap_or(0).max(1);
        HmmSpec::new(net, states, observations, order)
    }

    pub fn states(&self) -> &[NodeId] {
        &self.states
    }

    pub fn observations(&self) -> &[NodeId] {
        &self.observations
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn last_state(&self) -> NodeId {
        *self.states.last().expect("at least one state")
    }
}

/// `E(I_{x_{o_1}}(X_{o_1}) ⋯ I_{x_{o_n}}(X_{o_n}) (f(X_{s_{n+1}}) − μ))` by
/// backward propagation. `obs` lists the observed state of each `o_k`.
pub fn hmm_forward_rho(spec: &HmmSpec, f: &Factor, obs: &[usize], mu: f64) -> Result<f64> {
    let net = spec.net;
    let n = spec.observations.len();
    if obs.len() != n {
        return hypothesis("one observed value per observation node is required");
    }
    for (&o, &v) in spec.observations.iter().zip(obs) {
        if v >= net.card(o) {
            return input(format!("state out of range for {}", net.dag().name(o)));
        }
    }
    let last = spec.last_state();
    let fv: Vec<f64> = values_on(net, f, last, "last state")?.iter().map(|v| v - mu).collect();
    let mut full = vec![0usize; net.len()];
    // h over the parent configurations of s_{n+1}.
    let mut h = table(net, last, &mut full, |_, local| local.lower(&fv))?;
    for k in (0..n).rev() {
        let s = spec.states[k];
        let next = spec.states[k + 1];
        let o = spec.observations[k];
        let (o_net, x_o) = (net.locals(o), obs[k]);
        let prev = h;
        h = table(net, s, &mut full, |full, local| {
            let mut y = full.to_vec();
            let phi: Vec<f64> = (0..net.card(s))
                .map(|v| {
                    y[s] = v;
                    let w = prev[parent_index(net, next, &y)];
                    let p = &o_net[v];
                    if w >= 0.0 {
                        w * p.lower_prob(x_o)
                    } else {
                        w * p.upper_prob(x_o)
                    }
                })
                .collect();
            local.lower(&phi)
        })?;
    }
    Ok(h[0])
}

fn parent_index(net: &CredalNetwork, s: NodeId, full: &[usize]) -> usize {
    net.dag().parents(s).iter().fold(0, |acc, &p| acc * net.card(p) + full[p])
}

/// One value per parent configuration of `s`, in local-set order.
fn table(
    net: &CredalNetwork,
    s: NodeId,
    full: &mut [usize],
    value: impl Fn(&[usize], &crate::local::CredalSet) -> f64,
) -> Result<Vec<f64>> {
    let parents = net.dag().parents(s);
    let cards = net.cards(parents);
    let mut out = Vec::with_capacity(net.locals(s).len());
    for (idx, local) in net.locals(s).iter().enumerate() {
        for (p, v) in parents.iter().zip(crate::network::decode(idx, &cards)) {
            full[*p] = v;
        }
        out.push(value(full, local));
    }
    Ok(out)
}

/// Conditional lower expectation of `f(X_{s_{n+1}})` given the observations.
pub fn hmm_conditional(spec: &HmmSpec, f: &Factor, obs: &[usize], rule: Rule, tol: f64) -> Result<BracketResult> {
    let r = RhoEvaluator::new(f.min(), f.max(), |mu| hmm_forward_rho(spec, f, obs, mu));
    match rule {
        Rule::Natural => natural_conditional(&r, tol),
        Rule::Regular => regular_conditional(&r, tol),
    }
}

/// Conditional lower expectation of `f(X_q)` given the state of every other
/// node.
pub fn complete_evidence_lower(net: &CredalNetwork, q: NodeId, x_e: &Assignment, f: &Factor, rule: Rule, tol: f64) -> Result<BracketResult> {
    if q >= net.len() {
        return input("unknown node");
    }
    let dag = net.dag();
    if x_e.contains_key(&q) || x_e.len() != net.len() - 1 || x_e.iter().any(|(&s, &v)| s >= net.len() || v >= net.card(s)) {
        return input("complete evidence must fix every node but the queried one");
    }
    let fv = values_on(net, f, q, "queried")?;
    let local_q = net.local_given(q, x_e)?;
    if dag.children(q).is_empty() || f.min() == f.max() {
        return Ok(BracketResult::exact(local_q.lower(&fv), BracketKind::LocalFallback));
    }
    let below: Vec<NodeId> = dag.descendants(q).into_iter().collect();
    // Lower and upper likelihood of the descendants' evidence for each x_q.
    let mut lo = vec![1.0; fv.len()];
    let mut hi = vec![1.0; fv.len()];
    let mut x = x_e.clone();
    for v in 0..fv.len() {
        x.insert(q, v);
        for &s in &below {
            let l = net.local_given(s, &x)?;
            lo[v] *= l.lower_prob(x[&s]);
            hi[v] *= l.upper_prob(x[&s]);
        }
    }
    let fmin = f.min();
    let fmax = f.max();
    let r = RhoEvaluator::new(fmin, fmax, |mu| {
        let g: Vec<f64> = (0..fv.len()).map(|v| if fv[v] >= mu { lo[v] * (fv[v] - mu) } else { hi[v] * (fv[v] - mu) }).collect();
        Ok(local_q.lower(&g))
    });
    match rule {
        Rule::Natural => natural_conditional(&r, tol),
        Rule::Regular => {
            let mut gate = 1.0;
            for s in (0..net.len()).filter(|s| *s != q && !below.contains(s)) {
                gate *= net.local_given(s, x_e)?.upper_prob(x_e[&s]);
            }
            if gate > TAU_SIGN {
                regular_conditional(&r, tol)
            } else {
                match natural_conditional(&r, tol) {
                    Err(Error::Hypothesis(_)) => {
                        let lo_f = fv.iter().copied().fold(f64::INFINITY, f64::min);
                        Ok(BracketResult::exact(lo_f, BracketKind::VacuousFallback))
                    }
                    other => other,
                }
            }
        }
    }
}
