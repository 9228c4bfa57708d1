//! Conditional lower expectations through the function
//! `ρ(μ) = E(I_B (f − μ))`.
//!
//! `ρ` is concave and non-increasing. When the lower probability of `B` is
//! positive it has a single root, the natural-extension conditional. When
//! only the upper probability is positive, the regular extension is the
//! right end of the interval where `ρ` vanishes.

use crate::decompose::{self, event_to_sub, fmt_assignment, fmt_set, to_sub, Reduction, ReductionKind};
use crate::error::{hypothesis, Error, Result};
use crate::graph::NodeSet;
use crate::joint_lp::{atom_bounds, lower_expectation_lp};
use crate::network::{joint_size, Assignment, CredalNetwork, Event, Factor};

pub const TAU_SIGN: f64 = 1e-10;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Natural,
    Regular,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::Natural => "natural",
            Rule::Regular => "regular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    UniqueRoot,
    RightmostRoot,
    /// Upper probability of the event is zero; the value is the minimum of
    /// `f` over the event.
    VacuousFallback,
    /// Answered without bracketing, by an unconditional lower expectation
    /// on a sub-network.
    LocalFallback,
}

impl BracketKind {
    pub fn label(self) -> &'static str {
        match self {
            BracketKind::UniqueRoot => "unique-root",
            BracketKind::RightmostRoot => "rightmost-root",
            BracketKind::VacuousFallback => "vacuous-fallback",
            BracketKind::LocalFallback => "local-fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketResult {
    pub value: f64,
    pub kind: BracketKind,
    pub iterations: usize,
    pub width: f64,
}

impl BracketResult {
    pub fn exact(value: f64, kind: BracketKind) -> BracketResult {
        BracketResult { value, kind, iterations: 0, width: 0.0 }
    }
}

/// Evaluates `ρ` through some engine, together with the range of `f` on
/// the conditioning event.
pub struct RhoEvaluator<'a> {
    eval: Box<dyn Fn(f64) -> Result<f64> + 'a>,
    /// Smallest value of `f` on the event.
    pub fmin: f64,
    /// Largest value of `f` on the event.
    pub fmax: f64,
}

impl<'a> RhoEvaluator<'a> {
    pub fn new(fmin: f64, fmax: f64, eval: impl Fn(f64) -> Result<f64> + 'a) -> RhoEvaluator<'a> {
        RhoEvaluator { eval: Box::new(eval), fmin, fmax }
    }

    /// `ρ` computed by the global linear program.
    pub fn lp(net: &'a CredalNetwork, f: &'a Factor, b: &'a Event) -> Result<RhoEvaluator<'a>> {
        let (fmin, fmax) = range_on_event(f, b)?;
        let ib = b.indicator();
        Ok(RhoEvaluator::new(fmin, fmax, move |mu| {
            let g = f.map(|v| v - mu).product(&ib)?;
            Ok(lower_expectation_lp(net, &g)?.value)
        }))
    }

    /// `ρ` computed by the decomposition planner.
    pub fn planned(net: &'a CredalNetwork, f: &'a Factor, b: &'a Event) -> Result<RhoEvaluator<'a>> {
        let (fmin, fmax) = range_on_event(f, b)?;
        let ib = b.indicator();
        Ok(RhoEvaluator::new(fmin, fmax, move |mu| {
            let g = f.map(|v| v - mu).product(&ib)?;
            Ok(decompose::lower_expectation(net, &g)?.value)
        }))
    }

    pub fn rho(&self, mu: f64) -> Result<f64> {
        (self.eval)(mu)
    }

    /// Whether the event has positive lower probability.
    pub fn lower_prob_positive(&self) -> Result<bool> {
        Ok(self.rho(self.fmin - 1.0)? > TAU_SIGN)
    }

    /// Whether the event has positive upper probability.
    pub fn upper_prob_positive(&self) -> Result<bool> {
        Ok(self.rho(self.fmax + 1.0)? < -TAU_SIGN)
    }
}

/// Minimum and maximum of `f` over the joint states in `b`.
pub fn range_on_event(f: &Factor, b: &Event) -> Result<(f64, f64)> {
    let masked = f.combine(&b.indicator(), |v, m| if m > 0.5 { v } else { f64::NAN })?;
    let vals: Vec<f64> = masked.values().iter().copied().filter(|v| !v.is_nan()).collect();
    if vals.is_empty() {
        return Err(Error::Input("conditioning event is empty".into()));
    }
    let _ = joint_size(masked.cards())?;
    Ok((vals.iter().copied().fold(f64::INFINITY, f64::min), vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
}

/// The unique root of `ρ`. Fails unless the event has positive lower
/// probability.
pub fn natural_conditional(r: &RhoEvaluator, tol: f64) -> Result<BracketResult> {
    if !r.lower_prob_positive()? {
        return hypothesis("lower probability of the conditioning event is zero; the natural extension is not recoverable from its root");
    }
    unique_root(r, tol)
}

fn unique_root(r: &RhoEvaluator, tol: f64) -> Result<BracketResult> {
    let (mut lo, mut hi) = (r.fmin, r.fmax);
    let mut it = 0;
    while hi - lo > tol {
        if it == MAX_ITERATIONS {
            return Err(Error::Convergence(format!("bisection did not reach width {tol} in {MAX_ITERATIONS} steps")));
        }
        it += 1;
        let mid = 0.5 * (lo + hi);
        let v = r.rho(mid)?;
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            return Ok(BracketResult { value: mid, kind: BracketKind::UniqueRoot, iterations: it, width: 0.0 });
        }
    }
    Ok(BracketResult { value: 0.5 * (lo + hi), kind: BracketKind::UniqueRoot, iterations: it, width: hi - lo })
}

/// The regular-extension conditional: the unique root when the lower
/// probability is positive, the rightmost root when only the upper one is,
/// and the minimum of `f` on the event otherwise.
pub fn regular_conditional(r: &RhoEvaluator, tol: f64) -> Result<BracketResult> {
    if r.lower_prob_positive()? {
        return unique_root(r, tol);
    }
    if !r.upper_prob_positive()? {
        return Ok(BracketResult::exact(r.fmin, BracketKind::VacuousFallback));
    }
    rightmost_root(r, tol)
}

/// Largest `μ` with `ρ(μ) ≥ 0`, given `ρ(fmin) ≥ 0`.
fn rightmost_root(r: &RhoEvaluator, tol: f64) -> Result<BracketResult> {
    let (mut lo, mut hi) = (r.fmin, r.fmax);
    let mut it = 0;
    if left_of_root(r, hi, hi + 1.0, tol)? {
        return Ok(BracketResult { value: hi, kind: BracketKind::RightmostRoot, iterations: 1, width: 0.0 });
    }
    while hi - lo > tol {
        if it == MAX_ITERATIONS {
            return Err(Error::Convergence(format!("bisection did not reach width {tol} in {MAX_ITERATIONS} steps")));
        }
        it += 1;
        let mid = 0.5 * (lo + hi);
        if left_of_root(r, mid, hi, tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BracketResult { value: 0.5 * (lo + hi), kind: BracketKind::RightmostRoot, iterations: it, width: hi - lo })
}

/// Whether `μ` is at or left of the rightmost root. Small negative values
/// are checked against a second evaluation further right: by concavity the
/// chord through both points crosses zero no further left than the root, so
/// a crossing within `tol` of `μ` marks the value as noise.
fn left_of_root(r: &RhoEvaluator, mu: f64, hi: f64, tol: f64) -> Result<bool> {
    let v = r.rho(mu)?;
    if v >= 0.0 {
        return Ok(true);
    }
    if v < -TAU_SIGN {
        return Ok(false);
    }
    let w = mu + (0.5 * (hi - mu)).max(1e-6);
    let vw = r.rho(w)?;
    if vw >= -TAU_SIGN {
        return Ok(true);
    }
    let slope = (v - vw) / (w - mu);
    Ok(slope <= 0.0 || (-v / slope) <= tol)
}

pub fn conditional(r: &RhoEvaluator, rule: Rule, tol: f64) -> Result<BracketResult> {
    match rule {
        Rule::Natural => natural_conditional(r, tol),
        Rule::Regular => regular_conditional(r, tol),
    }
}

/// A conditional lower expectation with the reduction that produced it, if
/// any.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub result: BracketResult,
    pub trace: Option<Reduction>,
}

/// The smallest closed set containing the scope of `f` whose parents are all
/// observed and whose descendants are all unobserved.
pub fn evidence_closed_set(net: &CredalNetwork, scope: &NodeSet, observed: &NodeSet) -> NodeSet {
    let dag = net.dag();
    let mut k = scope.clone();
    loop {
        let mut next = dag.closure(&k);
        let below = dag.set_descendants(&next);
        next.extend(below.intersection(observed).copied());
        let above = dag.set_parents(&next);
        next.extend(above.difference(observed).copied());
        if next == k {
            return k;
        }
        k = next;
    }
}

/// Conditional lower expectation of `f` given the observation `x_e`. The
/// evidence is split around a closed set `K` containing the scope of `f`
/// into an event on `K`, the values of the parents of `K` and an event on
/// the rest, and the problem moves to the sub-network on `K`. Under the
/// regular rule the sub-network answer is used as is when the upper
/// probability of the outside evidence is positive, and conditioned by the
/// regular rule again otherwise.
pub fn reduce_then_condition(net: &CredalNetwork, f: &Factor, x_e: &Assignment, rule: Rule, tol: f64) -> Result<Conditioned> {
    if f.scope().iter().chain(x_e.keys()).any(|&s| s >= net.len()) {
        return Err(Error::Input("query refers to a node outside the network".into()));
    }
    let b = Event::cylinder(net, x_e)?;
    if f.min() == f.max() {
        return Ok(Conditioned { result: BracketResult::exact(f.min(), BracketKind::LocalFallback), trace: None });
    }
    let observed: NodeSet = x_e.keys().copied().collect();
    let k = evidence_closed_set(net, &f.scope_set(), &observed);
    let dag = net.dag();
    if k == dag.all() {
        let r = RhoEvaluator::planned(net, f, &b)?;
        return Ok(Conditioned { result: conditional(&r, rule, tol)?, trace: None });
    }
    let rel = dag.set_relations(&k);
    let pick = |set: &NodeSet| -> Assignment { x_e.iter().filter(|(s, _)| set.contains(s)).map(|(&s, &v)| (s, v)).collect() };
    let x_pa = pick(&rel.parents);
    let x_k = pick(&k);
    let x_nn = pick(&rel.non_parent_non_descendants);
    let (sub, old) = net.sub_network(&k, &x_pa)?;
    let fs = to_sub(f, &old)?;
    let mut premise = vec![
        ("K".to_string(), fmt_set(net, &k)),
        ("parents".to_string(), fmt_assignment(net, &x_pa)),
        ("inside".to_string(), fmt_assignment(net, &x_k)),
        ("outside".to_string(), fmt_assignment(net, &x_nn)),
    ];
    let sub_rule = match rule {
        Rule::Natural => Rule::Natural,
        Rule::Regular => {
            let mut gate_event = x_pa.clone();
            gate_event.extend(x_nn.iter().map(|(&s, &v)| (s, v)));
            let upper = outside_upper(net, &rel.non_descendants, &gate_event)?;
            premise.push(("gate".to_string(), upper.to_string()));
            // Outside evidence of positive upper probability leaves the regular
            // extension intact inside K; otherwise the whole event is
            // impossible and the regular extension is the natural one.
            if upper > TAU_SIGN {
                Rule::Regular
            } else {
                Rule::Natural
            }
        }
    };
    premise.push(("rule".to_string(), sub_rule.label().to_string()));
    let (result, sub_trace) = if x_k.is_empty() {
        let p = decompose::lower_expectation(&sub, &fs)?;
        (BracketResult::exact(p.value, BracketKind::LocalFallback), vec![p.trace])
    } else {
        let bk = event_to_sub(&Event::cylinder(net, &x_k)?, &old)?;
        let r = RhoEvaluator::planned(&sub, &fs, &bk)?;
        match conditional(&r, sub_rule, tol) {
            Ok(out) => (out, Vec::new()),
            // An impossible event whose natural extension is out of reach of
            // the bracketing falls back to the vacuous bound.
            Err(Error::Hypothesis(_)) if rule == Rule::Regular => {
                premise.push(("fallback".to_string(), "vacuous".to_string()));
                let (lo, _) = range_on_event(f, &b)?;
                (BracketResult::exact(lo, BracketKind::VacuousFallback), Vec::new())
            }
            Err(e) => return Err(e),
        }
    };
    premise.push(("bracket".to_string(), result.kind.label().to_string()));
    let trace = Reduction { kind: ReductionKind::Marginalisation, premise, value: result.value, sub: sub_trace };
    Ok(Conditioned { result, trace: Some(trace) })
}

/// Upper probability of the cylinder `x` in the sub-network on the
/// ancestral set `n`.
fn outside_upper(net: &CredalNetwork, n: &NodeSet, x: &Assignment) -> Result<f64> {
    if x.is_empty() {
        return Ok(1.0);
    }
    let (sub, old) = net.sub_network(n, &Assignment::new())?;
    let xs: Assignment = x.iter().map(|(s, &v)| (old.binary_search(s).expect("evidence lies in the sub-network"), v)).collect();
    if xs.len() == sub.len() {
        return Ok(atom_bounds(&sub, &xs)?.1);
    }
    let ind = Event::cylinder(&sub, &xs)?.indicator();
    Ok(decompose::upper_expectation(&sub, &ind)?.value)
}

/// Conditional lower expectation of `f` given any event: cylinders go
/// through [`reduce_then_condition`], other events are bracketed directly.
pub fn condition(net: &CredalNetwork, f: &Factor, b: &Event, rule: Rule, tol: f64) -> Result<Conditioned> {
    range_on_event(f, b)?;
    match b.as_cylinder() {
        Some(x) => reduce_then_condition(net, f, &x, rule, tol),
        None => {
            let r = RhoEvaluator::planned(net, f, b)?;
            Ok(Conditioned { result: conditional(&r, rule, tol)?, trace: None })
        }
    }
}
