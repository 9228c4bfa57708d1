//! Running a query file against a network.

use crate::chains::{chain_forward, chain_order, chain_reverse_conditional, complete_evidence_lower, hmm_conditional, HmmSpec};
use crate::conditioning::{condition, conditional, range_on_event, BracketResult, RhoEvaluator, Rule, DEFAULT_TOLERANCE};
use crate::decompose::{self, Reduction};
use crate::error::{hypothesis, input, Result};
use crate::io::{Method, QueryFile, RuleFile};
use crate::joint_lp::lower_expectation_lp;
use crate::network::{Assignment, CredalNetwork, Event, Factor};

#[derive(Debug, Clone)]
pub struct Query {
    pub target: Factor,
    pub evidence: Option<Event>,
    pub rule: Rule,
    pub method: Method,
    pub tolerance: f64,
}

impl Query {
    pub fn from_file(net: &CredalNetwork, q: &QueryFile) -> Result<Query> {
        let target = q.target.to_factor(net)?;
        let evidence = q.evidence.as_ref().map(|e| e.to_event(net)).transpose()?;
        let rule = match (q.rule, &evidence) {
            (Some(RuleFile::Unconditional), Some(_)) => return input("an unconditional query cannot carry evidence"),
            (Some(RuleFile::Regular), _) => Rule::Regular,
            _ => Rule::Natural,
        };
        let tolerance = match &q.tolerance {
            Some(t) => t.value()?,
            None => DEFAULT_TOLERANCE,
        };
        if tolerance.is_nan() || tolerance <= 0.0 {
            return input("tolerance must be positive");
        }
        if let Some(b) = &evidence {
            range_on_event(&target, b)?;
        }
        Ok(Query { target, evidence, rule, method: q.method, tolerance })
    }
}

/// The lower value of one side of a query, with how it was obtained.
#[derive(Debug, Clone)]
pub struct Side {
    pub value: f64,
    pub bracket: Option<BracketResult>,
    pub trace: Option<Reduction>,
}

#[derive(Debug, Clone)]
pub struct Answer {
    pub lower: Side,
    /// Computed as minus the lower value of `−f`.
    pub upper: Side,
    pub rule: &'static str,
    pub method: &'static str,
}

impl Answer {
    /// One `key=value` pair per line.
    pub fn render(&self) -> String {
        let mut out = format!("lower={}\nupper={}\nrule={}\nmethod={}\n", self.lower.value, self.upper.value, self.rule, self.method);
        for (side, s) in [("lower", &self.lower), ("upper", &self.upper)] {
            if let Some(b) = &s.bracket {
                out.push_str(&format!(
                    "{side}_bracket={}\n{side}_iterations={}\n{side}_width={:e}\n",
                    b.kind.label(),
                    b.iterations,
                    b.width
                ));
            }
        }
        out
    }
}

/// The engine a query is sent to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Engine {
    Lp,
    Decompose,
    Chain,
    Hmm,
    CompleteEvidence,
}

impl Engine {
    fn label(self) -> &'static str {
        match self {
            Engine::Lp => "lp",
            Engine::Decompose => "decompose",
            Engine::Chain => "chain",
            Engine::Hmm => "hmm",
            Engine::CompleteEvidence => "complete-evidence",
        }
    }
}

pub fn run(net: &CredalNetwork, q: &Query) -> Result<Answer> {
    let engine = choose(net, q)?;
    let lower = side(net, q, &q.target, engine)?;
    let neg = side(net, q, &q.target.neg(), engine)?;
    let upper = Side { value: -neg.value, ..neg };
    let rule = if q.evidence.is_some() { q.rule.label() } else { "unconditional" };
    Ok(Answer { lower, upper, rule, method: engine.label() })
}

fn only_on(f: &Factor, s: usize) -> bool {
    f.scope().iter().all(|&t| t == s)
}

/// The chain query shape: a function of the first node given the last.
fn chain_fits(net: &CredalNetwork, q: &Query) -> bool {
    let Ok(order) = chain_order(net) else { return false };
    let (first, last) = (order[0], *order.last().expect("non-empty"));
    match &q.evidence {
        None => only_on(&q.target, last),
        Some(b) => net.len() > 1 && only_on(&q.target, first) && b.as_cylinder().is_some_and(|x| x.len() == 1 && x.contains_key(&last)),
    }
}

fn hmm_of<'a>(net: &'a CredalNetwork, q: &Query) -> Option<(HmmSpec<'a>, Vec<usize>)> {
    let x = q.evidence.as_ref()?.as_cylinder()?;
    let &[s] = q.target.scope() else { return None };
    let spec = HmmSpec::from_last_state(net, s).ok()?;
    if x.len() != spec.observations().len() || spec.observations().iter().any(|o| !x.contains_key(o)) {
        return None;
    }
    let obs = spec.observations().iter().map(|o| x[o]).collect();
    Some((spec, obs))
}

fn complete_evidence_of(net: &CredalNetwork, q: &Query) -> Option<(usize, Assignment)> {
    let x = q.evidence.as_ref()?.as_cylinder()?;
    if x.len() + 1 != net.len() {
        return None;
    }
    let node = (0..net.len()).find(|s| !x.contains_key(s))?;
    only_on(&q.target, node).then_some((node, x))
}

fn choose(net: &CredalNetwork, q: &Query) -> Result<Engine> {
    Ok(match q.method {
        Method::Lp => Engine::Lp,
        Method::Decompose => Engine::Decompose,
        Method::Chain if chain_fits(net, q) => Engine::Chain,
        Method::Chain => return hypothesis("the chain method needs a simple chain, a function of its first node and evidence on its last node, or an unconditional function of its last node"),
        Method::Hmm if hmm_of(net, q).is_some() => Engine::Hmm,
        Method::Hmm => return hypothesis("the hmm method needs a hidden Markov model, a function of its last state and evidence on every observation"),
        Method::Auto if chain_fits(net, q) => Engine::Chain,
        Method::Auto if hmm_of(net, q).is_some() => Engine::Hmm,
        Method::Auto if complete_evidence_of(net, q).is_some() => Engine::CompleteEvidence,
        Method::Auto => Engine::Decompose,
    })
}

fn side(net: &CredalNetwork, q: &Query, f: &Factor, engine: Engine) -> Result<Side> {
    let plain = |value| Side { value, bracket: None, trace: None };
    let bracketed = |b: BracketResult| Side { value: b.value, bracket: Some(b), trace: None };
    let Some(b) = &q.evidence else {
        return Ok(match engine {
            Engine::Lp => plain(lower_expectation_lp(net, f)?.value),
            Engine::Chain => plain(chain_forward(net, f)?),
            _ => {
                let p = decompose::lower_expectation(net, f)?;
                Side { value: p.value, bracket: None, trace: Some(p.trace) }
            }
        });
    };
    Ok(match engine {
        Engine::Lp => bracketed(conditional(&RhoEvaluator::lp(net, f, b)?, q.rule, q.tolerance)?),
        Engine::Decompose => {
            let c = condition(net, f, b, q.rule, q.tolerance)?;
            Side { value: c.result.value, bracket: Some(c.result), trace: c.trace }
        }
        Engine::Chain => {
            let x = b.as_cylinder().expect("checked by chain_fits");
            let (&_, &v) = x.iter().next().expect("one observed node");
            bracketed(chain_reverse_conditional(net, f, v, q.rule, q.tolerance)?)
        }
        Engine::Hmm => {
            let (spec, obs) = hmm_of(net, q).expect("checked by choose");
            bracketed(hmm_conditional(&spec, f, &obs, q.rule, q.tolerance)?)
        }
        Engine::CompleteEvidence => {
            let (node, x) = complete_evidence_of(net, q).expect("checked by choose");
            bracketed(complete_evidence_lower(net, node, &x, f, q.rule, q.tolerance)?)
        }
    })
}
