//! Brute-force baselines: the complete extension by enumerating local
//! extreme points, and conditionals read off the global extreme points or
//! solved as a single linear-fractional program.

use std::collections::BTreeMap;

use crate::conditioning::Rule;
use crate::error::{capability, Error, Result};
use crate::graph::NodeId;
use crate::joint_lp::{irrelevance_rows, joint_extreme_points, lower_expectation_lp};
use crate::simplex::{LinearProgram, Outcome, RowKind};
use crate::network::{decode, CredalNetwork, Event, Factor};

pub const MAX_SELECTIONS: usize = 1_000_000;
/// Joint states covered by the complete-extension enumeration.
pub const MAX_ORACLE_STATES: usize = 1 << 12;
/// Probability below which an extreme point is treated as missing the event.
pub const ZERO_PROB: f64 = 1e-12;

/// One precise network inside the complete extension: for every node and
/// parent configuration, an index into that local set's vertex list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BayesianSelection {
    pub choice: BTreeMap<(NodeId, usize), usize>,
}

fn local_vertices(net: &CredalNetwork) -> Result<Vec<Vec<&[Vec<f64>]>>> {
    let mut out = Vec::with_capacity(net.len());
    for s in 0..net.len() {
        let mut per = Vec::new();
        for l in net.locals(s) {
            per.push(l.vertices().ok_or_else(|| {
                Error::Capability(format!("local set of {} has too many states to enumerate", net.dag().name(s)))
            })?);
        }
        out.push(per);
    }
    Ok(out)
}

/// Every Bayesian selection, in odometer order over (node, configuration).
pub fn selections(net: &CredalNetwork) -> Result<Vec<BayesianSelection>> {
    let verts = local_vertices(net)?;
    let slots: Vec<(NodeId, usize, usize)> = verts
        .iter()
        .enumerate()
        .flat_map(|(s, per)| per.iter().enumerate().map(move |(c, v)| (s, c, v.len())))
        .collect();
    let total = count_selections(&slots)?;
    let radix: Vec<usize> = slots.iter().map(|t| t.2).collect();
    Ok((0..total)
        .map(|i| BayesianSelection { choice: slots.iter().map(|t| (t.0, t.1)).zip(decode(i, &radix)).collect() })
        .collect())
}

fn count_selections(slots: &[(NodeId, usize, usize)]) -> Result<usize> {
    let mut total: usize = 1;
    for &(_, _, k) in slots {
        total = match total.checked_mul(k) {
            Some(t) if t <= MAX_SELECTIONS => t,
            _ => return capability(format!("more than {MAX_SELECTIONS} Bayesian selections")),
        };
    }
    Ok(total)
}

/// The joint mass function of a selection, in joint order.
pub fn selection_joint(net: &CredalNetwork, sel: &BayesianSelection) -> Result<Vec<f64>> {
    let n = net.joint_size()?;
    if n > MAX_ORACLE_STATES {
        return capability(format!("oracle handles at most {MAX_ORACLE_STATES} joint states"));
    }
    let verts = local_vertices(net)?;
    let cards = net.all_cards();
    let mut p = vec![1.0; n];
    for (i, pi) in p.iter_mut().enumerate() {
        let x = decode(i, &cards);
        for (s, per) in verts.iter().enumerate() {
            let ctx = net.dag().parents(s).iter().fold(0, |acc, &q| acc * cards[q] + x[q]);
            *pi *= per[ctx][sel.choice[&(s, ctx)]][x[s]];
        }
    }
    Ok(p)
}

/// Lower expectation of `f` under the complete extension.
pub fn complete_extension_lower(net: &CredalNetwork, f: &Factor) -> Result<f64> {
    let n = net.joint_size()?;
    if n > MAX_ORACLE_STATES {
        return capability(format!("oracle handles at most {MAX_ORACLE_STATES} joint states"));
    }
    let all: Vec<NodeId> = (0..net.len()).collect();
    let g = f.extend(&all, &net.all_cards())?;
    let mut best = f64::INFINITY;
    for sel in selections(net)? {
        let p = selection_joint(net, &sel)?;
        best = best.min(p.iter().zip(g.values()).map(|(a, b)| a * b).sum());
    }
    Ok(best)
}

/// Conditional lower expectation of `f` given `b` as the least conditional
/// expectation over the global extreme points that give `b` positive mass.
pub fn irr_extreme_conditional(net: &CredalNetwork, f: &Factor, b: &Event, rule: Rule) -> Result<f64> {
    let points = joint_extreme_points(net)?;
    let all: Vec<NodeId> = (0..net.len()).collect();
    let cards = net.all_cards();
    let g = f.extend(&all, &cards)?;
    let ib = b.indicator().extend(&all, &cards)?;
    let mut best = f64::INFINITY;
    let mut low = f64::INFINITY;
    for p in &points {
        let pb: f64 = p.iter().zip(ib.values()).map(|(a, m)| a * m).sum();
        low = low.min(pb);
        if pb > ZERO_PROB {
            let num: f64 = p.iter().zip(ib.values()).zip(g.values()).map(|((a, m), v)| a * m * v).sum();
            best = best.min(num / pb);
        }
    }
    if best == f64::INFINITY {
        return Err(Error::NotComputable("every extreme point gives the event zero probability".into()));
    }
    if rule == Rule::Natural && low <= ZERO_PROB {
        return Err(Error::NotComputable("the event has zero lower probability".into()));
    }
    Ok(best)
}

/// The same conditional as [`irr_extreme_conditional`], computed without
/// vertex enumeration: after the Charnes–Cooper substitution `y = t P`,
/// minimising `P(I_B f) / P(B)` over the global polytope is the linear
/// program `min y(I_B f)` subject to the homogeneous irrelevance rows on
/// `y`, `Σ y = t` and `y(B) = 1`.
pub fn irr_fractional_conditional(net: &CredalNetwork, f: &Factor, b: &Event, rule: Rule) -> Result<f64> {
    let all: Vec<NodeId> = (0..net.len()).collect();
    let cards = net.all_cards();
    let ib = b.indicator().extend(&all, &cards)?;
    let g = f.extend(&all, &cards)?;
    if rule == Rule::Natural && lower_expectation_lp(net, &ib)?.value <= ZERO_PROB {
        return Err(Error::NotComputable("the event has zero lower probability".into()));
    }
    let (rows, _) = irrelevance_rows(net)?;
    let n = g.values().len();
    let mut lp = LinearProgram::new(n + 1, false);
    lp.objective = ib.values().iter().zip(g.values()).map(|(m, v)| m * v).chain([0.0]).collect();
    for mut r in rows {
        r.push(0.0);
        lp.push(r, RowKind::Ge, 0.0);
    }
    lp.push(vec![1.0; n].into_iter().chain([-1.0]).collect(), RowKind::Eq, 0.0);
    lp.push(ib.values().iter().copied().chain([0.0]).collect(), RowKind::Eq, 1.0);
    match lp.solve_via_dual()? {
        Outcome::Optimal { value, .. } => Ok(value),
        Outcome::Infeasible => Err(Error::NotComputable("the event has zero upper probability".into())),
        Outcome::Unbounded => Err(Error::Model("the fractional program is unbounded".into())),
    }
}
