//! The global linear program over joint mass functions that characterises
//! the irrelevant natural extension, and what can be read off it.
//!
//! Variables are the masses `P(x)` of all joint states. For every node `s`,
//! every configuration `z` of its non-descendants `N(s)` and every
//! homogeneous local constraint `γ` for the parent values in `z`, one row
//! requires `Σ P(x_s, x_D(s), z) γ(x_s) ≥ 0`, the sum running over `s` and
//! its descendants. A final row normalises the masses. Sign constraints on
//! the variables are optional because the rows already imply them.

use std::fmt::Write as _;

use num_rational::BigRational;

use crate::error::{capability, input, Error, Result};
use crate::graph::NodeId;
use crate::local::{dot, TAU_FEAS, VERTEX_RADIUS};
use crate::network::{decode, encode, joint_size, Assignment, CredalNetwork, Event, Factor};
use crate::polytope::simplex_section_vertices;
use crate::simplex::{LinearProgram, Outcome, RowKind};

pub const MAX_LP_VARS: usize = 1 << 16;
pub const MAX_LP_ROWS: usize = 1 << 20;
pub const MAX_VERTEX_STATES: usize = 64;
pub const MAX_EXACT_STATES: usize = 256;

/// What a row of the global program encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowTag {
    Irrelevance { node: NodeId, context: usize, gamma: usize },
    Normalisation,
}

#[derive(Debug, Clone)]
pub struct GlobalLp {
    pub lp: LinearProgram<f64>,
    pub tags: Vec<RowTag>,
    pub cards: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    /// A minimising joint mass function, in joint order.
    pub argmin: Vec<f64>,
}

/// Homogeneous irrelevance rows, one per (node, non-descendant
/// configuration, local constraint), in that nesting order.
pub fn irrelevance_rows(net: &CredalNetwork) -> Result<(Vec<Vec<f64>>, Vec<RowTag>)> {
    let cards = net.all_cards();
    let n_vars = joint_size(&cards)?;
    if n_vars > MAX_LP_VARS {
        return capability(format!("global LP needs {n_vars} variables, limit is {MAX_LP_VARS}"));
    }
    let dag = net.dag();
    let mut rows = Vec::new();
    let mut tags = Vec::new();
    for s in 0..net.len() {
        let nd: Vec<NodeId> = dag.relations(s).non_descendants.into_iter().collect();
        let nd_cards = net.cards(&nd);
        let parents = dag.parents(s);
        let pa_pos: Vec<usize> = parents.iter().map(|p| nd.iter().position(|q| q == p).unwrap()).collect();
        let n_ctx = joint_size(&nd_cards)?;
        // Row offset of each non-descendant configuration.
        let mut offsets = Vec::with_capacity(n_ctx + 1);
        let mut gammas: Vec<&[Vec<f64>]> = Vec::with_capacity(n_ctx);
        let mut total = rows.len();
        for ctx in 0..n_ctx {
            let z = decode(ctx, &nd_cards);
            let pa: usize = pa_pos.iter().zip(parents).fold(0, |acc, (&i, &p)| acc * net.card(p) + z[i]);
            let g = net.locals(s)[pa].homogeneous();
            offsets.push(total);
            gammas.push(g);
            total += g.len();
            if total > MAX_LP_ROWS {
                return capability(format!("global LP exceeds {MAX_LP_ROWS} rows"));
            }
        }
        rows.resize(total, vec![0.0; n_vars]);
        for ctx in 0..n_ctx {
            for g in 0..gammas[ctx].len() {
                tags.push(RowTag::Irrelevance { node: s, context: ctx, gamma: g });
            }
        }
        debug_assert_eq!(tags.len(), total);
        for var in 0..n_vars {
            let x = decode(var, &cards);
            let zx: Vec<usize> = nd.iter().map(|&t| x[t]).collect();
            let ctx = encode(&zx, &nd_cards);
            for (g, gamma) in gammas[ctx].iter().enumerate() {
                rows[offsets[ctx] + g][var] = gamma[x[s]];
            }
        }
    }
    Ok((rows, tags))
}

/// The global program for the lower expectation of `f`.
pub fn build_global_lp(net: &CredalNetwork, f: &Factor, nonneg: bool) -> Result<GlobalLp> {
    let cards = net.all_cards();
    let all: Vec<NodeId> = (0..net.len()).collect();
    let objective = f.extend(&all, &cards)?.values().to_vec();
    let (rows, mut tags) = irrelevance_rows(net)?;
    let n_vars = objective.len();
    let mut lp = LinearProgram::new(n_vars, !nonneg);
    lp.objective = objective;
    for r in rows {
        lp.push(r, RowKind::Ge, 0.0);
    }
    lp.push(vec![1.0; n_vars], RowKind::Eq, 1.0);
    tags.push(RowTag::Normalisation);
    Ok(GlobalLp { lp, tags, cards })
}

/// Solves the global program through its dual, which has one row per joint
/// state instead of one per irrelevance constraint.
pub fn solve_global(g: &GlobalLp) -> Result<LpSolution> {
    let mut outcome = g.lp.solve_via_dual()?;
    if !matches!(outcome, Outcome::Optimal { .. }) && g.lp.free.iter().any(|&f| f) {
        // The rows bound the free form too, so this is round-off in a
        // degenerate pivot; the explicit sign constraints avoid it.
        let mut nonneg = g.lp.clone();
        nonneg.free.iter_mut().for_each(|f| *f = false);
        outcome = nonneg.solve_via_dual()?;
    }
    match outcome {
        Outcome::Optimal { value, x, .. } => Ok(LpSolution { value, argmin: x }),
        Outcome::Infeasible => Err(Error::Model("the global program is infeasible".into())),
        Outcome::Unbounded => Err(Error::Model("the global program is unbounded".into())),
    }
}

/// Lower expectation of `f` by the global program without sign rows.
pub fn lower_expectation_lp(net: &CredalNetwork, f: &Factor) -> Result<LpSolution> {
    solve_global(&build_global_lp(net, f, false)?)
}

pub fn lower_expectation_lp_with(net: &CredalNetwork, f: &Factor, nonneg: bool) -> Result<LpSolution> {
    solve_global(&build_global_lp(net, f, nonneg)?)
}

pub fn upper_expectation_lp(net: &CredalNetwork, f: &Factor) -> Result<f64> {
    Ok(-lower_expectation_lp(net, &f.neg())?.value)
}

/// The same program solved over exact rationals, for at most
/// [`MAX_EXACT_STATES`] joint states.
pub fn lower_expectation_exact(net: &CredalNetwork, f: &Factor) -> Result<BigRational> {
    let n = net.joint_size()?;
    if n > MAX_EXACT_STATES {
        return capability(format!("exact mode handles at most {MAX_EXACT_STATES} joint states, network has {n}"));
    }
    let g = build_global_lp(net, f, false)?;
    match g.lp.to_exact().solve()? {
        Outcome::Optimal { value, .. } => Ok(value),
        _ => Err(Error::Model("the global program has no optimum".into())),
    }
}

/// `E(I_B (f - μ))`, whose sign and roots determine conditional lower
/// expectations.
pub fn rho_lp(net: &CredalNetwork, f: &Factor, b: &Event, mu: f64) -> Result<f64> {
    let g = f.map(|v| v - mu).product(&b.indicator())?;
    Ok(lower_expectation_lp(net, &g)?.value)
}

/// Extreme points of the set of joint mass functions, each in joint order.
pub fn joint_extreme_points(net: &CredalNetwork) -> Result<Vec<Vec<f64>>> {
    let n = net.joint_size()?;
    if n > MAX_VERTEX_STATES {
        return capability(format!("vertex enumeration handles at most {MAX_VERTEX_STATES} joint states, network has {n}"));
    }
    let (rows, _) = irrelevance_rows(net)?;
    Ok(simplex_section_vertices(n, &rows, VERTEX_RADIUS))
}

/// Checks that `p` is a mass function meeting every irrelevance row.
pub fn is_feasible(net: &CredalNetwork, p: &[f64], tol: f64) -> Result<bool> {
    let (rows, _) = irrelevance_rows(net)?;
    Ok(p.iter().all(|x| *x >= -tol) && (p.iter().sum::<f64>() - 1.0).abs() <= tol && rows.iter().all(|r| dot(r, p) >= -tol))
}

/// Lower and upper probability of a single joint state, as products of the
/// local lower and upper probabilities along the network.
pub fn atom_bounds(net: &CredalNetwork, x: &Assignment) -> Result<(f64, f64)> {
    if x.len() != net.len() {
        return input("an atom fixes every node");
    }
    let full: Vec<usize> = x.values().copied().collect();
    let (mut lo, mut hi) = (1.0, 1.0);
    for s in 0..net.len() {
        let l = net.local_at(s, &full);
        lo *= l.lower_prob(full[s]);
        hi *= l.upper_prob(full[s]);
    }
    Ok((lo, hi))
}

/// Line-oriented text form of a program: a header, the objective, then one
/// line per row with its tag.
pub fn dump(net: &CredalNetwork, g: &GlobalLp) -> String {
    let mut out = String::new();
    let lp = &g.lp;
    let free = lp.free.first().copied().unwrap_or(true);
    let _ = writeln!(out, "variables {}", lp.n_vars());
    let _ = writeln!(out, "rows {}", lp.rows.len());
    let _ = writeln!(out, "bounds {}", if free { "free" } else { "nonneg" });
    let _ = writeln!(out, "minimize {}", join(&lp.objective));
    for (row, tag) in lp.rows.iter().zip(&g.tags) {
        let op = match row.kind {
            RowKind::Ge => ">=",
            RowKind::Le => "<=",
            RowKind::Eq => "=",
        };
        let label = match tag {
            RowTag::Irrelevance { node, context, gamma } => {
                format!("node={} context={context} gamma={gamma}", net.dag().name(*node))
            }
            RowTag::Normalisation => "normalise".to_string(),
        };
        let _ = writeln!(out, "row {label} : {} {op} {}", join(&row.coeffs), row.rhs);
    }
    out
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

/// Whether an LP optimum is a valid joint mass function.
pub fn is_mass_function(p: &[f64]) -> bool {
    p.iter().all(|x| *x >= -TAU_FEAS) && (p.iter().sum::<f64>() - 1.0).abs() <= TAU_FEAS
}
