//! Local credal sets: closed convex sets of mass functions on one finite
//! state space, given by vertices, by linear constraints, or both.

use crate::error::{input, Error, Result};
use crate::polytope::{hull_inequalities, simplex_section_vertices};
use crate::simplex::{LinearProgram, Outcome, RowKind};

/// Tolerance on sums and signs of user-supplied mass functions.
pub const TAU_NUM: f64 = 1e-9;
/// Feasibility tolerance for LP-derived facts.
pub const TAU_FEAS: f64 = 1e-7;
/// Max-norm radius under which two enumerated vertices are merged.
pub const VERTEX_RADIUS: f64 = 1e-6;
/// Largest state space for which vertices and constraints are converted.
pub const MAX_CONVERT_STATES: usize = 12;

/// `Σ alpha(x) p(x) ≥ beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl LinearConstraint {
    /// The equivalent homogeneous coefficients `alpha - beta`, valid on the
    /// simplex.
    pub fn homogeneous(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a - self.beta).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredalSet {
    k: usize,
    vertices: Option<Vec<Vec<f64>>>,
    constraints: Option<Vec<LinearConstraint>>,
    homogeneous: Vec<Vec<f64>>,
}

impl CredalSet {
    /// A set given by its extreme points. Fails if a point is not a mass
    /// function or lies in the convex hull of the others.
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<CredalSet> {
        let k = check_points(&vertices)?;
        if let Some(i) = first_redundant(&vertices)? {
            return input(format!("vertex {i} lies in the convex hull of the others"));
        }
        Ok(Self::from_checked_vertices(k, vertices))
    }

    /// Like [`CredalSet::from_vertices`] but drops duplicate and interior
    /// points instead of failing.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<CredalSet> {
        let k = check_points(&points)?;
        let mut kept = points;
        while let Some(i) = first_redundant(&kept)? {
            kept.remove(i);
        }
        Ok(Self::from_checked_vertices(k, kept))
    }

    fn from_checked_vertices(k: usize, vertices: Vec<Vec<f64>>) -> CredalSet {
        // The dual cone of the vertices cuts exactly their hull out of the
        // simplex, so no non-negativity rows are needed.
        let homogeneous = hull_inequalities(k, &vertices);
        CredalSet { k, vertices: Some(vertices), constraints: None, homogeneous }
    }

    /// A set given by linear constraints on a `k`-state space. Fails if the
    /// constraints admit no mass function.
    pub fn from_constraints(k: usize, constraints: Vec<LinearConstraint>) -> Result<CredalSet> {
        if k == 0 {
            return input("state space must be non-empty");
        }
        for c in &constraints {
            if c.alpha.len() != k {
                return input(format!("constraint has {} coefficients, expected {k}", c.alpha.len()));
            }
            if !c.beta.is_finite() || c.alpha.iter().any(|a| !a.is_finite()) {
                return input("non-finite constraint coefficient");
            }
        }
        let mut homogeneous: Vec<Vec<f64>> = constraints.iter().map(LinearConstraint::homogeneous).collect();
        for j in 0..k {
            if !nonnegativity_implied(k, &homogeneous, j)? {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                homogeneous.push(e);
            }
        }
        let vertices = if k <= MAX_CONVERT_STATES {
            let v = simplex_section_vertices(k, &homogeneous, VERTEX_RADIUS);
            if v.is_empty() {
                return Err(Error::Model("constraints admit no mass function".into()));
            }
            Some(v)
        } else {
            if Self::lp_lower(k, &homogeneous, &vec![0.0; k]).is_err() {
                return Err(Error::Model("constraints admit no mass function".into()));
            }
            None
        };
        Ok(CredalSet { k, vertices, constraints: Some(constraints), homogeneous })
    }

    pub fn vacuous(k: usize) -> CredalSet {
        Self::from_constraints(k, Vec::new()).expect("vacuous set is non-empty")
    }

    pub fn singleton(p: Vec<f64>) -> Result<CredalSet> {
        Self::from_vertices(vec![p])
    }

    /// Binary set with `p(first state) ∈ [lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<CredalSet> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return input(format!("bad interval [{lo}, {hi}]"));
        }
        Self::from_constraints(
            2,
            vec![
                LinearConstraint { alpha: vec![1.0, 0.0], beta: lo },
                LinearConstraint { alpha: vec![-1.0, 0.0], beta: -hi },
            ],
        )
    }

    pub fn states(&self) -> usize {
        self.k
    }

    /// Extreme points, when known. Constraint-given sets over more than
    /// [`MAX_CONVERT_STATES`] states have none.
    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    /// The constraints as supplied, or hull inequalities for vertex-given
    /// sets.
    pub fn constraints(&self) -> Vec<LinearConstraint> {
        match &self.constraints {
            Some(c) => c.clone(),
            None => self.homogeneous.iter().map(|g| LinearConstraint { alpha: g.clone(), beta: 0.0 }).collect(),
        }
    }

    pub fn given_constraints(&self) -> Option<&[LinearConstraint]> {
        self.constraints.as_deref()
    }

    /// Homogeneous coefficients `γ` with `Σ γ(x) p(x) ≥ 0` for every member
    /// and, together with `Σp = 1`, for nothing else.
    pub fn homogeneous(&self) -> &[Vec<f64>] {
        &self.homogeneous
    }

    pub fn lower(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.k);
        match &self.vertices {
            Some(v) => v.iter().map(|p| dot(f, p)).fold(f64::INFINITY, f64::min),
            None => Self::lp_lower(self.k, &self.homogeneous, f).expect("set is non-empty"),
        }
    }

    pub fn upper(&self, f: &[f64]) -> f64 {
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        -self.lower(&neg)
    }

    /// Lower expectation through the constraint form, ignoring vertices.
    pub fn lower_lp(&self, f: &[f64]) -> Result<f64> {
        Self::lp_lower(self.k, &self.homogeneous, f)
    }

    pub fn lower_prob(&self, state: usize) -> f64 {
        self.lower(&indicator(self.k, state))
    }

    pub fn upper_prob(&self, state: usize) -> f64 {
        self.upper(&indicator(self.k, state))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.k
            && p.iter().all(|x| *x >= -TAU_FEAS)
            && (p.iter().sum::<f64>() - 1.0).abs() <= TAU_FEAS
            && self.homogeneous.iter().all(|g| dot(g, p) >= -TAU_FEAS)
    }

    fn lp_lower(k: usize, homogeneous: &[Vec<f64>], f: &[f64]) -> Result<f64> {
        let mut lp = LinearProgram::new(k, true);
        lp.objective = f.to_vec();
        lp.push(vec![1.0; k], RowKind::Eq, 1.0);
        for g in homogeneous {
            lp.push(g.clone(), RowKind::Ge, 0.0);
        }
        match lp.solve()? {
            Outcome::Optimal { value, .. } => Ok(value),
            Outcome::Infeasible => Err(Error::Model("empty credal set".into())),
            Outcome::Unbounded => Err(Error::Model("credal set is unbounded".into())),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn indicator(k: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; k];
    e[j] = 1.0;
    e
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = points.first() else { return input("a credal set needs at least one vertex") };
    let k = first.len();
    if k == 0 {
        return input("state space must be non-empty");
    }
    for p in points {
        if p.len() != k {
            return input("vertices have different lengths");
        }
        if p.iter().any(|x| !x.is_finite() || *x < -TAU_NUM) {
            return input(format!("vertex {p:?} has a negative or non-finite entry"));
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > TAU_NUM {
            return input(format!("vertex {p:?} does not sum to one"));
        }
    }
    Ok(k)
}

/// Index of the first point lying in the hull of the others, decided by an
/// LP feasibility problem over convex weights.
fn first_redundant(points: &[Vec<f64>]) -> Result<Option<usize>> {
    let k = points[0].len();
    for i in 0..points.len() {
        let others: Vec<&Vec<f64>> = points.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).collect();
        if others.is_empty() {
            return Ok(None);
        }
        if others.iter().any(|q| q.iter().zip(&points[i]).all(|(a, b)| (a - b).abs() <= VERTEX_RADIUS)) {
            return Ok(Some(i));
        }
        let mut lp = LinearProgram::new(others.len(), false);
        lp.push(vec![1.0; others.len()], RowKind::Eq, 1.0);
        for x in 0..k {
            lp.push(others.iter().map(|q| q[x]).collect(), RowKind::Eq, points[i][x]);
        }
        if matches!(lp.solve()?, Outcome::Optimal { .. }) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

fn nonnegativity_implied(k: usize, homogeneous: &[Vec<f64>], j: usize) -> Result<bool> {
    let mut lp = LinearProgram::new(k, true);
    lp.objective[j] = 1.0;
    lp.push(vec![1.0; k], RowKind::Eq, 1.0);
    for g in homogeneous {
        lp.push(g.clone(), RowKind::Ge, 0.0);
    }
    Ok(match lp.solve()? {
        Outcome::Optimal { value, .. } => value >= -TAU_FEAS,
        // Infeasible: emptiness is reported by the caller.
        Outcome::Infeasible => true,
        Outcome::Unbounded => false,
    })
}
