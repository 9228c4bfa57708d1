//! Two-phase revised simplex for small linear programs.
//!
//! The solver minimises `c·x` subject to `≥`, `≤` and `=` rows. Variables are
//! either non-negative or free; free ones are split into two columns. Pricing
//! is Dantzig's rule until a run of degenerate pivots, then Bland's rule,
//! which cannot cycle. The same code runs over `f64` and over exact
//! rationals through [`Field`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arithmetic needed by the simplex. `f64` compares with tolerances,
/// `BigRational` exactly.
pub trait Field: Clone + Debug + PartialOrd {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Strictly positive beyond the pivot tolerance.
    fn pos(&self) -> bool;
    /// Strictly negative beyond the pivot tolerance.
    fn neg_(&self) -> bool;
    fn exact() -> bool;
    /// Large enough to pivot on.
    fn pivotable(&self) -> bool {
        self.pos()
    }
    fn pivotable_abs(&self) -> bool {
        self.pivotable() || self.neg().pivotable()
    }
    fn is_zero_(&self) -> bool {
        !self.pos() && !self.neg_()
    }
}

const EPS: f64 = 1e-11;
/// Smallest pivot accepted in floating point. Tiny pivots blow up the
/// tableau entries.
const PIVOT_TOL: f64 = 1e-9;
/// Pivots between recomputations of the basis inverse in floating point.
const REINVERT_EVERY: usize = 1000;
/// Primal infeasibility tolerated by the ratio test in floating point.
const HARRIS_TOL: f64 = 1e-9;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn pos(&self) -> bool {
        *self > EPS
    }
    fn neg_(&self) -> bool {
        *self < -EPS
    }
    fn exact() -> bool {
        false
    }
    fn pivotable(&self) -> bool {
        *self > PIVOT_TOL
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(x: f64) -> Self {
        rationalize(x)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn pos(&self) -> bool {
        self.is_positive()
    }
    fn neg_(&self) -> bool {
        self.is_negative()
    }
    fn exact() -> bool {
        true
    }
}

/// The simplest fraction with denominator at most 10^9 that rounds to `x`,
/// or the exact binary value of `x` when there is none.
pub fn rationalize(x: f64) -> BigRational {
    let exact = <BigRational as FromPrimitive>::from_f64(x).expect("finite coefficient");
    if x == x.trunc() {
        return exact;
    }
    // Continued fraction convergents h/k.
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e18 {
            break;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > 1_000_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64) / (k1 as f64) == x {
            return BigRational::new(BigInt::from(h1), BigInt::from(k1));
        }
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    exact
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<T = f64> {
    pub coeffs: Vec<T>,
    pub kind: RowKind,
    pub rhs: T,
}

/// Minimise `objective · x` subject to `rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T = f64> {
    pub objective: Vec<T>,
    pub rows: Vec<Row<T>>,
    /// Variables without a sign constraint.
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T = f64> {
    /// `duals` holds one multiplier per row: non-negative on `≥` rows,
    /// non-positive on `≤` rows, with `objective − Σ duals_i · row_i`
    /// non-negative on every sign-constrained variable and zero on free ones.
    Optimal { value: T, x: Vec<T>, duals: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T: Field> Outcome<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Outcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl<T: Field> LinearProgram<T> {
    pub fn new(n_vars: usize, free: bool) -> Self {
        LinearProgram { objective: vec![T::zero(); n_vars], rows: Vec::new(), free: vec![free; n_vars] }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<T>, kind: RowKind, rhs: T) {
        debug_assert_eq!(coeffs.len(), self.n_vars());
        self.rows.push(Row { coeffs, kind, rhs });
    }

    pub fn solve(&self) -> Result<Outcome<T>> {
        Revised::build(self).run(self)
    }

    /// The dual program `max b·y`, written as a minimisation over `y` with
    /// `≤` rows negated so every multiplier is non-negative or free. Row `j`
    /// of the dual belongs to variable `j` here.
    fn dual(&self) -> LinearProgram<T> {
        let m = self.rows.len();
        let sign = |r: &Row<T>| if r.kind == RowKind::Le { T::one().neg() } else { T::one() };
        let mut d = LinearProgram {
            objective: self.rows.iter().map(|r| r.rhs.mul(&sign(r)).neg()).collect(),
            rows: Vec::with_capacity(self.n_vars()),
            free: self.rows.iter().map(|r| r.kind == RowKind::Eq).collect(),
        };
        for j in 0..self.n_vars() {
            let coeffs: Vec<T> = self.rows.iter().map(|r| r.coeffs[j].mul(&sign(r))).collect();
            let kind = if self.free[j] { RowKind::Eq } else { RowKind::Le };
            d.rows.push(Row { coeffs, kind, rhs: self.objective[j].clone() });
        }
        debug_assert_eq!(d.n_vars(), m);
        d
    }

    /// Solves the dual and reads the primal solution off its multipliers.
    /// Worth it when there are many more rows than variables. Falls back to
    /// the primal when the dual is infeasible, which leaves the primal
    /// either infeasible or unbounded.
    pub fn solve_via_dual(&self) -> Result<Outcome<T>> {
        match self.dual().solve()? {
            Outcome::Optimal { x: y, duals: z, .. } => {
                let x: Vec<T> = z.iter().map(T::neg).collect();
                let duals = y
                    .iter()
                    .zip(&self.rows)
                    .map(|(v, r)| if r.kind == RowKind::Le { v.neg() } else { v.clone() })
                    .collect();
                let value = x.iter().zip(&self.objective).fold(T::zero(), |acc, (a, b)| acc.add(&a.mul(b)));
                Ok(Outcome::Optimal { value, x, duals })
            }
            Outcome::Unbounded => Ok(Outcome::Infeasible),
            Outcome::Infeasible => self.solve(),
        }
    }
}

impl LinearProgram<f64> {
    pub fn to_exact(&self) -> LinearProgram<BigRational> {
        let conv = |v: &[f64]| v.iter().map(|x| <BigRational as Field>::from_f64(*x)).collect::<Vec<_>>();
        LinearProgram {
            objective: conv(&self.objective),
            rows: self
                .rows
                .iter()
                .map(|r| Row { coeffs: conv(&r.coeffs), kind: r.kind, rhs: <BigRational as Field>::from_f64(r.rhs) })
                .collect(),
            free: self.free.clone(),
        }
    }
}

/// Rows are negated when that makes the right-hand side non-negative, or
/// turns a homogeneous `≥` row into a `≤` row whose slack can start basic.
fn flips<T: Field>(r: &Row<T>) -> bool {
    r.rhs.neg_() || (r.rhs.is_zero_() && r.kind == RowKind::Ge)
}

/// Revised simplex on the standard form `A x = b, x ≥ 0, b ≥ 0` with an
/// explicit dense basis inverse. Column layout: split structural columns,
/// then one slack per inequality, then artificials.
struct Revised<T> {
    cols: Vec<Vec<(usize, T)>>,
    b: Vec<T>,
    flipped: Vec<bool>,
    basis: Vec<usize>,
    basic: Vec<bool>,
    /// `B⁻¹` by columns: `binv[k][i]` is row `i`, column `k`.
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
    n_art_start: usize,
    /// Structural column index for each original variable, plus the
    /// negative copy for free variables.
    map: Vec<(usize, Option<usize>)>,
    /// The other half of a split free variable.
    twin: Vec<Option<usize>>,
}

impl<T: Field> Revised<T> {
    fn build(lp: &LinearProgram<T>) -> Revised<T> {
        let m = lp.rows.len();
        let mut map = Vec::with_capacity(lp.n_vars());
        let mut n_struct = 0;
        for &f in &lp.free {
            map.push((n_struct, f.then_some(n_struct + 1)));
            n_struct += if f { 2 } else { 1 };
        }
        let flipped: Vec<bool> = lp.rows.iter().map(flips).collect();
        let sgn = |i: usize, x: &T| if flipped[i] { x.neg() } else { x.clone() };
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_struct];
        for (i, r) in lp.rows.iter().enumerate() {
            for (j, a) in r.coeffs.iter().enumerate() {
                if *a == T::zero() {
                    continue;
                }
                let (p, q) = map[j];
                cols[p].push((i, sgn(i, a)));
                if let Some(q) = q {
                    cols[q].push((i, sgn(i, a).neg()));
                }
            }
        }
        let mut basis = vec![usize::MAX; m];
        for (i, r) in lp.rows.iter().enumerate() {
            if r.kind == RowKind::Eq {
                continue;
            }
            let s = if r.kind == RowKind::Le { T::one() } else { T::one().neg() };
            let s = sgn(i, &s);
            if s.pos() {
                basis[i] = cols.len();
            }
            cols.push(vec![(i, s)]);
        }
        let n_art_start = cols.len();
        let mut twin = vec![None; n_art_start];
        for &(p, q) in &map {
            if let Some(q) = q {
                (twin[p], twin[q]) = (Some(q), Some(p));
            }
        }
        for (i, b) in basis.iter_mut().enumerate() {
            if *b == usize::MAX {
                *b = cols.len();
                cols.push(vec![(i, T::one())]);
            }
        }
        let mut basic = vec![false; cols.len()];
        for &j in &basis {
            basic[j] = true;
        }
        let b: Vec<T> = lp.rows.iter().enumerate().map(|(i, r)| sgn(i, &r.rhs)).collect();
        let binv = (0..m).map(|i| (0..m).map(|k| if i == k { T::one() } else { T::zero() }).collect()).collect();
        Revised { cols, xb: b.clone(), b, flipped, basis, basic, binv, n_art_start, map, twin }
    }

    fn run(mut self, lp: &LinearProgram<T>) -> Result<Outcome<T>> {
        let n_cols = self.cols.len();
        let limit = 20_000 + 50 * (self.b.len() + n_cols);
        if n_cols > self.n_art_start {
            let mut cost = vec![T::zero(); n_cols];
            for c in cost.iter_mut().skip(self.n_art_start) {
                *c = T::one();
            }
            if !self.optimise(&cost, n_cols, limit)? {
                return Err(Error::Model("phase one unbounded".into()));
            }
            let infeas = self.objective_value(&cost);
            let tol = if T::exact() { T::zero() } else { T::from_f64(1e-9) };
            if infeas > tol {
                return Ok(Outcome::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![T::zero(); n_cols];
        for (j, c) in lp.objective.iter().enumerate() {
            let (p, q) = self.map[j];
            cost[p] = c.clone();
            if let Some(q) = q {
                cost[q] = c.neg();
            }
        }
        if !self.optimise(&cost, self.n_art_start, limit)? {
            return Ok(Outcome::Unbounded);
        }
        let mut col_val = vec![T::zero(); n_cols];
        for (i, &j) in self.basis.iter().enumerate() {
            col_val[j] = self.xb[i].clone();
        }
        let x: Vec<T> = self
            .map
            .iter()
            .map(|&(p, q)| match q {
                Some(q) => col_val[p].sub(&col_val[q]),
                None => col_val[p].clone(),
            })
            .collect();
        let value = x.iter().zip(&lp.objective).fold(T::zero(), |acc, (a, b)| acc.add(&a.mul(b)));
        let duals = self
            .multipliers(&cost)
            .into_iter()
            .zip(&self.flipped)
            .map(|(p, &f)| if f { p.neg() } else { p })
            .collect();
        Ok(Outcome::Optimal { value, x, duals })
    }

    fn objective_value(&self, cost: &[T]) -> T {
        self.basis.iter().zip(&self.xb).fold(T::zero(), |acc, (&j, v)| acc.add(&cost[j].mul(v)))
    }

    /// `c_B · B⁻¹`.
    fn multipliers(&self, cost: &[T]) -> Vec<T> {
        let cb: Vec<&T> = self.basis.iter().map(|&j| &cost[j]).collect();
        self.binv.iter().map(|col| cb.iter().zip(col).fold(T::zero(), |acc, (c, v)| acc.add(&c.mul(v)))).collect()
    }

    /// Row `l` of `B⁻¹`.
    fn inverse_row(&self, l: usize) -> Vec<T> {
        self.binv.iter().map(|col| col[l].clone()).collect()
    }

    fn dot(pi: &[T], col: &[(usize, T)]) -> T {
        col.iter().fold(T::zero(), |acc, (i, a)| acc.add(&pi[*i].mul(a)))
    }

    /// `B⁻¹ a_j`.
    fn column(&self, j: usize) -> Vec<T> {
        let mut u = vec![T::zero(); self.b.len()];
        for (k, a) in &self.cols[j] {
            for (x, v) in u.iter_mut().zip(&self.binv[*k]) {
                *x = x.add(&a.mul(v));
            }
        }
        for x in u.iter_mut() {
            if x.is_zero_() {
                *x = T::zero();
            }
        }
        u
    }

    /// Runs simplex iterations over columns `< allowed`. Returns false when
    /// the objective is unbounded below.
    fn optimise(&mut self, cost: &[T], allowed: usize, limit: usize) -> Result<bool> {
        let phase_one = allowed > self.n_art_start;
        let mut degenerate_run = 0usize;
        let mut bland = T::exact();
        // Columns whose only improving direction is below the pivot
        // tolerance; cleared after every pivot.
        let mut blocked = vec![false; allowed];
        let mut iterations = 0;
        let mut fresh = false;
        let mut pi = self.multipliers(cost);
        while iterations < limit {
            if iterations > 0 && iterations % REINVERT_EVERY == 0 && !fresh {
                fresh = self.reinvert();
                pi = self.multipliers(cost);
            }
            let mut entering: Option<(usize, T)> = None;
            for j in 0..allowed {
                // Both halves of a free variable in the basis make it
                // singular; round-off can otherwise price the second in.
                if self.basic[j] || blocked[j] || self.twin.get(j).copied().flatten().is_some_and(|t| self.basic[t]) {
                    continue;
                }
                let d = cost[j].sub(&Self::dot(&pi, &self.cols[j]));
                if !d.neg_() {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.as_ref().is_none_or(|(_, best)| d < *best) {
                    entering = Some((j, d));
                }
            }
            let Some((e, d)) = entering else {
                // Confirm optimality against a fresh inverse.
                if fresh || T::exact() {
                    return Ok(true);
                }
                self.refresh()?;
                fresh = true;
                pi = self.multipliers(cost);
                continue;
            };
            let u = self.column(e);
            let leave = self.leaving(&u, phase_one, bland);
            let Some((l, ratio)) = leave else {
                // Phase one is bounded below by zero, so a missing pivot
                // there, or behind a reduced cost near the tolerance, is
                // round-off rather than a ray.
                if T::exact() || !(phase_one || d.to_f64() > -1e-7) {
                    if !fresh && !T::exact() {
                        self.refresh()?;
                        fresh = true;
                        pi = self.multipliers(cost);
                        continue;
                    }
                    return Ok(false);
                }
                blocked[e] = true;
                continue;
            };
            if ratio.is_zero_() {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(l, e, &u);
            // The entering reduced cost drops to zero along the new row l.
            for (p, col) in pi.iter_mut().zip(&self.binv) {
                *p = p.add(&d.mul(&col[l]));
            }
            fresh = false;
            blocked.iter_mut().for_each(|b| *b = false);
            iterations += 1;
        }
        Err(Error::Convergence(format!("simplex exceeded {limit} iterations")))
    }

    /// The ratio test. Returns the leaving position and its step length.
    fn leaving(&self, u: &[T], phase_one: bool, bland: bool) -> Option<(usize, T)> {
        // A basic artificial left at zero after phase one must stay there,
        // so it blocks in either direction.
        let stuck = |i: usize| !phase_one && self.basis[i] >= self.n_art_start && u[i].pivotable_abs();
        let candidates = (0..u.len()).filter(|&i| u[i].pivotable() || stuck(i));
        let ratio = |i: usize| if stuck(i) { T::zero() } else { self.xb[i].div(&u[i]) };
        if T::exact() {
            let mut leave: Option<(usize, T)> = None;
            for i in candidates {
                let r = ratio(i);
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        let d = r.sub(lr);
                        let tie_wins = if bland { self.basis[i] < self.basis[*li] } else { u[i] > u[*li] };
                        d.neg_() || (d.is_zero_() && tie_wins)
                    }
                };
                if better {
                    leave = Some((i, r));
                }
            }
            return leave;
        }
        // Harris: bound the step with slightly relaxed rows, then take the
        // largest pivot among the rows that block within that bound.
        let size = |i: usize| u[i].to_f64().abs();
        let relaxed = |i: usize| (self.xb[i].to_f64().max(0.0) * (!stuck(i)) as u8 as f64 + HARRIS_TOL) / size(i);
        let bound = candidates.clone().map(relaxed).fold(f64::INFINITY, f64::min);
        candidates
            .filter(|&i| ratio(i).to_f64() <= bound)
            .max_by(|&a, &b| size(a).total_cmp(&size(b)).then(self.basis[b].cmp(&self.basis[a])))
            .map(|i| (i, ratio(i)))
    }

    fn pivot(&mut self, l: usize, e: usize, u: &[T]) {
        let p = u[l].clone();
        let mut theta = self.xb[l].div(&p);
        // Harris steps may land a hair outside the feasible side.
        if !T::exact() && theta.to_f64() < 0.0 {
            theta = T::zero();
        }
        for (i, ui) in u.iter().enumerate() {
            if i != l && !ui.is_zero_() {
                self.xb[i] = self.xb[i].sub(&theta.mul(ui));
            }
        }
        self.xb[l] = theta;
        for col in self.binv.iter_mut() {
            if col[l].is_zero_() {
                continue;
            }
            let t = col[l].div(&p);
            for (v, ui) in col.iter_mut().zip(u) {
                *v = v.sub(&ui.mul(&t));
            }
            col[l] = t;
        }
        self.basic[self.basis[l]] = false;
        self.basic[e] = true;
        self.basis[l] = e;
    }

    /// Recomputes `B⁻¹` and the basic values from scratch by Gauss-Jordan
    /// elimination with partial pivoting, discarding accumulated round-off.
    /// Returns false, leaving everything as it was, in exact arithmetic or
    /// when the basis looks singular.
    fn reinvert(&mut self) -> bool {
        if T::exact() {
            return false;
        }
        let m = self.b.len();
        let mut a = vec![vec![T::zero(); m]; m];
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, v) in &self.cols[j] {
                a[*i][k] = v.clone();
            }
        }
        let mut inv: Vec<Vec<T>> = (0..m).map(|i| (0..m).map(|k| if i == k { T::one() } else { T::zero() }).collect()).collect();
        for k in 0..m {
            let abs = |v: &T| v.to_f64().abs();
            let p = (k..m).max_by(|&x, &y| abs(&a[x][k]).total_cmp(&abs(&a[y][k]))).expect("non-empty");
            if abs(&a[p][k]) < 1e-11 {
                return false;
            }
            a.swap(k, p);
            inv.swap(k, p);
            let piv = a[k][k].clone();
            for v in a[k].iter_mut().chain(inv[k].iter_mut()) {
                *v = v.div(&piv);
            }
            let (arow, irow) = (a[k].clone(), inv[k].clone());
            let a_nz: Vec<usize> = (k..m).filter(|&c| arow[c].to_f64() != 0.0).collect();
            let i_nz: Vec<usize> = (0..m).filter(|&c| irow[c].to_f64() != 0.0).collect();
            for i in 0..m {
                let f = a[i][k].clone();
                if i == k || f.to_f64() == 0.0 {
                    continue;
                }
                for &c in &a_nz {
                    a[i][c] = a[i][c].sub(&f.mul(&arow[c]));
                }
                for &c in &i_nz {
                    inv[i][c] = inv[i][c].sub(&f.mul(&irow[c]));
                }
            }
        }
        // Row k of `inv` now belongs to basis position k.
        self.xb = inv.iter().map(|row| row.iter().zip(&self.b).fold(T::zero(), |acc, (r, b)| acc.add(&r.mul(b)))).collect();
        for v in self.xb.iter_mut() {
            if v.is_zero_() {
                *v = T::zero();
            }
        }
        for (k, col) in self.binv.iter_mut().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = inv[i][k].clone();
            }
        }
        true
    }

    fn refresh(&mut self) -> Result<()> {
        if self.reinvert() {
            Ok(())
        } else {
            Err(Error::Convergence("the simplex basis became singular".into()))
        }
    }

    /// After phase one, pivots basic artificials (at zero level) out of the
    /// basis where some structural or slack column allows it. The rest sit
    /// on redundant rows.
    fn drive_out_artificials(&mut self) {
        for l in 0..self.b.len() {
            if self.basis[l] < self.n_art_start {
                continue;
            }
            let row = self.inverse_row(l);
            let found = (0..self.n_art_start).find(|&j| !self.basic[j] && Self::dot(&row, &self.cols[j]).pivotable_abs());
            if let Some(j) = found {
                let u = self.column(j);
                self.pivot(l, j, &u);
            }
        }
    }
}
