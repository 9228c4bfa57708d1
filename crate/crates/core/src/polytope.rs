//! Double-description enumeration of the generators of a polyhedral cone
//! `{x : a·x ≥ 0 for every row a}`.
//!
//! Rows are added one at a time. While the cone still contains a line the
//! new row is handled by pivoting a lineality direction into a ray; after
//! that the classic step keeps positive and tight rays and combines adjacent
//! positive/negative pairs. Adjacency uses the combinatorial test on the sets
//! of tight rows.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct Cone {
    /// Extreme rays, each scaled to unit maximum norm.
    pub rays: Vec<Vec<f64>>,
    /// A basis of the lineality space.
    pub lineality: Vec<Vec<f64>>,
}

#[derive(Clone)]
struct Ray {
    v: Vec<f64>,
    tight: Vec<u64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scale_unit(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

fn set_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn count(bits: &[u64]) -> usize {
    bits.iter().map(|b| b.count_ones() as usize).sum()
}

fn contains(sup: &[u64], sub: &[u64]) -> bool {
    sup.iter().zip(sub).all(|(a, b)| b & !a == 0)
}

/// Generators of `{x ∈ R^dim : a·x ≥ 0 for a in rows}`.
pub fn cone_generators(dim: usize, rows: &[Vec<f64>]) -> Cone {
    let words = rows.len().div_ceil(64).max(1);
    let mut lineality: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();
    for (r, a) in rows.iter().enumerate() {
        let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm == 0.0 {
            for ray in rays.iter_mut() {
                set_bit(&mut ray.tight, r);
            }
            continue;
        }
        let a: Vec<f64> = a.iter().map(|x| x / norm).collect();
        let pivot = lineality
            .iter()
            .enumerate()
            .map(|(i, l)| (i, dot(&a, l)))
            .filter(|(_, v)| v.abs() > EPS)
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
        if let Some((pi, pv)) = pivot {
            let mut l0 = lineality.swap_remove(pi);
            if pv < 0.0 {
                l0.iter_mut().for_each(|x| *x = -*x);
            }
            let al0 = pv.abs();
            for l in lineality.iter_mut() {
                let c = dot(&a, l) / al0;
                l.iter_mut().zip(&l0).for_each(|(x, y)| *x -= c * y);
            }
            for ray in rays.iter_mut() {
                let c = dot(&a, &ray.v) / al0;
                ray.v.iter_mut().zip(&l0).for_each(|(x, y)| *x -= c * y);
                scale_unit(&mut ray.v);
                set_bit(&mut ray.tight, r);
            }
            let mut tight = vec![0u64; words];
            for prev in 0..r {
                set_bit(&mut tight, prev);
            }
            scale_unit(&mut l0);
            rays.push(Ray { v: l0, tight });
            continue;
        }
        let vals: Vec<f64> = rays.iter().map(|ray| dot(&a, &ray.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > EPS).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < -EPS).collect();
        if neg.is_empty() {
            for (i, ray) in rays.iter_mut().enumerate() {
                if vals[i].abs() <= EPS {
                    set_bit(&mut ray.tight, r);
                }
            }
            continue;
        }
        let need = dim.saturating_sub(lineality.len()).saturating_sub(2);
        let mut fresh = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let z: Vec<u64> = rays[p].tight.iter().zip(&rays[n].tight).map(|(x, y)| x & y).collect();
                if count(&z) < need {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(q, ray)| q == p || q == n || !contains(&ray.tight, &z));
                if !adjacent {
                    continue;
                }
                let (vp, vn) = (vals[p], -vals[n]);
                let mut v: Vec<f64> = rays[n].v.iter().zip(&rays[p].v).map(|(x, y)| vp * x + vn * y).collect();
                scale_unit(&mut v);
                let mut tight = z;
                set_bit(&mut tight, r);
                fresh.push(Ray { v, tight });
            }
        }
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (i, mut ray) in rays.into_iter().enumerate() {
            if vals[i] < -EPS {
                continue;
            }
            if vals[i].abs() <= EPS {
                set_bit(&mut ray.tight, r);
            }
            next.push(ray);
        }
        for ray in fresh {
            let dup = next.iter().any(|q| q.v.iter().zip(&ray.v).all(|(x, y)| (x - y).abs() <= 1e-9));
            if !dup {
                next.push(ray);
            }
        }
        rays = next;
    }
    for l in lineality.iter_mut() {
        scale_unit(l);
    }
    Cone { rays: rays.into_iter().map(|r| r.v).collect(), lineality }
}

/// Vertices of `{p ≥ 0 : Σp = 1, γ·p ≥ 0 for γ in rows}`, each rescaled
/// to sum to one. Points closer than `radius` in max-norm are merged.
pub fn simplex_section_vertices(dim: usize, rows: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    all.extend(rows.iter().cloned());
    let cone = cone_generators(dim, &all);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in cone.rays {
        let s: f64 = r.iter().sum();
        if s <= EPS {
            continue;
        }
        let p: Vec<f64> = r.iter().map(|x| (x / s).max(0.0)).collect();
        if !out.iter().any(|q| q.iter().zip(&p).all(|(x, y)| (x - y).abs() <= radius)) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| b.iter().zip(a).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Homogeneous inequalities `γ·p ≥ 0` whose intersection with the simplex
/// is the convex hull of `points` (each summing to one).
pub fn hull_inequalities(dim: usize, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cone = cone_generators(dim, points);
    let mut out = cone.rays;
    for l in cone.lineality {
        out.push(l.iter().map(|x| -x).collect());
        out.push(l);
    }
    out
}
