//! Certified bounds on the inradius of the symmetric hull
//!
//! ```text
//! P = conv { (ξ(1) x_q(1), ..., ξ(T) x_q(T)) : Σ_t ξ(t)² <= 1, q != j }
//! ```
//!
//! taken inside the span of its defining points. For a direction `u` in that
//! span write `A_q u = (x_q(t)ᵀ u(t))_t`; the support function is
//! `h(u) = max_q ||A_q u||` and the polar body is `{ y : h(y) <= 1 }`, so
//!
//! ```text
//! r(P) = 1 / R(P°) = min_{||u|| = 1} h(u).
//! ```
//!
//! * Any unit `u` certifies `r <= h(u)` (a feasible polar point of norm `1/h(u)`).
//! * For weights `c` on the simplex, `h(u)² >= Σ_q c_q ||A_q u||²`, so
//!   `r² >= λ_min(Σ_q c_q A_qᵀ A_q)`; this bound is concave in `c` and is pushed
//!   up by exponentiated supergradient ascent.
//! * `h` is 1-Lipschitz, so over a patch of the sphere of chordal radius
//!   `δ` around `u_c`, `h >= h(u_c) - δ`. Best-first subdivision of the
//!   sphere (gnomonic cube faces, one per antipodal pair) tightens the lower
//!   bound toward `r`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{column_space, top_eigenpairs, Matrix, ModalityStack};
use crate::seed;

/// Ascent starts used for the sampled (upper) side.
pub const DEFAULT_STARTS: usize = 32;
const RELAXATION_MAX_ITERS: usize = 2000;
const DESCENT_ITERS: usize = 200;
const UNIT_TOL: f64 = 1e-6;
const SPAN_TOL: f64 = 1e-10;

/// Points `x_q(t)` defining one `P_{-j}`.
#[derive(Clone, Debug)]
pub struct PolytopeSpec {
    /// Column index the polytope excludes.
    pub anchor: usize,
    /// `points[q][t]`, each unit length.
    points: Vec<Vec<Vec<f64>>>,
}

impl PolytopeSpec {
    pub fn new(anchor: usize, points: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::invalid("points", "the polytope needs at least one point"))?;
        let layers = first.len();
        if layers == 0 {
            return Err(Error::invalid("points", "each point needs at least one modality"));
        }
        for (q, p) in points.iter().enumerate() {
            if p.len() != layers {
                return Err(Error::invalid(
                    "points",
                    format!("point {q} has {} modalities, expected {layers}", p.len()),
                ));
            }
            for (t, x) in p.iter().enumerate() {
                if x.len() != first[t].len() {
                    return Err(Error::invalid(
                        "points",
                        format!("point {q}, modality {t}: dimension mismatch"),
                    ));
                }
                let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (len - 1.0).abs() > UNIT_TOL {
                    return Err(Error::invalid(
                        "points",
                        format!("point {q}, modality {t} has length {len}, expected 1"),
                    ));
                }
            }
        }
        Ok(PolytopeSpec { anchor, points })
    }

    /// All other columns sharing `labels[anchor]`.
    pub fn from_data(data: &ModalityStack, labels: &[usize], anchor: usize) -> Result<Self> {
        if labels.len() != data.n() || anchor >= data.n() {
            return Err(Error::shape("polytope labels", data.n(), labels.len()));
        }
        let points = (0..data.n())
            .filter(|&q| q != anchor && labels[q] == labels[anchor])
            .map(|q| data.iter().map(|x| x.column(q)).collect())
            .collect();
        PolytopeSpec::new(anchor, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Bounds on `r(P_{-j})`.
#[derive(Clone, Debug, PartialEq)]
pub struct InradiusBounds {
    pub lower: f64,
    pub upper: f64,
    /// Lower bound from the eigenvalue relaxation alone.
    pub relaxation: f64,
    /// Dimension of the span the inradius lives in.
    pub span_dim: usize,
}

/// Points in span coordinates: `coords[q]` concatenates `Q(t)ᵀ x_q(t)` over `t`.
struct Embedded {
    blocks: Vec<(usize, usize)>,
    coords: Vec<Vec<f64>>,
    dim: usize,
}

impl Embedded {
    fn new(spec: &PolytopeSpec) -> Result<Self> {
        let layers = spec.points[0].len();
        let mut blocks = Vec::with_capacity(layers);
        let mut coords = vec![Vec::new(); spec.points.len()];
        let mut offset = 0;
        for t in 0..layers {
            let cols: Vec<Vec<f64>> = spec.points.iter().map(|p| p[t].clone()).collect();
            let q = column_space(&Matrix::from_columns(&cols)?, SPAN_TOL)?;
            let d = q.cols();
            for (point, x) in coords.iter_mut().zip(&cols) {
                for c in 0..d {
                    point.push((0..q.rows()).map(|r| q[(r, c)] * x[r]).sum());
                }
            }
            blocks.push((offset, d));
            offset += d;
        }
        Ok(Embedded {
            blocks,
            coords,
            dim: offset,
        })
    }

    /// `h(u) = max_q sqrt(Σ_t <a_q(t), u(t)>²)` and the maximizing q.
    fn support(&self, u: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (q, a) in self.coords.iter().enumerate() {
            let mut s = 0.0;
            for &(off, d) in &self.blocks {
                let p: f64 = a[off..off + d].iter().zip(&u[off..off + d]).map(|(x, y)| x * y).sum();
                s += p * p;
            }
            if s > best.0 {
                best = (s, q);
            }
        }
        (best.0.sqrt(), best.1)
    }

    /// Subgradient of `h` at `u` for the active point `q`.
    fn subgradient(&self, u: &[f64], q: usize, h: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        if h <= 0.0 {
            return g;
        }
        let a = &self.coords[q];
        for &(off, d) in &self.blocks {
            let p: f64 = a[off..off + d].iter().zip(&u[off..off + d]).map(|(x, y)| x * y).sum();
            for i in off..off + d {
                g[i] = p * a[i] / h;
            }
        }
        g
    }

    /// Largest `λ_min(Σ_q c_q A_qᵀ A_q)` found by exponentiated supergradient ascent.
    fn relaxation(&self, iters: usize) -> Result<f64> {
        let count = self.coords.len();
        let mut c = vec![1.0 / count as f64; count];
        let mut best = 0.0f64;
        for k in 0..iters {
            let mut value = f64::INFINITY;
            let mut grad = vec![0.0; count];
            for &(off, d) in &self.blocks {
                let m = Matrix::from_fn(d, d, |i, j| {
                    self.coords
                        .iter()
                        .zip(&c)
                        .map(|(a, w)| w * a[off + i] * a[off + j])
                        .sum()
                })?;
                let eig = top_eigenpairs(&m, d)?;
                let lam = eig.values[d - 1];
                if lam < value {
                    value = lam;
                    let v = eig.vector(d - 1);
                    for (g, a) in grad.iter_mut().zip(&self.coords) {
                        let p: f64 = a[off..off + d].iter().zip(&v).map(|(x, y)| x * y).sum();
                        *g = p * p;
                    }
                }
            }
            best = best.max(value);
            let step = 2.0 / ((k + 1) as f64).sqrt();
            let top = grad.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut total = 0.0;
            for (w, g) in c.iter_mut().zip(&grad) {
                *w *= (step * (g - top)).exp();
                total += *w;
            }
            c.iter_mut().for_each(|w| *w /= total);
        }
        Ok(best.max(0.0))
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 0.0 {
        v.iter_mut().for_each(|x| *x /= len);
    }
    len
}

/// A box on the gnomonic face `u_face = 1`, other coordinates in `[lo, hi]`.
struct Patch {
    lower: f64,
    order: u64,
    face: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PartialEq for Patch {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Patch {}
impl PartialOrd for Patch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Patch {
    // max-heap on (-lower, -order): smallest bound first, oldest first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower).then(other.order.cmp(&self.order))
    }
}

struct Subdivision<'a> {
    emb: &'a Embedded,
    heap: BinaryHeap<Patch>,
    evaluations: usize,
    next_order: u64,
    best_upper: f64,
}

impl<'a> Subdivision<'a> {
    fn new(emb: &'a Embedded) -> Self {
        let mut s = Subdivision {
            emb,
            heap: BinaryHeap::new(),
            evaluations: 0,
            next_order: 0,
            best_upper: f64::INFINITY,
        };
        let free = emb.dim - 1;
        for face in 0..emb.dim {
            s.push(face, vec![-1.0; free], vec![1.0; free], 0.0);
        }
        s
    }

    fn lift(&self, face: usize, z: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.emb.dim);
        p.extend_from_slice(&z[..face]);
        p.push(1.0);
        p.extend_from_slice(&z[face..]);
        p
    }

    fn push(&mut self, face: usize, lo: Vec<f64>, hi: Vec<f64>, parent_lower: f64) {
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut u = self.lift(face, &center);
        let center_len = normalize(&mut u);
        let (h, _) = self.emb.support(&u);
        self.evaluations += 1;
        self.best_upper = self.best_upper.min(h);

        // chordal radius via ||p/|p| - c/|c||| <= 2 ||p - c|| / (|p| + |c|)
        let half_diag = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (0.5 * (b - a)).powi(2))
            .sum::<f64>()
            .sqrt();
        let min_len = (1.0
            + lo.iter()
                .zip(&hi)
                .map(|(&a, &b)| {
                    if a > 0.0 {
                        a * a
                    } else if b < 0.0 {
                        b * b
                    } else {
                        0.0
                    }
                })
                .sum::<f64>())
        .sqrt();
        let radius = 2.0 * half_diag / (min_len + center_len);
        let lower = parent_lower.max(h - radius);
        let order = self.next_order;
        self.next_order += 1;
        self.heap.push(Patch {
            lower,
            order,
            face,
            lo,
            hi,
        });
    }

    fn lower(&self) -> f64 {
        self.heap.peek().map_or(self.best_upper, |p| p.lower)
    }

    fn refine(&mut self, budget: usize) {
        while self.evaluations + 2 <= budget {
            let Some(patch) = self.heap.pop() else { break };
            if patch.lo.is_empty() || patch.lower >= self.best_upper {
                self.heap.push(patch);
                break;
            }
            let axis = (0..patch.lo.len())
                .max_by(|&a, &b| {
                    (patch.hi[a] - patch.lo[a])
                        .total_cmp(&(patch.hi[b] - patch.lo[b]))
                        .then(b.cmp(&a))
                })
                .expect("non-empty box");
            let mid = 0.5 * (patch.lo[axis] + patch.hi[axis]);
            let mut left_hi = patch.hi.clone();
            left_hi[axis] = mid;
            let mut right_lo = patch.lo.clone();
            right_lo[axis] = mid;
            self.push(patch.face, patch.lo, left_hi, patch.lower);
            self.push(patch.face, right_lo, patch.hi, patch.lower);
        }
    }
}

fn random_unit(rng: &mut seed::StageRng, dim: usize) -> Vec<f64> {
    loop {
        let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut u) > 1e-12 {
            return u;
        }
    }
}

/// Local descent of `h` on the sphere from `start`; returns the best value seen.
fn descend(emb: &Embedded, mut u: Vec<f64>) -> f64 {
    let (mut h, mut q) = emb.support(&u);
    let mut best = h;
    for k in 0..DESCENT_ITERS {
        let g = emb.subgradient(&u, q, h);
        // project onto the tangent space
        let radial: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        let step = 0.5 / ((k + 1) as f64).sqrt();
        for (ui, gi) in u.iter_mut().zip(&g) {
            *ui -= step * (gi - radial * *ui);
        }
        normalize(&mut u);
        (h, q) = emb.support(&u);
        best = best.min(h);
    }
    best
}

const ROUNDING_SLACK: f64 = 1e-12;

/// Bounds on the inradius of `P_{-j}` within its span.
///
/// `budget` caps the support-function evaluations spent on sphere
/// subdivision and on random sampling; larger budgets (same `seed`) never
/// loosen either bound.
pub fn inradius_bounds(spec: &PolytopeSpec, budget: usize, seed: u64) -> Result<InradiusBounds> {
    inradius_bounds_with(spec, budget, seed, DEFAULT_STARTS)
}

pub fn inradius_bounds_with(spec: &PolytopeSpec, budget: usize, seed: u64, starts: usize) -> Result<InradiusBounds> {
    if budget == 0 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    let emb = Embedded::new(spec)?;

    let relaxation = emb.relaxation(budget.min(RELAXATION_MAX_ITERS))?.sqrt();

    let mut tree = Subdivision::new(&emb);
    tree.refine(budget.max(emb.dim));
    let mut upper = tree.best_upper;
    let mut lower = relaxation.max(tree.lower());

    let mut start_rng = seed::rng(seed::subseed(seed, "inradius-starts"));
    for _ in 0..starts {
        let u = random_unit(&mut start_rng, emb.dim);
        upper = upper.min(descend(&emb, u));
    }
    let mut sample_rng = seed::rng(seed::subseed(seed, "inradius-samples"));
    for _ in 0..budget {
        let u = random_unit(&mut sample_rng, emb.dim);
        upper = upper.min(emb.support(&u).0);
    }

    lower = lower.min(upper);
    debug_assert!(upper <= 1.0 + 1e-12, "inradius upper bound {upper} exceeds 1");
    // widen by a few ulps' worth so rounding never inverts the bracket
    Ok(InradiusBounds {
        lower: lower * (1.0 - ROUNDING_SLACK),
        upper: (upper * (1.0 + ROUNDING_SLACK)).min(1.0),
        relaxation,
        span_dim: emb.dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn single(points: &[[f64; 2]]) -> PolytopeSpec {
        PolytopeSpec::new(0, points.iter().map(|p| vec![p.to_vec()]).collect()).unwrap()
    }

    #[test]
    fn cross_polytope() {
        let b = inradius_bounds(&single(&[[1.0, 0.0], [0.0, 1.0]]), 10_000, 1).unwrap();
        assert!(
            b.lower <= FRAC_1_SQRT_2 + 1e-12 && FRAC_1_SQRT_2 <= b.upper + 1e-12,
            "{b:?}"
        );
        assert!(b.upper - b.lower <= 1e-3, "{b:?}");
    }

    #[test]
    fn single_point_is_a_segment() {
        let spec = PolytopeSpec::new(0, vec![vec![vec![0.6, 0.8, 0.0]]]).unwrap();
        let b = inradius_bounds(&spec, 100, 1).unwrap();
        assert_eq!(b.span_dim, 1);
        assert!((b.lower - 1.0).abs() < 1e-11 && (b.upper - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(PolytopeSpec::new(0, vec![]).is_err());
        assert!(PolytopeSpec::new(0, vec![vec![vec![2.0, 0.0]]]).is_err());
        assert!(inradius_bounds(&single(&[[1.0, 0.0]]), 0, 1).is_err());
    }

    #[test]
    fn hexagon_bracket_is_tight() {
        // symmetric hull of three unit vectors 60 degrees apart: regular hexagon, inradius cos(30 deg)
        let pts: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 3.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let b = inradius_bounds(&single(&pts), 20_000, 5).unwrap();
        let exact = (std::f64::consts::PI / 6.0).cos();
        assert!(b.lower <= exact + 1e-12 && exact <= b.upper + 1e-12, "{b:?}");
        assert!(b.upper - b.lower < 1e-3, "{b:?}");
        // the eigenvalue relaxation alone is capped at 1/sqrt(d)
        assert!(b.relaxation <= FRAC_1_SQRT_2 + 1e-9);
    }
}
