//! Simplices, piecewise-linear sets of empty interior, and their tangent
//! direction sets.
//!
//! A `PLSet` in `R^n` is a finite union of simplices of dimension at most
//! `n−1`.  Its tangent set `τ(A)` is the finite family of direction
//! subspaces of the maximal simplices; a unit vector is regular for `A` when
//! it keeps a positive distance to every member of `τ(A)`.

use crate::error::{Error, Result};
use crate::geom::{self, angle_sym, hyperplane_frame, unit, Subspace, Vector};
use nalgebra::{DMatrix, DVector};

const EPS_GEOM: f64 = 1e-12;
/// Tolerance for clustering computed direction frames; looser than
/// `EPS_GEOM` to absorb round-off in orthonormalization.
const DIR_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Simplex {
    n: usize,
    vertices: Vec<Vector>,
}

impl Simplex {
    /// A simplex from affinely independent vertices (dimension
    /// `vertices.len() − 1`).
    pub fn new(n: usize, vertices: Vec<Vector>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::degenerate("simplex needs at least one vertex"));
        }
        for v in &vertices {
            if v.len() != n {
                return Err(Error::dim("vertex dimension differs from ambient"));
            }
        }
        if vertices.len() > n + 1 {
            return Err(Error::degenerate("too many vertices for a simplex"));
        }
        if vertices.len() > 1 {
            let e = edge_matrix(&vertices);
            let svd = e.svd(false, false);
            let scale = vertices
                .iter()
                .map(|v| v.norm())
                .fold(1.0f64, f64::max);
            let min_sv = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_sv <= EPS_GEOM * scale.max(1.0) {
                return Err(Error::degenerate("vertices are affinely dependent"));
            }
        }
        Ok(Simplex { n, vertices })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    /// Direction subspace (span of the edges from vertex 0).
    pub fn direction(&self) -> Result<Subspace> {
        let edges: Vec<Vector> = self
            .vertices
            .iter()
            .skip(1)
            .map(|v| v - &self.vertices[0])
            .collect();
        Subspace::span(self.n, &edges)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                d = d.max((&self.vertices[i] - &self.vertices[j]).norm());
            }
        }
        d
    }

    /// Point of the simplex with the given barycentric weights.
    pub fn barycentric_point(&self, weights: &[f64]) -> Vector {
        let mut p = DVector::zeros(self.n);
        for (w, v) in weights.iter().zip(&self.vertices) {
            p += v * *w;
        }
        p
    }

    /// Barycentric coordinates of `p` relative to the simplex (least squares
    /// in the affine hull); the residual is the distance to the hull.
    pub fn barycentric_coords(&self, p: &Vector) -> (Vec<f64>, f64) {
        let d = self.dim();
        if d == 0 {
            return (vec![1.0], (p - &self.vertices[0]).norm());
        }
        let e = edge_matrix(&self.vertices);
        let rhs = p - &self.vertices[0];
        let svd = e.clone().svd(true, true);
        let x = svd.solve(&rhs, 1e-14).expect("svd solve");
        let res = (&e * &x - &rhs).norm();
        let mut coords = Vec::with_capacity(d + 1);
        coords.push(1.0 - x.iter().sum::<f64>());
        coords.extend(x.iter().cloned());
        (coords, res)
    }

    /// Whether `p` lies in the simplex, within `tol` both in the hull
    /// direction and transversally.
    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        let scale = self.diameter().max(1.0);
        let (coords, res) = self.barycentric_coords(p);
        res <= tol && coords.iter().all(|&c| c >= -tol / scale)
    }

    /// Whether this simplex is contained in `other` (vertex membership).
    pub fn contained_in(&self, other: &Simplex, tol: f64) -> bool {
        self.vertices.iter().all(|v| other.contains(v, tol))
    }
}

fn edge_matrix(vertices: &[Vector]) -> DMatrix<f64> {
    let n = vertices[0].len();
    let d = vertices.len() - 1;
    let mut e = DMatrix::zeros(n, d);
    for j in 0..d {
        e.set_column(j, &(&vertices[j + 1] - &vertices[0]));
    }
    e
}

/// A finite union of simplices of empty interior in `R^n`.
#[derive(Debug, Clone)]
pub struct PLSet {
    n: usize,
    simplices: Vec<Simplex>,
}

impl PLSet {
    pub fn new(n: usize, simplices: Vec<Simplex>) -> Result<Self> {
        for s in &simplices {
            if s.ambient_dim() != n {
                return Err(Error::dim("simplex ambient dimension mismatch"));
            }
            if s.dim() >= n {
                return Err(Error::contract(format!(
                    "a {}-simplex has nonempty interior in R^{}",
                    s.dim(),
                    n
                )));
            }
        }
        Ok(PLSet { n, simplices })
    }

    pub fn empty(n: usize) -> Self {
        PLSet { n, simplices: vec![] }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Indices of the maximal simplices: those not contained in another
    /// simplex of the list (mutually equal simplices keep the first).
    pub fn maximal_indices(&self) -> Vec<usize> {
        let tol = 1e-9;
        let mut keep = Vec::new();
        'outer: for i in 0..self.simplices.len() {
            let si = &self.simplices[i];
            for j in 0..self.simplices.len() {
                if i == j {
                    continue;
                }
                let sj = &self.simplices[j];
                if si.contained_in(sj, tol) {
                    let mutual = sj.contained_in(si, tol);
                    if !mutual || j < i {
                        continue 'outer;
                    }
                }
            }
            keep.push(i);
        }
        keep
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> Option<(Vector, Vector)> {
        let mut lo: Option<Vector> = None;
        let mut hi: Option<Vector> = None;
        for s in &self.simplices {
            for v in s.vertices() {
                match (&mut lo, &mut hi) {
                    (Some(l), Some(h)) => {
                        for i in 0..self.n {
                            l[i] = l[i].min(v[i]);
                            h[i] = h[i].max(v[i]);
                        }
                    }
                    _ => {
                        lo = Some(v.clone());
                        hi = Some(v.clone());
                    }
                }
            }
        }
        lo.zip(hi)
    }
}

/// The tangent direction set `τ(A)`: directions of the maximal simplices,
/// deduplicated.
pub fn tangent_set(a: &PLSet) -> Result<Vec<Subspace>> {
    let mut dirs: Vec<Subspace> = Vec::new();
    for i in a.maximal_indices() {
        let d = a.simplices()[i].direction()?;
        let mut dup = false;
        for existing in &dirs {
            if existing.dim() == d.dim() && angle_sym(existing, &d)? < DIR_TOL {
                dup = true;
                break;
            }
        }
        if !dup {
            dirs.push(d);
        }
    }
    Ok(dirs)
}

/// Regularity margin `min { d(λ, T) : T ∈ τ(A) }`; `+∞` for an empty set.
pub fn regularity_margin(lambda: &Vector, a: &PLSet) -> Result<f64> {
    let lam = unit(lambda)?;
    let mut m = f64::INFINITY;
    for t in tangent_set(a)? {
        m = m.min(geom::dist_to_subspace(&lam, &t)?);
    }
    Ok(m)
}

/// Greedy partition of the simplex list into groups whose pairwise
/// direction gaps stay below `alpha` (each group is `alpha`-flat).
pub fn flat_partition(a: &PLSet, alpha: f64) -> Result<Vec<PLSet>> {
    if !(alpha > 0.0) {
        return Err(Error::contract("flatness parameter must be positive"));
    }
    let mut reps: Vec<Subspace> = Vec::new();
    let mut groups: Vec<Vec<Simplex>> = Vec::new();
    for s in a.simplices() {
        let d = s.direction()?;
        let mut placed = false;
        for (rep, group) in reps.iter().zip(groups.iter_mut()) {
            if angle_sym(rep, &d)? <= alpha / 2.0 {
                group.push(s.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            reps.push(d);
            groups.push(vec![s.clone()]);
        }
    }
    groups
        .into_iter()
        .map(|g| PLSet::new(a.ambient_dim(), g))
        .collect()
}

/// One simplex of a PL set written as a Lipschitz graph along a direction:
/// an affine function on a shadow simplex in `R^{n−1}` (coordinates in the
/// canonical frame of `N_λ`).
#[derive(Debug, Clone)]
pub struct GraphPiece {
    /// Shadow simplex in `R^{n−1}`.
    pub shadow: Simplex,
    /// Height at `shadow.vertices()[0]`.
    pub value0: f64,
    /// Gradient within the shadow's affine hull (length `n−1`).
    pub grad: Vector,
    /// `|grad|` — the Lipschitz constant of the piece.
    pub slope: f64,
    /// Index of the source simplex in the input set.
    pub source: usize,
}

impl GraphPiece {
    /// Affine value at an arbitrary shadow point.
    pub fn value(&self, x: &Vector) -> f64 {
        self.value0 + self.grad.dot(&(x - &self.shadow.vertices()[0]))
    }
}

/// Decompose `A` into graph pieces along a regular direction `λ`.
///
/// Requires `regularity_margin(λ, A) ≥ alpha > 0`; every simplex then
/// projects injectively along `λ` and its piece has slope at most
/// `sqrt(1−alpha²)/alpha`.  Pieces are returned simplex by simplex.
pub fn graph_decompose(a: &PLSet, lambda: &Vector, alpha: f64) -> Result<Vec<GraphPiece>> {
    if !(alpha > 0.0) {
        return Err(Error::contract("regularity margin must be positive"));
    }
    let lam = unit(lambda)?;
    let margin = regularity_margin(&lam, a)?;
    if margin < alpha - 1e-12 {
        return Err(Error::contract(format!(
            "direction has margin {margin:.3e}, below the requested {alpha:.3e}"
        )));
    }
    let frame = hyperplane_frame(&lam)?;
    let ft = frame.transpose();
    let mut pieces = Vec::new();
    for idx in a.maximal_indices() {
        let s = &a.simplices()[idx];
        let shadow_vertices: Vec<Vector> = s.vertices().iter().map(|v| &ft * v).collect();
        let heights: Vec<f64> = s.vertices().iter().map(|v| lam.dot(v)).collect();
        let shadow = Simplex::new(a.ambient_dim() - 1, shadow_vertices.clone())?;
        let grad = if s.dim() == 0 {
            DVector::zeros(a.ambient_dim() - 1)
        } else {
            // least-norm gradient with grad·(s_i − s_0) = h_i − h_0
            let e = edge_matrix(&shadow_vertices);
            let dh = DVector::from_iterator(s.dim(), heights.iter().skip(1).map(|h| h - heights[0]));
            let svd = e.transpose().svd(true, true);
            svd.solve(&dh, 1e-14)
                .map_err(|e| Error::numeric(format!("gradient solve failed: {e}")))?
        };
        let slope = grad.norm();
        pieces.push(GraphPiece {
            shadow,
            value0: heights[0],
            grad,
            slope,
            source: idx,
        });
    }
    Ok(pieces)
}

/// Low-discrepancy points inside each simplex: Halton points in the cube
/// mapped to barycentric weights by sorting (uniform on the simplex).
pub fn sample_set(a: &PLSet, per_simplex: usize) -> Vec<(usize, Vector)> {
    let mut out = Vec::new();
    for (idx, s) in a.simplices().iter().enumerate() {
        for k in 0..per_simplex {
            let w = halton_barycentric(s.dim(), k as u64 + 1);
            out.push((idx, s.barycentric_point(&w)));
        }
    }
    out
}

const HALTON_PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

pub fn halton(index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Uniform barycentric weights on a `d`-simplex from a Halton point.
pub fn halton_barycentric(d: usize, index: u64) -> Vec<f64> {
    if d == 0 {
        return vec![1.0];
    }
    let mut cuts: Vec<f64> = (0..d)
        .map(|i| halton(index, HALTON_PRIMES[i % HALTON_PRIMES.len()]))
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut w = Vec::with_capacity(d + 1);
    let mut prev = 0.0;
    for c in cuts {
        w.push(c - prev);
        prev = c;
    }
    w.push(1.0 - prev);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(parts: &[f64]) -> Vector {
        DVector::from_column_slice(parts)
    }

    fn seg(n: usize, a: &[f64], b: &[f64]) -> Simplex {
        Simplex::new(n, vec![v(a), v(b)]).unwrap()
    }

    pub(crate) fn square_boundary() -> PLSet {
        PLSet::new(
            2,
            vec![
                seg(2, &[-1.0, -1.0], &[1.0, -1.0]),
                seg(2, &[1.0, -1.0], &[1.0, 1.0]),
                seg(2, &[1.0, 1.0], &[-1.0, 1.0]),
                seg(2, &[-1.0, 1.0], &[-1.0, -1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn full_dimensional_simplex_is_rejected() {
        let tri = Simplex::new(
            2,
            vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])],
        )
        .unwrap();
        assert!(PLSet::new(2, vec![tri]).is_err());
    }

    #[test]
    fn degenerate_simplex_is_rejected() {
        assert!(Simplex::new(2, vec![v(&[0.0, 0.0]), v(&[1e-15, 0.0])]).is_err());
    }

    #[test]
    fn square_boundary_has_two_tangent_directions() {
        let a = square_boundary();
        let t = tangent_set(&a).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn square_boundary_margin_along_diagonal() {
        let a = square_boundary();
        let m = regularity_margin(&v(&[1.0, 1.0]), &a).unwrap();
        assert!((m - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        // e2 is tangent to the vertical edges
        let m2 = regularity_margin(&v(&[0.0, 1.0]), &a).unwrap();
        assert!(m2 < 1e-12);
    }

    #[test]
    fn empty_set_has_infinite_margin() {
        let a = PLSet::empty(3);
        assert!(regularity_margin(&v(&[0.0, 0.0, 1.0]), &a)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn flat_partition_of_square_boundary_is_two_groups() {
        let a = square_boundary();
        let groups = flat_partition(&a, 0.1).unwrap();
        assert_eq!(groups.len(), 2);
        let total: usize = groups.iter().map(|g| g.simplices().len()).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn maximal_simplices_drop_contained_faces() {
        let big = seg(2, &[0.0, 0.0], &[2.0, 2.0]);
        let small = seg(2, &[0.5, 0.5], &[1.0, 1.0]);
        let pt = Simplex::new(2, vec![v(&[1.5, 1.5])]).unwrap();
        let a = PLSet::new(2, vec![small, big, pt]).unwrap();
        assert_eq!(a.maximal_indices(), vec![1]);
    }

    #[test]
    fn graph_decompose_v_graph() {
        // V-graph: two segments meeting at the origin, graphed along e2
        let a = PLSet::new(
            2,
            vec![
                seg(2, &[-1.0, 1.0], &[0.0, 0.0]),
                seg(2, &[0.0, 0.0], &[1.0, 1.0]),
            ],
        )
        .unwrap();
        let pieces = graph_decompose(&a, &v(&[0.0, 1.0]), 0.5).unwrap();
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            assert!((p.slope - 1.0).abs() < 1e-9);
        }
        // both pieces vanish at the origin shadow and reproduce heights
        let origin = v(&[0.0]);
        for p in &pieces {
            assert!(p.value(&origin).abs() < 1e-9);
        }
        // re-embedding the shadow vertices reproduces the simplices
        let frame = hyperplane_frame(&v(&[0.0, 1.0])).unwrap();
        for p in &pieces {
            for sv in p.shadow.vertices() {
                let q = &frame * sv + v(&[0.0, 1.0]) * p.value(sv);
                let on_a = a
                    .simplices()
                    .iter()
                    .any(|s| s.contains(&q, 1e-9));
                assert!(on_a);
            }
        }
    }

    #[test]
    fn graph_decompose_rejects_tangent_direction() {
        let a = square_boundary();
        assert!(graph_decompose(&a, &v(&[0.0, 1.0]), 0.1).is_err());
    }

    #[test]
    fn halton_barycentric_weights_sum_to_one() {
        for d in 0..4 {
            for k in 1..50 {
                let w = halton_barycentric(d, k);
                assert_eq!(w.len(), d + 1);
                let s: f64 = w.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(w.iter().all(|&x| x >= -1e-15));
            }
        }
    }
}
