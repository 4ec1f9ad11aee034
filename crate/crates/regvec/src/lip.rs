//! Evaluable Lipschitz functions with certified constants, McShane
//! extension, and Lipschitz hypersurfaces.
//!
//! A [`LipFn`] is an expression tree over affine pieces, McShane hulls,
//! pointwise min/max, order statistics, shifts and opaque evaluators, each
//! node carrying a Lipschitz certificate.  Certificates compose
//! sub-multiplicatively; no attempt is made at optimal constants except
//! where a closed form is exact.
//!
//! The constants `±∞` act as sentinels for the half-spaces above/below
//! everything; min/max absorb them the obvious way.

use crate::config::slope_bound;
use crate::error::{Error, Result};
use crate::geom::{embed_along, hyperplane_frame, unit, Vector};
use crate::pl::GraphPiece;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Clone)]
enum Node {
    Const(f64),
    /// `value0 + grad · (x − base)`, the total affine extension of a piece.
    Affine {
        base: Vector,
        value0: f64,
        grad: Vector,
    },
    /// McShane–Whitney inf-extension of a family of graph pieces at
    /// constant `lip`.
    McShane { pieces: Arc<Vec<GraphPiece>>, lip: f64 },
    Min(LipFn, LipFn),
    Max(LipFn, LipFn),
    /// `rank`-th smallest of the family (0-based).
    OrderStat { rank: usize, fns: Arc<Vec<LipFn>> },
    Shift(LipFn, f64),
    /// Opaque evaluator with an externally certified constant.
    Custom {
        f: Arc<dyn Fn(&Vector) -> f64 + Send + Sync>,
        desc: &'static str,
    },
}

/// An evaluable function `R^d → R ∪ {±∞}` with a Lipschitz certificate.
#[derive(Clone)]
pub struct LipFn {
    dim: usize,
    l_cert: f64,
    node: Arc<Node>,
}

impl std::fmt::Debug for LipFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LipFn(dim={}, L={:.4}, {})", self.dim, self.l_cert, self.describe())
    }
}

impl LipFn {
    fn describe(&self) -> &'static str {
        match &*self.node {
            Node::Const(_) => "const",
            Node::Affine { .. } => "affine",
            Node::McShane { .. } => "mcshane",
            Node::Min(..) => "min",
            Node::Max(..) => "max",
            Node::OrderStat { .. } => "order-stat",
            Node::Shift(..) => "shift",
            Node::Custom { desc, .. } => desc,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn l_cert(&self) -> f64 {
        self.l_cert
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        LipFn {
            dim,
            l_cert: 0.0,
            node: Arc::new(Node::Const(c)),
        }
    }

    pub fn affine(dim: usize, base: Vector, value0: f64, grad: Vector) -> Result<Self> {
        if base.len() != dim || grad.len() != dim {
            return Err(Error::dim("affine data dimension mismatch"));
        }
        let l = grad.norm();
        Ok(LipFn {
            dim,
            l_cert: l,
            node: Arc::new(Node::Affine { base, value0, grad }),
        })
    }

    /// As [`LipFn::affine`], from a graph piece (total affine extension).
    pub fn from_piece(dim: usize, piece: &GraphPiece) -> Self {
        LipFn {
            dim,
            l_cert: piece.slope,
            node: Arc::new(Node::Affine {
                base: piece.shadow.vertices()[0].clone(),
                value0: piece.value0,
                grad: piece.grad.clone(),
            }),
        }
    }

    /// `inf_p { f(p) + L·|x − p| }` over the union of the piece domains.
    ///
    /// Preconditions: `L` dominates every piece slope, and the pieces are
    /// jointly `L`-Lipschitz across domains (checked on vertices and
    /// low-discrepancy interior samples).
    pub fn mcshane(dim: usize, pieces: Vec<GraphPiece>, lip: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::degenerate("McShane extension of an empty family"));
        }
        if !(lip.is_finite() && lip >= 0.0) {
            return Err(Error::contract("McShane constant must be finite and nonnegative"));
        }
        for p in &pieces {
            if p.shadow.ambient_dim() != dim {
                return Err(Error::dim("piece shadow dimension mismatch"));
            }
            if p.slope > lip + 1e-9 {
                return Err(Error::contract(format!(
                    "piece slope {:.6} exceeds the requested constant {:.6}",
                    p.slope, lip
                )));
            }
        }
        // cross-piece Lipschitz check on a finite probe set
        let mut probes: Vec<(usize, Vector)> = Vec::new();
        for (i, p) in pieces.iter().enumerate() {
            for v in p.shadow.vertices() {
                probes.push((i, v.clone()));
            }
            for k in 1..=4u64 {
                let w = crate::pl::halton_barycentric(p.shadow.dim(), k);
                probes.push((i, p.shadow.barycentric_point(&w)));
            }
        }
        for (i, x) in &probes {
            for (j, y) in &probes {
                if i == j {
                    continue;
                }
                let fx = pieces[*i].value(x);
                let fy = pieces[*j].value(y);
                let d = (x - y).norm();
                if (fx - fy).abs() > lip * d + 1e-9 {
                    return Err(Error::contract(format!(
                        "pieces {i} and {j} violate the {lip:.4}-Lipschitz bound across domains"
                    )));
                }
            }
        }
        Ok(LipFn {
            dim,
            l_cert: lip,
            node: Arc::new(Node::McShane {
                pieces: Arc::new(pieces),
                lip,
            }),
        })
    }

    pub fn fmin(a: LipFn, b: LipFn) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::dim("min of functions on different domains"));
        }
        let (dim, l) = (a.dim, combine_l(a.effective_l(), b.effective_l()));
        Ok(LipFn {
            dim,
            l_cert: l,
            node: Arc::new(Node::Min(a, b)),
        })
    }

    pub fn fmax(a: LipFn, b: LipFn) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::dim("max of functions on different domains"));
        }
        let (dim, l) = (a.dim, combine_l(a.effective_l(), b.effective_l()));
        Ok(LipFn {
            dim,
            l_cert: l,
            node: Arc::new(Node::Max(a, b)),
        })
    }

    pub fn shift(self, c: f64) -> Self {
        LipFn {
            dim: self.dim,
            l_cert: self.l_cert,
            node: Arc::new(Node::Shift(self.clone(), c)),
        }
    }

    pub fn custom(
        dim: usize,
        l_cert: f64,
        desc: &'static str,
        f: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LipFn {
            dim,
            l_cert,
            node: Arc::new(Node::Custom { f: Arc::new(f), desc }),
        }
    }

    /// Constants with infinite value certify L = 0; everything else keeps
    /// its own certificate.
    fn effective_l(&self) -> f64 {
        self.l_cert
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &*self.node {
            Node::Const(c) => *c,
            Node::Affine { base, value0, grad } => value0 + grad.dot(&(x - base)),
            Node::McShane { pieces, lip } => {
                let mut best = f64::INFINITY;
                for p in pieces.iter() {
                    best = best.min(piece_inf(p, x, *lip));
                }
                best
            }
            Node::Min(a, b) => a.eval(x).min(b.eval(x)),
            Node::Max(a, b) => a.eval(x).max(b.eval(x)),
            Node::OrderStat { rank, fns } => {
                let mut vals: Vec<f64> = fns.iter().map(|f| f.eval(x)).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                vals[*rank]
            }
            Node::Shift(f, c) => f.eval(x) + c,
            Node::Custom { f, .. } => f(x),
        }
    }

    /// The affine representation `(base, value0, grad)` if this node is
    /// exactly affine (constants included), used for closed-form regraphs.
    pub fn as_affine(&self) -> Option<(Vector, f64, Vector)> {
        match &*self.node {
            Node::Affine { base, value0, grad } => {
                Some((base.clone(), *value0, grad.clone()))
            }
            Node::Const(c) if c.is_finite() => Some((
                DVector::zeros(self.dim),
                *c,
                DVector::zeros(self.dim),
            )),
            Node::Shift(f, c) => f
                .as_affine()
                .map(|(b, v, g)| (b, v + c, g)),
            _ => None,
        }
    }

    pub fn is_pos_inf(&self) -> bool {
        matches!(&*self.node, Node::Const(c) if *c == f64::INFINITY)
    }

    pub fn is_neg_inf(&self) -> bool {
        matches!(&*self.node, Node::Const(c) if *c == f64::NEG_INFINITY)
    }
}

fn combine_l(a: f64, b: f64) -> f64 {
    // min/max with a ±∞ sentinel keeps the other function's constant
    let a = if a.is_finite() { a } else { 0.0 };
    let b = if b.is_finite() { b } else { 0.0 };
    a.max(b)
}

/// Sorted family: the `j`-th result evaluates to the `j`-th smallest of the
/// input values; each output keeps the max input certificate.
pub fn order_statistics(fns: Vec<LipFn>) -> Result<Vec<LipFn>> {
    if fns.is_empty() {
        return Ok(vec![]);
    }
    let dim = fns[0].dim;
    if fns.iter().any(|f| f.dim != dim) {
        return Err(Error::dim("order statistics over mixed domains"));
    }
    let l = fns.iter().map(|f| f.l_cert).fold(0.0f64, f64::max);
    let shared = Arc::new(fns);
    Ok((0..shared.len())
        .map(|rank| LipFn {
            dim,
            l_cert: l,
            node: Arc::new(Node::OrderStat {
                rank,
                fns: shared.clone(),
            }),
        })
        .collect())
}

/// Exact minimization of `p ↦ f(p) + L·|x − p|` over a piece's simplex.
///
/// The minimum over a convex domain of this convex objective is attained at
/// the Euclidean projection of `x` (when the unconstrained directional
/// condition holds there) or on a face; faces of dimension ≤ 2 admit closed
/// forms, higher faces are handled by recursive descent to their boundary
/// plus an interior stationary test, which is exact for simplices of the
/// dimensions the certified pipeline uses (≤ 2).
fn piece_inf(piece: &GraphPiece, x: &Vector, lip: f64) -> f64 {
    let s = &piece.shadow;
    let mut best = f64::INFINITY;
    // projection of x onto the simplex: exact via face enumeration
    let proj = project_onto_simplex(x, s);
    best = best.min(piece.value(&proj) + lip * (x - &proj).norm());
    // vertices
    for v in s.vertices() {
        best = best.min(piece.value(v) + lip * (x - v).norm());
    }
    // edges: closed-form critical point
    let vs = s.vertices();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            best = best.min(edge_inf(piece, x, &vs[i], &vs[j], lip));
        }
    }
    // 2-faces: interior stationary point
    if s.dim() >= 2 {
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                for k in j + 1..vs.len() {
                    if let Some(v) = face2_inf(piece, x, &vs[i], &vs[j], &vs[k], lip) {
                        best = best.min(v);
                    }
                }
            }
        }
    }
    best
}

fn edge_inf(piece: &GraphPiece, x: &Vector, a: &Vector, b: &Vector, lip: f64) -> f64 {
    let u = b - a;
    let len = u.norm();
    if len < 1e-15 {
        return piece.value(a) + lip * (x - a).norm();
    }
    let uh = &u / len;
    let slope = piece.grad.dot(&uh);
    let t0 = uh.dot(&(x - a));
    let h2 = (x - a).norm_squared() - t0 * t0;
    let h = h2.max(0.0).sqrt();
    let mut candidates = vec![0.0, len];
    if slope.abs() < lip {
        let t = t0 - slope * h / (lip * lip - slope * slope).sqrt();
        candidates.push(t.clamp(0.0, len));
    }
    let mut best = f64::INFINITY;
    for t in candidates {
        let p = a + &uh * t;
        best = best.min(piece.value(&p) + lip * (x - &p).norm());
    }
    best
}

/// Interior stationary point on a triangular face, if feasible.
fn face2_inf(
    piece: &GraphPiece,
    x: &Vector,
    a: &Vector,
    b: &Vector,
    c: &Vector,
    lip: f64,
) -> Option<f64> {
    // orthonormal basis of the face plane
    let e1 = (b - a).normalize();
    let mut e2 = c - a;
    e2 -= &e1 * e1.dot(&e2);
    let n2 = e2.norm();
    if n2 < 1e-14 {
        return None;
    }
    e2 /= n2;
    let g = DVector::from_column_slice(&[piece.grad.dot(&e1), piece.grad.dot(&e2)]);
    let gn = g.norm();
    if gn >= lip {
        return None; // minimum lies on the boundary, covered by edges
    }
    // hull projection of x and transversal distance
    let xa = x - a;
    let q = a + &e1 * e1.dot(&xa) + &e2 * e2.dot(&xa);
    let h = (x - &q).norm();
    if gn < 1e-15 {
        // objective minimized at the projection itself (already probed)
        return None;
    }
    let r = h * gn / (lip * lip - gn * gn).sqrt();
    let dir = (&e1 * g[0] + &e2 * g[1]) / gn;
    let p = &q - &dir * r;
    // feasibility in the triangle
    let tri = crate::pl::Simplex::new(a.len(), vec![a.clone(), b.clone(), c.clone()]).ok()?;
    if !tri.contains(&p, 1e-9) {
        return None;
    }
    Some(piece.value(&p) + lip * (x - &p).norm())
}

/// Exact Euclidean projection onto a simplex by face enumeration.
pub fn project_onto_simplex(x: &Vector, s: &crate::pl::Simplex) -> Vector {
    let vs = s.vertices();
    let m = vs.len();
    let mut best: Option<(f64, Vector)> = None;
    // all nonempty vertex subsets
    for mask in 1u32..(1 << m) {
        let subset: Vec<&Vector> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &vs[*&i]).collect();
        let p = project_affine_feasible(x, &subset);
        if let Some(p) = p {
            let d = (x - &p).norm();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, p));
            }
        }
    }
    best.expect("singleton faces are always feasible").1
}

/// Projection of `x` onto the affine hull of `pts`, returned only when it is
/// a convex combination.
fn project_affine_feasible(x: &Vector, pts: &[&Vector]) -> Option<Vector> {
    let k = pts.len();
    if k == 1 {
        return Some(pts[0].clone());
    }
    let n = x.len();
    let mut e = DMatrix::zeros(n, k - 1);
    for j in 1..k {
        e.set_column(j - 1, &(pts[j] - pts[0]));
    }
    let rhs = x - pts[0];
    let svd = e.clone().svd(true, true);
    let t = svd.solve(&rhs, 1e-14).ok()?;
    let w0 = 1.0 - t.iter().sum::<f64>();
    if w0 < -1e-12 || t.iter().any(|&w| w < -1e-12) {
        return None;
    }
    Some(pts[0] + &e * &t)
}

/// A Lipschitz hypersurface: the graph `{ q : q·λ = ξ(shadow_λ(q)) }` of an
/// evaluable function over the hyperplane `N_λ`.
#[derive(Debug, Clone)]
pub struct Hypersurface {
    dir: Vector,
    height: LipFn,
    // cached orthonormal frame of N_λ; shadow/residual sit on hot paths
    frame: DMatrix<f64>,
}

/// Position of a point relative to a hypersurface graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    On,
    Above,
}

impl Hypersurface {
    pub fn new(dir: Vector, height: LipFn) -> Result<Self> {
        let d = unit(&dir)?;
        if height.dim() + 1 != d.len() {
            return Err(Error::dim("height function domain must be N_λ"));
        }
        let frame = hyperplane_frame(&d)?;
        Ok(Hypersurface { dir: d, height, frame })
    }

    pub fn dir(&self) -> &Vector {
        &self.dir
    }

    pub fn height(&self) -> &LipFn {
        &self.height
    }

    /// Shadow coordinates of `q` in the canonical frame of `N_λ`.
    pub fn shadow(&self, q: &Vector) -> Result<Vector> {
        Ok(self.frame.tr_mul(q))
    }

    /// The cached orthonormal frame of `N_λ`.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Vertical residual `q·λ − ξ(shadow(q))`.
    pub fn residual(&self, q: &Vector) -> Result<f64> {
        Ok(self.dir.dot(q) - self.height.eval(&self.shadow(q)?))
    }

    /// Classify `q` against the graph within the band `eps`.
    pub fn side(&self, q: &Vector, eps: f64) -> Result<Side> {
        let r = self.residual(q)?;
        Ok(if r > eps {
            Side::Above
        } else if r < -eps {
            Side::Below
        } else {
            Side::On
        })
    }

    /// The point of the graph over the shadow of `q` (its "foot").
    pub fn foot(&self, q: &Vector) -> Result<Vector> {
        let s = self.shadow(q)?;
        let h = self.height.eval(&s);
        Ok(&self.frame * s + &self.dir * h)
    }
}

/// Re-express the graph of `h` as a Lipschitz graph along a new direction
/// with regularity margin at least `margin` for the graph's tangents.
///
/// The new certificate is `sqrt(1 − margin²)/margin`.  Affine heights are
/// regraphed in closed form; otherwise the new height solves, per point, the
/// one-dimensional crossing problem by bracketed bisection.
pub fn regraph(h: &Hypersurface, new_dir: &Vector, margin: f64) -> Result<Hypersurface> {
    let nd = unit(new_dir)?;
    if nd.len() != h.dir.len() {
        return Err(Error::dim("regraph direction dimension mismatch"));
    }
    if !(margin > 0.0) {
        return Err(Error::contract("regraph needs a positive margin"));
    }
    if (&nd - &h.dir).norm() < 1e-14 {
        return Ok(h.clone());
    }
    let n = nd.len();
    let new_l = slope_bound(margin.min(1.0));

    if let Some((base, value0, grad)) = h.height.as_affine() {
        // graph = { q : q·ν = β } with ν = λ − F·grad, β = value0 − grad·base
        let f_old = hyperplane_frame(&h.dir)?;
        let nu = &h.dir - &f_old * &grad;
        let beta = value0 - grad.dot(&base);
        let denom = nu.dot(&nd);
        if denom.abs() < 1e-14 {
            return Err(Error::contract(
                "new direction is tangent to the affine graph",
            ));
        }
        let f_new = hyperplane_frame(&nd)?;
        let new_grad = -(f_new.transpose() * &nu) / denom;
        let new_value0 = beta / denom;
        let height = LipFn::affine(n - 1, DVector::zeros(n - 1), new_value0, new_grad)?;
        return Hypersurface::new(nd, height);
    }

    let old = h.clone();
    let l_old = h.height.l_cert();
    let nd_captured = nd.clone();
    let f_new = hyperplane_frame(&nd)?;
    let height = LipFn::custom(n - 1, new_l, "regraph", move |y: &Vector| {
        regraph_eval(&old, &nd_captured, &f_new, y, l_old, margin)
    });
    Hypersurface::new(nd, height)
}

fn regraph_eval(
    h: &Hypersurface,
    nd: &Vector,
    f_new: &DMatrix<f64>,
    y: &Vector,
    l_old: f64,
    margin: f64,
) -> f64 {
    let p0 = f_new * y;
    let g = |t: f64| -> f64 { h.residual(&(&p0 + nd * t)).expect("residual") };
    // bracket from the Lipschitz data, doubled until the sign changes
    let xi0 = h
        .height
        .eval(&h.shadow(&p0).expect("shadow"));
    let mut r = (xi0.abs() + y.norm() + 1.0) * (1.0 + l_old) / margin;
    let (mut lo, mut hi) = (-r, r);
    let mut iter = 0;
    while g(lo).signum() == g(hi).signum() {
        r *= 2.0;
        lo = -r;
        hi = r;
        iter += 1;
        if iter > 60 {
            return f64::NAN;
        }
    }
    let (mut flo, mut fhi) = (g(lo), g(hi));
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
        std::mem::swap(&mut flo, &mut fhi);
    }
    // Illinois regula falsi: superlinear on this monotone residual, which
    // matters because regraphed heights nest and evaluation costs compound.
    let mut side = 0i8;
    for _ in 0..80 {
        if (hi - lo).abs() < 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let denom = fhi - flo;
        let mut mid = if denom.abs() > 0.0 {
            lo - flo * (hi - lo) / denom
        } else {
            0.5 * (lo + hi)
        };
        // keep the iterate strictly inside the bracket
        let (a, b) = (lo.min(hi), lo.max(hi));
        if !(mid > a && mid < b) {
            mid = 0.5 * (lo + hi);
        }
        let fm = g(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            fhi = fm;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}
