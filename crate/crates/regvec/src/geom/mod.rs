//! Directions, linear subspaces and the angular geometry of the sphere.
//!
//! Distances between directions are Euclidean distances between unit
//! vectors; the gap between subspaces `P`, `Q` is
//! `∠(P,Q) = sup { d(λ, Q) : λ unit vector of P }`, which is `1` whenever
//! `dim P > dim Q` and symmetric in equal dimensions.

pub(crate) mod search;
mod sphere;

pub use search::{
    fiber_direction_search, fiber_direction_search_at, fiber_tangent, margin_over,
    max_min_direction, max_min_direction_constrained,
};
pub use sphere::{sphere_cover, sphere_mesh, SphereCover, SphereMesh};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;

const EPS: f64 = 1e-12;

/// Normalize `v`, rejecting near-zero input.
pub fn unit(v: &Vector) -> Result<Vector> {
    let n = v.norm();
    if n <= EPS {
        return Err(Error::degenerate("cannot normalize a near-zero vector"));
    }
    Ok(v / n)
}

pub fn basis_vector(n: usize, i: usize) -> Vector {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// A linear subspace of `R^n`, stored as an orthonormal frame (columns).
/// The zero subspace is allowed (`dim == 0`).
#[derive(Debug, Clone)]
pub struct Subspace {
    n: usize,
    frame: DMatrix<f64>, // n x k, orthonormal columns
}

impl Subspace {
    /// Span of the given vectors; dependent or near-zero vectors are dropped
    /// (modified Gram–Schmidt with a fixed degeneracy threshold).
    pub fn span(n: usize, vectors: &[Vector]) -> Result<Self> {
        let mut cols: Vec<Vector> = Vec::new();
        for v in vectors {
            if v.len() != n {
                return Err(Error::dim(format!(
                    "subspace generator has length {}, ambient dimension is {}",
                    v.len(),
                    n
                )));
            }
            let mut w = v.clone();
            for c in &cols {
                let proj = c.dot(&w);
                w -= c * proj;
            }
            // second pass for numerical orthogonality
            for c in &cols {
                let proj = c.dot(&w);
                w -= c * proj;
            }
            let norm = w.norm();
            if norm > 1e-9 * v.norm().max(1.0) {
                cols.push(w / norm);
            }
        }
        let mut frame = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            frame.set_column(j, c);
        }
        Ok(Subspace { n, frame })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &Vector) -> Vector {
        if self.dim() == 0 {
            return DVector::zeros(self.n);
        }
        &self.frame * (self.frame.transpose() * v)
    }
}

/// Distance from a unit vector to a subspace: `|λ − proj_T(λ)|`.
/// By convention the distance to the zero subspace of an empty tangent set
/// is handled by callers as `+∞`; the zero subspace itself gives `|λ| = 1`.
pub fn dist_to_subspace(lambda: &Vector, t: &Subspace) -> Result<f64> {
    if lambda.len() != t.ambient_dim() {
        return Err(Error::dim("direction and subspace live in different spaces"));
    }
    let r = lambda - t.project(lambda);
    Ok(r.norm())
}

/// Angular gap `∠(P,Q) = sup_{λ ∈ P, |λ|=1} d(λ, Q)`.
///
/// Equals the largest singular value of `(I − Q Qᵀ) P_frame`, clamped to
/// `[0,1]`; by convention the gap is `1` when `dim P > dim Q` and `0` when
/// `P` is the zero subspace.
pub fn angle(p: &Subspace, q: &Subspace) -> Result<f64> {
    if p.ambient_dim() != q.ambient_dim() {
        return Err(Error::dim("subspaces live in different ambient spaces"));
    }
    if p.dim() == 0 {
        return Ok(0.0);
    }
    if p.dim() > q.dim() {
        return Ok(1.0);
    }
    let mut m = p.frame().clone();
    if q.dim() > 0 {
        m -= q.frame() * (q.frame().transpose() * p.frame());
    }
    let sv = m.svd(false, false);
    let s = sv.singular_values.max();
    Ok(s.clamp(0.0, 1.0))
}

/// Symmetric gap, used when clustering directions of possibly different
/// dimensions.
pub fn angle_sym(p: &Subspace, q: &Subspace) -> Result<f64> {
    Ok(angle(p, q)?.max(angle(q, p)?))
}

/// Orthogonal matrix `H` with `H e_n = λ` (Householder reflection composed
/// with a sign fix; identity when `λ ≈ e_n`).  Deterministic in `λ`.  The
/// first `n−1` columns form the canonical frame of the hyperplane `N_λ`.
pub fn householder_frame(lambda: &Vector) -> Result<DMatrix<f64>> {
    let n = lambda.len();
    if n == 0 {
        return Err(Error::dim("empty direction"));
    }
    let lam = unit(lambda)?;
    let en = basis_vector(n, n - 1);
    let v = &en - &lam;
    let vn2 = v.norm_squared();
    if vn2 < 1e-16 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut h = DMatrix::identity(n, n);
    // H = I − 2 v vᵀ / |v|²  reflects e_n to λ and is orthogonal.
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] -= 2.0 * v[i] * v[j] / vn2;
        }
    }
    Ok(h)
}

/// The canonical orthonormal frame of `N_λ = λ^⊥` (an `n × (n−1)` matrix).
pub fn hyperplane_frame(lambda: &Vector) -> Result<DMatrix<f64>> {
    let n = lambda.len();
    let h = householder_frame(lambda)?;
    Ok(h.columns(0, n - 1).into_owned())
}

/// Split `q` into (shadow, height) along `λ`: the shadow is the coordinate
/// vector of `π_λ(q)` in the canonical frame of `N_λ`, the height is `q·λ`.
pub fn project_along(lambda: &Vector, q: &Vector) -> Result<(Vector, f64)> {
    if lambda.len() != q.len() {
        return Err(Error::dim("point and direction dimensions differ"));
    }
    let lam = unit(lambda)?;
    let f = hyperplane_frame(&lam)?;
    let shadow = f.transpose() * q;
    Ok((shadow, lam.dot(q)))
}

/// Inverse of [`project_along`]: the point with the given shadow
/// coordinates and height.
pub fn embed_along(lambda: &Vector, shadow: &Vector, height: f64) -> Result<Vector> {
    let lam = unit(lambda)?;
    let f = hyperplane_frame(&lam)?;
    Ok(&f * shadow + lam * height)
}

/// Normalized projection `π̃_e(u) = π_e(u)/|π_e(u)|`, undefined near `±e`.
pub fn tilde_pi(e: &Vector, u: &Vector) -> Result<Vector> {
    let en = unit(e)?;
    let p = u - &en * en.dot(u);
    if p.norm() <= EPS {
        return Err(Error::degenerate(
            "normalized projection is undefined on the axis ±e",
        ));
    }
    Ok(p.normalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(parts: &[f64]) -> Vector {
        DVector::from_column_slice(parts)
    }

    #[test]
    fn dist_to_span_e1_from_e2_is_one() {
        let t = Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap();
        let d = dist_to_subspace(&v(&[0.0, 1.0]), &t).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_between_axis_and_diagonal_in_r2() {
        let p = Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap();
        let q = Subspace::span(2, &[v(&[1.0, 1.0])]).unwrap();
        let a = angle(&p, &q).unwrap();
        assert!((a - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn angle_is_one_when_dim_drops() {
        let p = Subspace::span(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let q = Subspace::span(3, &[v(&[1.0, 0.0, 0.0])]).unwrap();
        assert_eq!(angle(&p, &q).unwrap(), 1.0);
        // and the reverse is 0: the line lies inside the plane
        assert!(angle(&q, &p).unwrap() < 1e-12);
    }

    #[test]
    fn householder_maps_en_to_lambda() {
        for lam in [
            v(&[0.0, 1.0]),
            v(&[0.0, -1.0]),
            v(&[1.0, 0.0]),
            v(&[0.6, -0.8]),
            v(&[1.0, 1.0]).normalize(),
        ] {
            let h = householder_frame(&lam).unwrap();
            let en = basis_vector(lam.len(), lam.len() - 1);
            assert!((h.clone() * en - &lam).norm() < 1e-12);
            // orthogonality
            let id = h.transpose() * h;
            assert!((id - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
    }

    #[test]
    fn project_embed_roundtrip() {
        let lam = v(&[1.0, 2.0, -0.5]).normalize();
        let q = v(&[0.3, -1.2, 2.5]);
        let (s, h) = project_along(&lam, &q).unwrap();
        let back = embed_along(&lam, &s, h).unwrap();
        assert!((back - q).norm() < 1e-12);
    }

    #[test]
    fn tilde_pi_normalizes_and_rejects_axis() {
        let e = v(&[0.0, 0.0, 1.0]);
        let u = v(&[3.0, 4.0, 7.0]);
        let p = tilde_pi(&e, &u).unwrap();
        assert!((p - v(&[0.6, 0.8, 0.0])).norm() < 1e-12);
        assert!(tilde_pi(&e, &v(&[0.0, 0.0, -2.0])).is_err());
    }

    #[test]
    fn projection_along_in_r1_has_empty_shadow() {
        let lam = v(&[1.0]);
        let (s, h) = project_along(&lam, &v(&[3.5])).unwrap();
        assert_eq!(s.len(), 0);
        assert!((h - 3.5).abs() < 1e-12);
    }
}
