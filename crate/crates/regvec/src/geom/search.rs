//! Search for directions of maximal regularity.
//!
//! `max_min_direction` maximizes `λ ↦ min_i d(λ, P_i)` over the unit sphere
//! via a coarse cover scan followed by Nelder–Mead refinement on a tangent
//! chart.  `fiber_direction_search` does the same over one fiber of the
//! normalized projection `π̃_μ`, which is the half great circle through `±μ`
//! over a fixed base direction.

use super::{
    dist_to_subspace, hyperplane_frame, sphere_cover, tilde_pi, unit, Subspace, Vector,
};
use crate::error::{Error, Result};

/// `min_i d(λ, P_i)`; `+∞` for an empty family.
pub fn margin_over(lambda: &Vector, subspaces: &[Subspace]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for p in subspaces {
        m = m.min(dist_to_subspace(lambda, p)?);
    }
    Ok(m)
}

/// Best direction for a family of proper subspaces: returns `(λ*, margin)`.
/// An empty family yields `(e_n, +∞)`.
pub fn max_min_direction(n: usize, subspaces: &[Subspace]) -> Result<(Vector, f64)> {
    max_min_direction_constrained(n, subspaces, &[])
}

/// Same as [`max_min_direction`], additionally keeping the result at
/// distance at least `r` from each pair `±c` for every `(c, r)` in `avoid`.
pub fn max_min_direction_constrained(
    n: usize,
    subspaces: &[Subspace],
    avoid: &[(Vector, f64)],
) -> Result<(Vector, f64)> {
    for p in subspaces {
        if p.ambient_dim() != n {
            return Err(Error::dim("subspace ambient dimension mismatch"));
        }
        if p.dim() >= n {
            return Err(Error::contract(
                "regular vectors only exist for proper subspaces",
            ));
        }
    }
    if subspaces.is_empty() && avoid.is_empty() {
        return Ok((super::basis_vector(n, n - 1), f64::INFINITY));
    }
    let penalty = |lam: &Vector| -> f64 {
        let mut p = 0.0;
        for (c, r) in avoid {
            let d = (lam - c).norm().min((lam + c).norm());
            if d < *r {
                p += 10.0 * (r - d);
            }
        }
        p
    };
    let objective = |lam: &Vector| -> Result<f64> {
        Ok(margin_over(lam, subspaces)? - penalty(lam))
    };

    // coarse scan
    let cover = sphere_cover(n, 0.2)?;
    let mut best = None;
    for p in &cover.points {
        let f = objective(p)?;
        if best.as_ref().map_or(true, |&(_, bf)| f > bf) {
            best = Some((p.clone(), f));
        }
    }
    let (seed, mut best_f) = best.expect("cover is nonempty");
    if n == 1 {
        return Ok((seed.clone(), margin_over(&seed, subspaces)?));
    }

    // Nelder–Mead on the tangent chart u ↦ normalize(seed + F u)
    let frame = hyperplane_frame(&seed)?;
    let chart = |u: &Vector| -> Vector { (&seed + &frame * u).normalize() };
    let f_chart = |u: &Vector| -> f64 {
        objective(&chart(u)).unwrap_or(f64::NEG_INFINITY)
    };
    let u0 = Vector::zeros(n - 1);
    let u_best = nelder_mead_max(&f_chart, &u0, 0.1, 200);
    let cand = chart(&u_best);
    let f_cand = objective(&cand)?;
    let mut best_lam = seed;
    if f_cand > best_f {
        best_lam = cand;
        best_f = f_cand;
    }
    let _ = best_f;
    Ok((best_lam.clone(), margin_over(&best_lam, subspaces)?))
}

/// Plain Nelder–Mead maximization with standard coefficients.
pub(crate) fn nelder_mead_max(
    f: &dyn Fn(&Vector) -> f64,
    x0: &Vector,
    scale: f64,
    iters: usize,
) -> Vector {
    let d = x0.len();
    if d == 0 {
        return x0.clone();
    }
    let mut simplex: Vec<(Vector, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.clone(), f(x0)));
    for i in 0..d {
        let mut x = x0.clone();
        x[i] += scale;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let centroid = {
            let mut c = Vector::zeros(d);
            for (x, _) in simplex.iter().take(d) {
                c += x;
            }
            c / d as f64
        };
        let worst = simplex[d].clone();
        let reflect = &centroid * 2.0 - &worst.0;
        let fr = f(&reflect);
        if fr > simplex[0].1 {
            let expand = &centroid * 3.0 - &worst.0 * 2.0;
            let fe = f(&expand);
            simplex[d] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > simplex[d - 1].1 {
            simplex[d] = (reflect, fr);
        } else {
            let contract = (&centroid + &worst.0) * 0.5;
            let fc = f(&contract);
            if fc > worst.1 {
                simplex[d] = (contract, fc);
            } else {
                // shrink toward the best point
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    item.0 = (&item.0 + &best) * 0.5;
                    item.1 = f(&item.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex[0].0.clone()
}

/// Unit tangent of the fiber `π̃_μ^{-1}(π̃_μ(x))` at `x`.
pub fn fiber_tangent(mu: &Vector, x: &Vector) -> Result<Vector> {
    let m = unit(mu)?;
    let y = tilde_pi(&m, x)?;
    let xs = unit(x)?;
    let (c, s) = (xs.dot(&y), xs.dot(&m));
    Ok((&y * (-s) + &m * c).normalize())
}

/// Search the fiber of `π̃_μ` through `l` for the direction within `B(l, r)`
/// maximizing `min_i d(·, P_i)`.  See [`fiber_direction_search_at`].
pub fn fiber_direction_search(
    mu: &Vector,
    l: &Vector,
    r: f64,
    subspaces: &[Subspace],
) -> Result<(Vector, f64)> {
    let m = unit(mu)?;
    let y = tilde_pi(&m, l)?;
    fiber_direction_search_at(&m, &y, l, r, subspaces)
}

/// Search the fiber `π̃_μ^{-1}(y)` (the open half great circle through `±μ`
/// over the unit vector `y ⊥ μ`) intersected with `B(l, r)`.
///
/// Returns the maximizer of `min_i d(·, P_i)` together with its margin
/// (`+∞` when the family is empty).  Errors when the admissible arc is
/// empty, e.g. when `r` is below resolution or the fiber misses the ball.
pub fn fiber_direction_search_at(
    mu: &Vector,
    y: &Vector,
    l: &Vector,
    r: f64,
    subspaces: &[Subspace],
) -> Result<(Vector, f64)> {
    let m = unit(mu)?;
    let y = unit(y)?;
    if m.dot(&y).abs() > 1e-9 {
        return Err(Error::contract("fiber base must be orthogonal to the axis"));
    }
    let point = |theta: f64| -> Vector { &y * theta.cos() + &m * theta.sin() };
    // angular half-width of B(l, r) around the closest arc point
    let (a, b) = (l.dot(&y), l.dot(&m));
    if a.abs() + b.abs() < 1e-12 {
        return Err(Error::degenerate("anchor is orthogonal to the fiber plane"));
    }
    let theta0 = b.atan2(a);
    // |λ(θ) − l|² = 2 − 2 l·λ(θ); l·λ(θ) = ρ cos(θ − θ0), ρ = |l projected on plane|
    let rho = (a * a + b * b).sqrt();
    // need ρ cos(θ−θ0) ≥ 1 − r²/2
    let c = (1.0 - r * r / 2.0) / rho;
    if c > 1.0 {
        return Err(Error::degenerate(
            "ball does not meet the fiber (radius too small)",
        ));
    }
    let half = c.max(-1.0).acos();
    let delta = 1e-6; // stay away from the endpoints ±μ
    let lo = (theta0 - half).max(-std::f64::consts::FRAC_PI_2 + delta);
    let hi = (theta0 + half).min(std::f64::consts::FRAC_PI_2 - delta);
    if !(hi - lo > 1e-12) {
        return Err(Error::degenerate("admissible fiber arc is empty"));
    }
    if subspaces.is_empty() {
        return Ok((unit(l)?, f64::INFINITY));
    }
    let obj = |theta: f64| -> f64 {
        margin_over(&point(theta), subspaces).unwrap_or(f64::NEG_INFINITY)
    };
    let steps = 1000;
    let mut best_t = lo;
    let mut best_f = f64::NEG_INFINITY;
    for i in 0..=steps {
        let t = lo + (hi - lo) * i as f64 / steps as f64;
        let f = obj(t);
        if f > best_f {
            best_f = f;
            best_t = t;
        }
    }
    // golden-section refinement around the best scan point
    let pitch = (hi - lo) / steps as f64;
    let (mut a1, mut b1) = ((best_t - pitch).max(lo), (best_t + pitch).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b1 - phi * (b1 - a1), a1 + phi * (b1 - a1));
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    for _ in 0..60 {
        if f1 < f2 {
            a1 = x1;
            x1 = x2;
            f1 = f2;
            x2 = a1 + phi * (b1 - a1);
            f2 = obj(x2);
        } else {
            b1 = x2;
            x2 = x1;
            f2 = f1;
            x1 = b1 - phi * (b1 - a1);
            f1 = obj(x1);
        }
    }
    let t = if f1 > f2 { x1 } else { x2 };
    let (t, f) = if obj(best_t) > f1.max(f2) {
        (best_t, obj(best_t))
    } else {
        (t, f1.max(f2))
    };
    Ok((point(t), f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn v(parts: &[f64]) -> Vector {
        DVector::from_column_slice(parts)
    }

    #[test]
    fn best_direction_for_coordinate_axes_in_r2() {
        let subs = vec![
            Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap(),
            Subspace::span(2, &[v(&[0.0, 1.0])]).unwrap(),
        ];
        let (lam, margin) = max_min_direction(2, &subs).unwrap();
        assert!((margin - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        // optimum is a diagonal
        assert!((lam[0].abs() - lam[1].abs()).abs() < 1e-3);
    }

    #[test]
    fn best_direction_for_coordinate_planes_in_r3() {
        let e = |i| super::super::basis_vector(3, i);
        let subs = vec![
            Subspace::span(3, &[e(0), e(1)]).unwrap(),
            Subspace::span(3, &[e(0), e(2)]).unwrap(),
            Subspace::span(3, &[e(1), e(2)]).unwrap(),
        ];
        let (_, margin) = max_min_direction(3, &subs).unwrap();
        assert!((margin - 1.0 / 3f64.sqrt()).abs() < 1e-3, "margin {margin}");
    }

    #[test]
    fn empty_family_is_fully_regular() {
        let (lam, margin) = max_min_direction(3, &[]).unwrap();
        assert!(margin.is_infinite());
        assert!((lam - v(&[0.0, 0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn fiber_search_avoids_a_plane_in_r3() {
        // fiber of π̃_{e3} through l = e1, avoiding the horizontal plane:
        // the arc climbs toward e3 until the ball constraint binds
        let mu = v(&[0.0, 0.0, 1.0]);
        let l = v(&[1.0, 0.0, 0.0]);
        let plane = Subspace::span(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let (lam, margin) = fiber_direction_search(&mu, &l, 0.5, &[plane]).unwrap();
        assert!(margin > 0.4, "margin {margin}");
        assert!((lam.norm() - 1.0).abs() < 1e-12);
        assert!((&lam - &l).norm() <= 0.5 + 1e-9);
    }

    #[test]
    fn fiber_search_rejects_vanishing_radius() {
        let mu = v(&[0.0, 0.0, 1.0]);
        let l = v(&[1.0, 0.0, 0.0]);
        assert!(fiber_direction_search(&mu, &l, 1e-15, &[]).is_err());
    }

    #[test]
    fn fiber_search_with_no_constraints_returns_anchor() {
        let mu = v(&[0.0, 0.0, 1.0]);
        let l = v(&[0.6, 0.8, 0.0]);
        let (lam, margin) = fiber_direction_search(&mu, &l, 0.3, &[]).unwrap();
        assert!(margin.is_infinite());
        assert!((lam - l).norm() < 1e-12);
    }

    #[test]
    fn fiber_tangent_dominates_axis_distance() {
        // d(μ, T) ≤ d(v, T) for the fiber tangent v at a point x ∈ T
        let mu = v(&[0.0, 0.0, 1.0]);
        let planes = [
            Subspace::span(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap(),
            Subspace::span(3, &[v(&[1.0, 2.0, 0.5]), v(&[0.0, 1.0, -1.0])]).unwrap(),
        ];
        for p in &planes {
            for seed in [v(&[0.7, 0.3]), v(&[-0.2, 0.9]), v(&[1.0, 0.0])] {
                let x = (p.frame() * seed).normalize();
                let t = fiber_tangent(&mu, &x).unwrap();
                let dm = dist_to_subspace(&mu, p).unwrap();
                let dv = dist_to_subspace(&t, p).unwrap();
                assert!(dm <= dv + 1e-9, "axis {dm} vs tangent {dv}");
            }
        }
    }
}
