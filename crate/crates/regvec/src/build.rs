//! Construction of a regular system adapted to a PL set.
//!
//! `build_system` recurses on the ambient dimension.  If the target
//! direction is already regular for the set, a direct graph cover suffices.
//! Otherwise: (1) pick an auxiliary direction `e` away from `±λ`, recurse
//! on the shadow boundaries in `N_e`, and lift the resulting system back
//! along `e` with directions chosen on the fibers of `π̃_e` near `λ`;
//! (2) inside each slab, find a regular vector `μ` for the clipped set,
//! recurse on its `μ`-shadow boundaries, and lift with directions found by
//! arc search on the fibers of `π̃_μ` — those gain margin against the
//! clipped set while staying regular for the slab walls; (3) merge the
//! lifted graphs into the slab by clamping between the regraphed walls;
//! (4) extend each sub-slab with its clipped piece of the set.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geom::{
    self, hyperplane_frame, sphere_cover, tilde_pi, Vector,
};
use crate::geom::search::{
    fiber_direction_search_at, margin_over, max_min_direction_constrained, nelder_mead_max,
};
use crate::lip::{regraph, Hypersurface, LipFn};
use crate::pl::{self, PLSet, Simplex};
use crate::system::{
    self, extend_with, lambda_region, sampled_tangents, split_components, Entry, RegularSystem,
};
use nalgebra::DVector;

pub fn build_system(a: &PLSet, cfg: &Config) -> Result<RegularSystem> {
    let n = a.ambient_dim();
    if n < 1 {
        return Err(Error::dim("ambient dimension must be at least 1"));
    }
    build_rec(a, &geom::basis_vector(n, n - 1), cfg.eta, 0, cfg)
}

/// Radius of a box comfortably containing the set.
pub fn set_radius(a: &PLSet) -> f64 {
    a.bounding_box()
        .map(|(lo, hi)| lo.amax().max(hi.amax()))
        .unwrap_or(0.0)
        + 2.0
}

pub(crate) fn build_rec(
    a: &PLSet,
    lam_target: &Vector,
    eta: f64,
    depth: usize,
    cfg: &Config,
) -> Result<RegularSystem> {
    let n = a.ambient_dim();
    if a.is_empty() {
        return Ok(RegularSystem::from_entries(n, Vec::new()));
    }
    if depth > 8 {
        return Err(Error::numeric("recursion depth guard tripped"));
    }
    let margin = pl::regularity_margin(lam_target, a)?;
    if margin >= 2.0 * cfg.alpha_min {
        return system::graph_system(a, lam_target, cfg);
    }
    if n == 1 {
        // in R^1 every direction has margin 1 for a point set
        return Err(Error::degenerate(
            "one-dimensional set with a tangent target direction",
        ));
    }
    let radius = set_radius(a);
    let tau = pl::tangent_set(a)?;

    // Step 1: auxiliary direction e, recursion on shadow boundaries in N_e
    let e = pick_aux_direction(n, &tau, lam_target, eta, cfg.alpha_min)?;
    let fe = hyperplane_frame(&e)?;
    let b_bar = shadow_boundaries(a, &e)?;
    let lam_bar_target = fe.transpose() * tilde_pi(&e, lam_target)?;
    let lam_bar_target = geom::unit(&lam_bar_target)?;
    let mut s_bar = build_rec(&b_bar, &lam_bar_target, eta / 4.0, depth + 1, cfg)?;
    s_bar = split_all_slabs(&s_bar, radius, cfg)?;

    // lift the recursive system along e
    let mut entries: Vec<Entry> = Vec::with_capacity(s_bar.len());
    let mut prev_lift_dir: Option<Vector> = None;
    for be in s_bar.entries() {
        let lam_bar_amb = geom::unit(&(&fe * be.hyp.dir()))?;
        let lam = fiber_point_toward(&lam_bar_amb, &e, lam_target);
        if (&lam - lam_target).norm() > eta / 2.0 + 1e-9 {
            return Err(Error::numeric(
                "no lift direction within eta/2 of the target; raise eta",
            ));
        }
        let hyp = lift_hypersurface(&be.hyp, &e, &lam)?;
        let as_prev = match (&be.as_prev, &prev_lift_dir) {
            (Some(ap), Some(pd)) => Some(lift_hypersurface(ap, &e, pd)?),
            (None, Some(pd)) if (pd - &lam).norm() > 1e-12 => {
                // equal recursive directions always lift to equal directions
                return Err(Error::numeric("fiber lift broke direction sharing"));
            }
            _ => None,
        };
        prev_lift_dir = Some(lam.clone());
        entries.push(Entry { hyp, as_prev });
    }
    let mut s = RegularSystem::from_entries(n, entries);

    // Steps 2–4, slab by slab from the top so lower indices stay stable
    let b0 = s.len();
    for p in (0..=b0).rev() {
        let xp = clip_to_slab(a.simplices(), &s, p, cfg)?;
        if xp.is_empty() {
            continue;
        }
        let xp = PLSet::new(n, xp)?;
        let lam_p = s.slab_dir(p)?.clone();
        let direct_margin = pl::regularity_margin(&lam_p, &xp)?;
        if direct_margin >= 2.0 * cfg.alpha_min {
            s = extend_with(&s, p, &xp, cfg)?;
            continue;
        }

        // Step 2: regular vector μ for the clipped set, sub-recursion in N_μ
        let tau_p = pl::tangent_set(&xp)?;
        let (mu, mu_margin) =
            max_min_direction_constrained(n, &tau_p, &[(lam_target.clone(), eta)])?;
        if mu_margin < cfg.alpha_min {
            return Err(Error::degenerate(format!(
                "no regular vector for slab {p} (margin {mu_margin:.2e})"
            )));
        }
        let region = lambda_region(&s, p, radius, cfg)?;
        let r = (eta / 4.0).min(region.safe_radius() / 2.0);
        if r < cfg.alpha_min {
            return Err(Error::degenerate(format!(
                "direction region of slab {p} is too small (radius {r:.2e})"
            )));
        }
        let fm = hyperplane_frame(&mu)?;
        let bb = shadow_boundaries(&xp, &mu)?;
        let lam_p_bar = geom::unit(&(fm.transpose() * tilde_pi(&mu, &lam_p)?))?;
        let mut s_hat = build_rec(&bb, &lam_p_bar, r / 4.0, depth + 1, cfg)?;
        s_hat = split_all_slabs(&s_hat, radius, cfg)?;

        // lift along μ, directions via arc search on the fibers of π̃_μ
        let mut lifted: Vec<(Hypersurface, Option<Hypersurface>, Vector)> = Vec::new();
        let mut prev_dir: Option<Vector> = None;
        for he in s_hat.entries() {
            let lam_bar_amb = geom::unit(&(&fm * he.hyp.dir()))?;
            let (lam_hat, hat_margin) =
                fiber_direction_search_at(&mu, &lam_bar_amb, &lam_p, r, &tau_p)?;
            if hat_margin < cfg.alpha_min {
                return Err(Error::degenerate(format!(
                    "fiber search margin {hat_margin:.2e} below floor in slab {p}"
                )));
            }
            let hyp = lift_hypersurface(&he.hyp, &mu, &lam_hat)?;
            let as_prev = match (&he.as_prev, &prev_dir) {
                (Some(ap), Some(pd)) => Some(lift_hypersurface(ap, &mu, pd)?),
                _ => None,
            };
            prev_dir = Some(lam_hat.clone());
            lifted.push((hyp, as_prev, lam_hat));
        }

        // Step 3: clamp the lifted graphs between the regraphed walls and
        // splice them into the slab
        let before = s.len();
        s = merge_into_slab(&s, p, lifted, radius)?;
        let b_hat = s.len() - before;

        // Step 4: extend each sub-slab with its piece of the clipped set
        for j in (p..=p + b_hat).rev() {
            let xj = clip_to_slab(xp.simplices(), &s, j, cfg)?;
            if xj.is_empty() {
                continue;
            }
            let xj = PLSet::new(n, xj)?;
            s = extend_with(&s, j, &xj, cfg)?;
            if s.len() > cfg.max_entries {
                return Err(Error::numeric("hypersurface budget exhausted"));
            }
        }
    }
    Ok(s)
}

fn split_all_slabs(s: &RegularSystem, radius: f64, cfg: &Config) -> Result<RegularSystem> {
    let mut out = s.clone();
    for k in (1..s.len()).rev() {
        out = split_components(&out, k, radius, cfg)?;
    }
    Ok(out)
}

/// Auxiliary direction for Step 1: scan a sphere cover for the best margin
/// against the tangent family subject to `±e ∉ B(λ, η)`, then refine.
fn pick_aux_direction(
    n: usize,
    tau: &[crate::geom::Subspace],
    lam_target: &Vector,
    eta: f64,
    alpha_min: f64,
) -> Result<Vector> {
    let feasible = |v: &Vector| {
        (v - lam_target).norm() >= eta && (v + lam_target).norm() >= eta
    };
    let cover = sphere_cover(n, 0.1)?;
    let mut best: Option<(Vector, f64)> = None;
    for p in cover.points.iter().filter(|p| feasible(p)) {
        let m = margin_over(p, tau)?;
        if best.as_ref().map_or(true, |&(_, bm)| m > bm) {
            best = Some((p.clone(), m));
        }
    }
    let (seed, seed_margin) =
        best.ok_or_else(|| Error::degenerate("no admissible auxiliary direction"))?;
    let frame = hyperplane_frame(&seed)?;
    let chart = |u: &Vector| (&seed + &frame * u).normalize();
    let f = |u: &Vector| {
        let v = chart(u);
        if feasible(&v) {
            margin_over(&v, tau).unwrap_or(f64::NEG_INFINITY)
        } else {
            f64::NEG_INFINITY
        }
    };
    let u = nelder_mead_max(&f, &Vector::zeros(n - 1), 0.05, 120);
    let cand = chart(&u);
    let (e, m) = if feasible(&cand) && margin_over(&cand, tau)? > seed_margin {
        let m = margin_over(&cand, tau)?;
        (cand, m)
    } else {
        (seed, seed_margin)
    };
    if m < alpha_min {
        return Err(Error::degenerate(format!(
            "auxiliary direction margin {m:.2e} below floor"
        )));
    }
    Ok(e)
}

/// Shadow boundary set in `N_dir` coordinates: facets of full-rank shadows,
/// collapsed shadows whole, points as their shadow points.
fn shadow_boundaries(x: &PLSet, dir: &Vector) -> Result<PLSet> {
    let n = x.ambient_dim();
    let frame = hyperplane_frame(dir)?;
    let mut sims: Vec<Simplex> = Vec::new();
    let push = |s: Simplex, sims: &mut Vec<Simplex>| {
        let dup = sims
            .iter()
            .any(|t| s.contained_in(t, 1e-9) && t.contained_in(&s, 1e-9));
        if !dup {
            sims.push(s);
        }
    };
    for idx in x.maximal_indices() {
        let sx = &x.simplices()[idx];
        let shadows: Vec<Vector> = sx
            .vertices()
            .iter()
            .map(|v| frame.transpose() * v)
            .collect();
        match Simplex::new(n - 1, shadows.clone()) {
            Ok(sh) if sh.dim() == 0 => push(sh, &mut sims),
            Ok(_) => {
                for drop_i in 0..shadows.len() {
                    let verts: Vec<Vector> = shadows
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != drop_i)
                        .map(|(_, v)| v.clone())
                        .collect();
                    if let Ok(f) = Simplex::new(n - 1, verts) {
                        push(f, &mut sims);
                    }
                }
            }
            Err(_) => {
                // collapsed shadow: keep a maximal affinely independent part
                let mut verts: Vec<Vector> = Vec::new();
                for v in &shadows {
                    let mut cand = verts.clone();
                    cand.push(v.clone());
                    if Simplex::new(n - 1, cand.clone()).is_ok() {
                        verts = cand;
                    }
                }
                if let Ok(sh) = Simplex::new(n - 1, verts) {
                    push(sh, &mut sims);
                }
            }
        }
    }
    if sims.is_empty() {
        Ok(PLSet::empty(n - 1))
    } else {
        PLSet::new(n - 1, sims)
    }
}

/// The point of the half fiber `{cos θ · y + sin θ · e}` closest to `target`.
fn fiber_point_toward(y_amb: &Vector, e: &Vector, target: &Vector) -> Vector {
    let a = y_amb.dot(target);
    let b = e.dot(target);
    let cap = std::f64::consts::FRAC_PI_2 - 1e-6;
    let th = b.atan2(a).clamp(-cap, cap);
    y_amb * th.cos() + e * th.sin()
}

/// Lift a graph in `N_e` coordinates to the cylinder `π_e^{-1}(Γ)` expressed
/// as a graph along `lam`.
///
/// With `p̄ = F_eᵀ F_λ y` the height is `h(y) = (ξ̄(F̄ᵀ p̄) − p̄·λ̄) / cos θ`,
/// `cos θ = λ · F_e λ̄`; affine recursive heights lift to affine heights.
pub(crate) fn lift_hypersurface(
    hbar: &Hypersurface,
    e: &Vector,
    lam: &Vector,
) -> Result<Hypersurface> {
    let n = e.len();
    let fe = hyperplane_frame(e)?;
    let lam_bar = hbar.dir().clone();
    let lam_bar_amb = &fe * &lam_bar;
    let cos_t = lam.dot(&lam_bar_amb);
    if cos_t < 1e-9 {
        return Err(Error::numeric("lift direction degenerate against the fiber"));
    }
    let fl = hyperplane_frame(lam)?;
    let m = fe.transpose() * &fl; // (n-1) x (n-1)
    let fbar = hyperplane_frame(&lam_bar)?; // (n-1) x (n-2)
    let xi = hbar.height().clone();
    let height = if let Some((base, v0, grad)) = xi.as_affine() {
        let grad_h = m.transpose() * (&fbar * &grad - &lam_bar) / cos_t;
        let v0_h = (v0 - grad.dot(&base)) / cos_t;
        LipFn::affine(n - 1, DVector::zeros(n - 1), v0_h, grad_h)?
    } else {
        let l = (1.0 + xi.l_cert()) / cos_t;
        let (m2, fbar2, lam_bar2) = (m.clone(), fbar.clone(), lam_bar.clone());
        LipFn::custom(n - 1, l, "lift", move |y: &Vector| {
            let pbar = &m2 * y;
            let z = fbar2.transpose() * &pbar;
            (xi.eval(&z) - pbar.dot(&lam_bar2)) / cos_t
        })
    };
    Hypersurface::new(lam.clone(), height)
}

/// Step 3: splice `lifted` (graphs `Ĥ_k` along `λ̂_k` with their
/// previous-direction representations) into slab `p`, clamping each between
/// the walls regraphed to its direction.
fn merge_into_slab(
    s: &RegularSystem,
    p: usize,
    lifted: Vec<(Hypersurface, Option<Hypersurface>, Vector)>,
    radius: f64,
) -> Result<RegularSystem> {
    if lifted.is_empty() {
        return Ok(s.clone());
    }
    let n = s.ambient_dim();
    let lower = s.lower_wall(p).cloned();
    let upper = s.upper_wall(p)?.cloned();
    let upper_native = if p < s.len() {
        Some(s.entries()[p].hyp.clone())
    } else {
        None
    };

    let wall_regraph = |wall: &Hypersurface, dir: &Vector| -> Result<Hypersurface> {
        let m = wall_margin(wall, dir, radius)?;
        if m <= 1e-9 {
            return Err(Error::degenerate(format!(
                "merge direction tangent to a slab wall (margin {m:.2e})"
            )));
        }
        regraph(wall, dir, m * 0.9)
    };
    let clamp = |h: &Hypersurface, dir: &Vector| -> Result<LipFn> {
        let mut f = h.height().clone();
        if let Some(lo) = &lower {
            let z = wall_regraph(lo, dir)?;
            f = LipFn::fmax(z.height().clone(), f)?;
        }
        if let Some(up) = &upper {
            let z = wall_regraph(up, dir)?;
            f = LipFn::fmin(f, z.height().clone())?;
        }
        Ok(f)
    };

    let mut entries = s.entries().to_vec();
    // the lower wall adopts λ̂_1 so slab directions keep flowing entry to
    // entry; its previous-direction representation is the old native graph
    let first_dir = lifted[0].2.clone();
    if p >= 1 {
        let old = entries[p - 1].clone();
        if (old.hyp.dir() - &first_dir).norm() > 1e-12 {
            let regraphed = wall_regraph(&old.hyp, &first_dir)?;
            let as_prev = old.as_prev.clone().or(Some(old.hyp.clone()));
            entries[p - 1] = Entry {
                hyp: regraphed,
                as_prev,
            };
        }
    }
    // insert the clamped graphs
    let mut at = p;
    let mut prev: Option<(Hypersurface, Vector)> = None; // (raw lifted, dir)
    for (hyp, as_prev_raw, dir) in &lifted {
        let theta = clamp(hyp, dir)?;
        let as_prev = match (as_prev_raw, &prev) {
            (Some(raw), Some((_, pd))) if (pd - dir).norm() > 1e-12 => {
                Some(Hypersurface::new(pd.clone(), clamp(raw, pd)?)?)
            }
            _ => None,
        };
        entries.insert(
            at,
            Entry {
                hyp: Hypersurface::new(dir.clone(), theta)?,
                as_prev,
            },
        );
        at += 1;
        prev = Some((hyp.clone(), dir.clone()));
    }
    // the old upper wall needs a representation for the last new direction
    if let Some(up) = upper_native {
        let last_dir = &lifted.last().expect("nonempty").2;
        let as_prev = if (up.dir() - last_dir).norm() > 1e-12 {
            Some(wall_regraph(&up, last_dir)?)
        } else {
            None
        };
        entries[at] = Entry { hyp: up, as_prev };
    }
    Ok(RegularSystem::from_entries(n, entries))
}

fn wall_margin(wall: &Hypersurface, dir: &Vector, radius: f64) -> Result<f64> {
    let mut m = f64::INFINITY;
    for t in sampled_tangents(wall, radius, 96) {
        m = m.min(geom::dist_to_subspace(dir, &t)?);
    }
    Ok(m)
}

/// Clip simplices to the closed slab `k`.  Points are kept or dropped;
/// segments are clipped by scan plus bisection refinement; triangles are
/// clipped approximately by barycentric subdivision.
fn clip_to_slab(
    sims: &[Simplex],
    s: &RegularSystem,
    k: usize,
    cfg: &Config,
) -> Result<Vec<Simplex>> {
    let band = 1e-9;
    let mut out = Vec::new();
    for sx in sims {
        match sx.dim() {
            0 => {
                if s.in_slab_closed(&sx.vertices()[0], k, band)? {
                    out.push(sx.clone());
                }
            }
            1 => {
                let (p0, p1) = (&sx.vertices()[0], &sx.vertices()[1]);
                let at = |t: f64| p0 * (1.0 - t) + p1 * t;
                let feas = |t: f64| s.in_slab_closed(&at(t), k, band).unwrap_or(false);
                for (t0, t1) in feasible_intervals(&feas, cfg.clip_scan) {
                    let (q0, q1) = (at(t0), at(t1));
                    if (&q1 - &q0).norm() > 1e-9 {
                        if let Ok(seg) = Simplex::new(sx.ambient_dim(), vec![q0, q1]) {
                            out.push(seg);
                        }
                    }
                }
            }
            2 => {
                // best-effort barycentric subdivision; certified work is
                // n = 2, where triangles cannot occur
                let res = 12usize;
                for i in 0..res {
                    for j in 0..(res - i) {
                        for &upper_tri in &[false, true] {
                            if upper_tri && j + i + 1 >= res {
                                continue;
                            }
                            let f = 1.0 / res as f64;
                            let (a, b, c) = if !upper_tri {
                                (
                                    [i as f64 * f, j as f64 * f],
                                    [(i + 1) as f64 * f, j as f64 * f],
                                    [i as f64 * f, (j + 1) as f64 * f],
                                )
                            } else {
                                (
                                    [(i + 1) as f64 * f, j as f64 * f],
                                    [(i + 1) as f64 * f, (j + 1) as f64 * f],
                                    [i as f64 * f, (j + 1) as f64 * f],
                                )
                            };
                            let verts: Vec<Vector> = [a, b, c]
                                .iter()
                                .map(|w| {
                                    sx.barycentric_point(&[1.0 - w[0] - w[1], w[0], w[1]])
                                })
                                .collect();
                            let centroid = (&verts[0] + &verts[1] + &verts[2]) / 3.0;
                            if s.in_slab_closed(&centroid, k, band)? {
                                if let Ok(t) = Simplex::new(sx.ambient_dim(), verts) {
                                    out.push(t);
                                }
                            }
                        }
                    }
                }
            }
            d => {
                return Err(Error::contract(format!(
                    "clipping of {d}-simplices is not supported"
                )))
            }
        }
    }
    Ok(out)
}

/// Maximal subintervals of `[0, 1]` where `feas` holds, boundaries refined
/// by bisection.
fn feasible_intervals(feas: &dyn Fn(f64) -> bool, scan: usize) -> Vec<(f64, f64)> {
    let scan = scan.max(8);
    let ts: Vec<f64> = (0..=scan).map(|i| i as f64 / scan as f64).collect();
    let fs: Vec<bool> = ts.iter().map(|&t| feas(t)).collect();
    let refine = |mut a: f64, mut b: f64| -> f64 {
        // feas(a) != feas(b); return the crossing
        let fa = feas(a);
        for _ in 0..50 {
            let mid = 0.5 * (a + b);
            if feas(mid) == fa {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..=scan {
        match (start, fs[i]) {
            (None, true) => {
                let t0 = if i == 0 {
                    0.0
                } else {
                    refine(ts[i - 1], ts[i])
                };
                start = Some(t0);
            }
            (Some(t0), false) => {
                let t1 = refine(ts[i - 1], ts[i]);
                out.push((t0, t1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(t0) = start {
        out.push((t0, 1.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::validate;

    fn v(parts: &[f64]) -> Vector {
        DVector::from_column_slice(parts)
    }

    fn seg(a: &[f64], b: &[f64]) -> Simplex {
        Simplex::new(a.len(), vec![v(a), v(b)]).unwrap()
    }

    #[test]
    fn horizontal_segment_is_a_single_graph() {
        let a = PLSet::new(2, vec![seg(&[0.0, 0.0], &[1.0, 0.0])]).unwrap();
        let cfg = Config::default();
        let s = build_system(&a, &cfg).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.entries()[0].hyp.dir() - v(&[0.0, 1.0])).norm() < 1e-9);
        let rep = validate(&s, Some(&a), 3.0, &cfg).unwrap();
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn stacked_segments_sort_into_two_entries() {
        let a = PLSet::new(
            2,
            vec![seg(&[0.0, 1.0], &[1.0, 1.0]), seg(&[0.0, -1.0], &[1.0, -1.0])],
        )
        .unwrap();
        let s = build_system(&a, &Config::default()).unwrap();
        assert_eq!(s.len(), 2);
        let h0 = s.entries()[0].hyp.height().eval(&v(&[0.5]));
        let h1 = s.entries()[1].hyp.height().eval(&v(&[0.5]));
        assert!(h0 < h1);
    }

    #[test]
    fn v_graph_groups_into_one_entry() {
        let a = PLSet::new(
            2,
            vec![seg(&[-1.0, 1.0], &[0.0, 0.0]), seg(&[0.0, 0.0], &[1.0, 1.0])],
        )
        .unwrap();
        let s = build_system(&a, &Config::default()).unwrap();
        assert_eq!(s.len(), 1);
        let h = s.entries()[0].hyp.height();
        assert!((h.eval(&v(&[0.5])) - 0.5).abs() < 1e-9);
        assert!((h.eval(&v(&[-0.5])) - 0.5).abs() < 1e-9);
    }

    fn square_boundary() -> PLSet {
        PLSet::new(
            2,
            vec![
                seg(&[0.0, 0.0], &[1.0, 0.0]),
                seg(&[1.0, 0.0], &[1.0, 1.0]),
                seg(&[1.0, 1.0], &[0.0, 1.0]),
                seg(&[0.0, 1.0], &[0.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn square_boundary_builds_a_valid_system() {
        let a = square_boundary();
        let cfg = Config::default();
        let s = build_system(&a, &cfg).unwrap();
        assert!(s.len() >= 3, "b = {}", s.len());
        // direction discipline: everything stays near e2
        let e2 = v(&[0.0, 1.0]);
        for en in s.entries() {
            assert!(
                (en.hyp.dir() - &e2).norm() <= cfg.eta + 1e-9,
                "direction {:?} strays",
                en.hyp.dir()
            );
        }
        let rep = validate(&s, Some(&a), 3.0, &cfg).unwrap();
        assert_eq!(rep.order_violations, 0, "{rep:?}");
        assert_eq!(rep.e_mismatches, 0, "{rep:?}");
        assert_eq!(rep.membership_violations, 0, "{rep:?}");
    }

    #[test]
    fn rotated_octagon_with_vertical_edges() {
        // corner offset chosen so two edges are exactly vertical
        let n_sides = 8usize;
        let mut pts = Vec::new();
        for k in 0..n_sides {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_sides as f64
                + std::f64::consts::PI / 8.0;
            pts.push(v(&[th.cos(), th.sin()]));
        }
        let mut sims = Vec::new();
        for k in 0..n_sides {
            sims.push(
                Simplex::new(2, vec![pts[k].clone(), pts[(k + 1) % n_sides].clone()]).unwrap(),
            );
        }
        let a = PLSet::new(2, sims).unwrap();
        let cfg = Config::default();
        assert!(pl::regularity_margin(&v(&[0.0, 1.0]), &a).unwrap() < 1e-12);
        let s = build_system(&a, &cfg).unwrap();
        let rep = validate(&s, Some(&a), 3.0, &cfg).unwrap();
        assert_eq!(rep.membership_violations, 0, "{rep:?}");
        assert_eq!(rep.order_violations, 0, "{rep:?}");
        for en in s.entries() {
            assert!((en.hyp.dir() - v(&[0.0, 1.0])).norm() <= 1.0);
        }
    }

    #[test]
    fn clip_segment_against_two_lines() {
        let s = RegularSystem::new(
            2,
            vec![
                Hypersurface::new(v(&[0.0, 1.0]), LipFn::constant(1, 0.0)).unwrap(),
                Hypersurface::new(v(&[0.0, 1.0]), LipFn::constant(1, 1.0)).unwrap(),
            ],
            4.0,
        )
        .unwrap();
        let diag = seg(&[0.0, -1.0], &[2.0, 3.0]);
        let cfg = Config::default();
        let clipped = clip_to_slab(&[diag], &s, 1, &cfg).unwrap();
        assert_eq!(clipped.len(), 1);
        let c = &clipped[0];
        let lo = c.vertices()[0][1].min(c.vertices()[1][1]);
        let hi = c.vertices()[0][1].max(c.vertices()[1][1]);
        assert!((lo - 0.0).abs() < 1e-6 && (hi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lift_reproduces_the_cylinder() {
        // graph in N_{e3} coords: plane height ξ̄(z) = 0.5 z + 1 along λ̄ = e2'
        let e = v(&[0.0, 0.0, 1.0]);
        let hbar = Hypersurface::new(
            v(&[0.0, 1.0]),
            LipFn::affine(1, DVector::zeros(1), 1.0, v(&[0.5])).unwrap(),
        )
        .unwrap();
        let lam = fiber_point_toward(&(hyperplane_frame(&e).unwrap() * v(&[0.0, 1.0])), &e, &v(&[0.0, 1.0, 0.3]).normalize());
        let h = lift_hypersurface(&hbar, &e, &lam).unwrap();
        // points of the cylinder: (x, 1 + 0.5 x, t) for the identity frame
        let fe = hyperplane_frame(&e).unwrap();
        for (x, t) in [(0.0, 0.0), (1.0, 2.0), (-0.7, 0.3)] {
            let base2 = v(&[x, 1.0 + 0.5 * x]);
            let q = &fe * &base2 + &e * t;
            assert!(h.residual(&q).unwrap().abs() < 1e-9, "x={x}, t={t}");
        }
    }
}
