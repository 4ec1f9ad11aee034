//! The zigzag homeomorphism of a regular system.
//!
//! For a point `q` in slab `k`, the map drops a foot onto each wall in
//! turn — `q → foot_k(q) → … → foot_1` — accumulating the heights above
//! the walls, and reads the result in the base chart of `λ_1`:
//! `h(q) = (x, t)` with `x` the `λ_1`-shadow of the last foot and `t` the
//! base height plus all accumulated shifts.  Each wall `H_k` maps onto the
//! graph `F_k` of a floor function `η_k` over the chart, computed by the
//! same walk upward:
//! `w_1(x) = F_{λ_1} x + ξ_1(x) λ_1`, `η_1 = ξ_1`, and
//! `w_{k+1} = w_k + (ξ'_k(y_k) − ξ_k(y_k)) λ_k`,
//! `η_{k+1}(x) = η_k(x) + (ξ'_k(y_k) − ξ_k(y_k))` with `y_k` the
//! `λ_k`-shadow of `w_k`.  The inverse walks the floors up to the image
//! slab and undoes the final shift, so a round trip costs `O(b)` wall
//! evaluations and no root finding.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geom::{hyperplane_frame, Vector};
use crate::lip::LipFn;
use crate::pl::{self, PLSet};
use crate::system::{validate, RegularSystem, SystemReport};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Lipschitz data certified for a zigzag map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Upper bound for the Lipschitz constant of the forward map.
    pub l_fwd: f64,
    /// Upper bound for the Lipschitz constant of the inverse.
    pub l_inv: f64,
    /// Lower bound for the `e_n`-regularity margin of the image of the
    /// hypersurfaces: `1/√(1 + L_η²)`.
    pub alpha_reg: f64,
    /// Largest certified floor slope `max_k L(η_k)`.
    pub l_eta: f64,
}

struct Spine {
    n: usize,
    dirs: Vec<Vector>,
    frames: Vec<DMatrix<f64>>,
    lowers: Vec<LipFn>,
    /// `ξ'_k` as a graph for `λ_k`; `None` for the top wall.
    uppers: Vec<Option<LipFn>>,
}

impl Spine {
    fn b(&self) -> usize {
        self.dirs.len()
    }

    /// Wall point `w_k(x)` and floor value `η_k(x)` for `1 ≤ k ≤ b`.
    fn walk_to(&self, x: &Vector, k: usize) -> (Vector, f64) {
        let xi1 = self.lowers[0].eval(x);
        let mut w = &self.frames[0] * x + &self.dirs[0] * xi1;
        let mut eta = xi1;
        for j in 1..k {
            let y = self.frames[j - 1].tr_mul(&w);
            let top = self.uppers[j - 1]
                .as_ref()
                .expect("interior wall")
                .eval(&y);
            let gap = (top - w.dot(&self.dirs[j - 1])).max(0.0);
            w += &self.dirs[j - 1] * gap;
            eta += gap;
        }
        (w, eta)
    }

    /// All floor values `η_1(x), …, η_b(x)` from one walk up the spine.
    fn walk_all(&self, x: &Vector) -> Vec<f64> {
        let b = self.b();
        let mut etas = Vec::with_capacity(b);
        let xi1 = self.lowers[0].eval(x);
        let mut w = &self.frames[0] * x + &self.dirs[0] * xi1;
        let mut eta = xi1;
        etas.push(eta);
        for j in 1..b {
            let y = self.frames[j - 1].tr_mul(&w);
            let top = self.uppers[j - 1]
                .as_ref()
                .expect("interior wall")
                .eval(&y);
            let gap = (top - w.dot(&self.dirs[j - 1])).max(0.0);
            w += &self.dirs[j - 1] * gap;
            eta += gap;
            etas.push(eta);
        }
        etas
    }
}

pub struct ZigzagMap {
    system: RegularSystem,
    spine: Arc<Spine>,
    floors: Vec<LipFn>,
    certificate: Certificate,
    validation: Option<SystemReport>,
    eps: f64,
}

impl ZigzagMap {
    pub fn system(&self) -> &RegularSystem {
        &self.system
    }

    /// The floor functions `η_k` on the base chart, in wall order.
    pub fn floors(&self) -> &[LipFn] {
        &self.floors
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// The validation report produced while building the map; `None` only
    /// for the empty system, which needs no validation.
    pub fn validation(&self) -> Option<&SystemReport> {
        self.validation.as_ref()
    }

    pub fn apply(&self, q: &Vector) -> Result<Vector> {
        let n = self.spine.n;
        if q.len() != n {
            return Err(Error::dim("point dimension mismatch"));
        }
        if self.spine.b() == 0 {
            return Ok(q.clone());
        }
        let k = self.system.slab_membership(q, self.eps)?;
        let sp = &self.spine;
        let mut cur = q.clone();
        let mut shift = 0.0;
        for j in (1..=k).rev() {
            let y = sp.frames[j - 1].tr_mul(&cur);
            let xi = sp.lowers[j - 1].eval(&y);
            shift += cur.dot(&sp.dirs[j - 1]) - xi;
            cur = &sp.frames[j - 1] * &y + &sp.dirs[j - 1] * xi;
        }
        let x = sp.frames[0].tr_mul(&cur);
        let t = cur.dot(&sp.dirs[0]) + shift;
        let mut out = DVector::zeros(n);
        for i in 0..n - 1 {
            out[i] = x[i];
        }
        out[n - 1] = t;
        Ok(out)
    }

    pub fn apply_inverse(&self, p: &Vector) -> Result<Vector> {
        let n = self.spine.n;
        if p.len() != n {
            return Err(Error::dim("point dimension mismatch"));
        }
        if self.spine.b() == 0 {
            return Ok(p.clone());
        }
        let sp = &self.spine;
        let x = DVector::from_fn(n - 1, |i, _| p[i]);
        let t = p[n - 1];
        let mut w = &sp.frames[0] * &x + &sp.dirs[0] * sp.lowers[0].eval(&x);
        let mut eta = sp.lowers[0].eval(&x);
        if t <= eta {
            // below the first floor: the base chart is an isometry
            return Ok(&sp.frames[0] * &x + &sp.dirs[0] * t);
        }
        for j in 1..sp.b() {
            let y = sp.frames[j - 1].tr_mul(&w);
            let top = sp.uppers[j - 1]
                .as_ref()
                .expect("interior wall")
                .eval(&y);
            let gap = (top - w.dot(&sp.dirs[j - 1])).max(0.0);
            if t <= eta + gap {
                return Ok(&w + &sp.dirs[j - 1] * (t - eta));
            }
            w += &sp.dirs[j - 1] * gap;
            eta += gap;
        }
        Ok(&w + &sp.dirs[sp.b() - 1] * (t - eta))
    }
}

/// Build the zigzag map of a validated system.  `radius` bounds the region
/// over which the floor slopes are certified by dense secant sampling.
pub fn build_flattening(s: &RegularSystem, radius: f64, cfg: &Config) -> Result<ZigzagMap> {
    let n = s.ambient_dim();
    let validation = if s.is_empty() {
        None
    } else {
        let rep = validate(s, None, radius, cfg)?;
        if !rep.ok {
            return Err(Error::verification(format!(
                "system fails validation: {rep:?}"
            )));
        }
        Some(rep)
    };
    let mut dirs = Vec::new();
    let mut frames = Vec::new();
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for k in 1..=s.len() {
        let e = &s.entries()[k - 1];
        dirs.push(e.hyp.dir().clone());
        frames.push(hyperplane_frame(e.hyp.dir())?);
        lowers.push(e.hyp.height().clone());
        uppers.push(s.upper_wall(k)?.map(|h| h.height().clone()));
    }
    let spine = Arc::new(Spine {
        n,
        dirs,
        frames,
        lowers,
        uppers,
    });

    let slopes = sampled_floor_slopes(&spine, radius);
    let mut floors = Vec::with_capacity(spine.b());
    let mut l_eta: f64 = 0.0;
    for k in 1..=spine.b() {
        let l_k = slopes[k - 1];
        l_eta = l_eta.max(l_k);
        let sp = spine.clone();
        floors.push(LipFn::custom(n - 1, l_k, "floor", move |x: &Vector| {
            sp.walk_to(x, k).1
        }));
    }

    // coarse sub-multiplicative bounds over the chart-change chain: within
    // a run of equal directions the walk telescopes to an isometry, so a
    // shear factor accrues only where consecutive directions differ
    let mut l_fwd = 1.0f64;
    let mut l_inv = 1.0f64;
    for k in 1..spine.b() {
        if (&spine.dirs[k] - &spine.dirs[k - 1]).norm() < 1e-12 {
            continue;
        }
        let lx = finite_l(spine.lowers[k].l_cert());
        let le = finite_l(floors[k].l_cert());
        l_fwd *= 1.0 + lx * (1.0 + le);
        l_inv *= 1.0 + le * (1.0 + lx);
    }
    let alpha_reg = 1.0 / (1.0 + l_eta * l_eta).sqrt();
    Ok(ZigzagMap {
        system: s.clone(),
        spine,
        floors,
        certificate: Certificate {
            l_fwd,
            l_inv,
            alpha_reg,
            l_eta,
        },
        validation,
        eps: cfg.eps_eval,
    })
}

fn finite_l(l: f64) -> f64 {
    if l.is_finite() {
        l
    } else {
        0.0
    }
}

/// Tight floor slopes from dense secants, all floors in one sweep: each
/// grid point costs a single walk up the spine.  The floors are piecewise
/// linear along any line for PL inputs, so a fine grid sees every slope; a
/// small safety factor absorbs the grid bias.
fn sampled_floor_slopes(spine: &Spine, radius: f64) -> Vec<f64> {
    let d = spine.n - 1;
    let b = spine.b();
    let mut l = vec![0.0f64; b];
    if d == 0 || b == 0 {
        return l;
    }
    if d == 1 {
        let m = 4096;
        let mut prev: Vec<f64> = Vec::new();
        let step = 2.0 * radius / m as f64;
        for i in 0..=m {
            let x = DVector::from_element(1, -radius + step * i as f64);
            let etas = spine.walk_all(&x);
            if i > 0 {
                for k in 0..b {
                    l[k] = l[k].max(((etas[k] - prev[k]) / step).abs());
                }
            }
            prev = etas;
        }
        l.iter().map(|v| v * 1.02).collect()
    } else {
        let m = 96;
        let step = 2.0 * radius / m as f64;
        let at = |i: usize, j: usize| {
            DVector::from_column_slice(&[
                -radius + step * i as f64,
                -radius + step * j as f64,
            ])
        };
        let mut grid = vec![Vec::new(); (m + 1) * (m + 1)];
        for i in 0..=m {
            for j in 0..=m {
                grid[i * (m + 1) + j] = spine.walk_all(&at(i, j));
            }
        }
        let g = |i: usize, j: usize, k: usize| grid[i * (m + 1) + j][k];
        let diag = (2.0f64).sqrt() * step;
        for k in 0..b {
            for i in 0..=m {
                for j in 0..=m {
                    if i < m {
                        l[k] = l[k].max(((g(i + 1, j, k) - g(i, j, k)) / step).abs());
                    }
                    if j < m {
                        l[k] = l[k].max(((g(i, j + 1, k) - g(i, j, k)) / step).abs());
                    }
                    if i < m && j < m {
                        l[k] = l[k].max(((g(i + 1, j + 1, k) - g(i, j, k)) / diag).abs());
                    }
                }
            }
        }
        l.iter().map(|v| v * 1.05).collect()
    }
}

/// Push low-discrepancy samples of `a` through the map; each image point
/// keeps the index of its source simplex for per-branch slope checks.
pub fn flatten_set(
    map: &ZigzagMap,
    a: &PLSet,
    per_simplex: usize,
) -> Result<Vec<(usize, Vector)>> {
    let mut out = Vec::new();
    for (branch, q) in pl::sample_set(a, per_simplex) {
        out.push((branch, map.apply(&q)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lip::Hypersurface;
    use crate::pl::Simplex;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn v(parts: &[f64]) -> Vector {
        DVector::from_column_slice(parts)
    }

    fn line(height: f64) -> Hypersurface {
        Hypersurface::new(v(&[0.0, 1.0]), LipFn::constant(1, height)).unwrap()
    }

    #[test]
    fn zero_graph_gives_the_identity_chart() {
        let s = RegularSystem::new(2, vec![line(0.0)], 4.0).unwrap();
        let map = build_flattening(&s, 4.0, &Config::default()).unwrap();
        let c = map.certificate();
        assert!((c.l_fwd - 1.0).abs() < 1e-9);
        assert!((c.alpha_reg - 1.0).abs() < 1e-6);
        for q in [v(&[0.3, -2.0]), v(&[-1.0, 0.5]), v(&[2.0, 3.0])] {
            assert!((map.apply(&q).unwrap() - &q).norm() < 1e-9, "{q:?}");
        }
    }

    #[test]
    fn v_graph_system_maps_rigidly() {
        // single hypersurface through the V-graph: the map is the chart,
        // so the floor is the V itself with unit slope
        let a = PLSet::new(
            2,
            vec![
                Simplex::new(2, vec![v(&[-1.0, 1.0]), v(&[0.0, 0.0])]).unwrap(),
                Simplex::new(2, vec![v(&[0.0, 0.0]), v(&[1.0, 1.0])]).unwrap(),
            ],
        )
        .unwrap();
        let cfg = Config::default();
        let s = crate::build::build_system(&a, &cfg).unwrap();
        let map = build_flattening(&s, 4.0, &cfg).unwrap();
        let c = map.certificate();
        assert!((c.l_eta - 1.0).abs() < 0.05, "l_eta {}", c.l_eta);
        assert!((c.l_fwd - 1.0).abs() < 1e-9);
        // the image of the wall is the graph of the floor
        for x in [-0.8, -0.1, 0.6] {
            let q = v(&[x, x.abs()]);
            let p = map.apply(&q).unwrap();
            let eta = map.floors()[0].eval(&v(&[x]));
            assert!((p[1] - eta).abs() < 1e-9);
        }
    }

    #[test]
    fn round_trip_on_a_two_wall_system() {
        let tilted = v(&[0.15, 1.0]).normalize();
        let h2 = Hypersurface::new(
            tilted,
            LipFn::affine(1, DVector::zeros(1), 6.0, v(&[0.3])).unwrap(),
        )
        .unwrap();
        let s = RegularSystem::new(2, vec![line(0.0), h2], 4.0).unwrap();
        let map = build_flattening(&s, 4.0, &Config::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let q = v(&[rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)]);
            let p = map.apply(&q).unwrap();
            let back = map.apply_inverse(&p).unwrap();
            assert!((back - &q).norm() < 1e-8, "{q:?} -> {p:?}");
        }
    }

    #[test]
    fn walls_map_onto_their_floors() {
        let s = RegularSystem::new(2, vec![line(-1.0), line(1.0)], 4.0).unwrap();
        let map = build_flattening(&s, 4.0, &Config::default()).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            for (k, h) in [(0usize, -1.0), (1, 1.0)] {
                let q = v(&[x, h]);
                let p = map.apply(&q).unwrap();
                let eta = map.floors()[k].eval(&v(&[x]));
                assert!((p[1] - eta).abs() < 1e-9);
                assert!((p[0] - x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn square_pipeline_round_trips() {
        let a = PLSet::new(
            2,
            vec![
                Simplex::new(2, vec![v(&[0.0, 0.0]), v(&[1.0, 0.0])]).unwrap(),
                Simplex::new(2, vec![v(&[1.0, 0.0]), v(&[1.0, 1.0])]).unwrap(),
                Simplex::new(2, vec![v(&[1.0, 1.0]), v(&[0.0, 1.0])]).unwrap(),
                Simplex::new(2, vec![v(&[0.0, 1.0]), v(&[0.0, 0.0])]).unwrap(),
            ],
        )
        .unwrap();
        let cfg = Config::default();
        let s = crate::build::build_system(&a, &cfg).unwrap();
        let radius = crate::build::set_radius(&a);
        let map = build_flattening(&s, radius, &cfg).unwrap();
        let c = map.certificate();
        assert!(c.l_fwd.is_finite() && c.l_inv.is_finite());
        assert!(c.alpha_reg > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let q = v(&[rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0)]);
            let p = map.apply(&q).unwrap();
            let back = map.apply_inverse(&p).unwrap();
            assert!((back - &q).norm() < 1e-6, "{q:?}");
        }
        // image samples lie on some floor graph
        for (_, p) in flatten_set(&map, &a, 64).unwrap() {
            let x = v(&[p[0]]);
            let best = map
                .floors()
                .iter()
                .map(|f| (f.eval(&x) - p[1]).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7, "image point off every floor by {best:.2e}");
        }
    }
}
