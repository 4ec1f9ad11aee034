//! Regular systems of hypersurfaces.
//!
//! A regular system is a finite stack `(H_1, λ_1), …, (H_b, λ_b)` where each
//! consecutive pair `H_k ≤ H_{k+1}` consists of graphs of Lipschitz
//! functions `ξ_k ≤ ξ'_k` along `λ_k`, and the lower set `E(H_{k+1}, ·)`
//! does not depend on which of `λ_k`, `λ_{k+1}` is used.  The sentinels
//! `H_0 = −∞`, `H_{b+1} = +∞` close the stack, so the slabs
//! `G_k = E(H_{k+1}, λ_k) \ int E(H_k, λ_k)`, `k = 0..b`, tile `R^n`.
//!
//! Entries store the graph for their own direction plus, when the previous
//! direction differs, the same point set regraphed for it; that second
//! representation is what conditions (i)–(ii) and slab membership consume.

use crate::config::{slope_bound, Config};
use crate::error::{Error, Result};
use crate::geom::{
    self, hyperplane_frame, sphere_mesh, Subspace, Vector,
};
use crate::lip::{order_statistics, regraph, Hypersurface, LipFn, Side};
use crate::pl::{self, PLSet};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Entry {
    /// `H_k` as a graph for its own direction `λ_k`.
    pub hyp: Hypersurface,
    /// The same point set as a graph for `λ_{k−1}`; `None` when the
    /// directions coincide.
    pub as_prev: Option<Hypersurface>,
}

#[derive(Debug, Clone)]
pub struct RegularSystem {
    n: usize,
    entries: Vec<Entry>,
}

impl RegularSystem {
    /// Assemble a system from graphs; representations for the previous
    /// directions are derived by regraphing with a sampled-tangent margin.
    /// Runs a quick sampled monotonicity check.
    pub fn new(n: usize, hyps: Vec<Hypersurface>, radius: f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(hyps.len());
        for (i, h) in hyps.iter().enumerate() {
            if h.dir().len() != n {
                return Err(Error::dim("hypersurface ambient dimension mismatch"));
            }
            let as_prev = if i > 0 && (hyps[i - 1].dir() - h.dir()).norm() > 1e-12 {
                let prev_dir = hyps[i - 1].dir().clone();
                let tangents = sampled_tangents(h, radius, 64);
                let margin = dir_margin(&prev_dir, &tangents)?;
                if margin <= 1e-6 {
                    return Err(Error::contract(format!(
                        "direction {} is not regular for hypersurface {} (margin {margin:.2e})",
                        i - 1,
                        i
                    )));
                }
                Some(regraph(h, &prev_dir, margin * 0.9)?)
            } else {
                None
            };
            entries.push(Entry {
                hyp: h.clone(),
                as_prev,
            });
        }
        let sys = RegularSystem { n, entries };
        sys.quick_order_check(radius)?;
        Ok(sys)
    }

    pub(crate) fn from_entries(n: usize, entries: Vec<Entry>) -> Self {
        RegularSystem { n, entries }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Number of hypersurfaces `b`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Direction `λ_k` governing slab `k ∈ 0..=b` (with `λ_0 = λ_1`).
    pub fn slab_dir(&self, k: usize) -> Result<&Vector> {
        if self.entries.is_empty() {
            return Err(Error::contract("empty system has a single unbounded slab"));
        }
        let idx = if k == 0 { 0 } else { (k - 1).min(self.entries.len() - 1) };
        Ok(self.entries[idx].hyp.dir())
    }

    /// `H_k` for `1 ≤ k ≤ b`, `None` for the sentinels.
    pub fn lower_wall(&self, k: usize) -> Option<&Hypersurface> {
        if k == 0 || k > self.entries.len() {
            None
        } else {
            Some(&self.entries[k - 1].hyp)
        }
    }

    /// `H_{k+1}` as a graph for the slab direction `λ_k`; `None` for `k = b`.
    pub fn upper_wall(&self, k: usize) -> Result<Option<&Hypersurface>> {
        if k >= self.entries.len() {
            return Ok(None);
        }
        let e = &self.entries[k];
        if k == 0 {
            return Ok(Some(&e.hyp));
        }
        let lam = self.entries[k - 1].hyp.dir();
        if (lam - e.hyp.dir()).norm() < 1e-12 {
            Ok(Some(&e.hyp))
        } else {
            e.as_prev.as_ref().map(Some).ok_or_else(|| {
                Error::contract(format!(
                    "entry {k} lacks a representation for the previous direction"
                ))
            })
        }
    }

    /// Index of the slab containing `q`; ties ("on" a wall) resolve to the
    /// lower slab.
    pub fn slab_membership(&self, q: &Vector, eps: f64) -> Result<usize> {
        if q.len() != self.n {
            return Err(Error::dim("point dimension mismatch"));
        }
        for k in 0..self.entries.len() {
            if let Some(up) = self.upper_wall(k)? {
                match up.side(q, eps)? {
                    Side::Below | Side::On => return Ok(k),
                    Side::Above => {}
                }
            }
        }
        Ok(self.entries.len())
    }

    /// Whether `q` lies in the closed slab `k` (walls included, band `eps`).
    pub fn in_slab_closed(&self, q: &Vector, k: usize, eps: f64) -> Result<bool> {
        if let Some(up) = self.upper_wall(k)? {
            if up.residual(q)? > eps {
                return Ok(false);
            }
        }
        if let Some(lo) = self.lower_wall(k) {
            if lo.residual(q)? < -eps {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn quick_order_check(&self, radius: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..self.entries.len() {
            let lo = &self.entries[k - 1].hyp;
            let up = self.upper_wall(k)?.expect("k < b");
            for _ in 0..64 {
                let x = random_box_point(self.n - 1, radius, &mut rng);
                let gap = up.height().eval(&x) - lo.height().eval(&x);
                if gap < -1e-7 {
                    return Err(Error::contract(format!(
                        "hypersurfaces {k} and {} are out of order (gap {gap:.2e})",
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn random_box_point(d: usize, radius: f64, rng: &mut impl Rng) -> Vector {
    DVector::from_fn(d, |_, _| rng.gen_range(-radius..=radius))
}

/// Secant tangent subspaces of a graph, sampled at low-discrepancy shadow
/// points in `[−radius, radius]^{n−1}`.
pub fn sampled_tangents(h: &Hypersurface, radius: f64, count: usize) -> Vec<Subspace> {
    let n = h.dir().len();
    let d = n - 1;
    let frame = hyperplane_frame(h.dir()).expect("frame");
    let delta = 1e-6 * radius.max(1.0);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let x = DVector::from_fn(d, |i, _| {
            (2.0 * pl::halton(k as u64 + 1, [2, 3, 5, 7][i % 4]) - 1.0) * radius
        });
        let base = &frame * &x + h.dir() * h.height().eval(&x);
        let mut secants = Vec::with_capacity(d);
        for i in 0..d {
            let mut xp = x.clone();
            xp[i] += delta;
            let p = &frame * &xp + h.dir() * h.height().eval(&xp);
            secants.push(p - &base);
        }
        if let Ok(t) = Subspace::span(n, &secants) {
            if t.dim() == d {
                out.push(t);
            }
        }
    }
    out
}

fn dir_margin(dir: &Vector, tangents: &[Subspace]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for t in tangents {
        m = m.min(geom::dist_to_subspace(dir, t)?);
    }
    Ok(m)
}

/// Sampled regularity margin of `dir` for the pair of walls of slab `k`
/// (sentinels impose no constraint).
pub fn slab_dir_margin(s: &RegularSystem, k: usize, dir: &Vector, radius: f64) -> Result<f64> {
    let mut tangents = Vec::new();
    if let Some(lo) = s.lower_wall(k) {
        tangents.extend(sampled_tangents(lo, radius, 96));
    }
    if k < s.len() {
        tangents.extend(sampled_tangents(&s.entries()[k].hyp, radius, 96));
    }
    dir_margin(dir, &tangents)
}

/// The connected direction region `Λ_k`: mesh vertices of the sphere whose
/// sampled margin for `H_k ∪ H_{k+1}` exceeds `alpha_lambda`, restricted to
/// the component containing `λ_k`.
#[derive(Debug, Clone)]
pub struct LambdaRegion {
    pub center: Vector,
    pub points: Vec<Vector>,
    pub margins: Vec<f64>,
    /// Vertices in the component of `λ_k`.
    pub component: Vec<bool>,
    pub mesh_pitch: f64,
}

impl LambdaRegion {
    /// Distance from the center to the nearest mesh vertex outside the
    /// component — a conservative radius of directions certified regular.
    pub fn safe_radius(&self) -> f64 {
        let mut r = f64::INFINITY;
        for (p, &inside) in self.points.iter().zip(&self.component) {
            if !inside {
                r = r.min((p - &self.center).norm());
            }
        }
        r
    }

    pub fn contains(&self, dir: &Vector) -> bool {
        let mut best = (f64::INFINITY, false);
        for (p, &inside) in self.points.iter().zip(&self.component) {
            let d = (p - dir).norm();
            if d < best.0 {
                best = (d, inside);
            }
        }
        best.1 && best.0 <= 2.0 * self.mesh_pitch
    }
}

pub fn lambda_region(
    s: &RegularSystem,
    k: usize,
    radius: f64,
    cfg: &Config,
) -> Result<LambdaRegion> {
    if s.is_empty() {
        return Err(Error::contract("empty system has no direction regions"));
    }
    let n = s.ambient_dim();
    let center = s.slab_dir(k)?.clone();
    let mut tangents = Vec::new();
    if let Some(lo) = s.lower_wall(k) {
        tangents.extend(sampled_tangents(lo, radius, 128));
    }
    if k < s.len() {
        tangents.extend(sampled_tangents(&s.entries()[k].hyp, radius, 128));
    }
    // mesh pitch from the requested resolution
    let pitch = if n == 2 {
        2.0 * (std::f64::consts::PI / cfg.mesh_res as f64).sin()
    } else {
        (16.0 / cfg.mesh_res as f64).sqrt().min(0.5)
    };
    let mesh = sphere_mesh(n, pitch.max(1e-3))?;
    let margins: Vec<f64> = mesh
        .points
        .iter()
        .map(|p| dir_margin(p, &tangents).unwrap_or(0.0))
        .collect();
    let in_region: Vec<bool> = margins.iter().map(|&m| m > cfg.alpha_lambda).collect();
    // seed: nearest mesh vertex to the center
    let seed = mesh
        .points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - &center)
                .norm()
                .partial_cmp(&(*b - &center).norm())
                .unwrap()
        })
        .map(|(i, _)| i)
        .expect("mesh nonempty");
    let center_margin = dir_margin(&center, &tangents)?;
    if center_margin <= cfg.alpha_lambda {
        return Err(Error::contract(format!(
            "slab direction has sampled margin {center_margin:.3e}, below the region threshold"
        )));
    }
    let mut component = vec![false; mesh.points.len()];
    if in_region[seed] {
        let adj = mesh.neighbors();
        let mut stack = vec![seed];
        component[seed] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if in_region[j] && !component[j] {
                    component[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    Ok(LambdaRegion {
        center,
        points: mesh.points,
        margins,
        component,
        mesh_pitch: pitch,
    })
}

/// Sampled validation report for a system, optionally against a PL set it
/// is supposed to contain.
#[derive(Debug, Clone)]
pub struct SystemReport {
    pub samples: usize,
    pub order_violations: usize,
    pub min_gap: f64,
    pub e_mismatches: usize,
    pub membership_violations: usize,
    pub membership_worst: f64,
    pub ok: bool,
}

/// Sample-check conditions (i) and (ii) and, when `a` is given, that every
/// sampled point of `a` lies on some hypersurface within `cfg.eps_mem`.
pub fn validate(
    s: &RegularSystem,
    a: Option<&PLSet>,
    radius: f64,
    cfg: &Config,
) -> Result<SystemReport> {
    let n = s.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let b = s.len();
    let mut order_violations = 0usize;
    let mut min_gap = f64::INFINITY;
    let mut e_mismatches = 0usize;
    let mut samples = 0usize;

    if b > 0 {
        let per_pair = (cfg.samples / b.max(1)).max(16);
        for k in 1..b {
            let lo = &s.entries()[k - 1].hyp;
            let up = s.upper_wall(k)?.expect("k < b");
            for _ in 0..per_pair {
                let x = random_box_point(n - 1, radius, &mut rng);
                let gap = up.height().eval(&x) - lo.height().eval(&x);
                samples += 1;
                min_gap = min_gap.min(gap);
                if gap < -2.0 * cfg.eps_mem {
                    order_violations += 1;
                }
            }
            // condition (ii): both representations of H_{k+1} classify
            // ambient points identically outside the band
            let native = &s.entries()[k].hyp;
            let as_prev = s.upper_wall(k)?.expect("k < b");
            if (native.dir() - as_prev.dir()).norm() > 1e-12 {
                for _ in 0..per_pair {
                    let q = random_box_point(n, radius, &mut rng);
                    let s1 = native.side(&q, cfg.eps_mem * 10.0)?;
                    let s2 = as_prev.side(&q, cfg.eps_mem * 10.0)?;
                    samples += 1;
                    if matches!(s1, Side::On) || matches!(s2, Side::On) {
                        continue;
                    }
                    if s1 != s2 {
                        e_mismatches += 1;
                    }
                }
            }
        }
    }

    let mut membership_violations = 0usize;
    let mut membership_worst: f64 = 0.0;
    if let Some(set) = a {
        let per_simplex = (cfg.samples / set.simplices().len().max(1)).clamp(8, 256);
        for (_, q) in pl::sample_set(set, per_simplex) {
            let mut best = f64::INFINITY;
            for e in s.entries() {
                best = best.min(e.hyp.residual(&q)?.abs());
                if best <= cfg.eps_mem {
                    break;
                }
            }
            samples += 1;
            membership_worst = membership_worst.max(best);
            if best > cfg.eps_mem {
                membership_violations += 1;
            }
        }
    }

    Ok(SystemReport {
        samples,
        order_violations,
        min_gap,
        e_mismatches,
        membership_violations,
        membership_worst,
        ok: order_violations == 0 && e_mismatches == 0 && membership_violations == 0,
    })
}

/// Insert hypersurfaces splitting slab `k` so that each open sub-slab has a
/// connected interior.
///
/// The interior of a slab is vertically convex, so its components biject
/// with the components of the open shadow region `{ y : ξ_k(y) < ξ'_k(y) }`;
/// those are found by union-find on an ε-grid over the shadow box.  With
/// `ν` components, `ν − 1` graphs are inserted, the `i`-th equal to `ξ'_k`
/// over the first `i` components and `ξ_k` elsewhere.  Sentinel slabs and
/// connected slabs return the system unchanged.
pub fn split_components(
    s: &RegularSystem,
    k: usize,
    radius: f64,
    cfg: &Config,
) -> Result<RegularSystem> {
    if k == 0 || k >= s.len() {
        return Ok(s.clone());
    }
    let n = s.ambient_dim();
    let d = n - 1;
    let lam = s.slab_dir(k)?.clone();
    let lo = s.lower_wall(k).expect("k >= 1").height().clone();
    let up = s.upper_wall(k)?.expect("k < b").height().clone();

    // grid over the shadow box
    let mut thickness: f64 = 0.0;
    let probe = 64usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x51);
    for _ in 0..probe {
        let x = random_box_point(d, radius, &mut rng);
        thickness = thickness.max(up.eval(&x) - lo.eval(&x));
    }
    if thickness <= 1e-12 {
        return Ok(s.clone());
    }
    let per_axis_cap = match d {
        1 => 4096usize,
        2 => 192,
        _ => 24,
    };
    let pitch = (thickness / 32.0).max(2.0 * radius / per_axis_cap as f64);
    let cells_per_axis = ((2.0 * radius / pitch).ceil() as usize).max(2);
    let total: usize = cells_per_axis.pow(d as u32);
    let band = 1e-10;

    let cell_center = |idx: usize| -> Vector {
        let mut rem = idx;
        DVector::from_fn(d, |i, _| {
            let _ = i;
            let c = rem % cells_per_axis;
            rem /= cells_per_axis;
            -radius + (c as f64 + 0.5) * (2.0 * radius / cells_per_axis as f64)
        })
    };
    let active: Vec<bool> = (0..total)
        .map(|i| {
            let y = cell_center(i);
            up.eval(&y) - lo.eval(&y) > 2.0 * band
        })
        .collect();

    // union-find
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..total {
        if !active[i] {
            continue;
        }
        let mut rem = i;
        let mut coords = vec![0usize; d];
        for c in coords.iter_mut() {
            *c = rem % cells_per_axis;
            rem /= cells_per_axis;
        }
        let mut stride = 1usize;
        for (axis, &c) in coords.iter().enumerate() {
            let _ = axis;
            if c + 1 < cells_per_axis {
                let j = i + stride;
                if active[j] {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
            stride *= cells_per_axis;
        }
    }
    // canonical component ids in order of first appearance
    let mut comp_of_root = std::collections::HashMap::new();
    let mut comp: Vec<Option<usize>> = vec![None; total];
    let mut nu = 0usize;
    for i in 0..total {
        if active[i] {
            let r = find(&mut parent, i);
            let id = *comp_of_root.entry(r).or_insert_with(|| {
                let id = nu;
                nu += 1;
                id
            });
            comp[i] = Some(id);
        }
    }
    if nu <= 1 {
        return Ok(s.clone());
    }

    let grid_lookup = {
        let comp = comp.clone();
        move |y: &Vector| -> Option<usize> {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for i in 0..d {
                let c = (((y[i] + radius) / (2.0 * radius / cells_per_axis as f64)).floor())
                    .clamp(0.0, (cells_per_axis - 1) as f64) as usize;
                idx += c * stride;
                stride *= cells_per_axis;
            }
            comp[idx]
        }
    };

    let l_eta = lo.l_cert() + up.l_cert();
    let mut new_entries = s.entries().to_vec();
    for i in 1..nu {
        let lo_i = lo.clone();
        let up_i = up.clone();
        let lookup = grid_lookup.clone();
        let eta = LipFn::custom(d, l_eta.max(1e-12), "split", move |y: &Vector| {
            match lookup(y) {
                Some(c) if c < i => up_i.eval(y),
                _ => lo_i.eval(y),
            }
        });
        let hyp = Hypersurface::new(lam.clone(), eta)?;
        new_entries.insert(k - 1 + i, Entry { hyp, as_prev: None });
    }
    Ok(RegularSystem::from_entries(n, new_entries))
}

/// Extend the system so that it contains `x ⊂ Ḡ_k`: decompose `x` into
/// graph pieces along the slab direction, McShane-extend at the margin's
/// slope bound, sort, clamp into the slab, and insert.
pub fn extend_with(s: &RegularSystem, k: usize, x: &PLSet, cfg: &Config) -> Result<RegularSystem> {
    let lam = if s.is_empty() {
        geom::basis_vector(s.ambient_dim(), s.ambient_dim() - 1)
    } else {
        s.slab_dir(k)?.clone()
    };
    extend_with_dir(s, k, x, &lam, cfg)
}

/// Build a one-slab system whose graphs along `lam` cover `x` directly.
pub fn graph_system(x: &PLSet, lam: &Vector, cfg: &Config) -> Result<RegularSystem> {
    let empty = RegularSystem::from_entries(x.ambient_dim(), Vec::new());
    extend_with_dir(&empty, 0, x, lam, cfg)
}

pub(crate) fn extend_with_dir(
    s: &RegularSystem,
    k: usize,
    x: &PLSet,
    lam: &Vector,
    cfg: &Config,
) -> Result<RegularSystem> {
    let n = s.ambient_dim();
    if x.ambient_dim() != n {
        return Err(Error::dim("extension set ambient dimension mismatch"));
    }
    if x.is_empty() {
        return Ok(s.clone());
    }
    let lam = lam.clone();
    // sampled containment in the closed slab
    if !s.is_empty() {
        for (_, q) in pl::sample_set(x, 8) {
            if !s.in_slab_closed(&q, k, cfg.eps_mem * 100.0)? {
                return Err(Error::contract(format!(
                    "extension set leaves the closed slab {k}"
                )));
            }
        }
    }
    let margin = pl::regularity_margin(&lam, x)?;
    if !(margin > 1e-9) {
        return Err(Error::contract(format!(
            "slab direction is not regular for the extension set (margin {margin:.2e})"
        )));
    }
    let margin = margin.min(1.0) * 0.999;
    let lip = slope_bound(margin);
    let pieces = pl::graph_decompose(x, &lam, margin)?;

    let lower = s.lower_wall(k).map(|h| h.height().clone());
    let upper = s.upper_wall(k).ok().flatten().map(|h| h.height().clone());

    // drop pieces lying within an existing wall
    let frame = hyperplane_frame(&lam)?;
    let on_wall = |p: &pl::GraphPiece| -> bool {
        let mut probes: Vec<Vector> = p.shadow.vertices().to_vec();
        let centroid = {
            let mut c = DVector::zeros(n - 1);
            for v in p.shadow.vertices() {
                c += v;
            }
            c / p.shadow.vertices().len() as f64
        };
        probes.push(centroid);
        for wall in lower.iter().chain(upper.iter()) {
            if probes
                .iter()
                .all(|y| (p.value(y) - wall.eval(y)).abs() <= 1e-10)
            {
                return true;
            }
        }
        false
    };
    let _ = &frame;
    let pieces: Vec<pl::GraphPiece> = pieces.into_iter().filter(|p| !on_wall(p)).collect();
    if pieces.is_empty() {
        return Ok(s.clone());
    }

    // greedy grouping into jointly Lipschitz families
    let mut groups: Vec<Vec<pl::GraphPiece>> = Vec::new();
    'next: for p in pieces {
        for g in groups.iter_mut() {
            if g.iter().all(|q| pieces_compatible(q, &p, lip)) {
                g.push(p.clone());
                continue 'next;
            }
        }
        groups.push(vec![p]);
    }
    let fns: Vec<LipFn> = groups
        .into_iter()
        .map(|g| LipFn::mcshane(n - 1, g, lip))
        .collect::<Result<_>>()?;
    let sorted = order_statistics(fns)?;

    let mut new_entries = s.entries().to_vec();
    for (i, f) in sorted.into_iter().enumerate() {
        let mut theta = f;
        if let Some(lo) = &lower {
            theta = LipFn::fmax(lo.clone(), theta)?;
        }
        if let Some(up) = &upper {
            theta = LipFn::fmin(theta, up.clone())?;
        }
        let hyp = Hypersurface::new(lam.clone(), theta)?;
        let insert_at = if s.is_empty() { i } else { k + i };
        // inserted graphs share the slab direction, so no previous-direction
        // representation is needed between them or against H_k
        new_entries.insert(
            insert_at.min(new_entries.len()),
            Entry { hyp, as_prev: None },
        );
    }
    Ok(RegularSystem::from_entries(n, new_entries))
}

fn pieces_compatible(a: &pl::GraphPiece, b: &pl::GraphPiece, lip: f64) -> bool {
    let mut pa: Vec<Vector> = a.shadow.vertices().to_vec();
    let mut pb: Vec<Vector> = b.shadow.vertices().to_vec();
    for k in 1..=4u64 {
        pa.push(
            a.shadow
                .barycentric_point(&pl::halton_barycentric(a.shadow.dim(), k)),
        );
        pb.push(
            b.shadow
                .barycentric_point(&pl::halton_barycentric(b.shadow.dim(), k)),
        );
    }
    for x in &pa {
        for y in &pb {
            if (a.value(x) - b.value(y)).abs() > lip * (x - y).norm() + 1e-9 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(parts: &[f64]) -> Vector {
        DVector::from_column_slice(parts)
    }

    fn affine_hyp(dir: &[f64], value0: f64, slope: &[f64]) -> Hypersurface {
        let d = slope.len();
        Hypersurface::new(
            v(dir),
            LipFn::affine(d, DVector::zeros(d), value0, v(slope)).unwrap(),
        )
        .unwrap()
    }

    fn two_line_system() -> RegularSystem {
        // two horizontal lines y = 0 and y = 1 in R², both graphed along e2
        RegularSystem::new(
            2,
            vec![affine_hyp(&[0.0, 1.0], 0.0, &[0.0]), affine_hyp(&[0.0, 1.0], 1.0, &[0.0])],
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn slab_membership_with_tie_break() {
        let s = two_line_system();
        let eps = 1e-9;
        assert_eq!(s.slab_membership(&v(&[0.3, -0.5]), eps).unwrap(), 0);
        assert_eq!(s.slab_membership(&v(&[0.3, 0.5]), eps).unwrap(), 1);
        assert_eq!(s.slab_membership(&v(&[0.3, 1.5]), eps).unwrap(), 2);
        // a point on a wall belongs to the slab below
        assert_eq!(s.slab_membership(&v(&[0.3, 0.0]), eps).unwrap(), 0);
        assert_eq!(s.slab_membership(&v(&[0.3, 1.0]), eps).unwrap(), 1);
    }

    #[test]
    fn out_of_order_systems_are_rejected() {
        let r = RegularSystem::new(
            2,
            vec![affine_hyp(&[0.0, 1.0], 1.0, &[0.0]), affine_hyp(&[0.0, 1.0], 0.0, &[0.0])],
            4.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn validate_accepts_a_clean_pair() {
        let s = two_line_system();
        let cfg = Config {
            samples: 2000,
            ..Config::default()
        };
        let rep = validate(&s, None, 4.0, &cfg).unwrap();
        assert!(rep.ok, "{rep:?}");
        assert!(rep.min_gap >= 1.0 - 1e-9);
    }

    #[test]
    fn mixed_direction_pair_validates_via_regraph() {
        // H1: x-axis graphed along e2; H2: the line y = x + 3 along a tilted
        // direction; both representations must classify points identically
        let tilted = v(&[0.1, 1.0]).normalize();
        let h2 = Hypersurface::new(
            tilted,
            LipFn::affine(1, DVector::zeros(1), 3.0, v(&[0.4])).unwrap(),
        )
        .unwrap();
        let s = RegularSystem::new(2, vec![affine_hyp(&[0.0, 1.0], 0.0, &[0.0]), h2], 4.0).unwrap();
        let cfg = Config {
            samples: 2000,
            ..Config::default()
        };
        let rep = validate(&s, None, 4.0, &cfg).unwrap();
        assert_eq!(rep.e_mismatches, 0, "{rep:?}");
        assert_eq!(rep.order_violations, 0);
    }

    #[test]
    fn lambda_region_around_horizontal_walls() {
        let s = two_line_system();
        let cfg = Config::default();
        let region = lambda_region(&s, 1, 4.0, &cfg).unwrap();
        // e2 is fine, directions near ±e1 are tangent to the walls
        assert!(region.contains(&v(&[0.0, 1.0])));
        assert!(!region.contains(&v(&[1.0, 0.0])));
        assert!(region.safe_radius() > 0.5);
    }

    #[test]
    fn split_components_inserts_between_disconnected_bumps() {
        // lower wall 0, upper wall = two unit bumps with a flat gap between
        let bump = |c: f64| {
            crate::pl::GraphPiece {
                shadow: crate::pl::Simplex::new(1, vec![v(&[c - 1.0]), v(&[c + 1.0])]).unwrap(),
                value0: 0.0,
                grad: v(&[0.0]),
                slope: 0.0,
                source: 0,
            }
        };
        // tent functions over [c−1, c+1] via McShane of a single flat piece
        // clamped: simpler: custom evaluable bumps
        let up = LipFn::custom(1, 2.0, "bumps", move |y: &Vector| {
            let t = |c: f64| (1.0 - (y[0] - c).abs()).max(0.0);
            t(-2.0) + t(2.0)
        });
        let _ = bump;
        let lo = LipFn::constant(1, 0.0);
        let h1 = Hypersurface::new(v(&[0.0, 1.0]), lo).unwrap();
        let h2 = Hypersurface::new(v(&[0.0, 1.0]), up).unwrap();
        let s = RegularSystem::new(2, vec![h1, h2], 4.0).unwrap();
        let cfg = Config::default();
        let split = split_components(&s, 1, 4.0, &cfg).unwrap();
        assert_eq!(split.len(), 3, "one graph inserted between the bumps");
        // the inserted graph alternates between the walls
        let eta = split.entries()[1].hyp.height();
        assert!(eta.eval(&v(&[-2.0])) > 0.5); // over the first bump: upper wall
        assert!(eta.eval(&v(&[2.0])) < 0.5); // over the second: lower wall
        // inserted system stays ordered
        let rep = validate(&split, None, 3.5, &Config { samples: 3000, ..Config::default() }).unwrap();
        assert_eq!(rep.order_violations, 0, "{rep:?}");
    }

    #[test]
    fn split_components_is_identity_on_connected_slabs() {
        let s = two_line_system();
        let cfg = Config::default();
        let split = split_components(&s, 1, 4.0, &cfg).unwrap();
        assert_eq!(split.len(), s.len());
    }

    #[test]
    fn extend_with_covers_a_v_graph_between_walls() {
        // walls y = −2 and y = 2, extend with the V-graph
        let s = RegularSystem::new(
            2,
            vec![affine_hyp(&[0.0, 1.0], -2.0, &[0.0]), affine_hyp(&[0.0, 1.0], 2.0, &[0.0])],
            4.0,
        )
        .unwrap();
        let x = PLSet::new(
            2,
            vec![
                crate::pl::Simplex::new(2, vec![v(&[-1.0, 1.0]), v(&[0.0, 0.0])]).unwrap(),
                crate::pl::Simplex::new(2, vec![v(&[0.0, 0.0]), v(&[1.0, 1.0])]).unwrap(),
            ],
        )
        .unwrap();
        let cfg = Config::default();
        let extended = extend_with(&s, 1, &x, &cfg).unwrap();
        assert_eq!(extended.len(), 3);
        let rep = validate(&extended, Some(&x), 4.0, &cfg).unwrap();
        assert!(rep.ok, "{rep:?}");
        // entries outside the slab are untouched
        assert!((extended.entries()[0].hyp.height().eval(&v(&[0.7])) - (-2.0)).abs() < 1e-12);
        assert!((extended.entries()[2].hyp.height().eval(&v(&[0.7])) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn extend_with_rejects_sets_outside_the_slab() {
        let s = two_line_system();
        let x = PLSet::new(
            2,
            vec![crate::pl::Simplex::new(2, vec![v(&[0.0, 3.0]), v(&[1.0, 3.5])]).unwrap()],
        )
        .unwrap();
        assert!(extend_with(&s, 1, &x, &Config::default()).is_err());
    }
}
