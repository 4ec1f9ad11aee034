//! Brute-force verification oracles.
//!
//! Everything here is deliberately independent of the construction code:
//! direction search is redone by exhaustive grid scan, Lipschitz constants
//! by sampled difference quotients, graph covers by per-sample residuals.
//! The oracles are what the test suite trusts; the library is what they
//! check.

use crate::error::{Error, Result};
use crate::flatten::ZigzagMap;
use crate::geom::{dist_to_subspace, Subspace, Vector};
use crate::pl::{self, PLSet};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Exhaustive sphere-grid maximization of `min_i d(λ, P_i)`.
///
/// `resolution` is the number of samples per angular dimension; the result
/// underestimates the true optimum by at most the grid pitch (the
/// objective is 1-Lipschitz on the sphere).
pub fn grid_sphere_argmax(
    n: usize,
    subspaces: &[Subspace],
    resolution: usize,
) -> Result<(Vector, f64)> {
    if resolution < 100 {
        return Err(Error::contract("oracle resolution below 100"));
    }
    let score = |p: &Vector| -> f64 {
        let mut m = f64::INFINITY;
        for s in subspaces {
            m = m.min(dist_to_subspace(p, s).unwrap_or(0.0));
        }
        m
    };
    let points: Vec<Vector> = match n {
        2 => (0..resolution)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / resolution as f64;
                DVector::from_column_slice(&[th.cos(), th.sin()])
            })
            .collect(),
        3 => {
            // Fibonacci sphere with resolution² points
            let m = resolution * resolution;
            let phi = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = phi * i as f64;
                    DVector::from_column_slice(&[r * th.cos(), r * th.sin(), z])
                })
                .collect()
        }
        _ => {
            return Err(Error::dim(
                "grid oracle implemented for ambient dimension 2 and 3",
            ))
        }
    };
    let best = points
        .par_iter()
        .map(|p| (p.clone(), score(p)))
        .reduce(
            || (DVector::zeros(n), f64::NEG_INFINITY),
            |a, b| if a.1 >= b.1 { a } else { b },
        );
    if subspaces.is_empty() {
        return Ok((best.0, f64::INFINITY));
    }
    Ok(best)
}

/// Sampled bi-Lipschitz constants of a zigzag map over a box, with the
/// pairs attaining each maximum.
#[derive(Debug, Clone)]
pub struct BilipEstimate {
    pub l_fwd: f64,
    pub l_inv: f64,
    pub fwd_pair: (Vector, Vector),
    pub inv_pair: (Vector, Vector),
    pub pairs: usize,
}

pub fn estimate_bilipschitz(
    map: &ZigzagMap,
    lo: &Vector,
    hi: &Vector,
    n_pairs: usize,
    seed: u64,
) -> Result<BilipEstimate> {
    let n = lo.len();
    let sample = |rng: &mut ChaCha8Rng| -> Vector {
        DVector::from_fn(n, |i, _| rng.gen_range(lo[i]..=hi[i]))
    };
    let chunks: Vec<usize> = (0..rayon::current_num_threads().max(1)).collect();
    let per = n_pairs / chunks.len().max(1) + 1;
    let results: Result<Vec<_>> = chunks
        .par_iter()
        .map(|&c| -> Result<(f64, (Vector, Vector), f64, (Vector, Vector))> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9e37));
            let mut best_f = (0.0, (DVector::zeros(n), DVector::zeros(n)));
            let mut best_i = (0.0, (DVector::zeros(n), DVector::zeros(n)));
            for _ in 0..per {
                let p = sample(&mut rng);
                let q = sample(&mut rng);
                let d = (&p - &q).norm();
                if d < 1e-11 {
                    continue;
                }
                let (fp, fq) = (map.apply(&p)?, map.apply(&q)?);
                let di = (&fp - &fq).norm();
                if di / d > best_f.0 {
                    best_f = (di / d, (p.clone(), q.clone()));
                }
                if di > 1e-11 && d / di > best_i.0 {
                    best_i = (d / di, (fp, fq));
                }
            }
            Ok((best_f.0, best_f.1, best_i.0, best_i.1))
        })
        .collect();
    let mut l_fwd = 0.0;
    let mut l_inv = 0.0;
    let mut fwd_pair = (DVector::zeros(n), DVector::zeros(n));
    let mut inv_pair = (DVector::zeros(n), DVector::zeros(n));
    for (lf, fp, li, ip) in results? {
        if lf > l_fwd {
            l_fwd = lf;
            fwd_pair = fp;
        }
        if li > l_inv {
            l_inv = li;
            inv_pair = ip;
        }
    }
    Ok(BilipEstimate {
        l_fwd,
        l_inv,
        fwd_pair,
        inv_pair,
        pairs: n_pairs,
    })
}

/// Per-sample verification that the image of a set lies on the floor
/// graphs, with per-branch secant slopes within the certified bound.
#[derive(Debug, Clone)]
pub struct CoverReport {
    pub samples: usize,
    pub off_graph: usize,
    pub worst_residual: f64,
    pub slope_violations: usize,
    pub worst_slope: f64,
    pub ok: bool,
}

pub fn check_graph_cover(
    map: &ZigzagMap,
    a: &PLSet,
    per_simplex: usize,
    residual_tol: f64,
    slope_bound: f64,
) -> Result<CoverReport> {
    let n = a.ambient_dim();
    let image = crate::flatten::flatten_set(map, a, per_simplex)?;
    let mut off_graph = 0usize;
    let mut worst_residual: f64 = 0.0;
    for (_, p) in &image {
        let x = DVector::from_fn(n - 1, |i, _| p[i]);
        let best = map
            .floors()
            .iter()
            .map(|f| (f.eval(&x) - p[n - 1]).abs())
            .fold(f64::INFINITY, f64::min);
        worst_residual = worst_residual.max(best);
        if best > residual_tol {
            off_graph += 1;
        }
    }
    // per-branch secant slopes
    let mut by_branch: std::collections::BTreeMap<usize, Vec<&Vector>> = Default::default();
    for (b, p) in &image {
        by_branch.entry(*b).or_default().push(p);
    }
    let mut slope_violations = 0usize;
    let mut worst_slope: f64 = 0.0;
    for pts in by_branch.values() {
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let dx = (0..n - 1)
                    .map(|c| (pts[i][c] - pts[j][c]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if dx < 1e-9 {
                    continue;
                }
                let slope = (pts[i][n - 1] - pts[j][n - 1]).abs() / dx;
                worst_slope = worst_slope.max(slope);
                if slope > slope_bound {
                    slope_violations += 1;
                }
            }
        }
    }
    Ok(CoverReport {
        samples: image.len(),
        off_graph,
        worst_residual,
        slope_violations,
        worst_slope,
        ok: off_graph == 0 && slope_violations == 0,
    })
}

/// Number of connected components of `{ q ∈ box : inside(q) }` on a
/// `res`-per-axis grid, by union-find over face-adjacent cells.
pub fn component_count(
    inside: &dyn Fn(&Vector) -> bool,
    lo: &Vector,
    hi: &Vector,
    res: usize,
) -> usize {
    let d = lo.len();
    let total: usize = res.pow(d as u32);
    let center = |idx: usize| -> Vector {
        let mut rem = idx;
        DVector::from_fn(d, |i, _| {
            let c = rem % res;
            rem /= res;
            lo[i] + (c as f64 + 0.5) * (hi[i] - lo[i]) / res as f64
        })
    };
    let active: Vec<bool> = (0..total).map(|i| inside(&center(i))).collect();
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
        let mut stride = 1usize;
        for _axis in 0..d {
            let c = rem % res;
            rem /= res;
            if c + 1 < res && active[i + stride] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, i + stride));
                if a != b {
                    parent[a] = b;
                }
            }
            stride *= res;
        }
    }
    let mut roots = std::collections::BTreeSet::new();
    for i in 0..total {
        if active[i] {
            let r = find(&mut parent, i);
            roots.insert(r);
        }
    }
    roots.len()
}

/// Sampled pointwise check that a function respects its certified
/// Lipschitz constant; returns the worst observed ratio.
pub fn sampled_lipschitz(
    f: &dyn Fn(&Vector) -> f64,
    d: usize,
    radius: f64,
    pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let p = DVector::from_fn(d, |_, _| rng.gen_range(-radius..=radius));
        let q = DVector::from_fn(d, |_, _| rng.gen_range(-radius..=radius));
        let dd = (&p - &q).norm();
        if dd < 1e-11 {
            continue;
        }
        worst = worst.max((f(&p) - f(&q)).abs() / dd);
    }
    worst
}

/// Low-discrepancy membership check of a set against a system: largest
/// distance from a sample of `a` to the nearest hypersurface fiber.
pub fn worst_membership_residual(
    s: &crate::system::RegularSystem,
    a: &PLSet,
    per_simplex: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, q) in pl::sample_set(a, per_simplex) {
        let mut best = f64::INFINITY;
        for e in s.entries() {
            best = best.min(e.hyp.residual(&q)?.abs());
        }
        worst = worst.max(best);
    }
    Ok(worst)
}
