//! Sphere meshes and finite coverings of the unit sphere.
//!
//! The mesh starts from the boundary of the cross-polytope (all simplices
//! `[±e_{i_1}, …, ±e_{i_n}]` with one signed basis vector per coordinate)
//! with vertices pushed to the sphere, and refines until every simplex edge
//! is shorter than the requested chord.  Segments split in two, triangles
//! four ways through edge midpoints; higher-dimensional facets fall back to
//! longest-edge bisection, which is all the certified pipeline needs.

use super::Vector;
use crate::error::{Error, Result};
use nalgebra::DVector;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct SphereMesh {
    pub points: Vec<Vector>,
    /// Undirected adjacency coming from simplex edges.
    pub edges: Vec<(usize, usize)>,
}

impl SphereMesh {
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.points.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

struct MeshBuilder {
    vertices: Vec<Vector>,
    simplices: Vec<Vec<usize>>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl MeshBuilder {
    fn cross_polytope(n: usize) -> Self {
        let mut vertices = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            vertices.push(v.clone());
            v[i] = -1.0;
            vertices.push(v);
        }
        // facet = choice of sign per coordinate; vertex index of ±e_i is 2i (+) / 2i+1 (−)
        let mut simplices = Vec::with_capacity(1 << n);
        for signs in 0..(1u32 << n) {
            let f: Vec<usize> = (0..n)
                .map(|i| 2 * i + ((signs >> i) & 1) as usize)
                .collect();
            simplices.push(f);
        }
        MeshBuilder {
            vertices,
            simplices,
            midpoints: HashMap::new(),
        }
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let m = ((&self.vertices[a] + &self.vertices[b]) * 0.5).normalize();
        self.vertices.push(m);
        let idx = self.vertices.len() - 1;
        self.midpoints.insert(key, idx);
        idx
    }

    fn max_edge(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.simplices {
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    worst = worst.max((&self.vertices[s[i]] - &self.vertices[s[j]]).norm());
                }
            }
        }
        worst
    }

    fn refine_once(&mut self) {
        let old = std::mem::take(&mut self.simplices);
        for s in old {
            match s.len() {
                2 => {
                    let m = self.midpoint(s[0], s[1]);
                    self.simplices.push(vec![s[0], m]);
                    self.simplices.push(vec![m, s[1]]);
                }
                3 => {
                    let (a, b, c) = (s[0], s[1], s[2]);
                    let ab = self.midpoint(a, b);
                    let bc = self.midpoint(b, c);
                    let ca = self.midpoint(c, a);
                    self.simplices.push(vec![a, ab, ca]);
                    self.simplices.push(vec![b, bc, ab]);
                    self.simplices.push(vec![c, ca, bc]);
                    self.simplices.push(vec![ab, bc, ca]);
                }
                _ => {
                    // longest-edge bisection
                    let (mut bi, mut bj, mut best) = (0, 1, -1.0);
                    for i in 0..s.len() {
                        for j in i + 1..s.len() {
                            let d = (&self.vertices[s[i]] - &self.vertices[s[j]]).norm();
                            if d > best {
                                best = d;
                                bi = i;
                                bj = j;
                            }
                        }
                    }
                    let m = self.midpoint(s[bi], s[bj]);
                    let mut left = s.clone();
                    left[bi] = m;
                    let mut right = s;
                    right[bj] = m;
                    self.simplices.push(left);
                    self.simplices.push(right);
                }
            }
        }
    }

    fn into_mesh(self) -> SphereMesh {
        let mut edges = Vec::new();
        let mut seen = HashMap::new();
        for s in &self.simplices {
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    let key = (s[i].min(s[j]), s[i].max(s[j]));
                    if seen.insert(key, ()).is_none() {
                        edges.push(key);
                    }
                }
            }
        }
        SphereMesh {
            points: self.vertices,
            edges,
        }
    }
}

/// A mesh of `S^{n−1}` whose edges are all shorter than `max_edge` (chord
/// length).  `n == 1` gives the two points `±1` with no edges.
pub fn sphere_mesh(n: usize, max_edge: f64) -> Result<SphereMesh> {
    if n == 0 {
        return Err(Error::dim("sphere mesh needs ambient dimension >= 1"));
    }
    if n == 1 {
        return Ok(SphereMesh {
            points: vec![
                DVector::from_column_slice(&[1.0]),
                DVector::from_column_slice(&[-1.0]),
            ],
            edges: vec![],
        });
    }
    if !(max_edge > 0.0) {
        return Err(Error::contract("sphere mesh edge bound must be positive"));
    }
    let mut b = MeshBuilder::cross_polytope(n);
    let mut rounds = 0;
    while b.max_edge() > max_edge {
        b.refine_once();
        rounds += 1;
        if rounds > 40 || b.vertices.len() > 4_000_000 {
            return Err(Error::numeric("sphere mesh refinement did not terminate"));
        }
    }
    Ok(b.into_mesh())
}

#[derive(Debug, Clone)]
pub struct SphereCover {
    /// Every unit vector is within `radius` of some cover point.
    pub radius: f64,
    pub points: Vec<Vector>,
}

/// A finite set of unit vectors such that the balls `B(p, t/2)` cover the
/// sphere.  Refinement stops once every simplex edge is below `0.95·t/2`,
/// which keeps each spherical patch inside the ball of its nearest vertex;
/// the covering property is cross-checked by sampling in the test suite.
pub fn sphere_cover(n: usize, t: f64) -> Result<SphereCover> {
    if !(t > 0.0 && t <= 2.0) {
        return Err(Error::contract("cover parameter must lie in (0, 2]"));
    }
    let mesh = sphere_mesh(n, 0.95 * t / 2.0)?;
    Ok(SphereCover {
        radius: t / 2.0,
        points: mesh.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(n: usize, rng: &mut impl Rng) -> Vector {
        loop {
            let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr_standard()));
            if v.norm() > 1e-6 {
                return v.normalize();
            }
        }
    }

    // small local normal sampler to avoid an extra dependency
    fn rand_distr_standard() -> impl rand::distributions::Distribution<f64> {
        struct BoxMuller;
        impl rand::distributions::Distribution<f64> for BoxMuller {
            fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
                let u: f64 = rng.gen_range(1e-12..1.0);
                let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u.ln()).sqrt() * v.cos()
            }
        }
        BoxMuller
    }

    #[test]
    fn circle_cover_at_t2_has_at_most_eight_points() {
        let c = sphere_cover(2, 2.0).unwrap();
        assert!(c.points.len() <= 8, "got {} points", c.points.len());
    }

    #[test]
    fn covers_are_validated_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, t) in [(2, 0.5), (2, 0.2), (3, 0.5), (3, 0.3)] {
            let c = sphere_cover(n, t).unwrap();
            for _ in 0..100_000 {
                let x = random_unit(n, &mut rng);
                let d = c
                    .points
                    .iter()
                    .map(|p| (p - &x).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    d <= c.radius + 1e-12,
                    "uncovered point at distance {d} (radius {})",
                    c.radius
                );
            }
        }
    }

    #[test]
    fn mesh_points_are_unit_and_edges_connect() {
        let m = sphere_mesh(3, 0.4).unwrap();
        for p in &m.points {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
        // connectivity: BFS from 0 reaches everything
        let adj = m.neighbors();
        let mut seen = vec![false; m.points.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
