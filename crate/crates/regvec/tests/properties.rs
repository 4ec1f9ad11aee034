//! Randomized invariants of the geometric primitives, checked against
//! independent formulations wherever a closed form exists.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regvec::config::slope_bound;
use regvec::geom::{self, angle_sym, fiber_tangent, unit};
use regvec::lip::{order_statistics, regraph};
use regvec::pl::graph_decompose;
use regvec::{dist_to_subspace, LipFn, PLSet, Simplex, Subspace, Vector};

fn v(parts: &[f64]) -> Vector {
    DVector::from_column_slice(parts)
}

fn unit3(a: f64, b: f64, c: f64) -> Option<Vector> {
    let w = v(&[a, b, c]);
    (w.norm() > 1e-6).then(|| w.normalize())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // d(λ, T) is the norm of the component of λ orthogonal to T
    #[test]
    fn subspace_distance_matches_projection_residual(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
        p in -1.0f64..1.0, q in -1.0f64..1.0, r in -1.0f64..1.0,
    ) {
        let (Some(lam), Some(t)) = (unit3(a, b, c), unit3(p, q, r)) else {
            return Ok(());
        };
        let sub = Subspace::span(3, &[t]).unwrap();
        let d = dist_to_subspace(&lam, &sub).unwrap();
        let resid = (&lam - sub.project(&lam)).norm();
        prop_assert!((d - resid).abs() < 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
    }

    // the symmetric gap between equal-dimensional subspaces is symmetric,
    // zero on the diagonal, and bounded by 1
    #[test]
    fn subspace_gap_is_a_symmetric_premetric(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
        p in -1.0f64..1.0, q in -1.0f64..1.0, r in -1.0f64..1.0,
    ) {
        let (Some(u), Some(w)) = (unit3(a, b, c), unit3(p, q, r)) else {
            return Ok(());
        };
        let pu = Subspace::span(3, &[u]).unwrap();
        let pw = Subspace::span(3, &[w]).unwrap();
        let d_uw = angle_sym(&pu, &pw).unwrap();
        let d_wu = angle_sym(&pw, &pu).unwrap();
        prop_assert!((d_uw - d_wu).abs() < 1e-9);
        prop_assert!(angle_sym(&pu, &pu).unwrap() < 1e-9);
        prop_assert!(d_uw <= 1.0 + 1e-12);
    }

    // a strictly lower-dimensional target is at gap exactly 1
    #[test]
    fn gap_to_a_smaller_subspace_is_one(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
    ) {
        let Some(u) = unit3(a, b, c) else { return Ok(()) };
        let e1 = v(&[1.0, 0.0, 0.0]);
        let e2 = v(&[0.0, 1.0, 0.0]);
        let plane = Subspace::span(3, &[e1, e2]).unwrap();
        let line = Subspace::span(3, &[u]).unwrap();
        prop_assert!((regvec::angle(&plane, &line).unwrap() - 1.0).abs() < 1e-12);
    }

    // order statistics sort pointwise and keep the largest certificate
    #[test]
    fn order_statistics_sort_pointwise(
        h1 in -2.0f64..2.0, h2 in -2.0f64..2.0, h3 in -2.0f64..2.0,
        s1 in -0.9f64..0.9, s2 in -0.9f64..0.9, s3 in -0.9f64..0.9,
        x in -3.0f64..3.0,
    ) {
        let mk = |h: f64, s: f64| {
            LipFn::affine(1, DVector::zeros(1), h, v(&[s])).unwrap()
        };
        let sorted = order_statistics(vec![mk(h1, s1), mk(h2, s2), mk(h3, s3)]).unwrap();
        let p = v(&[x]);
        let mut vals = [
            h1 + s1 * x,
            h2 + s2 * x,
            h3 + s3 * x,
        ];
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (f, want) in sorted.iter().zip(vals) {
            prop_assert!((f.eval(&p) - want).abs() < 1e-9);
            prop_assert!(f.l_cert() >= s1.abs().max(s2.abs()).max(s3.abs()) - 1e-12);
        }
    }

    // the fiber tangent at a point of T is at least as close to T as μ is
    #[test]
    fn fiber_tangent_dominates_direction_distance(
        ma in -1.0f64..1.0, mb in -1.0f64..1.0, mc in -1.0f64..1.0,
        pa in -1.0f64..1.0, pb in -1.0f64..1.0,
        qa in -1.0f64..1.0, qb in -1.0f64..1.0, qc in -1.0f64..1.0,
        xa in -1.0f64..1.0, xb in -1.0f64..1.0,
    ) {
        let (Some(mu), Some(t1)) = (unit3(ma, mb, mc), unit3(qa, qb, qc)) else {
            return Ok(());
        };
        let t2 = v(&[pa, pb, 1.0]);
        let Ok(t) = Subspace::span(3, &[t1, t2]) else { return Ok(()) };
        if t.dim() != 2 {
            return Ok(());
        }
        // x on the plane and on the sphere, not parallel to μ
        let seed = v(&[xa, xb]);
        if seed.norm() < 1e-3 {
            return Ok(());
        }
        let x = (t.frame() * seed).normalize();
        if (1.0 - x.dot(&mu).abs()) < 1e-6 {
            return Ok(());
        }
        let tangent = fiber_tangent(&mu, &x).unwrap();
        let d_mu = dist_to_subspace(&mu, &t).unwrap();
        let d_tan = dist_to_subspace(&tangent, &t).unwrap();
        prop_assert!(
            d_mu <= d_tan + 1e-9,
            "mu at {d_mu:.6}, fiber tangent at {d_tan:.6}"
        );
    }

    // regraphing an affine graph leaves its point set unchanged
    #[test]
    fn regraph_preserves_the_affine_graph(
        slope in -0.4f64..0.4,
        height in -2.0f64..2.0,
        tilt in -0.3f64..0.3,
        x in -3.0f64..3.0,
    ) {
        let h = regvec::Hypersurface::new(
            v(&[0.0, 1.0]),
            LipFn::affine(1, DVector::zeros(1), height, v(&[slope])).unwrap(),
        )
        .unwrap();
        let nd = unit(&v(&[tilt, 1.0])).unwrap();
        let margin = 0.5;
        let g = regraph(&h, &nd, margin).unwrap();
        // a point of the old graph has zero residual for the new graph
        let q = v(&[x, height + slope * x]);
        prop_assert!(g.residual(&q).unwrap().abs() < 1e-8);
        prop_assert!(g.height().l_cert() <= slope_bound(margin) + 1e-12);
    }
}

// McShane extension: agrees on the domain, globally L-Lipschitz on samples
#[test]
fn mcshane_extension_is_sound_on_random_v_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for case in 0..40 {
        let apex_x: f64 = rng.gen_range(-0.5..0.5);
        let apex_y: f64 = rng.gen_range(-0.5..0.5);
        let sl: f64 = rng.gen_range(0.2..0.9);
        let sr: f64 = rng.gen_range(0.2..0.9);
        let a = PLSet::new(
            2,
            vec![
                Simplex::new(2, vec![v(&[apex_x - 1.0, apex_y + sl]), v(&[apex_x, apex_y])])
                    .unwrap(),
                Simplex::new(2, vec![v(&[apex_x, apex_y]), v(&[apex_x + 1.0, apex_y + sr])])
                    .unwrap(),
            ],
        )
        .unwrap();
        let lam = v(&[0.0, 1.0]);
        let pieces = graph_decompose(&a, &lam, 0.5).unwrap();
        let slope = sl.max(sr);
        let f = LipFn::mcshane(1, pieces, slope + 1e-9).unwrap();
        // domain agreement
        for _ in 0..50 {
            let t: f64 = rng.gen_range(-1.0..1.0);
            let want = apex_y + if t < 0.0 { -t * sl } else { t * sr };
            let got = f.eval(&v(&[apex_x + t]));
            assert!(
                (got - want).abs() < 1e-8,
                "case {case}: at {t} got {got} want {want}"
            );
        }
        // Lipschitz bound on random pairs, including points off the domain
        for _ in 0..50 {
            let p = v(&[rng.gen_range(-4.0..4.0)]);
            let q = v(&[rng.gen_range(-4.0..4.0)]);
            let lhs = (f.eval(&p) - f.eval(&q)).abs();
            assert!(lhs <= (slope + 1e-9) * (&p - &q).norm() + 1e-9, "case {case}");
        }
    }
}

// the certified best direction is within tolerance of a dense grid search
#[test]
fn direction_search_matches_grid_on_random_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for case in 0..20 {
        let m = rng.gen_range(1..=4);
        let subs: Vec<Subspace> = (0..m)
            .map(|_| {
                let w = loop {
                    let c = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0f64));
                    if c.norm() > 1e-3 {
                        break c;
                    }
                };
                Subspace::span(2, &[w]).unwrap()
            })
            .collect();
        let (_, got) = geom::max_min_direction(2, &subs).unwrap();
        let (_, want) = regvec::oracle::grid_sphere_argmax(2, &subs, 4000).unwrap();
        assert!(
            got >= want - 0.05,
            "case {case}: search {got:.4} vs grid {want:.4}"
        );
    }
}
