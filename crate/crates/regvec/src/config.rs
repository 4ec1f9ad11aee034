//! Numeric tolerances and resolution knobs shared across the pipeline.

/// Tolerance and resolution settings.  `Default` gives the values the
/// certification suite is tuned for; the CLI exposes the interesting ones.
#[derive(Debug, Clone)]
pub struct Config {
    /// Degeneracy threshold for linear algebra (rank decisions, affine
    /// independence, direction dedup).
    pub eps_geom: f64,
    /// Absolute tolerance for iterative function evaluation (McShane
    /// minimization, root brackets).
    pub eps_eval: f64,
    /// Membership band: a point is "on" a hypersurface when its vertical
    /// residual is below this.
    pub eps_mem: f64,
    /// Angular budget of the construction: every direction used by the
    /// builder stays within `eta` of the target vector.
    pub eta: f64,
    /// Regularity floor below which a candidate direction is rejected on the
    /// sphere-mesh connectivity check.
    pub alpha_lambda: f64,
    /// Hard floor for any regularity margin accepted by the builder.
    pub alpha_min: f64,
    /// Vertices of the sphere mesh used for connected-component reasoning on
    /// direction regions.
    pub mesh_res: usize,
    /// Samples per validation check.
    pub samples: usize,
    /// Scan resolution for clipping a simplex against a slab.
    pub clip_scan: usize,
    /// Cap on the number of hypersurfaces in a built system.
    pub max_entries: usize,
    /// RNG seed for every sampled check.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            eps_geom: 1e-12,
            eps_eval: 1e-9,
            eps_mem: 1e-8,
            eta: 0.25,
            alpha_lambda: 0.01,
            alpha_min: 0.005,
            mesh_res: 512,
            samples: 10_000,
            clip_scan: 256,
            max_entries: 10_000,
            seed: 0x5eed_0001,
        }
    }
}

/// Slope bound for a graph seen along a direction with regularity margin
/// `alpha`: a unit tangent at distance `alpha` from the direction makes a
/// graph of slope at most `sqrt(1 - alpha^2) / alpha`.
pub fn slope_bound(alpha: f64) -> f64 {
    if alpha >= 1.0 {
        0.0
    } else if alpha <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 - alpha * alpha).sqrt() / alpha
    }
}
