//! Serializable run reports and map dumps.  Reports embed the scene and
//! the settings so `verify` can re-run them standalone.

use crate::scene::SceneFile;
use regvec::Config;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Settings {
    pub eta: f64,
    pub alpha_lambda: f64,
    pub alpha_min: f64,
    pub mesh_res: usize,
    pub samples: usize,
    pub seed: u64,
    pub eps_eval: f64,
}

impl Settings {
    pub fn to_config(&self) -> Config {
        Config {
            eta: self.eta,
            alpha_lambda: self.alpha_lambda,
            alpha_min: self.alpha_min,
            mesh_res: self.mesh_res,
            samples: self.samples,
            seed: self.seed,
            eps_eval: self.eps_eval,
            ..Config::default()
        }
    }

    pub fn from_config(c: &Config) -> Self {
        Settings {
            eta: c.eta,
            alpha_lambda: c.alpha_lambda,
            alpha_min: c.alpha_min,
            mesh_res: c.mesh_res,
            samples: c.samples,
            seed: c.seed,
            eps_eval: c.eps_eval,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDump {
    pub l_fwd: f64,
    pub l_inv: f64,
    pub alpha_reg: f64,
    pub l_eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationDump {
    pub samples: usize,
    pub order_violations: usize,
    pub min_gap: f64,
    pub e_mismatches: usize,
    pub membership_violations: usize,
    pub membership_worst: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BilipDump {
    pub sampled_l_fwd: f64,
    pub sampled_l_inv: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverDump {
    pub samples: usize,
    pub off_graph: usize,
    pub worst_residual: f64,
    pub slope_violations: usize,
    pub worst_slope: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub build_ms: u128,
    pub flatten_ms: u128,
    pub verify_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlattenReport {
    pub scene: SceneFile,
    pub settings: Settings,
    pub hypersurfaces: usize,
    pub certificate: CertificateDump,
    pub validation: ValidationDump,
    pub bilipschitz: BilipDump,
    pub cover: CoverDump,
    pub round_trip_worst: f64,
    pub timings: Timings,
    pub ok: bool,
}

/// Evaluable dump of a built map: wall directions with their height
/// certificates, plus the floors tabulated on a regular grid (closures are
/// not serializable; the tabulation is what downstream tools consume).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub dimension: usize,
    pub certificate: CertificateDump,
    pub walls: Vec<WallDump>,
    pub floors: Vec<FloorDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WallDump {
    pub dir: Vec<f64>,
    pub height_lipschitz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloorDump {
    pub lipschitz: f64,
    /// Grid origin, one entry per base coordinate.
    pub origin: Vec<f64>,
    /// Grid step, one entry per base coordinate.
    pub step: Vec<f64>,
    /// Samples per axis.
    pub shape: Vec<usize>,
    /// Heights in row-major order.
    pub values: Vec<f64>,
}
