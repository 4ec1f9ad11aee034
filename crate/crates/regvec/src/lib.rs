//! Regular vectors, regular systems of hypersurfaces, and bi-Lipschitz
//! flattening of piecewise-linear sets of empty interior.
//!
//! Given a finite union of simplices `A ⊂ R^n` with empty interior, the
//! library constructs a bi-Lipschitz homeomorphism `h : R^n → R^n` such that
//! `h(A)` is contained in a finite union of Lipschitz graphs over the
//! hyperplane `x_n = 0`, i.e. `e_n` is a regular vector of `h(A)`.  The map
//! comes with machine-checked Lipschitz certificates, and every analytic
//! claim is backed by an independent sampling oracle in [`oracle`].
//!
//! Module layout mirrors the pipeline:
//! * [`geom`] — directions, subspaces, angular metrics, sphere search;
//! * [`pl`] — simplices, PL sets, tangent direction sets, graph decompositions;
//! * [`lip`] — evaluable Lipschitz functions, McShane extension, hypersurfaces;
//! * [`system`] — regular systems of hypersurfaces and their validators;
//! * [`build`] — construction of a regular system adapted to a PL set;
//! * [`flatten`] — the zigzag homeomorphism and its certificates;
//! * [`oracle`] — brute-force verification oracles, independent of the above.

pub mod build;
pub mod config;
pub mod error;
pub mod flatten;
pub mod geom;
pub mod lip;
pub mod oracle;
pub mod pl;
pub mod system;

pub use build::build_system;
pub use config::Config;
pub use flatten::{build_flattening, flatten_set, Certificate, ZigzagMap};
pub use error::{Error, Result};
pub use geom::{angle, dist_to_subspace, Subspace, Vector};
pub use lip::{Hypersurface, LipFn};
pub use pl::{PLSet, Simplex};
pub use system::RegularSystem;
