//! Scene files: a JSON list of simplices with an ambient dimension.

use nalgebra::DVector;
use regvec::{Error, PLSet, Result, Simplex};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub dimension: usize,
    /// Each simplex is a list of vertices, each vertex a list of coordinates.
    pub simplices: Vec<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl SceneFile {
    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
    }

    pub fn to_set(&self) -> Result<PLSet> {
        let mut sims = Vec::with_capacity(self.simplices.len());
        for (i, verts) in self.simplices.iter().enumerate() {
            let vs: Vec<DVector<f64>> = verts
                .iter()
                .map(|v| {
                    if v.len() != self.dimension {
                        Err(Error::dim(format!(
                            "simplex {i}: vertex has {} coordinates, expected {}",
                            v.len(),
                            self.dimension
                        )))
                    } else {
                        Ok(DVector::from_column_slice(v))
                    }
                })
                .collect::<Result<_>>()?;
            sims.push(Simplex::new(self.dimension, vs)?);
        }
        PLSet::new(self.dimension, sims)
    }

    pub fn from_set(name: &str, a: &PLSet) -> Self {
        SceneFile {
            dimension: a.ambient_dim(),
            simplices: a
                .simplices()
                .iter()
                .map(|s| {
                    s.vertices()
                        .iter()
                        .map(|v| v.iter().cloned().collect())
                        .collect()
                })
                .collect(),
            name: Some(name.to_string()),
            metadata: None,
        }
    }
}
