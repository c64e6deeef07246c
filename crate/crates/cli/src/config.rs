use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Finite-difference step of the Rumin operator in products.
    pub h: f64,
    /// Relative tolerance of fiber quadrature.
    pub quad_tol: f64,
    /// Relative tolerance of evaluations on bodies.
    pub tol_eval: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { h: 1e-3, quad_tol: 1e-8, tol_eval: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mc {
    pub samples: usize,
    pub batch: usize,
}

impl Default for Mc {
    fn default() -> Self {
        Self { samples: 100_000, batch: 1_000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub input: Option<String>,
    pub output: Option<String>,
    pub cache: Option<String>,
}

/// Everything a report depends on. Embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub mc: Mc,
    pub paths: Paths,
    /// Subcommand and its arguments.
    pub command: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 1, tolerances: Tolerances::default(), mc: Mc::default(), paths: Paths::default(), command: vec![] }
    }
}

impl RunConfig {
    /// One line of JSON with sorted keys.
    pub fn to_line(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }
}
