//! JSON body descriptions.

use serde::{Deserialize, Serialize};

use super::planar::PlanarBody;
use super::spherical::SphericalBody;
use crate::error::{Error, Result};

/// Body as written in input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodySpec {
    Polygon { vertices: Vec<[f64; 2]> },
    Disk { center: [f64; 2], radius: f64 },
    Spolygon { vertices: Vec<[f64; 3]> },
    Cap { center: [f64; 3], radius: f64 },
    Sphere {},
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Planar(PlanarBody),
    Spherical(SphericalBody),
}

impl BodySpec {
    pub fn build(&self) -> Result<Body> {
        Ok(match self {
            BodySpec::Polygon { vertices } => Body::Planar(PlanarBody::polygon(vertices)?),
            BodySpec::Disk { center, radius } => Body::Planar(PlanarBody::disk(*center, *radius)?),
            BodySpec::Spolygon { vertices } => Body::Spherical(SphericalBody::polygon(vertices)?),
            BodySpec::Cap { center, radius } => Body::Spherical(SphericalBody::cap(*center, *radius)?),
            BodySpec::Sphere {} => Body::Spherical(SphericalBody::Sphere),
        })
    }
}

pub fn parse_body(json: &str) -> Result<Body> {
    let spec: BodySpec = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    spec.build()
}

/// A single body or a JSON array of bodies.
pub fn parse_bodies(json: &str) -> Result<Vec<Body>> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    let specs: Vec<BodySpec> = if value.is_array() {
        serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        vec![serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?]
    };
    specs.iter().map(BodySpec::build).collect()
}
