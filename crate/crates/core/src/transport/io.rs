//! Map definition files (TOML or JSON).
//!
//! ```toml
//! schema_version = 1
//! dimension = 2
//!
//! [[components]]
//! kind = "bernstein"
//! degrees = [5]                 # density degree in z_1
//! coefficients = [1.8, 0.2, ...] # 6 values
//!
//! [[components]]
//! kind = "bernstein"
//! degrees = [8, 2]              # degree in z_1, density degree in z_2
//! coefficients = [...]          # 9 × 3 values, row-major, last axis fastest
//! ```
//!
//! `kind = "affine"` components take `weights` (one per input) and `offset`.
//! All maps read from files act on the unit cube.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bernstein::BernsteinComponent;
use super::map::{AffineComponent, Component, TriangularMap};
use crate::{Error, Result};

pub const MAP_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ComponentSpec {
    Bernstein {
        degrees: Vec<usize>,
        coefficients: Vec<f64>,
    },
    Affine {
        weights: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub schema_version: u32,
    pub dimension: usize,
    pub components: Vec<ComponentSpec>,
}

impl MapFile {
    pub fn build(&self) -> Result<TriangularMap> {
        if self.schema_version != MAP_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported map schema_version {}",
                self.schema_version
            )));
        }
        if self.components.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: self.components.len(),
            });
        }
        let components = self
            .components
            .iter()
            .map(|c| match c {
                ComponentSpec::Bernstein { degrees, coefficients } => Ok(Component::Bernstein(
                    BernsteinComponent::new(degrees.clone(), coefficients.clone())?,
                )),
                ComponentSpec::Affine { weights, offset } => {
                    Ok(Component::Affine(AffineComponent::new(weights.clone(), *offset)?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        TriangularMap::new(components)
    }

    /// Serializable description of an explicit map.
    pub fn from_map(map: &TriangularMap) -> Result<Self> {
        let components = map
            .components()
            .ok_or_else(|| Error::Format("only explicit maps can be written to a file".into()))?
            .iter()
            .map(|c| match c {
                Component::Bernstein(b) => ComponentSpec::Bernstein {
                    degrees: b.degrees().to_vec(),
                    coefficients: b.coefficients().to_vec(),
                },
                Component::Affine(a) => ComponentSpec::Affine {
                    weights: a.weights().to_vec(),
                    offset: a.offset(),
                },
            })
            .collect();
        Ok(MapFile {
            schema_version: MAP_SCHEMA_VERSION,
            dimension: map.dim(),
            components,
        })
    }

    pub fn parse(text: &str, json: bool) -> Result<Self> {
        if json {
            Ok(serde_json::from_str(text)?)
        } else {
            toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }
}

pub(crate) fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads and builds a map from a `.toml` or `.json` file.
pub fn load_map(path: &Path) -> Result<TriangularMap> {
    let text = std::fs::read_to_string(path)?;
    MapFile::parse(&text, is_json(path))?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
schema_version = 1
dimension = 2

[[components]]
kind = "affine"
weights = [1.0]

[[components]]
kind = "affine"
weights = [0.5, 0.5]
"#;

    #[test]
    fn parses_toml_and_json() {
        let m = MapFile::parse(LINEAR, false).unwrap().build().unwrap();
        assert_eq!(m.forward(&[0.2, 0.4]).unwrap(), vec![0.2, 0.30000000000000004]);
        let json = serde_json::to_string(&MapFile::parse(LINEAR, false).unwrap()).unwrap();
        let back = MapFile::parse(&json, true).unwrap();
        assert_eq!(back, MapFile::parse(LINEAR, false).unwrap());
    }

    #[test]
    fn bad_schema_and_dimension_fail() {
        let bumped = LINEAR.replace("schema_version = 1", "schema_version = 9");
        assert!(MapFile::parse(&bumped, false).unwrap().build().is_err());
        let wrong = LINEAR.replace("dimension = 2", "dimension = 3");
        assert!(MapFile::parse(&wrong, false).unwrap().build().is_err());
    }
}
