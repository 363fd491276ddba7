//! JSON field descriptors.

use std::path::Path;

use earthquake_core::field::{CircleField, FieldError, Interp, PiecewiseAffine, Sampled, TrigPoly};
use earthquake_core::mink::MinkVec;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed field descriptor: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpSpec {
    Linear,
    None,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpecDocument {
    Killing {
        sigma: [f64; 3],
    },
    PiecewiseAffine {
        planes: Vec<[f64; 3]>,
        arc_bounds: Vec<f64>,
    },
    Trig {
        c0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Samples {
        theta: Vec<f64>,
        phi: Vec<f64>,
        interp: InterpSpec,
        #[serde(default)]
        atoms: Vec<usize>,
    },
}

impl FieldSpecDocument {
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, DescriptorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| DescriptorError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_field(&self) -> Result<CircleField, DescriptorError> {
        Ok(match self {
            FieldSpecDocument::Killing { sigma } => {
                if sigma.iter().any(|s| !s.is_finite()) {
                    return Err(FieldError::Invalid("non-finite Killing dual".into()).into());
                }
                CircleField::Killing(MinkVec::from_array(*sigma))
            }
            FieldSpecDocument::PiecewiseAffine { planes, arc_bounds } => {
                if planes.iter().flatten().any(|s| !s.is_finite()) {
                    return Err(FieldError::Invalid("non-finite plane coefficient".into()).into());
                }
                let planes = planes.iter().map(|p| MinkVec::from_array(*p)).collect();
                CircleField::PiecewiseAffine(PiecewiseAffine::new(planes, arc_bounds.clone())?)
            }
            FieldSpecDocument::Trig { c0, cos, sin } => CircleField::TrigPoly(TrigPoly::new(*c0, cos.clone(), sin.clone())?),
            FieldSpecDocument::Samples { theta, phi, interp, atoms } => {
                let interp = match interp {
                    InterpSpec::Linear => Interp::Linear,
                    InterpSpec::None => Interp::None,
                };
                CircleField::Sampled(Sampled::new(theta.clone(), phi.clone(), interp, atoms.clone())?)
            }
        })
    }
}
