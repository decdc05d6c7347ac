//! Constitutive laws. Tensors are stored in Mandel form
//! `[xx, yy, zz, √2·xy]` so that double contractions become dot products.

mod elastic;
mod homogenization;
mod plasticity;

pub use elastic::{elastic_stress, elastic_tangent, lame_from_engineering, ElasticParams};
pub use homogenization::{mori_tanaka, Phase};
pub use plasticity::{radial_return, von_mises, InternalState, PlasticParams, StressResult};

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub type Mandel = Vector4<f64>;
pub type Tangent = Matrix4<f64>;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Mandel vector of an in-plane symmetric strain or stress.
pub fn mandel(xx: f64, yy: f64, zz: f64, xy: f64) -> Mandel {
    Mandel::new(xx, yy, zz, SQRT2 * xy)
}

/// Identity for the trace, `m = [1, 1, 1, 0]`.
pub fn unit_trace() -> Mandel {
    Mandel::new(1.0, 1.0, 1.0, 0.0)
}

/// Deviatoric projector in Mandel form.
pub fn deviatoric_projector() -> Tangent {
    let m = unit_trace();
    Tangent::identity() - m * m.transpose() / 3.0
}

/// Material block of one field: elastic constants and optional plasticity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plastic: Option<PlasticParams>,
}

impl Material {
    pub fn elastic(young: f64, poisson: f64) -> Self {
        Self { young, poisson, plastic: None }
    }

    pub fn params(&self) -> Result<ElasticParams> {
        ElasticParams::new(self.young, self.poisson)
    }

    /// Stress and tangent at one quadrature point.
    pub fn update(&self, strain: &Mandel, state: &InternalState) -> Result<StressResult> {
        let e = self.params()?;
        match &self.plastic {
            Some(p) => radial_return(strain, state, &e, p, 1.0),
            None => Ok(StressResult { stress: elastic_stress(strain, &e), tangent: elastic_tangent(&e), state: *state }),
        }
    }
}
