use super::{unit_trace, Mandel, Tangent};
use crate::error::{Error, Result};

/// Isotropic constants with their plane-strain Lamé counterparts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    pub young: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ElasticParams {
    pub fn new(young: f64, poisson: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_engineering(young, poisson)?;
        Ok(Self { young, poisson, lambda, mu })
    }

    pub fn bulk_plane(&self) -> f64 {
        self.lambda + self.mu
    }
}

pub fn lame_from_engineering(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(Error::Material(format!("Young's modulus must be positive, got {young}")));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(Error::Material(format!("Poisson ratio must lie in (-1, 0.5), got {poisson}")));
    }
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    Ok((lambda, mu))
}

pub fn elastic_tangent(p: &ElasticParams) -> Tangent {
    let m = unit_trace();
    m * m.transpose() * p.lambda + Tangent::identity() * (2.0 * p.mu)
}

/// `σ = λ tr(ε) I + 2μ ε`, including the out-of-plane component.
pub fn elastic_stress(strain: &Mandel, p: &ElasticParams) -> Mandel {
    let tr = strain[0] + strain[1] + strain[2];
    strain * (2.0 * p.mu) + unit_trace() * (p.lambda * tr)
}
