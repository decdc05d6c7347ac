use serde::{Deserialize, Serialize};

use super::{deviatoric_projector, elastic_stress, elastic_tangent, ElasticParams, Mandel, Tangent};
use crate::error::{Error, Result};

/// von Mises parameters with linear isotropic and kinematic hardening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlasticParams {
    pub yield_stress: f64,
    #[serde(default)]
    pub hardening: f64,
    #[serde(default)]
    pub kinematic: f64,
}

impl PlasticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.yield_stress > 0.0) || !(self.hardening >= 0.0) || !(self.kinematic >= 0.0) {
            return Err(Error::Material(format!("invalid plastic parameters {self:?}")));
        }
        Ok(())
    }
}

/// History variables at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InternalState {
    pub eps_p: Mandel,
    pub back_stress: Mandel,
    /// Cumulative plastic strain.
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressResult {
    pub stress: Mandel,
    pub tangent: Tangent,
    pub state: InternalState,
}

/// `√(3/2 ξ:ξ)` of the relative deviatoric stress `ξ = dev σ − q`.
pub fn von_mises(stress: &Mandel, back_stress: &Mandel) -> f64 {
    let xi = deviatoric_projector() * stress - back_stress;
    (1.5 * xi.dot(&xi)).sqrt()
}

/// Implicit Euler update of the von Mises model. The flow direction is the
/// unit relative deviator `N` and the cumulative strain grows with the
/// multiplier itself, so that with `ξ = dev σ − q`
/// `Δλ = f_tr / (√(3/2)(2μ + H̄) + Ĥ)`. The model is rate independent and
/// `dt` only scales the multiplier.
pub fn radial_return(
    strain: &Mandel,
    state: &InternalState,
    elastic: &ElasticParams,
    plastic: &PlasticParams,
    dt: f64,
) -> Result<StressResult> {
    if !(dt > 0.0) {
        return Err(Error::Material(format!("time increment must be positive, got {dt}")));
    }
    if !(state.p >= 0.0) || state.eps_p.iter().chain(state.back_stress.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Material(format!("invalid internal state {state:?}")));
    }
    if strain.iter().any(|v| !v.is_finite()) {
        return Err(Error::Material("non-finite strain".into()));
    }
    plastic.validate()?;
    let c = elastic_tangent(elastic);
    let trial = elastic_stress(&(strain - state.eps_p), elastic);
    let dev = deviatoric_projector();
    let xi = dev * trial - state.back_stress;
    let norm = xi.norm();
    let s32 = 1.5f64.sqrt();
    let radius = plastic.yield_stress + plastic.hardening * state.p;
    let f_trial = s32 * norm - radius;
    if f_trial <= 1e-12 * plastic.yield_stress {
        return Ok(StressResult { stress: trial, tangent: c, state: *state });
    }
    let two_mu = 2.0 * elastic.mu;
    let n = xi / norm;
    let den = s32 * (two_mu + plastic.kinematic) + plastic.hardening;
    let dl = f_trial / den;
    let stress = trial - n * (two_mu * dl);
    let nn = n * n.transpose();
    let tangent = c - nn * (two_mu * two_mu * s32 / den) - (dev - nn) * (two_mu * two_mu * dl / norm);
    let new_state = InternalState {
        eps_p: state.eps_p + n * dl,
        back_stress: state.back_stress + n * (plastic.kinematic * dl),
        p: state.p + dl,
    };
    Ok(StressResult { stress, tangent, state: new_state })
}
