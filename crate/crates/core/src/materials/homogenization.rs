use super::ElasticParams;
use crate::error::{Error, Result};

/// Second phase embedded in the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    Void,
    Solid(ElasticParams),
}

/// Mori–Tanaka estimate for aligned circular cylinders (plane strain) at
/// volume fraction `f`, using the plane bulk modulus `κ = λ + μ`.
pub fn mori_tanaka(matrix: &ElasticParams, inclusion: &Phase, f: f64) -> Result<ElasticParams> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::Material(format!("volume fraction must lie in [0, 1), got {f}")));
    }
    if f == 0.0 {
        return Ok(*matrix);
    }
    let (km, mm) = (matrix.bulk_plane(), matrix.mu);
    let (ki, mi) = match inclusion {
        Phase::Void => (0.0, 0.0),
        Phase::Solid(p) => (p.bulk_plane(), p.mu),
    };
    let kappa = km + f * (ki - km) * (km + mm) / (km + mm + (1.0 - f) * (ki - km));
    let eta = km * mm / (km + 2.0 * mm);
    let mu = mm + f * (mi - mm) * (mm + eta) / (mm + eta + (1.0 - f) * (mi - mm));
    let lambda = kappa - mu;
    let young = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
    let poisson = lambda / (2.0 * (lambda + mu));
    Ok(ElasticParams { young, poisson, lambda, mu })
}
