//! Magnetic field at the atoms, RF resonance frequencies and the quadratic-rise fit
//! that recovers the vertical trap frequency.

use rayon::prelude::*;

use crate::constants::{PhysicalConstants, Species};
use crate::error::{Error, Result};
use crate::landscape::{characterize, LandscapeReport};
use crate::potential::TrapConfiguration;
use crate::regression::quadfit_vertex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfPoint {
    pub z0: f64,
    /// T.
    pub b_field: f64,
    /// Hz.
    pub rf_freq: f64,
    /// One-sigma uncertainty of `rf_freq`, Hz. Zero means unweighted.
    pub rf_uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFitResult {
    /// rad/s.
    pub omega_z: f64,
    /// T.
    pub b_offset: f64,
    /// Vertex position in z0, m.
    pub z_ref: f64,
    /// T.
    pub residual_rms: f64,
}

/// Field magnitude whose Zeeman energy equals the vertical magnetic potential at the
/// trap minimum: `b_offset + m w_z^2 (z_min - z0)^2 / (2 gF mF muB)`.
pub fn field_at_atoms(cfg: &TrapConfiguration, report: &LandscapeReport) -> Result<f64> {
    if !report.has_trap {
        return Err(Error::NoTrap);
    }
    let dz = report.z_min - cfg.magnet.z0;
    let curvature = field_curvature(cfg.magnet.omega_z, &cfg.species, &cfg.consts);
    Ok(cfg.magnet.b_offset + curvature * dz * dz)
}

/// `m w_z^2 / (2 gF mF muB)`, T/m^2.
fn field_curvature(omega_z: f64, species: &Species, consts: &PhysicalConstants) -> f64 {
    species.mass * omega_z * omega_z / (2.0 * species.trap_zeeman_factor() * consts.mu_b)
}

/// RF transition frequency `gF dmF muB B / h`, Hz.
pub fn rf_resonance(b_field: f64, species: &Species, consts: &PhysicalConstants) -> f64 {
    species.rf_zeeman_factor() * consts.mu_b * b_field / consts.h()
}

/// Inverse of [`rf_resonance`], T.
pub fn field_from_rf(freq: f64, species: &Species, consts: &PhysicalConstants) -> f64 {
    freq * consts.h() / (species.rf_zeeman_factor() * consts.mu_b)
}

/// Weighted parabola fit of `B(z0) = b_offset + m w_z^2 (z_ref - z0)^2 / (2 gF mF muB)`.
pub fn fit_quadratic_rise(
    points: &[RfPoint],
    species: &Species,
    consts: &PhysicalConstants,
) -> Result<QuadraticFitResult> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "quadratic rise fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.z0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.b_field).collect();
    let sigmas: Vec<f64> = points
        .iter()
        .map(|p| field_from_rf(p.rf_uncertainty, species, consts))
        .collect();
    let weights = if sigmas.iter().all(|&s| s == 0.0) {
        None
    } else if sigmas.iter().all(|&s| s > 0.0 && s.is_finite()) {
        Some(sigmas.iter().map(|s| 1.0 / (s * s)).collect::<Vec<_>>())
    } else {
        return Err(Error::OutOfRange(
            "rf uncertainties must be all positive or all zero".into(),
        ));
    };
    let fit = quadfit_vertex(&xs, &ys, weights.as_deref(), true)?;
    let (a, z_ref, b_offset) = (fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]);
    let omega_z = (2.0 * a * species.trap_zeeman_factor() * consts.mu_b / species.mass).sqrt();
    Ok(QuadraticFitResult {
        omega_z,
        b_offset,
        z_ref,
        residual_rms: fit.residual_rms,
    })
}

/// Field model of a fit evaluated at `z0`, T.
pub fn fitted_field(
    fit: &QuadraticFitResult,
    z0: f64,
    species: &Species,
    consts: &PhysicalConstants,
) -> f64 {
    let d = fit.z_ref - z0;
    fit.b_offset + field_curvature(fit.omega_z, species, consts) * d * d
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfMapRow {
    pub z0: f64,
    pub point: Result<RfPoint>,
}

/// Field and RF frequency at the atoms for each z0, evaluated in parallel and
/// returned in input order.
pub fn rf_map(cfg_base: &TrapConfiguration, z0_list: &[f64]) -> Vec<RfMapRow> {
    z0_list
        .par_iter()
        .map(|&z0| {
            let cfg = cfg_base.with_z0(z0);
            let point = characterize(&cfg).and_then(|r| field_at_atoms(&cfg, &r)).map(|b| RfPoint {
                z0,
                b_field: b,
                rf_freq: rf_resonance(b, &cfg.species, &cfg.consts),
                rf_uncertainty: 0.0,
            });
            RfMapRow { z0, point }
        })
        .collect()
}
