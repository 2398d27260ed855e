//! The four contributions to the trapping potential and their sum.
//!
//! Coordinates: `z` is the distance from the prism surface into vacuum, `x` and `y`
//! are transverse and centred on the evanescent-wave spot. Energies are in joules.

use std::f64::consts::PI;

use crate::constants::{compute_c4, rb87_default, PhysicalConstants, Species, SurfaceMaterial};
use crate::error::{Error, Result};

/// Distance below which the surface potential is not evaluated, m.
pub const Z_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Te,
    Tm,
}

/// How the two fine-structure detunings combine into the single detuning of the
/// dipole-potential formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningModel {
    /// Arithmetic mean of the D1 and D2 angular detunings.
    Mean,
    /// 1/delta = (2/3)/delta_D2 + (1/3)/delta_D1.
    LineStrengthWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvanescentBeam {
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Incident power, W.
    pub power: f64,
    /// Angle of incidence inside the prism, rad.
    pub angle: f64,
    /// 1/e^2 intensity radii of the spot on the surface, m.
    pub waist_x: f64,
    pub waist_y: f64,
    pub polarization: Polarization,
    /// Replaces the Fresnel intensity enhancement when set.
    pub enhancement_override: Option<f64>,
    pub detuning_model: DetuningModel,
}

impl EvanescentBeam {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("beam.wavelength", self.wavelength, self.wavelength > 0.0),
            ("beam.power", self.power, self.power >= 0.0),
            ("beam.waist_x", self.waist_x, self.waist_x > 0.0),
            ("beam.waist_y", self.waist_y, self.waist_y > 0.0),
            ("beam.angle", self.angle, self.angle > 0.0 && self.angle <= PI / 2.0),
        ];
        for (name, v, ok) in checks {
            if !(ok && v.is_finite()) {
                return Err(Error::Validation(format!("{name} out of range: {v}")));
            }
        }
        if let Some(t) = self.enhancement_override {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Validation(format!("beam.enhancement must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticTrap {
    /// Angular trap frequencies, rad/s.
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    /// Position of the field minimum; negative values lie behind the surface, m.
    pub z0: f64,
    /// Field magnitude at the minimum, T.
    pub b_offset: f64,
}

impl MagneticTrap {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("magnet.omega_x", self.omega_x),
            ("magnet.omega_y", self.omega_y),
            ("magnet.omega_z", self.omega_z),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!("{name} must be > 0, got {w}")));
            }
        }
        if !self.z0.is_finite() {
            return Err(Error::Validation("magnet.z0 must be finite".into()));
        }
        if !(self.b_offset.is_finite() && self.b_offset >= 0.0) {
            return Err(Error::Validation("magnet.b_offset must be >= 0".into()));
        }
        Ok(())
    }

    /// Geometric mean trap frequency.
    pub fn omega_bar(&self) -> f64 {
        (self.omega_x * self.omega_y * self.omega_z).cbrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub const fn on_axis(z: f64) -> Self {
        Point3 { x: 0.0, y: 0.0, z }
    }
}

/// Everything that defines one potential landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfiguration {
    pub consts: PhysicalConstants,
    pub species: Species,
    pub surface: SurfaceMaterial,
    pub beam: EvanescentBeam,
    pub magnet: MagneticTrap,
    /// +1 or -1; the gravitational energy is `gravity_sign * m * g * z`.
    pub gravity_sign: i8,
    pub ew_enabled: bool,
    pub cp_enabled: bool,
    pub magnet_enabled: bool,
    pub gravity_enabled: bool,
    pub z_floor: f64,
}

impl TrapConfiguration {
    /// Rb-87 above glass with the beam and trap of the figure simulations, field
    /// minimum at the surface.
    pub fn figure_defaults() -> Self {
        TrapConfiguration {
            consts: PhysicalConstants::CODATA2018,
            species: rb87_default(),
            surface: SurfaceMaterial::glass_figure_c4(),
            beam: EvanescentBeam {
                wavelength: 765e-9,
                power: 0.5,
                angle: 47.5f64.to_radians(),
                waist_x: 170e-6,
                waist_y: 240e-6,
                polarization: Polarization::Te,
                enhancement_override: None,
                detuning_model: DetuningModel::Mean,
            },
            magnet: MagneticTrap {
                omega_x: 2.0 * PI * 25.0,
                omega_y: 2.0 * PI * 200.0,
                omega_z: 2.0 * PI * 200.0,
                z0: 0.0,
                b_offset: 1e-4,
            },
            gravity_sign: -1,
            ew_enabled: true,
            cp_enabled: true,
            magnet_enabled: true,
            gravity_enabled: true,
            z_floor: Z_FLOOR,
        }
    }

    pub fn with_z0(&self, z0: f64) -> Self {
        let mut c = self.clone();
        c.magnet.z0 = z0;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.surface.validate()?;
        self.beam.validate()?;
        self.magnet.validate()?;
        if self.gravity_sign != 1 && self.gravity_sign != -1 {
            return Err(Error::Validation(format!(
                "gravity_sign must be +1 or -1, got {}",
                self.gravity_sign
            )));
        }
        if !(self.z_floor.is_finite() && self.z_floor > 0.0) {
            return Err(Error::Validation("z_floor must be > 0".into()));
        }
        Ok(())
    }

    /// Gravitational sag g / omega_z^2 of the harmonic minimum, m.
    pub fn gravitational_sag(&self) -> f64 {
        -(self.gravity_sign as f64) * self.consts.g_accel / self.magnet.omega_z.powi(2)
    }
}

/// Penetration depth of the evanescent field, (k sqrt(n^2 sin^2 theta - 1))^-1.
pub fn penetration_depth(beam: &EvanescentBeam, surface: &SurfaceMaterial) -> Result<f64> {
    let n_sin = surface.n_index * beam.angle.sin();
    if n_sin <= 1.0 {
        return Err(Error::SubcriticalAngle { n_sin_theta: n_sin });
    }
    let k = 2.0 * PI / beam.wavelength;
    Ok(1.0 / (k * (n_sin * n_sin - 1.0).sqrt()))
}

/// Angular detunings (D1, D2) of the beam, positive for blue detuning.
pub fn line_detunings(
    beam: &EvanescentBeam,
    species: &Species,
    consts: &PhysicalConstants,
) -> Result<(f64, f64)> {
    let detuning = |line: f64| {
        let dk = 1.0 / beam.wavelength - 1.0 / line;
        if dk.abs() <= 1e-12 / beam.wavelength {
            Err(Error::ZeroDetuning)
        } else {
            Ok(2.0 * PI * consts.c * dk)
        }
    };
    Ok((detuning(species.lambda_d1)?, detuning(species.lambda_d2)?))
}

/// Arithmetic mean of the D1 and D2 angular detunings, rad/s.
pub fn mean_detuning(
    beam: &EvanescentBeam,
    species: &Species,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let (d1, d2) = line_detunings(beam, species, consts)?;
    Ok(0.5 * (d1 + d2))
}

/// The detuning selected by the beam's detuning model, rad/s.
pub fn effective_detuning(
    beam: &EvanescentBeam,
    species: &Species,
    consts: &PhysicalConstants,
) -> Result<f64> {
    match beam.detuning_model {
        DetuningModel::Mean => mean_detuning(beam, species, consts),
        DetuningModel::LineStrengthWeighted => {
            let (d1, d2) = line_detunings(beam, species, consts)?;
            let inv = 2.0 / 3.0 / d2 + 1.0 / 3.0 / d1;
            if inv == 0.0 {
                return Err(Error::ZeroDetuning);
            }
            Ok(1.0 / inv)
        }
    }
}

/// Intensity enhancement of the evanescent field at the surface relative to the
/// incident beam, from the Fresnel transmission under total internal reflection.
pub fn enhancement_factor(beam: &EvanescentBeam, surface: &SurfaceMaterial) -> Result<f64> {
    let n = surface.n_index;
    let (s, c) = beam.angle.sin_cos();
    if n * s <= 1.0 {
        return Err(Error::SubcriticalAngle { n_sin_theta: n * s });
    }
    if let Some(t) = beam.enhancement_override {
        return Ok(t);
    }
    let n2 = n * n;
    let s2 = s * s;
    let te = 4.0 * n2 * c * c / (n2 - 1.0);
    Ok(match beam.polarization {
        Polarization::Te => te,
        Polarization::Tm => te * (2.0 * n2 * s2 - 1.0) / ((n2 + 1.0) * s2 - 1.0),
    })
}

/// Peak evanescent intensity at the surface, T * 2P / (pi w_x w_y), W/m^2.
pub fn peak_intensity(beam: &EvanescentBeam, surface: &SurfaceMaterial) -> Result<f64> {
    let t = enhancement_factor(beam, surface)?;
    Ok(t * 2.0 * beam.power / (PI * beam.waist_x * beam.waist_y))
}

/// Dipole potential at the surface, U0 = pi c^2 Gamma / (2 omega^3) * I_ev / delta.
/// Negative for red detuning.
pub fn dipole_u0(
    beam: &EvanescentBeam,
    species: &Species,
    surface: &SurfaceMaterial,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let intensity = peak_intensity(beam, surface)?;
    let delta = effective_detuning(beam, species, consts)?;
    let omega = 2.0 * PI * consts.c / beam.wavelength;
    Ok(PI * consts.c * consts.c * species.gamma / (2.0 * omega.powi(3)) * intensity / delta)
}

/// Retarded Casimir-Polder potential -C4 / z^4.
pub fn u_cp(z: f64, c4: f64) -> Result<f64> {
    if !(z >= Z_FLOOR) {
        return Err(Error::Domain { z, floor: Z_FLOOR });
    }
    Ok(-c4 / z.powi(4))
}

pub fn u_ew(p: Point3, cfg: &TrapConfiguration) -> Result<f64> {
    if !(p.z >= 0.0) {
        return Err(Error::Domain { z: p.z, floor: 0.0 });
    }
    if !cfg.ew_enabled {
        return Ok(0.0);
    }
    Ok(TrapPotential::new(cfg)?.u_ew(p))
}

pub fn u_magnetic(p: Point3, cfg: &TrapConfiguration) -> f64 {
    let m = &cfg.magnet;
    let dz = p.z - m.z0;
    0.5 * cfg.species.mass
        * (m.omega_x * m.omega_x * p.x * p.x
            + m.omega_y * m.omega_y * p.y * p.y
            + m.omega_z * m.omega_z * dz * dz)
}

pub fn u_gravity(z: f64, cfg: &TrapConfiguration) -> f64 {
    cfg.gravity_sign as f64 * cfg.species.mass * cfg.consts.g_accel * z
}

pub fn u_total(p: Point3, cfg: &TrapConfiguration) -> Result<f64> {
    TrapPotential::new(cfg)?.total(p)
}

/// Individual contributions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerms {
    pub cp: f64,
    pub ew: f64,
    pub magnetic: f64,
    pub gravity: f64,
}

impl PotentialTerms {
    pub fn total(&self) -> f64 {
        self.cp + self.ew + self.magnetic + self.gravity
    }
}

/// A configuration with its derived beam and surface quantities resolved, for
/// repeated evaluation.
#[derive(Debug, Clone)]
pub struct TrapPotential {
    cfg: TrapConfiguration,
    c4: f64,
    u0: f64,
    inv_lambda_p: f64,
    lambda_p: f64,
    k_x: f64,
    k_y: f64,
    k_z: f64,
    gravity_force: f64,
}

impl TrapPotential {
    pub fn new(cfg: &TrapConfiguration) -> Result<Self> {
        cfg.validate()?;
        let c4 = if cfg.cp_enabled {
            compute_c4(&cfg.surface, &cfg.species, &cfg.consts).value
        } else {
            0.0
        };
        let (u0, lambda_p) = if cfg.ew_enabled {
            (
                dipole_u0(&cfg.beam, &cfg.species, &cfg.surface, &cfg.consts)?,
                penetration_depth(&cfg.beam, &cfg.surface)?,
            )
        } else {
            (0.0, f64::INFINITY)
        };
        let m = cfg.species.mass;
        let (k_x, k_y, k_z) = if cfg.magnet_enabled {
            (
                m * cfg.magnet.omega_x.powi(2),
                m * cfg.magnet.omega_y.powi(2),
                m * cfg.magnet.omega_z.powi(2),
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        let gravity_force = if cfg.gravity_enabled {
            cfg.gravity_sign as f64 * m * cfg.consts.g_accel
        } else {
            0.0
        };
        Ok(TrapPotential {
            cfg: cfg.clone(),
            c4,
            u0,
            inv_lambda_p: 1.0 / lambda_p,
            lambda_p,
            k_x,
            k_y,
            k_z,
            gravity_force,
        })
    }

    pub fn config(&self) -> &TrapConfiguration {
        &self.cfg
    }

    pub fn c4(&self) -> f64 {
        self.c4
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// Infinite when the evanescent wave is off.
    pub fn penetration_depth(&self) -> f64 {
        self.lambda_p
    }

    pub fn z_floor(&self) -> f64 {
        self.cfg.z_floor
    }

    pub fn mass(&self) -> f64 {
        self.cfg.species.mass
    }

    #[inline]
    fn ew_transverse(&self, x: f64, y: f64) -> f64 {
        let wx = self.cfg.beam.waist_x;
        let wy = self.cfg.beam.waist_y;
        -2.0 * x * x / (wx * wx) - 2.0 * y * y / (wy * wy)
    }

    #[inline]
    pub fn u_ew(&self, p: Point3) -> f64 {
        if self.u0 == 0.0 {
            return 0.0;
        }
        self.u0 * (-p.z * self.inv_lambda_p + self.ew_transverse(p.x, p.y)).exp()
    }

    /// Terms at `p` without the floor check.
    #[inline]
    pub fn terms_unchecked(&self, p: Point3) -> PotentialTerms {
        let dz = p.z - self.cfg.magnet.z0;
        PotentialTerms {
            cp: -self.c4 / (p.z * p.z * p.z * p.z),
            ew: self.u_ew(p),
            magnetic: 0.5 * (self.k_x * p.x * p.x + self.k_y * p.y * p.y + self.k_z * dz * dz),
            gravity: self.gravity_force * p.z,
        }
    }

    pub fn terms(&self, p: Point3) -> Result<PotentialTerms> {
        self.check(p.z)?;
        Ok(self.terms_unchecked(p))
    }

    #[inline]
    fn check(&self, z: f64) -> Result<()> {
        if !(z >= self.cfg.z_floor) {
            return Err(Error::Domain {
                z,
                floor: self.cfg.z_floor,
            });
        }
        Ok(())
    }

    pub fn total(&self, p: Point3) -> Result<f64> {
        self.check(p.z)?;
        Ok(self.eval(p))
    }

    /// Total potential without the floor check; callers keep `z >= z_floor`.
    #[inline]
    pub fn eval(&self, p: Point3) -> f64 {
        self.terms_unchecked(p).total()
    }

    #[inline]
    pub fn on_axis(&self, z: f64) -> f64 {
        self.eval(Point3::on_axis(z))
    }

    /// Analytic gradient of the total potential, N.
    pub fn gradient(&self, p: Point3) -> Result<[f64; 3]> {
        self.check(p.z)?;
        let ew = self.u_ew(p);
        let wx = self.cfg.beam.waist_x;
        let wy = self.cfg.beam.waist_y;
        let gx = -4.0 * p.x / (wx * wx) * ew + self.k_x * p.x;
        let gy = -4.0 * p.y / (wy * wy) * ew + self.k_y * p.y;
        let gz = 4.0 * self.c4 / p.z.powi(5) - ew * self.inv_lambda_p
            + self.k_z * (p.z - self.cfg.magnet.z0)
            + self.gravity_force;
        Ok([gx, gy, gz])
    }

    /// Diagonal of the Hessian on the axis (x = y = 0), J/m^2.
    pub fn hessian_diag_on_axis(&self, z: f64) -> Result<[f64; 3]> {
        self.check(z)?;
        let ew = self.u_ew(Point3::on_axis(z));
        let wx = self.cfg.beam.waist_x;
        let wy = self.cfg.beam.waist_y;
        Ok([
            self.k_x - 4.0 * ew / (wx * wx),
            self.k_y - 4.0 * ew / (wy * wy),
            self.k_z - 20.0 * self.c4 / z.powi(6) + ew * self.inv_lambda_p * self.inv_lambda_p,
        ])
    }
}
