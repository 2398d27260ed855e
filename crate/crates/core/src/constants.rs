//! Physical constants, the Rb-87 species record and dielectric surface data.
//!
//! Every formula downstream pulls its constants from here. All values are SI.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Atomic mass unit in kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Relative atomic mass of Rb-87.
pub const RB87_MASS_U: f64 = 86.909_180_527;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Vacuum permittivity, F/m.
    pub eps0: f64,
    /// Boltzmann constant, J/K.
    pub kb: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Standard gravity, m/s^2.
    pub g_accel: f64,
}

impl PhysicalConstants {
    pub const CODATA2018: PhysicalConstants = PhysicalConstants {
        hbar: 1.054_571_817e-34,
        c: 299_792_458.0,
        eps0: 8.854_187_812_8e-12,
        kb: 1.380_649e-23,
        mu_b: 9.274_010_078_3e-24,
        g_accel: 9.806_65,
    };

    /// Planck constant h = 2*pi*hbar.
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// Energy in joules expressed in microkelvin (E / k_B * 1e6).
    pub fn joule_to_microkelvin(&self, energy: f64) -> f64 {
        energy / self.kb * 1e6
    }

    pub fn microkelvin_to_joule(&self, temperature: f64) -> f64 {
        temperature * 1e-6 * self.kb
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA2018
    }
}

/// Atomic species parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    /// Mass, kg.
    pub mass: f64,
    /// Static polarizability, F m^2.
    pub alpha0: f64,
    /// Natural linewidth of the excited state, rad/s.
    pub gamma: f64,
    /// D1 vacuum wavelength, m.
    pub lambda_d1: f64,
    /// D2 vacuum wavelength, m.
    pub lambda_d2: f64,
    /// s-wave scattering length, m.
    pub a_scatt: f64,
    /// Lande factor of the trapped hyperfine manifold.
    pub g_f: f64,
    /// Magnetic quantum number of the trapped state.
    pub m_f: i32,
    /// Change of m_F driven by the RF transition.
    pub delta_m_f: i32,
}

impl Species {
    /// Zeeman factor g_F * m_F of the trapped state (energy per mu_B per tesla).
    pub fn trap_zeeman_factor(&self) -> f64 {
        self.g_f * self.m_f as f64
    }

    /// Zeeman factor g_F * delta m_F of the RF transition.
    pub fn rf_zeeman_factor(&self) -> f64 {
        self.g_f * self.delta_m_f as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("alpha0", self.alpha0),
            ("gamma", self.gamma),
            ("lambda_d1", self.lambda_d1),
            ("lambda_d2", self.lambda_d2),
            ("a_scatt", self.a_scatt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("species.{name} must be > 0, got {v}")));
            }
        }
        if self.lambda_d1 <= self.lambda_d2 {
            return Err(Error::Validation(
                "species.lambda_d1 must exceed species.lambda_d2".into(),
            ));
        }
        if !self.g_f.is_finite() {
            return Err(Error::Validation("species.g_f must be finite".into()));
        }
        Ok(())
    }
}

/// The Rb-87 record: F=2 manifold, |F=2, m_F=2> trapped, delta m_F = 1 RF transition.
pub fn rb87_default() -> Species {
    Species {
        mass: RB87_MASS_U * ATOMIC_MASS_UNIT,
        alpha0: 5.26e-39,
        gamma: 2.0 * PI * 6.0e6,
        lambda_d1: 794.978_851_156e-9,
        lambda_d2: 780.241_209_686e-9,
        a_scatt: 5.31e-9,
        g_f: 0.5,
        m_f: 2,
        delta_m_f: 1,
    }
}

/// Dielectric substrate properties entering the surface potential and the optics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceMaterial {
    /// Optical refractive index at the evanescent-wave wavelength.
    pub n_index: f64,
    /// Static dielectric constant.
    pub eps_static: f64,
    /// Lifshitz correction factor for the retarded regime.
    pub phi_factor: f64,
    /// When set, replaces the computed C4 coefficient, J m^4.
    pub c4_override: Option<f64>,
}

/// The C4 coefficient quoted for the figure-reproduction presets, J m^4.
pub const C4_FIGURE_VALUE: f64 = 1.78e-55;

impl SurfaceMaterial {
    /// BK7-like glass with the computed C4.
    pub fn glass() -> Self {
        SurfaceMaterial {
            n_index: 1.5,
            eps_static: 2.25,
            phi_factor: 0.29,
            c4_override: None,
        }
    }

    /// Glass with the C4 coefficient pinned to the figure value.
    pub fn glass_figure_c4() -> Self {
        SurfaceMaterial {
            c4_override: Some(C4_FIGURE_VALUE),
            ..Self::glass()
        }
    }

    /// (eps - 1) / (eps + 1), the static image-charge reduction.
    pub fn dielectric_factor(&self) -> f64 {
        (self.eps_static - 1.0) / (self.eps_static + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_index > 1.0) {
            return Err(Error::Validation(format!(
                "surface.n_index must be > 1, got {}",
                self.n_index
            )));
        }
        if !(self.eps_static > 1.0) {
            return Err(Error::Validation(format!(
                "surface.eps_static must be > 1, got {}",
                self.eps_static
            )));
        }
        if !(self.phi_factor > 0.0 && self.phi_factor < 1.0) {
            return Err(Error::Validation(format!(
                "surface.phi_factor must lie in (0, 1), got {}",
                self.phi_factor
            )));
        }
        if let Some(c4) = self.c4_override {
            if !(c4.is_finite() && c4 >= 0.0) {
                return Err(Error::Validation(format!("surface.c4 must be >= 0, got {c4}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C4Source {
    Formula,
    Override,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C4Coefficient {
    /// J m^4.
    pub value: f64,
    pub source: C4Source,
}

/// Retarded Casimir-Polder coefficient of an atom facing a dielectric half-space:
///
/// C4 = 1/(4 pi eps0) * 3 hbar c alpha(0) / (8 pi) * (eps-1)/(eps+1) * Phi(eps)
///
/// The override on the surface record wins when present.
pub fn compute_c4(
    surface: &SurfaceMaterial,
    species: &Species,
    consts: &PhysicalConstants,
) -> C4Coefficient {
    if let Some(value) = surface.c4_override {
        return C4Coefficient {
            value,
            source: C4Source::Override,
        };
    }
    C4Coefficient {
        value: perfect_conductor_c4(species, consts)
            * surface.dielectric_factor()
            * surface.phi_factor,
        source: C4Source::Formula,
    }
}

/// First two factors of the C4 formula alone: the perfect-conductor limit with Phi = 1.
pub fn perfect_conductor_c4(species: &Species, consts: &PhysicalConstants) -> f64 {
    1.0 / (4.0 * PI * consts.eps0) * (3.0 * consts.hbar * consts.c * species.alpha0)
        / (8.0 * PI)
}
