//! Scenario files: a flat, sectioned `key = value` format.
//!
//! ```text
//! # comment
//! preset = paper-fig2        # optional, must precede the first section
//! [beam]
//! power = 0.5                # W
//! angle_deg = 47.5
//! [sweep]
//! z0_range = -40e-6, 40e-6, 2e-6
//! ```
//!
//! Lengths are in metres, angles in degrees, powers in watts and frequencies in Hz.
//! Omitted keys keep the preset value; unknown sections or keys are rejected.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::constants::{PhysicalConstants, Species, SurfaceMaterial};
use crate::dynamics::{RampShape, RampSpec};
use crate::error::{Error, Result};
use crate::potential::{
    DetuningModel, EvanescentBeam, MagneticTrap, Polarization, TrapConfiguration,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSection {
    pub n_index: f64,
    pub eps_static: f64,
    pub phi_factor: f64,
    /// `None` computes C4 from the formula.
    pub c4: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSection {
    /// kg.
    pub mass: f64,
    pub alpha0: f64,
    /// Natural linewidth, Hz.
    pub gamma_hz: f64,
    pub lambda_d1: f64,
    pub lambda_d2: f64,
    pub a_scatt: f64,
    pub g_f: f64,
    pub m_f: i32,
    pub delta_m_f: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSection {
    pub wavelength: f64,
    pub power: f64,
    pub angle_deg: f64,
    pub waist_x: f64,
    pub waist_y: f64,
    pub polarization: Polarization,
    /// `None` uses the Fresnel enhancement.
    pub enhancement: Option<f64>,
    pub detuning: DetuningModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnetSection {
    pub freq_x: f64,
    pub freq_y: f64,
    pub freq_z: f64,
    pub z0: f64,
    pub b_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub gravity_sign: i8,
    pub ew_enabled: bool,
    pub cp_enabled: bool,
    pub magnet_enabled: bool,
    pub gravity_enabled: bool,
    pub z_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub z0_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutSection {
    pub z_start: f64,
    pub z_stop: f64,
    pub points: usize,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSection {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_start: f64,
    pub z_stop: f64,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondensateSection {
    pub n_atoms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopySection {
    /// Uncertainty assigned to every RF point, Hz.
    pub rf_uncertainty: f64,
    /// Largest z0 entering the quadratic fit; `None` uses the regime threshold.
    pub fit_max_z0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RampSection {
    pub z0_start: f64,
    pub z0_end: f64,
    pub tau: f64,
    pub hold: f64,
    pub return_time: f64,
    pub shape: RampShape,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSection {
    /// Hz; `None` uses the vertical trap frequency.
    pub attempt_rate: Option<f64>,
}

/// A complete scenario in user units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: String,
    pub surface: SurfaceSection,
    pub species: SpeciesSection,
    pub beam: BeamSection,
    pub magnet: MagnetSection,
    pub model: ModelSection,
    pub sweep: SweepSection,
    pub cut: CutSection,
    pub map: MapSection,
    pub condensate: CondensateSection,
    pub spectroscopy: SpectroscopySection,
    pub ramp: RampSection,
    pub loss: LossSection,
}

pub const PRESETS: [&str; 4] = [
    "paper-fig2",
    "paper-fig4-sweep",
    "paper-fig5-loss",
    "paper-fig5-loss-no-ew",
];

fn um_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as i64;
    (0..=n).map(|i| (start + step * i as f64) * 1e-6).collect()
}

impl ScenarioConfig {
    /// Looks up a shipped preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::fig2();
        let cfg = match name {
            "paper-fig2" => base,
            "paper-fig4-sweep" => ScenarioConfig {
                preset: name.into(),
                sweep: SweepSection {
                    z0_list: um_range(-40.0, 40.0, 2.0),
                },
                ..base
            },
            "paper-fig5-loss" | "paper-fig5-loss-no-ew" => {
                let mut c = ScenarioConfig {
                    preset: name.into(),
                    sweep: SweepSection {
                        z0_list: um_range(10.0, -40.0, -2.0),
                    },
                    ..base
                };
                c.model.ew_enabled = name == "paper-fig5-loss";
                c
            }
            other => {
                return Err(Error::Validation(format!(
                    "unknown preset '{other}' (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    fn fig2() -> Self {
        let d = TrapConfiguration::figure_defaults();
        ScenarioConfig {
            preset: "paper-fig2".into(),
            surface: SurfaceSection {
                n_index: d.surface.n_index,
                eps_static: d.surface.eps_static,
                phi_factor: d.surface.phi_factor,
                c4: d.surface.c4_override,
            },
            species: SpeciesSection {
                mass: d.species.mass,
                alpha0: d.species.alpha0,
                gamma_hz: 6.0e6,
                lambda_d1: d.species.lambda_d1,
                lambda_d2: d.species.lambda_d2,
                a_scatt: d.species.a_scatt,
                g_f: d.species.g_f,
                m_f: d.species.m_f,
                delta_m_f: d.species.delta_m_f,
            },
            beam: BeamSection {
                wavelength: d.beam.wavelength,
                power: d.beam.power,
                angle_deg: 47.5,
                waist_x: d.beam.waist_x,
                waist_y: d.beam.waist_y,
                polarization: d.beam.polarization,
                enhancement: Some(4.0),
                detuning: d.beam.detuning_model,
            },
            magnet: MagnetSection {
                freq_x: 25.0,
                freq_y: 200.0,
                freq_z: 200.0,
                z0: -15e-6,
                b_offset: d.magnet.b_offset,
            },
            model: ModelSection {
                gravity_sign: d.gravity_sign,
                ew_enabled: true,
                cp_enabled: true,
                magnet_enabled: true,
                gravity_enabled: true,
                z_floor: d.z_floor,
            },
            sweep: SweepSection {
                z0_list: vec![-15e-6, -10e-6, -5e-6, 0.0],
            },
            cut: CutSection {
                z_start: 1e-9,
                z_stop: 10e-6,
                points: 400,
                x: 0.0,
            },
            map: MapSection {
                x_min: -150e-6,
                x_max: 150e-6,
                nx: 61,
                z_start: 50e-9,
                z_stop: 3e-6,
                nz: 60,
            },
            condensate: CondensateSection { n_atoms: 1e5 },
            spectroscopy: SpectroscopySection {
                rf_uncertainty: 0.0,
                fit_max_z0: None,
            },
            ramp: RampSection {
                z0_start: 34e-6,
                z0_end: -20e-6,
                tau: 0.2,
                hold: 0.0,
                return_time: 0.1,
                shape: RampShape::MonotoneHalfPeriod,
                points: 301,
            },
            loss: LossSection { attempt_rate: None },
        }
    }

    /// Physics configuration with angles and frequencies converted to SI.
    pub fn trap_configuration(&self) -> TrapConfiguration {
        let tau = 2.0 * PI;
        TrapConfiguration {
            consts: PhysicalConstants::CODATA2018,
            species: Species {
                mass: self.species.mass,
                alpha0: self.species.alpha0,
                gamma: tau * self.species.gamma_hz,
                lambda_d1: self.species.lambda_d1,
                lambda_d2: self.species.lambda_d2,
                a_scatt: self.species.a_scatt,
                g_f: self.species.g_f,
                m_f: self.species.m_f,
                delta_m_f: self.species.delta_m_f,
            },
            surface: SurfaceMaterial {
                n_index: self.surface.n_index,
                eps_static: self.surface.eps_static,
                phi_factor: self.surface.phi_factor,
                c4_override: self.surface.c4,
            },
            beam: EvanescentBeam {
                wavelength: self.beam.wavelength,
                power: self.beam.power,
                angle: self.beam.angle_deg.to_radians(),
                waist_x: self.beam.waist_x,
                waist_y: self.beam.waist_y,
                polarization: self.beam.polarization,
                enhancement_override: self.beam.enhancement,
                detuning_model: self.beam.detuning,
            },
            magnet: MagneticTrap {
                omega_x: tau * self.magnet.freq_x,
                omega_y: tau * self.magnet.freq_y,
                omega_z: tau * self.magnet.freq_z,
                z0: self.magnet.z0,
                b_offset: self.magnet.b_offset,
            },
            gravity_sign: self.model.gravity_sign,
            ew_enabled: self.model.ew_enabled,
            cp_enabled: self.model.cp_enabled,
            magnet_enabled: self.model.magnet_enabled,
            gravity_enabled: self.model.gravity_enabled,
            z_floor: self.model.z_floor,
        }
    }

    pub fn ramp_spec(&self) -> RampSpec {
        RampSpec {
            z0_start: self.ramp.z0_start,
            z0_end: self.ramp.z0_end,
            tau: self.ramp.tau,
            hold: self.ramp.hold,
            return_time: self.ramp.return_time,
            shape: self.ramp.shape,
        }
    }

    /// Checks every physical and structural invariant.
    pub fn validate(&self) -> Result<()> {
        let trap = self.trap_configuration();
        trap.validate()?;
        if self.model.ew_enabled {
            crate::potential::penetration_depth(&trap.beam, &trap.surface).map_err(|e| {
                Error::Validation(format!("beam.angle_deg = {}: {e}", self.beam.angle_deg))
            })?;
        }
        self.ramp_spec().validate()?;
        let z0 = &self.sweep.z0_list;
        if z0.is_empty() {
            return Err(Error::Validation("sweep.z0_list must not be empty".into()));
        }
        if z0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("sweep.z0_list must be finite".into()));
        }
        let asc = z0.windows(2).all(|w| w[0] < w[1]);
        let desc = z0.windows(2).all(|w| w[0] > w[1]);
        if !(asc || desc) {
            return Err(Error::Validation("sweep.z0_list must be strictly sorted".into()));
        }
        let floor = self.model.z_floor;
        let windows = [
            ("cut", self.cut.z_start, self.cut.z_stop),
            ("map", self.map.z_start, self.map.z_stop),
        ];
        for (name, a, b) in windows {
            if !(a >= floor && b > a && b.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name}.z_start/z_stop must satisfy z_floor <= start < stop"
                )));
            }
        }
        if !(self.map.x_max > self.map.x_min) {
            return Err(Error::Validation("map.x_min must be < map.x_max".into()));
        }
        if !self.cut.x.is_finite() {
            return Err(Error::Validation("cut.x must be finite".into()));
        }
        for (name, n) in [
            ("cut.points", self.cut.points),
            ("map.nx", self.map.nx),
            ("map.nz", self.map.nz),
            ("ramp.points", self.ramp.points),
        ] {
            if n < 2 {
                return Err(Error::Validation(format!("{name} must be >= 2")));
            }
        }
        if !(self.condensate.n_atoms >= 0.0 && self.condensate.n_atoms.is_finite()) {
            return Err(Error::Validation("condensate.n_atoms must be >= 0".into()));
        }
        if !(self.spectroscopy.rf_uncertainty >= 0.0) {
            return Err(Error::Validation("spectroscopy.rf_uncertainty must be >= 0".into()));
        }
        if let Some(r) = self.loss.attempt_rate {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Validation("loss.attempt_rate must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Sets one key. The error string is a bare message; callers add the location.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match (section, key) {
            ("surface", "n_index") => self.surface.n_index = num(v)?,
            ("surface", "eps_static") => self.surface.eps_static = num(v)?,
            ("surface", "phi_factor") => self.surface.phi_factor = num(v)?,
            ("surface", "c4") => self.surface.c4 = opt_num(v, "formula")?,
            ("species", "mass") => self.species.mass = num(v)?,
            ("species", "alpha0") => self.species.alpha0 = num(v)?,
            ("species", "gamma_hz") => self.species.gamma_hz = num(v)?,
            ("species", "lambda_d1") => self.species.lambda_d1 = num(v)?,
            ("species", "lambda_d2") => self.species.lambda_d2 = num(v)?,
            ("species", "a_scatt") => self.species.a_scatt = num(v)?,
            ("species", "g_f") => self.species.g_f = num(v)?,
            ("species", "m_f") => self.species.m_f = int(v)?,
            ("species", "delta_m_f") => self.species.delta_m_f = int(v)?,
            ("beam", "wavelength") => self.beam.wavelength = num(v)?,
            ("beam", "power") => self.beam.power = num(v)?,
            ("beam", "angle_deg") => self.beam.angle_deg = num(v)?,
            ("beam", "waist_x") => self.beam.waist_x = num(v)?,
            ("beam", "waist_y") => self.beam.waist_y = num(v)?,
            ("beam", "polarization") => {
                self.beam.polarization = match v {
                    "te" => Polarization::Te,
                    "tm" => Polarization::Tm,
                    _ => return Err(format!("expected te or tm, got '{v}'")),
                }
            }
            ("beam", "enhancement") => self.beam.enhancement = opt_num(v, "fresnel")?,
            ("beam", "detuning") => {
                self.beam.detuning = match v {
                    "mean" => DetuningModel::Mean,
                    "weighted" => DetuningModel::LineStrengthWeighted,
                    _ => return Err(format!("expected mean or weighted, got '{v}'")),
                }
            }
            ("magnet", "freq_x") => self.magnet.freq_x = num(v)?,
            ("magnet", "freq_y") => self.magnet.freq_y = num(v)?,
            ("magnet", "freq_z") => self.magnet.freq_z = num(v)?,
            ("magnet", "z0") => self.magnet.z0 = num(v)?,
            ("magnet", "b_offset") => self.magnet.b_offset = num(v)?,
            ("model", "gravity_sign") => {
                self.model.gravity_sign = match int(v)? {
                    1 => 1,
                    -1 => -1,
                    other => return Err(format!("gravity_sign must be 1 or -1, got {other}")),
                }
            }
            ("model", "ew_enabled") => self.model.ew_enabled = boolean(v)?,
            ("model", "cp_enabled") => self.model.cp_enabled = boolean(v)?,
            ("model", "magnet_enabled") => self.model.magnet_enabled = boolean(v)?,
            ("model", "gravity_enabled") => self.model.gravity_enabled = boolean(v)?,
            ("model", "z_floor") => self.model.z_floor = num(v)?,
            ("sweep", "z0_list") => {
                self.sweep.z0_list = v.split(',').map(num).collect::<std::result::Result<_, _>>()?
            }
            ("sweep", "z0_range") => {
                let parts: Vec<f64> = v.split(',').map(num).collect::<std::result::Result<_, _>>()?;
                let [start, stop, step] = parts[..] else {
                    return Err("z0_range expects start, stop, step".into());
                };
                let span = (stop - start) / step;
                if !(step != 0.0 && span >= 0.0 && span.is_finite() && span < 1e6) {
                    return Err("z0_range step must point from start towards stop".into());
                }
                let n = span.round() as i64;
                self.sweep.z0_list = (0..=n).map(|i| start + step * i as f64).collect();
            }
            ("cut", "z_start") => self.cut.z_start = num(v)?,
            ("cut", "z_stop") => self.cut.z_stop = num(v)?,
            ("cut", "points") => self.cut.points = count(v)?,
            ("cut", "x") => self.cut.x = num(v)?,
            ("map", "x_min") => self.map.x_min = num(v)?,
            ("map", "x_max") => self.map.x_max = num(v)?,
            ("map", "nx") => self.map.nx = count(v)?,
            ("map", "z_start") => self.map.z_start = num(v)?,
            ("map", "z_stop") => self.map.z_stop = num(v)?,
            ("map", "nz") => self.map.nz = count(v)?,
            ("condensate", "n_atoms") => self.condensate.n_atoms = num(v)?,
            ("spectroscopy", "rf_uncertainty") => self.spectroscopy.rf_uncertainty = num(v)?,
            ("spectroscopy", "fit_max_z0") => self.spectroscopy.fit_max_z0 = opt_num(v, "auto")?,
            ("ramp", "z0_start") => self.ramp.z0_start = num(v)?,
            ("ramp", "z0_end") => self.ramp.z0_end = num(v)?,
            ("ramp", "tau") => self.ramp.tau = num(v)?,
            ("ramp", "hold") => self.ramp.hold = num(v)?,
            ("ramp", "return_time") => self.ramp.return_time = num(v)?,
            ("ramp", "shape") => {
                self.ramp.shape = match v {
                    "monotone" => RampShape::MonotoneHalfPeriod,
                    "paper" => RampShape::PaperSinSquared,
                    _ => return Err(format!("expected monotone or paper, got '{v}'")),
                }
            }
            ("ramp", "points") => self.ramp.points = count(v)?,
            ("loss", "attempt_rate") => self.loss.attempt_rate = opt_num(v, "auto")?,
            _ => return Err(format!("unknown key '{section}.{key}'")),
        }
        Ok(())
    }

    /// Canonical text form; loading it reproduces `self` exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let f = |v: f64| format!("{v:?}");
        let o = |v: Option<f64>, none: &str| v.map_or(none.to_string(), |x| format!("{x:?}"));
        let _ = writeln!(s, "preset = {}", self.preset);
        let mut sec = |name: &str, kv: Vec<(&str, String)>| {
            let _ = writeln!(s, "\n[{name}]");
            for (k, v) in kv {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        sec(
            "surface",
            vec![
                ("n_index", f(self.surface.n_index)),
                ("eps_static", f(self.surface.eps_static)),
                ("phi_factor", f(self.surface.phi_factor)),
                ("c4", o(self.surface.c4, "formula")),
            ],
        );
        sec(
            "species",
            vec![
                ("mass", f(self.species.mass)),
                ("alpha0", f(self.species.alpha0)),
                ("gamma_hz", f(self.species.gamma_hz)),
                ("lambda_d1", f(self.species.lambda_d1)),
                ("lambda_d2", f(self.species.lambda_d2)),
                ("a_scatt", f(self.species.a_scatt)),
                ("g_f", f(self.species.g_f)),
                ("m_f", self.species.m_f.to_string()),
                ("delta_m_f", self.species.delta_m_f.to_string()),
            ],
        );
        sec(
            "beam",
            vec![
                ("wavelength", f(self.beam.wavelength)),
                ("power", f(self.beam.power)),
                ("angle_deg", f(self.beam.angle_deg)),
                ("waist_x", f(self.beam.waist_x)),
                ("waist_y", f(self.beam.waist_y)),
                (
                    "polarization",
                    match self.beam.polarization {
                        Polarization::Te => "te".into(),
                        Polarization::Tm => "tm".into(),
                    },
                ),
                ("enhancement", o(self.beam.enhancement, "fresnel")),
                (
                    "detuning",
                    match self.beam.detuning {
                        DetuningModel::Mean => "mean".into(),
                        DetuningModel::LineStrengthWeighted => "weighted".into(),
                    },
                ),
            ],
        );
        sec(
            "magnet",
            vec![
                ("freq_x", f(self.magnet.freq_x)),
                ("freq_y", f(self.magnet.freq_y)),
                ("freq_z", f(self.magnet.freq_z)),
                ("z0", f(self.magnet.z0)),
                ("b_offset", f(self.magnet.b_offset)),
            ],
        );
        sec(
            "model",
            vec![
                ("gravity_sign", self.model.gravity_sign.to_string()),
                ("ew_enabled", self.model.ew_enabled.to_string()),
                ("cp_enabled", self.model.cp_enabled.to_string()),
                ("magnet_enabled", self.model.magnet_enabled.to_string()),
                ("gravity_enabled", self.model.gravity_enabled.to_string()),
                ("z_floor", f(self.model.z_floor)),
            ],
        );
        sec(
            "sweep",
            vec![(
                "z0_list",
                self.sweep.z0_list.iter().map(|v| f(*v)).collect::<Vec<_>>().join(", "),
            )],
        );
        sec(
            "cut",
            vec![
                ("z_start", f(self.cut.z_start)),
                ("z_stop", f(self.cut.z_stop)),
                ("points", self.cut.points.to_string()),
                ("x", f(self.cut.x)),
            ],
        );
        sec(
            "map",
            vec![
                ("x_min", f(self.map.x_min)),
                ("x_max", f(self.map.x_max)),
                ("nx", self.map.nx.to_string()),
                ("z_start", f(self.map.z_start)),
                ("z_stop", f(self.map.z_stop)),
                ("nz", self.map.nz.to_string()),
            ],
        );
        sec("condensate", vec![("n_atoms", f(self.condensate.n_atoms))]);
        sec(
            "spectroscopy",
            vec![
                ("rf_uncertainty", f(self.spectroscopy.rf_uncertainty)),
                ("fit_max_z0", o(self.spectroscopy.fit_max_z0, "auto")),
            ],
        );
        sec(
            "ramp",
            vec![
                ("z0_start", f(self.ramp.z0_start)),
                ("z0_end", f(self.ramp.z0_end)),
                ("tau", f(self.ramp.tau)),
                ("hold", f(self.ramp.hold)),
                ("return_time", f(self.ramp.return_time)),
                (
                    "shape",
                    match self.ramp.shape {
                        RampShape::MonotoneHalfPeriod => "monotone".into(),
                        RampShape::PaperSinSquared => "paper".into(),
                    },
                ),
                ("points", self.ramp.points.to_string()),
            ],
        );
        sec("loss", vec![("attempt_rate", o(self.loss.attempt_rate, "auto"))]);
        s
    }
}

fn num(v: &str) -> std::result::Result<f64, String> {
    let v = v.trim();
    v.parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| format!("expected a number, got '{v}'"))
}

fn opt_num(v: &str, none: &str) -> std::result::Result<Option<f64>, String> {
    if v == none {
        Ok(None)
    } else {
        num(v).map(Some).map_err(|e| format!("{e} or '{none}'"))
    }
}

fn int(v: &str) -> std::result::Result<i32, String> {
    v.parse::<i32>().map_err(|_| format!("expected an integer, got '{v}'"))
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got '{v}'"))
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

/// One `key = value` assignment with its source line.
#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn parse_entries(text: &str) -> Result<(Option<(usize, String)>, Vec<Entry>)> {
    let mut preset = None;
    let mut section: Option<String> = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed section header '{content}'"),
            })?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key".into(),
            });
        }
        match &section {
            None if key == "preset" => {
                if preset.is_some() {
                    return Err(Error::Parse {
                        line,
                        message: "preset given twice".into(),
                    });
                }
                preset = Some((line, value));
            }
            None => {
                return Err(Error::Parse {
                    line,
                    message: format!("key '{key}' outside any section"),
                })
            }
            Some(s) => entries.push(Entry {
                line,
                section: s.clone(),
                key,
                value,
            }),
        }
    }
    Ok((preset, entries))
}

/// Parses scenario text; `preset_override` replaces the file's `preset` line and
/// `sets` (`section.key=value`) are applied last.
pub fn parse_config(text: &str, preset_override: Option<&str>, sets: &[String]) -> Result<ScenarioConfig> {
    let (preset, entries) = parse_entries(text)?;
    let mut cfg = match (preset_override, &preset) {
        (Some(p), _) => ScenarioConfig::preset(p)?,
        (None, Some((line, p))) => ScenarioConfig::preset(p).map_err(|e| Error::Parse {
            line: *line,
            message: e.to_string(),
        })?,
        (None, None) => ScenarioConfig::preset("paper-fig2")?,
    };
    for e in &entries {
        cfg.set(&e.section, &e.key, &e.value).map_err(|message| Error::Parse {
            line: e.line,
            message,
        })?;
    }
    for s in sets {
        let (path, value) = s
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--set '{s}': expected section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Validation(format!("--set '{s}': expected section.key=value")))?;
        cfg.set(section, key, value)
            .map_err(|m| Error::Validation(format!("--set '{s}': {m}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    load_config_with(path, None, &[])
}

pub fn load_config_with(path: &Path, preset: Option<&str>, sets: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, preset, sets)
}
