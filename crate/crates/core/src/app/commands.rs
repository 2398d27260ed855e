//! Subcommand pipelines and their CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use crate::condensate::{Basin, TfProfile};
use crate::dynamics::{regime_threshold, sequence_position, survival_curve};
use crate::error::{Error, Result};
use crate::landscape::{characterize, fit_two_regimes, sweep_z0, LandscapeReport};
use crate::numerics::{linear_grid, log_grid};
use crate::potential::{Point3, TrapPotential};
use crate::spectroscopy::{fit_quadratic_rise, rf_map, RfPoint};

pub const SCHEMA_VERSION: u32 = 1;

pub const SUBCOMMANDS: [&str; 8] = [
    "potential-cut",
    "potential-map",
    "minimize",
    "sweep-z0",
    "tf-density",
    "rf-map",
    "loss-curve",
    "ramp-profile",
];

/// Column names of each subcommand's CSV.
pub fn columns(command: &str) -> Option<&'static [&'static str]> {
    Some(match command {
        "potential-cut" => &["z_m", "u_cp_J", "u_ew_J", "u_magn_J", "u_g_J", "u_tot_J", "u_tot_uK"],
        "potential-map" => &["x_m", "z_m", "u_tot_J", "u_tot_uK"],
        "minimize" | "sweep-z0" => &[
            "z0_m",
            "has_trap",
            "z_min_m",
            "u_min_J",
            "z_barrier_m",
            "u_barrier_J",
            "barrier_height_J",
            "saddle_x_m",
            "saddle_z_m",
            "saddle_energy_J",
            "trap_depth_J",
            "trap_depth_uK",
            "error",
        ],
        "tf-density" => &["z0_m", "z_m", "density_m3"],
        "rf-map" => &["z0_m", "b_field_T", "rf_freq_Hz"],
        "loss-curve" => &["z0_m", "fraction", "evap_loss", "tunnel_loss"],
        "ramp-profile" => &["t_s", "z0_m"],
        _ => return None,
    })
}

/// Column schema plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Human-readable summary lines (fits, chemical potentials); not part of the CSV.
    pub notes: Vec<String>,
}

impl ResultTable {
    fn new(command: &str) -> Self {
        ResultTable {
            command: command.to_string(),
            columns: columns(command).expect("known command").to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# surftrap {} v{}", self.command, SCHEMA_VERSION);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

/// 12 significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_num)
}

fn report_row(z0: f64, r: &Result<LandscapeReport>, kb: f64) -> Vec<String> {
    match r {
        Ok(r) => vec![
            fmt_num(z0),
            (r.has_trap as u8).to_string(),
            fmt_num(r.z_min),
            fmt_num(r.u_min),
            fmt_opt(r.z_barrier),
            fmt_opt(r.u_barrier),
            fmt_opt(r.barrier_height),
            fmt_opt(r.saddle_x),
            fmt_opt(r.saddle_z),
            fmt_opt(r.saddle_energy),
            fmt_num(r.trap_depth),
            fmt_num(r.trap_depth / kb * 1e6),
            String::new(),
        ],
        Err(e) => {
            let mut row = vec![fmt_num(z0)];
            row.extend(std::iter::repeat_n(String::new(), 11));
            row.push(e.code().to_string());
            row
        }
    }
}

/// Runs a subcommand on the current rayon pool.
pub fn execute(command: &str, cfg: &ScenarioConfig) -> Result<ResultTable> {
    let trap = cfg.trap_configuration();
    let kb = trap.consts.kb;
    let mut t = match columns(command) {
        Some(_) => ResultTable::new(command),
        None => {
            return Err(Error::Validation(format!(
                "unknown subcommand '{command}' (known: {})",
                SUBCOMMANDS.join(", ")
            )))
        }
    };
    match command {
        "potential-cut" => {
            let tp = TrapPotential::new(&trap)?;
            let zs = log_grid(cfg.cut.z_start, cfg.cut.z_stop, cfg.cut.points);
            for z in zs {
                let terms = tp.terms(Point3::new(cfg.cut.x, 0.0, z))?;
                let u = terms.total();
                t.push(vec![
                    fmt_num(z),
                    fmt_num(terms.cp),
                    fmt_num(terms.ew),
                    fmt_num(terms.magnetic),
                    fmt_num(terms.gravity),
                    fmt_num(u),
                    fmt_num(u / kb * 1e6),
                ]);
            }
        }
        "potential-map" => {
            let tp = TrapPotential::new(&trap)?;
            let xs = linear_grid(cfg.map.x_min, cfg.map.x_max, cfg.map.nx);
            let zs = log_grid(cfg.map.z_start, cfg.map.z_stop, cfg.map.nz);
            for &x in &xs {
                for &z in &zs {
                    let u = tp.total(Point3::new(x, 0.0, z))?;
                    t.push(vec![fmt_num(x), fmt_num(z), fmt_num(u), fmt_num(u / kb * 1e6)]);
                }
            }
        }
        "minimize" => {
            let r = characterize(&trap);
            if let Err(e) = &r {
                return Err(e.clone());
            }
            t.push(report_row(trap.magnet.z0, &r, kb));
        }
        "sweep-z0" => {
            let table = sweep_z0(&trap, &cfg.sweep.z0_list)?;
            for rec in &table.records {
                t.push(report_row(rec.z0, &rec.report, kb));
            }
            match fit_two_regimes(&table) {
                Ok(f) => t.notes.push(format!(
                    "regime fit: slope_i = {:.4}, slope_ii = {:.4}, breakpoint z0 = {:.3e} m, sag = {:.4e} m",
                    f.slope_i,
                    f.slope_ii,
                    f.breakpoint_z0,
                    trap.gravitational_sag()
                )),
                Err(e) => t.notes.push(format!("regime fit unavailable: {e}")),
            }
        }
        "tf-density" => {
            let zs = log_grid(cfg.cut.z_start, cfg.cut.z_stop, cfg.cut.points);
            let profiles: Vec<Result<TfProfile>> = cfg
                .sweep
                .z0_list
                .par_iter()
                .map(|&z0| {
                    let mut basin = Basin::new(&trap.with_z0(z0))?;
                    TfProfile::from_basin(&mut basin, cfg.condensate.n_atoms)
                })
                .collect();
            if profiles.iter().all(|p| p.is_err()) {
                if let Some(Err(e)) = profiles.first() {
                    return Err(e.clone());
                }
            }
            for (&z0, prof) in cfg.sweep.z0_list.iter().zip(&profiles) {
                let prof = match prof {
                    Ok(p) => p,
                    Err(e) => {
                        t.notes.push(format!("z0 = {z0:.3e} m: {} ({e})", e.code()));
                        for &z in &zs {
                            t.push(vec![fmt_num(z0), fmt_num(z), fmt_num(f64::NAN)]);
                        }
                        continue;
                    }
                };
                t.notes.push(format!(
                    "z0 = {:.3e} m: mu = {:.4e} J ({:.2} nK), z_min = {:.4e} m{}",
                    z0,
                    prof.mu,
                    prof.mu / kb * 1e9,
                    prof.z_min,
                    if prof.spilled { ", spills over the barrier" } else { "" }
                ));
                let dens: Vec<f64> = zs.par_iter().map(|&z| prof.density_at(Point3::on_axis(z))).collect();
                for (&z, d) in zs.iter().zip(dens) {
                    t.push(vec![fmt_num(z0), fmt_num(z), fmt_num(d)]);
                }
            }
        }
        "rf-map" => {
            let rows = rf_map(&trap, &cfg.sweep.z0_list);
            let mut fit_points = Vec::new();
            let limit = cfg.spectroscopy.fit_max_z0.unwrap_or_else(|| regime_threshold(&trap));
            for row in &rows {
                match &row.point {
                    Ok(p) => {
                        t.push(vec![fmt_num(p.z0), fmt_num(p.b_field), fmt_num(p.rf_freq)]);
                        if p.z0 <= limit {
                            fit_points.push(RfPoint {
                                rf_uncertainty: cfg.spectroscopy.rf_uncertainty,
                                ..*p
                            });
                        }
                    }
                    Err(e) => {
                        t.push(vec![fmt_num(row.z0), "nan".into(), "nan".into()]);
                        t.notes.push(format!("z0 = {:.3e} m: {}", row.z0, e.code()));
                    }
                }
            }
            match fit_quadratic_rise(&fit_points, &trap.species, &trap.consts) {
                Ok(f) => t.notes.push(format!(
                    "quadratic fit over z0 <= {:.3e} m: omega_z = 2pi x {:.3} Hz, b_offset = {:.6e} T, z_ref = {:.3e} m",
                    limit,
                    f.omega_z / (2.0 * std::f64::consts::PI),
                    f.b_offset,
                    f.z_ref
                )),
                Err(e) => t.notes.push(format!("quadratic fit unavailable: {e}")),
            }
        }
        "loss-curve" => {
            let rows = survival_curve(
                &trap,
                &cfg.ramp_spec(),
                cfg.condensate.n_atoms,
                &cfg.sweep.z0_list,
                cfg.loss.attempt_rate,
            )?;
            for row in rows {
                match row.record {
                    Ok(r) => t.push(vec![
                        fmt_num(r.z0),
                        fmt_num(r.fraction),
                        fmt_num(r.evap_loss),
                        fmt_num(r.tunnel_loss),
                    ]),
                    Err(e) => {
                        t.push(vec![fmt_num(row.z0), "nan".into(), "nan".into(), "nan".into()]);
                        t.notes.push(format!("z0 = {:.3e} m: {}", row.z0, e.code()));
                    }
                }
            }
        }
        "ramp-profile" => {
            let ramp = cfg.ramp_spec();
            for tt in linear_grid(0.0, ramp.total_time(), cfg.ramp.points) {
                t.push(vec![fmt_num(tt), fmt_num(sequence_position(tt, &ramp)?)]);
            }
        }
        _ => unreachable!(),
    }
    Ok(t)
}

/// Runs `command` on a dedicated pool of `threads` workers (all cores when `None`)
/// and writes the CSV to `out`.
pub fn run_subcommand(
    command: &str,
    cfg: &ScenarioConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<ResultTable> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Validation("thread count must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    let table = pool.install(|| execute(command, cfg))?;
    std::fs::write(out, table.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    Ok(table)
}
