//! Stationary points of the total potential, z0 sweeps and the two-regime fit.
//!
//! The landscape spans nanometres (surface barrier) to tens of micrometres (magnetic
//! minimum), so every 1D search starts from a log-spaced scan and refines the
//! bracketed extremum with golden-section search.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{golden_section_max, golden_section_min, linear_grid, log_grid};
use crate::potential::{Point3, TrapConfiguration, TrapPotential};
use crate::regression::piecewise_two_segment;

/// Points of the coarse on-axis scan.
const AXIS_SCAN_POINTS: usize = 20_000;
/// Points of the per-column scan used while tracing the barrier ridge.
const COLUMN_SCAN_POINTS: usize = 1_500;
/// Absolute position tolerance of the refined extrema, m.
const Z_TOL: f64 = 1e-11;
const X_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeReport {
    /// Trap minimum on axis. When there is no trap this is the window floor.
    pub z_min: f64,
    pub u_min: f64,
    /// Barrier maximum on the surface side of the minimum.
    pub z_barrier: Option<f64>,
    pub u_barrier: Option<f64>,
    /// `u_barrier - u_min`; present only when the trap holds.
    pub barrier_height: Option<f64>,
    /// Positive representative of the transverse saddle pair.
    pub saddle_x: Option<f64>,
    pub saddle_z: Option<f64>,
    pub saddle_energy: Option<f64>,
    /// Lowest escape energy above the minimum; zero without a trap.
    pub trap_depth: f64,
    pub has_trap: bool,
}

impl LandscapeReport {
    fn open(z: f64, u: f64, barrier: Option<(f64, f64)>) -> Self {
        LandscapeReport {
            z_min: z,
            u_min: u,
            z_barrier: barrier.map(|b| b.0),
            u_barrier: barrier.map(|b| b.1),
            barrier_height: None,
            saddle_x: None,
            saddle_z: None,
            saddle_energy: None,
            trap_depth: 0.0,
            has_trap: false,
        }
    }
}

/// Default on-axis search window: from the surface floor to 100 um beyond the
/// gravitationally sagged magnetic minimum.
pub fn default_window(cfg: &TrapConfiguration) -> (f64, f64) {
    let centre = (cfg.magnet.z0 + cfg.gravitational_sag()).max(0.0);
    (cfg.z_floor, centre + 100e-6)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extremum {
    Min(usize),
    Max(usize),
}

/// Interior local extrema of a sampled function, in grid order.
fn scan_extrema(values: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if b < a && b <= c {
            out.push(Extremum::Min(i));
        } else if b > a && b >= c {
            out.push(Extremum::Max(i));
        }
    }
    out
}

/// Refined minimum and the barrier on its surface side along one line `z -> f(z)`.
struct LineExtrema {
    min: Option<(f64, f64)>,
    barrier: Option<(f64, f64)>,
    any_max: Option<(f64, f64)>,
}

fn line_extrema<F: Fn(f64) -> f64>(f: &F, grid: &[f64]) -> LineExtrema {
    let values: Vec<f64> = grid.iter().map(|&z| f(z)).collect();
    let extrema = scan_extrema(&values);
    let refine_min = |i: usize| golden_section_min(f, grid[i - 1], grid[i + 1], Z_TOL);
    let refine_max = |i: usize| golden_section_max(f, grid[i - 1], grid[i + 1], Z_TOL);

    // deepest interior minimum
    let min_idx = extrema
        .iter()
        .filter_map(|e| match e {
            Extremum::Min(i) => Some(*i),
            _ => None,
        })
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let min = min_idx.map(refine_min);
    let barrier = min_idx.and_then(|im| {
        extrema
            .iter()
            .rev()
            .find_map(|e| match e {
                Extremum::Max(i) if *i < im => Some(*i),
                _ => None,
            })
            .map(refine_max)
    });
    let any_max = extrema
        .iter()
        .find_map(|e| match e {
            Extremum::Max(i) => Some(*i),
            _ => None,
        })
        .map(refine_max);
    LineExtrema {
        min,
        barrier,
        any_max,
    }
}

/// Locates the on-axis trap minimum and the surface barrier inside `window`.
pub fn find_minimum_on_axis(
    cfg: &TrapConfiguration,
    window: (f64, f64),
) -> Result<LandscapeReport> {
    let tp = TrapPotential::new(cfg)?;
    minimum_on_axis(&tp, window)
}

pub(crate) fn minimum_on_axis(tp: &TrapPotential, window: (f64, f64)) -> Result<LandscapeReport> {
    let (lo, hi) = window;
    let floor = tp.z_floor();
    if !(lo >= floor && hi > lo) {
        return Err(Error::OutOfRange(format!(
            "search window [{lo:e}, {hi:e}] must start at or above the floor {floor:e}"
        )));
    }
    let grid = log_grid(lo, hi, AXIS_SCAN_POINTS);
    let f = |z: f64| tp.on_axis(z);
    let ext = line_extrema(&f, &grid);
    match (ext.min, ext.barrier) {
        (None, None) => match ext.any_max {
            // rising monotonically away from the surface: the surface attraction has
            // swallowed the minimum
            None if tp.c4() > 0.0 && f(lo) < f(hi) => Ok(LandscapeReport::open(lo, f(lo), None)),
            None => Err(Error::NoStationaryPoint { lo, hi }),
            Some(b) => Ok(LandscapeReport::open(lo, f(lo), Some(b))),
        },
        (None, Some(_)) => unreachable!("barrier is only searched next to a minimum"),
        (Some((z_min, u_min)), Some((z_b, u_b))) => {
            let height = u_b - u_min;
            if height > 0.0 {
                Ok(LandscapeReport {
                    z_min,
                    u_min,
                    z_barrier: Some(z_b),
                    u_barrier: Some(u_b),
                    barrier_height: Some(height),
                    saddle_x: None,
                    saddle_z: None,
                    saddle_energy: None,
                    trap_depth: height,
                    has_trap: true,
                })
            } else {
                Ok(LandscapeReport::open(lo, f(lo), Some((z_b, u_b))))
            }
        }
        (Some((z_min, u_min)), None) => {
            // no barrier: the wall at the window floor bounds the trap
            let wall = f(lo) - u_min;
            if wall > 0.0 {
                Ok(LandscapeReport {
                    z_min,
                    u_min,
                    z_barrier: None,
                    u_barrier: None,
                    barrier_height: None,
                    saddle_x: None,
                    saddle_z: None,
                    saddle_energy: None,
                    trap_depth: wall,
                    has_trap: true,
                })
            } else {
                Ok(LandscapeReport::open(lo, f(lo), None))
            }
        }
    }
}

/// Transverse saddle of the barrier ridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub x: f64,
    pub z: f64,
    pub energy: f64,
}

/// Barrier (ridge) energy of the column at transverse offset `x`, `None` when the
/// column has no barrier in front of a minimum.
fn ridge_at(tp: &TrapPotential, x: f64, grid: &[f64]) -> Option<(f64, f64)> {
    let f = |z: f64| tp.eval(Point3::new(x, 0.0, z));
    let ext = line_extrema(&f, grid);
    match (ext.min, ext.barrier) {
        (Some(m), Some(b)) if b.1 > m.1 => Some(b),
        _ => None,
    }
}

fn column_grid(tp: &TrapPotential, axis: &LandscapeReport) -> Vec<f64> {
    let hi = (2.0 * axis.z_min).max(axis.z_min + 5e-6);
    log_grid(tp.z_floor(), hi, COLUMN_SCAN_POINTS)
}

/// Finds the lowest point of the barrier ridge away from the axis along `x`.
///
/// The ridge profile `R(x)` is the barrier maximum of each column `z -> U(x, 0, z)`.
/// A saddle exists when `R` has an interior minimum in `x_window`.
pub fn find_saddle_points(cfg: &TrapConfiguration, x_window: (f64, f64)) -> Result<SaddlePoint> {
    let tp = TrapPotential::new(cfg)?;
    let axis = minimum_on_axis(&tp, default_window(cfg))?;
    saddle_search(&tp, &axis, x_window)
}

pub(crate) fn saddle_search(
    tp: &TrapPotential,
    axis: &LandscapeReport,
    x_window: (f64, f64),
) -> Result<SaddlePoint> {
    if !axis.has_trap || axis.z_barrier.is_none() {
        return Err(Error::NoSaddle);
    }
    let (x_lo, x_hi) = x_window;
    if !(x_hi > x_lo && x_lo >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "saddle window [{x_lo:e}, {x_hi:e}] must satisfy 0 <= lo < hi"
        )));
    }
    let grid = column_grid(tp, axis);
    let xs = linear_grid(x_lo, x_hi, 151);
    let ridge: Vec<Option<(f64, f64)>> = xs.iter().map(|&x| ridge_at(tp, x, &grid)).collect();
    // only the part of the ridge connected to the start of the window
    let defined = ridge.iter().take_while(|r| r.is_some()).count();
    if defined < 3 {
        return Err(Error::NoSaddle);
    }
    let energies: Vec<f64> = ridge[..defined].iter().map(|r| r.unwrap().1).collect();
    let (i_best, _) = energies
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .unwrap();
    if i_best == 0 {
        return Err(Error::NoSaddle);
    }
    if i_best == defined - 1 {
        if defined == xs.len() {
            // still descending at the window edge
            return Err(Error::NoSaddle);
        }
        // ridge dissolves here: the escape path opens at the edge of the defined part
        let (z, energy) = ridge[i_best].unwrap();
        return Ok(SaddlePoint {
            x: xs[i_best],
            z,
            energy,
        });
    }
    let ridge_energy = |x: f64| ridge_at(tp, x, &grid).map_or(f64::INFINITY, |r| r.1);
    let (x, energy) = golden_section_min(ridge_energy, xs[i_best - 1], xs[i_best + 1], X_TOL);
    let z = ridge_at(tp, x, &grid).map_or(ridge[i_best].unwrap().0, |r| r.0);
    Ok(SaddlePoint { x, z, energy })
}

/// Default transverse window for the saddle search: three waists.
pub fn default_saddle_window(cfg: &TrapConfiguration) -> (f64, f64) {
    (0.0, 3.0 * cfg.beam.waist_x)
}

/// Full characterisation: on-axis extrema plus the transverse saddle, with the trap
/// depth limited by whichever escape route is lower.
pub fn characterize(cfg: &TrapConfiguration) -> Result<LandscapeReport> {
    let tp = TrapPotential::new(cfg)?;
    characterize_with(&tp, default_window(cfg), default_saddle_window(cfg))
}

pub fn characterize_with(
    tp: &TrapPotential,
    window: (f64, f64),
    x_window: (f64, f64),
) -> Result<LandscapeReport> {
    let mut report = minimum_on_axis(tp, window)?;
    if !report.has_trap {
        return Ok(report);
    }
    match saddle_search(tp, &report, x_window) {
        Ok(s) => {
            report.saddle_x = Some(s.x);
            report.saddle_z = Some(s.z);
            report.saddle_energy = Some(s.energy);
            let saddle_depth = s.energy - report.u_min;
            if saddle_depth <= 0.0 {
                report.has_trap = false;
                report.trap_depth = 0.0;
            } else {
                report.trap_depth = report.trap_depth.min(saddle_depth);
            }
        }
        Err(Error::NoSaddle) => {}
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub z0: f64,
    pub report: Result<LandscapeReport>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    /// `(z0, z_min)` of the records that hold a trap.
    pub fn trapped_points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| match &r.report {
                Ok(rep) if rep.has_trap => Some((r.z0, rep.z_min)),
                _ => None,
            })
            .collect()
    }
}

/// Characterises the landscape for each z0 with everything else held fixed.
///
/// Records are independent and evaluated on the current rayon pool; the output order
/// follows `z0_list`. Failures stay in their row.
pub fn sweep_z0(cfg_base: &TrapConfiguration, z0_list: &[f64]) -> Result<SweepTable> {
    if z0_list.is_empty() {
        return Err(Error::InsufficientData("empty z0 list".into()));
    }
    let ascending = z0_list.windows(2).all(|w| w[0] < w[1]);
    let descending = z0_list.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(Error::OutOfRange("z0 list must be strictly sorted".into()));
    }
    let records = z0_list
        .par_iter()
        .map(|&z0| SweepRecord {
            z0,
            report: characterize(&cfg_base.with_z0(z0)),
        })
        .collect();
    Ok(SweepTable { records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeFit {
    /// dz_min/dz0 where the trap follows the magnetic minimum.
    pub slope_i: f64,
    /// z_min - slope_i * z0 in that regime, m.
    pub intercept_i: f64,
    /// dz_min/dz0 where the barrier holds the trap back.
    pub slope_ii: f64,
    pub intercept_ii: f64,
    pub breakpoint_z0: f64,
    /// RMS residual over both regimes, m.
    pub residuals: f64,
    pub n_points: usize,
}

/// Fits the trapped records of a sweep with two straight lines (at least 4 points each).
pub fn fit_two_regimes(table: &SweepTable) -> Result<RegimeFit> {
    let pts = table.trapped_points();
    if pts.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "regime fit needs >= 8 trapped records, got {}",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = piecewise_two_segment(&xs, &ys, 4)?;
    let (slope_ii, slope_i) = (fit.lower.coefficients[1], fit.upper.coefficients[1]);
    if !(slope_i > slope_ii) {
        return Err(Error::DegenerateFit(format!(
            "regime slopes out of order: {slope_i} <= {slope_ii}"
        )));
    }
    Ok(RegimeFit {
        slope_i,
        intercept_i: fit.upper.coefficients[0],
        slope_ii,
        intercept_ii: fit.lower.coefficients[0],
        breakpoint_z0: fit.breakpoint,
        residuals: (fit.sse / fit.n_points as f64).sqrt(),
        n_points: fit.n_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> TrapConfiguration {
        let mut c = TrapConfiguration::figure_defaults();
        c.beam.enhancement_override = Some(4.0);
        c
    }

    #[test]
    fn gravity_only_has_no_stationary_point() {
        let mut cfg = fig();
        cfg.ew_enabled = false;
        cfg.cp_enabled = false;
        cfg.magnet_enabled = false;
        let r = find_minimum_on_axis(&cfg, (1e-9, 100e-6));
        assert!(matches!(r, Err(Error::NoStationaryPoint { .. })));
    }

    #[test]
    fn far_trap_sits_at_sag() {
        let cfg = fig().with_z0(30e-6);
        let r = find_minimum_on_axis(&cfg, default_window(&cfg)).unwrap();
        let sag = cfg.gravitational_sag();
        assert!((sag - 6.21e-6).abs() < 0.01e-6, "{sag}");
        assert!((r.z_min - 36.2e-6).abs() < 0.2e-6, "{}", r.z_min);
        assert!(((r.z_min - 30e-6) / sag - 1.0).abs() < 1e-3);
    }

    #[test]
    fn barrier_a_few_hundred_nanometres_out() {
        let cfg = fig().with_z0(-15e-6);
        let r = find_minimum_on_axis(&cfg, default_window(&cfg)).unwrap();
        assert!(r.has_trap);
        let zb = r.z_barrier.unwrap();
        assert!((100e-9..=500e-9).contains(&zb), "{zb}");
        assert!(zb < r.z_min);
        assert!(r.barrier_height.unwrap() > 0.0);
    }

    #[test]
    fn uniform_beam_has_no_saddle() {
        let mut cfg = fig().with_z0(-15e-6);
        cfg.beam.waist_x = 1e3;
        cfg.beam.enhancement_override = Some(4.0 * 1e3 / 170e-6);
        assert_eq!(
            find_saddle_points(&cfg, (0.0, 500e-6)).unwrap_err(),
            Error::NoSaddle
        );
    }

    #[test]
    fn open_trap_without_wave() {
        let mut cfg = fig().with_z0(-10e-6);
        cfg.ew_enabled = false;
        let r = characterize(&cfg).unwrap();
        assert!(!r.has_trap);
        assert_eq!(r.trap_depth, 0.0);
    }

    #[test]
    fn sweep_keeps_order_and_length() {
        let cfg = fig();
        let t = sweep_z0(&cfg, &[5e-6]).unwrap();
        assert_eq!(t.records.len(), 1);
        assert!(sweep_z0(&cfg, &[]).is_err());
        assert!(sweep_z0(&cfg, &[1e-6, 3e-6, 2e-6]).is_err());
    }
}
