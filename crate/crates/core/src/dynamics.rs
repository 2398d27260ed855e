//! Ramp of the magnetic minimum and atom loss by over-barrier evaporation and
//! through-barrier tunnelling.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::condensate::Basin;
use crate::error::{Error, Result};
use crate::landscape::{characterize_with, default_saddle_window, default_window, LandscapeReport};
use crate::numerics::{bisect, gl32};
use crate::potential::{TrapConfiguration, TrapPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampShape {
    /// `sin^2(pi t / tau)`: reaches the end point at `tau / 2` and is back at the start
    /// at `tau`.
    PaperSinSquared,
    /// `sin^2(pi t / (2 tau))`: monotone from start to end.
    MonotoneHalfPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub z0_start: f64,
    pub z0_end: f64,
    /// s.
    pub tau: f64,
    pub hold: f64,
    pub return_time: f64,
    pub shape: RampShape,
}

impl RampSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Validation(format!("ramp.tau must be > 0, got {}", self.tau)));
        }
        if !(self.return_time > 0.0 && self.return_time.is_finite()) {
            return Err(Error::Validation(format!(
                "ramp.return_time must be > 0, got {}",
                self.return_time
            )));
        }
        if !(self.hold >= 0.0 && self.hold.is_finite()) {
            return Err(Error::Validation(format!("ramp.hold must be >= 0, got {}", self.hold)));
        }
        if !(self.z0_start.is_finite() && self.z0_end.is_finite()) {
            return Err(Error::Validation("ramp end points must be finite".into()));
        }
        Ok(())
    }

    pub fn with_end(&self, z0_end: f64) -> Self {
        RampSpec { z0_end, ..*self }
    }

    /// Ramp, hold and return.
    pub fn total_time(&self) -> f64 {
        self.tau + self.hold + self.return_time
    }
}

/// Position of the magnetic minimum during the ramp, `0 <= t <= tau`.
pub fn ramp_position(t: f64, ramp: &RampSpec) -> Result<f64> {
    if !(0.0..=ramp.tau).contains(&t) {
        return Err(Error::OutOfRange(format!("t = {t} outside [0, {}]", ramp.tau)));
    }
    let phase = match ramp.shape {
        RampShape::PaperSinSquared => PI * t / ramp.tau,
        RampShape::MonotoneHalfPeriod => 0.5 * PI * t / ramp.tau,
    };
    let s = phase.sin();
    Ok(ramp.z0_start + (ramp.z0_end - ramp.z0_start) * s * s)
}

/// Position over the whole sequence: the ramp, a hold at the ramp's final position,
/// then a monotone `sin^2` return to the start within `return_time`.
pub fn sequence_position(t: f64, ramp: &RampSpec) -> Result<f64> {
    let total = ramp.total_time();
    if !(0.0..=total).contains(&t) {
        return Err(Error::OutOfRange(format!("t = {t} outside [0, {total}]")));
    }
    if t <= ramp.tau {
        return ramp_position(t, ramp);
    }
    let parked = ramp_position(ramp.tau, ramp)?;
    if t <= ramp.tau + ramp.hold {
        return Ok(parked);
    }
    let s = (0.5 * PI * (t - ramp.tau - ramp.hold) / ramp.return_time).sin();
    Ok(parked + (ramp.z0_start - parked) * s * s)
}

/// Time the sequence spends with the magnetic minimum at or below `threshold`.
pub fn exposure_time(ramp: &RampSpec, threshold: f64) -> Result<f64> {
    ramp.validate()?;
    let phases = [
        (0.0, ramp.tau),
        (ramp.tau, ramp.tau + ramp.hold),
        (ramp.tau + ramp.hold, ramp.total_time()),
    ];
    let mut total = 0.0;
    for (a, b) in phases {
        if b <= a {
            continue;
        }
        total += time_below(|t| sequence_position(t, ramp).unwrap_or(f64::NAN), a, b, threshold);
    }
    Ok(total)
}

/// Measure of `{t in [a, b] : f(t) <= thr}` for a smooth `f`.
fn time_below<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, thr: f64) -> f64 {
    const N: usize = 2048;
    let h = (b - a) / N as f64;
    let g = |t: f64| f(t) - thr;
    let mut total = 0.0;
    let mut t0 = a;
    let mut g0 = g(t0);
    for k in 1..=N {
        let t1 = if k == N { b } else { a + h * k as f64 };
        let g1 = g(t1);
        match (g0 <= 0.0, g1 <= 0.0) {
            (true, true) => total += t1 - t0,
            (false, false) => {}
            (true, false) => {
                let c = bisect(g, t0, t1, 1e-15 * (b - a).max(1.0)).unwrap_or(t0);
                total += c - t0;
            }
            (false, true) => {
                let c = bisect(g, t0, t1, 1e-15 * (b - a).max(1.0)).unwrap_or(t1);
                total += t1 - c;
            }
        }
        t0 = t1;
        g0 = g1;
    }
    total
}

/// Fraction of a Thomas-Fermi cloud with chemical potential `mu` that lies above the
/// trap depth: `1 - N(D) / N(mu)`.
pub fn evaporation_fraction(
    cfg: &TrapConfiguration,
    report: &LandscapeReport,
    mu: f64,
) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::OutOfRange(format!("mu must be >= 0, got {mu}")));
    }
    if !report.has_trap {
        return Ok(1.0);
    }
    let depth = report.trap_depth;
    if mu <= depth {
        return Ok(0.0);
    }
    let mut basin = Basin::from_parts(TrapPotential::new(cfg)?, report.clone())?;
    let kept = basin.number(depth).n_atoms;
    let all = basin.number(mu).n_atoms;
    Ok((1.0 - kept / all).clamp(0.0, 1.0))
}

/// `exp(-2/hbar * int_a^b sqrt(2 m max(0, U - E)) dz)` for an arbitrary potential.
///
/// `a` and `b` should be the classical turning points (or the edges of a flat
/// barrier); the cosine substitution absorbs the square-root behaviour there.
pub fn transmission_between<F: Fn(f64) -> f64>(
    potential: F,
    mass: f64,
    energy: f64,
    a: f64,
    b: f64,
    hbar: f64,
) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let action = gl32().integrate_composite(0.0, PI, 8, |theta| {
        let z = c - h * theta.cos();
        let k = (2.0 * mass * (potential(z) - energy).max(0.0)).sqrt();
        k * h * theta.sin()
    });
    (-2.0 * action / hbar).exp()
}

/// WKB transmission through the on-axis surface barrier at `energy` (absolute, J).
pub fn wkb_transmission(cfg: &TrapConfiguration, energy: f64) -> Result<f64> {
    let tp = TrapPotential::new(cfg)?;
    let report = characterize_with(&tp, default_window(cfg), default_saddle_window(cfg))?;
    wkb_with(&tp, &report, energy)
}

pub(crate) fn wkb_with(tp: &TrapPotential, report: &LandscapeReport, energy: f64) -> Result<f64> {
    let (Some(zb), Some(ub)) = (report.z_barrier, report.u_barrier) else {
        return Err(Error::NoBarrier);
    };
    if !report.has_trap {
        return Err(Error::NoBarrier);
    }
    if energy >= ub {
        return Err(Error::AboveBarrier);
    }
    if energy < report.u_min {
        return Err(Error::OutOfRange("energy below the trap minimum".into()));
    }
    let f = |z: f64| tp.on_axis(z) - energy;
    let z1 = bisect(f, tp.z_floor(), zb, 1e-16).ok_or(Error::NoBarrier)?;
    let z2 = bisect(f, zb, report.z_min, 1e-16).ok_or(Error::NoBarrier)?;
    let t = transmission_between(|z| tp.on_axis(z), tp.mass(), energy, z1, z2, tp.config().consts.hbar);
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalRecord {
    pub z0: f64,
    pub fraction: f64,
    pub evap_loss: f64,
    pub tunnel_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRow {
    pub z0: f64,
    pub record: Result<SurvivalRecord>,
}

/// Ingredients of one survival record, before the attempt rate is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossInputs {
    pub has_trap: bool,
    pub mu: f64,
    pub evap_loss: f64,
    pub transmission: f64,
    pub exposure: f64,
}

/// Default attempt rate: the vertical trap frequency, Hz.
pub fn default_attempt_rate(cfg: &TrapConfiguration) -> f64 {
    cfg.magnet.omega_z / (2.0 * PI)
}

/// The barrier holds the cloud back (regime ii) while the sagged magnetic minimum
/// lies at or behind the surface.
pub fn regime_threshold(cfg: &TrapConfiguration) -> f64 {
    -cfg.gravitational_sag()
}

/// Evaporation and tunnelling ingredients for a ramp whose closest approach is
/// `ramp.z0_end`.
pub fn loss_inputs(cfg_base: &TrapConfiguration, ramp: &RampSpec, n_atoms: f64) -> Result<LossInputs> {
    ramp.validate()?;
    let cfg = cfg_base.with_z0(ramp.z0_end);
    let tp = TrapPotential::new(&cfg)?;
    let report = characterize_with(&tp, default_window(&cfg), default_saddle_window(&cfg))?;
    let exposure = exposure_time(ramp, regime_threshold(&cfg))?;
    if !report.has_trap {
        return Ok(LossInputs {
            has_trap: false,
            mu: 0.0,
            evap_loss: 1.0,
            transmission: 1.0,
            exposure,
        });
    }
    let mut basin = Basin::from_parts(tp.clone(), report.clone())?;
    let (mu, _) = basin.solve_mu(n_atoms)?;
    let depth = report.trap_depth;
    let evap_loss = if mu <= depth {
        0.0
    } else {
        let kept = basin.number(depth).n_atoms;
        (1.0 - kept / n_atoms).clamp(0.0, 1.0)
    };
    let transmission = match report.z_barrier {
        None => 0.0,
        Some(_) => match wkb_with(&tp, &report, report.u_min + mu.min(depth)) {
            Ok(t) => t,
            Err(Error::AboveBarrier) => 1.0,
            Err(e) => return Err(e),
        },
    };
    Ok(LossInputs {
        has_trap: true,
        mu,
        evap_loss,
        transmission,
        exposure,
    })
}

impl LossInputs {
    pub fn record(&self, z0: f64, attempt_rate: f64) -> SurvivalRecord {
        let (evap_loss, tunnel_loss) = if self.has_trap {
            (
                self.evap_loss,
                1.0 - (-attempt_rate * self.transmission * self.exposure).exp(),
            )
        } else {
            (1.0, 0.0)
        };
        SurvivalRecord {
            z0,
            fraction: (1.0 - evap_loss - tunnel_loss).clamp(0.0, 1.0),
            evap_loss,
            tunnel_loss,
        }
    }
}

/// Survival after the ramp sequence for each closest approach in `z0_list`.
///
/// `attempt_rate` defaults to the vertical trap frequency. Rows are independent and
/// come back in input order; a failing row keeps its error.
pub fn survival_curve(
    cfg_base: &TrapConfiguration,
    ramp: &RampSpec,
    n_atoms: f64,
    z0_list: &[f64],
    attempt_rate: Option<f64>,
) -> Result<Vec<SurvivalRow>> {
    ramp.validate()?;
    cfg_base.validate()?;
    if !(n_atoms > 0.0 && n_atoms.is_finite()) {
        return Err(Error::OutOfRange(format!("n_atoms must be > 0, got {n_atoms}")));
    }
    let rate = attempt_rate.unwrap_or_else(|| default_attempt_rate(cfg_base));
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::OutOfRange(format!("attempt_rate must be >= 0, got {rate}")));
    }
    Ok(z0_list
        .par_iter()
        .map(|&z0| SurvivalRow {
            z0,
            record: loss_inputs(cfg_base, &ramp.with_end(z0), n_atoms).map(|l| l.record(z0, rate)),
        })
        .collect())
}

/// Attempt rate at which the survival at closest approach `ramp.z0_end` equals
/// `target`, Hz.
pub fn calibrate_attempt_rate(
    cfg_base: &TrapConfiguration,
    ramp: &RampSpec,
    n_atoms: f64,
    target: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::OutOfRange(format!("target survival {target} outside [0, 1]")));
    }
    let l = loss_inputs(cfg_base, ramp, n_atoms)?;
    if !l.has_trap {
        return Err(Error::NoTrap);
    }
    let ceiling = 1.0 - l.evap_loss;
    if target > ceiling {
        return Err(Error::OutOfRange(format!(
            "survival {target} unreachable: evaporation alone leaves {ceiling}"
        )));
    }
    let needed = ceiling - target;
    if needed == 0.0 {
        return Ok(0.0);
    }
    let exposure_weight = l.transmission * l.exposure;
    if needed >= 1.0 || exposure_weight <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "survival {target} unreachable by tunnelling (T * t = {exposure_weight:e})"
        )));
    }
    Ok(-(1.0 - needed).ln() / exposure_weight)
}
