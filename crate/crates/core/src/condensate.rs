//! Thomas-Fermi condensate in an arbitrary trap basin.
//!
//! The atom number for a trial chemical potential is the basin integral
//! `N(mu) = 1/g * int max(0, mu - V) d^3r` with `V = U - U_min`. The potential is even
//! in x and y, so one quadrant is integrated and multiplied by four. Each column
//! `(x, y)` is bounded by the outer isopotential and, on the surface side, by the
//! column ridge; a ridge lower than `mu` marks the cloud as spilling.

use crate::error::{Error, Result};
use crate::landscape::{characterize_with, default_saddle_window, default_window, LandscapeReport};
use crate::numerics::{bisect, gl20, golden_section_max, golden_section_min, log_grid};
use crate::potential::{Point3, TrapConfiguration, TrapPotential};

const COLUMN_SCAN_POINTS: usize = 240;
const MU_REL_TOL: f64 = 1e-9;
const MU_FAIL_TOL: f64 = 1e-4;

/// Contact interaction constant 4 pi hbar^2 a / m, J m^3.
pub fn interaction_constant(cfg: &TrapConfiguration) -> f64 {
    let hbar = cfg.consts.hbar;
    4.0 * std::f64::consts::PI * hbar * hbar * cfg.species.a_scatt / cfg.species.mass
}

/// Closed-form chemical potential of a harmonic trap,
/// `(hbar w_bar / 2) (15 N a / a_ho)^(2/5)` with `a_ho = sqrt(hbar / (m w_bar))`.
pub fn harmonic_tf_mu(omega_bar: f64, n_atoms: f64, a_scatt: f64, mass: f64, hbar: f64) -> f64 {
    let a_ho = (hbar / (mass * omega_bar)).sqrt();
    0.5 * hbar * omega_bar * (15.0 * n_atoms * a_scatt / a_ho).powf(0.4)
}

#[derive(Debug, Clone, Copy)]
struct Column {
    z_valley: f64,
    v_valley: f64,
    /// Surface-side wall: the column ridge, or the floor when the column has none.
    z_wall: f64,
    v_wall: f64,
}

/// Integration domain around one trap minimum.
#[derive(Debug, Clone)]
pub struct Basin {
    tp: TrapPotential,
    report: LandscapeReport,
    g_int: f64,
    z_top: f64,
}

/// Result of one basin integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinIntegral {
    pub n_atoms: f64,
    /// Some column ridge lies below `mu`: the cloud reaches over the barrier.
    pub spilled: bool,
}

impl Basin {
    pub fn new(cfg: &TrapConfiguration) -> Result<Self> {
        let tp = TrapPotential::new(cfg)?;
        let report = characterize_with(&tp, default_window(cfg), default_saddle_window(cfg))?;
        Self::from_parts(tp, report)
    }

    pub fn from_parts(tp: TrapPotential, report: LandscapeReport) -> Result<Self> {
        if !report.has_trap {
            return Err(Error::NoTrap);
        }
        let g_int = interaction_constant(tp.config());
        Ok(Basin {
            z_top: report.z_min,
            tp,
            report,
            g_int,
        })
    }

    pub fn report(&self) -> &LandscapeReport {
        &self.report
    }

    pub fn potential(&self) -> &TrapPotential {
        &self.tp
    }

    pub fn g_int(&self) -> f64 {
        self.g_int
    }

    #[inline]
    fn v(&self, x: f64, y: f64, z: f64) -> f64 {
        self.tp.eval(Point3::new(x, y, z)) - self.report.u_min
    }

    /// Sets the top of the column scans so the outer isopotential `mu` is covered.
    fn prepare(&mut self, mu: f64) {
        let z_min = self.report.z_min;
        let mut d = (z_min * 0.5).max(1e-7);
        for _ in 0..200 {
            if self.v(0.0, 0.0, z_min + d) > mu {
                break;
            }
            d *= 1.5;
        }
        self.z_top = z_min + 2.0 * d;
    }

    fn column(&self, x: f64, y: f64) -> Option<Column> {
        let floor = self.tp.z_floor();
        let grid = log_grid(floor, self.z_top, COLUMN_SCAN_POINTS);
        let f = |z: f64| self.v(x, y, z);
        let vals: Vec<f64> = grid.iter().map(|&z| f(z)).collect();
        // deepest interior local minimum of the scan
        let iv = (1..vals.len() - 1)
            .filter(|&i| vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1])
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))?;
        let (z_valley, v_valley) = golden_section_min(f, grid[iv - 1], grid[iv + 1], 1e-13);
        let ir = (1..iv).rev().find(|&i| vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1]);
        let (z_wall, v_wall) = match ir {
            Some(i) => golden_section_max(f, grid[i - 1], grid[i + 1], 1e-13),
            None => (floor, vals[0]),
        };
        Some(Column {
            z_valley,
            v_valley,
            z_wall,
            v_wall,
        })
    }

    fn column_min(&self, x: f64, y: f64) -> f64 {
        self.column(x, y).map_or(f64::INFINITY, |c| c.v_valley)
    }

    /// `int (mu - V) dz` over the column's part of the basin.
    fn column_integral(&self, x: f64, y: f64, mu: f64, spilled: &mut bool) -> f64 {
        let Some(col) = self.column(x, y) else {
            return 0.0;
        };
        if col.v_valley >= mu {
            return 0.0;
        }
        let f = |z: f64| self.v(x, y, z) - mu;
        let mut hi = self.z_top;
        for _ in 0..200 {
            if f(hi) > 0.0 {
                break;
            }
            hi = col.z_valley + 2.0 * (hi - col.z_valley);
        }
        let tol = 1e-15;
        let z2 = bisect(f, col.z_valley, hi, tol).unwrap_or(hi);
        let z1 = if col.v_wall <= mu {
            *spilled = true;
            col.z_wall
        } else {
            bisect(f, col.z_wall, col.z_valley, tol).unwrap_or(col.z_wall)
        };
        // split at the valley: the profile is smooth on each side
        let g = gl20();
        g.integrate(z1, col.z_valley, |z| (mu - self.v(x, y, z)).max(0.0))
            + g.integrate(col.z_valley, z2, |z| (mu - self.v(x, y, z)).max(0.0))
    }

    /// Largest `t` in `[0, inf)` with `m(t) < mu` for an increasing column minimum `m`.
    fn edge<F: Fn(f64) -> f64>(m: F, mu: f64, scale: f64) -> f64 {
        if m(0.0) >= mu {
            return 0.0;
        }
        let mut hi = scale;
        let mut n = 0;
        while m(hi) < mu && n < 200 {
            hi *= 2.0;
            n += 1;
        }
        bisect(|t| m(t) - mu, 0.0, hi, hi * 1e-13).unwrap_or(hi)
    }

    /// Atom number in the basin at chemical potential `mu` (measured from `U_min`).
    pub fn number(&mut self, mu: f64) -> BasinIntegral {
        if mu <= 0.0 {
            return BasinIntegral {
                n_atoms: 0.0,
                spilled: false,
            };
        }
        self.prepare(mu);
        let mut spilled = false;
        let scale = self.harmonic_scale(mu);
        let x_edge = Self::edge(|x| self.column_min(x, 0.0), mu, scale[0]);
        let g = gl20();
        // t = T (1 - s^2) removes the square-root behaviour at the edges
        let area = |x: f64, spilled: &mut bool| {
            let y_edge = Self::edge(|y| self.column_min(x, y), mu, scale[1]);
            if y_edge == 0.0 {
                return 0.0;
            }
            g.integrate(0.0, 1.0, |s| {
                let y = y_edge * (1.0 - s * s);
                2.0 * y_edge * s * self.column_integral(x, y, mu, spilled)
            })
        };
        let volume = g.integrate(0.0, 1.0, |s| {
            let x = x_edge * (1.0 - s * s);
            2.0 * x_edge * s * area(x, &mut spilled)
        });
        BasinIntegral {
            n_atoms: 4.0 * volume / self.g_int,
            spilled,
        }
    }

    /// Harmonic estimate of the cloud radii at `mu`, used as search scales.
    fn harmonic_scale(&self, mu: f64) -> [f64; 3] {
        let h = self
            .tp
            .hessian_diag_on_axis(self.report.z_min)
            .unwrap_or([f64::NAN; 3]);
        h.map(|k| {
            let r = (2.0 * mu / k).sqrt();
            if r.is_finite() && r > 0.0 { r } else { 1e-6 }
        })
    }

    /// Solves `N(mu) = n_atoms` for the chemical potential.
    pub fn solve_mu(&mut self, n_atoms: f64) -> Result<(f64, bool)> {
        if !(n_atoms >= 0.0 && n_atoms.is_finite()) {
            return Err(Error::OutOfRange(format!("n_atoms must be >= 0, got {n_atoms}")));
        }
        if n_atoms == 0.0 {
            return Ok((0.0, false));
        }
        let cfg = self.tp.config().clone();
        let h = self.tp.hessian_diag_on_axis(self.report.z_min)?;
        let m = cfg.species.mass;
        let w_bar = (h.iter().map(|k| (k / m).max(1e-6)).product::<f64>()).powf(1.0 / 6.0);
        let guess = harmonic_tf_mu(w_bar, n_atoms, cfg.species.a_scatt, m, cfg.consts.hbar);

        // bracket in ln(mu) against ln(N)
        let target = n_atoms.ln();
        let mut eval = |mu: f64| {
            let r = self.number(mu);
            (r.n_atoms.ln() - target, r)
        };
        let (mut lo, mut hi) = (guess, guess);
        let (mut f_lo, mut r_lo) = eval(lo);
        let (mut f_hi, mut r_hi) = (f_lo, r_lo);
        let mut k = 0;
        while f_lo > 0.0 && k < 100 {
            (hi, f_hi, r_hi) = (lo, f_lo, r_lo);
            lo *= 0.5;
            (f_lo, r_lo) = eval(lo);
            k += 1;
        }
        while f_hi < 0.0 && k < 200 {
            (lo, f_lo, r_lo) = (hi, f_hi, r_hi);
            hi *= 2.0;
            (f_hi, r_hi) = eval(hi);
            k += 1;
        }
        if !(f_lo <= 0.0 && f_hi >= 0.0) {
            return Err(Error::NonConvergence {
                what: "chemical potential bracket",
                detail: format!("no bracket after {k} expansions"),
            });
        }
        if f_lo == 0.0 {
            return Ok((lo, r_lo.spilled));
        }
        // Illinois false position on ln(mu)
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let (mut fa, mut fb) = (f_lo, f_hi);
        let mut last = 0i8;
        let mut best = (hi, f_hi, r_hi);
        for _ in 0..100 {
            let c = if fb == fa { 0.5 * (a + b) } else { b - fb * (b - a) / (fb - fa) };
            let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
            let (fc, rc) = eval(c.exp());
            if fc.abs() < best.1.abs() {
                best = (c.exp(), fc, rc);
            }
            if fc.abs() < MU_REL_TOL || (b - a).abs() < 1e-14 {
                break;
            }
            if fc.signum() == fb.signum() {
                b = c;
                fb = fc;
                if last == -1 {
                    fa *= 0.5;
                }
                last = -1;
            } else {
                a = c;
                fa = fc;
                if last == 1 {
                    fb *= 0.5;
                }
                last = 1;
            }
        }
        let (mu, f, r) = best;
        if f.abs() > MU_FAIL_TOL {
            return Err(Error::NonConvergence {
                what: "chemical potential",
                detail: format!("relative atom-number error {:.3e}", f.exp() - 1.0),
            });
        }
        Ok((mu, r.spilled))
    }
}

/// A solved Thomas-Fermi cloud.
#[derive(Debug, Clone)]
pub struct TfProfile {
    /// Chemical potential above the potential minimum, J.
    pub mu: f64,
    pub n_atoms: f64,
    pub g_int: f64,
    pub u_min: f64,
    pub z_min: f64,
    /// Harmonic-approximation radii `sqrt(2 mu / U_ii)`, m.
    pub tf_radii: [f64; 3],
    pub spilled: bool,
    tp: TrapPotential,
    z_barrier: Option<f64>,
}

impl TfProfile {
    pub fn new(cfg: &TrapConfiguration, n_atoms: f64) -> Result<Self> {
        let mut basin = Basin::new(cfg)?;
        Self::from_basin(&mut basin, n_atoms)
    }

    pub fn from_basin(basin: &mut Basin, n_atoms: f64) -> Result<Self> {
        let (mu, spilled) = basin.solve_mu(n_atoms)?;
        let report = basin.report.clone();
        let h = basin.tp.hessian_diag_on_axis(report.z_min)?;
        Ok(TfProfile {
            mu,
            n_atoms,
            g_int: basin.g_int,
            u_min: report.u_min,
            z_min: report.z_min,
            tf_radii: h.map(|k| if k > 0.0 { (2.0 * mu / k).sqrt() } else { f64::INFINITY }),
            spilled,
            tp: basin.tp.clone(),
            z_barrier: report.z_barrier,
        })
    }

    pub fn peak_density(&self) -> f64 {
        self.mu / self.g_int
    }

    /// Density at `p`, m^-3. Zero on the surface side of the barrier.
    pub fn density_at(&self, p: Point3) -> f64 {
        if p.z < self.tp.z_floor() {
            return 0.0;
        }
        if let Some(zb) = self.z_barrier {
            if p.z <= zb {
                return 0.0;
            }
            if p.z < 2.0 * zb {
                // off-axis ridges shift slightly outward
                let f = |z: f64| self.tp.eval(Point3::new(p.x, p.y, z));
                let (z_ridge, _) = golden_section_max(f, self.tp.z_floor(), 2.0 * zb, 1e-13);
                if p.z <= z_ridge {
                    return 0.0;
                }
            }
        }
        ((self.mu - (self.tp.eval(p) - self.u_min)) / self.g_int).max(0.0)
    }
}

/// Chemical potential of `n_atoms` condensed atoms in the trap of `cfg`, J.
pub fn tf_chemical_potential(cfg: &TrapConfiguration, n_atoms: f64) -> Result<f64> {
    Basin::new(cfg)?.solve_mu(n_atoms).map(|r| r.0)
}

/// Thomas-Fermi density `max(0, mu - (U(p) - U_min)) / g`, m^-3.
pub fn tf_density(cfg: &TrapConfiguration, mu: f64, p: Point3) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::OutOfRange(format!("mu must be >= 0, got {mu}")));
    }
    let tp = TrapPotential::new(cfg)?;
    let u = tp.total(p)?;
    let report = characterize_with(&tp, default_window(cfg), default_saddle_window(cfg))?;
    Ok(density_formula(mu, u - report.u_min, interaction_constant(cfg)))
}

#[inline]
pub(crate) fn density_formula(mu: f64, v: f64, g_int: f64) -> f64 {
    ((mu - v) / g_int).max(0.0)
}

/// Energy spread of the cloud; the chemical potential.
pub fn energy_spread(cfg: &TrapConfiguration, n_atoms: f64) -> Result<f64> {
    tf_chemical_potential(cfg, n_atoms)
}
