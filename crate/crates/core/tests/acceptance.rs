//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p surftrap-core --test acceptance`. Criteria listed in
//! `KNOWN_RED` are evaluated and reported like the others but do not change the exit
//! status.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surftrap_core::app::{run_subcommand, ScenarioConfig, PRESETS, SUBCOMMANDS};
use surftrap_core::condensate::{harmonic_tf_mu, Basin, TfProfile};
use surftrap_core::constants::{
    compute_c4, perfect_conductor_c4, rb87_default, C4Source, PhysicalConstants, SurfaceMaterial,
};
use surftrap_core::dynamics::{
    calibrate_attempt_rate, survival_curve, transmission_between, SurvivalRow,
};
use surftrap_core::landscape::{characterize, fit_two_regimes, sweep_z0};
use surftrap_core::potential::{penetration_depth, Point3, TrapConfiguration, TrapPotential};
use surftrap_core::spectroscopy::{fit_quadratic_rise, rf_map, rf_resonance, RfPoint};

const KNOWN_RED: &[&str] = &["8a"];

struct Check {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    run: fn() -> Result<String, String>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::preset(name).expect("shipped preset")
}

// ---------------------------------------------------------------- 1

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn decimal(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits = BigInt::from_str(&format!("{int}{frac}")).unwrap();
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    BigRational::new(digits, scale)
}

fn c4_oracle(eps: &str, phi: &str) -> (BigRational, BigRational) {
    let c = PhysicalConstants::CODATA2018;
    let sp = rb87_default();
    let pi = decimal("3.14159265358979323846264338327950288419716939937510582097494");
    let four = BigRational::from_integer(4.into());
    let three = BigRational::from_integer(3.into());
    let eight = BigRational::from_integer(8.into());
    let prefactor = BigRational::one() / (four * pi.clone() * rational(c.eps0));
    let retarded = three * rational(c.hbar) * rational(c.c) * rational(sp.alpha0) / (eight * pi);
    let eps = decimal(eps);
    let one = BigRational::one();
    let dielectric = (eps.clone() - one.clone()) / (eps + one) * decimal(phi);
    (prefactor * retarded, dielectric)
}

fn c1_casimir_polder() -> Result<String, String> {
    let sp = rb87_default();
    let c = PhysicalConstants::CODATA2018;
    let (bare, factor) = c4_oracle("2.25", "0.29");
    let oracle = (bare.clone() * factor.clone()).to_f64().unwrap();
    let c4 = compute_c4(&SurfaceMaterial::glass(), &sp, &c);
    let err = rel(c4.value, oracle);
    let ratio = factor.to_f64().unwrap();
    let bare = bare.to_f64().unwrap();
    let pc = perfect_conductor_c4(&sp, &c);
    let over = compute_c4(&SurfaceMaterial::glass_figure_c4(), &sp, &c);
    // the quoted 1.78e-55 is the bare prefactor rounded to three figures
    let bare_3sf = format!("{bare:.2e}");
    ensure(
        err < 1e-6
            && (ratio - 0.1115).abs() <= 1e-4
            && c4.source == C4Source::Formula
            && rel(pc, bare) < 1e-12
            && bare_3sf == "1.78e-55"
            && over.value == 1.78e-55
            && over.source == C4Source::Override,
        format!(
            "C4 = {:.5e} J m^4 (rel err {err:.1e}), (eps-1)/(eps+1)*Phi = {ratio:.5}, bare = {bare:.4e} -> {bare_3sf}",
            c4.value
        ),
    )
}

// ---------------------------------------------------------------- 2

fn c2_penetration_depth() -> Result<String, String> {
    let cfg = TrapConfiguration::figure_defaults();
    let mut surface = SurfaceMaterial::glass();
    let oracle = |n: f64| {
        let s = n * 47.5f64.to_radians().sin();
        765e-9 / (2.0 * PI * (s * s - 1.0).sqrt())
    };
    let lp = penetration_depth(&cfg.beam, &surface).map_err(|e| e.to_string())?;
    surface.n_index = 1.52;
    let lp152 = penetration_depth(&cfg.beam, &surface).map_err(|e| e.to_string())?;
    ensure(
        (lp - 257.8e-9).abs() <= 0.1e-9
            && rel(lp, oracle(1.5)) < 1e-12
            && rel(lp152, 243e-9) <= 0.01
            && rel(lp152, oracle(1.52)) < 1e-12,
        format!(
            "n=1.5: {:.3} nm, n=1.52: {:.2} nm ({:.2}% from 243 nm)",
            lp * 1e9,
            lp152 * 1e9,
            rel(lp152, 243e-9) * 100.0
        ),
    )
}

// ---------------------------------------------------------------- 3

fn c3_regime_fit() -> Result<String, String> {
    let sc = scenario("paper-fig4-sweep");
    let cfg = sc.trap_configuration();
    let table = sweep_z0(&cfg, &sc.sweep.z0_list).map_err(|e| e.to_string())?;
    let fit = fit_two_regimes(&table).map_err(|e| e.to_string())?;
    let sag = cfg.gravitational_sag();
    let sag_oracle = cfg.consts.g_accel / (2.0 * PI * 200.0f64).powi(2);
    // measured sag at the top of the sweep, deep in regime (i)
    let (z0_top, zmin_top) = *table.trapped_points().iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let measured = zmin_top - z0_top;
    ensure(
        (fit.slope_i - 1.0).abs() <= 0.02
            && fit.slope_ii <= 0.02
            && rel(measured, sag_oracle) <= 0.01
            && rel(sag, sag_oracle) < 1e-12,
        format!(
            "slope_i = {:.5}, slope_ii = {:.5}, breakpoint = {:.2} um, sag = {:.4} um (g/w^2 = {:.4} um; 10 um quoted)",
            fit.slope_i,
            fit.slope_ii,
            fit.breakpoint_z0 * 1e6,
            measured * 1e6,
            sag_oracle * 1e6
        ),
    )
}

// ---------------------------------------------------------------- 4

fn c4_barrier() -> Result<String, String> {
    let cfg = scenario("paper-fig2").trap_configuration().with_z0(-15e-6);
    let r = characterize(&cfg).map_err(|e| e.to_string())?;
    let zb = r.z_barrier.ok_or("no barrier")?;
    // independent check: dense scan for the maximum between the floor and the minimum
    let tp = TrapPotential::new(&cfg).map_err(|e| e.to_string())?;
    let n = 20_000;
    let (mut zbest, mut ubest) = (0.0, f64::NEG_INFINITY);
    for i in 0..=n {
        let z = 10e-9 + (r.z_min - 10e-9) * i as f64 / n as f64;
        let u = tp.on_axis(z);
        if u > ubest {
            zbest = z;
            ubest = u;
        }
    }
    let step = (r.z_min - 10e-9) / n as f64;
    ensure(
        r.has_trap && (100e-9..=500e-9).contains(&zb) && (zb - zbest).abs() <= 2.0 * step,
        format!(
            "z_barrier = {:.1} nm (scan {:.1} nm), z_min = {:.4} um",
            zb * 1e9,
            zbest * 1e9,
            r.z_min * 1e6
        ),
    )
}

// ---------------------------------------------------------------- 5

/// Barrier energy of the column at `x`: the highest point between the floor and the
/// deepest interior minimum of a dense log grid.
fn column_ridge(tp: &TrapPotential, x: f64, zs: &[f64]) -> Option<(f64, f64)> {
    let us: Vec<f64> = zs.iter().map(|&z| tp.eval(Point3::new(x, 0.0, z))).collect();
    let imin = (1..us.len() - 1)
        .filter(|&i| us[i] <= us[i - 1] && us[i] <= us[i + 1])
        .min_by(|&a, &b| us[a].total_cmp(&us[b]))?;
    let imax = (0..imin).max_by(|&a, &b| us[a].total_cmp(&us[b]))?;
    (imax > 0 && us[imax] > us[imin]).then_some((zs[imax], us[imax]))
}

fn c5_saddle() -> Result<String, String> {
    let cfg = scenario("paper-fig2").trap_configuration().with_z0(-15e-6);
    let r = characterize(&cfg).map_err(|e| e.to_string())?;
    let xs_impl = r.saddle_x.ok_or("no saddle reported")?;
    let es_impl = r.saddle_energy.unwrap();
    let tp = TrapPotential::new(&cfg).map_err(|e| e.to_string())?;
    let nz = 3000;
    let zs: Vec<f64> = (0..nz)
        .map(|i| (1e-9f64.ln() + (3e-6f64 / 1e-9).ln() * i as f64 / (nz - 1) as f64).exp())
        .collect();
    let dx = 0.25e-6;
    let ridge: Vec<(f64, Option<(f64, f64)>)> = (0..=600)
        .map(|i| {
            let x = i as f64 * dx;
            (x, column_ridge(&tp, x, &zs))
        })
        .collect();
    // interior local minimum of the ridge energy along x
    let mut best: Option<(f64, f64, f64)> = None;
    for w in ridge.windows(3) {
        if let (Some(a), Some(b), Some(c)) = (w[0].1, w[1].1, w[2].1) {
            if b.1 <= a.1 && b.1 <= c.1 && best.is_none_or(|q| b.1 < q.2) {
                best = Some((w[1].0, b.0, b.1));
            }
        }
    }
    let (xs_grid, zs_grid, es_grid) = best.ok_or("grid oracle found no saddle")?;
    ensure(
        (xs_impl - 70e-6).abs() <= 15e-6
            && (xs_impl - xs_grid).abs() <= 2.0 * dx
            && rel(es_impl - r.u_min, es_grid - r.u_min) < 1e-3
            && es_impl < r.u_barrier.unwrap(),
        format!(
            "x_saddle = {:.2} um (grid {:.2} um), z_saddle = {:.0} nm (grid {:.0} nm), E_saddle - U_min = {:.3} uK",
            xs_impl * 1e6,
            xs_grid * 1e6,
            r.saddle_z.unwrap() * 1e9,
            zs_grid * 1e9,
            cfg.consts.joule_to_microkelvin(es_impl - r.u_min)
        ),
    )
}

// ---------------------------------------------------------------- 6

fn harmonic_config() -> TrapConfiguration {
    let mut cfg = TrapConfiguration::figure_defaults().with_z0(60e-6);
    let w = 2.0 * PI * 100.0;
    cfg.magnet.omega_x = w;
    cfg.magnet.omega_y = w;
    cfg.magnet.omega_z = w;
    cfg.ew_enabled = false;
    cfg.cp_enabled = false;
    cfg.gravity_enabled = false;
    cfg
}

/// Integral of the density over a box by uniform sampling.
fn mc_atom_number(prof: &TfProfile, lo: [f64; 3], hi: [f64; 3], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol: f64 = (0..3).map(|k| hi[k] - lo[k]).product();
    let mut sum = 0.0;
    for _ in 0..samples {
        let p = Point3::new(
            rng.random_range(lo[0]..hi[0]),
            rng.random_range(lo[1]..hi[1]),
            rng.random_range(lo[2]..hi[2]),
        );
        sum += prof.density_at(p);
    }
    sum / samples as f64 * vol
}

fn c6_thomas_fermi() -> Result<String, String> {
    let n = 1e5;
    let cfg = harmonic_config();
    let prof = TfProfile::new(&cfg, n).map_err(|e| e.to_string())?;
    let closed = harmonic_tf_mu(2.0 * PI * 100.0, n, 5.31e-9, cfg.species.mass, cfg.consts.hbar);
    let mu_err = rel(prof.mu, closed);
    let r = (2.0 * prof.mu / (cfg.species.mass * (2.0 * PI * 100.0f64).powi(2))).sqrt() * 1.05;
    let z = prof.z_min;
    let n_h = mc_atom_number(&prof, [-r, -r, z - r], [r, r, z + r], 2_000_000, 7);

    // the surface trap at z0 = -15 um; box from the surface to beyond the cloud edge
    let tcfg = scenario("paper-fig2").trap_configuration().with_z0(-15e-6);
    let mut basin = Basin::new(&tcfg).map_err(|e| e.to_string())?;
    let tprof = TfProfile::from_basin(&mut basin, n).map_err(|e| e.to_string())?;
    let tp = TrapPotential::new(&tcfg).map_err(|e| e.to_string())?;
    let v = |x: f64, y: f64, z: f64| tp.eval(Point3::new(x, y, z)) - tprof.u_min;
    let reach = |f: &dyn Fn(f64) -> f64| {
        let mut d = 1e-7;
        while f(d) < tprof.mu {
            d *= 1.1;
        }
        d * 1.1
    };
    let rx = reach(&|d| v(d, 0.0, tprof.z_min));
    let ry = reach(&|d| v(0.0, d, tprof.z_min));
    let rz = reach(&|d| v(0.0, 0.0, tprof.z_min + d));
    let n_t = mc_atom_number(
        &tprof,
        [-rx, -ry, tcfg.z_floor],
        [rx, ry, tprof.z_min + rz],
        4_000_000,
        11,
    );
    ensure(
        mu_err <= 0.005 && rel(n_h, n) <= 0.005 && rel(n_t, n) <= 0.005,
        format!(
            "harmonic mu = {:.3} nK (closed form {:.3} nK, rel {mu_err:.1e}); MC N = {:.1} (harmonic), {:.1} (surface trap, mu = {:.1} nK)",
            prof.mu / cfg.consts.kb * 1e9,
            closed / cfg.consts.kb * 1e9,
            n_h,
            n_t,
            tprof.mu / cfg.consts.kb * 1e9
        ),
    )
}

// ---------------------------------------------------------------- 7

fn c7_spectroscopy() -> Result<String, String> {
    let sc = scenario("paper-fig4-sweep");
    let cfg = sc.trap_configuration();
    let sag = cfg.gravitational_sag();
    let pts: Vec<RfPoint> = rf_map(&cfg, &sc.sweep.z0_list)
        .into_iter()
        .filter(|r| r.z0 <= -sag)
        .map(|r| r.point)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let fit = fit_quadratic_rise(&pts, &cfg.species, &cfg.consts).map_err(|e| e.to_string())?;
    let w_in = 2.0 * PI * 200.0;

    // noiseless parabola at the quoted fitted frequency, generated independently
    let w195 = 2.0 * PI * 195.0;
    let sp = rb87_default();
    let c = PhysicalConstants::CODATA2018;
    let k = sp.mass * w195 * w195 / (2.0 * 1.0 * c.mu_b);
    let synth: Vec<RfPoint> = (0..20)
        .map(|i| {
            let z0 = -40e-6 + 2e-6 * i as f64;
            let b = 1e-4 + k * (0.4e-6 - z0).powi(2);
            RfPoint {
                z0,
                b_field: b,
                rf_freq: rf_resonance(b, &sp, &c),
                rf_uncertainty: 0.0,
            }
        })
        .collect();
    let fit195 = fit_quadratic_rise(&synth, &sp, &c).map_err(|e| e.to_string())?;
    ensure(
        rel(fit.omega_z, w_in) <= 0.03 && rel(fit195.omega_z, w195) <= 0.001,
        format!(
            "pipeline fit over {} points: 2pi x {:.3} Hz (input 200); synthetic: 2pi x {:.5} Hz (input 195)",
            pts.len(),
            fit.omega_z / (2.0 * PI),
            fit195.omega_z / (2.0 * PI)
        ),
    )
}

// ---------------------------------------------------------------- 8

fn loss_rows(name: &str, rate: Option<f64>) -> Result<(ScenarioConfig, Vec<SurvivalRow>), String> {
    let sc = scenario(name);
    let rows = survival_curve(
        &sc.trap_configuration(),
        &sc.ramp_spec(),
        sc.condensate.n_atoms,
        &sc.sweep.z0_list,
        rate,
    )
    .map_err(|e| e.to_string())?;
    Ok((sc, rows))
}

fn fractions(rows: &[SurvivalRow]) -> Result<Vec<f64>, String> {
    rows.iter()
        .map(|r| r.record.as_ref().map(|x| x.fraction).map_err(|e| e.to_string()))
        .collect()
}

fn monotone(f: &[f64]) -> bool {
    f.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

fn c8a_drop_position() -> Result<String, String> {
    let (sc, rows) = loss_rows("paper-fig5-loss-no-ew", None)?;
    let cfg = sc.trap_configuration();
    let sag = cfg.gravitational_sag();
    let f = fractions(&rows)?;
    let i = f.iter().position(|&s| s < 0.05).ok_or("survival never drops below 5%")?;
    let z0_drop = sc.sweep.z0_list[i];
    let z_drop = z0_drop + sag;
    // width of the cloud along z at the last point that still holds
    let last = sc.sweep.z0_list[i.saturating_sub(1)];
    let prof = TfProfile::new(&cfg.with_z0(last), sc.condensate.n_atoms).map_err(|e| e.to_string())?;
    let width = prof.tf_radii[2];
    ensure(
        (z_drop - 10e-6).abs() <= width,
        format!(
            "EW off: survival < 5% from z0 = {:.1} um, nominal z_min = {:.2} um; target 10 um +- {:.2} um",
            z0_drop * 1e6,
            z_drop * 1e6,
            width * 1e6
        ),
    )
}

fn c8b_calibration() -> Result<String, String> {
    let sc = scenario("paper-fig5-loss");
    let cfg = sc.trap_configuration();
    let deepest = sc.sweep.z0_list.iter().copied().fold(f64::INFINITY, f64::min);
    let ramp = sc.ramp_spec().with_end(deepest);
    let rate = calibrate_attempt_rate(&cfg, &ramp, sc.condensate.n_atoms, 0.5).map_err(|e| e.to_string())?;
    let (_, rows) = loss_rows("paper-fig5-loss", Some(rate))?;
    let f = fractions(&rows)?;
    let at_deepest = f[sc.sweep.z0_list.iter().position(|&z| z == deepest).unwrap()];
    ensure(
        at_deepest >= 0.5 - 1e-9 && (at_deepest - 0.5).abs() < 1e-6,
        format!(
            "attempt rate {:.4e} Hz gives survival {:.6} at z0 = {:.0} um",
            rate,
            at_deepest,
            deepest * 1e6
        ),
    )
}

fn c8c_monotone() -> Result<String, String> {
    let sc = scenario("paper-fig5-loss");
    let deepest = sc.sweep.z0_list.iter().copied().fold(f64::INFINITY, f64::min);
    let rate = calibrate_attempt_rate(
        &sc.trap_configuration(),
        &sc.ramp_spec().with_end(deepest),
        sc.condensate.n_atoms,
        0.5,
    )
    .map_err(|e| e.to_string())?;
    let on = fractions(&loss_rows("paper-fig5-loss", None)?.1)?;
    let on_cal = fractions(&loss_rows("paper-fig5-loss", Some(rate))?.1)?;
    let off = fractions(&loss_rows("paper-fig5-loss-no-ew", None)?.1)?;
    ensure(
        monotone(&on) && monotone(&on_cal) && monotone(&off),
        format!(
            "EW on: {:.3} -> {:.3}, calibrated: {:.3} -> {:.3}, EW off: {:.3} -> {:.3}",
            on[0],
            on[on.len() - 1],
            on_cal[0],
            on_cal[on_cal.len() - 1],
            off[0],
            off[off.len() - 1]
        ),
    )
}

fn c8d_rectangular_wkb() -> Result<String, String> {
    let sp = rb87_default();
    let c = PhysicalConstants::CODATA2018;
    let v0 = 1e-30;
    let mut worst: f64 = 0.0;
    for (e_frac, width) in [(0.2, 50e-9), (0.5, 100e-9), (0.9, 200e-9), (0.99, 400e-9)] {
        let e = e_frac * v0;
        let t = transmission_between(|_| v0, sp.mass, e, 0.0, width, c.hbar);
        let closed = (-2.0 * (2.0 * sp.mass * (v0 - e)).sqrt() * width / c.hbar).exp();
        worst = worst.max(rel(t, closed));
    }
    ensure(worst <= 1e-3, format!("worst relative deviation {worst:.2e}"))
}

// ---------------------------------------------------------------- 9

fn c9_determinism() -> Result<String, String> {
    let dir = std::env::temp_dir().join(format!("surftrap-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for preset in PRESETS {
        let sc = scenario(preset);
        for cmd in SUBCOMMANDS {
            let mut outputs = Vec::new();
            for (k, threads) in [Some(1), Some(4), Some(4)].into_iter().enumerate() {
                let path = dir.join(format!("{preset}-{cmd}-{k}.csv"));
                run_subcommand(cmd, &sc, &path, threads).map_err(|e| format!("{preset} {cmd}: {e}"))?;
                outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
            }
            if outputs.windows(2).any(|w| w[0] != w[1]) {
                let _ = std::fs::remove_dir_all(&dir);
                return Err(format!("{preset} {cmd}: outputs differ"));
            }
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{compared} preset x subcommand outputs identical over 1, 4, 4 threads"))
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let checks = [
        Check { id: "1", title: "C4 coefficient audit", budget: s(1), run: c1_casimir_polder },
        Check { id: "2", title: "penetration depth", budget: s(1), run: c2_penetration_depth },
        Check { id: "3", title: "two-regime fit of the z0 sweep", budget: s(30), run: c3_regime_fit },
        Check { id: "4", title: "barrier placement", budget: s(5), run: c4_barrier },
        Check { id: "5", title: "transverse saddle points", budget: s(60), run: c5_saddle },
        Check { id: "6", title: "Thomas-Fermi closure", budget: s(30), run: c6_thomas_fermi },
        Check { id: "7", title: "spectroscopy closure", budget: s(10), run: c7_spectroscopy },
        Check { id: "8a", title: "loss: EW-off drop position", budget: s(60), run: c8a_drop_position },
        Check { id: "8b", title: "loss: 50% survival reachable", budget: s(60), run: c8b_calibration },
        Check { id: "8c", title: "loss: monotone survival", budget: s(60), run: c8c_monotone },
        Check { id: "8d", title: "loss: rectangular WKB", budget: s(60), run: c8d_rectangular_wkb },
        Check { id: "9", title: "determinism", budget: s(120), run: c9_determinism },
    ];
    let mut unexpected = 0;
    for c in &checks {
        let t0 = Instant::now();
        let outcome = (c.run)();
        let dt = t0.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if dt <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        let known = KNOWN_RED.contains(&c.id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} [{}] {}: {detail} ({:.2} s)", c.id, c.title, dt.as_secs_f64());
        if !pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
