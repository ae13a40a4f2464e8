//! Experiment orchestration: single runs with invariant reports,
//! convergence sweeps against a reference solution, and entropy-residual
//! suites — plus all CSV/JSON artifact emission.
//!
//! Everything here is deterministic: fixed step policies, fixed quadrature
//! tolerances, no randomness, and parallel sweeps merged in request order,
//! so identical configs produce byte-identical outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::density::InitialDensity;
use crate::entropy::{kruzkov_residual, BumpTestFunction};
use crate::error::{Error, Result};
use crate::fields::{density_field, velocity_field};
use crate::ftl::{check_spacing_bounds, simulate, FtlState, Trajectory};
use crate::godunov::{GodunovScheme, GridSolution};
use crate::riemann::ExactSolution;
use crate::velocity::VelocityModel;

/// Acceptance tolerance on the gap lower bound `y ≥ 1`.
const TOL_SPACING_LOWER: f64 = 1e-12;
/// Acceptance tolerance on the gap growth bound.
const TOL_SPACING_UPPER: f64 = 1e-8;
/// Allowed increase of the variation sequences between snapshots.
const TOL_TV: f64 = 1e-8;
/// Allowed drift of the reconstructed mass from `(n−1)·ell`.
const TOL_MASS: f64 = 1e-10;
/// Slack on the L1 time-Lipschitz bound.
const TOL_LIPSCHITZ: f64 = 1e-6;
/// Snapshot count used inside each bump's time support.
const SNAPSHOTS_PER_BUMP: usize = 64;
/// Sample count when tabulating a closed-form reference profile.
const REFERENCE_SAMPLES: usize = 2000;

/// One pass/fail line of a report. `observed` is a violation measure whose
/// comparison against `tolerance` decided `pass` (smaller is better).
#[derive(Clone, Debug, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InvariantResult {
    fn leq(name: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        InvariantResult {
            name: name.into(),
            observed,
            tolerance,
            pass: observed <= tolerance,
        }
    }

    fn strictly_below(name: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        InvariantResult {
            name: name.into(),
            observed,
            tolerance,
            pass: observed < tolerance,
        }
    }
}

/// Machine-readable outcome of one CLI invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub mode: String,
    pub model: String,
    pub n_values: Vec<usize>,
    pub ell_values: Vec<f64>,
    pub invariants: Vec<InvariantResult>,
    pub pass: bool,
}

fn finish_report(
    mode: Mode,
    model: &VelocityModel,
    n_values: Vec<usize>,
    invariants: Vec<InvariantResult>,
    out_dir: &Path,
    quiet: bool,
) -> Result<Report> {
    let report = Report {
        mode: mode.name().to_string(),
        model: model.name().to_string(),
        ell_values: n_values.iter().map(|&n| 1.0 / (n as f64 + 1.0)).collect(),
        n_values,
        pass: invariants.iter().all(|i| i.pass),
        invariants,
    };
    let file = File::create(out_dir.join("report.json"))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    if !quiet {
        for inv in &report.invariants {
            println!(
                "[{}] {} (observed {:e}, tolerance {:e})",
                if inv.pass { "PASS" } else { "FAIL" },
                inv.name,
                inv.observed,
                inv.tolerance
            );
        }
        println!(
            "{}: {}",
            report.mode,
            if report.pass { "all checks passed" } else { "CHECKS FAILED" }
        );
    }
    Ok(report)
}

fn prepare(config: &ExperimentConfig, mode: Mode) -> Result<(VelocityModel, InitialDensity, Vec<f64>)> {
    config.validate(mode)?;
    let model = config.velocity_model()?;
    let density = config.build_density()?.normalize()?;
    let mut times = config.output_times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    Ok((model, density, times))
}

/// Snapshot of a trajectory at a previously requested time.
fn snapshot_at(traj: &Trajectory, t: f64) -> Result<&FtlState> {
    traj.snapshots
        .iter()
        .find(|s| (s.t() - t).abs() <= 1e-10 * t.abs().max(1.0))
        .ok_or_else(|| Error::Domain(format!("no snapshot recorded at time {t}")))
}

/// Uniform times filling a bump's closed time support.
fn bump_times(bump: &BumpTestFunction) -> Vec<f64> {
    let (lo, hi) = bump.t_support();
    let lo = lo.max(0.0);
    (0..SNAPSHOTS_PER_BUMP)
        .map(|j| lo + (hi - lo) * j as f64 / (SNAPSHOTS_PER_BUMP - 1) as f64)
        .collect()
}

fn merge_times(base: &[f64], extra: Vec<f64>) -> Vec<f64> {
    let mut all: Vec<f64> = base.iter().copied().chain(extra).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);
    all
}

fn fmt_time(t: f64) -> String {
    format!("{t}")
}

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

/// Simulate one platoon, write trajectory/field CSVs, and check every
/// structural invariant of the run; `pass` in the returned report is the
/// all-clear (the CLI maps a failure to its invariant-breach exit code).
pub fn run_single(config: &ExperimentConfig, out_dir: &Path, quiet: bool) -> Result<Report> {
    let (model, density, times) = prepare(config, Mode::Single)?;
    fs::create_dir_all(out_dir)?;
    let n = config.n.expect("validated");
    let layout = density.initial_positions(n)?;
    let traj = simulate(&layout, &model, config.t_end, &times, config.cfl_particle)?;

    write_trajectory_csv(&out_dir.join("trajectory.csv"), &traj, &model)?;
    for snap in &traj.snapshots {
        let name = format!("fields_t{}.csv", fmt_time(snap.t()));
        write_fields_csv(&out_dir.join(name), snap, &model)?;
    }

    // Invariant sequence: the initial state followed by every snapshot.
    let mut states: Vec<&FtlState> = Vec::with_capacity(traj.snapshots.len() + 1);
    if traj.snapshots.first().is_none_or(|s| s.t() > 1e-15) {
        states.push(&traj.initial);
    }
    states.extend(traj.snapshots.iter());

    let mut invariants = Vec::new();

    let bounds = check_spacing_bounds(&traj);
    invariants.push(InvariantResult::leq(
        "spacing_lower_bound",
        -bounds.worst_lower,
        TOL_SPACING_LOWER,
    ));
    invariants.push(InvariantResult::leq(
        "spacing_upper_bound",
        -bounds.worst_upper,
        TOL_SPACING_UPPER,
    ));

    let mut worst_rho_increase = f64::NEG_INFINITY;
    let mut worst_speed_increase = f64::NEG_INFINITY;
    for w in states.windows(2) {
        worst_rho_increase =
            worst_rho_increase.max(w[1].density_variation() - w[0].density_variation());
        worst_speed_increase = worst_speed_increase
            .max(w[1].speed_variation(&model) - w[0].speed_variation(&model));
    }
    invariants.push(InvariantResult::leq(
        "density_variation_diminishing",
        worst_rho_increase,
        TOL_TV,
    ));
    invariants.push(InvariantResult::leq(
        "speed_variation_diminishing",
        worst_speed_increase,
        TOL_TV,
    ));

    let expected_mass = (n as f64 - 1.0) * layout.ell;
    let fields: Vec<_> = states.iter().map(|s| density_field(s)).collect();
    let mass_dev = fields
        .iter()
        .map(|f| (f.mass() - expected_mass).abs())
        .fold(0.0f64, f64::max);
    invariants.push(InvariantResult::leq("mass_conservation", mass_dev, TOL_MASS));

    let lipschitz_const = density_field(&traj.initial).total_variation()
        + velocity_field(&traj.initial, &model).total_variation();
    let mut worst_excess = f64::NEG_INFINITY;
    for (pair_s, pair_f) in states.windows(2).zip(fields.windows(2)) {
        let dt = pair_s[1].t() - pair_s[0].t();
        if dt <= 0.0 {
            continue;
        }
        let l1 = pair_f[1].l1_distance(&pair_f[0]);
        worst_excess = worst_excess.max(l1 - dt * lipschitz_const);
    }
    if worst_excess.is_finite() {
        invariants.push(InvariantResult::leq(
            "l1_time_lipschitz",
            worst_excess,
            TOL_LIPSCHITZ,
        ));
    }

    finish_report(Mode::Single, &model, vec![n], invariants, out_dir, quiet)
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory, model: &VelocityModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,i,z_left,z_right,y,rho,V")?;
    for snap in &traj.snapshots {
        let p = snap.positions();
        let y = snap.spacings();
        let rho = snap.densities();
        let v = snap.speeds(model);
        let n = snap.n();
        for i in 0..n {
            if i + 1 < n {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    snap.t(),
                    i,
                    p[i],
                    p[i + 1],
                    y[i],
                    rho[i],
                    v[i]
                )?;
            } else {
                writeln!(w, "{},{},{},inf,inf,0,{}", snap.t(), i, p[i], v[i])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_fields_csv(path: &Path, state: &FtlState, model: &VelocityModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "z_left,z_right,rho,V")?;
    let p = state.positions();
    let rho = state.densities();
    let v = state.speeds(model);
    for i in 0..state.n() - 1 {
        writeln!(w, "{},{},{},{}", p[i], p[i + 1], rho[i], v[i])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

enum Reference {
    /// Closed-form evolution (Greenshields data whose waves stay separated
    /// through t_end).
    Exact(ExactSolution),
    /// Fine-grid finite-volume solution with snapshots at the comparison
    /// times.
    Grid(GridSolution),
}

struct SweepRow {
    t: f64,
    l1_error: f64,
    tv_rho: f64,
    min_spacing_margin: f64,
}

struct SweepResult {
    n: usize,
    ell: f64,
    rows: Vec<SweepRow>,
    worst_entropy_residual: f64,
}

/// Sweep the vehicle counts of `n_list`, comparing each reconstructed
/// density against the reference solution at every output time. `pass` in
/// the report means the L1 errors decreased strictly at every time.
pub fn run_convergence(config: &ExperimentConfig, out_dir: &Path, quiet: bool) -> Result<Report> {
    let (model, density, times) = prepare(config, Mode::Converge)?;
    fs::create_dir_all(out_dir)?;

    let reference = build_reference(config, &model, &density, &times)?;
    write_reference_csvs(out_dir, &reference, &times, config.t_end)?;

    let bumps: Vec<BumpTestFunction> = config
        .phis
        .iter()
        .map(|p| p.to_bump())
        .collect::<Result<_>>()?;
    let want_residuals = !config.entropy_ks.is_empty() && !bumps.is_empty();
    let sim_times = if want_residuals {
        merge_times(&times, bumps.iter().flat_map(bump_times).collect())
    } else {
        times.clone()
    };

    let results: Vec<SweepResult> = config
        .n_list
        .par_iter()
        .map(|&n| -> Result<SweepResult> {
            let layout = density.initial_positions(n)?;
            let traj = simulate(&layout, &model, config.t_end, &sim_times, config.cfl_particle)?;
            let mut rows = Vec::with_capacity(times.len());
            for &t in &times {
                let state = snapshot_at(&traj, t)?;
                let field = density_field(state);
                let l1_error = match &reference {
                    Reference::Exact(ex) => ex.at_time(t)?.l1_distance(&field, None),
                    Reference::Grid(sol) => {
                        let idx = grid_snapshot_index(sol, t)?;
                        field.l1_distance(&sol.step_function(idx))
                    }
                };
                let min_spacing_margin = state
                    .spacings()
                    .iter()
                    .map(|y| y - 1.0)
                    .fold(f64::INFINITY, f64::min);
                rows.push(SweepRow {
                    t,
                    l1_error,
                    tv_rho: field.total_variation(),
                    min_spacing_margin,
                });
            }
            let worst_entropy_residual = if want_residuals {
                let mut worst = f64::INFINITY;
                for &k in &config.entropy_ks {
                    for bump in &bumps {
                        worst = worst.min(kruzkov_residual(&traj, k, bump)?);
                    }
                }
                worst
            } else {
                f64::NAN
            };
            Ok(SweepResult {
                n,
                ell: layout.ell,
                rows,
                worst_entropy_residual,
            })
        })
        .collect::<Result<_>>()?;

    write_convergence_csv(&out_dir.join("convergence.csv"), &results)?;

    let mut invariants = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        let mut worst_step = f64::NEG_INFINITY;
        for pair in results.windows(2) {
            worst_step = worst_step.max(pair[1].rows[ti].l1_error - pair[0].rows[ti].l1_error);
        }
        invariants.push(InvariantResult::strictly_below(
            format!("l1_strictly_decreasing_t{}", fmt_time(t)),
            worst_step,
            0.0,
        ));
    }

    finish_report(
        Mode::Converge,
        &model,
        config.n_list.clone(),
        invariants,
        out_dir,
        quiet,
    )
}

fn build_reference(
    config: &ExperimentConfig,
    model: &VelocityModel,
    density: &InitialDensity,
    times: &[f64],
) -> Result<Reference> {
    if model.name() == "greenshields" {
        if let Ok(exact) = ExactSolution::greenshields(&density.to_step_function()) {
            if exact.valid_until() > config.t_end {
                return Ok(Reference::Exact(exact));
            }
        }
    }
    let scheme = GodunovScheme::new(model)?;
    let n_max = *config.n_list.last().expect("validated non-empty");
    let cells = config.reference_cells.unwrap_or(8 * n_max);
    let sol = scheme.solve(density, cells, config.t_end, times, config.cfl_grid)?;
    Ok(Reference::Grid(sol))
}

fn grid_snapshot_index(sol: &GridSolution, t: f64) -> Result<usize> {
    sol.snapshots
        .iter()
        .position(|s| (s.t - t).abs() <= 1e-10 * t.abs().max(1.0))
        .ok_or_else(|| Error::Domain(format!("reference has no snapshot at time {t}")))
}

fn write_reference_csvs(
    out_dir: &Path,
    reference: &Reference,
    times: &[f64],
    t_end: f64,
) -> Result<()> {
    for &t in times {
        let path = out_dir.join(format!("reference_t{}.csv", fmt_time(t)));
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "t,x_center,rho")?;
        match reference {
            Reference::Exact(ex) => {
                let profile = ex.at_time(t)?;
                // Tabulate over the initial support padded the same way the
                // grid solver pads (unit wave-speed bound for this model).
                let bps = profile.breakpoints();
                let pad = 1.1 * t_end;
                let (lo, hi) = (bps[0] - pad, bps[bps.len() - 1] + pad);
                let dx = (hi - lo) / REFERENCE_SAMPLES as f64;
                for i in 0..REFERENCE_SAMPLES {
                    let x = lo + (i as f64 + 0.5) * dx;
                    writeln!(w, "{},{},{}", t, x, profile.eval(x))?;
                }
            }
            Reference::Grid(sol) => {
                let idx = grid_snapshot_index(sol, t)?;
                let centers = sol.x_centers();
                for (x, u) in centers.iter().zip(&sol.snapshots[idx].averages) {
                    writeln!(w, "{},{},{}", t, x, u)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn write_convergence_csv(path: &Path, results: &[SweepResult]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "N,ell,t,l1_error,tv_rho,min_spacing_margin,worst_entropy_residual,order"
    )?;
    for (ri, res) in results.iter().enumerate() {
        for (ti, row) in res.rows.iter().enumerate() {
            let order = if ri == 0 {
                f64::NAN
            } else {
                let prev = &results[ri - 1];
                let e_prev = prev.rows[ti].l1_error;
                let e_cur = row.l1_error;
                if e_prev > 0.0 && e_cur > 0.0 {
                    (e_prev / e_cur).ln() / (prev.ell / res.ell).ln()
                } else {
                    f64::NAN
                }
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                res.n,
                res.ell,
                row.t,
                row.l1_error,
                row.tv_rho,
                row.min_spacing_margin,
                res.worst_entropy_residual,
                order
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Entropy suites
// ---------------------------------------------------------------------------

/// Evaluate the entropy residual for every (n, k, bump) triple and check
/// that each (k, bump) pair's negative part is non-increasing in n.
pub fn run_entropy_suite(config: &ExperimentConfig, out_dir: &Path, quiet: bool) -> Result<Report> {
    let (model, density, times) = prepare(config, Mode::Entropy)?;
    fs::create_dir_all(out_dir)?;
    let bumps: Vec<BumpTestFunction> = config
        .phis
        .iter()
        .map(|p| p.to_bump())
        .collect::<Result<_>>()?;
    let sim_times = merge_times(&times, bumps.iter().flat_map(bump_times).collect());

    // residuals[i][j] = value for n_list[i] at the j-th (k, bump) pair.
    let residuals: Vec<(f64, Vec<f64>)> = config
        .n_list
        .par_iter()
        .map(|&n| -> Result<(f64, Vec<f64>)> {
            let layout = density.initial_positions(n)?;
            let traj = simulate(&layout, &model, config.t_end, &sim_times, config.cfl_particle)?;
            let mut values = Vec::with_capacity(config.entropy_ks.len() * bumps.len());
            for &k in &config.entropy_ks {
                for bump in &bumps {
                    values.push(kruzkov_residual(&traj, k, bump)?);
                }
            }
            Ok((layout.ell, values))
        })
        .collect::<Result<_>>()?;

    let mut w = BufWriter::new(File::create(out_dir.join("entropy.csv"))?);
    writeln!(w, "N,ell,k,phi_center_t,phi_center_z,residual")?;
    for (i, &n) in config.n_list.iter().enumerate() {
        let (ell, values) = &residuals[i];
        let mut idx = 0;
        for &k in &config.entropy_ks {
            for bump in &bumps {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    n,
                    ell,
                    k,
                    bump.t_center(),
                    bump.z_center(),
                    values[idx]
                )?;
                idx += 1;
            }
        }
    }
    w.flush()?;

    let mut invariants = Vec::new();
    let mut idx = 0;
    for &k in &config.entropy_ks {
        for (bi, _) in bumps.iter().enumerate() {
            let mut worst_increase = f64::NEG_INFINITY;
            for pair in residuals.windows(2) {
                let neg_coarse = (-pair[0].1[idx]).max(0.0);
                let neg_fine = (-pair[1].1[idx]).max(0.0);
                worst_increase = worst_increase.max(neg_fine - neg_coarse);
            }
            invariants.push(InvariantResult::leq(
                format!("negative_part_nonincreasing_k{k}_phi{bi}"),
                worst_increase,
                1e-12,
            ));
            idx += 1;
        }
    }

    finish_report(
        Mode::Entropy,
        &model,
        config.n_list.clone(),
        invariants,
        out_dir,
        quiet,
    )
}
