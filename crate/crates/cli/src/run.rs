use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ktc_core::diagnostics::{entropy_budgets, flux_error_field, MeasureRecorder, SnapshotRecorder};
use ktc_core::oracles::{stripe_initial_state, RiemannProblem};
use ktc_core::{run, DiagnosticsLedger, FluxModel, KineticState};

use crate::config::{Field, FluxChoice, InitialCondition, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{read_kinetic, write_diagnostics, write_kinetic, write_moments, DiagnosticsInput};

/// Overrides `output_dir` from the config when set.
pub const OUTPUT_DIR_ENV: &str = "KTC_OUTPUT_DIR";

pub const MOMENTS_FILE: &str = "moments.csv";
pub const KINETIC_FILE: &str = "kinetic.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const EXACT_FILE: &str = "riemann_exact.csv";

pub fn output_dir(config: &RunConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.output_dir.clone(),
    }
}

/// `v,A(v)` samples, one pair per line; `#` comments and a non-numeric
/// header line are skipped.
pub fn read_flux_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e.to_string()))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parsed = content
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some(p) => out.push(p),
            None if out.is_empty() => continue,
            None => return Err(CliError::file(path, format!("line {}: expected `v,A`", k + 1))),
        }
    }
    Ok(out)
}

pub fn build_flux(config: &RunConfig) -> Result<FluxModel> {
    match &config.flux {
        FluxChoice::Burgers => Ok(FluxModel::burgers(&config.grid)),
        FluxChoice::Table(path) => {
            let samples = read_flux_table(path)?;
            let name = path.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
            Ok(FluxModel::from_table(&config.grid, &name, &samples)?)
        }
    }
}

pub fn build_initial(config: &RunConfig) -> Result<KineticState> {
    let g = config.grid;
    match &config.initial {
        InitialCondition::Riemann { u_left, u_right, x0 } => {
            // Exact cell averages of the step.
            let u: Vec<f64> = (0..g.n_x())
                .map(|i| {
                    let frac = ((x0 - g.x_edge(i)) / g.dx()).clamp(0.0, 1.0);
                    frac * u_left + (1.0 - frac) * u_right
                })
                .collect();
            Ok(KineticState::equilibrium(g, &u)?)
        }
        InitialCondition::Stripe { h, .. } => {
            let delta = config.stripe_delta().unwrap_or_default();
            Ok(stripe_initial_state(&g, *h, delta)?)
        }
        InitialCondition::File(path) => {
            let file = File::open(path).map_err(|e| CliError::file(path, e.to_string()))?;
            let mut states = read_kinetic(BufReader::new(file))?;
            let mut s = states.pop().ok_or_else(|| CliError::file(path, "no snapshot in file"))?;
            if !s.grid().same_as(&g) {
                return Err(CliError::range("initial", "snapshot grid differs from the configured grid"));
            }
            // A loaded snapshot restarts the clock.
            s.t = 0.0;
            Ok(s)
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::file(&path, e.to_string()))?;
    Ok((path, BufWriter::new(f)))
}

#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub ledger: DiagnosticsLedger,
    pub snapshots: Vec<KineticState>,
    pub config_hash: String,
}

/// Runs the configured scheme and writes the requested fields into `dir`.
pub fn execute(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let flux = build_flux(config)?;
    let initial = build_initial(config)?;
    let hash = config.hash();
    let mut snaps = SnapshotRecorder::at_times(&config.snapshot_times, config.scheme.step_size());
    let mut measure = MeasureRecorder::default();
    log::info!(
        "{} run: {} steps of {} on {}x{} cells",
        config.scheme.scheme.name(),
        config.scheme.n_steps(),
        config.scheme.step_size(),
        config.grid.n_x(),
        config.grid.n_v()
    );
    let (_, ledger) = run(&config.scheme, &flux, initial, &mut [&mut snaps, &mut measure])?;

    std::fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e.to_string()))?;
    let mut files = Vec::new();
    for field in &config.fields {
        match field {
            Field::Moments => {
                let (p, mut w) = create(dir, MOMENTS_FILE)?;
                write_moments(&mut w, &snaps.snapshots, &hash)?;
                w.flush()?;
                files.push(p);
            }
            Field::Kinetic => {
                let (p, mut w) = create(dir, KINETIC_FILE)?;
                write_kinetic(&mut w, &snaps.snapshots, &hash, config.sparse)?;
                w.flush()?;
                files.push(p);
            }
            Field::Diagnostics => {
                let flux_error = snaps
                    .snapshots
                    .iter()
                    .map(|s| flux_error_field(s, &flux).map(|f| (s.t, f)))
                    .collect::<ktc_core::Result<Vec<_>>>()?;
                let (p, mut w) = create(dir, DIAGNOSTICS_FILE)?;
                write_diagnostics(
                    &mut w,
                    &DiagnosticsInput {
                        config_hash: &hash,
                        scheme: config.scheme.scheme.name(),
                        ledger: &ledger,
                        budgets: entropy_budgets(&ledger.reports, None),
                        flux_error: &flux_error,
                        m_measure: &measure.events,
                    },
                )?;
                w.flush()?;
                files.push(p);
            }
        }
    }
    Ok(RunSummary {
        files,
        ledger,
        snapshots: snaps.snapshots,
        config_hash: hash,
    })
}

/// Snapshot times snapped to whole steps, as the stepper records them.
pub fn snapped_times(config: &RunConfig) -> Vec<f64> {
    let dt = config.scheme.step_size();
    let mut out: Vec<f64> = config
        .snapshot_times
        .iter()
        .map(|&t| (t / dt).round() * dt)
        .collect();
    out.dedup();
    out
}

/// Writes exact Riemann cell averages (`t,x,u`) at the snapshot times.
pub fn write_riemann_exact(config: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let InitialCondition::Riemann { u_left, u_right, x0 } = config.initial else {
        return Err(CliError::range("initial", "riemann-exact needs `initial = riemann:uL,uR,x0`"));
    };
    let flux = build_flux(config)?;
    let problem = RiemannProblem::new(u_left, u_right, x0, flux)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e.to_string()))?;
    let (path, mut w) = create(dir, EXACT_FILE)?;
    writeln!(w, "# ktc exact riemann solution")?;
    writeln!(w, "# config_sha256 = {}", config.hash())?;
    writeln!(w, "t,x,u")?;
    let g = config.grid;
    for t in snapped_times(config) {
        let u = problem.cell_averages(&g, t)?;
        for (i, ui) in u.iter().enumerate() {
            writeln!(w, "{t:.16e},{:.16e},{ui:.16e}", g.x_center(i))?;
        }
    }
    w.flush()?;
    Ok(path)
}
