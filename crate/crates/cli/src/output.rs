//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! every value re-parses to the same bits.

use std::io::{BufRead, Write};

use ktc_core::diagnostics::{Budgets, FluxErrorField, MeasureSummary};
use ktc_core::scheme::EntropySample;
use ktc_core::{moments, Boundary, DiagnosticsLedger, GridSpec, KineticState, StepReport};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const MOMENTS_HEADER: &str = "t,x,u,entropy_moment";
pub const KINETIC_HEADER: &str = "t,x,v,f";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: message.into(),
    }
}

pub fn write_moments<W: Write>(mut w: W, states: &[KineticState], config_hash: &str) -> Result<()> {
    writeln!(w, "# ktc moments")?;
    writeln!(w, "# config_sha256 = {config_hash}")?;
    writeln!(w, "{MOMENTS_HEADER}")?;
    for s in states {
        let g = s.grid();
        let m = moments(s, None);
        for i in 0..g.n_x() {
            writeln!(
                w,
                "{},{},{},{}",
                num(s.t),
                num(g.x_center(i)),
                num(m.u[i]),
                num(m.entropy_moment[i])
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub entropy_moment: f64,
}

/// Numbered data rows and the `#` comment lines of a CSV.
type CsvBody = (Vec<(usize, String)>, Vec<String>);

fn data_lines<R: BufRead>(r: R, header: &str) -> Result<CsvBody> {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let n = k + 1;
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !seen_header {
            if line.trim() != header {
                return Err(parse_err(n, format!("expected header `{header}`, got `{line}`")));
            }
            seen_header = true;
        } else if !line.trim().is_empty() {
            rows.push((n, line));
        }
    }
    if !seen_header {
        return Err(parse_err(0, format!("missing header `{header}`")));
    }
    Ok((rows, comments))
}

fn fields<const N: usize>(n: usize, line: &str) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut parts = line.split(',');
    for slot in out.iter_mut() {
        let p = parts.next().ok_or_else(|| parse_err(n, format!("expected {N} columns")))?;
        *slot = p.trim().parse().map_err(|_| parse_err(n, format!("cannot parse `{p}`")))?;
    }
    if parts.next().is_some() {
        return Err(parse_err(n, format!("expected {N} columns")));
    }
    Ok(out)
}

pub fn read_moments<R: BufRead>(r: R) -> Result<Vec<MomentRow>> {
    let (rows, _) = data_lines(r, MOMENTS_HEADER)?;
    rows.iter()
        .map(|(n, line)| {
            let [t, x, u, entropy_moment] = fields::<4>(*n, line)?;
            Ok(MomentRow { t, x, u, entropy_moment })
        })
        .collect()
}

fn grid_line(g: &GridSpec) -> String {
    format!(
        "grid = {} {} {} {} {} {} {}",
        num(g.x_min()),
        num(g.x_max()),
        g.n_x(),
        num(g.v_min()),
        num(g.v_max()),
        g.n_v(),
        match g.boundary() {
            Boundary::Periodic => "periodic",
            Boundary::Outflow => "outflow",
        }
    )
}

fn parse_grid(s: &str) -> Option<GridSpec> {
    let p: Vec<&str> = s.split_whitespace().collect();
    if p.len() != 7 {
        return None;
    }
    let boundary = match p[6] {
        "periodic" => Boundary::Periodic,
        "outflow" => Boundary::Outflow,
        _ => return None,
    };
    GridSpec::new(
        p[0].parse().ok()?,
        p[1].parse().ok()?,
        p[2].parse().ok()?,
        p[3].parse().ok()?,
        p[4].parse().ok()?,
        p[5].parse().ok()?,
        boundary,
    )
    .ok()
}

/// Long-format `t,x,v,f`. With `sparse`, cells holding exactly zero are
/// omitted and the header says so.
pub fn write_kinetic<W: Write>(mut w: W, states: &[KineticState], config_hash: &str, sparse: bool) -> Result<()> {
    let Some(first) = states.first() else {
        return Err(CliError::range("fields", "no snapshot to write"));
    };
    writeln!(w, "# ktc kinetic snapshot")?;
    writeln!(w, "# config_sha256 = {config_hash}")?;
    writeln!(w, "# {}", grid_line(first.grid()))?;
    writeln!(w, "# sparse = {sparse}")?;
    writeln!(w, "{KINETIC_HEADER}")?;
    for s in states {
        let g = s.grid();
        for i in 0..g.n_x() {
            let x = num(g.x_center(i));
            for j in 0..g.n_v() {
                let f = s.get(i, j);
                if sparse && f == 0.0 {
                    continue;
                }
                writeln!(w, "{},{x},{},{}", num(s.t), num(g.v_center(j)), num(f))?;
            }
        }
    }
    Ok(())
}

/// Reloads every snapshot in a kinetic CSV, in file order.
pub fn read_kinetic<R: BufRead>(r: R) -> Result<Vec<KineticState>> {
    let (rows, comments) = data_lines(r, KINETIC_HEADER)?;
    let grid = comments
        .iter()
        .find_map(|c| c.strip_prefix("grid =").map(str::trim))
        .ok_or_else(|| parse_err(0, "missing `# grid = ...` header"))?;
    let grid = parse_grid(grid).ok_or_else(|| parse_err(0, format!("malformed grid header `{grid}`")))?;
    let locate = |n: usize, value: f64, lo: f64, step: f64, count: usize| -> Result<usize> {
        let k = ((value - lo) / step - 0.5).round();
        if !(k >= 0.0 && (k as usize) < count) || ((value - lo) / step - 0.5 - k).abs() > 1e-6 {
            return Err(parse_err(n, format!("{value} is not a cell center")));
        }
        Ok(k as usize)
    };
    let mut states: Vec<KineticState> = Vec::new();
    for (n, line) in &rows {
        let [t, x, v, f] = fields::<4>(*n, line)?;
        if states.last().is_none_or(|s| s.t.to_bits() != t.to_bits()) {
            let mut s = KineticState::zeros(grid);
            s.t = t;
            states.push(s);
        }
        let i = locate(*n, x, grid.x_min(), grid.dx(), grid.n_x())?;
        let j = locate(*n, v, grid.v_edge(0), grid.dv(), grid.n_v())?;
        states.last_mut().unwrap().set(i, j, f);
    }
    Ok(states)
}

#[derive(Serialize)]
struct StepRecord {
    t: f64,
    collapsed_cells: usize,
    collapsed_measure: f64,
    entropy_drop: f64,
    w1_drop: f64,
    equilibrium_entropy: f64,
    max_deviation: f64,
}

impl From<&StepReport> for StepRecord {
    fn from(r: &StepReport) -> Self {
        Self {
            t: r.t,
            collapsed_cells: r.collapsed_cells,
            collapsed_measure: r.collapsed_measure,
            entropy_drop: r.entropy_drop,
            w1_drop: r.w1_drop,
            equilibrium_entropy: r.equilibrium_entropy,
            max_deviation: r.max_deviation,
        }
    }
}

#[derive(Serialize)]
struct BudgetRecord {
    est1: f64,
    est2: f64,
    est3: f64,
}

#[derive(Serialize)]
struct FluxErrorRecord {
    t: f64,
    max_entropy: f64,
    max_entropy_flux: f64,
    skipped: usize,
}

#[derive(Serialize)]
struct MeasureRecord {
    t: f64,
    min_edge: f64,
    top_edge: f64,
    total_variation: f64,
}

#[derive(Serialize)]
struct EntropyRecord {
    t: f64,
    transported: f64,
    collapsed: f64,
}

#[derive(Serialize)]
struct DiagnosticsFile<'a> {
    config_sha256: &'a str,
    scheme: &'a str,
    steps: usize,
    initial_mass: f64,
    initial_entropy: f64,
    mass_drift: f64,
    budgets: BudgetRecord,
    per_step: Vec<StepRecord>,
    flux_error: Vec<FluxErrorRecord>,
    m_measure: Vec<MeasureRecord>,
    entropy_series: Vec<EntropyRecord>,
}

/// Everything [`write_diagnostics`] serializes besides the ledger itself.
pub struct DiagnosticsInput<'a> {
    pub config_hash: &'a str,
    pub scheme: &'a str,
    pub ledger: &'a DiagnosticsLedger,
    pub budgets: Budgets,
    /// `(t, field)` per snapshot.
    pub flux_error: &'a [(f64, FluxErrorField)],
    pub m_measure: &'a [MeasureSummary],
}

/// One JSON object; the config hash is a key since JSON has no comments.
/// Non-finite numbers become `null`.
pub fn write_diagnostics<W: Write>(mut w: W, d: &DiagnosticsInput<'_>) -> Result<()> {
    let l = d.ledger;
    let file = DiagnosticsFile {
        config_sha256: d.config_hash,
        scheme: d.scheme,
        steps: l.reports.len(),
        initial_mass: l.initial_mass,
        initial_entropy: l.initial_entropy,
        mass_drift: l.mass_drift,
        budgets: BudgetRecord {
            est1: d.budgets.est1,
            est2: d.budgets.est2,
            est3: d.budgets.est3,
        },
        per_step: l.reports.iter().map(StepRecord::from).collect(),
        flux_error: d
            .flux_error
            .iter()
            .map(|(t, f)| FluxErrorRecord {
                t: *t,
                max_entropy: f.max_entropy,
                max_entropy_flux: f.max_entropy_flux,
                skipped: f.skipped,
            })
            .collect(),
        m_measure: d
            .m_measure
            .iter()
            .map(|m| MeasureRecord {
                t: m.t,
                min_edge: m.min_edge,
                top_edge: m.top_edge,
                total_variation: m.total_variation,
            })
            .collect(),
        entropy_series: l
            .entropy_series
            .iter()
            .map(|e: &EntropySample| EntropyRecord {
                t: e.t,
                transported: e.transported,
                collapsed: e.collapsed,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &file)?;
    writeln!(w)?;
    Ok(())
}
