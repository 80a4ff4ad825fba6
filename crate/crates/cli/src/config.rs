//! `key = value` run configuration.
//!
//! ```text
//! # shock tube
//! n_x = 500
//! n_v = 100
//! scheme = thresholded
//! epsilon = 0.1
//! h = 0.02
//! t_final = 0.5
//! initial = riemann:1,-1,0
//! ```
//!
//! Required keys: `n_x`, `h`, `t_final`, `initial` (and `dt` for `bgk`).
//! Everything else has a default, see [`RunConfig`]. Relative paths are
//! resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ktc_core::equilibrium::stripe_width;
use ktc_core::scheme::DEFAULT_CLAMP_TOL;
use ktc_core::{Boundary, GridSpec, KineticError, SchemeConfig, SchemeKind};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FluxChoice {
    Burgers,
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Riemann { u_left: f64, u_right: f64, x0: f64 },
    /// `delta = None` means "derive from epsilon".
    Stripe { h: f64, delta: Option<f64> },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Field {
    Moments,
    Kinetic,
    Diagnostics,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Moments => "moments",
            Field::Kinetic => "kinetic",
            Field::Diagnostics => "diagnostics",
        }
    }
}

/// Fully validated run description.
///
/// Defaults: `x_min = -1`, `x_max = 1`, `v_min = -1`, `v_max = 1`,
/// `n_v = 200`, `boundary = outflow`, `flux = burgers`, `scheme = classic`,
/// `epsilon = 0`, `dt = h` (discrete schemes), `clamp_tol = 1e-12`,
/// `snapshot_times = 0, t_final`, `output_dir = out`,
/// `fields = moments, diagnostics`, `sparse = true`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub flux: FluxChoice,
    pub scheme: SchemeConfig,
    pub initial: InitialCondition,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub fields: Vec<Field>,
    pub sparse: bool,
}

const KEYS: &[&str] = &[
    "x_min",
    "x_max",
    "n_x",
    "v_min",
    "v_max",
    "n_v",
    "boundary",
    "flux",
    "scheme",
    "epsilon",
    "h",
    "dt",
    "t_final",
    "clamp_tol",
    "initial",
    "snapshot_times",
    "output_dir",
    "fields",
    "sparse",
];

/// Parses with paths relative to the current directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new("."))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

struct Entry {
    line: usize,
    value: String,
}

struct Table {
    entries: BTreeMap<&'static str, Entry>,
}

impl Table {
    fn raw(&self, key: &'static str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| CliError::Parse {
                line: e.line,
                message: format!("`{key}`: cannot parse `{}`", e.value),
            }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &'static str) -> Result<T> {
        self.parse(key)?.ok_or(CliError::Missing(key))
    }

    fn float_or(&self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.parse(key)?.unwrap_or(default);
        if !f64::is_finite(v) {
            return Err(CliError::range(key, format!("must be finite, got {v}")));
        }
        Ok(v)
    }

    fn line_error(&self, key: &'static str, message: impl Into<String>) -> CliError {
        CliError::Parse {
            line: self.raw(key).map_or(0, |e| e.line),
            message: format!("`{key}`: {}", message.into()),
        }
    }
}

fn tokenize(text: &str) -> Result<Table> {
    let mut entries = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| CliError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS.iter().copied().find(|&k| k == key).ok_or_else(|| CliError::Parse {
            line,
            message: format!("unknown key `{key}`"),
        })?;
        if value.is_empty() {
            return Err(CliError::Parse {
                line,
                message: format!("`{key}` has no value"),
            });
        }
        if let Some(prev) = entries.insert(
            known,
            Entry {
                line,
                value: value.to_string(),
            },
        ) {
            return Err(CliError::Parse {
                line,
                message: format!("`{key}` already set on line {}", prev.line),
            });
        }
    }
    Ok(Table { entries })
}

fn float_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("cannot parse `{}`", p.trim())))
        .collect()
}

fn existing(base: &Path, raw: &str, key: &'static str) -> Result<PathBuf> {
    let p = base.join(raw.trim());
    if !p.is_file() {
        return Err(CliError::range(key, format!("file `{}` does not exist", p.display())));
    }
    Ok(p)
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let t = tokenize(text)?;

    let x_min = t.float_or("x_min", -1.0)?;
    let x_max = t.float_or("x_max", 1.0)?;
    if x_min >= x_max {
        return Err(CliError::range("x_max", format!("must exceed x_min = {x_min}")));
    }
    let n_x: usize = t.required("n_x")?;
    if n_x == 0 {
        return Err(CliError::range("n_x", "must be at least 1"));
    }
    let v_min = t.float_or("v_min", -1.0)?;
    let v_max = t.float_or("v_max", 1.0)?;
    if v_min > 0.0 {
        return Err(CliError::range("v_min", "must be <= 0"));
    }
    if v_max < 0.0 || v_max <= v_min {
        return Err(CliError::range("v_max", "must be >= 0 and exceed v_min"));
    }
    let n_v: usize = t.parse("n_v")?.unwrap_or(200);
    if n_v < 2 {
        return Err(CliError::range("n_v", "must be at least 2"));
    }
    let boundary = match t.raw("boundary").map(|e| e.value.as_str()) {
        None | Some("outflow") => Boundary::Outflow,
        Some("periodic") => Boundary::Periodic,
        Some(other) => return Err(t.line_error("boundary", format!("expected periodic|outflow, got `{other}`"))),
    };
    let grid = GridSpec::new(x_min, x_max, n_x, v_min, v_max, n_v, boundary).map_err(|e| match e {
        KineticError::InvalidGrid(m) => CliError::range("n_v", m),
        other => other.into(),
    })?;

    let flux = match t.raw("flux").map(|e| e.value.as_str()) {
        None | Some("burgers") => FluxChoice::Burgers,
        Some(s) => match s.strip_prefix("table:") {
            Some(p) => FluxChoice::Table(existing(base, p, "flux")?),
            None => return Err(t.line_error("flux", format!("expected burgers|table:<path>, got `{s}`"))),
        },
    };

    let kind = match t.raw("scheme").map(|e| e.value.as_str()) {
        None | Some("classic") => SchemeKind::Classic,
        Some("thresholded") => SchemeKind::Thresholded,
        Some("bgk") => SchemeKind::Bgk,
        Some(other) => {
            return Err(t.line_error("scheme", format!("expected classic|thresholded|bgk, got `{other}`")))
        }
    };
    // `inf` is accepted: it disables collapse entirely.
    let epsilon: f64 = t.parse("epsilon")?.unwrap_or(0.0);
    if !(epsilon >= 0.0) {
        return Err(CliError::range("epsilon", format!("must be >= 0, got {epsilon}")));
    }
    let h: f64 = t.required("h")?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(CliError::range("h", format!("must be positive, got {h}")));
    }
    let t_final: f64 = t.required("t_final")?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(CliError::range("t_final", format!("must be >= 0, got {t_final}")));
    }
    let dt: Option<f64> = t.parse("dt")?;
    let dt = match (kind, dt) {
        (SchemeKind::Bgk, None) => {
            return Err(CliError::range("dt", "scheme = bgk requires an explicit `dt`"));
        }
        (_, Some(dt)) if !(dt > 0.0 && dt.is_finite()) => {
            return Err(CliError::range("dt", format!("must be positive, got {dt}")));
        }
        (SchemeKind::Bgk, Some(dt)) => dt,
        (_, Some(dt)) if dt != h => {
            return Err(CliError::range("dt", "discrete schemes step by h; omit `dt` or set it equal to h"));
        }
        (_, _) => h,
    };
    let clamp_tol = t.float_or("clamp_tol", DEFAULT_CLAMP_TOL)?;
    if clamp_tol < 0.0 {
        return Err(CliError::range("clamp_tol", "must be >= 0"));
    }
    let scheme = SchemeConfig {
        scheme: kind,
        epsilon,
        h,
        dt,
        t_final,
        clamp_tol,
    };

    let initial = {
        let raw = t.raw("initial").ok_or(CliError::Missing("initial"))?;
        let (kind, args) = raw.value.split_once(':').unwrap_or((raw.value.as_str(), ""));
        let bad = |m: String| CliError::Parse {
            line: raw.line,
            message: format!("`initial`: {m}"),
        };
        match kind.trim() {
            "riemann" => {
                let v = float_list(args).map_err(bad)?;
                if v.len() != 3 {
                    return Err(bad("expected riemann:uL,uR,x0".into()));
                }
                for &u in &v[..2] {
                    if u < v_min || u > v_max {
                        return Err(CliError::range("initial", format!("state {u} outside [v_min, v_max]")));
                    }
                }
                InitialCondition::Riemann {
                    u_left: v[0],
                    u_right: v[1],
                    x0: v[2],
                }
            }
            "stripe" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(bad("expected stripe:h,delta (delta may be `auto`)".into()));
                }
                let sh: f64 = parts[0].parse().map_err(|_| bad(format!("cannot parse `{}`", parts[0])))?;
                let delta = match parts[1] {
                    "auto" => None,
                    d => Some(d.parse::<f64>().map_err(|_| bad(format!("cannot parse `{d}`")))?),
                };
                if !(sh > 0.0) {
                    return Err(CliError::range("initial", "stripe period must be positive"));
                }
                let d = delta.unwrap_or_else(|| stripe_width(epsilon));
                if !(d > 0.0 && d <= 1.0) {
                    return Err(CliError::range("initial", format!("stripe width {d} outside (0, 1]")));
                }
                InitialCondition::Stripe { h: sh, delta }
            }
            "file" => InitialCondition::File(existing(base, args, "initial")?),
            other => {
                return Err(bad(format!("expected riemann:|stripe:|file:, got `{other}`")));
            }
        }
    };

    let snapshot_times = match t.raw("snapshot_times") {
        None => {
            let mut v = vec![0.0, t_final];
            v.dedup();
            v
        }
        Some(e) => {
            let mut v = float_list(&e.value).map_err(|m| CliError::Parse {
                line: e.line,
                message: format!("`snapshot_times`: {m}"),
            })?;
            if v.iter().any(|&s| !(s >= 0.0 && s <= t_final)) {
                return Err(CliError::range("snapshot_times", format!("all times must lie in [0, {t_final}]")));
            }
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        }
    };

    let output_dir = t.raw("output_dir").map_or_else(|| base.join("out"), |e| base.join(&e.value));

    let fields = match t.raw("fields") {
        None => vec![Field::Moments, Field::Diagnostics],
        Some(e) => {
            let mut out = Vec::new();
            for name in e.value.split(',').map(str::trim) {
                out.push(match name {
                    "moments" => Field::Moments,
                    "kinetic" => Field::Kinetic,
                    "diagnostics" => Field::Diagnostics,
                    other => {
                        return Err(CliError::Parse {
                            line: e.line,
                            message: format!("`fields`: unknown field `{other}`"),
                        })
                    }
                });
            }
            out.sort();
            out.dedup();
            out
        }
    };

    let sparse = match t.raw("sparse").map(|e| e.value.as_str()) {
        None | Some("true") => true,
        Some("false") => false,
        Some(other) => return Err(t.line_error("sparse", format!("expected true|false, got `{other}`"))),
    };

    Ok(RunConfig {
        grid,
        flux,
        scheme,
        initial,
        snapshot_times,
        output_dir,
        fields,
        sparse,
    })
}

impl RunConfig {
    /// Canonical `key = value` rendering; equal configs render identically
    /// regardless of comments, key order or number formatting.
    pub fn canonical(&self) -> String {
        let g = &self.grid;
        let s = &self.scheme;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("x_min", format!("{:e}", g.x_min()));
        kv("x_max", format!("{:e}", g.x_max()));
        kv("n_x", g.n_x().to_string());
        kv("v_min", format!("{:e}", g.v_min()));
        kv("v_max", format!("{:e}", g.v_max()));
        kv("n_v", g.n_v().to_string());
        kv(
            "boundary",
            match g.boundary() {
                Boundary::Periodic => "periodic".into(),
                Boundary::Outflow => "outflow".into(),
            },
        );
        kv(
            "flux",
            match &self.flux {
                FluxChoice::Burgers => "burgers".into(),
                FluxChoice::Table(p) => format!("table:{}", p.display()),
            },
        );
        kv("scheme", s.scheme.name().into());
        kv("epsilon", format!("{:e}", s.epsilon));
        kv("h", format!("{:e}", s.h));
        kv("dt", format!("{:e}", s.dt));
        kv("t_final", format!("{:e}", s.t_final));
        kv("clamp_tol", format!("{:e}", s.clamp_tol));
        kv(
            "initial",
            match &self.initial {
                InitialCondition::Riemann { u_left, u_right, x0 } => format!("riemann:{u_left:e},{u_right:e},{x0:e}"),
                InitialCondition::Stripe { h, delta } => match delta {
                    Some(d) => format!("stripe:{h:e},{d:e}"),
                    None => format!("stripe:{h:e},auto"),
                },
                InitialCondition::File(p) => format!("file:{}", p.display()),
            },
        );
        kv(
            "snapshot_times",
            self.snapshot_times.iter().map(|t| format!("{t:e}")).collect::<Vec<_>>().join(","),
        );
        kv("fields", self.fields.iter().map(|f| f.name()).collect::<Vec<_>>().join(","));
        kv("sparse", self.sparse.to_string());
        out
    }

    /// SHA-256 of [`canonical`](Self::canonical) as lowercase hex. The
    /// output directory is left out so relocating a run keeps its hash.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Stripe width actually used, resolving `auto` from `epsilon`.
    pub fn stripe_delta(&self) -> Option<f64> {
        match self.initial {
            InitialCondition::Stripe { delta, .. } => Some(delta.unwrap_or_else(|| stripe_width(self.scheme.epsilon))),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n_x = 100\nh = 0.02\nt_final = 0.5\ninitial = riemann:1,-1,0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.n_v(), 200);
        assert_eq!(c.grid.boundary(), Boundary::Outflow);
        assert_eq!(c.flux, FluxChoice::Burgers);
        assert_eq!(c.scheme.scheme, SchemeKind::Classic);
        assert_eq!(c.scheme.dt, 0.02);
        assert_eq!(c.snapshot_times, vec![0.0, 0.5]);
        assert_eq!(c.fields, vec![Field::Moments, Field::Diagnostics]);
        assert!(c.sparse);
    }

    #[test]
    fn negative_epsilon_names_the_key() {
        let err = parse_config(&format!("{MINIMAL}epsilon = -1\n")).unwrap_err();
        assert!(matches!(err, CliError::Range { key: "epsilon", .. }), "{err}");
    }

    #[test]
    fn bgk_requires_dt() {
        let err = parse_config(&format!("{MINIMAL}scheme = bgk\n")).unwrap_err();
        assert!(matches!(err, CliError::Range { key: "dt", .. }), "{err}");
        assert!(err.to_string().contains("dt"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config(&format!("# comment\n{MINIMAL}epsilom = 0.1\n")).unwrap_err();
        match err {
            CliError::Parse { line, message } => {
                assert_eq!(line, 6);
                assert!(message.contains("epsilom"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(matches!(
            parse_config(&format!("{MINIMAL}n_x = 3\n")).unwrap_err(),
            CliError::Parse { line: 5, .. }
        ));
        assert!(matches!(
            parse_config(&format!("{MINIMAL}oops\n")).unwrap_err(),
            CliError::Parse { line: 5, .. }
        ));
    }

    #[test]
    fn missing_file_is_rejected_at_parse_time() {
        let err = parse_config("n_x = 10\nh = 0.1\nt_final = 1\ninitial = file:/no/such/file.csv\n").unwrap_err();
        assert!(matches!(err, CliError::Range { key: "initial", .. }));
    }

    #[test]
    fn hash_ignores_comments_and_formatting() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config("# x\nt_final=5e-1\nh = 2e-2\ninitial = riemann: 1, -1, 0\nn_x = 100 # cells\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(&MINIMAL.replace("100", "101")).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn snapshot_times_outside_run_are_rejected() {
        let err = parse_config(&format!("{MINIMAL}snapshot_times = 0.1, 0.7\n")).unwrap_err();
        assert!(matches!(err, CliError::Range { key: "snapshot_times", .. }));
    }

    #[test]
    fn stripe_auto_width() {
        let c = parse_config("n_x = 10\nh = 0.1\nt_final = 1\nscheme = thresholded\nepsilon = 0.1\ninitial = stripe:0.1,auto\n")
            .unwrap();
        assert_eq!(c.stripe_delta(), Some(stripe_width(0.1)));
    }
}
