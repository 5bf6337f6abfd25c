//! Experiment configuration: a TOML document with dotted sections.
//!
//! ```toml
//! experiment = "similarity_run"
//! dim = 1
//! use_q_star = true
//!
//! [grid]
//! L = 12.0
//! n = 513
//!
//! [solver]
//! scheme = "rk4"
//! tau_end = 15.0
//!
//! [initial_data]
//! kind = "gaussian_plus_moment"
//! epsilon = 0.3
//!
//! [output]
//! csv_path = "run.csv"
//! svg_path = "run.svg"
//! ```
//!
//! Every omitted key takes the default listed in [`ExperimentConfig`], and
//! the resolved values are echoed in the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hjcrit_core::gaussian::q_star;
use hjcrit_core::similarity::default_record_every;
use hjcrit_core::{Grid, WeightParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SimilarityRun,
    PhysicalRun,
    ReducedOde,
    DichotomyProbe,
    SpectralProbe,
    Verify,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::SimilarityRun => "similarity_run",
            Self::PhysicalRun => "physical_run",
            Self::ReducedOde => "reduced_ode",
            Self::DichotomyProbe => "dichotomy_probe",
            Self::SpectralProbe => "spectral_probe",
            Self::Verify => "verify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Rk4,
    ImexEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian {},
    ScaledGaussian { alpha: f64 },
    GaussianPlusMoment { epsilon: f64 },
    /// Whitespace-separated nodal values in the grid's row-major order.
    FromFile { path: PathBuf },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<Experiment>,
    dim: Option<usize>,
    q: Option<f64>,
    use_q_star: Option<bool>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    truncation: RawTruncation,
    initial_data: Option<InitialSpec>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "L")]
    half_width: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    scheme: Option<SchemeName>,
    dt: Option<f64>,
    tau_end: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    enabled: Option<bool>,
    rho: Option<f64>,
    m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv_path: Option<PathBuf>,
    svg_path: Option<PathBuf>,
    manifest_path: Option<PathBuf>,
    plot_columns: Option<Vec<String>>,
    log_axes: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSection {
    pub scheme: SchemeName,
    pub dt: f64,
    /// Similarity-time horizon; for `dichotomy_probe` the end of the
    /// continuation.
    pub tau_end: f64,
    /// Physical-time horizon; for `dichotomy_probe` the switch time.
    pub t_end: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSection {
    pub enabled: bool,
    pub rho: f64,
    /// Weight exponent of the truncation norm and of the `h1m` diagnostic.
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub plot_columns: Vec<String>,
    pub log_axes: bool,
}

/// A validated experiment description with every default filled in.
///
/// | key | default |
/// |-----|---------|
/// | `dim` | 1 |
/// | `q`, `use_q_star` | `use_q_star = true` |
/// | `grid.L`, `grid.n` | 12, 513 (`physical_run` 30, 1201; `dichotomy_probe` 40, 601) |
/// | `solver.scheme` | `rk4` |
/// | `solver.dt` | `h²/(6N)`; 1e-3 for `reduced_ode` |
/// | `solver.tau_end` | 15; 6 for `spectral_probe`; 60 for `dichotomy_probe` |
/// | `solver.t_end` | 5; 3 for `dichotomy_probe` |
/// | `solver.record_every` | `max(10, ⌈0.02/dt⌉)` |
/// | `truncation` | disabled, `rho = 0.5`, `m = N/2 + 1/2` |
/// | `initial_data` | `gaussian` |
/// | `output.manifest_path` | CSV path with extension `manifest` |
/// | `output.plot_columns` | depends on the experiment |
/// | `output.log_axes` | false; true for `spectral_probe` |
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub q: f64,
    pub use_q_star: bool,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub truncation: TruncationSection,
    pub initial_data: InitialSpec,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.dim, self.grid.half_width, self.grid.n)?)
    }

    pub fn weight(&self) -> Result<WeightParams> {
        Ok(WeightParams::new(self.truncation.m, self.dim)?)
    }

    /// Flattened `key: value` lines for the manifest.
    pub fn echo(&self) -> Result<Vec<(String, String)>> {
        let value = toml::Value::try_from(self).context("serializing config")?;
        let mut out = Vec::new();
        flatten("config", &value, &mut out);
        Ok(out)
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        toml::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Reads and validates a config file. Relative paths inside it are taken
/// relative to the file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_config_str(&text, Some(base)).with_context(|| format!("in {}", path.display()))
}

/// Parses inline config text; relative paths are resolved against `base`
/// when given.
pub fn parse_config_str(text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
    resolve(raw, text, base)
}

/// Error message for an invalid key, with its line when it can be located.
fn key_error(text: &str, key: &str, message: impl fmt::Display) -> anyhow::Error {
    match locate(text, key) {
        Some(line) => anyhow!("line {line}: {key}: {message}"),
        None => anyhow!("{key}: {message}"),
    }
}

/// 1-based line of a dotted key such as `grid.n`, tracking `[section]`
/// headers.
fn locate(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.rsplit_once('.').unwrap_or(("", dotted));
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(header) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = trimmed.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim();
        let full = if current.is_empty() {
            lhs.to_string()
        } else {
            format!("{current}.{lhs}")
        };
        if full == dotted || (current == section && lhs == key) {
            return Some(i + 1);
        }
    }
    None
}

fn resolve(raw: RawConfig, text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let experiment = raw
        .experiment
        .ok_or_else(|| anyhow!("missing required key `experiment`"))?;
    let dim = raw.dim.unwrap_or(1);
    if !(1..=2).contains(&dim) {
        return Err(key_error(text, "dim", format!("must be 1 or 2, got {dim}")));
    }
    let critical = q_star(dim)?;
    let (q, use_q_star) = match (raw.q, raw.use_q_star) {
        (Some(_), Some(_)) => {
            return Err(key_error(
                text,
                "q",
                "both `q` and `use_q_star` are set; exactly one may be given",
            ))
        }
        (Some(q), None) => {
            if !(q.is_finite() && q > 1.0) {
                return Err(key_error(text, "q", format!("must exceed 1, got {q}")));
            }
            (q, false)
        }
        (None, Some(false)) => {
            return Err(key_error(
                text,
                "use_q_star",
                "is false but no `q` is given",
            ))
        }
        (None, _) => (critical, true),
    };
    if matches!(experiment, Experiment::ReducedOde) && q != critical {
        return Err(key_error(
            text,
            "q",
            format!("reduced_ode is defined at the critical exponent {critical} only"),
        ));
    }

    let (default_l, default_n) = match experiment {
        Experiment::PhysicalRun => (30.0, 1201),
        Experiment::DichotomyProbe => (40.0, 601),
        _ => (12.0, 513),
    };
    let grid_cfg = GridConfig {
        half_width: raw.grid.half_width.unwrap_or(default_l),
        n: raw.grid.n.unwrap_or(default_n),
    };
    let grid = Grid::new(dim, grid_cfg.half_width, grid_cfg.n).map_err(|e| {
        let key = if raw.grid.n.is_some() && e.to_string().contains("points") {
            "grid.n"
        } else {
            "grid.L"
        };
        key_error(text, key, e)
    })?;

    let solver = resolve_solver(&raw.solver, experiment, &grid, text)?;
    let default_m = WeightParams::default_for(dim).m();
    let truncation = TruncationSection {
        enabled: raw.truncation.enabled.unwrap_or(false),
        rho: raw.truncation.rho.unwrap_or(0.5),
        m: raw.truncation.m.unwrap_or(default_m),
    };
    if !(truncation.rho > 0.0 && truncation.rho < 1.0) {
        return Err(key_error(text, "truncation.rho", format!("must lie in (0, 1), got {}", truncation.rho)));
    }
    WeightParams::new(truncation.m, dim).map_err(|e| key_error(text, "truncation.m", e))?;
    if truncation.enabled && experiment != Experiment::SimilarityRun {
        return Err(key_error(
            text,
            "truncation.enabled",
            format!("the truncated nonlinearity is available for similarity_run only, not {experiment}"),
        ));
    }

    let mut initial_data = raw.initial_data.unwrap_or(InitialSpec::Gaussian {});
    match &mut initial_data {
        InitialSpec::ScaledGaussian { alpha } if !(alpha.is_finite() && *alpha >= 0.0) => {
            return Err(key_error(text, "initial_data.alpha", format!("must be non-negative, got {alpha}")));
        }
        InitialSpec::GaussianPlusMoment { epsilon } if !epsilon.is_finite() => {
            return Err(key_error(text, "initial_data.epsilon", "must be finite"));
        }
        InitialSpec::FromFile { path } => {
            if let Some(base) = base {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
            if !path.is_file() {
                return Err(key_error(
                    text,
                    "initial_data.path",
                    format!("{} is not a readable file", path.display()),
                ));
            }
        }
        _ => {}
    }

    let output = resolve_output(raw.output, experiment, base, text)?;
    Ok(ExperimentConfig {
        experiment,
        dim,
        q,
        use_q_star,
        grid: grid_cfg,
        solver,
        truncation,
        initial_data,
        output,
    })
}

fn resolve_solver(
    raw: &RawSolver,
    experiment: Experiment,
    grid: &Grid,
    text: &str,
) -> Result<SolverSection> {
    let fixed_stepping = matches!(experiment, Experiment::DichotomyProbe | Experiment::SpectralProbe);
    if fixed_stepping {
        for (key, set) in [
            ("solver.scheme", raw.scheme.is_some()),
            ("solver.dt", raw.dt.is_some()),
            ("solver.record_every", raw.record_every.is_some()),
        ] {
            if set {
                return Err(key_error(
                    text,
                    key,
                    format!("{experiment} uses its own stepping; remove this key"),
                ));
            }
        }
    }
    let (tau_end, t_end) = match experiment {
        Experiment::DichotomyProbe => (raw.tau_end.unwrap_or(60.0), raw.t_end.unwrap_or(3.0)),
        _ => match (raw.tau_end, raw.t_end) {
            (Some(_), Some(_)) => {
                return Err(key_error(
                    text,
                    "solver.t_end",
                    "set only one of `solver.tau_end` and `solver.t_end`",
                ))
            }
            (Some(tau), None) => (tau, tau.exp_m1()),
            (None, Some(t)) => (t.ln_1p(), t),
            (None, None) => match experiment {
                Experiment::PhysicalRun => (5f64.ln_1p(), 5.0),
                Experiment::SpectralProbe => (6.0, 6f64.exp_m1()),
                _ => (15.0, 15f64.exp_m1()),
            },
        },
    };
    for (key, value) in [("solver.tau_end", tau_end), ("solver.t_end", t_end)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(key_error(text, key, format!("must be non-negative, got {value}")));
        }
    }
    if experiment == Experiment::SpectralProbe && tau_end < 3.0 {
        return Err(key_error(
            text,
            "solver.tau_end",
            "the decay fit over [1, tau_end] needs tau_end >= 3",
        ));
    }
    let scheme = raw.scheme.unwrap_or(SchemeName::Rk4);
    let default_dt = if experiment == Experiment::ReducedOde {
        1e-3
    } else {
        grid.spacing() * grid.spacing() / (6.0 * grid.dim() as f64)
    };
    let dt = raw.dt.unwrap_or(default_dt);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(key_error(text, "solver.dt", format!("must be positive, got {dt}")));
    }
    if experiment == Experiment::ReducedOde && dt > 1e-2 {
        return Err(key_error(text, "solver.dt", format!("must not exceed 1e-2 for reduced_ode, got {dt}")));
    }
    let limit = grid.explicit_step_limit();
    if experiment != Experiment::ReducedOde && scheme == SchemeName::Rk4 && dt > limit {
        return Err(key_error(
            text,
            "solver.dt",
            format!("dt={dt} exceeds the explicit stability limit h^2/(4N)={limit}"),
        ));
    }
    let record_every = raw.record_every.unwrap_or_else(|| default_record_every(dt));
    if record_every == 0 {
        return Err(key_error(text, "solver.record_every", "must be at least 1"));
    }
    Ok(SolverSection {
        scheme,
        dt,
        tau_end,
        t_end,
        record_every,
    })
}

fn writable_parent(path: &Path) -> bool {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    parent
        .metadata()
        .map(|m| m.is_dir() && !m.permissions().readonly())
        .unwrap_or(false)
}

fn resolve_output(
    raw: RawOutput,
    experiment: Experiment,
    base: Option<&Path>,
    text: &str,
) -> Result<OutputSection> {
    let anchor = |p: PathBuf| match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    };
    let csv_path = raw.csv_path.map(anchor);
    if csv_path.is_none() && experiment != Experiment::Verify {
        bail!("missing required key `output.csv_path` for {experiment}");
    }
    let manifest_path = raw
        .manifest_path
        .map(anchor)
        .or_else(|| csv_path.as_ref().map(|p| p.with_extension("manifest")));
    let svg_path = raw.svg_path.map(anchor);
    for (key, path) in [
        ("output.csv_path", &csv_path),
        ("output.svg_path", &svg_path),
        ("output.manifest_path", &manifest_path),
    ] {
        if let Some(p) = path {
            if !writable_parent(p) {
                return Err(key_error(
                    text,
                    key,
                    format!("directory of {} does not exist or is not writable", p.display()),
                ));
            }
        }
    }
    let default_columns: &[&str] = match experiment {
        Experiment::SimilarityRun | Experiment::ReducedOde => &["rescaled_mass"],
        Experiment::PhysicalRun => &["mass", "l1"],
        Experiment::DichotomyProbe => &["l1"],
        Experiment::SpectralProbe => &["manifold_remainder"],
        Experiment::Verify => &[],
    };
    let plot_columns = raw
        .plot_columns
        .unwrap_or_else(|| default_columns.iter().map(|s| s.to_string()).collect());
    for c in &plot_columns {
        if !crate::csv::COLUMNS.contains(&c.as_str()) || c == "tau" {
            return Err(key_error(
                text,
                "output.plot_columns",
                format!("unknown column `{c}`"),
            ));
        }
    }
    Ok(OutputSection {
        csv_path,
        svg_path,
        manifest_path,
        plot_columns,
        log_axes: raw
            .log_axes
            .unwrap_or(experiment == Experiment::SpectralProbe),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config_str(text, None)
    }

    const MINIMAL: &str = "experiment = \"similarity_run\"\n[output]\ncsv_path = \"run.csv\"\n";

    #[test]
    fn minimal_similarity_run_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.dim, 1);
        assert_eq!(cfg.grid, GridConfig { half_width: 12.0, n: 513 });
        assert_eq!(cfg.solver.scheme, SchemeName::Rk4);
        let h: f64 = 24.0 / 512.0;
        assert_eq!(cfg.solver.dt, h * h / 6.0);
        assert_eq!(cfg.solver.tau_end, 15.0);
        assert!(cfg.use_q_star);
        assert_eq!(cfg.q, 1.5);
        assert_eq!(cfg.output.manifest_path, Some(PathBuf::from("run.manifest")));
        assert_eq!(cfg.initial_data, InitialSpec::Gaussian {});
    }

    #[test]
    fn use_q_star_in_two_dimensions() {
        let cfg = parse(&format!("dim = 2\nuse_q_star = true\n{MINIMAL}")).unwrap();
        assert_eq!(cfg.q, 4.0 / 3.0);
        let h: f64 = 24.0 / 512.0;
        assert_eq!(cfg.solver.dt, h * h / 12.0);
    }

    #[test]
    fn both_exponent_keys_rejected() {
        let err = parse(&format!("q = 1.7\nuse_q_star = true\n{MINIMAL}"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("`q`") && err.contains("`use_q_star`"), "{err}");
        assert!(err.starts_with("line 1:"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse(&format!("{MINIMAL}[grid]\nL = 12.0\nsize = 3\n"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("size") && err.contains("line 6"), "{err}");
    }

    #[test]
    fn type_mismatch_reports_key() {
        let err = parse(&format!("{MINIMAL}[grid]\nn = \"many\"\n")).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains('n'), "{err}");
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let err = parse(&format!("{MINIMAL}[grid]\nn = 512\n")).unwrap_err().to_string();
        assert!(err.starts_with("line 5: grid.n"), "{err}");
        let err = parse(&format!("{MINIMAL}[solver]\ndt = 0.1\n")).unwrap_err().to_string();
        assert!(err.contains("solver.dt") && err.contains("stability"), "{err}");
        let err = parse(&format!("{MINIMAL}[solver]\ntau_end = 1.0\nt_end = 1.0\n"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("solver.t_end"), "{err}");
        let err = parse("experiment = \"similarity_run\"\n").unwrap_err().to_string();
        assert!(err.contains("output.csv_path"), "{err}");
    }

    #[test]
    fn initial_data_variants() {
        let cfg = parse(&format!(
            "{MINIMAL}[initial_data]\nkind = \"gaussian_plus_moment\"\nepsilon = 0.3\n"
        ))
        .unwrap();
        assert_eq!(cfg.initial_data, InitialSpec::GaussianPlusMoment { epsilon: 0.3 });
        assert!(parse(&format!("{MINIMAL}[initial_data]\nkind = \"gaussian\"\nalpha = 2.0\n")).is_err());
        assert!(parse(&format!("{MINIMAL}[initial_data]\nkind = \"from_file\"\npath = \"/no/such\"\n")).is_err());
    }

    #[test]
    fn experiment_specific_defaults() {
        let cfg = parse("experiment = \"dichotomy_probe\"\nq = 1.7\n[output]\ncsv_path = \"p.csv\"\n").unwrap();
        assert_eq!((cfg.grid.half_width, cfg.grid.n), (40.0, 601));
        assert_eq!((cfg.solver.t_end, cfg.solver.tau_end), (3.0, 60.0));
        let err = parse("experiment = \"dichotomy_probe\"\n[solver]\ndt = 1e-4\n[output]\ncsv_path = \"p.csv\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("solver.dt"), "{err}");
        let cfg = parse("experiment = \"reduced_ode\"\n[output]\ncsv_path = \"r.csv\"\n").unwrap();
        assert_eq!(cfg.solver.dt, 1e-3);
        assert!(parse("experiment = \"reduced_ode\"\nq = 1.7\n[output]\ncsv_path = \"r.csv\"\n").is_err());
        let cfg = parse("experiment = \"verify\"\n").unwrap();
        assert!(cfg.output.csv_path.is_none());
    }

    #[test]
    fn echo_is_flat() {
        let cfg = parse(MINIMAL).unwrap();
        let echo = cfg.echo().unwrap();
        assert!(echo.contains(&("config.grid.n".into(), "513".into())));
        assert!(echo.contains(&("config.experiment".into(), "similarity_run".into())));
        assert!(echo.contains(&("config.initial_data.kind".into(), "gaussian".into())));
    }
}
