//! Run configuration (strict-schema TOML) and the on-disk data formats:
//! multi-matrix text files (`rows,cols` header then row-major `re,im`
//! lines), series CSV, run metadata, and two-column plot data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::models::ExperimentSeries;
use crate::{C64, CMat, Error, Result};

/// Top-level run configuration. Unknown keys anywhere are rejected so typos
/// fail loudly instead of silently using defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub profile: Option<String>,
    pub compute: Option<ComputeConfig>,
    pub pxp: Option<PxpConfig>,
    pub xxx_dfs: Option<XxxDfsConfig>,
    pub stabilizer: Option<StabilizerConfig>,
    pub examples: Option<ExamplesConfig>,
    pub haar_typical: Option<HaarTypicalConfig>,
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeConfig {
    /// maximal_abelian | bipartite | projector | dfs | blocks
    pub algebra: String,
    /// block list for algebra = blocks
    pub blocks: Option<Vec<(usize, usize)>>,
    /// optional embedding/matrix file for blocks, projector state, or dfs
    pub algebra_file: Option<PathBuf>,
    /// dimensions for bipartite / maximal_abelian
    pub dims: Option<Vec<usize>>,
    /// basis index of the projector state (alternative to algebra_file)
    pub state_index: Option<usize>,
    /// identity | depolarizing | dephasing_qubit | unitary_file | kraus_file | lindblad_file
    pub channel: String,
    /// mixing / flip probability for the builtin channels
    pub p: Option<f64>,
    /// source file for the *_file channels
    pub channel_file: Option<PathBuf>,
    /// evolution time for lindblad_file channels
    pub time: Option<f64>,
    /// correlator | replica | montecarlo | otoc4pt
    pub method: Option<String>,
    pub mc_samples: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PxpConfig {
    pub n: usize,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub coupling: Option<f64>,
    /// neel | ferro
    pub pattern: Option<String>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxxDfsConfig {
    pub n: usize,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub coupling: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizerConfig {
    pub n: usize,
    pub k: usize,
    pub chi: usize,
    pub generators: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExamplesConfig {
    pub which: usize,
    pub n: usize,
    pub lambda: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarTypicalConfig {
    pub blocks: Vec<(usize, usize)>,
    pub samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    /// leakage tolerance for the commutant-invariance flag
    pub invariance: Option<f64>,
    /// dimension cap for the doubled-space route
    pub replica_limit: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Range and enum checks beyond what the schema enforces.
    pub fn validate(&self) -> Result<()> {
        if let Some(cmd) = &self.command {
            const KNOWN: [&str; 7] = [
                "compute",
                "pxp",
                "xxx-dfs",
                "stabilizer",
                "examples",
                "haar-typical",
                "validate",
            ];
            if !KNOWN.contains(&cmd.as_str()) {
                return Err(Error::Config(format!(
                    "field 'command': unknown command '{cmd}'"
                )));
            }
        }
        if let Some(p) = &self.profile {
            if p != "fast" && p != "full" {
                return Err(Error::Config(format!(
                    "field 'profile': expected fast|full, got '{p}'"
                )));
            }
        }
        if let Some(c) = &self.compute {
            const ALGEBRAS: [&str; 5] =
                ["maximal_abelian", "bipartite", "projector", "dfs", "blocks"];
            if !ALGEBRAS.contains(&c.algebra.as_str()) {
                return Err(Error::Config(format!(
                    "field 'compute.algebra': unknown kind '{}'",
                    c.algebra
                )));
            }
            const CHANNELS: [&str; 6] = [
                "identity",
                "depolarizing",
                "dephasing_qubit",
                "unitary_file",
                "kraus_file",
                "lindblad_file",
            ];
            if !CHANNELS.contains(&c.channel.as_str()) {
                return Err(Error::Config(format!(
                    "field 'compute.channel': unknown kind '{}'",
                    c.channel
                )));
            }
            if let Some(m) = &c.method {
                m.parse::<crate::aotoc::Method>()
                    .map_err(|e| Error::Config(format!("field 'compute.method': {e}")))?;
            }
            if let Some(p) = c.p {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!(
                        "field 'compute.p': must lie in [0,1], got {p}"
                    )));
                }
            }
        }
        if let Some(p) = &self.pxp {
            if p.n < 3 {
                return Err(Error::Config(format!(
                    "field 'pxp.n': need at least 3 sites, got {}",
                    p.n
                )));
            }
            if p.alpha.unwrap_or(0.0) < 0.0 || p.gamma.unwrap_or(0.0) < 0.0 {
                return Err(Error::Config("fields 'pxp.alpha'/'pxp.gamma': rates must be ≥ 0".into()));
            }
            if let Some(pat) = &p.pattern {
                if pat != "neel" && pat != "ferro" {
                    return Err(Error::Config(format!(
                        "field 'pxp.pattern': expected neel|ferro, got '{pat}'"
                    )));
                }
            }
        }
        if let Some(x) = &self.xxx_dfs {
            if x.n < 2 || x.n % 2 != 0 {
                return Err(Error::Config(format!(
                    "field 'xxx_dfs.n': need an even site count ≥ 2, got {}",
                    x.n
                )));
            }
            if x.alpha.unwrap_or(0.0) < 0.0 || x.gamma.unwrap_or(0.0) < 0.0 {
                return Err(Error::Config(
                    "fields 'xxx_dfs.alpha'/'xxx_dfs.gamma': rates must be ≥ 0".into(),
                ));
            }
            if let Some(ls) = &x.lambdas {
                if ls.is_empty() {
                    return Err(Error::Config("field 'xxx_dfs.lambdas': empty list".into()));
                }
                if ls.iter().any(|l| *l < 0.0) {
                    return Err(Error::Config(
                        "field 'xxx_dfs.lambdas': strengths must be ≥ 0".into(),
                    ));
                }
            }
        }
        if let Some(s) = &self.stabilizer {
            if s.k >= s.n {
                return Err(Error::Config(format!(
                    "field 'stabilizer.k': need k < n, got k = {}, n = {}",
                    s.k, s.n
                )));
            }
            if s.chi > (1 << s.k) {
                return Err(Error::Config(format!(
                    "field 'stabilizer.chi': χ = {} exceeds sector dimension {}",
                    s.chi,
                    1 << s.k
                )));
            }
            if let Some(gens) = &s.generators {
                if gens.len() != s.n - s.k {
                    return Err(Error::Config(format!(
                        "field 'stabilizer.generators': expected {} entries, got {}",
                        s.n - s.k,
                        gens.len()
                    )));
                }
            }
        }
        if let Some(e) = &self.examples {
            if e.which != 1 && e.which != 2 {
                return Err(Error::Config(format!(
                    "field 'examples.which': expected 1 or 2, got {}",
                    e.which
                )));
            }
            if e.n == 0 || e.n > 4 {
                return Err(Error::Config(format!(
                    "field 'examples.n': need 1..=4 qubits, got {}",
                    e.n
                )));
            }
            if e.lambda.unwrap_or(0.0) < 0.0 {
                return Err(Error::Config("field 'examples.lambda': must be ≥ 0".into()));
            }
        }
        if let Some(h) = &self.haar_typical {
            if h.blocks.is_empty() {
                return Err(Error::Config("field 'haar_typical.blocks': empty list".into()));
            }
            if let Some(s) = h.samples {
                if s < 10 {
                    return Err(Error::Config(format!(
                        "field 'haar_typical.samples': need at least 10, got {s}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Read one or more matrices: each block is a `rows,cols` line followed by
/// rows·cols row-major `re,im` lines; blank lines between blocks are allowed.
pub fn read_matrices(path: &Path) -> Result<Vec<CMat>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_matrices(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_matrices(text: &str) -> Result<Vec<CMat>> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((ln, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (r, c) = line
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'rows,cols'", ln + 1)))?;
        let rows: usize = r
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("line {}: bad row count", ln + 1)))?;
        let cols: usize = c
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("line {}: bad column count", ln + 1)))?;
        if rows == 0 || cols == 0 || rows * cols > 1 << 24 {
            return Err(Error::Config(format!(
                "line {}: unreasonable matrix shape {rows}x{cols}",
                ln + 1
            )));
        }
        let mut m = CMat::zeros(rows, cols);
        let mut filled = 0usize;
        while filled < rows * cols {
            let (ln2, entry) = lines
                .next()
                .ok_or_else(|| Error::Config("unexpected end of matrix data".into()))?;
            let entry = entry.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            let (re, im) = entry
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("line {}: expected 're,im'", ln2 + 1)))?;
            let re: f64 = re
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad real part", ln2 + 1)))?;
            let im: f64 = im
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad imaginary part", ln2 + 1)))?;
            m[(filled / cols, filled % cols)] = C64::new(re, im);
            filled += 1;
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(Error::Config("no matrices in file".into()));
    }
    Ok(out)
}

pub fn format_matrices(mats: &[CMat]) -> String {
    let mut out = String::new();
    for m in mats {
        let _ = writeln!(out, "{},{}", m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                let _ = writeln!(out, "{},{}", v.re, v.im);
            }
        }
    }
    out
}

pub fn write_matrices(path: &Path, mats: &[CMat]) -> Result<()> {
    std::fs::write(path, format_matrices(mats))?;
    Ok(())
}

/// Series CSV: header t,g,g1,g2,bound,typical with a trailing stderr column
/// when any row carries one. Floats print in shortest round-trip form, so
/// identical runs produce byte-identical files.
pub fn format_series_csv(series: &ExperimentSeries) -> String {
    let with_stderr = series.rows.iter().any(|r| r.mc_stderr.is_some());
    let mut out = String::new();
    if with_stderr {
        out.push_str("t,g,g1,g2,bound,typical,stderr\n");
    } else {
        out.push_str("t,g,g1,g2,bound,typical\n");
    }
    for (t, r) in series.times.iter().zip(&series.rows) {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            t, r.g, r.g1, r.g2, r.bound, r.typical
        );
        if with_stderr {
            let _ = write!(out, ",{}", r.mc_stderr.unwrap_or(0.0));
        }
        out.push('\n');
    }
    out
}

pub fn write_series_csv(path: &Path, series: &ExperimentSeries) -> Result<()> {
    std::fs::write(path, format_series_csv(series))?;
    Ok(())
}

/// Companion metadata: config echo, package version, seed, wall time.
pub fn write_metadata(
    path: &Path,
    command: &str,
    config_echo: &str,
    seed: Option<u64>,
    wall_seconds: f64,
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "tool = \"aotoc {}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = {command:?}");
    match seed {
        Some(s) => {
            let _ = writeln!(out, "seed = {s}");
        }
        None => {
            let _ = writeln!(out, "seed = \"none\"");
        }
    }
    let _ = writeln!(out, "wall_seconds = {wall_seconds}");
    let _ = writeln!(out, "config_echo = '''");
    let _ = writeln!(out, "{}", config_echo.trim_end());
    let _ = writeln!(out, "'''");
    std::fs::write(path, out)?;
    Ok(())
}

/// Two-column plot data: one `# curve: <name>` block per curve, rows `x y`,
/// blank line between curves.
pub fn format_plot_data(curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    for (i, (name, pts)) in curves.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# curve: {name}");
        for (x, y) in pts {
            let _ = writeln!(out, "{x} {y}");
        }
    }
    out
}

pub fn write_plot_data(path: &Path, curves: &[(String, Vec<(f64, f64)>)]) -> Result<()> {
    std::fs::write(path, format_plot_data(curves))?;
    Ok(())
}

/// Sidecar path helper: `out.csv` → `out.meta.toml` / `out.plot.dat`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}"))
}
