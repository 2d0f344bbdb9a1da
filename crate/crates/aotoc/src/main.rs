//! Command-line driver: configured experiments, CSV/plot emission, and the
//! validation suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use aotoc::algebra::{AlgebraHandle, BlockSpec};
use aotoc::aotoc::{aotoc, aotoc_with_method, haar_typical_mc, Method};
use aotoc::channel::{
    dephasing_qubit, depolarizing, propagate, Channel, LindbladSpec,
};
use aotoc::closedforms::{build_stabilizer, dephasing_chi, example1, example2, stabilizer_formula};
use aotoc::config::{
    read_matrices, sidecar, write_metadata, write_plot_data, write_series_csv, ComputeConfig,
    ExamplesConfig, HaarTypicalConfig, PxpConfig, RunConfig, StabilizerConfig, XxxDfsConfig,
};
use aotoc::models::{
    product_state, pxp_model, run_series, time_average_quadratic_fit, time_grid, xxx_model,
    ExperimentSeries, ModelKind, ProductPattern, SeriesMeta, SpinChainSpec,
};
use aotoc::models::perturbed_dfs_algebra;
use aotoc::validate::{all_passed, chain_generators, run_all, Profile};
use aotoc::{C64, CMat, CVec, Error, Result};

#[derive(Parser)]
#[command(
    name = "aotoc",
    version,
    about = "Algebraic out-of-time-order correlators of finite-dimensional systems under unital channels"
)]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for the stochastic parts of a command.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output CSV path; metadata and plot sidecars reuse its stem.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Workload profile for `validate`: fast | full.
    #[arg(long, global = true, value_name = "PROFILE")]
    profile: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One correlator evaluation for a configured algebra and channel.
    Compute(ComputeArgs),
    /// Constrained-chain (blockaded ring) series experiment.
    Pxp(PxpArgs),
    /// Isotropic-chain protected-subspace experiment with a perturbation sweep.
    #[command(name = "xxx-dfs")]
    XxxDfs(XxxArgs),
    /// Sector-coherence dephasing value for an (n, k, chi) stabilizer group.
    Stabilizer(StabilizerArgs),
    /// Analytic-example curves: numerical values against the closed form.
    Examples(ExamplesArgs),
    /// Monte-Carlo mean over Haar unitaries against the typical value.
    #[command(name = "haar-typical")]
    HaarTypical(HaarArgs),
    /// Run the validation suite and report per-check status.
    Validate,
}

#[derive(Args, Default)]
struct ComputeArgs {
    /// maximal_abelian | bipartite | projector | dfs | blocks
    #[arg(long)]
    algebra: Option<String>,
    /// Block sizes, e.g. "2x4,1x1".
    #[arg(long)]
    blocks: Option<String>,
    /// Matrix file: abelian basis, projector state, subspace, or block text.
    #[arg(long)]
    algebra_file: Option<PathBuf>,
    /// Dimensions, e.g. "4" or "2,3" for bipartite.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Basis index of the projector state.
    #[arg(long)]
    state_index: Option<usize>,
    /// identity | depolarizing | dephasing_qubit | unitary_file | kraus_file | lindblad_file
    #[arg(long)]
    channel: Option<String>,
    /// Mixing / flip probability for the builtin channels.
    #[arg(long)]
    p: Option<f64>,
    /// Source file for the *_file channels.
    #[arg(long)]
    channel_file: Option<PathBuf>,
    /// Evolution time for lindblad_file channels.
    #[arg(long)]
    time: Option<f64>,
    /// correlator | replica | montecarlo | otoc4pt
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    mc_samples: Option<usize>,
}

#[derive(Args, Default)]
struct PxpArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    /// neel | ferro
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Default)]
struct XxxArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    /// Perturbation strengths, e.g. "0,0.05,0.1".
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Default)]
struct StabilizerArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    chi: Option<usize>,
    /// Generator words, e.g. "ZZI,IZZ" (defaults to a nearest-neighbour chain).
    #[arg(long, value_delimiter = ',')]
    generators: Option<Vec<String>>,
}

#[derive(Args, Default)]
struct ExamplesArgs {
    /// 1 | 2
    #[arg(long)]
    which: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Dissipation rate for example 2.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Default)]
struct HaarArgs {
    /// Block sizes, e.g. "2x4" or "1x1,1x3".
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 2 = configuration problem, 3 = structural or numerical failure.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn init_workers() -> Result<()> {
    let Ok(v) = std::env::var("AOTOC_WORKERS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        Error::Config(format!(
            "AOTOC_WORKERS: expected a positive integer, got '{v}'"
        ))
    })?;
    if n == 0 {
        return Err(Error::Config("AOTOC_WORKERS: must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("AOTOC_WORKERS: cannot build worker pool: {e}")))?;
    Ok(())
}

/// Everything a command needs from the merged configuration and flags.
struct Ctx {
    cfg: RunConfig,
    overrides: Vec<String>,
    config_text: String,
    started: Instant,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    fn out(&self, command: &str) -> PathBuf {
        self.cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{command}.csv")))
    }

    fn echo(&self) -> String {
        let mut echo = self.config_text.clone();
        if !self.overrides.is_empty() {
            if !echo.is_empty() {
                echo.push('\n');
            }
            for o in &self.overrides {
                echo.push_str("# override ");
                echo.push_str(o);
                echo.push('\n');
            }
        }
        if echo.is_empty() {
            echo.push_str("# defaults only\n");
        }
        echo
    }

    fn finish(
        &self,
        command: &str,
        out: &Path,
        series: &ExperimentSeries,
        curves: &[(String, Vec<(f64, f64)>)],
    ) -> Result<()> {
        write_series_csv(out, series)?;
        if !curves.is_empty() {
            write_plot_data(&sidecar(out, "plot.dat"), curves)?;
        }
        write_metadata(
            &sidecar(out, "meta.toml"),
            command,
            &self.echo(),
            self.cfg.seed,
            self.started.elapsed().as_secs_f64(),
        )?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_workers()?;
    let (cfg, config_text) = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            (RunConfig::from_toml(&text)?, text)
        }
        None => (RunConfig::default(), String::new()),
    };
    let sub = match &cli.command {
        Command::Compute(_) => "compute",
        Command::Pxp(_) => "pxp",
        Command::XxxDfs(_) => "xxx-dfs",
        Command::Stabilizer(_) => "stabilizer",
        Command::Examples(_) => "examples",
        Command::HaarTypical(_) => "haar-typical",
        Command::Validate => "validate",
    };
    if let Some(c) = &cfg.command {
        if c != sub {
            return Err(Error::Config(format!(
                "field 'command': config names '{c}' but the subcommand is '{sub}'"
            )));
        }
    }
    let mut ctx = Ctx {
        cfg,
        overrides: Vec::new(),
        config_text,
        started: Instant::now(),
    };
    if let Some(s) = cli.seed {
        ctx.cfg.seed = Some(s);
        ctx.overrides.push(format!("seed = {s}"));
    }
    if let Some(o) = &cli.out {
        ctx.cfg.out = Some(o.clone());
        ctx.overrides.push(format!("out = {}", o.display()));
    }
    if let Some(p) = &cli.profile {
        ctx.cfg.profile = Some(p.clone());
        ctx.overrides.push(format!("profile = {p}"));
    }
    match &cli.command {
        Command::Compute(args) => run_compute(&mut ctx, args),
        Command::Pxp(args) => run_pxp(&mut ctx, args),
        Command::XxxDfs(args) => run_xxx(&mut ctx, args),
        Command::Stabilizer(args) => run_stabilizer(&mut ctx, args),
        Command::Examples(args) => run_examples(&mut ctx, args),
        Command::HaarTypical(args) => run_haar(&mut ctx, args),
        Command::Validate => run_validate(&ctx),
    }
}

fn set<T: Clone + std::fmt::Debug>(
    target: &mut T,
    value: &Option<T>,
    name: &str,
    overrides: &mut Vec<String>,
) {
    if let Some(v) = value {
        *target = v.clone();
        overrides.push(format!("{name} = {v:?}"));
    }
}

fn set_opt<T: Clone + std::fmt::Debug>(
    target: &mut Option<T>,
    value: &Option<T>,
    name: &str,
    overrides: &mut Vec<String>,
) {
    if let Some(v) = value {
        *target = Some(v.clone());
        overrides.push(format!("{name} = {v:?}"));
    }
}

fn parse_blocks(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut blocks = Vec::new();
    for token in text.split([',', ' ']).filter(|t| !t.is_empty()) {
        let (n, d) = token.split_once('x').ok_or_else(|| {
            Error::Config(format!("block '{token}': expected the form NxD, e.g. 2x4"))
        })?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("block '{token}': bad multiplicity")))?;
        let d: usize = d
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("block '{token}': bad dimension")))?;
        blocks.push((n, d));
    }
    if blocks.is_empty() {
        return Err(Error::Config("no blocks given".into()));
    }
    Ok(blocks)
}

/// Wrap one report as a single-row series for the CSV writer.
fn single_row(t: f64, report: aotoc::aotoc::AotocReport, label: String, seed: Option<u64>) -> ExperimentSeries {
    ExperimentSeries {
        times: vec![t],
        rows: vec![report],
        meta: SeriesMeta {
            label,
            seed,
            wall_seconds: 0.0,
        },
    }
}

// ---------------------------------------------------------------------------
// compute
// ---------------------------------------------------------------------------

fn build_algebra(c: &ComputeConfig) -> Result<AlgebraHandle> {
    let need_dim = || -> Result<usize> {
        match c.dims.as_deref() {
            Some([d]) => Ok(*d),
            _ => Err(Error::Config(
                "field 'compute.dims': expected a single dimension, e.g. dims = [4]".into(),
            )),
        }
    };
    match c.algebra.as_str() {
        "maximal_abelian" => {
            if let Some(f) = &c.algebra_file {
                let mats = read_matrices(f)?;
                AlgebraHandle::maximal_abelian(&mats[0])
            } else {
                let d = need_dim()?;
                AlgebraHandle::maximal_abelian(&CMat::identity(d, d))
            }
        }
        "bipartite" => match c.dims.as_deref() {
            Some([da, db]) => AlgebraHandle::bipartite(*da, *db),
            _ => Err(Error::Config(
                "field 'compute.dims': bipartite needs two factors, e.g. dims = [2, 3]".into(),
            )),
        },
        "projector" => {
            let psi: CVec = if let Some(f) = &c.algebra_file {
                let mats = read_matrices(f)?;
                if mats[0].ncols() != 1 {
                    return Err(Error::Config(format!(
                        "field 'compute.algebra_file': projector state must be a column, got {}x{}",
                        mats[0].nrows(),
                        mats[0].ncols()
                    )));
                }
                mats[0].column(0).into_owned()
            } else {
                let d = need_dim()?;
                let idx = c.state_index.ok_or_else(|| {
                    Error::Config("field 'compute.state_index': required for projector".into())
                })?;
                if idx >= d {
                    return Err(Error::Config(format!(
                        "field 'compute.state_index': index {idx} outside dimension {d}"
                    )));
                }
                let mut v = CVec::zeros(d);
                v[idx] = C64::new(1.0, 0.0);
                v
            };
            AlgebraHandle::projector_state(&psi)
        }
        "dfs" => {
            let f = c.algebra_file.as_ref().ok_or_else(|| {
                Error::Config("field 'compute.algebra_file': required for dfs (subspace columns)".into())
            })?;
            let mats = read_matrices(f)?;
            AlgebraHandle::dfs(&mats[0])
        }
        "blocks" => {
            if let Some(f) = &c.algebra_file {
                let text = std::fs::read_to_string(f)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", f.display())))?;
                Ok(AlgebraHandle::from_spec(BlockSpec::from_text(&text)?))
            } else {
                let blocks = c.blocks.clone().ok_or_else(|| {
                    Error::Config("field 'compute.blocks': required for algebra = blocks".into())
                })?;
                Ok(AlgebraHandle::from_spec(BlockSpec::new(blocks, None)?))
            }
        }
        other => Err(Error::Config(format!(
            "field 'compute.algebra': unknown kind '{other}'"
        ))),
    }
}

fn build_channel(c: &ComputeConfig, d: usize) -> Result<(Channel, f64)> {
    let need_file = || -> Result<&PathBuf> {
        c.channel_file.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "field 'compute.channel_file': required for channel = {}",
                c.channel
            ))
        })
    };
    match c.channel.as_str() {
        "identity" => Ok((Channel::identity(d), 0.0)),
        "depolarizing" => {
            let p = c.p.ok_or_else(|| {
                Error::Config("field 'compute.p': required for depolarizing".into())
            })?;
            Ok((depolarizing(d, p)?, 0.0))
        }
        "dephasing_qubit" => {
            let p = c.p.ok_or_else(|| {
                Error::Config("field 'compute.p': required for dephasing_qubit".into())
            })?;
            Ok((dephasing_qubit(p)?, 0.0))
        }
        "unitary_file" => {
            let mats = read_matrices(need_file()?)?;
            Ok((Channel::from_unitary(&mats[0])?, 0.0))
        }
        "kraus_file" => {
            let mats = read_matrices(need_file()?)?;
            Ok((Channel::from_kraus(&mats)?, 0.0))
        }
        "lindblad_file" => {
            let mats = read_matrices(need_file()?)?;
            let (h, jumps) = mats.split_first().expect("parser rejects empty files");
            let spec = LindbladSpec::new(h.clone(), jumps.to_vec())?;
            let t = c.time.unwrap_or(1.0);
            Ok((propagate(&spec, t)?, t))
        }
        other => Err(Error::Config(format!(
            "field 'compute.channel': unknown kind '{other}'"
        ))),
    }
}

fn run_compute(ctx: &mut Ctx, args: &ComputeArgs) -> Result<ExitCode> {
    let mut c = ctx.cfg.compute.clone().unwrap_or(ComputeConfig {
        algebra: String::new(),
        blocks: None,
        algebra_file: None,
        dims: None,
        state_index: None,
        channel: String::new(),
        p: None,
        channel_file: None,
        time: None,
        method: None,
        mc_samples: None,
    });
    let ov = &mut ctx.overrides;
    set(&mut c.algebra, &args.algebra, "compute.algebra", ov);
    if let Some(b) = &args.blocks {
        c.blocks = Some(parse_blocks(b)?);
        ov.push(format!("compute.blocks = {b:?}"));
    }
    set_opt(&mut c.algebra_file, &args.algebra_file, "compute.algebra_file", ov);
    set_opt(&mut c.dims, &args.dims, "compute.dims", ov);
    set_opt(&mut c.state_index, &args.state_index, "compute.state_index", ov);
    set(&mut c.channel, &args.channel, "compute.channel", ov);
    set_opt(&mut c.p, &args.p, "compute.p", ov);
    set_opt(&mut c.channel_file, &args.channel_file, "compute.channel_file", ov);
    set_opt(&mut c.time, &args.time, "compute.time", ov);
    set_opt(&mut c.method, &args.method, "compute.method", ov);
    set_opt(&mut c.mc_samples, &args.mc_samples, "compute.mc_samples", ov);
    if c.algebra.is_empty() {
        return Err(Error::Config(
            "field 'compute.algebra': required (config section [compute] or --algebra)".into(),
        ));
    }
    if c.channel.is_empty() {
        return Err(Error::Config("field 'compute.channel': required".into()));
    }
    let mut merged = ctx.cfg.clone();
    merged.compute = Some(c.clone());
    merged.validate()?;
    ctx.cfg = merged;

    let alg = build_algebra(&c)?;
    let (e, t) = build_channel(&c, alg.dim())?;
    let method: Method = c.method.as_deref().unwrap_or("correlator").parse()?;
    let report = aotoc_with_method(
        &alg,
        &e,
        method,
        c.mc_samples.unwrap_or(10_000),
        ctx.seed(),
    )?;
    println!(
        "g = {}  g1 = {}  g2 = {}  (bound {}, typical {})",
        report.g, report.g1, report.g2, report.bound, report.typical
    );
    if let Some(se) = report.mc_stderr {
        println!("stderr = {se}");
    }
    let out = ctx.out("compute");
    let series = single_row(t, report, "compute".into(), ctx.cfg.seed);
    ctx.finish("compute", &out, &series, &[])?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// pxp
// ---------------------------------------------------------------------------

fn run_pxp(ctx: &mut Ctx, args: &PxpArgs) -> Result<ExitCode> {
    let mut c = match (ctx.cfg.pxp.clone(), args.n) {
        (Some(c), _) => c,
        (None, Some(n)) => PxpConfig {
            n,
            alpha: None,
            gamma: None,
            coupling: None,
            pattern: None,
            t_max: None,
            dt: None,
        },
        (None, None) => {
            return Err(Error::Config(
                "field 'pxp.n': required (config section [pxp] or --n)".into(),
            ))
        }
    };
    let ov = &mut ctx.overrides;
    set(&mut c.n, &args.n, "pxp.n", ov);
    set_opt(&mut c.alpha, &args.alpha, "pxp.alpha", ov);
    set_opt(&mut c.gamma, &args.gamma, "pxp.gamma", ov);
    set_opt(&mut c.coupling, &args.coupling, "pxp.coupling", ov);
    set_opt(&mut c.pattern, &args.pattern, "pxp.pattern", ov);
    set_opt(&mut c.t_max, &args.tmax, "pxp.t_max", ov);
    set_opt(&mut c.dt, &args.dt, "pxp.dt", ov);
    let mut merged = ctx.cfg.clone();
    merged.pxp = Some(c.clone());
    merged.validate()?;
    ctx.cfg = merged;

    let pattern = match c.pattern.as_deref().unwrap_or("neel") {
        "ferro" => ProductPattern::Ferro,
        _ => ProductPattern::Neel,
    };
    let spec = SpinChainSpec::new(
        c.n,
        c.coupling.unwrap_or(1.0),
        c.alpha.unwrap_or(0.0),
        c.gamma.unwrap_or(0.0),
        ModelKind::Pxp,
    )?;
    let model = pxp_model(&spec)?;
    let psi = product_state(c.n, pattern)?;
    let alg = AlgebraHandle::projector_state(&psi)?;
    let times = time_grid(c.t_max.unwrap_or(30.0), c.dt.unwrap_or(0.075))?;
    let mut series = run_series(&model, &alg, &times)?;
    series.meta.label = format!("pxp n={} pattern={:?}", c.n, pattern);
    series.meta.seed = ctx.cfg.seed;

    let curves = vec![
        (
            "g".to_string(),
            times.iter().zip(&series.rows).map(|(t, r)| (*t, r.g)).collect(),
        ),
        (
            "g1".to_string(),
            times.iter().zip(&series.rows).map(|(t, r)| (*t, r.g1)).collect(),
        ),
        (
            "g2".to_string(),
            times.iter().zip(&series.rows).map(|(t, r)| (*t, r.g2)).collect(),
        ),
    ];
    let out = ctx.out("pxp");
    ctx.finish("pxp", &out, &series, &curves)?;
    let last = series.rows.last().expect("nonempty grid");
    println!(
        "{} rows; final t = {}: g = {}, g1 = {}, g2 = {} (bound {})",
        times.len(),
        times.last().expect("nonempty grid"),
        last.g,
        last.g1,
        last.g2,
        last.bound
    );
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// xxx-dfs
// ---------------------------------------------------------------------------

fn run_xxx(ctx: &mut Ctx, args: &XxxArgs) -> Result<ExitCode> {
    let mut c = match (ctx.cfg.xxx_dfs.clone(), args.n) {
        (Some(c), _) => c,
        (None, Some(n)) => XxxDfsConfig {
            n,
            alpha: None,
            gamma: None,
            coupling: None,
            lambdas: None,
            t_max: None,
            dt: None,
        },
        (None, None) => {
            return Err(Error::Config(
                "field 'xxx_dfs.n': required (config section [xxx_dfs] or --n)".into(),
            ))
        }
    };
    let ov = &mut ctx.overrides;
    set(&mut c.n, &args.n, "xxx_dfs.n", ov);
    set_opt(&mut c.alpha, &args.alpha, "xxx_dfs.alpha", ov);
    set_opt(&mut c.gamma, &args.gamma, "xxx_dfs.gamma", ov);
    set_opt(&mut c.coupling, &args.coupling, "xxx_dfs.coupling", ov);
    set_opt(&mut c.lambdas, &args.lambdas, "xxx_dfs.lambdas", ov);
    set_opt(&mut c.t_max, &args.tmax, "xxx_dfs.t_max", ov);
    set_opt(&mut c.dt, &args.dt, "xxx_dfs.dt", ov);
    let mut merged = ctx.cfg.clone();
    merged.xxx_dfs = Some(c.clone());
    merged.validate()?;
    ctx.cfg = merged;

    let spec = SpinChainSpec::new(
        c.n,
        c.coupling.unwrap_or(1.0),
        c.alpha.unwrap_or(0.05),
        c.gamma.unwrap_or(0.05),
        ModelKind::Xxx,
    )?;
    let model = xxx_model(&spec)?;
    let lambdas = c
        .lambdas
        .clone()
        .unwrap_or_else(|| vec![0.0, 0.05, 0.1, 0.15, 0.2]);
    let t_max = c.t_max.unwrap_or(30.0);
    let times = time_grid(t_max, c.dt.unwrap_or(0.075))?;
    let out = ctx.out("xxx-dfs");
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("xxx-dfs")
        .to_string();

    let mut collected: Vec<(f64, ExperimentSeries)> = Vec::with_capacity(lambdas.len());
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &lambda in &lambdas {
        let alg = perturbed_dfs_algebra(c.n, lambda, ctx.seed())?;
        let mut series = run_series(&model, &alg, &times)?;
        series.meta.label = format!("xxx-dfs n={} lambda={}", c.n, lambda);
        series.meta.seed = ctx.cfg.seed;
        let path = out.with_file_name(format!("{stem}-lambda-{lambda}.csv"));
        write_series_csv(&path, &series)?;
        println!("wrote {}", path.display());
        curves.push((
            format!("g2 lambda={lambda}"),
            times.iter().zip(&series.rows).map(|(t, r)| (*t, r.g2)).collect(),
        ));
        collected.push((lambda, series));
    }
    if collected.len() >= 3 && lambdas.contains(&0.0) {
        let fit = time_average_quadratic_fit(&collected, (0.0, t_max))?;
        println!(
            "time-averaged deviation fit: coefficient = {}, R^2 = {}",
            fit.coefficient, fit.r_squared
        );
        curves.push((
            "deviation".to_string(),
            fit.lambdas.iter().zip(&fit.deviations).map(|(l, d)| (*l, *d)).collect(),
        ));
        curves.push((
            "fit".to_string(),
            fit.lambdas
                .iter()
                .map(|l| (*l, fit.coefficient * l * l))
                .collect(),
        ));
    }
    // The main CSV carries the strongest-perturbation series; per-lambda files
    // hold the rest.
    let main_series = &collected.last().expect("nonempty lambda list").1;
    ctx.finish("xxx-dfs", &out, main_series, &curves)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// stabilizer
// ---------------------------------------------------------------------------

fn run_stabilizer(ctx: &mut Ctx, args: &StabilizerArgs) -> Result<ExitCode> {
    let mut c = match (ctx.cfg.stabilizer.clone(), args.n, args.k, args.chi) {
        (Some(c), ..) => c,
        (None, Some(n), Some(k), Some(chi)) => StabilizerConfig {
            n,
            k,
            chi,
            generators: None,
        },
        _ => {
            return Err(Error::Config(
                "fields 'stabilizer.n/k/chi': required (config section [stabilizer] or --n/--k/--chi)"
                    .into(),
            ))
        }
    };
    let ov = &mut ctx.overrides;
    set(&mut c.n, &args.n, "stabilizer.n", ov);
    set(&mut c.k, &args.k, "stabilizer.k", ov);
    set(&mut c.chi, &args.chi, "stabilizer.chi", ov);
    set_opt(&mut c.generators, &args.generators, "stabilizer.generators", ov);
    let mut merged = ctx.cfg.clone();
    merged.stabilizer = Some(c.clone());
    merged.validate()?;
    ctx.cfg = merged;

    let words = c
        .generators
        .clone()
        .unwrap_or_else(|| chain_generators(c.n, c.k));
    let group = build_stabilizer(c.n, c.k, &words)?;
    let alg = group.algebra()?;
    let e = dephasing_chi(&group, c.chi, None)?;
    let report = aotoc(&alg, &e)?;
    let exact = stabilizer_formula(c.n, c.k, c.chi)?;
    println!(
        "g = {}  g1 = {}  g2 = {}  (closed form {})",
        report.g, report.g1, report.g2, exact
    );
    let out = ctx.out("stabilizer");
    let series = single_row(
        0.0,
        report,
        format!("stabilizer n={} k={} chi={}", c.n, c.k, c.chi),
        ctx.cfg.seed,
    );
    ctx.finish("stabilizer", &out, &series, &[])?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// examples
// ---------------------------------------------------------------------------

fn run_examples(ctx: &mut Ctx, args: &ExamplesArgs) -> Result<ExitCode> {
    let mut c = match (ctx.cfg.examples.clone(), args.which, args.n) {
        (Some(c), ..) => c,
        (None, Some(which), Some(n)) => ExamplesConfig {
            which,
            n,
            lambda: None,
            t_max: None,
            dt: None,
        },
        _ => {
            return Err(Error::Config(
                "fields 'examples.which/n': required (config section [examples] or --which/--n)"
                    .into(),
            ))
        }
    };
    let ov = &mut ctx.overrides;
    set(&mut c.which, &args.which, "examples.which", ov);
    set(&mut c.n, &args.n, "examples.n", ov);
    set_opt(&mut c.lambda, &args.lambda, "examples.lambda", ov);
    set_opt(&mut c.t_max, &args.tmax, "examples.t_max", ov);
    set_opt(&mut c.dt, &args.dt, "examples.dt", ov);
    let mut merged = ctx.cfg.clone();
    merged.examples = Some(c.clone());
    merged.validate()?;
    ctx.cfg = merged;

    let lambda = c.lambda.unwrap_or(1.0);
    let times = time_grid(c.t_max.unwrap_or(3.0), c.dt.unwrap_or(0.05))?;
    let d = 1usize << c.n;
    let alg = AlgebraHandle::maximal_abelian(&CMat::identity(d, d))?;
    let dt = times.get(1).copied().unwrap_or(0.0) - times[0];
    let (spec0, _) = match c.which {
        1 => example1(c.n, 0.0)?,
        _ => example2(c.n, lambda, 0.0)?,
    };
    let step = if dt > 0.0 {
        propagate(&spec0, dt)?
    } else {
        Channel::identity(d)
    };
    let mut e = Channel::identity(d);
    let mut rows = Vec::with_capacity(times.len());
    let mut exact_curve = Vec::with_capacity(times.len());
    let mut worst = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            e = step.compose(&e)?;
        }
        let exact = match c.which {
            1 => example1(c.n, t)?.1,
            _ => example2(c.n, lambda, t)?.1,
        };
        let report = aotoc(&alg, &e)?;
        worst = worst.max((report.g - exact).abs());
        exact_curve.push((t, exact));
        rows.push(report);
    }
    let series = ExperimentSeries {
        times: times.clone(),
        rows,
        meta: SeriesMeta {
            label: format!("example {} n={}", c.which, c.n),
            seed: ctx.cfg.seed,
            wall_seconds: 0.0,
        },
    };
    let curves = vec![
        (
            "g".to_string(),
            times.iter().zip(&series.rows).map(|(t, r)| (*t, r.g)).collect(),
        ),
        ("closed form".to_string(), exact_curve),
    ];
    let out = ctx.out("examples");
    ctx.finish("examples", &out, &series, &curves)?;
    println!(
        "{} rows; worst |g - closed form| = {worst:e}",
        times.len()
    );
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// haar-typical
// ---------------------------------------------------------------------------

fn run_haar(ctx: &mut Ctx, args: &HaarArgs) -> Result<ExitCode> {
    let mut c = match (&ctx.cfg.haar_typical, &args.blocks) {
        (Some(c), _) => c.clone(),
        (None, Some(b)) => HaarTypicalConfig {
            blocks: parse_blocks(b)?,
            samples: None,
        },
        (None, None) => {
            return Err(Error::Config(
                "field 'haar_typical.blocks': required (config section [haar_typical] or --blocks)"
                    .into(),
            ))
        }
    };
    let ov = &mut ctx.overrides;
    if let Some(b) = &args.blocks {
        c.blocks = parse_blocks(b)?;
        ov.push(format!("haar_typical.blocks = {b:?}"));
    }
    set_opt(&mut c.samples, &args.samples, "haar_typical.samples", ov);
    let mut merged = ctx.cfg.clone();
    merged.haar_typical = Some(c.clone());
    merged.validate()?;
    ctx.cfg = merged;

    let alg = AlgebraHandle::from_spec(BlockSpec::new(c.blocks.clone(), None)?);
    let dims = alg.dims_and_bounds();
    let samples = c.samples.unwrap_or(2000);
    let (mean, stderr) = haar_typical_mc(&alg, samples, ctx.seed())?;
    println!(
        "mean over {samples} Haar unitaries = {mean} (stderr {stderr}); typical value = {}",
        dims.typical
    );
    let report = aotoc::aotoc::AotocReport {
        method: aotoc::aotoc::Method::MonteCarlo,
        g: mean,
        g1: 0.0,
        g2: 0.0,
        bound: dims.bound,
        typical: dims.typical,
        mc_stderr: Some(stderr),
    };
    let out = ctx.out("haar-typical");
    let series = single_row(0.0, report, "haar-typical".into(), ctx.cfg.seed);
    ctx.finish("haar-typical", &out, &series, &[])?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn run_validate(ctx: &Ctx) -> Result<ExitCode> {
    let profile: Profile = ctx
        .cfg
        .profile
        .as_deref()
        .unwrap_or("fast")
        .parse()?;
    println!("validation suite, profile = {}", profile.as_str());
    let outcomes = run_all(profile);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{} checks, {} failed, total {:.1} s",
        outcomes.len(),
        failed,
        outcomes.iter().map(|o| o.seconds).sum::<f64>()
    );
    if all_passed(&outcomes) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
