use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hardy_core::atoms::{campanato_norm, lipschitz_norm, validate_global_atom, validate_local_atom};
use hardy_core::decompose::{atomic_decompose_maximal, atomic_decompose_wavelet, reconstruct};
use hardy_core::dyadic::{refine_subcubes, verify_dyadic, DyadicSystem};
use hardy_core::harness::{
    export_global_local, export_report, generate_space, global_vs_local_experiment, read_ratio_csv,
    run_equivalence_on, write_point_csv, ExperimentConfig, ModelParams, SpaceKind, Workspace,
};
use hardy_core::io::{load_space, save_decomposition, save_family, save_space};
use hardy_core::kernels::{build_gauss_sinkhorn_family, build_haar_family, verify_iati, OperatorFamily};
use hardy_core::maximal::{grand_maximal_dict, hl_maximal, lp_quasinorm, nontangential_maximal, radial_local_maximal};
use hardy_core::reproducing::{reproduce_discrete, reproduce_exact, Sampler};
use hardy_core::square::{g_function, g_lambda_star, lusin_area};
use hardy_core::QuasiMetricSpace;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Local Hardy spaces on finite spaces of homogeneous type.
#[derive(Parser)]
#[command(name = "homog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Space generation.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Dyadic cube systems.
    Dyadic {
        #[command(subcommand)]
        action: DyadicAction,
    },
    /// Approximation-of-identity families.
    Kernels {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Maximal and square functions of f: per-point CSV plus a JSON summary.
    Norm(NormArgs),
    /// Atomic decomposition of f.
    Decompose(DecomposeArgs),
    /// Calderón reproducing identities (haar family).
    Reproduce(ReproduceArgs),
    /// Campanato and Lipschitz norms.
    Dual(DualArgs),
    /// Atom validation.
    Atoms {
        #[command(subcommand)]
        action: AtomAction,
    },
    /// Seeded experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Print the ratio tables of an exported report directory.
    Report {
        dir: PathBuf,
        /// Only rows whose spread max/min exceeds this.
        #[arg(long)]
        min_spread: Option<f64>,
    },
}

#[derive(Subcommand)]
enum SpaceAction {
    /// Generate a space from a JSON spec such as `{"kind":"grid1d","n":64,"spacing":0.03125}`.
    Gen {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DyadicAction {
    Build {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Haar,
    Gauss,
}

#[derive(Subcommand)]
enum KernelAction {
    Build {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A space file and the model knobs shared by the analysis commands.
#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Threshold level N.
    #[arg(long, default_value_t = 1)]
    n_low: usize,
    #[arg(long)]
    j0: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// The input function: a JSON array file, `const:V`, `spike:X` or `noise:SEED`.
    #[arg(long, default_value = "const:1")]
    f: String,
}

impl ModelArgs {
    fn workspace(&self) -> Result<Workspace> {
        let s = load_space(&self.space).with_context(|| format!("loading {}", self.space.display()))?;
        let params = ModelParams {
            nu: self.nu,
            a: self.a,
            delta: self.delta,
            k_max: self.k_max,
            n_low: self.n_low,
            j0: self.j0,
            ..Default::default()
        };
        Ok(Workspace::from_space(self.space.display().to_string(), s, &params)?)
    }

    fn input(&self, s: &QuasiMetricSpace) -> Result<Vec<f64>> {
        parse_function(&self.f, s)
    }
}

fn parse_function(spec: &str, s: &QuasiMetricSpace) -> Result<Vec<f64>> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let n = s.n();
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(vec![v.parse()?; n]);
    }
    if let Some(x) = spec.strip_prefix("spike:") {
        let x: usize = x.parse()?;
        if x >= n {
            bail!("spike point {x} outside a space of {n} points");
        }
        let mut f = vec![0.0; n];
        f[x] = 1.0 / s.mu(x);
        return Ok(f);
    }
    if let Some(seed) = spec.strip_prefix("noise:") {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.parse()?);
        return Ok((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    let f: Vec<f64> = serde_json::from_str(&fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?)?;
    if f.len() != n {
        bail!("function has {} values, the space has {n} points", f.len());
    }
    Ok(f)
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Which {
    Radial,
    Nontan,
    Grand,
    Hl,
    Lusin,
    G,
    Gstar,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "gauss")]
    family: Family,
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// `g*_λ` exponent; defaults to `2ω/p + 1`.
    #[arg(long)]
    lambda: Option<f64>,
    /// Per-point CSV; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary; stderr when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Maximal,
    Wavelet,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    route: RouteArg,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReproduceRoute {
    Exact,
    Discrete,
}

#[derive(Args)]
struct ReproduceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "exact")]
    route: ReproduceRoute,
    /// `center`, `worst` or `random:SEED`.
    #[arg(long, default_value = "center")]
    sampler: String,
    /// Top level K of the exact route; the last level when absent.
    #[arg(long)]
    k_top: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DualNorm {
    Campanato,
    Lipschitz,
}

#[derive(Args)]
struct DualArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_enum)]
    which: DualNorm,
    #[arg(long)]
    alpha: f64,
    /// Campanato exponent; `inf` accepted.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value = "const:1")]
    f: String,
}

#[derive(Subcommand)]
enum AtomAction {
    Validate {
        #[arg(long)]
        space: PathBuf,
        /// JSON array of atom values.
        #[arg(long)]
        atom: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        q: f64,
        /// Ball center; required unless `--global`.
        #[arg(long)]
        center: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        global: bool,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    Equivalence {
        /// JSON or TOML experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        size: Option<usize>,
    },
    Globallocal {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Random atoms per exponent.
        #[arg(long, default_value_t = 100)]
        atoms: usize,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => Ok(toml::from_str(&text)?),
        _ => Ok(serde_json::from_str(&text)?),
    }
}

fn emit(value: &serde_json::Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn family<'a>(ws: &'a Workspace, which: Family) -> &'a OperatorFamily {
    match which {
        Family::Haar => &ws.haar,
        Family::Gauss => &ws.gauss,
    }
}

fn run_norm(args: &NormArgs) -> Result<()> {
    let ws = args.model.workspace()?;
    let s = ws.space();
    let f = args.model.input(s)?;
    let fam = family(&ws, args.family);
    let lambda = args.lambda.unwrap_or(2.0 * ws.omega / args.p + 1.0);
    let values = match args.which {
        Which::Radial => radial_local_maximal(fam, &ws.dys, &ws.subidx, &f, ws.params.n_low)?,
        Which::Nontan => nontangential_maximal(fam, s, &f, args.theta)?,
        Which::Grand => grand_maximal_dict(&ws.dict, &f)?,
        Which::Hl => hl_maximal(s, &f),
        Which::Lusin => lusin_area(fam, s, &f, args.theta)?,
        Which::G => g_function(fam, s, &ws.dys, &ws.subidx, &f, Some(ws.params.n_low))?,
        Which::Gstar => g_lambda_star(fam, s, &f, lambda)?,
    };
    let name = args.which.to_possible_value().expect("no skipped variants").get_name().to_string();
    match &args.csv {
        Some(path) => write_point_csv(&["f", &name], &[&f, &values], fs::File::create(path)?)?,
        None => write_point_csv(&["f", &name], &[&f, &values], std::io::stdout().lock())?,
    }
    let summary = json!({
        "which": name,
        "family": format!("{:?}", fam.kind),
        "p": args.p,
        "theta": args.theta,
        "lambda": lambda,
        "n_low": ws.params.n_low,
        "lp_quasinorm": lp_quasinorm(s, &values, args.p)?,
    });
    match &args.summary {
        Some(path) => emit(&summary, Some(path))?,
        None => eprintln!("{}", serde_json::to_string(&summary)?),
    }
    Ok(())
}

fn run_decompose(args: &DecomposeArgs) -> Result<()> {
    let ws = args.model.workspace()?;
    let s = ws.space();
    let f = args.model.input(s)?;
    let (dec, info) = match args.route {
        RouteArg::Maximal => {
            let (d, i) = atomic_decompose_maximal(s, &ws.dict, &f, args.p)?;
            (d, serde_json::to_value(i)?)
        }
        RouteArg::Wavelet => {
            let eps = ws.default_eps(args.p, 64);
            let (d, i) = atomic_decompose_wavelet(s, &ws.dys, &ws.haar, &f, args.p, ws.params.n_low, &eps)?;
            (d, serde_json::to_value(i)?)
        }
    };
    let rebuilt = reconstruct(&dec);
    let max_err = rebuilt.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if let Some(out) = &args.out {
        save_decomposition(out, &dec)?;
    }
    emit(
        &json!({
            "atoms": dec.len(),
            "coefficient_norm": dec.coefficient_norm(),
            "residual": dec.residual,
            "max_pointwise_error": max_err,
            "route": info,
        }),
        None,
    )
}

fn run_reproduce(args: &ReproduceArgs) -> Result<()> {
    let ws = args.model.workspace()?;
    let f = args.model.input(ws.space())?;
    let report = match args.route {
        ReproduceRoute::Exact => reproduce_exact(&ws.haar, &f, args.k_top.unwrap_or(ws.haar.levels() - 1))?.1,
        ReproduceRoute::Discrete => {
            let sampler: Sampler = args.sampler.parse()?;
            reproduce_discrete(&ws.haar, &ws.dys, &ws.subidx, &f, ws.params.n_low, sampler)?.1
        }
    };
    emit(&serde_json::to_value(report)?, None)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Space { action: SpaceAction::Gen { spec, out } } => {
            let kind: SpaceKind = serde_json::from_str(&spec).context("parsing the space spec")?;
            let g = generate_space(&kind)?;
            save_space(&out, &g.space)?;
            emit(&json!({ "space": kind.name(), "n": g.space.n(), "a0": g.space.a0(), "doubling": g.doubling }), None)
        }
        Command::Dyadic { action: DyadicAction::Build { space, delta, k_max, out } } => {
            let s = load_space(&space)?;
            let dys = DyadicSystem::build(&s, delta, k_max)?;
            let report = verify_dyadic(&s, &dys);
            let sub = refine_subcubes(&dys, dys.min_j0())?;
            if let Some(out) = out {
                fs::write(out, serde_json::to_string(&json!({ "dyadic": dys, "subcubes": sub }))?)?;
            }
            emit(
                &json!({
                    "delta": dys.delta,
                    "k_max": dys.k_max,
                    "cubes_per_level": dys.cubes.iter().map(Vec::len).collect::<Vec<_>>(),
                    "min_j0": dys.min_j0(),
                    "valid": report.is_empty(),
                    "report": report,
                }),
                None,
            )
        }
        Command::Kernels { action: KernelAction::Build { space, family, nu, a, delta, k_max, out, seed } } => {
            let s = load_space(&space)?;
            let dys = DyadicSystem::build(&s, delta, k_max)?;
            let mut fam = match family {
                Family::Haar => build_haar_family(&s, &dys)?,
                Family::Gauss => build_gauss_sinkhorn_family(&s, &dys, nu, a)?,
            };
            let diag = verify_iati(&fam, &s, seed);
            fam.diagnostics = Some(diag);
            save_family(&out, &fam)?;
            emit(
                &json!({ "kind": fam.kind, "levels": fam.levels(), "marginal_error": fam.marginal_error, "diagnostics": diag }),
                None,
            )
        }
        Command::Norm(args) => run_norm(&args),
        Command::Decompose(args) => run_decompose(&args),
        Command::Reproduce(args) => run_reproduce(&args),
        Command::Dual(args) => {
            let s = load_space(&args.space)?;
            let f = parse_function(&args.f, &s)?;
            let value = match args.which {
                DualNorm::Campanato => campanato_norm(&s, &f, args.alpha, args.q)?,
                DualNorm::Lipschitz => lipschitz_norm(&s, &f, args.alpha)?,
            };
            emit(&json!({ "alpha": args.alpha, "q": args.q, "norm": value }), None)
        }
        Command::Atoms { action: AtomAction::Validate { space, atom, p, q, center, radius, global } } => {
            let s = load_space(&space)?;
            let a: Vec<f64> = serde_json::from_str(&fs::read_to_string(&atom)?)?;
            let report = if global {
                validate_global_atom(&s, &a, p, q)
            } else {
                let (c, r) = center.zip(radius).ok_or_else(|| anyhow!("--center and --radius are required for a local atom"))?;
                validate_local_atom(&s, &a, c, r, p, q)
            };
            emit(&json!({ "valid": report.is_empty(), "report": report }), None)?;
            if !report.is_empty() {
                std::process::exit(2);
            }
            Ok(())
        }
        Command::Experiment { action: ExperimentAction::Equivalence { config, out, seed, size } } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.suite.seed = seed;
            }
            if let Some(size) = size {
                cfg.suite.size = size;
            }
            let ws = Workspace::build(&cfg.space, &cfg.model)?;
            let report = run_equivalence_on(&ws, &cfg)?;
            for path in export_report(&report, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Experiment { action: ExperimentAction::Globallocal { config, out, atoms } } => {
            let cfg = load_config(config.as_deref())?;
            let ws = Workspace::build(&cfg.space, &cfg.model)?;
            let report = global_vs_local_experiment(&ws, &cfg, atoms)?;
            println!("{}", export_global_local(&report, &out)?.display());
            Ok(())
        }
        Command::Report { dir, min_spread } => {
            let tables = read_ratio_csv(fs::File::open(dir.join("ratios.csv"))?)?;
            let mut out = std::io::stdout().lock();
            for t in &tables {
                writeln!(out, "p = {}", t.p)?;
                writeln!(out, "| numerator | denominator | min | median | max | count |")?;
                writeln!(out, "|---|---|---|---|---|---|")?;
                for r in t.rows.iter().filter(|r| min_spread.is_none_or(|m| r.spread() > m)) {
                    writeln!(
                        out,
                        "| {} | {} | {:.4} | {:.4} | {:.4} | {} |",
                        r.numerator, r.denominator, r.min, r.median, r.max, r.count
                    )?;
                }
            }
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HOMOG_THREADS") {
        let n: usize = v.parse().with_context(|| format!("HOMOG_THREADS={v:?} is not a thread count"))?;
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    Ok(())
}

fn main() {
    env_logger::init();
    if let Err(e) = configure_threads().and_then(|_| run()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
