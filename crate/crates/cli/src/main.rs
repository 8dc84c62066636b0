use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use ucert_core::bounds::{s_of_eps, tvd_upper, BoundParams, INCOHERENT_THRESHOLD_SCALE};
use ucert_core::certify::{
    diamond_distance_to_identity, hadamard_test_certify, queries_to_target, simulate_incoherent, Decision,
};
use ucert_core::ensembles::{
    eps_cue_batch, eps_cue_unitary, eps_uniform_eigenangles, haar_state, single_basis_rotation, PerturbationParams,
    SamplerConfig, SamplerMethod,
};
use ucert_core::experiment::{
    log_spread, phase_rows, run_fig5, sample_rows, write_csv, ExperimentConfig, ExperimentKind, GeometricGrid,
    TARGET_ERROR,
};
use ucert_core::qsvt::{qsvt_params, simulate_coherent, CircuitPath};
use ucert_core::{EigenangleSet, UnitaryMatrix};

const DEFAULT_D: usize = 4;
const DEFAULT_EPSILON: f64 = 0.01;
const DEFAULT_CHANNELS: usize = 200;
const DEFAULT_SEED: u64 = 0;

/// Simulator for certifying that an unknown unitary channel is the identity.
#[derive(Parser)]
#[command(name = "ucert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error curves of random-state testing over a batch of ε-CUE channels.
    Fig5 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid_start: Option<f64>,
        #[arg(long)]
        grid_stop: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Run one certifier on sampled channels and print the decisions as JSON lines.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Certifier::Incoherent)]
        certifier: Certifier,
        #[arg(long, value_enum, default_value_t = ChannelKind::EpsCue)]
        channel: ChannelKind,
        /// Query budget; defaults to the budget reaching error 1/3 for each channel.
        #[arg(long = "queries", short = 'N')]
        queries: Option<u64>,
    },
    /// Dump eigenangle samples as CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Ensemble::EpsCue)]
        ensemble: Ensemble,
    },
    /// Print the indistinguishability bound report as JSON.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Query count; defaults to 1e-8 d / s².
        #[arg(long = "queries", short = 'N')]
        queries: Option<f64>,
    },
    /// Solve the coherent certifier's phases and write them as CSV.
    QsvtDemo {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment description; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Channels (fig5, certify) or samples (sample).
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long, env = "UCERT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Eigenangle sampler; defaults depend on d.
    #[arg(long, value_enum)]
    sampler: Option<Method>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Certifier {
    Incoherent,
    Hadamard,
    Coherent,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    EpsCue,
    Rotation,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ensemble {
    EpsCue,
    EpsUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    ExactD3,
    Rejection,
    Mcmc,
}

impl From<Method> for SamplerMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::ExactD3 => SamplerMethod::ExactD3,
            Method::Rejection => SamplerMethod::Rejection,
            Method::Mcmc => SamplerMethod::Mcmc,
        }
    }
}

/// Merges flags over the config file over defaults.
fn resolve(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let file = match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::from_json_file(path)?;
            if cfg.experiment != kind {
                bail!("{} describes a {:?} run, not {:?}", path.display(), cfg.experiment, kind);
            }
            Some(cfg)
        }
        None => None,
    };
    let mut cfg = file.unwrap_or(ExperimentConfig {
        experiment: kind,
        d: DEFAULT_D,
        epsilon: DEFAULT_EPSILON,
        channels: DEFAULT_CHANNELS,
        n_grid: GeometricGrid::default(),
        seed: DEFAULT_SEED,
        sampler: None,
        output_dir: PathBuf::from("."),
    });
    if let Some(d) = common.d {
        cfg.d = d;
    }
    if let Some(e) = common.epsilon {
        cfg.epsilon = e;
    }
    if let Some(c) = common.channels {
        cfg.channels = c;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if cfg.d < 1 {
        bail!("d must be at least 1");
    }
    let eps = PerturbationParams::new(cfg.epsilon)?;
    if let Some(m) = common.sampler {
        let base = cfg.sampler.take().unwrap_or_else(|| SamplerConfig::defaults(cfg.d, &eps, cfg.seed));
        cfg.sampler = Some(base.with_method(m.into()));
    }
    if let Some(s) = &mut cfg.sampler {
        s.seed = cfg.seed;
        s.validate()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sampler_for(cfg: &ExperimentConfig, eps: &PerturbationParams) -> SamplerConfig {
    cfg.sampler.clone().unwrap_or_else(|| SamplerConfig::defaults(cfg.d, eps, cfg.seed))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn fig5(common: &Common, start: Option<f64>, stop: Option<f64>, points: Option<usize>) -> Result<()> {
    let mut cfg = resolve(common, ExperimentKind::Fig5Curves)?;
    if let Some(v) = start {
        cfg.n_grid.start = v;
    }
    if let Some(v) = stop {
        cfg.n_grid.stop = v;
    }
    if let Some(v) = points {
        cfg.n_grid.points = v;
    }
    let out = run_fig5(&cfg)?;
    let ns: Vec<u64> = out.channels.iter().map(|c| c.n_star).collect();
    let (median, sd) = log_spread(&ns);
    println!(
        "{}",
        json!({
            "d": cfg.d,
            "epsilon": cfg.epsilon,
            "channels": ns.len(),
            "median_N_star": median,
            "std_log10_N_star": sd,
            "curves": out.curves_path,
            "summary": out.summary_path,
        })
    );
    Ok(())
}

fn certify(common: &Common, certifier: Certifier, channel: ChannelKind, queries: Option<u64>) -> Result<()> {
    let cfg = resolve(common, ExperimentKind::Certify)?;
    let eps = PerturbationParams::new(cfg.epsilon)?;
    let sampler = sampler_for(&cfg, &eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plan = match certifier {
        Certifier::Coherent => {
            let mut plan = qsvt_params(cfg.d, cfg.epsilon)?;
            plan.solve()?;
            Some(plan)
        }
        _ => None,
    };
    for index in 0..cfg.channels {
        let u = match channel {
            ChannelKind::EpsCue => eps_cue_unitary(cfg.d, &eps, &sampler, &mut rng)?,
            ChannelKind::Rotation => {
                let psi = haar_state(cfg.d, &mut rng)?;
                single_basis_rotation(cfg.d, &eps, &psi)?
            }
            ChannelKind::Identity => UnitaryMatrix::identity(cfg.d),
        };
        let distance = diamond_distance_to_identity(&u)?;
        let decision: Decision = match certifier {
            Certifier::Incoherent => {
                let n = match queries {
                    Some(n) => n,
                    None => queries_to_target(&u, TARGET_ERROR).unwrap_or(1),
                };
                simulate_incoherent(&u, n, &mut rng)?
            }
            Certifier::Hadamard => {
                let psi = haar_state(cfg.d, &mut rng)?;
                hadamard_test_certify(&u, &psi, queries.unwrap_or(1000), cfg.epsilon, &mut rng)?
            }
            Certifier::Coherent => simulate_coherent(&u, plan.as_ref().expect("solved above"), CircuitPath::Fast, &mut rng)?,
        };
        println!(
            "{}",
            json!({ "index": index, "d": cfg.d, "epsilon": cfg.epsilon, "distance": distance, "decision": decision })
        );
    }
    Ok(())
}

fn sample(common: &Common, ensemble: Ensemble) -> Result<()> {
    let cfg = resolve(common, ExperimentKind::Sample)?;
    let eps = PerturbationParams::new(cfg.epsilon)?;
    let sampler = sampler_for(&cfg, &eps);
    let mut rng = sampler.rng();
    let (kind, samples): (&str, Vec<EigenangleSet>) = match ensemble {
        Ensemble::EpsCue => ("eps_cue", eps_cue_batch(cfg.d, &eps, &sampler, cfg.channels, &mut rng)?),
        Ensemble::EpsUniform => (
            "eps_uniform",
            (0..cfg.channels).map(|_| eps_uniform_eigenangles(cfg.d, &eps, &mut rng)).collect::<Result<_, _>>()?,
        ),
    };
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(format!("samples_{kind}_d{}.csv", cfg.d));
    write_csv(&sample_rows(kind, cfg.epsilon, cfg.seed, &samples), &path)?;
    println!("{}", json!({ "samples": samples.len(), "path": path }));
    Ok(())
}

fn bounds(common: &Common, queries: Option<f64>) -> Result<()> {
    let cfg = resolve(common, ExperimentKind::Bounds)?;
    let s = s_of_eps(cfg.epsilon)?;
    let n = queries.unwrap_or(INCOHERENT_THRESHOLD_SCALE * cfg.d as f64 / (s * s));
    let report = tvd_upper(s, cfg.d, n, &BoundParams::defaults(cfg.d))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn qsvt_demo(common: &Common) -> Result<()> {
    let cfg = resolve(common, ExperimentKind::QsvtDemo)?;
    let mut plan = qsvt_params(cfg.d, cfg.epsilon)?;
    let residual = plan.solve()?;
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(format!("phases_d{}.csv", cfg.d));
    write_csv(&phase_rows(&plan.phases), &path)?;
    println!(
        "{}",
        json!({
            "d": cfg.d,
            "epsilon": cfg.epsilon,
            "delta": plan.delta,
            "degree": plan.degree,
            "residual": residual,
            "path": path,
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fig5 { common, grid_start, grid_stop, grid_points } => fig5(common, *grid_start, *grid_stop, *grid_points),
        Command::Certify { common, certifier, channel, queries } => certify(common, *certifier, *channel, *queries),
        Command::Sample { common, ensemble } => sample(common, *ensemble),
        Command::Bounds { common, queries } => bounds(common, *queries),
        Command::QsvtDemo { common } => qsvt_demo(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
