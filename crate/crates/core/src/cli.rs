//! Command-line front end. Every invocation writes its outputs and a
//! `manifest.json` into `--out`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::clique::{success_rate, SearchConfig};
use crate::encoding::{encode, encode_with_squeezing, squeezing_report, EncodedExperiment};
use crate::error::{Error, Result};
use crate::experiments::{
    derive_seed, device_state, run_entropy, run_improvement, run_landscape, run_loss_prob, run_scaling,
    write_rows, Grid, Instance, Manifest, OhPairs, SamplerKind, ScalingConfig, SuccessBench, SuccessConfig,
    UniformSizes,
};
use crate::graph::{load_graph, save_graph, FixtureSpec, Graph};
use crate::probability::{PhotonPattern, ProbabilityEngine};
use crate::samplers::{oh_sampler, uniform_sampler, ExactSampler, PairLaw, SampleBatch, SizeLaw};

/// Environment variable read for the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "DGBS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dgbs", version, about = "Displaced Gaussian boson sampling for max-clique search")]
struct Cli {
    /// Base seed; sub-tasks derive their own streams from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Graph file (.json or .csv). Without it a seeded planted-clique fixture is generated.
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a planted-clique fixture graph as JSON and CSV.
    Fixture(FixtureArgs),
    /// Encode the graph into squeezing and displacement parameters.
    Encode(EncodeArgs),
    /// Probability of one photon pattern, or the whole size-k subset distribution.
    Prob(ProbArgs),
    /// Draw click patterns from one sampler into a JSONL batch.
    Sample(SampleArgs),
    /// Run greedy shrinking and local search on a JSONL batch.
    Clique(CliqueArgs),
    /// Run one of the experiment scenarios.
    Experiment {
        #[command(subcommand)]
        scenario: Scenario,
    },
}

/// `nodes:clique:p:seed` of a planted-clique Erdős–Rényi graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixtureArg {
    pub nodes: usize,
    pub clique: usize,
    pub p: f64,
    pub seed: u64,
}

impl FixtureArg {
    const fn new(nodes: usize, clique: usize, p: f64, seed: u64) -> Self {
        FixtureArg { nodes, clique, p, seed }
    }

    fn instance(&self) -> Result<Instance> {
        let fx = FixtureSpec::new(self.nodes, self.clique, self.p, self.seed).build()?;
        Ok(Instance {
            graph: fx.graph,
            target: fx.clique,
        })
    }
}

impl FromStr for FixtureArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("fixture must be nodes:clique:p:seed, got {s:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(FixtureArg {
            nodes: parts[0].parse().map_err(|_| bad())?,
            clique: parts[1].parse().map_err(|_| bad())?,
            p: parts[2].parse().map_err(|_| bad())?,
            seed: parts[3].parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for FixtureArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.nodes, self.clique, self.p, self.seed)
    }
}

pub const DEMO_FIXTURE: FixtureArg = FixtureArg::new(6, 4, 0.5, 7);
pub const SUCCESS_FIXTURE: FixtureArg = FixtureArg::new(16, 8, 0.2, 1);
pub const LOSS_SUCCESS_FIXTURE: FixtureArg = FixtureArg::new(12, 6, 0.2, 1);
pub const ENTROPY_FIXTURE: FixtureArg = FixtureArg::new(18, 6, 0.2, 1);

/// Reference budgets, quoted for 24 modes and scaled linearly to the graph size.
pub const REFERENCE_N_SQZ: f64 = 2.34;
pub const REFERENCE_N_DISP: f64 = 10.0;
pub const REFERENCE_MODES: f64 = 24.0;

#[derive(Debug, Args, Serialize)]
struct FixtureArgs {
    #[arg(long, default_value_t = DEMO_FIXTURE)]
    spec: FixtureArg,
    /// File stem inside `--out`.
    #[arg(long, default_value = "graph")]
    name: String,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DeviceArgs {
    /// Largest Takagi value of the plain embedding.
    #[arg(long, default_value_t = 0.5)]
    lambda_max: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Kernel loop strength.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Per-mode transmission.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = DEMO_FIXTURE)]
    fixture: FixtureArg,
}

impl DeviceArgs {
    fn encode(&self, g: &Graph) -> Result<EncodedExperiment> {
        encode(g, self.lambda_max, self.alpha)
    }
}

#[derive(Debug, Args, Serialize)]
struct EncodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    device: DeviceArgs,
    /// Pick the squeezing scale from a mean squeezed-photon budget instead of `--lambda-max`.
    #[arg(long)]
    n_sqz: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct ProbArgs {
    #[command(flatten)]
    #[serde(flatten)]
    device: DeviceArgs,
    /// Comma-separated photon counts, one per node.
    #[arg(long, conflicts_with = "subset_size")]
    pattern: Option<String>,
    /// Write the distribution over all click subsets of this size.
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long)]
    renormalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SizeLawArg {
    GbsMarginal,
    Flat,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    device: DeviceArgs,
    #[arg(long, default_value = "dgbs")]
    sampler: SamplerKind,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    k_min: usize,
    /// Largest click count; all nodes when absent.
    #[arg(long)]
    k_max: Option<usize>,
    /// Size law of the uniform sampler.
    #[arg(long, value_enum, default_value_t = SizeLawArg::GbsMarginal)]
    size_law: SizeLawArg,
    /// Fixed pair count for the pair sampler; the GBS pair marginal when absent.
    #[arg(long)]
    pairs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct CliqueArgs {
    /// JSONL batch written by `sample`.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 7)]
    n_iter: usize,
    #[arg(long, default_value_t = DEMO_FIXTURE)]
    fixture: FixtureArg,
}

#[derive(Debug, Subcommand)]
enum Scenario {
    /// Target probability over (γ, λ_max).
    Landscape(LandscapeArgs),
    /// Optimal-γ improvement over plain GBS per λ_max.
    Improvement(ImprovementArgs),
    /// Target probability over (η, γ).
    LossProb(LossProbArgs),
    /// Success rates of D-GBS under loss.
    LossSuccess(SuccessArgs),
    /// Success rates of D-GBS, GBS, uniform and pair samplers.
    SuccessRate(SuccessArgs),
    /// Entropy of the size-|C| slice along γ.
    Entropy(EntropyArgs),
    /// Improvement and photon budgets across graph sizes.
    Scaling(ScalingArgs),
}

#[derive(Debug, Args, Serialize)]
struct LandscapeArgs {
    #[arg(long, default_value = "0:1.5:31")]
    gammas: Grid,
    #[arg(long, default_value = "0.05:0.95:19")]
    lambdas: Grid,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEMO_FIXTURE)]
    fixture: FixtureArg,
}

#[derive(Debug, Args, Serialize)]
struct ImprovementArgs {
    /// Coarse bracket for the golden-section search.
    #[arg(long, default_value = "0:1.5:31")]
    gammas: Grid,
    #[arg(long, default_value = "0.05:0.95:19")]
    lambdas: Grid,
    #[arg(long, default_value_t = DEMO_FIXTURE)]
    fixture: FixtureArg,
}

#[derive(Debug, Args, Serialize)]
struct LossProbArgs {
    #[arg(long, default_value_t = 0.5)]
    lambda_max: f64,
    #[arg(long, default_value = "0.1:1:10")]
    etas: Grid,
    #[arg(long, default_value = "0:1.5:16")]
    gammas: Grid,
    #[arg(long, default_value_t = DEMO_FIXTURE)]
    fixture: FixtureArg,
}

#[derive(Debug, Args, Serialize)]
struct SuccessArgs {
    /// Mean squeezed-photon number; the 24-mode reference scaled to the graph size when absent.
    #[arg(long)]
    n_sqz: Option<f64>,
    /// Mean displacement photon number; scaled like `--n-sqz` when absent.
    #[arg(long)]
    n_disp: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long)]
    etas: Option<Grid>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 7)]
    n_iter: usize,
    #[arg(long, default_value_t = 0)]
    k_min: usize,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = SizeLawArg::GbsMarginal)]
    uniform_sizes: SizeLawArg,
    #[arg(long)]
    oh_pairs: Option<usize>,
    /// Comma-separated subset of dgbs,gbs,uniform,oh.
    #[arg(long, value_delimiter = ',')]
    samplers: Option<Vec<SamplerKind>>,
    #[arg(long)]
    fixture: Option<FixtureArg>,
}

#[derive(Debug, Args, Serialize)]
struct EntropyArgs {
    #[arg(long, default_value_t = 0.5)]
    lambda_max: f64,
    #[arg(long, default_value = "0:1:6")]
    gammas: Grid,
    #[arg(long, default_value_t = ENTROPY_FIXTURE)]
    fixture: FixtureArg,
}

#[derive(Debug, Args, Serialize)]
struct ScalingArgs {
    /// Comma-separated `nodes:clique` points.
    #[arg(long, default_value = "8:4,12:6,16:8")]
    points: String,
    #[arg(long, default_value_t = 10)]
    graphs: usize,
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda_max: f64,
    #[arg(long, default_value = "0:1.5:31")]
    gammas: Grid,
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    graph: Option<PathBuf>,
    command: String,
    threads: Option<usize>,
    outputs: Vec<String>,
}

impl Ctx {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    /// `--graph` when given, else the fixture. `certify` demands a unique maximum clique.
    fn instance(&self, fixture: &FixtureArg, certify: bool) -> Result<Instance> {
        match &self.graph {
            Some(p) => {
                let g = load_graph(p)?;
                if certify {
                    Instance::certified(g)
                } else {
                    Instance::with_any_maximum(g)
                }
            }
            None => fixture.instance(),
        }
    }

    fn finish(self, config: serde_json::Value) -> Result<()> {
        let mut m = Manifest::new(self.command, self.seed, config);
        m.threads = self.threads;
        m.outputs = self.outputs;
        m.write(&self.out)
    }
}

/// Runs the CLI on `args` (program name first) and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    match run(cli, command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads(requested: Option<usize>) -> Result<Option<usize>> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(n)
}

fn run(cli: Cli, command: String) -> Result<()> {
    let threads = configure_threads(cli.threads)?;
    if let Some(p) = &cli.graph {
        if !p.exists() {
            return Err(Error::invalid(format!("graph file {} does not exist", p.display())));
        }
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let mut ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        graph: cli.graph,
        command,
        threads,
        outputs: Vec::new(),
    };
    let config = match cli.command {
        Command::Fixture(a) => fixture_cmd(&mut ctx, &a)?,
        Command::Encode(a) => encode_cmd(&mut ctx, &a)?,
        Command::Prob(a) => prob_cmd(&mut ctx, &a)?,
        Command::Sample(a) => sample_cmd(&mut ctx, &a)?,
        Command::Clique(a) => clique_cmd(&mut ctx, &a)?,
        Command::Experiment { scenario } => experiment_cmd(&mut ctx, scenario)?,
    };
    ctx.finish(config)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn fixture_cmd(ctx: &mut Ctx, a: &FixtureArgs) -> Result<serde_json::Value> {
    let inst = a.spec.instance()?;
    save_graph(&inst.graph, ctx.path(&format!("{}.json", a.name)))?;
    save_graph(&inst.graph, ctx.path(&format!("{}.csv", a.name)))?;
    println!("planted clique {}", inst.target);
    Ok(json!({ "fixture": a, "target": inst.target.members() }))
}

fn encode_cmd(ctx: &mut Ctx, a: &EncodeArgs) -> Result<serde_json::Value> {
    let inst = ctx.instance(&a.device.fixture, false)?;
    let exp = match a.n_sqz {
        Some(n) => encode_with_squeezing(&inst.graph, n, a.device.alpha)?,
        None => a.device.encode(&inst.graph)?,
    };
    let state = device_state(&exp, a.device.gamma, a.device.eta)?;
    let exp = exp.with_kernel_gamma(a.device.gamma)?;
    write_json(
        &ctx.path("encoding.json"),
        &json!({
            "experiment": exp,
            "squeezing": squeezing_report(&exp),
            "budget": state.mean_photon_budget(),
        }),
    )?;
    state.write_json(ctx.path("state.json"))?;
    Ok(serde_json::to_value(a)?)
}

fn prob_cmd(ctx: &mut Ctx, a: &ProbArgs) -> Result<serde_json::Value> {
    let inst = ctx.instance(&a.device.fixture, false)?;
    let exp = a.device.encode(&inst.graph)?;
    let engine = ProbabilityEngine::new(&device_state(&exp, a.device.gamma, a.device.eta)?)?;
    let m = inst.graph.node_count();
    if let Some(k) = a.subset_size {
        let dist = engine.subset_distribution(k, a.renormalize)?;
        dist.write_csv(&inst.graph, ctx.path("distribution.csv"))?;
        return Ok(json!({ "args": a, "total_raw_mass": dist.total_raw_mass }));
    }
    let pattern = match &a.pattern {
        Some(s) => {
            let counts = s
                .split(',')
                .map(|x| x.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::invalid(format!("bad photon pattern {s:?}")))?;
            PhotonPattern::new(counts)
        }
        None => PhotonPattern::from_subset(&inst.target, m),
    };
    if pattern.counts().len() != m {
        return Err(Error::invalid(format!(
            "pattern has {} entries for {m} modes",
            pattern.counts().len()
        )));
    }
    let p = engine.prob(&pattern)?;
    println!("{}", crate::output::fmt_f64(p));
    write_json(
        &ctx.path("probability.json"),
        &json!({ "pattern": pattern.counts(), "probability": p, "convention": "raw" }),
    )?;
    Ok(serde_json::to_value(a)?)
}

fn sample_cmd(ctx: &mut Ctx, a: &SampleArgs) -> Result<serde_json::Value> {
    let inst = ctx.instance(&a.device.fixture, false)?;
    let m = inst.graph.node_count();
    let k_max = a.k_max.unwrap_or(m).min(m);
    let exp = a.device.encode(&inst.graph)?;
    let marginal = || -> Result<Vec<f64>> {
        Ok(ExactSampler::new(&device_state(&exp, 0.0, 1.0)?, a.k_min, k_max)?.size_marginal())
    };
    let batch: SampleBatch = match a.sampler {
        SamplerKind::Dgbs | SamplerKind::Gbs => {
            let gamma = if a.sampler == SamplerKind::Gbs { 0.0 } else { a.device.gamma };
            ExactSampler::new(&device_state(&exp, gamma, a.device.eta)?, a.k_min, k_max)?.sample(a.count, ctx.seed)?
        }
        SamplerKind::Uniform => {
            let law = match a.size_law {
                SizeLawArg::Flat => SizeLaw::Flat { k_min: a.k_min, k_max },
                SizeLawArg::GbsMarginal => SizeLaw::Weights { weights: marginal()? },
            };
            uniform_sampler(m, &law, a.count, ctx.seed)?
        }
        SamplerKind::Oh => {
            let law = match a.pairs {
                Some(n) => PairLaw::Fixed { n_pairs: n },
                None => PairLaw::from_size_masses(&marginal()?),
            };
            oh_sampler(&exp.b, &law, a.count, ctx.seed)?
        }
    };
    batch.write_jsonl(ctx.path("samples.jsonl"))?;
    Ok(serde_json::to_value(a)?)
}

fn clique_cmd(ctx: &mut Ctx, a: &CliqueArgs) -> Result<serde_json::Value> {
    let inst = ctx.instance(&a.fixture, false)?;
    let batch = SampleBatch::read_jsonl(&a.samples)?;
    if batch.modes != inst.graph.node_count() {
        return Err(Error::invalid(format!(
            "batch has {} modes but the graph has {} nodes",
            batch.modes,
            inst.graph.node_count()
        )));
    }
    let cfg = SearchConfig {
        n_iter: a.n_iter,
        seed: ctx.seed,
        ..SearchConfig::default()
    };
    let rep = success_rate(&inst.graph, &batch.samples, &inst.target, &cfg)?;
    rep.write_csv(ctx.path("clique.csv"))?;
    println!("success rate {} ({} / {})", rep.rate, rep.successes(), batch.samples.len());
    Ok(json!({ "args": a, "target": inst.target.members(), "rate": rep.rate }))
}

fn experiment_cmd(ctx: &mut Ctx, scenario: Scenario) -> Result<serde_json::Value> {
    match scenario {
        Scenario::Landscape(a) => {
            let inst = ctx.instance(&a.fixture, true)?;
            let rows = run_landscape(&inst, &a.gammas, &a.lambdas, a.alpha)?;
            write_rows(&rows, ctx.path("landscape.csv"))?;
            Ok(json!({ "scenario": "landscape", "args": a, "target": inst.target.members() }))
        }
        Scenario::Improvement(a) => {
            let inst = ctx.instance(&a.fixture, true)?;
            let (rows, skipped) = run_improvement(&inst, &a.lambdas, &a.gammas)?;
            for l in &skipped {
                eprintln!("skipped lambda_max {l}: p_mc(0) underflows");
            }
            write_rows(&rows, ctx.path("improvement.csv"))?;
            Ok(json!({
                "scenario": "improvement",
                "args": a,
                "target": inst.target.members(),
                "gamma_tol": crate::experiments::GAMMA_TOL,
                "skipped_lambda_max": skipped,
            }))
        }
        Scenario::LossProb(a) => {
            let inst = ctx.instance(&a.fixture, true)?;
            let rows = run_loss_prob(&inst, a.lambda_max, &a.etas, &a.gammas)?;
            write_rows(&rows, ctx.path("loss_prob.csv"))?;
            Ok(json!({ "scenario": "loss-prob", "args": a, "target": inst.target.members() }))
        }
        Scenario::SuccessRate(a) => success_cmd(ctx, a, false),
        Scenario::LossSuccess(a) => success_cmd(ctx, a, true),
        Scenario::Entropy(a) => {
            let inst = ctx.instance(&a.fixture, true)?;
            let rows = run_entropy(&inst, a.lambda_max, &a.gammas)?;
            write_rows(&rows, ctx.path("entropy.csv"))?;
            Ok(json!({ "scenario": "entropy", "args": a, "target": inst.target.members() }))
        }
        Scenario::Scaling(a) => {
            if ctx.graph.is_some() {
                return Err(Error::invalid("scaling generates its own graphs; drop --graph"));
            }
            let points = a
                .points
                .split(',')
                .map(|p| {
                    let (m, k) = p
                        .split_once(':')
                        .ok_or_else(|| Error::invalid(format!("bad point {p:?}")))?;
                    let parse = |x: &str| {
                        x.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::invalid(format!("bad point {p:?}")))
                    };
                    Ok((parse(m)?, parse(k)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = ScalingConfig {
                points,
                graphs: a.graphs,
                p: a.p,
                lambda_max: a.lambda_max,
                gammas: a.gammas.clone(),
            };
            let rows = run_scaling(&cfg, ctx.seed)?;
            write_rows(&rows, ctx.path("scaling.csv"))?;
            Ok(json!({
                "scenario": "scaling",
                "config": cfg,
                "gamma_tol": crate::experiments::GAMMA_TOL,
                "ratio_slope": crate::experiments::ratio_slope(&rows),
            }))
        }
    }
}

fn success_cmd(ctx: &mut Ctx, a: SuccessArgs, lossy: bool) -> Result<serde_json::Value> {
    let (fixture, etas, samples, samplers, name) = if lossy {
        (LOSS_SUCCESS_FIXTURE, vec![1.0, 0.5, 0.3], 2000, vec![SamplerKind::Dgbs], "loss_success")
    } else {
        (
            SUCCESS_FIXTURE,
            vec![1.0],
            500,
            vec![SamplerKind::Dgbs, SamplerKind::Gbs, SamplerKind::Uniform, SamplerKind::Oh],
            "success_rate",
        )
    };
    let inst = ctx.instance(&a.fixture.unwrap_or(fixture), false)?;
    let scale = inst.graph.node_count() as f64 / REFERENCE_MODES;
    let mut cfg = SuccessConfig::new(
        a.n_sqz.unwrap_or(REFERENCE_N_SQZ * scale),
        a.n_disp.unwrap_or(REFERENCE_N_DISP * scale),
        a.samples.unwrap_or(samples),
    );
    cfg.alpha = a.alpha;
    cfg.etas = a.etas.as_ref().map(|g| g.values().to_vec()).unwrap_or(etas);
    cfg.n_iter = a.n_iter;
    cfg.k_min = a.k_min;
    cfg.k_max = a.k_max;
    cfg.uniform_sizes = match a.uniform_sizes {
        SizeLawArg::GbsMarginal => UniformSizes::GbsMarginal,
        SizeLawArg::Flat => UniformSizes::Flat,
    };
    cfg.oh_pairs = a.oh_pairs.map_or(OhPairs::GbsMarginal, OhPairs::Fixed);
    cfg.samplers = a.samplers.clone().unwrap_or(samplers);
    let started = std::time::Instant::now();
    let report = SuccessBench::prepare(&inst, &cfg)?.run(ctx.seed)?;
    let runtime = started.elapsed().as_secs_f64();
    write_rows(&report.rows, ctx.path(&format!("{name}.csv")))?;
    write_json(&ctx.path(&format!("{name}.json")), &report)?;
    eprintln!("{name}: {runtime:.2} s");
    Ok(json!({
        "scenario": if lossy { "loss-success" } else { "success-rate" },
        "config": cfg,
        "target": inst.target.members(),
        "sample_seed": derive_seed(ctx.seed, 0),
        "runtime_seconds": runtime,
    }))
}
