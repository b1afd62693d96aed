use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    clique_probability, derive_seed, device_state, encode_plain, log_log_slope, maximize, wilson_interval, Grid,
    Instance, GAMMA_TOL,
};
use crate::clique::{success_rate, SearchConfig};
use crate::encoding::{encode_with_squeezing, EncodedExperiment};
use crate::error::{Error, Result};
use crate::graph::FixtureSpec;
use crate::output::{fmt_f64, CsvOut};
use crate::probability::{binomial, shannon_entropy, ProbabilityEngine};
use crate::samplers::{oh_sampler, uniform_sampler, ExactSampler, PairLaw, SamplerSpec, SizeLaw};

/// A row of one of the scenario CSV files.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn write_rows<T: CsvRow>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut out = CsvOut::create(path.as_ref(), T::header())?;
    for r in rows {
        out.row(r.fields())?;
    }
    out.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeRow {
    pub gamma: f64,
    /// Scalar of the plain `B = c A` embedding.
    pub c: f64,
    pub lambda_max: f64,
    pub p_mc: f64,
}

impl CsvRow for LandscapeRow {
    fn header() -> &'static [&'static str] {
        &["gamma", "c", "lambda_max", "p_mc", "convention"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.gamma),
            fmt_f64(self.c),
            fmt_f64(self.lambda_max),
            fmt_f64(self.p_mc),
            "raw".into(),
        ]
    }
}

/// Raw target probability over the `(γ, λ_max)` grid, `λ_max` outermost.
pub fn run_landscape(inst: &Instance, gammas: &Grid, lambdas: &Grid, alpha: f64) -> Result<Vec<LandscapeRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas.values() {
        let exp = crate::encoding::encode(&inst.graph, lambda, alpha)?;
        let part: Vec<LandscapeRow> = gammas
            .values()
            .par_iter()
            .map(|&gamma| {
                Ok(LandscapeRow {
                    gamma,
                    c: exp.plain_c(),
                    lambda_max: lambda,
                    p_mc: clique_probability(&exp, &inst.target, gamma, 1.0)?,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(part);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementRow {
    pub lambda_max: f64,
    pub c: f64,
    pub gamma_opt: f64,
    pub p_mc_gbs: f64,
    pub p_mc_opt: f64,
    pub improvement: f64,
}

impl CsvRow for ImprovementRow {
    fn header() -> &'static [&'static str] {
        &["lambda_max", "c", "gamma_opt", "p_mc_gbs", "p_mc_opt", "improvement", "convention"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.lambda_max),
            fmt_f64(self.c),
            fmt_f64(self.gamma_opt),
            fmt_f64(self.p_mc_gbs),
            fmt_f64(self.p_mc_opt),
            fmt_f64(self.improvement),
            "raw".into(),
        ]
    }
}

/// Best `γ` for one encoding: `(γ*, p(0), p(γ*))`.
pub fn optimal_gamma(exp: &EncodedExperiment, inst: &Instance, gammas: &Grid) -> Result<(f64, f64, f64)> {
    let p0 = clique_probability(exp, &inst.target, 0.0, 1.0)?;
    let (g, p) = maximize(|g| clique_probability(exp, &inst.target, g, 1.0), gammas, GAMMA_TOL)?;
    if p0 >= p {
        return Ok((0.0, p0, p0));
    }
    Ok((g, p0, p))
}

/// `max_γ p_mc(γ) / p_mc(0)` per `λ_max`. Rows where `p_mc(0)` underflows to
/// zero are left out and their `λ_max` returned separately.
pub fn run_improvement(inst: &Instance, lambdas: &Grid, gammas: &Grid) -> Result<(Vec<ImprovementRow>, Vec<f64>)> {
    let results: Vec<(f64, Option<ImprovementRow>)> = lambdas
        .values()
        .par_iter()
        .map(|&lambda| {
            let exp = encode_plain(&inst.graph, lambda)?;
            let (g, p0, p) = optimal_gamma(&exp, inst, gammas)?;
            let row = (p0 > 0.0).then(|| ImprovementRow {
                lambda_max: lambda,
                c: exp.plain_c(),
                gamma_opt: g,
                p_mc_gbs: p0,
                p_mc_opt: p,
                improvement: p / p0,
            });
            Ok((lambda, row))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (lambda, row) in results {
        match row {
            Some(r) => rows.push(r),
            None => skipped.push(lambda),
        }
    }
    Ok((rows, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossProbRow {
    pub eta: f64,
    pub gamma: f64,
    pub p_mc: f64,
}

impl CsvRow for LossProbRow {
    fn header() -> &'static [&'static str] {
        &["eta", "gamma", "p_mc", "convention"]
    }

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.eta), fmt_f64(self.gamma), fmt_f64(self.p_mc), "raw".into()]
    }
}

/// Raw target probability over `(η, γ)` at fixed `λ_max`, `η` outermost.
pub fn run_loss_prob(inst: &Instance, lambda_max: f64, etas: &Grid, gammas: &Grid) -> Result<Vec<LossProbRow>> {
    let exp = encode_plain(&inst.graph, lambda_max)?;
    let points: Vec<(f64, f64)> = etas
        .values()
        .iter()
        .flat_map(|&e| gammas.values().iter().map(move |&g| (e, g)))
        .collect();
    points
        .par_iter()
        .map(|&(eta, gamma)| {
            Ok(LossProbRow {
                eta,
                gamma,
                p_mc: clique_probability(&exp, &inst.target, gamma, eta)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Dgbs,
    Gbs,
    Uniform,
    Oh,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Dgbs => "dgbs",
            SamplerKind::Gbs => "gbs",
            SamplerKind::Uniform => "uniform",
            SamplerKind::Oh => "oh",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dgbs" => Ok(SamplerKind::Dgbs),
            "gbs" => Ok(SamplerKind::Gbs),
            "uniform" => Ok(SamplerKind::Uniform),
            "oh" => Ok(SamplerKind::Oh),
            _ => Err(Error::invalid(format!("unknown sampler {s:?}"))),
        }
    }
}

/// Size law of the uniform baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformSizes {
    /// Sizes follow the exact GBS photon-number marginal over the window.
    GbsMarginal,
    /// Every size in the window equally likely.
    Flat,
}

/// Pairs per sample for the pair sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OhPairs {
    GbsMarginal,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessConfig {
    /// Mean squeezed-photon number of the lossless device.
    pub n_sqz: f64,
    /// Mean displacement photon number of the lossless D-GBS device.
    pub n_disp: f64,
    pub alpha: f64,
    pub etas: Vec<f64>,
    pub samples: usize,
    pub k_min: usize,
    /// Largest click count kept; all nodes when absent.
    pub k_max: Option<usize>,
    pub n_iter: usize,
    pub weight_priority: bool,
    pub swap_weighted: bool,
    pub uniform_sizes: UniformSizes,
    pub oh_pairs: OhPairs,
    pub samplers: Vec<SamplerKind>,
}

impl SuccessConfig {
    pub fn new(n_sqz: f64, n_disp: f64, samples: usize) -> Self {
        SuccessConfig {
            n_sqz,
            n_disp,
            alpha: 0.0,
            etas: vec![1.0],
            samples,
            k_min: 0,
            k_max: None,
            n_iter: 7,
            weight_priority: true,
            swap_weighted: false,
            uniform_sizes: UniformSizes::GbsMarginal,
            oh_pairs: OhPairs::GbsMarginal,
            samplers: vec![SamplerKind::Dgbs, SamplerKind::Gbs, SamplerKind::Uniform, SamplerKind::Oh],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budget {
    pub lambda_max: f64,
    /// Kernel loop strength giving the requested displacement budget.
    pub gamma: f64,
    pub n_sqz: f64,
    pub n_disp: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerRow {
    pub sampler: SamplerKind,
    pub eta: f64,
    pub samples: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rejection_rate: Option<f64>,
}

impl CsvRow for SamplerRow {
    fn header() -> &'static [&'static str] {
        &["sampler", "eta", "samples", "successes", "rate", "ci_low", "ci_high", "rejection_rate"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.sampler.to_string(),
            fmt_f64(self.eta),
            self.samples.to_string(),
            self.successes.to_string(),
            fmt_f64(self.rate),
            fmt_f64(self.ci_low),
            fmt_f64(self.ci_high),
            self.rejection_rate.map(fmt_f64).unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerReport {
    pub budget: Budget,
    pub uniform_size_law: SizeLaw,
    pub oh_pair_law: PairLaw,
    pub rows: Vec<SamplerRow>,
    /// Wall time of sampling and clique search, excluding table preparation.
    pub runtime_seconds: f64,
}

/// Exact tables and laws for a success-rate comparison, built once and then
/// sampled under as many seeds as needed.
pub struct SuccessBench {
    inst: Instance,
    cfg: SuccessConfig,
    budget: Budget,
    b: nalgebra::DMatrix<f64>,
    exact: Vec<(SamplerKind, f64, ExactSampler)>,
    size_law: SizeLaw,
    pair_law: PairLaw,
}

impl SuccessBench {
    pub fn prepare(inst: &Instance, cfg: &SuccessConfig) -> Result<Self> {
        if cfg.samples == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        let m = inst.graph.node_count();
        let exp = encode_with_squeezing(&inst.graph, cfg.n_sqz, cfg.alpha)?;
        let gamma = if cfg.n_disp > 0.0 {
            let unit = device_state(&exp, 1.0, 1.0)?.mean_photon_budget().n_disp;
            (cfg.n_disp / unit).sqrt()
        } else {
            0.0
        };
        let photons = device_state(&exp, gamma, 1.0)?.mean_photon_budget();
        let budget = Budget {
            lambda_max: exp.lambda_max(),
            gamma,
            n_sqz: photons.n_sqz,
            n_disp: photons.n_disp,
            ratio: photons.ratio,
        };
        let k_max = cfg.k_max.unwrap_or(m).min(m);
        let gbs = ExactSampler::new(&device_state(&exp, 0.0, 1.0)?, cfg.k_min, k_max)?;
        let marginal = gbs.size_marginal();
        let size_law = match cfg.uniform_sizes {
            UniformSizes::GbsMarginal => SizeLaw::Weights {
                weights: marginal.clone(),
            },
            UniformSizes::Flat => SizeLaw::Flat {
                k_min: cfg.k_min,
                k_max,
            },
        };
        let pair_law = match cfg.oh_pairs {
            OhPairs::GbsMarginal => PairLaw::from_size_masses(&marginal),
            OhPairs::Fixed(n) => PairLaw::Fixed { n_pairs: n },
        };
        let mut exact = Vec::new();
        for &eta in &cfg.etas {
            for &kind in &cfg.samplers {
                let g = match kind {
                    SamplerKind::Dgbs => gamma,
                    SamplerKind::Gbs => 0.0,
                    _ => continue,
                };
                let sampler = if eta == 1.0 && g == 0.0 {
                    gbs.clone()
                } else {
                    ExactSampler::new(&device_state(&exp, g, eta)?, cfg.k_min, k_max)?
                };
                exact.push((kind, eta, sampler));
            }
        }
        Ok(SuccessBench {
            inst: inst.clone(),
            cfg: cfg.clone(),
            budget,
            b: exp.b.clone(),
            exact,
            size_law,
            pair_law,
        })
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    /// One row per sampler (and per `η` for the exact samplers). GBS and D-GBS
    /// draw with the same seed, so they coincide when the loop strength is 0.
    pub fn run(&self, seed: u64) -> Result<SamplerReport> {
        let started = std::time::Instant::now();
        let search = SearchConfig {
            n_iter: self.cfg.n_iter,
            seed: derive_seed(seed, 3),
            weight_priority: self.cfg.weight_priority,
            swap_weighted: self.cfg.swap_weighted,
        };
        let n = self.cfg.samples;
        let m = self.inst.graph.node_count();
        let mut rows = Vec::new();
        let mut push = |kind: SamplerKind, eta: f64, samples: &[crate::graph::NodeSubset], rejection: Option<f64>| -> Result<()> {
            let rep = success_rate(&self.inst.graph, samples, &self.inst.target, &search)?;
            let k = rep.successes();
            let (lo, hi) = wilson_interval(k, n);
            rows.push(SamplerRow {
                sampler: kind,
                eta,
                samples: n,
                successes: k,
                rate: rep.rate,
                ci_low: lo,
                ci_high: hi,
                rejection_rate: rejection,
            });
            Ok(())
        };
        for (kind, eta, sampler) in &self.exact {
            let batch = sampler.sample(n, derive_seed(seed, 0))?;
            push(*kind, *eta, &batch.samples, None)?;
        }
        if self.cfg.samplers.contains(&SamplerKind::Uniform) {
            let batch = uniform_sampler(m, &self.size_law, n, derive_seed(seed, 1))?;
            push(SamplerKind::Uniform, 1.0, &batch.samples, None)?;
        }
        if self.cfg.samplers.contains(&SamplerKind::Oh) {
            let batch = oh_sampler(&self.b, &self.pair_law, n, derive_seed(seed, 2))?;
            let rejection = match batch.source {
                SamplerSpec::Oh { rejection_rate, .. } => Some(rejection_rate),
                _ => None,
            };
            push(SamplerKind::Oh, 1.0, &batch.samples, rejection)?;
        }
        Ok(SamplerReport {
            budget: self.budget.clone(),
            uniform_size_law: self.size_law.clone(),
            oh_pair_law: self.pair_law.clone(),
            rows,
            runtime_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

pub fn run_success(inst: &Instance, cfg: &SuccessConfig, seed: u64) -> Result<SamplerReport> {
    SuccessBench::prepare(inst, cfg)?.run(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub gamma: f64,
    pub entropy: f64,
    /// `log₂ C(M, k)`, the entropy of the uniform distribution on the slice.
    pub max_entropy: f64,
    pub p_mc_conditioned: f64,
    pub slice_mass: f64,
}

impl CsvRow for EntropyRow {
    fn header() -> &'static [&'static str] {
        &["gamma", "entropy", "max_entropy", "p_mc_conditioned", "slice_mass", "convention"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.gamma),
            fmt_f64(self.entropy),
            fmt_f64(self.max_entropy),
            fmt_f64(self.p_mc_conditioned),
            fmt_f64(self.slice_mass),
            "renormalized".into(),
        ]
    }
}

/// Entropy of the size-`|C|` slice, renormalized, along a `γ` grid.
pub fn run_entropy(inst: &Instance, lambda_max: f64, gammas: &Grid) -> Result<Vec<EntropyRow>> {
    let exp = encode_plain(&inst.graph, lambda_max)?;
    let k = inst.target.len();
    let max_entropy = (binomial(inst.graph.node_count(), k) as f64).log2();
    gammas
        .values()
        .iter()
        .map(|&gamma| {
            let engine = ProbabilityEngine::new(&device_state(&exp, gamma, 1.0)?)?;
            let dist = engine.subset_distribution(k, true)?;
            Ok(EntropyRow {
                gamma,
                entropy: shannon_entropy(&dist)?,
                max_entropy,
                p_mc_conditioned: dist.probability(&inst.target),
                slice_mass: dist.total_raw_mass,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub nodes: usize,
    pub clique: usize,
    pub graphs: usize,
    pub improvement_mean: f64,
    pub gamma_opt_mean: f64,
    pub n_disp_mean: f64,
    pub n_sqz_mean: f64,
    pub ratio_mean: f64,
}

impl CsvRow for ScalingRow {
    fn header() -> &'static [&'static str] {
        &[
            "nodes",
            "clique",
            "graphs",
            "improvement_mean",
            "gamma_opt_mean",
            "n_disp_mean",
            "n_sqz_mean",
            "ratio_mean",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.nodes.to_string(),
            self.clique.to_string(),
            self.graphs.to_string(),
            fmt_f64(self.improvement_mean),
            fmt_f64(self.gamma_opt_mean),
            fmt_f64(self.n_disp_mean),
            fmt_f64(self.n_sqz_mean),
            fmt_f64(self.ratio_mean),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub points: Vec<(usize, usize)>,
    pub graphs: usize,
    pub p: f64,
    pub lambda_max: f64,
    pub gammas: Grid,
}

/// For each `(M, |C|)`: average over generated planted-clique graphs of the
/// optimal-`γ` improvement and the photon budgets at that `γ`.
pub fn run_scaling(cfg: &ScalingConfig, seed: u64) -> Result<Vec<ScalingRow>> {
    if cfg.graphs == 0 {
        return Err(Error::invalid("need at least one graph per point"));
    }
    cfg.points
        .iter()
        .enumerate()
        .map(|(pi, &(m, k))| {
            let per_graph: Vec<(f64, f64, f64, f64)> = (0..cfg.graphs)
                .into_par_iter()
                .map(|r| {
                    let spec_seed = derive_seed(seed, (pi * 1_000_000 + r) as u64) >> 16;
                    let fx = FixtureSpec::new(m, k, cfg.p, spec_seed).build()?;
                    let inst = Instance {
                        graph: fx.graph,
                        target: fx.clique,
                    };
                    let exp = encode_plain(&inst.graph, cfg.lambda_max)?;
                    let (g, p0, p) = optimal_gamma(&exp, &inst, &cfg.gammas)?;
                    if !(p0 > 0.0) {
                        return Err(Error::Numerical(format!("p_mc(0) underflows for ({m}, {k})")));
                    }
                    let b = device_state(&exp, g, 1.0)?.mean_photon_budget();
                    Ok((p / p0, g, b.n_disp, b.n_sqz))
                })
                .collect::<Result<_>>()?;
            let n = per_graph.len() as f64;
            let mean = |f: fn(&(f64, f64, f64, f64)) -> f64| per_graph.iter().map(f).sum::<f64>() / n;
            Ok(ScalingRow {
                nodes: m,
                clique: k,
                graphs: cfg.graphs,
                improvement_mean: mean(|x| x.0),
                gamma_opt_mean: mean(|x| x.1),
                n_disp_mean: mean(|x| x.2),
                n_sqz_mean: mean(|x| x.3),
                ratio_mean: mean(|x| x.2 / x.3),
            })
        })
        .collect()
}

/// Log-log slope of the averaged `n_disp / n_sqz` against `M`.
pub fn ratio_slope(rows: &[ScalingRow]) -> f64 {
    let m: Vec<f64> = rows.iter().map(|r| r.nodes as f64).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.ratio_mean).collect();
    log_log_slope(&m, &ratio)
}
