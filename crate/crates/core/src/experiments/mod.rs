//! Scenario runners behind the `experiment` subcommand.
//!
//! Loop strengths here are in kernel units: a scalar `γ` puts `γ (1 + α w_i)` on
//! the kernel diagonal regardless of the rescaling, so a `γ` axis means the same
//! thing at every squeezing level.

mod scenarios;

use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoding::{encode, EncodedExperiment};
use crate::error::{Error, Result};
use crate::gaussian::{pure_state_from_encoding, GaussianState};
use crate::graph::{maximum_cliques, Graph, NodeSubset};
use crate::probability::ProbabilityEngine;

pub use scenarios::*;

/// Golden-section tolerance on `γ`.
pub const GAMMA_TOL: f64 = 1e-4;

/// Nonempty, finite, strictly increasing list of grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid is empty"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("grid has a non-finite point"));
        }
        if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("grid not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Grid(values))
    }

    /// `n` evenly spaced points from `a` to `b` inclusive.
    pub fn linspace(a: f64, b: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::invalid("grid needs at least one point")),
            1 => Grid::new(vec![a]),
            _ => Grid::new((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `start:stop:count` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad grid value {x:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let n = parts[2]
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad grid count {:?}", parts[2])))?;
            return Grid::linspace(num(parts[0])?, num(parts[1])?, n);
        }
        Grid::new(s.split(',').map(num).collect::<Result<_>>()?)
    }
}

/// A graph with the clique the experiments look for.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub target: NodeSubset,
}

impl Instance {
    /// Uses the unique maximum-weight clique of `graph` as the target.
    pub fn certified(graph: Graph) -> Result<Self> {
        let (_, cliques) = maximum_cliques(&graph)?;
        match cliques.as_slice() {
            [only] => Ok(Instance {
                target: only.clone(),
                graph,
            }),
            _ => Err(Error::invalid(format!(
                "target not certified: {} maximum cliques",
                cliques.len()
            ))),
        }
    }

    /// Any maximum-weight clique; success is judged by weight, so ties are fine.
    pub fn with_any_maximum(graph: Graph) -> Result<Self> {
        let (_, cliques) = maximum_cliques(&graph)?;
        let target = cliques
            .into_iter()
            .next()
            .ok_or_else(|| Error::invalid("graph has no nodes"))?;
        Ok(Instance { graph, target })
    }
}

/// Independent seed for sub-task `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Pure state of `exp` with uniform kernel loop strength `gamma`, then loss.
pub fn device_state(exp: &EncodedExperiment, gamma: f64, eta: f64) -> Result<GaussianState> {
    let exp = exp.with_kernel_gamma(gamma)?;
    let state = pure_state_from_encoding(&exp, &exp.gamma)?;
    if eta == 1.0 {
        Ok(state)
    } else {
        state.apply_loss(eta)
    }
}

/// Raw probability of detecting exactly the target clique.
pub fn clique_probability(exp: &EncodedExperiment, target: &NodeSubset, gamma: f64, eta: f64) -> Result<f64> {
    ProbabilityEngine::new(&device_state(exp, gamma, eta)?)?.prob_subset(target)
}

/// Maximizes `f` over `grid`, then refines by golden-section search between
/// the neighbours of the best grid point. Returns `(argmax, max)`.
pub fn maximize<F>(f: F, grid: &Grid, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let xs = grid.values();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let (i, _) = ys
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, by), (i, &y)| if y > by { (i, y) } else { (bi, by) });
    let mut best = (xs[i], ys[i]);
    if xs.len() < 2 {
        return Ok(best);
    }
    let mut lo = xs[i.saturating_sub(1)];
    let mut hi = xs[(i + 1).min(xs.len() - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    for (x, y) in [(x1, f1), (x2, f2)] {
        if y > best.1 {
            best = (x, y);
        }
    }
    Ok(best)
}

/// Encoding at `lambda_max` with `α = 0`.
pub fn encode_plain(g: &Graph, lambda_max: f64) -> Result<EncodedExperiment> {
    encode(g, lambda_max, 0.0)
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Everything needed to rerun an invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub rng: &'static str,
    pub float_format: &'static str,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            rng: "ChaCha8Rng::seed_from_u64 (rand_chacha 0.3); sub-tasks use set_stream",
            float_format: "{:.16e} (17 significant digits)",
            threads: None,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!("0:1:3".parse::<Grid>().unwrap().values(), &[0.0, 0.5, 1.0]);
        assert_eq!("0.1, 0.3".parse::<Grid>().unwrap().values(), &[0.1, 0.3]);
        assert!("0.3,0.1".parse::<Grid>().is_err());
        assert!("0.1,0.1".parse::<Grid>().is_err());
        assert!("".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn golden_section_finds_interior_maximum() {
        let grid = Grid::linspace(0.0, 2.0, 5).unwrap();
        let (x, y) = maximize(|x| Ok(-(x - 0.8f64).powi(2)), &grid, 1e-6).unwrap();
        assert!((x - 0.8).abs() < 1e-5 && y <= 0.0);
        let (x, _) = maximize(|x| Ok(-x), &grid, 1e-6).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn wilson() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(0, 20);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.1 && hi < 0.2);
    }

    #[test]
    fn slope() {
        let x = [8.0, 12.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.25)).collect();
        assert!((log_log_slope(&x, &y) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ_by_index() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
