//! Turning sampled subgraphs into cliques: greedy shrinking followed by a
//! grow/swap local search.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{clique_weight, is_clique, Graph, NodeSubset};
use crate::output::{fmt_f64, CsvOut};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_iter: usize,
    pub seed: u64,
    /// Grow by picking candidates with probability proportional to node weight.
    pub weight_priority: bool,
    /// Same for the candidate swapped in.
    pub swap_weighted: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_iter: 7,
            seed: 0,
            weight_priority: true,
            swap_weighted: false,
        }
    }
}

fn degree_in(g: &Graph, s: &NodeSubset, v: usize) -> usize {
    s.members().iter().filter(|&&u| g.has_edge(u, v)).count()
}

/// Repeatedly removes a vertex of least degree inside the current subgraph,
/// breaking ties by least weight and then at random, until a clique remains.
pub fn greedy_shrink(g: &Graph, s: &NodeSubset, rng: &mut ChaCha8Rng) -> NodeSubset {
    let mut s = s.clone();
    while !is_clique(g, &s) {
        let degrees: Vec<usize> = s.members().iter().map(|&v| degree_in(g, &s, v)).collect();
        let d_min = *degrees.iter().min().unwrap();
        let v_min: Vec<usize> = s
            .members()
            .iter()
            .zip(&degrees)
            .filter(|(_, &d)| d == d_min)
            .map(|(&v, _)| v)
            .collect();
        let w_min = v_min
            .iter()
            .map(|&v| g.weights()[v])
            .fold(f64::INFINITY, f64::min);
        let lightest: Vec<usize> = v_min.into_iter().filter(|&v| g.weights()[v] == w_min).collect();
        let v = *lightest.choose(rng).unwrap();
        s.remove(v);
    }
    s
}

/// Vertices outside `s` adjacent to every member of `s`.
pub fn grow(g: &Graph, s: &NodeSubset) -> Result<NodeSubset> {
    if !is_clique(g, s) {
        return Err(Error::invalid(format!("grow needs a clique, got {s}")));
    }
    Ok(common_neighbours(g, s))
}

fn common_neighbours(g: &Graph, s: &NodeSubset) -> NodeSubset {
    let members = (0..g.node_count())
        .filter(|&v| !s.contains(v) && s.members().iter().all(|&u| g.has_edge(u, v)))
        .collect();
    NodeSubset::from_sorted(members)
}

fn pick(g: &Graph, candidates: &[usize], weighted: bool, rng: &mut ChaCha8Rng) -> usize {
    if weighted {
        let w: Vec<f64> = candidates.iter().map(|&v| g.weights()[v]).collect();
        if let Ok(d) = WeightedIndex::new(&w) {
            return candidates[d.sample(rng)];
        }
    }
    *candidates.choose(rng).unwrap()
}

/// `cfg.n_iter` rounds of: add a common neighbour if there is one, otherwise
/// swap a random member for a vertex adjacent to all the others. A swap with
/// no candidate leaves the clique unchanged.
pub fn local_search(g: &Graph, c: &NodeSubset, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Result<NodeSubset> {
    if !is_clique(g, c) {
        return Err(Error::invalid(format!("local search needs a clique, got {c}")));
    }
    let mut s = c.clone();
    for _ in 0..cfg.n_iter {
        let cand = common_neighbours(g, &s);
        if !cand.is_empty() {
            let v = pick(g, cand.members(), cfg.weight_priority, rng);
            s.insert(v);
            continue;
        }
        let Some(&v) = s.members().choose(rng) else {
            continue;
        };
        let mut rest = s.clone();
        rest.remove(v);
        let swaps: Vec<usize> = common_neighbours(g, &rest)
            .members()
            .iter()
            .copied()
            .filter(|&u| u != v)
            .collect();
        if swaps.is_empty() {
            continue;
        }
        let u = pick(g, &swaps, cfg.swap_weighted, rng);
        rest.insert(u);
        s = rest;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub sample_index: usize,
    pub initial_size: usize,
    pub final_size: usize,
    pub final_weight: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessReport {
    pub rate: f64,
    pub per_sample: Vec<SampleOutcome>,
}

impl SuccessReport {
    pub fn successes(&self) -> usize {
        self.per_sample.iter().filter(|o| o.success).count()
    }

    /// Columns `sample_index;initial_size;final_size;final_weight;success`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = CsvOut::create(
            path.as_ref(),
            &["sample_index", "initial_size", "final_size", "final_weight", "success"],
        )?;
        for o in &self.per_sample {
            out.row([
                o.sample_index.to_string(),
                o.initial_size.to_string(),
                o.final_size.to_string(),
                fmt_f64(o.final_weight),
                o.success.to_string(),
            ])?;
        }
        out.finish()
    }
}

/// Runs shrink then local search on every sample; a sample succeeds when the
/// final clique weighs as much as `target`. Sample `i` uses stream `i` of
/// `cfg.seed`, so the result does not depend on scheduling.
pub fn success_rate(g: &Graph, samples: &[NodeSubset], target: &NodeSubset, cfg: &SearchConfig) -> Result<SuccessReport> {
    if samples.is_empty() {
        return Err(Error::invalid("success rate of an empty batch"));
    }
    for s in samples {
        s.validate_for(g)?;
    }
    let target_weight = clique_weight(g, target);
    let tol = 1e-9 * target_weight.abs().max(1.0);
    let per_sample: Vec<SampleOutcome> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let c = greedy_shrink(g, s, &mut rng);
            let c = local_search(g, &c, cfg, &mut rng)?;
            let w = clique_weight(g, &c);
            Ok(SampleOutcome {
                sample_index: i,
                initial_size: s.len(),
                final_size: c.len(),
                final_weight: w,
                success: (w - target_weight).abs() <= tol,
            })
        })
        .collect::<Result<_>>()?;
    let rate = per_sample.iter().filter(|o| o.success).count() as f64 / samples.len() as f64;
    Ok(SuccessReport { rate, per_sample })
}
