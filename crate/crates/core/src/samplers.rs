//! Subgraph samplers: exact enumeration over a size window, a uniform
//! baseline, and a pair sampler whose collision-free law is `∝ Haf(B_S)`.
//!
//! All samplers draw from `ChaCha8Rng::seed_from_u64(seed)`, so a batch is a
//! pure function of its parameters and seed on every platform.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::graph::NodeSubset;
use crate::probability::{binomial, ProbabilityEngine, SUBSET_GUARD};

/// Attempts allowed per accepted sample before the pair sampler gives up.
pub const MAX_ATTEMPTS_PER_SAMPLE: u64 = 100_000;

/// Distribution of the subset size for the uniform baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum SizeLaw {
    Point { k: usize },
    /// Every size in `k_min..=k_max` equally likely.
    Flat { k_min: usize, k_max: usize },
    /// `weights[k]` is the relative weight of size `k`.
    Weights { weights: Vec<f64> },
}

impl SizeLaw {
    fn weights(&self, m: usize) -> Result<Vec<f64>> {
        let w = match self {
            SizeLaw::Point { k } => {
                let mut w = vec![0.0; k + 1];
                w[*k] = 1.0;
                w
            }
            SizeLaw::Flat { k_min, k_max } => {
                if k_min > k_max {
                    return Err(Error::invalid(format!("size window {k_min}..={k_max} is empty")));
                }
                (0..=*k_max).map(|k| if k >= *k_min { 1.0 } else { 0.0 }).collect()
            }
            SizeLaw::Weights { weights } => weights.clone(),
        };
        if w.len() > m + 1 && w[m + 1..].iter().any(|&x| x > 0.0) {
            return Err(Error::invalid(format!("size law puts weight above {m} nodes")));
        }
        Ok(w)
    }
}

/// Number of pairs drawn per sample by [`oh_sampler`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum PairLaw {
    Fixed { n_pairs: usize },
    /// `weights[j]` is the relative weight of drawing `j` pairs.
    Weights { weights: Vec<f64> },
}

impl PairLaw {
    /// Pair-number law matching an undisplaced GBS state, from raw collision-free
    /// masses per photon number.
    pub fn from_size_masses(masses: &[f64]) -> Self {
        PairLaw::Weights {
            weights: masses.iter().step_by(2).copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "kebab-case")]
pub enum SamplerSpec {
    Exact {
        k_min: usize,
        k_max: usize,
        pure: bool,
        displaced: bool,
        /// Raw probability of landing in the window.
        window_mass: f64,
    },
    Uniform {
        size_law: SizeLaw,
    },
    Oh {
        pairs: PairLaw,
        /// Fraction of draws rejected for repeating a node.
        rejection_rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub source: SamplerSpec,
    pub seed: u64,
    pub modes: usize,
    pub samples: Vec<NodeSubset>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    source: SamplerSpec,
    seed: u64,
    modes: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Line {
    subset: NodeSubset,
}

impl SampleBatch {
    /// One header record followed by one `{"subset":[...]}` line per sample.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let header = Header {
            source: self.source.clone(),
            seed: self.seed,
            modes: self.modes,
            count: self.samples.len(),
        };
        let io = |e| Error::io(path, e);
        writeln!(w, "{}", serde_json::json!({ "header": header })).map_err(io)?;
        for s in &self.samples {
            writeln!(w, "{}", serde_json::to_string(&Line { subset: s.clone() })?).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<SampleBatch> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let bad = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            reason,
        };
        let first = lines
            .next()
            .ok_or_else(|| bad("empty sample file".into()))?
            .map_err(|e| Error::io(path, e))?;
        #[derive(Deserialize)]
        struct Wrapped {
            header: Header,
        }
        let header = serde_json::from_str::<Wrapped>(&first)
            .map_err(|e| bad(format!("header: {e}")))?
            .header;
        let mut samples = Vec::with_capacity(header.count);
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let l: Line = serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", k + 2)))?;
            samples.push(NodeSubset::new(l.subset.members().to_vec(), header.modes)?);
        }
        if samples.len() != header.count {
            return Err(bad(format!("header announces {} samples, found {}", header.count, samples.len())));
        }
        Ok(SampleBatch {
            source: header.source,
            seed: header.seed,
            modes: header.modes,
            samples,
        })
    }
}

/// Exact law over all collision-free patterns with `k_min..=k_max` clicks,
/// renormalized over that window.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    modes: usize,
    k_min: usize,
    k_max: usize,
    pure: bool,
    displaced: bool,
    subsets: Vec<NodeSubset>,
    probs: Vec<f64>,
    window_mass: f64,
}

impl ExactSampler {
    pub fn new(state: &GaussianState, k_min: usize, k_max: usize) -> Result<Self> {
        let engine = ProbabilityEngine::new(state)?;
        let m = engine.modes();
        let k_max = k_max.min(m);
        if k_min > k_max {
            return Err(Error::invalid(format!("size window {k_min}..={k_max} is empty")));
        }
        let total: u64 = (k_min..=k_max).map(|k| binomial(m, k)).fold(0, u64::saturating_add);
        if total > SUBSET_GUARD {
            return Err(Error::ResourceGuard(format!(
                "window {k_min}..={k_max} over {m} modes has {total} subsets, limit {SUBSET_GUARD}"
            )));
        }
        let mut subsets = Vec::new();
        let mut probs = Vec::new();
        for k in k_min..=k_max {
            let d = engine.subset_distribution(k, false)?;
            for (s, p) in d.entries {
                subsets.push(s);
                probs.push(p.max(0.0));
            }
        }
        let window_mass: f64 = probs.iter().sum();
        if !(window_mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        for p in &mut probs {
            *p /= window_mass;
        }
        Ok(ExactSampler {
            modes: m,
            k_min,
            k_max,
            pure: engine.is_pure(),
            displaced: engine.is_displaced(),
            subsets,
            probs,
            window_mass,
        })
    }

    pub fn window_mass(&self) -> f64 {
        self.window_mass
    }

    /// Renormalized probability of `s` (0 outside the window).
    pub fn probability(&self, s: &NodeSubset) -> f64 {
        self.subsets
            .iter()
            .position(|x| x == s)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn law(&self) -> impl Iterator<Item = (&NodeSubset, f64)> {
        self.subsets.iter().zip(self.probs.iter().copied())
    }

    /// Renormalized probability of each size `0..=k_max`.
    pub fn size_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k_max + 1];
        for (s, p) in self.law() {
            out[s.len()] += p;
        }
        out
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleBatch> {
        let dist = WeightedIndex::new(&self.probs).map_err(|e| Error::Numerical(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..count).map(|_| self.subsets[dist.sample(&mut rng)].clone()).collect();
        Ok(SampleBatch {
            source: SamplerSpec::Exact {
                k_min: self.k_min,
                k_max: self.k_max,
                pure: self.pure,
                displaced: self.displaced,
                window_mass: self.window_mass,
            },
            seed,
            modes: self.modes,
            samples,
        })
    }
}

pub fn exact_sampler(
    state: &GaussianState,
    k_min: usize,
    k_max: usize,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    ExactSampler::new(state, k_min, k_max)?.sample(count, seed)
}

/// Draws a size from `size_law`, then a uniformly random subset of that size.
pub fn uniform_sampler(m: usize, size_law: &SizeLaw, count: usize, seed: u64) -> Result<SampleBatch> {
    let weights = size_law.weights(m)?;
    let sizes = WeightedIndex::new(&weights).map_err(|e| Error::invalid(format!("size law: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..count)
        .map(|_| {
            let k = sizes.sample(&mut rng);
            let mut v = index::sample(&mut rng, m, k).into_vec();
            v.sort_unstable();
            NodeSubset::new(v, m)
        })
        .collect::<Result<_>>()?;
    Ok(SampleBatch {
        source: SamplerSpec::Uniform {
            size_law: size_law.clone(),
        },
        seed,
        modes: m,
        samples,
    })
}

/// Each sample draws its pairs i.i.d. with probability `∝ b_ij` for `i ≠ j`
/// and `∝ 2 b_ii` on the diagonal, and keeps the union if no node repeats.
/// Repeats are redrawn. An ordered sequence of `n` disjoint pairs covering `S`
/// arises in `n! · Haf(b_S)` weighted ways, so accepted sets follow `∝ Haf(b_S)`.
pub fn oh_sampler(b: &DMatrix<f64>, pairs: &PairLaw, count: usize, seed: u64) -> Result<SampleBatch> {
    let m = b.nrows();
    let mut pair_list = Vec::new();
    let mut weights = Vec::new();
    for i in 0..m {
        for j in i..m {
            let w = if i == j { 2.0 * b[(i, i)] } else { b[(i, j)] };
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::BadValue {
                    location: format!("kernel ({i}, {j})"),
                    value: w,
                });
            }
            if w > 0.0 {
                pair_list.push((i, j));
                weights.push(w);
            }
        }
    }
    if pair_list.is_empty() {
        return Err(Error::invalid("pair sampler needs a kernel with a positive entry"));
    }
    let pair_dist = WeightedIndex::new(&weights).map_err(|e| Error::Numerical(e.to_string()))?;
    let count_dist = match pairs {
        PairLaw::Fixed { n_pairs } => {
            if 2 * n_pairs > m {
                return Err(Error::invalid(format!("{n_pairs} disjoint pairs do not fit in {m} nodes")));
            }
            None
        }
        PairLaw::Weights { weights } => {
            let w: Vec<f64> = weights
                .iter()
                .enumerate()
                .map(|(j, &x)| if 2 * j <= m { x } else { 0.0 })
                .collect();
            Some(WeightedIndex::new(&w).map_err(|e| Error::invalid(format!("pair law: {e}")))?)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    let mut used = vec![false; m];
    for _ in 0..count {
        let n = match (&count_dist, pairs) {
            (Some(d), _) => d.sample(&mut rng),
            (None, PairLaw::Fixed { n_pairs }) => *n_pairs,
            _ => unreachable!(),
        };
        let limit = attempts + MAX_ATTEMPTS_PER_SAMPLE;
        loop {
            attempts += 1;
            if attempts > limit {
                return Err(Error::ResourceGuard(format!(
                    "no collision-free draw of {n} pairs in {MAX_ATTEMPTS_PER_SAMPLE} attempts"
                )));
            }
            used.iter_mut().for_each(|u| *u = false);
            let mut ok = true;
            for _ in 0..n {
                let (i, j) = pair_list[pair_dist.sample(&mut rng)];
                if used[i] || used[j] || i == j {
                    ok = false;
                    break;
                }
                used[i] = true;
                used[j] = true;
            }
            if ok {
                let members: Vec<usize> = (0..m).filter(|&i| used[i]).collect();
                samples.push(NodeSubset::new(members, m)?);
                break;
            }
        }
    }
    let rejection_rate = if attempts == 0 {
        0.0
    } else {
        1.0 - count as f64 / attempts as f64
    };
    Ok(SampleBatch {
        source: SamplerSpec::Oh {
            pairs: pairs.clone(),
            rejection_rate,
        },
        seed,
        modes: m,
        samples,
    })
}
