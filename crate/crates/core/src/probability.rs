//! Photon-number probabilities of Gaussian states.
//!
//! For a pattern `n` with `N` photons,
//!
//! ```text
//! p(n) = exp(−½ d†Σ_Q⁻¹d) / (n! √det Σ_Q) · lHaf(A_n with γ_n on the diagonal)
//! ```
//!
//! where `A = X(I − Σ_Q⁻¹)` is `2M × 2M` and each mode `i` with `n_i` photons
//! contributes `n_i` copies of both index `i` and index `i + M`. For pure states
//! `A = B ⊕ B*` and the loop hafnian factorizes into `|lHaf(B_n)|²` over an
//! `N × N` matrix, which is the path taken whenever the off-diagonal blocks of
//! `A` vanish. Without displacement the loop hafnians are plain hafnians.
//!
//! Detectors are number-resolving. Subset distributions only cover
//! collision-free (0/1) patterns.

use std::path::Path;

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::graph::{clique_weight, is_clique, Graph, NodeSubset};
use crate::hafnian::{hafnian, loop_hafnian, SymmetricKernel};
use crate::output::{fmt_f64, CsvOut};

type C = Complex64;

/// Largest number of subsets a single distribution may enumerate.
pub const SUBSET_GUARD: u64 = 5_000_000;

const PURITY_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhotonPattern(Vec<u32>);

impl PhotonPattern {
    pub fn new(counts: Vec<u32>) -> Self {
        PhotonPattern(counts)
    }

    pub fn from_subset(s: &NodeSubset, m: usize) -> Self {
        PhotonPattern(s.indicator(m))
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_collision_free(&self) -> bool {
        self.0.iter().all(|&n| n <= 1)
    }

    fn ln_factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&n| (2..=n).map(|k| (k as f64).ln()).sum::<f64>())
            .sum()
    }
}

/// Everything about a state that does not depend on the pattern.
#[derive(Debug, Clone)]
pub struct ProbabilityEngine {
    modes: usize,
    pure: bool,
    displaced: bool,
    /// `B` (pure) or the full `A` (mixed).
    kernel: SymmetricKernel,
    /// Loop weights matching `kernel`'s indices.
    gamma: Vec<C>,
    /// `−½ d†Σ_Q⁻¹d − ½ ln det Σ_Q`.
    ln_prefactor: f64,
}

impl ProbabilityEngine {
    pub fn new(state: &GaussianState) -> Result<Self> {
        let m = state.modes();
        let (a, gamma) = state.kernel_matrix()?;
        let scale = a.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let off = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j + m)].norm())
            .fold(0.0, f64::max);
        let pure = off <= PURITY_TOL * scale;
        let displaced = gamma.iter().any(|g| g.norm() > 0.0);
        let (kernel, gamma) = if pure {
            let b = nalgebra::DMatrix::from_fn(m, m, |i, j| a[(i, j)]);
            (SymmetricKernel::new(b)?, gamma[..m].to_vec())
        } else {
            (SymmetricKernel::new(a)?, gamma)
        };
        let ln_prefactor = -state.normalization_exponent()? - 0.5 * state.log_det_q()?;
        Ok(ProbabilityEngine {
            modes: m,
            pure,
            displaced,
            kernel,
            gamma,
            ln_prefactor,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    pub fn is_displaced(&self) -> bool {
        self.displaced
    }

    /// Probability of the vacuum outcome.
    pub fn vacuum_probability(&self) -> f64 {
        self.ln_prefactor.exp()
    }

    pub fn prob(&self, n: &PhotonPattern) -> Result<f64> {
        if n.counts().len() != self.modes {
            return Err(Error::invalid(format!(
                "pattern has {} modes, state has {}",
                n.counts().len(),
                self.modes
            )));
        }
        let idx: Vec<usize> = n
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
            .collect();
        self.prob_indices(&idx, n.ln_factorial())
    }

    /// Probability of the 0/1 pattern with clicks on `s`.
    pub fn prob_subset(&self, s: &NodeSubset) -> Result<f64> {
        if let Some(&v) = s.members().last() {
            if v >= self.modes {
                return Err(Error::invalid(format!("node {v} out of range for {} modes", self.modes)));
            }
        }
        self.prob_indices(s.members(), 0.0)
    }

    fn prob_indices(&self, idx: &[usize], ln_fact: f64) -> Result<f64> {
        let scale = (self.ln_prefactor - ln_fact).exp();
        if self.pure {
            let h = self.haf(idx)?;
            return Ok(scale * h.norm_sqr());
        }
        let doubled: Vec<usize> = idx
            .iter()
            .copied()
            .chain(idx.iter().map(|&i| i + self.modes))
            .collect();
        let h = self.haf(&doubled)?;
        let p = scale * h.re;
        if p < -1e-12 || h.im.abs() > 1e-8 * h.norm().max(1e-300) + 1e-300 {
            return Err(Error::Numerical(format!("mixed-state loop hafnian gave {h}")));
        }
        Ok(p)
    }

    /// (Loop) hafnian of the submatrix on `idx`. Repeated indices keep the
    /// kernel's own diagonal between copies; only the true diagonal gets `γ`.
    fn haf(&self, idx: &[usize]) -> Result<C> {
        let sub = self.kernel.select(idx);
        if self.displaced {
            let loops: Vec<C> = idx.iter().map(|&i| self.gamma[i]).collect();
            loop_hafnian(&sub.with_diagonal(&loops)?)
        } else {
            hafnian(&sub)
        }
    }

    /// Probabilities of all `k`-subsets in lexicographic order.
    pub fn subset_distribution(&self, k: usize, renormalize: bool) -> Result<SubsetDistribution> {
        let count = binomial(self.modes, k);
        if count > SUBSET_GUARD {
            return Err(Error::ResourceGuard(format!(
                "C({}, {k}) = {count} subsets exceeds the limit of {SUBSET_GUARD}",
                self.modes
            )));
        }
        let subsets: Vec<NodeSubset> = (0..self.modes)
            .combinations(k)
            .map(NodeSubset::from_sorted)
            .collect();
        let probs: Vec<f64> = subsets
            .par_iter()
            .map(|s| self.prob_subset(s))
            .collect::<Result<_>>()?;
        let total_raw_mass: f64 = probs.iter().sum();
        let mut entries: Vec<(NodeSubset, f64)> = subsets.into_iter().zip(probs).collect();
        if renormalize {
            if !(total_raw_mass > 0.0) {
                return Err(Error::ZeroMass);
            }
            for e in &mut entries {
                e.1 /= total_raw_mass;
            }
        }
        Ok(SubsetDistribution {
            k,
            entries,
            renormalized: renormalize,
            total_raw_mass,
        })
    }

    /// Raw collision-free mass for each size `0..=k_max`.
    pub fn size_masses(&self, k_max: usize) -> Result<Vec<f64>> {
        (0..=k_max.min(self.modes))
            .map(|k| Ok(self.subset_distribution(k, false)?.total_raw_mass))
            .collect()
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Undisplaced pure-state probability `|Haf(B_n)|² / (n! √det Σ_Q)`.
pub fn pattern_prob_gbs(state: &GaussianState, n: &PhotonPattern) -> Result<f64> {
    let engine = ProbabilityEngine::new(state)?;
    if !engine.pure || engine.displaced {
        return Err(Error::invalid("GBS probabilities need a pure state without displacement"));
    }
    engine.prob(n)
}

/// Probability for any valid state, displaced or lossy.
pub fn pattern_prob_dgbs(state: &GaussianState, n: &PhotonPattern) -> Result<f64> {
    ProbabilityEngine::new(state)?.prob(n)
}

pub fn subset_distribution(state: &GaussianState, k: usize, renormalize: bool) -> Result<SubsetDistribution> {
    ProbabilityEngine::new(state)?.subset_distribution(k, renormalize)
}

/// Raw probability of detecting exactly one photon on each clique node and none elsewhere.
pub fn max_clique_prob(state: &GaussianState, clique: &NodeSubset) -> Result<f64> {
    ProbabilityEngine::new(state)?.prob_subset(clique)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetDistribution {
    pub k: usize,
    /// Sorted by subset.
    pub entries: Vec<(NodeSubset, f64)>,
    pub renormalized: bool,
    /// Summed probability of the slice before any renormalization.
    pub total_raw_mass: f64,
}

impl SubsetDistribution {
    pub fn probability(&self, s: &NodeSubset) -> f64 {
        self.entries
            .binary_search_by(|(x, _)| x.cmp(s))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Most likely subset; ties go to the lexicographically first.
    pub fn argmax(&self) -> Option<&(NodeSubset, f64)> {
        self.entries
            .iter()
            .reduce(|best, e| if e.1 > best.1 { e } else { best })
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn convention(&self) -> &'static str {
        if self.renormalized {
            "renormalized"
        } else {
            "raw"
        }
    }

    /// Columns `subset;probability;is_clique;weight;convention`.
    pub fn write_csv(&self, g: &Graph, path: impl AsRef<Path>) -> Result<()> {
        let mut out = CsvOut::create(
            path.as_ref(),
            &["subset", "probability", "is_clique", "weight", "convention"],
        )?;
        for (s, p) in &self.entries {
            out.row([
                s.to_string(),
                fmt_f64(*p),
                is_clique(g, s).to_string(),
                fmt_f64(clique_weight(g, s)),
                self.convention().to_string(),
            ])?;
        }
        out.finish()
    }
}

/// `−Σ p log₂ p` of a renormalized distribution.
pub fn shannon_entropy(dist: &SubsetDistribution) -> Result<f64> {
    if !dist.renormalized || (dist.sum() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("entropy needs a renormalized distribution"));
    }
    Ok(dist
        .entries
        .iter()
        .filter(|e| e.1 > 0.0)
        .map(|e| -e.1 * e.1.log2())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::encode;
    use crate::gaussian::pure_state_from_encoding;
    use crate::graph::{FixtureSpec, Graph};

    fn tmsv(lambda: f64, gamma: f64) -> GaussianState {
        let e = encode(&Graph::complete(2).unwrap(), lambda, 0.0).unwrap();
        let gamma = gamma / e.c;
        pure_state_from_encoding(&e, &[gamma, gamma]).unwrap()
    }

    #[test]
    fn tmsv_law() {
        for lambda in [0.2, 0.6] {
            let s = tmsv(lambda, 0.0);
            let l2 = lambda * lambda;
            let p0 = pattern_prob_gbs(&s, &PhotonPattern::new(vec![0, 0])).unwrap();
            assert!((p0 - (1.0 - l2)).abs() < 1e-12);
            let p1 = pattern_prob_gbs(&s, &PhotonPattern::new(vec![1, 1])).unwrap();
            assert!((p1 - (1.0 - l2) * l2).abs() < 1e-12);
            let odd = pattern_prob_gbs(&s, &PhotonPattern::new(vec![1, 0])).unwrap();
            assert_eq!(odd, 0.0);
            let p3 = pattern_prob_gbs(&s, &PhotonPattern::new(vec![3, 3])).unwrap();
            assert!((p3 - (1.0 - l2) * l2.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn gbs_rejects_displaced_or_lossy() {
        let s = tmsv(0.5, 0.2);
        assert!(pattern_prob_gbs(&s, &PhotonPattern::new(vec![1, 1])).is_err());
        let l = tmsv(0.5, 0.0).apply_loss(0.5).unwrap();
        assert!(pattern_prob_gbs(&l, &PhotonPattern::new(vec![1, 1])).is_err());
        assert!(pattern_prob_dgbs(&l, &PhotonPattern::new(vec![1, 1])).is_ok());
    }

    #[test]
    fn coherent_state_is_poisson() {
        let mut e = encode(&Graph::complete(3).unwrap(), 0.5, 0.0).unwrap();
        e.b = nalgebra::DMatrix::zeros(3, 3);
        let s = pure_state_from_encoding(&e, &[0.4, 0.7, 1.1]).unwrap();
        let alpha: Vec<f64> = (0..3).map(|i| s.disp()[i].re).collect();
        for counts in [[0, 0, 0], [1, 0, 2], [2, 3, 1], [0, 1, 4]] {
            let p = pattern_prob_dgbs(&s, &PhotonPattern::new(counts.to_vec())).unwrap();
            let expect: f64 = counts
                .iter()
                .zip(&alpha)
                .map(|(&n, a)| {
                    let m = a * a;
                    (-m).exp() * m.powi(n as i32) / (1..=n).map(f64::from).product::<f64>()
                })
                .product();
            assert!((p - expect).abs() < 1e-13 * expect.max(1e-3), "{counts:?}: {p} vs {expect}");
        }
    }

    #[test]
    fn lossy_mass_is_at_most_one() {
        let g = Graph::complete(3).unwrap();
        let e = encode(&g, 0.5, 0.0).unwrap();
        let s = pure_state_from_encoding(&e, &[0.5; 3]).unwrap().apply_loss(0.6).unwrap();
        let engine = ProbabilityEngine::new(&s).unwrap();
        assert!(!engine.is_pure());
        let mut total = 0.0;
        for (a, b, c) in itertools::iproduct!(0..5u32, 0..5u32, 0..5u32) {
            let p = engine.prob(&PhotonPattern::new(vec![a, b, c])).unwrap();
            assert!(p >= -1e-12);
            total += p;
        }
        assert!(total <= 1.0 + 1e-9 && total > 0.99, "{total}");
    }

    #[test]
    fn k4_pairs_are_uniform() {
        let e = encode(&Graph::complete(4).unwrap(), 0.5, 0.0).unwrap();
        let s = pure_state_from_encoding(&e, &[0.0; 4]).unwrap();
        let d = subset_distribution(&s, 2, true).unwrap();
        assert_eq!(d.entries.len(), 6);
        assert!(d.entries.iter().all(|e| (e.1 - 1.0 / 6.0).abs() < 1e-12));
        assert!((shannon_entropy(&d).unwrap() - 6f64.log2()).abs() < 1e-12);
        let vac = subset_distribution(&s, 0, false).unwrap();
        assert_eq!(vac.entries.len(), 1);
        assert!((vac.entries[0].1 - ProbabilityEngine::new(&s).unwrap().vacuum_probability()).abs() < 1e-15);
    }

    #[test]
    fn planted_clique_is_the_mode() {
        let fx = FixtureSpec::new(10, 4, 0.3, 4).build().unwrap();
        let e = encode(&fx.graph, 0.5, 0.0).unwrap();
        let s = pure_state_from_encoding(&e, &[0.0; 10]).unwrap();
        let d = subset_distribution(&s, 4, true).unwrap();
        assert_eq!(d.argmax().unwrap().0, fx.clique);
        assert!((d.sum() - 1.0).abs() < 1e-10);
        assert!((d.probability(&fx.clique) * d.total_raw_mass - max_clique_prob(&s, &fx.clique).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn entropy_rules() {
        let point = SubsetDistribution {
            k: 1,
            entries: vec![(NodeSubset::from_sorted(vec![0]), 1.0), (NodeSubset::from_sorted(vec![1]), 0.0)],
            renormalized: true,
            total_raw_mass: 0.3,
        };
        assert_eq!(shannon_entropy(&point).unwrap(), 0.0);
        let raw = SubsetDistribution { renormalized: false, ..point };
        assert!(shannon_entropy(&raw).is_err());
    }

    #[test]
    fn guard_trips() {
        let s = GaussianState::vacuum(40);
        let engine = ProbabilityEngine::new(&s).unwrap();
        assert!(matches!(engine.subset_distribution(20, false), Err(Error::ResourceGuard(_))));
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(5, 7), 0);
    }

    #[test]
    fn csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::complete(4).unwrap();
        let e = encode(&g, 0.5, 0.0).unwrap();
        let s = pure_state_from_encoding(&e, &[0.0; 4]).unwrap();
        let d = subset_distribution(&s, 2, true).unwrap();
        let p = dir.path().join("d.csv");
        d.write_csv(&g, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "subset;probability;is_clique;weight;convention");
        let row: Vec<&str> = lines.next().unwrap().split(';').collect();
        assert_eq!(row[0], "0-1");
        assert!((row[1].parse::<f64>().unwrap() - 1.0 / 6.0).abs() < 1e-14);
        assert_eq!(row[2..], ["true", "2.0000000000000000e0", "renormalized"]);
    }
}
