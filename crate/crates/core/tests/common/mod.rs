#![allow(dead_code)]

use std::collections::HashMap;

use dgbs::encoding::{encode, EncodedExperiment};
use dgbs::graph::Graph;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let mut m = DMatrix::from_element(n, n, C::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}

pub fn random_real_symmetric(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m = (&m + m.transpose()) * 0.5;
    let s = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, x: &f64| a.max(x.abs()));
    m * (radius / s)
}

/// (Loop) hafnian by memoized recursion over index bitmasks: the lowest
/// remaining index either loops or pairs with another remaining index.
pub fn haf_dp(a: &DMatrix<C>, loops: bool) -> C {
    fn go(a: &DMatrix<C>, mask: u32, loops: bool, memo: &mut HashMap<u32, C>) -> C {
        if mask == 0 {
            return C::new(1.0, 0.0);
        }
        if let Some(v) = memo.get(&mask) {
            return *v;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut total = C::new(0.0, 0.0);
        if loops {
            total += a[(i, i)] * go(a, rest, loops, memo);
        }
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            r &= r - 1;
            total += a[(i, j)] * go(a, rest & !(1 << j), loops, memo);
        }
        memo.insert(mask, total);
        total
    }
    let n = a.nrows();
    go(a, (1u32 << n) - 1, loops, &mut HashMap::new())
}

/// Multi-mode Fock space with a per-mode cutoff, states indexed mixed-radix.
pub struct Fock {
    pub modes: usize,
    pub dim: usize,
    pub len: usize,
}

impl Fock {
    pub fn new(modes: usize, cutoff: usize) -> Self {
        Fock {
            modes,
            dim: cutoff + 1,
            len: (cutoff + 1).pow(modes as u32),
        }
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<usize> {
        let mut n = vec![0; self.modes];
        for slot in n.iter_mut() {
            *slot = idx % self.dim;
            idx /= self.dim;
        }
        n
    }

    pub fn index(&self, n: &[usize]) -> Option<usize> {
        let mut idx = 0;
        for &k in n.iter().rev() {
            if k >= self.dim {
                return None;
            }
            idx = idx * self.dim + k;
        }
        Some(idx)
    }

    fn raise(&self, psi: &[C], mode: usize) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.len];
        for (idx, &amp) in psi.iter().enumerate() {
            if amp.norm() == 0.0 {
                continue;
            }
            let mut n = self.occupation(idx);
            n[mode] += 1;
            if let Some(j) = self.index(&n) {
                out[j] += amp * (n[mode] as f64).sqrt();
            }
        }
        out
    }

    /// `exp(½ a†ᵀ B a† + βᵀ a†)|0⟩`, normalized. Only creation operators appear,
    /// so every amplitude with at most `cutoff` photons per mode is exact once
    /// the series has run for `modes·cutoff` terms.
    pub fn squeezed_displaced(&self, b: &DMatrix<f64>, beta: &[f64]) -> Vec<C> {
        let m = self.modes;
        let mut psi = vec![C::new(0.0, 0.0); self.len];
        psi[0] = C::new(1.0, 0.0);
        let apply = |v: &[C]| -> Vec<C> {
            let mut out = vec![C::new(0.0, 0.0); self.len];
            for i in 0..m {
                let ai = self.raise(v, i);
                if beta[i] != 0.0 {
                    for (o, x) in out.iter_mut().zip(&ai) {
                        *o += x * beta[i];
                    }
                }
                for j in 0..m {
                    if b[(i, j)] != 0.0 {
                        let aij = self.raise(&ai, j);
                        for (o, x) in out.iter_mut().zip(&aij) {
                            *o += x * (0.5 * b[(i, j)]);
                        }
                    }
                }
            }
            out
        };
        let mut term = psi.clone();
        for k in 1..=(m * (self.dim - 1)) {
            term = apply(&term);
            for t in term.iter_mut() {
                *t /= k as f64;
            }
            for (p, t) in psi.iter_mut().zip(&term) {
                *p += t;
            }
        }
        let norm = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        psi.iter().map(|x| x / norm).collect()
    }

    /// Amplitudes of `psi` (living in `larger`) on this smaller space, without
    /// renormalizing.
    pub fn restrict(&self, psi: &[C], larger: &Fock) -> Vec<C> {
        (0..self.len)
            .map(|i| psi[larger.index(&self.occupation(i)).unwrap()])
            .collect()
    }

    pub fn density(&self, psi: &[C]) -> DMatrix<C> {
        DMatrix::from_fn(self.len, self.len, |i, j| psi[i] * psi[j].conj())
    }

    /// Loss on every mode through the Kraus operators
    /// `K_l = Σ_n √C(n,l) η^{(n−l)/2} (1−η)^{l/2} |n−l⟩⟨n|`.
    pub fn lose(&self, rho: &DMatrix<C>, eta: f64) -> DMatrix<C> {
        let mut rho = rho.clone();
        let coeff = |n: usize, l: usize| -> f64 {
            binom(n, l).sqrt() * eta.powf((n - l) as f64 / 2.0) * (1.0 - eta).powf(l as f64 / 2.0)
        };
        for mode in 0..self.modes {
            let mut out = DMatrix::from_element(self.len, self.len, C::new(0.0, 0.0));
            for a in 0..self.len {
                let na = self.occupation(a);
                for bidx in 0..self.len {
                    let nb = self.occupation(bidx);
                    let mut acc = C::new(0.0, 0.0);
                    for l in 0..self.dim {
                        let mut pa = na.clone();
                        let mut pb = nb.clone();
                        pa[mode] += l;
                        pb[mode] += l;
                        let (Some(ia), Some(ib)) = (self.index(&pa), self.index(&pb)) else {
                            break;
                        };
                        acc += rho[(ia, ib)] * coeff(pa[mode], l) * coeff(pb[mode], l);
                    }
                    out[(a, bidx)] = acc;
                }
            }
            rho = out;
        }
        rho
    }

    pub fn probability(&self, rho: &DMatrix<C>, n: &[usize]) -> f64 {
        let i = self.index(n).expect("pattern inside cutoff");
        rho[(i, i)].re
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Encoding of `g` with a uniform loop strength `g_kernel` in kernel units.
pub fn encoded(g: &Graph, lambda_max: f64, g_kernel: f64) -> EncodedExperiment {
    encode(g, lambda_max, 0.0)
        .unwrap()
        .with_kernel_gamma(g_kernel)
        .unwrap()
}
