//! Hafnians and loop hafnians of complex symmetric matrices.
//!
//! Two routes are provided for each quantity:
//!
//! * [`haf_enum`] / [`lhaf_enum`] walk the perfect (single-pair) matchings
//!   directly by always matching the lowest unmatched index first. They produce
//!   `(n-1)!!` terms without duplicates and serve as ground truth.
//! * [`hafnian`] / [`loop_hafnian`] use inclusion–exclusion over subsets of a fixed
//!   index pairing. For each subset `Z` the contribution is the `η^{n/2}` coefficient
//!   of `det(I - η X A_Z)^{-1/2} · exp(½ η vᵀ (I - η X A_Z)^{-1} X v)` where `X`
//!   swaps paired indices and `v` holds the loop weights. The determinant series
//!   comes from a Hessenberg reduction followed by the La Budde recurrence, so
//!   the cost is `O(n³ 2^{n/2})`.
//!
//! [`reduce`](SymmetricKernel::reduce) builds the repeated-index matrix `B_n` of a
//! photon pattern.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Largest dimension accepted by the enumeration oracles.
pub const ENUM_MAX_DIM: usize = 14;
/// Largest dimension accepted by the fast kernels.
pub const FAST_MAX_DIM: usize = 48;
/// Largest dimension accepted by [`lhaf_expansion_check`].
pub const EXPANSION_MAX_DIM: usize = 10;

/// Dense complex symmetric matrix, row-major. The diagonal only matters for
/// loop hafnians.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricKernel {
    dim: usize,
    data: Vec<C>,
}

impl SymmetricKernel {
    /// Validates symmetry (1e-12 absolute) and finiteness.
    pub fn new(m: DMatrix<C>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::invalid("kernel must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                let x = m[(i, j)];
                if !x.re.is_finite() || !x.im.is_finite() {
                    return Err(Error::BadValue {
                        location: format!("kernel ({i}, {j})"),
                        value: f64::NAN,
                    });
                }
                if j > i && (x - m[(j, i)]).norm() > 1e-12 {
                    return Err(Error::invalid(format!("kernel not symmetric at ({i}, {j})")));
                }
            }
        }
        let data = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|ij| m[ij]).collect();
        Ok(SymmetricKernel { dim: n, data })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        SymmetricKernel::new(m.map(|x| C::new(x, 0.0)))
    }

    pub fn empty() -> Self {
        SymmetricKernel { dim: 0, data: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> DMatrix<C> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Repeats row and column `i` `counts[i]` times, in ascending index order.
    pub fn reduce(&self, counts: &[u32]) -> Result<SymmetricKernel> {
        if counts.len() != self.dim {
            return Err(Error::invalid(format!(
                "pattern has {} entries but the matrix has dimension {}",
                counts.len(),
                self.dim
            )));
        }
        let idx: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
            .collect();
        Ok(self.select(&idx))
    }

    /// Submatrix on `idx` (indices may repeat).
    pub fn select(&self, idx: &[usize]) -> SymmetricKernel {
        let n = idx.len();
        let mut data = Vec::with_capacity(n * n);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        SymmetricKernel { dim: n, data }
    }

    /// Copy with the diagonal replaced by `diag`.
    pub fn with_diagonal(&self, diag: &[C]) -> Result<SymmetricKernel> {
        if diag.len() != self.dim {
            return Err(Error::invalid(format!(
                "diagonal has {} entries, expected {}",
                diag.len(),
                self.dim
            )));
        }
        let mut out = self.clone();
        for (i, &d) in diag.iter().enumerate() {
            out.data[i * self.dim + i] = d;
        }
        Ok(out)
    }

    pub fn diagonal(&self) -> Vec<C> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, t: C) -> SymmetricKernel {
        SymmetricKernel {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * t).collect(),
        }
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &SymmetricKernel) -> SymmetricKernel {
        let n = self.dim + other.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..self.dim {
            for j in 0..self.dim {
                data[i * n + j] = self.get(i, j);
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                data[(i + self.dim) * n + j + self.dim] = other.get(i, j);
            }
        }
        SymmetricKernel { dim: n, data }
    }

    fn without(&self, removed: &[bool]) -> SymmetricKernel {
        let idx: Vec<usize> = (0..self.dim).filter(|&i| !removed[i]).collect();
        self.select(&idx)
    }
}

fn guard(dim: usize, limit: usize, what: &str) -> Result<()> {
    if dim > limit {
        Err(Error::ResourceGuard(format!("{what} limited to dimension {limit}, got {dim}")))
    } else {
        Ok(())
    }
}

/// Hafnian by explicit enumeration of perfect matchings.
pub fn haf_enum(k: &SymmetricKernel) -> Result<C> {
    guard(k.dim, ENUM_MAX_DIM, "hafnian enumeration")?;
    Ok(enumerate(k, false))
}

/// Loop hafnian by explicit enumeration of single-pair matchings.
pub fn lhaf_enum(k: &SymmetricKernel) -> Result<C> {
    guard(k.dim, ENUM_MAX_DIM, "loop hafnian enumeration")?;
    Ok(enumerate(k, true))
}

fn enumerate(k: &SymmetricKernel, loops: bool) -> C {
    fn go(k: &SymmetricKernel, free: &mut Vec<usize>, loops: bool) -> C {
        let Some(&first) = free.first() else {
            return ONE;
        };
        let mut total = ZERO;
        let rest: Vec<usize> = free[1..].to_vec();
        if loops {
            let mut sub = rest.clone();
            total += k.get(first, first) * go(k, &mut sub, loops);
        }
        for (pos, &j) in rest.iter().enumerate() {
            let mut sub: Vec<usize> = rest.clone();
            sub.remove(pos);
            total += k.get(first, j) * go(k, &mut sub, loops);
        }
        total
    }
    if !loops && k.dim % 2 == 1 {
        return ZERO;
    }
    let mut free: Vec<usize> = (0..k.dim).collect();
    go(k, &mut free, loops)
}

/// Hafnian via the subset-sum power-series formula. Odd dimensions give 0 and
/// the empty matrix gives 1.
pub fn hafnian(k: &SymmetricKernel) -> Result<C> {
    guard(k.dim, FAST_MAX_DIM, "hafnian")?;
    if k.dim % 2 == 1 {
        return Ok(ZERO);
    }
    Ok(subset_sum(k, false))
}

/// Loop hafnian; the diagonal of `k` carries the loop weights.
pub fn loop_hafnian(k: &SymmetricKernel) -> Result<C> {
    guard(k.dim, FAST_MAX_DIM, "loop hafnian")?;
    if k.dim % 2 == 1 {
        // an extra node that can only loop, with weight 1
        let n = k.dim + 1;
        let mut data = vec![ZERO; n * n];
        for i in 0..k.dim {
            for j in 0..k.dim {
                data[i * n + j] = k.get(i, j);
            }
        }
        data[n * n - 1] = ONE;
        return Ok(subset_sum(&SymmetricKernel { dim: n, data }, true));
    }
    Ok(subset_sum(k, true))
}

fn subset_sum(k: &SymmetricKernel, loops: bool) -> C {
    let n = k.dim;
    if n == 0 {
        return ONE;
    }
    let m = n / 2;
    let mut total = ZERO;
    let mut work = Workspace::new(n, m);
    for mask in 1u64..(1u64 << m) {
        let z = mask.count_ones() as usize;
        let term = work.subset_term(k, mask, loops);
        if (m - z) % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    // the empty subset contributes only when m == 0, handled above
    total
}

struct Workspace {
    m: usize,
    idx: Vec<usize>,
    h: Vec<C>,
    v: Vec<C>,
    w: Vec<C>,
    tmp: Vec<C>,
    q: Vec<Vec<C>>,
    series: Vec<C>,
    inv_sqrt: Vec<C>,
    loop_series: Vec<C>,
    loop_exp: Vec<C>,
}

impl Workspace {
    fn new(n: usize, m: usize) -> Self {
        Workspace {
            m,
            idx: Vec::with_capacity(n),
            h: vec![ZERO; n * n],
            v: vec![ZERO; n],
            w: vec![ZERO; n],
            tmp: vec![ZERO; n],
            q: vec![vec![ZERO; m + 1]; n + 1],
            series: vec![ZERO; m + 1],
            inv_sqrt: vec![ZERO; m + 1],
            loop_series: vec![ZERO; m + 1],
            loop_exp: vec![ZERO; m + 1],
        }
    }

    /// `[η^m] det(I - η X A_Z)^{-1/2} exp(½ Σ_k η^k vᵀ (X A_Z)^{k-1} X v)`.
    fn subset_term(&mut self, k: &SymmetricKernel, mask: u64, loops: bool) -> C {
        let m = self.m;
        self.idx.clear();
        for i in 0..m {
            if mask >> i & 1 == 1 {
                self.idx.push(i);
            }
        }
        let z = self.idx.len();
        for t in 0..z {
            let i = self.idx[t];
            self.idx.push(i + m);
        }
        let s = 2 * z;
        // M = X A_Z with zeroed diagonal; X swaps position t with t ± z
        for r in 0..s {
            let src = if r < z { r + z } else { r - z };
            let gi = self.idx[src];
            for c in 0..s {
                let gj = self.idx[c];
                self.h[r * s + c] = if gi == gj { ZERO } else { k.get(gi, gj) };
            }
        }

        if loops {
            // loop series: ½ vᵀ M^{j-1} X v, computed before the Hessenberg pass
            for t in 0..s {
                let g = self.idx[t];
                self.v[t] = k.get(g, g);
            }
            for t in 0..s {
                self.w[t] = self.v[if t < z { t + z } else { t - z }];
            }
            self.loop_series[0] = ZERO;
            for j in 1..=m {
                let dot: C = (0..s).map(|t| self.v[t] * self.w[t]).sum();
                self.loop_series[j] = dot * 0.5;
                if j < m {
                    for r in 0..s {
                        let row = &self.h[r * s..r * s + s];
                        self.tmp[r] = row.iter().zip(&self.w[..s]).map(|(a, b)| a * b).sum();
                    }
                    self.w[..s].copy_from_slice(&self.tmp[..s]);
                }
            }
        }

        hessenberg(&mut self.h[..s * s], s);
        det_series(&self.h[..s * s], s, m, &mut self.q, &mut self.series);
        power_series_pow(&self.series, -0.5, &mut self.inv_sqrt);

        if loops {
            series_exp(&self.loop_series, &mut self.loop_exp);
            (0..=m).map(|j| self.inv_sqrt[j] * self.loop_exp[m - j]).sum()
        } else {
            self.inv_sqrt[m]
        }
    }
}

/// In-place Householder reduction of the `s×s` row-major matrix to upper
/// Hessenberg form (a unitary similarity, so the characteristic polynomial is kept).
fn hessenberg(h: &mut [C], s: usize) {
    if s < 3 {
        return;
    }
    let mut v = vec![ZERO; s];
    for k in 0..s - 2 {
        let len = s - k - 1;
        let mut norm2 = 0.0;
        for r in 0..len {
            v[r] = h[(k + 1 + r) * s + k];
            norm2 += v[r].norm_sqr();
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let scale = 2.0 / vnorm2;
        // left: rows k+1.., columns k..
        for c in k..s {
            let mut dot = ZERO;
            for r in 0..len {
                dot += v[r].conj() * h[(k + 1 + r) * s + c];
            }
            dot *= scale;
            for r in 0..len {
                h[(k + 1 + r) * s + c] -= v[r] * dot;
            }
        }
        // right: all rows, columns k+1..
        for r in 0..s {
            let mut dot = ZERO;
            for c in 0..len {
                dot += h[r * s + k + 1 + c] * v[c];
            }
            dot *= scale;
            for c in 0..len {
                h[r * s + k + 1 + c] -= dot * v[c].conj();
            }
        }
        for r in 1..len {
            h[(k + 1 + r) * s + k] = ZERO;
        }
    }
}

/// Coefficients of `det(I - η H)` up to `η^order` for upper Hessenberg `H`, by the
/// La Budde recurrence on leading principal submatrices.
fn det_series(h: &[C], s: usize, order: usize, q: &mut [Vec<C>], out: &mut [C]) {
    let at = |i: usize, j: usize| h[i * s + j];
    for row in q.iter_mut().take(s + 1) {
        row.iter_mut().for_each(|x| *x = ZERO);
    }
    q[0][0] = ONE;
    for i in 1..=s {
        // (1 - η h_ii) q_{i-1}
        let hii = at(i - 1, i - 1);
        for d in 0..=order {
            let mut val = q[i - 1][d];
            if d > 0 {
                val -= hii * q[i - 1][d - 1];
            }
            q[i][d] = val;
        }
        // - Σ_k h_{i-k,i} Π_{j=i-k+1}^{i} h_{j,j-1} η^{k+1} q_{i-k-1}
        let mut prod = ONE;
        for kk in 1..i {
            prod *= at(i - kk, i - kk - 1);
            let coef = at(i - kk - 1, i - 1) * prod;
            if coef == ZERO {
                continue;
            }
            let shift = kk + 1;
            for d in shift..=order {
                let sub = q[i - kk - 1][d - shift];
                q[i][d] -= coef * sub;
            }
        }
    }
    out[..=order].copy_from_slice(&q[s][..=order]);
}

/// `r = p^a` truncated to `r.len()` terms, for `p_0 = 1`.
fn power_series_pow(p: &[C], a: f64, r: &mut [C]) {
    let n = r.len();
    r[0] = ONE;
    for k in 1..n {
        let mut acc = ZERO;
        for j in 1..=k.min(p.len() - 1) {
            acc += p[j] * r[k - j] * ((a + 1.0) * j as f64 - k as f64);
        }
        r[k] = acc / k as f64;
    }
}

/// `e = exp(p)` truncated, for `p_0 = 0`.
fn series_exp(p: &[C], e: &mut [C]) {
    let n = e.len();
    e[0] = ONE;
    for k in 1..n {
        let mut acc = ZERO;
        for j in 1..=k.min(p.len() - 1) {
            acc += p[j] * e[k - j] * j as f64;
        }
        e[k] = acc / k as f64;
    }
}

/// Evaluates the expansion of a loop hafnian into hafnians,
/// `Haf(B) + Σ_{j1<j2} γ_{j1}γ_{j2} Haf(B - {j1,j2}) + … + Π γ_j`,
/// and returns `|lhaf − rhs| / (1 + |lhaf|)`. The diagonal of `b` is ignored; the
/// loop weights come from `gamma`.
pub fn lhaf_expansion_check(b: &SymmetricKernel, gamma: &[C]) -> Result<f64> {
    guard(b.dim, EXPANSION_MAX_DIM, "loop hafnian expansion")?;
    if gamma.len() != b.dim {
        return Err(Error::invalid("gamma length does not match the kernel"));
    }
    let lhs = loop_hafnian(&b.with_diagonal(gamma)?)?;
    let n = b.dim;
    let mut rhs = ZERO;
    let mut removed = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        if (n - mask.count_ones() as usize) % 2 == 1 {
            continue;
        }
        let mut weight = ONE;
        for (j, r) in removed.iter_mut().enumerate() {
            *r = mask >> j & 1 == 1;
            if *r {
                weight *= gamma[j];
            }
        }
        rhs += weight * hafnian(&b.without(&removed))?;
    }
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm()))
}

/// Partial sum of the same expansion: `order = 0` keeps `Haf(B)`, `order = 1`
/// adds the two-loop terms `Σ_{j1<j2} γ_{j1}γ_{j2} Haf(B - {j1,j2})`.
pub fn lhaf_truncated(b: &SymmetricKernel, gamma: &[C], order: usize) -> Result<C> {
    if order > 1 {
        return Err(Error::invalid(format!("truncation order {order} not in {{0, 1}}")));
    }
    if gamma.len() != b.dim {
        return Err(Error::invalid("gamma length does not match the kernel"));
    }
    let mut total = hafnian(b)?;
    if order == 1 {
        let n = b.dim;
        let mut removed = vec![false; n];
        for j1 in 0..n {
            for j2 in (j1 + 1)..n {
                removed[j1] = true;
                removed[j2] = true;
                total += gamma[j1] * gamma[j2] * hafnian(&b.without(&removed))?;
                removed[j1] = false;
                removed[j2] = false;
            }
        }
    }
    Ok(total)
}
