//! Mapping a graph onto a device configuration.
//!
//! The adjacency matrix is rescaled to `B = Ω A Ω` with `Ω_ii = c (1 + α w_i)` and
//! factored as `B = U diag(tanh r) Uᵀ` (Takagi–Autonne). With `α = 0` this is the
//! plain `B = c² A` embedding. Rather than asking for `c` directly, [`encode`]
//! takes the largest squeezing `λ_max = tanh r_max` and solves for `c`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("matrix must be square"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL || !a[(i, j)].is_finite() {
                return Err(Error::Asymmetric {
                    row: i,
                    col: j,
                    upper: a[(i, j)],
                    lower: a[(j, i)],
                });
            }
        }
    }
    Ok(())
}

/// Largest singular value of a real symmetric matrix (largest |eigenvalue|).
pub fn max_singular_value(a: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(a)?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let eig = SymmetricEigen::new(a.clone());
    Ok(eig.eigenvalues.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())))
}

/// The scalar `c` of `B = c A` whose largest singular value is `lambda_max`.
pub fn c_from_lambda_max(a: &DMatrix<f64>, lambda_max: f64) -> Result<f64> {
    if !(lambda_max > 0.0 && lambda_max < 1.0) {
        return Err(Error::invalid(format!("lambda_max {lambda_max} outside (0, 1)")));
    }
    let s = max_singular_value(a)?;
    if s == 0.0 {
        return Err(Error::invalid("cannot rescale a zero matrix"));
    }
    Ok(lambda_max / s)
}

/// `B = Ω A Ω` with `Ω_ii = c (1 + α w_i)`. Returns `(B, diag Ω)`.
pub fn omega_rescale(g: &Graph, c: f64, alpha: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("rescaling c = {c} must be positive")));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha = {alpha} must be non-negative")));
    }
    let omega: Vec<f64> = g.weights().iter().map(|w| c * (1.0 + alpha * w)).collect();
    let b = DMatrix::from_fn(g.node_count(), g.node_count(), |i, j| {
        omega[i] * g.adjacency()[(i, j)] * omega[j]
    });
    let s_max = max_singular_value(&b)?;
    if s_max >= 1.0 {
        return Err(Error::NotEmbeddable { s_max });
    }
    Ok((b, omega))
}

/// Takagi–Autonne factors of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct Takagi {
    /// Unitary `U`, columns ordered like `singular_values`.
    pub unitary: DMatrix<Complex64>,
    /// `tanh r_i`, sorted in descending order.
    pub singular_values: Vec<f64>,
}

impl Takagi {
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.singular_values.len();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.singular_values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        &self.unitary * d * self.unitary.transpose()
    }
}

/// `B = U diag(λ) Uᵀ` via the real eigendecomposition `B = Q Λ Qᵀ`; columns
/// belonging to negative eigenvalues are multiplied by `i`, which moves the sign
/// into `U`. Inside a degenerate eigenspace any orthonormal basis is returned.
pub fn takagi_autonne(b: &DMatrix<f64>) -> Result<Takagi> {
    check_symmetric(b)?;
    let n = b.nrows();
    let eig = SymmetricEigen::new(b.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let singular_values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].abs()).collect();
    if let Some(&top) = singular_values.first() {
        if top >= 1.0 {
            return Err(Error::NotEmbeddable { s_max: top });
        }
    }
    let unitary = DMatrix::from_fn(n, n, |i, col| {
        let k = order[col];
        let q = eig.eigenvectors[(i, k)];
        if eig.eigenvalues[k] < 0.0 {
            Complex64::new(0.0, q)
        } else {
            Complex64::new(q, 0.0)
        }
    });
    Ok(Takagi {
        unitary,
        singular_values,
    })
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<f64>>())?;
    }
    seq.end()
}

/// Device configuration for one graph.
#[derive(Debug, Clone, Serialize)]
pub struct EncodedExperiment {
    #[serde(serialize_with = "serialize_rows")]
    pub b: DMatrix<f64>,
    /// Scalar of `Ω = c · diag(1 + α w)`.
    pub c: f64,
    pub omega_diag: Vec<f64>,
    pub alpha: f64,
    /// `tanh r_i`, descending.
    pub tanh_r: Vec<f64>,
    #[serde(skip)]
    pub unitary: DMatrix<Complex64>,
    /// Per-node loop strengths before rescaling.
    pub gamma: Vec<f64>,
    /// `Ω γ`, the loop weights placed on the kernel diagonal.
    pub gamma_rescaled: Vec<f64>,
}

impl EncodedExperiment {
    pub fn modes(&self) -> usize {
        self.b.nrows()
    }

    pub fn lambda_max(&self) -> f64 {
        self.tanh_r.first().copied().unwrap_or(0.0)
    }

    /// The scalar of the plain `B = c A` embedding this encoding corresponds to
    /// when `α = 0` (`c²` in terms of [`c`](Self::c)).
    pub fn plain_c(&self) -> f64 {
        self.c * self.c
    }

    /// Returns a copy carrying loop strengths `gamma` (one per node).
    pub fn with_gamma(&self, gamma: &[f64]) -> Result<EncodedExperiment> {
        let rescaled = gamma_rescale(self, gamma)?;
        let mut out = self.clone();
        out.gamma = gamma.to_vec();
        out.gamma_rescaled = rescaled;
        Ok(out)
    }

    /// Loop strengths given directly in kernel units for a uniform value `g`,
    /// weighted by `1 + α w_i` so heavier nodes never get smaller loops.
    pub fn with_kernel_gamma(&self, g: f64) -> Result<EncodedExperiment> {
        let gamma: Vec<f64> = self.omega_diag.iter().map(|_| g / self.c).collect();
        self.with_gamma(&gamma)
    }
}

/// Encodes `g` so that the largest singular value of `B` is `lambda_max`.
pub fn encode(g: &Graph, lambda_max: f64, alpha: f64) -> Result<EncodedExperiment> {
    if !(lambda_max > 0.0 && lambda_max < 1.0) {
        return Err(Error::invalid(format!("lambda_max {lambda_max} outside (0, 1)")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha = {alpha} must be non-negative")));
    }
    let m = g.node_count();
    let d: Vec<f64> = g.weights().iter().map(|w| 1.0 + alpha * w).collect();
    let weighted = DMatrix::from_fn(m, m, |i, j| d[i] * g.adjacency()[(i, j)] * d[j]);
    let s = max_singular_value(&weighted)?;
    if s == 0.0 {
        return Err(Error::invalid("graph has no edges; nothing to encode"));
    }
    let c = (lambda_max / s).sqrt();
    let (b, omega_diag) = omega_rescale(g, c, alpha)?;
    let takagi = takagi_autonne(&b)?;
    Ok(EncodedExperiment {
        b,
        c,
        omega_diag,
        alpha,
        tanh_r: takagi.singular_values,
        unitary: takagi.unitary,
        gamma: vec![0.0; m],
        gamma_rescaled: vec![0.0; m],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingReport {
    pub r: Vec<f64>,
    /// Mean squeezed-photon number `Σ sinh² r_i`.
    pub n_sqz: f64,
}

pub fn squeezing_report(exp: &EncodedExperiment) -> SqueezingReport {
    let r: Vec<f64> = exp.tanh_r.iter().map(|&t| t.atanh()).collect();
    let n_sqz = exp.tanh_r.iter().map(|&t| t * t / (1.0 - t * t)).sum();
    SqueezingReport { r, n_sqz }
}

/// Total `Σ sinh² r_i` when the top singular value is `lambda_max`.
fn n_sqz_at(shape: &[f64], lambda_max: f64) -> f64 {
    shape
        .iter()
        .map(|&s| {
            let t = lambda_max * s;
            t * t / (1.0 - t * t)
        })
        .sum()
}

/// Encodes `g` with `λ_max` chosen so that the mean squeezed-photon number is
/// `n_sqz`, by bisection (the total is increasing in `λ_max`).
pub fn encode_with_squeezing(g: &Graph, n_sqz: f64, alpha: f64) -> Result<EncodedExperiment> {
    if !(n_sqz > 0.0) || !n_sqz.is_finite() {
        return Err(Error::invalid(format!("target n_sqz {n_sqz} must be positive")));
    }
    let unit = encode(g, 0.5, alpha)?;
    let shape: Vec<f64> = unit.tanh_r.iter().map(|t| t / unit.lambda_max()).collect();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if n_sqz_at(&shape, mid) < n_sqz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    encode(g, 0.5 * (lo + hi), alpha)
}

/// `γ̃ = Ω γ` with one entry per node (the doubled `(Ω ⊕ Ω)` form repeats it).
pub fn gamma_rescale(exp: &EncodedExperiment, gamma: &[f64]) -> Result<Vec<f64>> {
    if gamma.len() != exp.omega_diag.len() {
        return Err(Error::invalid(format!(
            "gamma has {} entries, expected {}",
            gamma.len(),
            exp.omega_diag.len()
        )));
    }
    if let Some((i, &g)) = gamma.iter().enumerate().find(|(_, g)| !(**g >= 0.0) || !g.is_finite()) {
        return Err(Error::BadValue {
            location: format!("gamma {i}"),
            value: g,
        });
    }
    Ok(gamma.iter().zip(&exp.omega_diag).map(|(g, o)| g * o).collect())
}

/// True when heavier nodes never get a smaller loop strength.
pub fn validate_gamma_monotone(g: &Graph, gamma: &[f64]) -> bool {
    let w = g.weights();
    if gamma.len() != w.len() {
        return false;
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| w[i].total_cmp(&w[j]).then(gamma[i].total_cmp(&gamma[j])));
    // after sorting by (weight, gamma), a violation shows up as a drop in gamma
    // between strictly increasing weights
    let mut max_so_far = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        let wk = w[order[k]];
        let mut group_min = f64::INFINITY;
        let mut group_max = f64::NEG_INFINITY;
        while k < order.len() && w[order[k]] == wk {
            group_min = group_min.min(gamma[order[k]]);
            group_max = group_max.max(gamma[order[k]]);
            k += 1;
        }
        if group_min < max_so_far {
            return false;
        }
        max_so_far = max_so_far.max(group_max);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, Graph};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k4() -> Graph {
        Graph::complete(4).unwrap()
    }

    fn frob(a: &DMatrix<Complex64>, b: &DMatrix<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, &y)| (x - Complex64::new(y, 0.0)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn is_unitary(u: &DMatrix<Complex64>) -> bool {
        let n = u.nrows();
        let p = u.adjoint() * u;
        (p - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-10
    }

    #[test]
    fn singular_values() {
        assert!((max_singular_value(k4().adjacency()).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(max_singular_value(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.7, 0.0]);
        assert!((max_singular_value(&a).unwrap() - 0.7).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.6, 0.0]);
        assert!(max_singular_value(&bad).is_err());
    }

    #[test]
    fn c_from_lambda() {
        let c = c_from_lambda_max(k4().adjacency(), 0.5).unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-15);
        let tiny = c_from_lambda_max(k4().adjacency(), 1e-9).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-9);
        assert!(c_from_lambda_max(&DMatrix::zeros(2, 2), 0.5).is_err());
        assert!(c_from_lambda_max(k4().adjacency(), 1.0).is_err());
    }

    #[test]
    fn omega_formula() {
        let g = Graph::new(vec![1.0, 1.0], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let (b, omega) = omega_rescale(&g, 0.1, 1.0).unwrap();
        assert!((omega[0] - 0.2).abs() < 1e-15 && (omega[1] - 0.2).abs() < 1e-15);
        assert!((b[(0, 1)] - 0.04).abs() < 1e-15);

        // alpha = 0, unit weights: B = c² A
        let (b, _) = omega_rescale(&k4(), 0.3, 0.0).unwrap();
        assert!((b - k4().adjacency() * 0.09).abs().max() < 1e-15);

        let w = Graph::new(vec![0.5, 2.0, 3.0], DMatrix::zeros(3, 3)).unwrap();
        let (_, o1) = omega_rescale(&w, 0.1, 0.5).unwrap();
        let (_, o2) = omega_rescale(&w, 0.1, 1.0).unwrap();
        assert!(o1.iter().zip(&o2).all(|(a, b)| b > a));

        assert!(matches!(omega_rescale(&k4(), 0.6, 0.0), Err(Error::NotEmbeddable { .. })));
    }

    #[test]
    fn takagi_examples() {
        let diag = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3]);
        let t = takagi_autonne(&diag).unwrap();
        assert_eq!(t.singular_values, vec![0.5, 0.3]);
        assert!(frob(&t.reconstruct(), &diag) < 1e-14);

        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.0]);
        let t = takagi_autonne(&x).unwrap();
        assert!((t.singular_values[0] - 0.4).abs() < 1e-15 && (t.singular_values[1] - 0.4).abs() < 1e-15);
        assert!(frob(&t.reconstruct(), &x) < 1e-14);
        assert!(is_unitary(&t.unitary));

        let too_big = DMatrix::from_row_slice(2, 2, &[0.0, 1.2, 1.2, 0.0]);
        assert!(matches!(takagi_autonne(&too_big), Err(Error::NotEmbeddable { .. })));
    }

    #[test]
    fn takagi_random_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 3, 6, 10] {
            let mut b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            b = (&b + b.transpose()) * 0.5;
            let s = max_singular_value(&b).unwrap();
            b *= 0.8 / s;
            let t = takagi_autonne(&b).unwrap();
            assert!(frob(&t.reconstruct(), &b) < 1e-10);
            assert!(is_unitary(&t.unitary));
            assert!(t.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let scaled = takagi_autonne(&(&b * 0.3)).unwrap();
            for (a, s) in scaled.singular_values.iter().zip(&t.singular_values) {
                assert!((a - 0.3 * s).abs() < 1e-12);
            }
            assert!(frob(&scaled.reconstruct(), &(&b * 0.3)) < 1e-10);
        }
    }

    #[test]
    fn encoding_hits_lambda_max() {
        let g = erdos_renyi(10, 0.4, 2).unwrap();
        let e = encode(&g, 0.7, 0.0).unwrap();
        assert!((e.lambda_max() - 0.7).abs() < 1e-10);
        // alpha = 0 on an unweighted graph is the plain B = c A path
        let c = c_from_lambda_max(g.adjacency(), 0.7).unwrap();
        assert!((e.plain_c() - c).abs() < 1e-14);
        assert!((&e.b - g.adjacency() * c).abs().max() < 1e-14);

        let w = Graph::new((0..10).map(|i| i as f64 * 0.3).collect(), g.adjacency().clone()).unwrap();
        let e = encode(&w, 0.6, 0.8).unwrap();
        assert!((e.lambda_max() - 0.6).abs() < 1e-10);
        let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.omega_diag.clone()));
        assert!((&omega * w.adjacency() * &omega - &e.b).abs().max() < 1e-12);
    }

    #[test]
    fn squeezing() {
        let mut e = encode(&k4(), 0.5, 0.0).unwrap();
        e.tanh_r = vec![0.0; 4];
        let rep = squeezing_report(&e);
        assert!(rep.r.iter().all(|&r| r == 0.0) && rep.n_sqz == 0.0);
        e.tanh_r = vec![1f64.tanh()];
        let rep = squeezing_report(&e);
        assert!((rep.r[0] - 1.0).abs() < 1e-12);
        assert!((rep.n_sqz - 1f64.sinh().powi(2)).abs() < 1e-12);

        let g = erdos_renyi(12, 0.3, 1).unwrap();
        let e = encode_with_squeezing(&g, 2.34, 0.0).unwrap();
        assert!((squeezing_report(&e).n_sqz - 2.34).abs() < 1e-6);
    }

    #[test]
    fn gamma_rescaling() {
        let g = k4();
        let mut e = encode(&g, 0.5, 0.0).unwrap();
        e.omega_diag = vec![1.0; 4];
        assert_eq!(gamma_rescale(&e, &[0.1, 0.2, 0.3, 0.4]).unwrap(), vec![0.1, 0.2, 0.3, 0.4]);
        e.omega_diag = vec![0.5; 4];
        let r = gamma_rescale(&e, &[0.2; 4]).unwrap();
        assert!(r.iter().all(|&x| (x - 0.1).abs() < 1e-15));
        assert!(gamma_rescale(&e, &[0.2; 3]).is_err());
        assert!(gamma_rescale(&e, &[0.2, -0.1, 0.0, 0.0]).is_err());

        let w = Graph::new(vec![0.5, 1.0, 2.0, 4.0], g.adjacency().clone()).unwrap();
        let e = encode(&w, 0.5, 0.3).unwrap();
        let gamma: Vec<f64> = w.weights().iter().map(|x| 0.1 * x).collect();
        let r = gamma_rescale(&e, &gamma).unwrap();
        assert!(r.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn monotone_gamma() {
        let g = k4();
        assert!(validate_gamma_monotone(&g, &[0.3; 4]));
        let w = Graph::new(vec![1.0, 2.0], DMatrix::zeros(2, 2)).unwrap();
        assert!(!validate_gamma_monotone(&w, &[0.3, 0.1]));
        assert!(validate_gamma_monotone(&w, &[0.1, 0.3]));
        let w = Graph::new(vec![3.0, 1.0, 2.0, 1.0], DMatrix::zeros(4, 4)).unwrap();
        let lin: Vec<f64> = w.weights().iter().map(|x| 0.7 * x).collect();
        assert!(validate_gamma_monotone(&w, &lin));
        // equal weights may carry different gammas
        assert!(validate_gamma_monotone(&w, &[3.0, 0.5, 2.0, 1.0]));
        assert!(!validate_gamma_monotone(&w, &[3.0, 0.5, 0.6, 1.0]));
    }
}
