//! Gaussian states in the amplitude-ordered `(a, a†)` basis.
//!
//! The covariance is `Σ_ij = ½⟨{ξ_i, ξ_j†}⟩ − d_i d_j*` with `ξ = (a_1..a_M, a_1†..a_M†)`,
//! so the vacuum has `Σ = I/2`. Everything else derives from the Husimi covariance
//! `Σ_Q = Σ + I/2`: the sampling kernel `X(I − Σ_Q⁻¹)` and the loop weights
//! `γ = d†Σ_Q⁻¹`.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::encoding::EncodedExperiment;
use crate::error::{Error, Result};

type C = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
/// Largest condition number of `Σ_Q` accepted before solves are refused.
pub const MAX_CONDITION: f64 = 1e12;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: usize,
    sigma: DMatrix<C>,
    disp: DVector<C>,
}

impl GaussianState {
    /// Checks shapes, Hermiticity, the conjugate pairing of `d` and positive
    /// definiteness of `Σ_Q`.
    pub fn new(sigma: DMatrix<C>, disp: DVector<C>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n || n % 2 == 1 || disp.len() != n {
            return Err(Error::invalid(format!(
                "covariance {}x{} and displacement of length {} do not describe M modes",
                sigma.nrows(),
                sigma.ncols(),
                disp.len()
            )));
        }
        let m = n / 2;
        for i in 0..n {
            for j in 0..n {
                if (sigma[(i, j)] - sigma[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::invalid(format!("covariance not Hermitian at ({i}, {j})")));
                }
            }
        }
        for i in 0..m {
            if (disp[i] - disp[i + m].conj()).norm() > HERMITIAN_TOL {
                return Err(Error::invalid(format!("displacement halves not conjugate at mode {i}")));
            }
        }
        let state = GaussianState { modes: m, sigma, disp };
        state.factor()?;
        Ok(state)
    }

    pub fn vacuum(m: usize) -> Self {
        GaussianState {
            modes: m,
            sigma: DMatrix::identity(2 * m, 2 * m) * c(0.5),
            disp: DVector::zeros(2 * m),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sigma(&self) -> &DMatrix<C> {
        &self.sigma
    }

    pub fn disp(&self) -> &DVector<C> {
        &self.disp
    }

    pub fn sigma_q(&self) -> DMatrix<C> {
        &self.sigma + DMatrix::identity(2 * self.modes, 2 * self.modes) * c(0.5)
    }

    /// Cholesky factor of `Σ_Q`, refused when the condition number exceeds
    /// [`MAX_CONDITION`].
    fn factor(&self) -> Result<Cholesky<C, Dyn>> {
        let q = self.sigma_q();
        if q.nrows() == 0 {
            return Cholesky::new(q).ok_or_else(|| Error::Singular("empty".into()));
        }
        let eig = SymmetricEigen::new(q.clone());
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !(lo > 0.0) {
            return Err(Error::Singular(format!("Σ_Q has eigenvalue {lo}")));
        }
        if hi / lo > MAX_CONDITION {
            return Err(Error::IllConditioned(hi / lo));
        }
        Cholesky::new(q).ok_or_else(|| Error::Singular("Cholesky factorization of Σ_Q failed".into()))
    }

    /// `ln det Σ_Q`.
    pub fn log_det_q(&self) -> Result<f64> {
        let l = self.factor()?;
        Ok(2.0 * l.l_dirty().diagonal().iter().map(|x| x.re.ln()).sum::<f64>())
    }

    /// `det(2Σ)`: 1 for pure states, larger for mixed ones.
    pub fn purity_det(&self) -> f64 {
        (&self.sigma * c(2.0)).determinant().re
    }

    /// Uniform loss: `Σ → ηΣ + (1−η) I/2`, `d → √η d`.
    pub fn apply_loss(&self, eta: f64) -> Result<GaussianState> {
        self.apply_loss_per_mode(&vec![eta; self.modes])
    }

    /// Loss with transmission `etas[i]` on mode `i`, applied to both halves of
    /// the doubled basis.
    pub fn apply_loss_per_mode(&self, etas: &[f64]) -> Result<GaussianState> {
        if etas.len() != self.modes {
            return Err(Error::invalid(format!(
                "{} transmissions given for {} modes",
                etas.len(),
                self.modes
            )));
        }
        if let Some(&bad) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!("loss parameter eta = {bad} outside [0, 1]")));
        }
        let n = 2 * self.modes;
        let t: Vec<f64> = (0..n).map(|i| etas[i % self.modes].sqrt()).collect();
        let sigma = DMatrix::from_fn(n, n, |i, j| {
            let v = self.sigma[(i, j)] * (t[i] * t[j]);
            if i == j {
                v + c(0.5 * (1.0 - t[i] * t[i]))
            } else {
                v
            }
        });
        let disp = DVector::from_fn(n, |i, _| self.disp[i] * t[i]);
        Ok(GaussianState {
            modes: self.modes,
            sigma,
            disp,
        })
    }

    /// `(X(I − Σ_Q⁻¹), γ)` where `γ_i = (d†Σ_Q⁻¹)_i`. The kernel is symmetrized to
    /// remove rounding noise.
    pub fn kernel_matrix(&self) -> Result<(DMatrix<C>, Vec<C>)> {
        let l = self.factor()?;
        let n = 2 * self.modes;
        let inv = l.inverse();
        let m = self.modes;
        let raw = DMatrix::from_fn(n, n, |i, j| {
            let xi = (i + m) % n;
            let id = if xi == j { c(1.0) } else { c(0.0) };
            id - inv[(xi, j)]
        });
        let kernel = (&raw + raw.transpose()) * c(0.5);
        let gamma = l.solve(&self.disp).iter().map(|x| x.conj()).collect();
        Ok((kernel, gamma))
    }

    /// `½ d†Σ_Q⁻¹d`, via a Cholesky solve.
    pub fn normalization_exponent(&self) -> Result<f64> {
        let l = self.factor()?;
        let y = l.solve(&self.disp);
        Ok(0.5 * self.disp.dotc(&y).re)
    }

    /// The same exponent written through the loop weights, `½ γ̂†Σ_Q*γ̂` with
    /// `γ̂ = (d†Σ_Q⁻¹)ᵀ`.
    pub fn normalization_exponent_dual(&self) -> Result<f64> {
        let (_, gamma) = self.kernel_matrix()?;
        let g = DVector::from_vec(gamma);
        let q = self.sigma_q().map(|x| x.conj());
        Ok(0.5 * g.dotc(&(q * &g)).re)
    }

    pub fn mean_photon_budget(&self) -> PhotonBudget {
        let m = self.modes;
        let n_sqz: f64 = (0..m)
            .map(|i| 0.5 * (self.sigma[(i, i)].re + self.sigma[(i + m, i + m)].re) - 0.5)
            .sum();
        let n_disp: f64 = (0..m).map(|i| self.disp[i].norm_sqr()).sum();
        let total = n_sqz + n_disp;
        PhotonBudget {
            n_sqz,
            n_disp,
            ratio: if n_sqz > 0.0 { Some(n_disp / n_sqz) } else { None },
            collision_free: m as f64 >= total * total,
            collision_margin: m as f64 - total * total,
        }
    }

    pub fn dump(&self) -> StateDump {
        let split = |m: &DMatrix<C>, f: fn(&C) -> f64| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().map(f).collect()).collect()
        };
        StateDump {
            modes: self.modes,
            sigma_re: split(&self.sigma, |x| x.re),
            sigma_im: split(&self.sigma, |x| x.im),
            disp_re: self.disp.iter().map(|x| x.re).collect(),
            disp_im: self.disp.iter().map(|x| x.im).collect(),
        }
    }

    /// Debug dump of the real and imaginary parts. The layout is not a stable format.
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.dump())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateDump {
    pub modes: usize,
    pub sigma_re: Vec<Vec<f64>>,
    pub sigma_im: Vec<Vec<f64>>,
    pub disp_re: Vec<f64>,
    pub disp_im: Vec<f64>,
}

/// Mean photon numbers from squeezing and from displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonBudget {
    pub n_sqz: f64,
    pub n_disp: f64,
    /// `n_disp / n_sqz`, absent without squeezing.
    pub ratio: Option<f64>,
    /// `M ≥ (n_sqz + n_disp)²`.
    pub collision_free: bool,
    pub collision_margin: f64,
}

/// Pure state with `Σ_Q⁻¹ = [[I, −B], [−B, I]]` and loop weights `Ω γ` on both
/// halves, so `d = Σ_Q γ̂`.
pub fn pure_state_from_encoding(exp: &EncodedExperiment, gamma: &[f64]) -> Result<GaussianState> {
    let m = exp.modes();
    let gt = crate::encoding::gamma_rescale(exp, gamma)?;
    let eig = SymmetricEigen::new(exp.b.clone());
    if let Some(&bad) = eig.eigenvalues.iter().find(|x| x.abs() >= 1.0) {
        return Err(Error::NotEmbeddable { s_max: bad.abs() });
    }
    let q = &eig.eigenvectors;
    let spectral = |f: &dyn Fn(f64) -> f64| {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        q * d * q.transpose()
    };
    let diag_block = spectral(&|l| 1.0 / (1.0 - l * l));
    let off_block = spectral(&|l| l / (1.0 - l * l));
    let first = spectral(&|l| 1.0 / (1.0 - l)) * DVector::from_column_slice(&gt);
    let n = 2 * m;
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        let v = if (i < m) == (j < m) {
            diag_block[(i % m, j % m)]
        } else {
            off_block[(i % m, j % m)]
        };
        c(v - if i == j { 0.5 } else { 0.0 })
    });
    let disp = DVector::from_fn(n, |i, _| c(first[i % m]));
    GaussianState::new(sigma, disp)
}
