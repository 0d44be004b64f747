//! Synthetic systems with prescribed singular values.
//!
//! Orthogonal factors are the `Q` of a Householder QR of a standard normal
//! matrix, with column signs chosen so that `diag(R) > 0` (this makes `Q`
//! Haar distributed). A system matrix is then `A = U Σ Vᵀ`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_len, norm, DenseMatrix};
use crate::qr::HouseholderQr;
use crate::system::{LinearSystem, Relation, SvdFactors};

/// How the singular values of a generated matrix are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumSpec {
    /// `σⱼ = e^(n − j + 1)` for `j = 1..n`.
    ExponentialDecay,
    /// Log-uniform from `1` down to `1 / kappa`.
    ExplicitRatio { kappa: f64 },
    /// Exactly these values; must be positive and non-increasing.
    Explicit { values: Vec<f64> },
}

impl SpectrumSpec {
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        let vals = match self {
            SpectrumSpec::ExponentialDecay => (1..=n).map(|j| ((n - j + 1) as f64).exp()).collect(),
            SpectrumSpec::ExplicitRatio { kappa } => {
                if !(kappa.is_finite() && *kappa >= 1.0) {
                    return Err(Error::InvalidSpectrum(format!(
                        "condition number must be finite and >= 1, got {kappa}"
                    )));
                }
                if n == 1 {
                    vec![1.0]
                } else {
                    let step = kappa.ln() / (n - 1) as f64;
                    (0..n).map(|j| (-step * j as f64).exp()).collect()
                }
            }
            SpectrumSpec::Explicit { values } => {
                check_len("explicit spectrum", n, values.len())?;
                values.clone()
            }
        };
        if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidSpectrum(format!(
                "singular values must be finite and positive, found {v}"
            )));
        }
        if vals.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(vals)
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::new(rows, cols, data).expect("gaussian draws are finite")
}

fn positive_q(qr: &HouseholderQr, cols: usize) -> DenseMatrix {
    let mut q = qr.q_columns(cols);
    let diag = qr.r_diag();
    for (j, d) in diag.iter().enumerate().take(cols) {
        if *d < 0.0 {
            for i in 0..q.rows() {
                let v = q.get(i, j);
                q.set(i, j, -v);
            }
        }
    }
    q
}

/// A `dim x dim` orthogonal matrix from the QR of a standard normal matrix.
pub fn generate_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    generate_orthonormal_columns(dim, dim, rng)
}

/// A `rows x cols` matrix with orthonormal columns: the thin `Q` of a
/// `rows x cols` standard normal matrix.
///
/// Householder QR processes columns left to right, so these are the leading
/// columns of the square factor obtained from any `rows x rows` Gaussian that
/// shares the first `cols` columns.
pub fn generate_orthonormal_columns<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DenseMatrix {
    assert!(rows >= cols && cols >= 1, "need rows >= cols >= 1");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = HouseholderQr::factor(&g).expect("rows >= cols");
    positive_q(&qr, cols)
}

/// `A = U Σ Vᵀ` together with its factors.
#[derive(Debug, Clone)]
pub struct GeneratedSystem {
    pub system: LinearSystem,
    /// Leading `n` columns of the left factor (`m x n`).
    pub u_factor: DenseMatrix,
    /// `n x n` right factor.
    pub v_factor: DenseMatrix,
    pub singular_values: Vec<f64>,
}

impl GeneratedSystem {
    pub fn matrix(&self) -> &DenseMatrix {
        self.system.matrix()
    }

    pub fn svd(&self) -> SvdFactors {
        SvdFactors {
            u: Some(self.u_factor.clone()),
            singular_values: self.singular_values.clone(),
            v: Some(self.v_factor.clone()),
        }
    }
}

/// Draws `U` then `V`, builds `A = U Σ Vᵀ` and returns it as an equality
/// system with zero right-hand side.
pub fn generate_ill_conditioned<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    spectrum: &SpectrumSpec,
    rng: &mut R,
) -> Result<GeneratedSystem> {
    if n == 0 || m < n {
        return Err(Error::TooFewRows { rows: m, required: n.max(1) });
    }
    let sigma = spectrum.values(n)?;
    let u = generate_orthonormal_columns(m, n, rng);
    let v = generate_orthogonal(n, rng);
    // (U Σ) Vᵀ
    let us = DenseMatrix::from_fn(m, n, |i, k| u.get(i, k) * sigma[k]);
    let a = us.matmul(&v.transpose())?;
    let svd = SvdFactors {
        u: Some(u.clone()),
        singular_values: sigma.clone(),
        v: Some(v.clone()),
    };
    let system = LinearSystem::new(a, vec![0.0; m], Relation::Equality)?.with_svd(svd)?;
    Ok(GeneratedSystem {
        system,
        u_factor: u,
        v_factor: v,
        singular_values: sigma,
    })
}

/// Completes a generated matrix with `b = A x*`.
pub fn make_system(gen: &GeneratedSystem, x_star: &[f64], relation: Relation) -> Result<LinearSystem> {
    check_len("solution vector", gen.matrix().cols(), x_star.len())?;
    if x_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("solution vector is not finite".into()));
    }
    let rhs = gen.matrix().matvec(x_star)?;
    LinearSystem::new(gen.matrix().clone(), rhs, relation)?
        .with_svd(gen.svd())?
        .with_ground_truth(x_star.to_vec())
}

/// Distribution of the planted solution `x*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionMode {
    /// Uniform on the unit sphere.
    #[default]
    UnitSphere,
    /// `eₙ = [0, …, 0, 1]`.
    LastBasis,
    /// Independent standard normal entries.
    Gaussian,
}

/// Starting iterate choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialMode {
    #[default]
    Zero,
    Gaussian,
    UnitSphere,
}

fn draw_vector<R: Rng + ?Sized>(n: usize, unit: bool, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if unit {
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
    }
    v
}

pub fn draw_solution<R: Rng + ?Sized>(n: usize, mode: SolutionMode, rng: &mut R) -> Vec<f64> {
    match mode {
        SolutionMode::UnitSphere => draw_vector(n, true, rng),
        SolutionMode::Gaussian => draw_vector(n, false, rng),
        SolutionMode::LastBasis => {
            let mut e = vec![0.0; n];
            e[n - 1] = 1.0;
            e
        }
    }
}

pub fn draw_initial<R: Rng + ?Sized>(n: usize, mode: InitialMode, rng: &mut R) -> Vec<f64> {
    match mode {
        InitialMode::Zero => vec![0.0; n],
        InitialMode::Gaussian => draw_vector(n, false, rng),
        InitialMode::UnitSphere => draw_vector(n, true, rng),
    }
}

/// Standard normal `rows x cols` matrix.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    gaussian_matrix(rows, cols, rng)
}
