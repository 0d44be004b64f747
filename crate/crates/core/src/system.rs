use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_len, dot, max_abs, DenseMatrix};

/// How each row constrains the iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `⟨aᵢ, x⟩ = bᵢ`
    Equality,
    /// `⟨aᵢ, x⟩ <= bᵢ`
    LessEqual,
}

/// Singular values of a system matrix, with the factors when known.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Left singular vectors (at least the leading `n` columns).
    pub u: Option<DenseMatrix>,
    /// Non-increasing, strictly positive.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, `n x n`.
    pub v: Option<DenseMatrix>,
}

impl SvdFactors {
    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// Column `j` (zero based) of `V`.
    pub fn right_vector(&self, j: usize) -> Option<Vec<f64>> {
        self.v.as_ref().map(|v| v.column(j))
    }
}

/// A dense system `A x (= | <=) b` with optional ground truth.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    matrix: DenseMatrix,
    rhs: Vec<f64>,
    relation: Relation,
    row_norms_sq: Vec<f64>,
    ground_truth: Option<Vec<f64>>,
    svd: Option<SvdFactors>,
}

impl LinearSystem {
    pub fn new(matrix: DenseMatrix, rhs: Vec<f64>, relation: Relation) -> Result<Self> {
        check_len("right-hand side", matrix.rows(), rhs.len())?;
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("right-hand side is not finite".into()));
        }
        let row_norms_sq = matrix.row_norms_sq();
        Ok(Self {
            matrix,
            rhs,
            relation,
            row_norms_sq,
            ground_truth: None,
            svd: None,
        })
    }

    /// Attaches `x*`. For equality systems the residual `‖A x* − b‖∞` must be
    /// within `1e-9 (1 + ‖b‖∞)`.
    pub fn with_ground_truth(mut self, x_star: Vec<f64>) -> Result<Self> {
        check_len("ground truth", self.cols(), x_star.len())?;
        if self.relation == Relation::Equality {
            let ax = self.matrix.matvec(&x_star)?;
            let res = ax
                .iter()
                .zip(&self.rhs)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            let bound = 1e-9 * (1.0 + max_abs(&self.rhs));
            if res > bound {
                return Err(Error::InvalidMatrix(format!(
                    "ground truth leaves residual {res:e} above {bound:e}"
                )));
            }
        }
        self.ground_truth = Some(x_star);
        Ok(self)
    }

    pub fn with_svd(mut self, svd: SvdFactors) -> Result<Self> {
        check_len("singular values", self.cols(), svd.singular_values.len())?;
        self.svd = Some(svd);
        Ok(self)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    #[inline]
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row_norms_sq[i]
    }

    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    /// Rows that can be projected onto (nonzero norm).
    pub fn is_sampleable(&self, i: usize) -> bool {
        self.row_norms_sq[i] > 0.0
    }

    #[inline]
    pub fn residual(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.matrix.row(i), x) - self.rhs[i]
    }

    pub fn ground_truth(&self) -> Option<&[f64]> {
        self.ground_truth.as_deref()
    }

    pub fn svd(&self) -> Option<&SvdFactors> {
        self.svd.as_ref()
    }

    /// The listed rows with their right-hand sides; ground truth carries over.
    pub fn subsystem(&self, indices: &[usize]) -> Result<Self> {
        let matrix = self.matrix.select_rows(indices)?;
        let rhs = indices.iter().map(|&i| self.rhs[i]).collect();
        let mut sub = Self::new(matrix, rhs, self.relation)?;
        sub.ground_truth = self.ground_truth.clone();
        Ok(sub)
    }

    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.matrix.clone(), rhs, self.relation)?;
        out.svd = self.svd.clone();
        Ok(out)
    }
}
