//! Householder QR, dense least squares and the smallest right singular vector.

use crate::error::{Error, Result};
use crate::matrix::{check_len, dot, norm, DenseMatrix};

/// Compact Householder factorization `A = Q R` of an `m x n` matrix, `m >= n`.
///
/// The upper triangle of `packed` holds `R`; below the diagonal, column `k`
/// holds the tail of the `k`-th reflector `v` (with implicit `v[k] = 1`), so
/// `H_k = I - tau[k] v vᵀ` and `Q = H_0 H_1 ... H_{n-1}`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    packed: DenseMatrix,
    tau: Vec<f64>,
}

impl HouseholderQr {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::TooFewRows { rows: m, required: n });
        }
        let mut qr = a.clone();
        let mut tau = vec![0.0; n];
        for k in 0..n {
            let alpha = qr.get(k, k);
            let tail_sq: f64 = (k + 1..m).map(|i| qr.get(i, k).powi(2)).sum();
            if tail_sq == 0.0 {
                // already triangular in this column; H_k = I
                continue;
            }
            let beta = -alpha.signum() * (alpha * alpha + tail_sq).sqrt();
            tau[k] = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            for i in k + 1..m {
                let v = qr.get(i, k) * scale;
                qr.set(i, k, v);
            }
            qr.set(k, k, beta);
            for j in k + 1..n {
                let mut w = qr.get(k, j);
                for i in k + 1..m {
                    w += qr.get(i, k) * qr.get(i, j);
                }
                w *= tau[k];
                let top = qr.get(k, j) - w;
                qr.set(k, j, top);
                for i in k + 1..m {
                    let val = qr.get(i, j) - w * qr.get(i, k);
                    qr.set(i, j, val);
                }
            }
        }
        Ok(Self { packed: qr, tau })
    }

    pub fn rows(&self) -> usize {
        self.packed.rows()
    }

    pub fn cols(&self) -> usize {
        self.packed.cols()
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.cols()).map(|k| self.packed.get(k, k)).collect()
    }

    /// The `n x n` upper-triangular factor.
    pub fn r(&self) -> DenseMatrix {
        let n = self.cols();
        DenseMatrix::from_fn(n, n, |i, j| if j >= i { self.packed.get(i, j) } else { 0.0 })
    }

    fn apply_reflector(&self, k: usize, y: &mut [f64]) {
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let m = self.rows();
        let mut w = y[k];
        for i in k + 1..m {
            w += self.packed.get(i, k) * y[i];
        }
        w *= t;
        y[k] -= w;
        for i in k + 1..m {
            y[i] -= w * self.packed.get(i, k);
        }
    }

    /// Overwrites `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut [f64]) -> Result<()> {
        check_len("Qᵀb operand", self.rows(), b.len())?;
        for k in 0..self.cols() {
            self.apply_reflector(k, b);
        }
        Ok(())
    }

    /// The leading `cols` columns of `Q` (`cols <= m`).
    pub fn q_columns(&self, cols: usize) -> DenseMatrix {
        let m = self.rows();
        assert!(cols >= 1 && cols <= m);
        let mut q = DenseMatrix::zeros(m, cols);
        let mut col = vec![0.0; m];
        for j in 0..cols {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            for k in (0..self.cols()).rev() {
                self.apply_reflector(k, &mut col);
            }
            for (i, v) in col.iter().enumerate() {
                q.set(i, j, *v);
            }
        }
        q
    }

    /// Solves `R x = y[..n]` by back substitution.
    pub fn solve_r(&self, y: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let mut x = y[..n].to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.packed.get(i, j) * x[j];
            }
            x[i] = s / self.packed.get(i, i);
        }
        x
    }

    /// Solves `Rᵀ z = y` by forward substitution.
    pub fn solve_rt(&self, y: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let mut z = y[..n].to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.packed.get(j, i) * z[j];
            }
            z[i] = s / self.packed.get(i, i);
        }
        z
    }

    /// First pivot whose magnitude falls at or below `threshold`.
    pub fn first_small_pivot(&self, threshold: f64) -> Option<(usize, f64)> {
        self.r_diag()
            .into_iter()
            .enumerate()
            .find(|(_, d)| d.abs() <= threshold)
    }
}

/// Relative pivot threshold below which a matrix is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-13;

/// Minimizer of `‖A x − b‖₂` through Householder QR.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len("least-squares right-hand side", a.rows(), b.len())?;
    let qr = HouseholderQr::factor(a)?;
    if let Some((pivot, value)) = qr.first_small_pivot(RANK_TOLERANCE * a.frobenius_norm()) {
        return Err(Error::RankDeficient { pivot, value });
    }
    let mut y = b.to_vec();
    qr.apply_qt(&mut y)?;
    Ok(qr.solve_r(&y))
}

/// Settings for [`smallest_right_singular_vector`].
#[derive(Debug, Clone, Copy)]
pub struct InverseIterationOptions {
    /// Convergence when `‖AᵀA v − σ² v‖ <= tol · σ₁²`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InverseIterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingularPair {
    pub vector: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
}

/// Estimates the right singular vector of the smallest singular value by
/// inverse iteration on `AᵀA + δI`.
///
/// The shifted Gram matrix is never formed: `[A; √δ I] = Q R` gives
/// `RᵀR = AᵀA + δI`, and each step is two triangular solves. The shift is
/// `δ = (ε_mach ‖A‖_F)²`, which keeps `R` invertible without moving any
/// singular value that matters at double precision.
pub fn smallest_right_singular_vector(
    a: &DenseMatrix,
    opts: InverseIterationOptions,
) -> Result<SingularPair> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::TooFewRows { rows: m, required: n });
    }
    let shift = f64::EPSILON * a.frobenius_norm();
    let stacked = a.vstack(&DenseMatrix::identity(n).scaled(shift))?;
    let qr = HouseholderQr::factor(&stacked)?;
    if qr.first_small_pivot(0.0).is_some() {
        return Err(Error::RankDeficient {
            pivot: qr.first_small_pivot(0.0).unwrap().0,
            value: 0.0,
        });
    }

    let gram_apply = |v: &[f64]| -> Vec<f64> {
        let av = a.matvec(v).expect("dimension checked");
        a.tr_matvec(&av).expect("dimension checked")
    };

    // σ₁² by a short power iteration; only used to scale the stopping rule.
    let mut p: Vec<f64> = (0..n).map(|j| 1.0 + 0.5 * (j as f64 + 1.0).sin()).collect();
    let mut sigma1_sq = 0.0;
    for _ in 0..100 {
        let g = gram_apply(&p);
        let nrm = norm(&g);
        if nrm == 0.0 {
            break;
        }
        let next = nrm / norm(&p);
        p = g.iter().map(|v| v / nrm).collect();
        if (next - sigma1_sq).abs() <= 1e-6 * next {
            sigma1_sq = next;
            break;
        }
        sigma1_sq = next;
    }
    let sigma1_sq = sigma1_sq.max(a.max_abs().powi(2));

    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + 0.25 * (j as f64 * 1.7).cos()).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let z = qr.solve_rt(&v);
        let y = qr.solve_r(&z);
        let ny = norm(&y);
        v = y.iter().map(|x| x / ny).collect();
        let g = gram_apply(&v);
        let sigma_sq = dot(&v, &g);
        residual = g
            .iter()
            .zip(&v)
            .map(|(gi, vi)| (gi - sigma_sq * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tol * sigma1_sq {
            fix_sign(&mut v);
            let sigma = norm(&a.matvec(&v)?);
            return Ok(SingularPair {
                vector: v,
                sigma,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Flips `v` so that its first component of non-negligible magnitude is
/// positive.
fn fix_sign(v: &mut [f64]) {
    let cutoff = 1e-12 * crate::matrix::max_abs(v);
    if let Some(first) = v.iter().find(|x| x.abs() > cutoff) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
