//! Binary classification as a linear feasibility problem.
//!
//! Given labels `bᵢ = sign(⟨aᵢ, x*⟩)` (with `sign(0) = +1`), the scaled rows
//! `a'ᵢ = −bᵢ aᵢ` turn "classify every row correctly" into `A' x <= 0`. The
//! augmentation adds every pairwise difference `a'ᵢ − a'ⱼ`, `i < j`.

use crate::error::{Error, Result};
use crate::matrix::{check_len, dot, DenseMatrix};
use crate::system::{LinearSystem, Relation};

/// `bᵢ = −1` when `(A x*)ᵢ < 0`, `+1` otherwise.
pub fn binarize_rhs(a: &DenseMatrix, x_star: &[f64]) -> Result<Vec<f64>> {
    Ok(a.matvec(x_star)?
        .into_iter()
        .map(|v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect())
}

/// Canonical enumeration of the pairs `i < j` of `m` rows: lexicographic,
/// zero based, so `(0,1), (0,2), …, (0,m−1), (1,2), …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndexMap {
    m: usize,
}

impl PairIndexMap {
    pub fn new(m: usize) -> Self {
        Self { m }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `C(m, 2)`.
    pub fn len(&self) -> usize {
        self.m * self.m.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rank of the first pair whose smaller index is `i`.
    fn block_start(&self, i: usize) -> usize {
        i * (2 * self.m - i - 1) / 2
    }

    pub fn pair_rank(&self, i: usize, j: usize) -> Result<usize> {
        if i >= j || j >= self.m {
            return Err(Error::InvalidPair { i, j, m: self.m });
        }
        Ok(self.block_start(i) + (j - i - 1))
    }

    pub fn pair_index(&self, h: usize) -> Result<(usize, usize)> {
        if h >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: h,
                len: self.len(),
            });
        }
        // Solve block_start(i) <= h for the largest i, then correct rounding.
        let m = self.m as f64;
        let disc = (2.0 * m - 1.0).powi(2) - 8.0 * h as f64;
        let mut i = (((2.0 * m - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
        i = i.min(self.m - 2);
        while self.block_start(i) > h {
            i -= 1;
        }
        while i + 1 < self.m - 1 && self.block_start(i + 1) <= h {
            i += 1;
        }
        Ok((i, i + 1 + h - self.block_start(i)))
    }
}

/// All `C(m,2)` rows `a'ᵢ − a'ⱼ`, `i < j`, in canonical order.
pub fn pairwise_differences(base: &DenseMatrix) -> Result<(DenseMatrix, PairIndexMap)> {
    let (m, n) = base.shape();
    if m < 2 {
        return Err(Error::TooFewRows { rows: m, required: 2 });
    }
    let map = PairIndexMap::new(m);
    let mut p = DenseMatrix::zeros(map.len(), n);
    let mut h = 0;
    for i in 0..m {
        let ri = base.row(i);
        for j in i + 1..m {
            let rj = base.row(j);
            for ((dst, a), b) in p.row_mut(h).iter_mut().zip(ri).zip(rj) {
                *dst = a - b;
            }
            h += 1;
        }
    }
    Ok((p, map))
}

/// The feasibility problem `A' x <= 0`, optionally with pairwise rows.
#[derive(Debug, Clone)]
pub struct FeasibilitySystem {
    base: LinearSystem,
    labels: Vec<f64>,
    pairs: Option<(DenseMatrix, PairIndexMap)>,
    combined: Option<LinearSystem>,
}

/// Scales each row by minus its label: `a'ᵢ = −bᵢ aᵢ`, with `b' = 0`.
pub fn hadamard_transform(a: &DenseMatrix, labels: &[f64]) -> Result<FeasibilitySystem> {
    check_len("labels", a.rows(), labels.len())?;
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, l)| **l != 1.0 && **l != -1.0) {
        return Err(Error::InvalidLabel { index, value });
    }
    let mut scaled = a.clone();
    for (i, &b) in labels.iter().enumerate() {
        scaled.row_mut(i).iter_mut().for_each(|v| *v *= -b);
    }
    let base = LinearSystem::new(scaled, vec![0.0; a.rows()], Relation::LessEqual)?;
    Ok(FeasibilitySystem {
        base,
        labels: labels.to_vec(),
        pairs: None,
        combined: None,
    })
}

/// Stacks base rows over pair rows with zero right-hand side.
pub fn combined_system(base: &DenseMatrix, pairs: Option<&DenseMatrix>) -> Result<LinearSystem> {
    let matrix = match pairs {
        Some(p) => base.vstack(p)?,
        None => base.clone(),
    };
    let rows = matrix.rows();
    LinearSystem::new(matrix, vec![0.0; rows], Relation::LessEqual)
}

impl FeasibilitySystem {
    /// Adds the pairwise-difference rows and materializes the combined stack.
    pub fn with_pairs(mut self) -> Result<Self> {
        let (p, map) = pairwise_differences(self.base.matrix())?;
        let mut combined = combined_system(self.base.matrix(), Some(&p))?;
        if let Some(x) = self.base.ground_truth() {
            combined = combined.with_ground_truth(x.to_vec())?;
        }
        self.pairs = Some((p, map));
        self.combined = Some(combined);
        Ok(self)
    }

    pub fn with_ground_truth(mut self, x_star: Vec<f64>) -> Result<Self> {
        self.base = self.base.with_ground_truth(x_star.clone())?;
        if let Some(c) = self.combined.take() {
            self.combined = Some(c.with_ground_truth(x_star)?);
        }
        Ok(self)
    }

    pub fn base(&self) -> &LinearSystem {
        &self.base
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn pair_rows(&self) -> Option<&DenseMatrix> {
        self.pairs.as_ref().map(|(p, _)| p)
    }

    pub fn pair_map(&self) -> Option<PairIndexMap> {
        self.pairs.as_ref().map(|(_, map)| *map)
    }

    pub fn base_rows(&self) -> usize {
        self.base.rows()
    }

    pub fn total_rows(&self) -> usize {
        self.base.rows() + self.pairs.as_ref().map_or(0, |(p, _)| p.rows())
    }

    /// Base rows followed by pair rows (just the base when no pairs exist).
    pub fn combined(&self) -> &LinearSystem {
        self.combined.as_ref().unwrap_or(&self.base)
    }

    /// Row `h` of the logical stack, read from the base or the pair block.
    pub fn combined_row(&self, h: usize) -> Result<&[f64]> {
        let m = self.base.rows();
        if h < m {
            return Ok(self.base.row(h));
        }
        match &self.pairs {
            Some((p, _)) if h - m < p.rows() => Ok(p.row(h - m)),
            _ => Err(Error::IndexOutOfRange {
                index: h,
                len: self.total_rows(),
            }),
        }
    }

    /// Number of pair rows with `(a'ᵢ − a'ⱼ) x > 0`. At `x = x*` these equal
    /// `|⟨aⱼ,x*⟩| − |⟨aᵢ,x*⟩| > 0`, so the planted solution generally violates
    /// a share of the augmentation.
    pub fn violated_pair_rows(&self, x: &[f64]) -> usize {
        match &self.pairs {
            Some((p, _)) => p.row_iter().filter(|r| dot(r, x) > 0.0).count(),
            None => 0,
        }
    }
}
