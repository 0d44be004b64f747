//! Row-sampling distributions and without-replacement draws.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::FeasibilitySystem;
use crate::matrix::{check_len, dot, norm, DenseMatrix};
use crate::system::LinearSystem;

/// Strategy names as they appear in configuration files and on the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "sq-norm")]
    SquaredNorm,
    #[serde(rename = "spectral")]
    Spectral,
    #[serde(rename = "scheme-base")]
    SchemeBaseOnly,
    #[serde(rename = "scheme-combined")]
    SchemeCombinedUniform,
    #[serde(rename = "scheme-pairs")]
    SchemePairsOnly,
    #[serde(rename = "cluster")]
    ClusterGuided,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Uniform,
        StrategyKind::SquaredNorm,
        StrategyKind::Spectral,
        StrategyKind::SchemeBaseOnly,
        StrategyKind::SchemeCombinedUniform,
        StrategyKind::SchemePairsOnly,
        StrategyKind::ClusterGuided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Uniform => "uniform",
            StrategyKind::SquaredNorm => "sq-norm",
            StrategyKind::Spectral => "spectral",
            StrategyKind::SchemeBaseOnly => "scheme-base",
            StrategyKind::SchemeCombinedUniform => "scheme-combined",
            StrategyKind::SchemePairsOnly => "scheme-pairs",
            StrategyKind::ClusterGuided => "cluster",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sampling strategy `{s}`")))
    }
}

/// A sampling strategy together with the data it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingStrategy {
    Uniform,
    SquaredNorm,
    /// Weights `|⟨aᵢ, v⟩|` for a unit vector `v`.
    Spectral { direction: Vec<f64> },
    SchemeBaseOnly,
    SchemeCombinedUniform,
    SchemePairsOnly,
    ClusterGuided,
}

impl SamplingStrategy {
    pub fn spectral(direction: Vec<f64>) -> Result<Self> {
        check_unit(&direction)?;
        Ok(SamplingStrategy::Spectral { direction })
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            SamplingStrategy::Uniform => StrategyKind::Uniform,
            SamplingStrategy::SquaredNorm => StrategyKind::SquaredNorm,
            SamplingStrategy::Spectral { .. } => StrategyKind::Spectral,
            SamplingStrategy::SchemeBaseOnly => StrategyKind::SchemeBaseOnly,
            SamplingStrategy::SchemeCombinedUniform => StrategyKind::SchemeCombinedUniform,
            SamplingStrategy::SchemePairsOnly => StrategyKind::SchemePairsOnly,
            SamplingStrategy::ClusterGuided => StrategyKind::ClusterGuided,
        }
    }
}

fn check_unit(v: &[f64]) -> Result<()> {
    let nv = norm(v);
    if (nv - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDirection(nv));
    }
    Ok(())
}

/// Spectral coefficients `c = A v` normalized to `ωᵢ = |cᵢ| / Σ|cₗ|`.
pub fn spectral_weights(a: &DenseMatrix, direction: &[f64]) -> Result<Vec<f64>> {
    check_unit(direction)?;
    let c = a.matvec(direction)?;
    let total: f64 = c.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(c.iter().map(|v| v.abs() / total).collect())
}

/// A normalized discrete distribution over row indices.
#[derive(Debug, Clone)]
pub struct RowDistribution {
    support: Vec<usize>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    uniform: bool,
}

impl RowDistribution {
    /// Normalizes non-negative `raw` weights over `support`.
    pub fn new(support: Vec<usize>, raw: Vec<f64>) -> Result<Self> {
        check_len("distribution weights", support.len(), raw.len())?;
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("sampling weights must be finite and non-negative".into()));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            support,
            weights,
            cumulative,
            uniform: false,
        })
    }

    pub fn uniform(support: Vec<usize>) -> Result<Self> {
        let k = support.len();
        let mut d = Self::new(support, vec![1.0; k])?;
        d.uniform = true;
        Ok(d)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Probability of row `row` (zero when outside the support).
    pub fn probability(&self, row: usize) -> f64 {
        self.support
            .iter()
            .position(|&r| r == row)
            .map_or(0.0, |p| self.weights[p])
    }

    /// Position within the support drawn from the full distribution.
    fn draw_position<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.uniform {
            return rng.random_range(0..self.support.len());
        }
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        let pos = self.cumulative.partition_point(|c| *c <= u);
        // Never land on a zero-weight entry at the tail because of rounding.
        let mut p = pos.min(self.support.len() - 1);
        while self.weights[p] == 0.0 && p > 0 {
            p -= 1;
        }
        p
    }

    /// Support entries with positive probability.
    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

/// Draws `beta` distinct rows proportionally to the weights, one at a time,
/// each draw conditioned on excluding the rows already taken.
///
/// Conditioning is realized by redrawing from the full distribution, which
/// yields exactly the renormalized law; after many consecutive rejections the
/// draw falls back to an explicit renormalized scan.
pub fn sample_rows(
    dist: &RowDistribution,
    beta: usize,
    rng: &mut dyn RngCore,
    out: &mut Vec<usize>,
) -> Result<()> {
    out.clear();
    let available = dist.positive_count();
    if beta > available {
        return Err(Error::SampleSize {
            requested: beta,
            available,
        });
    }
    if beta == available {
        out.extend(
            dist.support
                .iter()
                .zip(&dist.weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(r, _)| *r),
        );
        return Ok(());
    }
    let mut taken: Vec<usize> = Vec::with_capacity(beta);
    while taken.len() < beta {
        let mut pos = None;
        for _ in 0..64 {
            let p = dist.draw_position(rng);
            if !taken.contains(&p) {
                pos = Some(p);
                break;
            }
        }
        let p = match pos {
            Some(p) => p,
            None => {
                let remaining: f64 = dist
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken.contains(i))
                    .map(|(_, w)| w)
                    .sum();
                let mut u = rng.random::<f64>() * remaining;
                let mut chosen = None;
                for (i, w) in dist.weights.iter().enumerate() {
                    if taken.contains(&i) || *w == 0.0 {
                        continue;
                    }
                    chosen = Some(i);
                    if u < *w {
                        break;
                    }
                    u -= w;
                }
                chosen.expect("beta < positive count")
            }
        };
        taken.push(p);
    }
    out.extend(taken.into_iter().map(|p| dist.support[p]));
    Ok(())
}

/// Rows a distribution is built over, with the count of leading base rows
/// (the remainder being pairwise-difference rows).
#[derive(Debug, Clone, Copy)]
pub struct SamplingTarget<'a> {
    pub system: &'a LinearSystem,
    pub base_rows: usize,
}

impl<'a> From<&'a LinearSystem> for SamplingTarget<'a> {
    fn from(system: &'a LinearSystem) -> Self {
        Self {
            system,
            base_rows: system.rows(),
        }
    }
}

impl<'a> From<&'a FeasibilitySystem> for SamplingTarget<'a> {
    fn from(f: &'a FeasibilitySystem) -> Self {
        Self {
            system: f.combined(),
            base_rows: f.base_rows(),
        }
    }
}

/// Builds the static distribution for `strategy`. Zero-norm rows are never
/// part of a support.
pub fn build_distribution<'a>(
    strategy: &SamplingStrategy,
    target: impl Into<SamplingTarget<'a>>,
) -> Result<RowDistribution> {
    let target = target.into();
    let sys = target.system;
    let nonzero = |range: std::ops::Range<usize>| -> Vec<usize> {
        range.filter(|&i| sys.is_sampleable(i)).collect()
    };
    match strategy {
        SamplingStrategy::Uniform | SamplingStrategy::SchemeCombinedUniform => {
            RowDistribution::uniform(nonzero(0..sys.rows()))
        }
        SamplingStrategy::SchemeBaseOnly => RowDistribution::uniform(nonzero(0..target.base_rows)),
        SamplingStrategy::SchemePairsOnly => {
            RowDistribution::uniform(nonzero(target.base_rows..sys.rows()))
        }
        SamplingStrategy::SquaredNorm => {
            let support = nonzero(0..sys.rows());
            let w = support.iter().map(|&i| sys.row_norm_sq(i)).collect();
            RowDistribution::new(support, w)
        }
        SamplingStrategy::Spectral { direction } => {
            let omega = spectral_weights(sys.matrix(), direction)?;
            let support = nonzero(0..sys.rows());
            let w = support.iter().map(|&i| omega[i]).collect();
            RowDistribution::new(support, w)
        }
        SamplingStrategy::ClusterGuided => Err(Error::DynamicStrategy("cluster")),
    }
}

/// Spectral coefficient of a single row; exposed for diagnostics.
pub fn spectral_coefficient(row: &[f64], direction: &[f64]) -> f64 {
    dot(row, direction)
}
