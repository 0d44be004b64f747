//! Row reduction: inner-product coresets, ε-cover partitions with
//! best-cluster sampling, and the online active-set reduction schedule.

use rand::seq::index;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_len, distance, dot, norm, DenseMatrix};
use crate::solvers::RowSampler;
use crate::system::LinearSystem;

/// `sᵢ = |⟨aᵢ, x_ref⟩|`.
pub fn score_rows(a: &DenseMatrix, x_ref: &[f64]) -> Result<Vec<f64>> {
    Ok(a.matvec(x_ref)?.into_iter().map(f64::abs).collect())
}

/// Indices sorted by `key`, ties broken by index.
fn stable_order(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]).then(i.cmp(&j)));
    order
}

#[derive(Debug, Clone)]
pub struct Coreset {
    /// The kept rows, in their original order.
    pub system: LinearSystem,
    /// Indices of the kept rows in the full system, ascending.
    pub indices: Vec<usize>,
}

/// Keeps the `round(c·n)` rows most orthogonal to `x_ref` (clamped to
/// `[1, m]`).
pub fn extract_coreset(system: &LinearSystem, c: f64, x_ref: &[f64]) -> Result<Coreset> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("coreset factor must be positive, got {c}")));
    }
    let (m, n) = system.matrix().shape();
    let k = ((c * n as f64).round() as usize).clamp(1, m);
    let scores = score_rows(system.matrix(), x_ref)?;
    let mut indices: Vec<usize> = stable_order(&scores).into_iter().take(k).collect();
    indices.sort_unstable();
    Ok(Coreset {
        system: system.subsystem(&indices)?,
        indices,
    })
}

/// Similarity used to decide cluster membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterCriterion {
    /// `‖aₖ/‖aₖ‖ − c/‖c‖‖ < ε`.
    #[default]
    NormalizedDistance,
    /// `⟨aₖ, c⟩ < ε` with the raw centroid.
    InnerProduct,
}

impl ClusterCriterion {
    fn value(self, row: &[f64], direction: &[f64], centroid: &[f64]) -> f64 {
        match self {
            ClusterCriterion::NormalizedDistance => {
                let cn = norm(centroid);
                if cn == 0.0 {
                    // members cancel out; the centroid has no direction
                    return f64::INFINITY;
                }
                direction
                    .iter()
                    .zip(centroid)
                    .map(|(d, c)| (d - c / cn).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
            ClusterCriterion::InnerProduct => dot(row, centroid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub clusters: Vec<Vec<usize>>,
    /// Arithmetic mean of each cluster's rows.
    pub centroids: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub criterion: ClusterCriterion,
}

impl ClusterPartition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

fn mean_of(a: &DenseMatrix, members: &[usize]) -> Vec<f64> {
    let mut sum = vec![0.0; a.cols()];
    for &i in members {
        for (s, v) in sum.iter_mut().zip(a.row(i)) {
            *s += v;
        }
    }
    let k = members.len() as f64;
    sum.iter_mut().for_each(|s| *s /= k);
    sum
}

/// Greedy sequential ε-cover. Each nonzero row joins the nearest existing
/// cluster when that value is below `epsilon`, otherwise it opens a new one;
/// centroids are running means. Zero rows belong to no cluster.
pub fn epsilon_cover(a: &DenseMatrix, epsilon: f64, criterion: ClusterCriterion) -> Result<ClusterPartition> {
    if epsilon.is_nan() {
        return Err(Error::Config("epsilon must be a number".into()));
    }
    let n = a.cols();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let mut direction = vec![0.0; n];
    for (i, row) in a.row_iter().enumerate() {
        let len = norm(row);
        if len == 0.0 {
            continue;
        }
        for (d, v) in direction.iter_mut().zip(row) {
            *d = v / len;
        }
        let nearest = centroids
            .iter()
            .map(|c| criterion.value(row, &direction, c))
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (j, v)| match best {
                Some((_, bv)) if bv <= v => best,
                _ => Some((j, v)),
            });
        match nearest {
            Some((j, v)) if v < epsilon => {
                clusters[j].push(i);
                let k = clusters[j].len() as f64;
                for ((s, c), x) in sums[j].iter_mut().zip(centroids[j].iter_mut()).zip(row) {
                    *s += x;
                    *c = *s / k;
                }
            }
            _ => {
                clusters.push(vec![i]);
                sums.push(row.to_vec());
                centroids.push(row.to_vec());
            }
        }
    }
    Ok(ClusterPartition {
        clusters,
        centroids,
        epsilon,
        criterion,
    })
}

/// Bisects ε until the cover has between `min_clusters` and `max_clusters`
/// clusters; returns the closest partition found when the band is missed.
pub fn select_epsilon(
    a: &DenseMatrix,
    criterion: ClusterCriterion,
    min_clusters: usize,
    max_clusters: usize,
) -> Result<ClusterPartition> {
    if min_clusters == 0 || min_clusters > max_clusters {
        return Err(Error::Config(format!(
            "invalid cluster-count band [{min_clusters}, {max_clusters}]"
        )));
    }
    let (mut lo, mut hi) = match criterion {
        ClusterCriterion::NormalizedDistance => (0.0, 2.0 + 1e-9),
        ClusterCriterion::InnerProduct => {
            let b = a.row_norms_sq().into_iter().fold(0.0, f64::max) + 1.0;
            (-b, b)
        }
    };
    let miss = |count: usize| {
        if count < min_clusters {
            min_clusters - count
        } else {
            count.saturating_sub(max_clusters)
        }
    };
    let mut best: Option<ClusterPartition> = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = epsilon_cover(a, mid, criterion)?;
        let count = p.len();
        if best.as_ref().is_none_or(|b| miss(count) < miss(b.len())) {
            best = Some(p);
        }
        if count > max_clusters {
            lo = mid;
        } else if count < min_clusters {
            hi = mid;
        } else {
            break;
        }
    }
    best.ok_or(Error::EmptyPartition)
}

/// One full re-pass: every clustered row moves to its nearest centroid, then
/// centroids are recomputed and empty clusters dropped.
pub fn reassign(a: &DenseMatrix, partition: &ClusterPartition) -> Result<ClusterPartition> {
    if partition.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let mut members: Vec<usize> = partition.clusters.iter().flatten().copied().collect();
    members.sort_unstable();
    let mut clusters = vec![Vec::new(); partition.len()];
    for i in members {
        let row = a.row(i);
        let len = norm(row);
        let direction: Vec<f64> = row.iter().map(|v| v / len).collect();
        let j = partition
            .centroids
            .iter()
            .map(|c| partition.criterion.value(row, &direction, c))
            .enumerate()
            .fold((0, f64::INFINITY), |(bj, bv), (j, v)| if v < bv { (j, v) } else { (bj, bv) })
            .0;
        clusters[j].push(i);
    }
    clusters.retain(|c| !c.is_empty());
    let centroids = clusters.iter().map(|c| mean_of(a, c)).collect();
    Ok(ClusterPartition {
        clusters,
        centroids,
        epsilon: partition.epsilon,
        criterion: partition.criterion,
    })
}

/// `argmin |⟨x, centroid⟩|`, lowest index on ties.
pub fn best_cluster(partition: &ClusterPartition, x: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in partition.centroids.iter().enumerate() {
        let v = dot(c, x).abs();
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((j, v));
        }
    }
    best.map(|(j, _)| j).ok_or(Error::EmptyPartition)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMode {
    /// One row from the best cluster every iteration.
    #[default]
    BestCluster,
    /// Visit every cluster once, in order, then behave like `BestCluster`.
    RoundRobinThenBest,
}

/// Draws rows uniformly from the cluster most orthogonal to the iterate.
#[derive(Debug, Clone)]
pub struct ClusterSampler<'a> {
    matrix: &'a DenseMatrix,
    partition: ClusterPartition,
    mode: ClusterMode,
    reassign_every: Option<usize>,
}

impl<'a> ClusterSampler<'a> {
    pub fn new(matrix: &'a DenseMatrix, partition: ClusterPartition, mode: ClusterMode) -> Result<Self> {
        if partition.is_empty() || partition.clusters.iter().any(Vec::is_empty) {
            return Err(Error::EmptyPartition);
        }
        Ok(Self {
            matrix,
            partition,
            mode,
            reassign_every: None,
        })
    }

    /// Re-partitions every `every` iterations; `None` or `Some(0)` disables.
    pub fn reassign_every(mut self, every: Option<usize>) -> Self {
        self.reassign_every = every.filter(|r| *r > 0);
        self
    }

    pub fn partition(&self) -> &ClusterPartition {
        &self.partition
    }
}

impl RowSampler for ClusterSampler<'_> {
    fn draw(
        &mut self,
        k: usize,
        x: &[f64],
        beta: usize,
        rng: &mut dyn RngCore,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        if let Some(r) = self.reassign_every {
            if k > 0 && k.is_multiple_of(r) {
                self.partition = reassign(self.matrix, &self.partition)?;
            }
        }
        let j = match self.mode {
            ClusterMode::RoundRobinThenBest if k < self.partition.len() => k,
            _ => best_cluster(&self.partition, x)?,
        };
        let members = &self.partition.clusters[j];
        out.clear();
        let take = beta.min(members.len());
        if take == 1 {
            out.push(members[rng.random_range(0..members.len())]);
        } else {
            out.extend(index::sample(rng, members.len(), take).into_iter().map(|p| members[p]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionSchedule {
    /// `(iteration, active-set size)` pairs in increasing iteration order.
    pub events: Vec<(usize, usize)>,
    pub working_size: usize,
    pub floor: usize,
}

/// Halves the active set at iterations `100·2^k` down to `4n` rows.
pub fn build_schedule(m: usize, n: usize) -> ReductionSchedule {
    let floor = 4 * n;
    let mut events = Vec::new();
    if m > floor {
        let mut k = 0u32;
        loop {
            let size = m.div_ceil(1usize << (k + 1)).max(floor);
            events.push((100usize << k, size));
            if size == floor {
                break;
            }
            k += 1;
        }
    }
    ReductionSchedule {
        events,
        working_size: 2 * n,
        floor,
    }
}

/// Ranking used to pick the "best" rows of an active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BestRowCriterion {
    /// Smallest `|⟨aᵢ, x⟩ − bᵢ|`.
    #[default]
    Absolute,
    /// Smallest signed `⟨aᵢ, x⟩ − bᵢ`.
    Signed,
}

/// The `count` rows of `active` ranked best under `criterion`, ties to the
/// lowest position.
pub fn select_best_rows(
    system: &LinearSystem,
    active: &[usize],
    x: &[f64],
    count: usize,
    criterion: BestRowCriterion,
) -> Result<Vec<usize>> {
    check_len("iterate", system.cols(), x.len())?;
    if count > active.len() {
        return Err(Error::SampleSize {
            requested: count,
            available: active.len(),
        });
    }
    let keys: Vec<f64> = active
        .iter()
        .map(|&i| {
            let r = system.residual(i, x);
            match criterion {
                BestRowCriterion::Absolute => r.abs(),
                BestRowCriterion::Signed => r,
            }
        })
        .collect();
    Ok(stable_order(&keys).into_iter().take(count).map(|p| active[p]).collect())
}

/// Samples uniformly from a working set of best rows while the active set
/// shrinks on a fixed schedule.
#[derive(Debug, Clone)]
pub struct OnlineReductionSampler<'a> {
    system: &'a LinearSystem,
    schedule: ReductionSchedule,
    criterion: BestRowCriterion,
    active: Vec<usize>,
    working: Vec<usize>,
    next_event: usize,
    started: bool,
    discarded: Vec<(usize, Vec<usize>)>,
}

impl<'a> OnlineReductionSampler<'a> {
    pub fn new(system: &'a LinearSystem, schedule: ReductionSchedule, criterion: BestRowCriterion) -> Result<Self> {
        let active: Vec<usize> = (0..system.rows()).filter(|&i| system.is_sampleable(i)).collect();
        if active.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Self {
            system,
            schedule,
            criterion,
            active,
            working: Vec::new(),
            next_event: 0,
            started: false,
            discarded: Vec::new(),
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn working(&self) -> &[usize] {
        &self.working
    }

    /// Rows dropped at each reduction event, keyed by iteration.
    pub fn discarded(&self) -> &[(usize, Vec<usize>)] {
        &self.discarded
    }

    fn refresh_working(&mut self, x: &[f64]) -> Result<()> {
        let count = self.schedule.working_size.clamp(1, self.active.len());
        self.working = select_best_rows(self.system, &self.active, x, count, self.criterion)?;
        Ok(())
    }
}

impl RowSampler for OnlineReductionSampler<'_> {
    fn draw(
        &mut self,
        k: usize,
        x: &[f64],
        beta: usize,
        rng: &mut dyn RngCore,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        if !self.started {
            self.started = true;
            self.refresh_working(x)?;
        }
        while let Some(&(at, size)) = self.schedule.events.get(self.next_event) {
            if k < at {
                break;
            }
            self.next_event += 1;
            if size < self.active.len() {
                let keep = select_best_rows(self.system, &self.active, x, size, self.criterion)?;
                let mut kept = keep.clone();
                kept.sort_unstable();
                let dropped = self
                    .active
                    .iter()
                    .copied()
                    .filter(|i| kept.binary_search(i).is_err())
                    .collect();
                self.discarded.push((k, dropped));
                self.active = keep;
            }
            self.refresh_working(x)?;
        }
        out.clear();
        let take = beta.min(self.working.len());
        out.extend(index::sample(rng, self.working.len(), take).into_iter().map(|p| self.working[p]));
        Ok(())
    }
}

/// Distance between two rows' directions.
pub fn direction_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let da: Vec<f64> = a.iter().map(|v| v / na).collect();
    let db: Vec<f64> = b.iter().map(|v| v / nb).collect();
    distance(&da, &db)
}
