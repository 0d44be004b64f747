//! Randomized Kaczmarz and Sampling Kaczmarz-Motzkin.
//!
//! Both engines share one step: project the iterate onto the hyperplane (or
//! half-space) of a single row,
//!
//! ```text
//! x' = x − λ · r / ‖aᵢ‖² · aᵢ,   r = ⟨aᵢ, x⟩ − bᵢ     (equality)
//!                                r = (⟨aᵢ, x⟩ − bᵢ)⁺  (inequality)
//! ```
//!
//! SKM samples `β` rows and projects onto the one with the largest residual;
//! with `β = 1` it is plain RK.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{axpy, check_len, distance};
use crate::metrics::{IterationTrace, TraceRecorder};
use crate::rng;
use crate::sampling::{sample_rows, RowDistribution};
use crate::system::{LinearSystem, Relation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sample size `β >= 1`.
    pub beta: usize,
    /// Relaxation `λ ∈ (0, 2]`.
    pub lambda: f64,
    /// Iteration budget `K >= 1`.
    pub max_iterations: usize,
    pub seed: u64,
    /// ChaCha stream for the sampling generator.
    #[serde(default)]
    pub stream: u64,
    /// Target for `‖x − x*‖`.
    #[serde(default)]
    pub stop_tolerance: Option<f64>,
    /// Stop as soon as the tolerance is met; otherwise only record the first
    /// crossing and run the full budget.
    #[serde(default = "default_true")]
    pub halt_on_tolerance: bool,
    /// For inequality systems, stop once every row is satisfied (checked at
    /// stride points).
    #[serde(default)]
    pub halt_when_feasible: bool,
    /// Record metrics every `trace_stride` iterations.
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
    /// Starting iterate; zero when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1,
            lambda: 1.0,
            max_iterations: 1000,
            seed: 0,
            stream: 0,
            stop_tolerance: None,
            halt_on_tolerance: true,
            halt_when_feasible: false,
            trace_stride: 1,
            x0: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta == 0 {
            return Err(Error::Config("beta must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda <= 2.0) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, 2], got {}",
                self.lambda
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("iteration budget must be at least 1".into()));
        }
        if self.trace_stride == 0 {
            return Err(Error::Config("trace stride must be at least 1".into()));
        }
        if let Some(t) = self.stop_tolerance {
            if t.is_nan() || t < 0.0 {
                return Err(Error::Config(format!("invalid stopping tolerance {t}")));
            }
        }
        Ok(())
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    /// Iteration budget exhausted.
    Budget,
    /// `‖x − x*‖` fell within the stopping tolerance.
    Tolerance,
    /// Every inequality is satisfied; further steps would be no-ops.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub trace: IterationTrace,
    pub reason: TerminationReason,
    /// First iteration at which `‖x − x*‖` met the tolerance, if it did.
    pub first_within_tolerance: Option<usize>,
}

/// One relaxed projection onto row `row`, in place.
pub fn rk_step(system: &LinearSystem, x: &mut [f64], row: usize, lambda: f64) -> Result<()> {
    let norm_sq = system.row_norm_sq(row);
    if norm_sq == 0.0 {
        return Err(Error::ZeroRow { row });
    }
    let mut r = system.residual(row, x);
    if system.relation() == Relation::LessEqual {
        r = r.max(0.0);
    }
    if r != 0.0 {
        axpy(-lambda * r / norm_sq, system.row(row), x);
    }
    Ok(())
}

/// Projects onto the sampled row with the largest residual (lowest index on
/// ties) and returns it.
pub fn skm_step(system: &LinearSystem, x: &mut [f64], sample: &[usize], lambda: f64) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in sample {
        let r = system.residual(i, x);
        best = match best {
            Some((bi, br)) if br > r || (br == r && bi < i) => Some((bi, br)),
            _ => Some((i, r)),
        };
    }
    let (row, _) = best.ok_or(Error::EmptySample)?;
    rk_step(system, x, row, lambda)?;
    Ok(row)
}

/// Supplies the rows considered at each iteration.
pub trait RowSampler {
    /// Fills `out` with `beta` row indices for iteration `k` (the number of
    /// steps completed so far) at iterate `x`.
    fn draw(
        &mut self,
        k: usize,
        x: &[f64],
        beta: usize,
        rng: &mut dyn RngCore,
        out: &mut Vec<usize>,
    ) -> Result<()>;
}

impl RowSampler for RowDistribution {
    fn draw(
        &mut self,
        _k: usize,
        _x: &[f64],
        beta: usize,
        rng: &mut dyn RngCore,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        sample_rows(self, beta, rng, out)
    }
}

/// Read-only view of the run at stride points.
pub trait Observer {
    fn observe(&mut self, iteration: usize, x: &[f64]);
}

impl<F: FnMut(usize, &[f64])> Observer for F {
    fn observe(&mut self, iteration: usize, x: &[f64]) {
        self(iteration, x)
    }
}

/// A single SKM run: one sequential state machine owning its iterate and
/// generator.
pub struct Solver<'a> {
    system: &'a LinearSystem,
    config: &'a SolverConfig,
    recorder: Option<TraceRecorder<'a>>,
    observers: Vec<&'a mut dyn Observer>,
}

impl<'a> Solver<'a> {
    pub fn new(system: &'a LinearSystem, config: &'a SolverConfig) -> Self {
        Self {
            system,
            config,
            recorder: None,
            observers: Vec::new(),
        }
    }

    /// Metrics recorded into [`SolveResult::trace`]. Defaults to the
    /// approximation error against the system's ground truth, if any.
    pub fn recorder(mut self, recorder: TraceRecorder<'a>) -> Self {
        self.recorder = Some(recorder);
        self
    }

    pub fn observer(mut self, observer: &'a mut dyn Observer) -> Self {
        self.observers.push(observer);
        self
    }

    pub fn run(self, sampler: &mut dyn RowSampler) -> Result<SolveResult> {
        let Solver {
            system,
            config,
            recorder,
            mut observers,
        } = self;
        config.validate()?;
        let n = system.cols();
        let mut x = match &config.x0 {
            Some(x0) => {
                check_len("initial iterate", n, x0.len())?;
                x0.clone()
            }
            None => vec![0.0; n],
        };
        let x_star = system.ground_truth();
        if config.stop_tolerance.is_some() && x_star.is_none() {
            return Err(Error::MissingGroundTruth);
        }
        let mut recorder = recorder.unwrap_or_else(|| TraceRecorder::new().approximation(x_star));
        let mut rng = rng::seeded(config.seed, config.stream);
        let mut sample = Vec::with_capacity(config.beta);

        let within = |x: &[f64]| match (config.stop_tolerance, x_star) {
            (Some(t), Some(xs)) => distance(x, xs) <= t,
            _ => false,
        };
        let feasible = |x: &[f64]| {
            system.relation() == Relation::LessEqual
                && (0..system.rows()).all(|i| system.residual(i, x) <= 0.0)
        };

        let mut emit = |k: usize, x: &[f64], recorder: &mut TraceRecorder<'a>| {
            recorder.observe(k, x);
            for o in observers.iter_mut() {
                o.observe(k, x);
            }
        };

        emit(0, &x, &mut recorder);
        let mut first_within = None;
        if within(&x) {
            first_within = Some(0);
            if config.halt_on_tolerance {
                return Ok(SolveResult {
                    x,
                    iterations: 0,
                    trace: recorder.finish(),
                    reason: TerminationReason::Tolerance,
                    first_within_tolerance: first_within,
                });
            }
        }

        let mut reason = TerminationReason::Budget;
        let mut k = 0;
        while k < config.max_iterations {
            sampler.draw(k, &x, config.beta, &mut rng, &mut sample)?;
            skm_step(system, &mut x, &sample, config.lambda)?;
            k += 1;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteIterate { iteration: k });
            }
            let at_stride = k % config.trace_stride == 0;
            if first_within.is_none() && within(&x) {
                first_within = Some(k);
                if config.halt_on_tolerance {
                    reason = TerminationReason::Tolerance;
                    break;
                }
            }
            if at_stride {
                if config.halt_when_feasible && feasible(&x) {
                    reason = TerminationReason::Degenerate;
                    break;
                }
                emit(k, &x, &mut recorder);
            }
        }
        if k % config.trace_stride != 0 || reason == TerminationReason::Degenerate {
            emit(k, &x, &mut recorder);
        }
        Ok(SolveResult {
            x,
            iterations: k,
            trace: recorder.finish(),
            reason,
            first_within_tolerance: first_within,
        })
    }
}

/// Runs SKM with the default recorder and no extra observers.
pub fn run_solver(
    system: &LinearSystem,
    config: &SolverConfig,
    sampler: &mut dyn RowSampler,
) -> Result<SolveResult> {
    Solver::new(system, config).run(sampler)
}

/// `(1 − σ_min²/‖A‖_F²)^k · ‖ε₀‖²`.
pub fn rk_bound_from(sigma_min: f64, frobenius_sq: f64, k: usize, initial_error_sq: f64) -> f64 {
    let rate = 1.0 - sigma_min * sigma_min / frobenius_sq;
    rate.powi(k as i32) * initial_error_sq
}

/// Expected-error bound for squared-norm RK using the stored spectrum.
pub fn rk_bound(system: &LinearSystem, k: usize, initial_error_sq: f64) -> Result<f64> {
    let svd = system.svd().ok_or(Error::MissingSvd)?;
    let fro = system.matrix().frobenius_norm();
    Ok(rk_bound_from(svd.sigma_min(), fro * fro, k, initial_error_sq))
}
