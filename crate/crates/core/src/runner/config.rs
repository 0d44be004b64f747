use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clustering::{BestRowCriterion, ClusterCriterion, ClusterMode};
use crate::error::{Error, Result};
use crate::matgen::{InitialMode, SolutionMode, SpectrumSpec};
use crate::metrics::Aggregation;
use crate::par::Execution;
use crate::sampling::StrategyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pairwise,
    Coreset,
    ClusterVariants,
    SpectralConvergence,
    WeightedVsUniform,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Pairwise,
        ExperimentKind::Coreset,
        ExperimentKind::ClusterVariants,
        ExperimentKind::SpectralConvergence,
        ExperimentKind::WeightedVsUniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Pairwise => "pairwise",
            ExperimentKind::Coreset => "coreset",
            ExperimentKind::ClusterVariants => "cluster-variants",
            ExperimentKind::SpectralConvergence => "spectral-convergence",
            ExperimentKind::WeightedVsUniform => "weighted-vs-uniform",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Pairwise => {
                "SKM on a classification feasibility system with base rows, base plus pairwise-difference rows, or pair rows only"
            }
            ExperimentKind::Coreset => {
                "least-squares error of inner-product coresets against the full solve, swept over c and condition number"
            }
            ExperimentKind::ClusterVariants => {
                "SKM baseline against reduced-matrix, epsilon-cover and online-reduction variants"
            }
            ExperimentKind::SpectralConvergence => "per-singular-direction error of uniform RK",
            ExperimentKind::WeightedVsUniform => {
                "uniform RK against sampling weighted by the smallest right singular vector"
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub beta: usize,
    pub lambda: f64,
    pub max_iterations: usize,
    pub trace_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSettings {
    pub criterion: ClusterCriterion,
    /// Cover radius; chosen by a sweep targeting `[n, 4n]` clusters when
    /// absent.
    pub epsilon: Option<f64>,
    pub reassign_every: Option<usize>,
    pub mode: ClusterMode,
    /// Coreset factor of the reduced-matrix variant.
    pub coreset_factor: f64,
    pub best_rows: BestRowCriterion,
}

/// Rows whose Chebyshev center the distance metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChebyshevRegion {
    #[default]
    Base,
    /// Base and pair rows; the dense LP grows with `C(m,2)`, so this is only
    /// practical for small `m`.
    Combined,
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub m: usize,
    pub n: usize,
    pub spectrum: SpectrumSpec,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverSettings,
    pub solution: SolutionMode,
    pub initial: InitialMode,
    /// Sampling schemes of the pairwise experiment.
    pub schemes: Vec<StrategyKind>,
    /// Coreset factors.
    pub c_values: Vec<f64>,
    /// Condition numbers of the coreset sweep.
    pub kappas: Vec<f64>,
    pub cluster: ClusterSettings,
    /// Chebyshev box `‖x‖∞ <= R`; `2‖x*‖∞` when absent.
    pub box_bound: Option<f64>,
    pub chebyshev_region: ChebyshevRegion,
    /// Error level for iterations-to-threshold.
    pub threshold: f64,
    pub aggregation: Aggregation,
    pub execution: Execution,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for `kind`, sized as in the reference experiments.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: kind,
            m: 240,
            n: 12,
            spectrum: SpectrumSpec::ExponentialDecay,
            trials: 50,
            seed: 42,
            solver: SolverSettings {
                beta: 1,
                lambda: 1.0,
                max_iterations: 2000,
                trace_stride: 10,
            },
            solution: SolutionMode::UnitSphere,
            initial: InitialMode::Zero,
            schemes: Vec::new(),
            c_values: Vec::new(),
            kappas: Vec::new(),
            cluster: ClusterSettings {
                criterion: ClusterCriterion::NormalizedDistance,
                epsilon: None,
                reassign_every: None,
                mode: ClusterMode::BestCluster,
                coreset_factor: 5.0,
                best_rows: BestRowCriterion::Absolute,
            },
            box_bound: None,
            chebyshev_region: ChebyshevRegion::Base,
            threshold: 1e-12,
            aggregation: Aggregation::Mean,
            execution: Execution::default(),
            output: None,
        };
        match kind {
            ExperimentKind::Pairwise => {
                c.trials = 100;
                c.solver.beta = 3;
                c.initial = InitialMode::Gaussian;
                c.schemes = vec![
                    StrategyKind::SchemeBaseOnly,
                    StrategyKind::SchemeCombinedUniform,
                    StrategyKind::SchemePairsOnly,
                ];
            }
            ExperimentKind::Coreset => {
                c.m = 2000;
                c.n = 20;
                c.trials = 20;
                c.c_values = vec![1.0, 2.0, 3.0, 4.0, 5.0];
                c.kappas = vec![1e2, 1e4, 1e7];
            }
            ExperimentKind::ClusterVariants => {
                c.m = 2000;
                c.n = 20;
                c.spectrum = SpectrumSpec::ExplicitRatio { kappa: 1e7 };
                c.trials = 10;
                c.initial = InitialMode::Gaussian;
            }
            ExperimentKind::SpectralConvergence => {
                c.solution = SolutionMode::LastBasis;
            }
            ExperimentKind::WeightedVsUniform => {
                c.solution = SolutionMode::LastBasis;
                c.solver.max_iterations = 2_000_000;
                c.solver.trace_stride = 5000;
            }
        }
        c
    }

    /// Overlays a partial JSON document on the defaults of the experiment it
    /// names.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let Value::Object(fields) = &doc else {
            return Err(Error::Config("configuration must be a JSON object".into()));
        };
        let kind: ExperimentKind = match fields.get("experiment") {
            Some(Value::String(s)) => s.parse()?,
            Some(_) => return Err(Error::Config("`experiment` must be a string".into())),
            None => return Err(Error::Config("missing `experiment`".into())),
        };
        let mut merged = serde_json::to_value(Self::defaults(kind)).expect("defaults serialize");
        merge(&mut merged, doc);
        let config: ExperimentConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Compact JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.m < self.n {
            return fail(format!("need m >= n >= 1, got m={} n={}", self.m, self.n));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        let s = &self.solver;
        if s.beta == 0 || s.max_iterations == 0 || s.trace_stride == 0 {
            return fail("beta, max_iterations and trace_stride must be at least 1".into());
        }
        if !(s.lambda > 0.0 && s.lambda <= 2.0) {
            return fail(format!("lambda must lie in (0, 2], got {}", s.lambda));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return fail(format!("threshold must be positive, got {}", self.threshold));
        }
        if let Some(r) = self.box_bound {
            if !(r > 0.0 && r.is_finite()) {
                return fail(format!("box_bound must be positive, got {r}"));
            }
        }
        if self.cluster.coreset_factor.is_nan() || self.cluster.coreset_factor <= 0.0 {
            return fail("coreset_factor must be positive".into());
        }
        if let Some(e) = self.cluster.epsilon {
            if !e.is_finite() {
                return fail("cluster epsilon must be finite".into());
            }
        }
        self.spectrum
            .values(self.n)
            .map_err(|e| Error::Config(e.to_string()))?;
        match self.experiment {
            ExperimentKind::Pairwise => {
                if self.m < 2 {
                    return fail("pairwise differences need m >= 2".into());
                }
                if self.schemes.is_empty() {
                    return fail("schemes must not be empty".into());
                }
                if let Some(bad) = self
                    .schemes
                    .iter()
                    .find(|k| matches!(k, StrategyKind::Spectral | StrategyKind::ClusterGuided))
                {
                    return fail(format!("scheme `{bad}` is not available in the pairwise experiment"));
                }
                if self.schemes.iter().any(|k| *k != StrategyKind::SchemePairsOnly && self.m < s.beta)
                {
                    return fail(format!("beta {} exceeds the {} base rows", s.beta, self.m));
                }
            }
            ExperimentKind::Coreset => {
                if self.c_values.is_empty() || self.kappas.is_empty() {
                    return fail("c_values and kappas must not be empty".into());
                }
                if let Some(c) = self.c_values.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
                    return fail(format!("coreset factor {c} must be positive"));
                }
                if let Some(c) = self
                    .c_values
                    .iter()
                    .find(|c| (**c * self.n as f64).round() < self.n as f64)
                {
                    return fail(format!("coreset factor {c} keeps fewer than n rows"));
                }
                if let Some(k) = self.kappas.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
                    return fail(format!("condition number {k} must be >= 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The output directory: `output` or `kzlab-out/<experiment>`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("kzlab-out").join(self.experiment.name()))
    }
}

/// Recursively overlays `patch` on `base`. Objects merge key by key, except
/// `spectrum`, which is replaced whole since its fields depend on its kind.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if k != "spectrum" && slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}
