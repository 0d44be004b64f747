use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{fmt_f64, DenseMatrix};
use crate::solvers::Observer;

use super::{approximation_error, classification_accuracy, singular_errors};

/// Metric series recorded at stride points of one run, or aggregated over
/// several runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iterations: Vec<usize>,
    pub approximation_error: Option<Vec<f64>>,
    pub chebyshev_error: Option<Vec<f64>>,
    pub accuracy: Option<Vec<f64>>,
    /// One length-`n` vector per record.
    pub singular_errors: Option<Vec<Vec<f64>>>,
}

/// How per-trial values at a matched iteration are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl Aggregation {
    pub(crate) fn combine(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                values.sort_by(f64::total_cmp);
                let mid = values.len() / 2;
                if values.len() % 2 == 1 {
                    values[mid]
                } else {
                    0.5 * (values[mid - 1] + values[mid])
                }
            }
        }
    }
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Number of singular-error columns (zero when absent).
    pub fn singular_width(&self) -> usize {
        self.singular_errors
            .as_ref()
            .and_then(|s| s.first())
            .map_or(0, Vec::len)
    }

    /// Checks that every present series matches the iteration count and is
    /// finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for s in [&self.approximation_error, &self.chebyshev_error, &self.accuracy]
            .into_iter()
            .flatten()
        {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "trace series",
                    expected: n,
                    found: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix("trace holds a non-finite value".into()));
            }
        }
        if let Some(s) = &self.singular_errors {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "singular error series",
                    expected: n,
                    found: s.len(),
                });
            }
            let w = self.singular_width();
            if s.iter().any(|r| r.len() != w || r.iter().any(|v| !v.is_finite())) {
                return Err(Error::InvalidMatrix("ragged or non-finite singular errors".into()));
            }
        }
        Ok(())
    }

    /// Last recorded approximation error.
    pub fn final_approximation_error(&self) -> Option<f64> {
        self.approximation_error.as_ref().and_then(|s| s.last().copied())
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.accuracy.as_ref().and_then(|s| s.last().copied())
    }

    /// Combines traces recorded at identical iterations, value by value.
    pub fn aggregate(traces: &[IterationTrace], how: Aggregation) -> Result<IterationTrace> {
        let Some(first) = traces.first() else {
            return Ok(IterationTrace::default());
        };
        for t in traces {
            t.validate()?;
            if t.iterations != first.iterations {
                return Err(Error::Config("traces are recorded at different iterations".into()));
            }
        }
        let n = first.len();
        let series = |get: fn(&IterationTrace) -> Option<&Vec<f64>>| -> Result<Option<Vec<f64>>> {
            if get(first).is_none() {
                return Ok(None);
            }
            let mut column = Vec::with_capacity(traces.len());
            let mut out = Vec::with_capacity(n);
            for r in 0..n {
                column.clear();
                for t in traces {
                    let s = get(t).ok_or_else(|| Error::Config("traces carry different metrics".into()))?;
                    column.push(s[r]);
                }
                out.push(how.combine(&mut column));
            }
            Ok(Some(out))
        };
        let approximation_error = series(|t| t.approximation_error.as_ref())?;
        let chebyshev_error = series(|t| t.chebyshev_error.as_ref())?;
        let accuracy = series(|t| t.accuracy.as_ref())?;
        let singular_errors = match &first.singular_errors {
            None => None,
            Some(_) => {
                let w = first.singular_width();
                let mut column = Vec::with_capacity(traces.len());
                let mut out = vec![vec![0.0; w]; n];
                for (r, row) in out.iter_mut().enumerate() {
                    for (j, cell) in row.iter_mut().enumerate() {
                        column.clear();
                        for t in traces {
                            let s = t
                                .singular_errors
                                .as_ref()
                                .ok_or_else(|| Error::Config("traces carry different metrics".into()))?;
                            column.push(s[r][j]);
                        }
                        *cell = how.combine(&mut column);
                    }
                }
                Some(out)
            }
        };
        Ok(IterationTrace {
            iterations: first.iterations.clone(),
            approximation_error,
            chebyshev_error,
            accuracy,
            singular_errors,
        })
    }

    /// Header columns for the metrics present in this trace.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["iteration".to_string()];
        if self.approximation_error.is_some() {
            h.push("approx_error".into());
        }
        if self.chebyshev_error.is_some() {
            h.push("cheb_error".into());
        }
        if self.accuracy.is_some() {
            h.push("accuracy".into());
        }
        h.extend((1..=self.singular_width()).map(|j| format!("sing_err_{j}")));
        h
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.csv_header().join(","))?;
        for (r, k) in self.iterations.iter().enumerate() {
            let mut line = k.to_string();
            for s in [&self.approximation_error, &self.chebyshev_error, &self.accuracy]
                .into_iter()
                .flatten()
            {
                line.push(',');
                line.push_str(&fmt_f64(s[r]));
            }
            if let Some(s) = &self.singular_errors {
                for v in &s[r] {
                    line.push(',');
                    line.push_str(&fmt_f64(*v));
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Observer that evaluates the configured metrics at every stride point.
#[derive(Debug, Default)]
pub struct TraceRecorder<'a> {
    x_star: Option<&'a [f64]>,
    center: Option<&'a [f64]>,
    classifier: Option<(&'a DenseMatrix, &'a [f64])>,
    singular: Option<(&'a [f64], &'a DenseMatrix)>,
    trace: IterationTrace,
}

impl<'a> TraceRecorder<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `‖x − x*‖` when `x_star` is given.
    pub fn approximation(mut self, x_star: Option<&'a [f64]>) -> Self {
        self.x_star = x_star;
        self
    }

    /// Records the distance to a Chebyshev center.
    pub fn chebyshev(mut self, center: &'a [f64]) -> Self {
        self.center = Some(center);
        self
    }

    /// Records the sign accuracy of `x` on `(a, labels)`.
    pub fn accuracy(mut self, a: &'a DenseMatrix, labels: &'a [f64]) -> Self {
        self.classifier = Some((a, labels));
        self
    }

    /// Records `|⟨x − x*, vⱼ⟩|` for the columns of `v`.
    pub fn singular(mut self, x_star: &'a [f64], v: &'a DenseMatrix) -> Self {
        self.singular = Some((x_star, v));
        self
    }

    pub fn finish(self) -> IterationTrace {
        self.trace
    }

    fn push(slot: &mut Option<Vec<f64>>, value: f64) {
        slot.get_or_insert_with(Vec::new).push(value);
    }
}

impl Observer for TraceRecorder<'_> {
    fn observe(&mut self, iteration: usize, x: &[f64]) {
        let t = &mut self.trace;
        t.iterations.push(iteration);
        if let Some(xs) = self.x_star {
            Self::push(&mut t.approximation_error, approximation_error(x, xs));
        }
        if let Some(c) = self.center {
            Self::push(&mut t.chebyshev_error, approximation_error(x, c));
        }
        if let Some((a, labels)) = self.classifier {
            let acc = classification_accuracy(a, labels, x).expect("recorder shapes checked by caller");
            Self::push(&mut t.accuracy, acc);
        }
        if let Some((xs, v)) = self.singular {
            let e = singular_errors(x, xs, v).expect("recorder shapes checked by caller");
            t.singular_errors.get_or_insert_with(Vec::new).push(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(iters: &[usize], approx: &[f64]) -> IterationTrace {
        IterationTrace {
            iterations: iters.to_vec(),
            approximation_error: Some(approx.to_vec()),
            ..Default::default()
        }
    }

    #[test]
    fn mean_and_median() {
        let ts = [
            trace(&[0, 5], &[1.0, 4.0]),
            trace(&[0, 5], &[2.0, 0.0]),
            trace(&[0, 5], &[6.0, 1.0]),
        ];
        let mean = IterationTrace::aggregate(&ts, Aggregation::Mean).unwrap();
        assert_eq!(mean.approximation_error.unwrap(), vec![3.0, 5.0 / 3.0]);
        let med = IterationTrace::aggregate(&ts, Aggregation::Median).unwrap();
        assert_eq!(med.approximation_error.unwrap(), vec![2.0, 1.0]);
        assert!(IterationTrace::aggregate(&[], Aggregation::Mean).unwrap().is_empty());
    }

    #[test]
    fn misaligned_traces_are_rejected() {
        let ts = [trace(&[0, 5], &[1.0, 4.0]), trace(&[0, 4], &[2.0, 0.0])];
        assert!(IterationTrace::aggregate(&ts, Aggregation::Mean).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = IterationTrace {
            iterations: vec![0, 10],
            approximation_error: Some(vec![1.0, 0.5]),
            chebyshev_error: None,
            accuracy: Some(vec![0.5, 1.0]),
            singular_errors: Some(vec![vec![0.25, 0.75], vec![0.0, 0.1]]),
        };
        t.validate().unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iteration,approx_error,accuracy,sing_err_1,sing_err_2");
        assert_eq!(
            lines.next().unwrap(),
            "0,1.0000000000000000e0,5.0000000000000000e-1,2.5000000000000000e-1,7.5000000000000000e-1"
        );
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn validate_catches_ragged_series() {
        let mut t = trace(&[0, 1], &[1.0]);
        assert!(t.validate().is_err());
        t.approximation_error = Some(vec![1.0, f64::NAN]);
        assert!(t.validate().is_err());
    }
}
