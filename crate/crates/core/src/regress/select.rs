use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{assemble_design, DesignMatrix};
use super::ols::{ols, FitResult};
use super::{Feature, RegressError};
use crate::hin::TypedGraph;
use crate::metapath::{MetaPath, MetaPathSet};
use crate::pcrw::{pcrw, pcrw_batch};

/// Smallest r² gain that counts as an improvement.
pub const MIN_R2_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    /// Every slope in an admitted model must have p-value <= alpha.
    pub alpha: f64,
    pub intercept: bool,
    /// Drop the hole target column from the design.
    pub drop_holes: bool,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            intercept: true,
            drop_holes: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Every candidate is in the model, or all remaining ones are collinear.
    NoCandidate,
    /// The best admissible candidate does not raise r².
    NoImprovement,
    /// Every remaining candidate would leave some coefficient insignificant.
    SignificanceViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Name of the regressor added at this step.
    pub added: String,
    /// Candidate index of the added regressor.
    pub candidate: usize,
    /// Candidate indices in the model after this step, in order of entry.
    pub selected: Vec<usize>,
    pub fit: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub candidates: Vec<String>,
    pub null_fit: FitResult,
    pub steps: Vec<SelectionStep>,
    pub stop: StopReason,
}

impl SelectionTrace {
    pub fn final_fit(&self) -> &FitResult {
        self.steps.last().map_or(&self.null_fit, |s| &s.fit)
    }

    /// Candidate indices of the final model, in order of entry.
    pub fn selected(&self) -> &[usize] {
        self.steps.last().map_or(&[], |s| &s.selected)
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected().iter().map(|&i| self.candidates[i].clone()).collect()
    }

    /// r² of the null model followed by r² after each step.
    pub fn r2_path(&self) -> Vec<f64> {
        std::iter::once(self.null_fit.r2)
            .chain(self.steps.iter().map(|s| s.fit.r2))
            .collect()
    }

    /// One row per coefficient per step: `step,metapath,coefficient,p_value,r2`.
    /// The intercept appears as `(intercept)` with an empty p-value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,metapath,coefficient,p_value,r2")?;
        let fits = std::iter::once(&self.null_fit).chain(self.steps.iter().map(|s| &s.fit));
        for (step, fit) in fits.enumerate() {
            if let Some(b0) = fit.intercept_value() {
                writeln!(out, "{step},(intercept),{b0},,{}", fit.r2)?;
            }
            for ((name, b), p) in fit.names.iter().zip(fit.slopes()).zip(&fit.p_values) {
                writeln!(out, "{step},{},{b},{p},{}", csv_field(name), fit.r2)?;
            }
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Greedy forward selection: start from the intercept-only model and
/// repeatedly add the candidate giving the highest r² among those that keep
/// every slope significant at `alpha`. Ties go to the earliest candidate.
/// Candidates that make the design singular are skipped.
pub fn forward_select_features(
    target: &Feature,
    candidates: &[Feature],
    sources: &[usize],
    opts: &SelectionOptions,
) -> Result<SelectionTrace, RegressError> {
    let refs: Vec<&Feature> = candidates.iter().collect();
    let full = assemble_design(target, &refs, sources, opts.intercept, opts.drop_holes)?;
    select_on_design(&full, opts)
}

pub(crate) fn select_on_design(
    full: &DesignMatrix,
    opts: &SelectionOptions,
) -> Result<SelectionTrace, RegressError> {
    if !(opts.alpha > 0.0 && opts.alpha <= 1.0) {
        return Err(RegressError::InvalidAlpha(opts.alpha));
    }
    let null_fit = ols(&full.select(&[]))?;
    let mut steps: Vec<SelectionStep> = Vec::new();
    let mut selected: Vec<usize> = Vec::new();
    let mut current_r2 = null_fit.r2;
    let stop = loop {
        let remaining: Vec<usize> = (0..full.columns.len()).filter(|c| !selected.contains(c)).collect();
        let fits: Vec<(usize, Option<FitResult>)> = remaining
            .par_iter()
            .map(|&c| {
                let mut cols = selected.clone();
                cols.push(c);
                (c, ols(&full.select(&cols)).ok())
            })
            .collect();
        let valid: Vec<(usize, FitResult)> = fits
            .into_iter()
            .filter_map(|(c, f)| f.map(|f| (c, f)))
            .collect();
        if valid.is_empty() {
            break StopReason::NoCandidate;
        }
        let mut best: Option<(usize, FitResult)> = None;
        for (c, fit) in valid {
            if !fit.all_significant(opts.alpha) {
                continue;
            }
            if best.as_ref().is_none_or(|(_, b)| fit.r2 > b.r2) {
                best = Some((c, fit));
            }
        }
        let Some((c, fit)) = best else {
            break StopReason::SignificanceViolation;
        };
        if fit.r2 - current_r2 < MIN_R2_GAIN {
            break StopReason::NoImprovement;
        }
        selected.push(c);
        current_r2 = fit.r2;
        steps.push(SelectionStep {
            added: full.names[c].clone(),
            candidate: c,
            selected: selected.clone(),
            fit,
        });
    };
    Ok(SelectionTrace {
        candidates: full.names.clone(),
        null_fit,
        steps,
        stop,
    })
}

/// Forward selection over meta-path regressors explaining the random-walk
/// table of `target` on an augmented graph.
pub fn forward_select(
    g: &TypedGraph,
    target: &MetaPath,
    candidates: &MetaPathSet,
    sources: &[usize],
    opts: &SelectionOptions,
) -> Result<SelectionTrace, RegressError> {
    let y = Feature::from(pcrw(g, target)?);
    let xs: Vec<Feature> = pcrw_batch(g, candidates)?.into_iter().map(Feature::from).collect();
    forward_select_features(&y, &xs, sources, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Single-source tables over `n` targets built from dense columns.
    fn column(name: &str, values: &[f64]) -> Feature {
        let n = values.len();
        let row: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
        Feature::new(name, CsrMatrix::from_rows(n + 1, vec![row, vec![(n, 1.0)]]))
    }

    #[test]
    fn orthogonal_regressors_all_enter_with_alpha_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 64;
        // Walsh-like orthogonal +-1 patterns
        let patterns: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..n).map(|i| if (i >> k) & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.3 * patterns[0][i] + 0.2 * patterns[1][i] + 0.1 * patterns[2][i] + rng.random_range(-0.5..0.5))
            .collect();
        let cands: Vec<Feature> = patterns.iter().enumerate().map(|(k, p)| column(&format!("p{k}"), p)).collect();
        let opts = SelectionOptions {
            alpha: 1.0,
            ..Default::default()
        };
        let trace = forward_select_features(&column("y", &y), &cands, &[0], &opts).unwrap();
        assert_eq!(trace.selected().len(), 3);
        assert_eq!(trace.stop, StopReason::NoCandidate);
        let path = trace.r2_path();
        assert!(path.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn duplicate_candidates_enter_once() {
        let x: Vec<f64> = (0..30).map(|i| ((i * 7) % 13) as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + (i % 3) as f64).collect();
        let cands = vec![column("a", &x), column("b", &x), column("c", &x)];
        let trace = forward_select_features(&column("y", &y), &cands, &[0], &Default::default()).unwrap();
        assert_eq!(trace.selected(), &[0]);
        assert_eq!(trace.stop, StopReason::NoCandidate);
    }

    #[test]
    fn empty_candidate_set_gives_null_model() {
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let trace = forward_select_features(&column("y", &y), &[], &[0], &Default::default()).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.final_fit().r2, 0.0);
        assert!((trace.final_fit().beta[0] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v + if *v as usize % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let trace = forward_select_features(&column("y", &y), &[column("RT-UH", &x)], &[0], &Default::default())
            .unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,metapath,coefficient,p_value,r2");
        assert!(lines[1].starts_with("0,(intercept),"));
        assert!(lines[3].starts_with("1,RT-UH,"));
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn rejects_bad_alpha() {
        let y = column("y", &[1.0, 2.0, 3.0]);
        let opts = SelectionOptions {
            alpha: 0.0,
            ..Default::default()
        };
        assert_eq!(
            forward_select_features(&y, &[], &[0], &opts).unwrap_err(),
            RegressError::InvalidAlpha(0.0)
        );
    }
}
