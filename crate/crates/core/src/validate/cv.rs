use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::hin::TypedGraph;
use crate::metapath::{MetaPath, MetaPathSet};
use crate::pcrw::{pcrw, pcrw_batch};
use crate::regress::select::select_on_design;
use crate::regress::{assemble_design, DesignMatrix, Feature, SelectionOptions, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    /// Fraction of real source nodes used for training, in (0, 1).
    pub train_fraction: f64,
    pub n_splits: usize,
    /// Split `i` draws from a generator seeded with `seed + i`.
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            n_splits: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    pub seed: u64,
    pub train_sources: Vec<usize>,
    pub test_sources: Vec<usize>,
    pub train_r2: Option<f64>,
    pub test_r2: Option<f64>,
    /// Selected regressors in order of entry.
    pub selected: Vec<String>,
    /// Coefficients fitted on the training rows, intercept first when present.
    pub beta: Vec<f64>,
    pub stop: Option<StopReason>,
    /// Why this split produced no test score.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub config: CvConfig,
    pub n_sources: usize,
    pub splits: Vec<SplitResult>,
    pub mean_train_r2: f64,
    pub sd_train_r2: f64,
    pub mean_test_r2: f64,
    pub sd_test_r2: f64,
    /// Splits without a test score.
    pub failed_splits: usize,
}

impl CvReport {
    /// Long format for box plots: `split,phase,r2,n_predictors`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "split,phase,r2,n_predictors")?;
        for s in &self.splits {
            let k = s.selected.len();
            if let Some(r2) = s.train_r2 {
                writeln!(out, "{},train,{r2},{k}", s.split)?;
            }
            if let Some(r2) = s.test_r2 {
                writeln!(out, "{},test,{r2},{k}", s.split)?;
            }
        }
        Ok(())
    }
}

/// `ceil(fraction * n)`, guarded against round-off pushing an exact product
/// over the next integer.
pub fn train_size(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Repeated random sub-sampling over source nodes on precomputed tables.
/// Every split re-runs forward selection on its training sources and scores
/// the frozen model on the held-out sources, with the test TSS centered on
/// the test mean. A split whose test response is constant is reported as
/// failed; the call fails only when no split yields a test score.
pub fn monte_carlo_cv_features(
    target: &Feature,
    candidates: &[Feature],
    opts: &SelectionOptions,
    cfg: &CvConfig,
) -> Result<CvReport, ValidateError> {
    let n = target.real_sources();
    if n < 2 {
        return Err(ValidateError::TooFewSources(n));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(ValidateError::InvalidConfig(format!(
            "train_fraction {} outside (0, 1)",
            cfg.train_fraction
        )));
    }
    if cfg.n_splits == 0 {
        return Err(ValidateError::InvalidConfig("n_splits must be at least 1".into()));
    }
    let k = train_size(cfg.train_fraction, n);
    if k == 0 || k >= n {
        return Err(ValidateError::InvalidConfig(format!(
            "train_fraction {} leaves no test sources among {n}",
            cfg.train_fraction
        )));
    }
    let refs: Vec<&Feature> = candidates.iter().collect();
    let all: Vec<usize> = (0..n).collect();
    let full = assemble_design(target, &refs, &all, opts.intercept, opts.drop_holes)?;

    let (splits, errors): (Vec<SplitResult>, Vec<Option<ValidateError>>) = (0..cfg.n_splits)
        .into_par_iter()
        .map(|i| run_split(&full, n, k, i, cfg.seed.wrapping_add(i as u64), opts))
        .unzip();
    let train: Vec<f64> = splits.iter().filter_map(|s| s.train_r2).collect();
    let test: Vec<f64> = splits.iter().filter_map(|s| s.test_r2).collect();
    if test.is_empty() {
        // every split failed: surface the first failure
        return Err(errors.into_iter().flatten().next().expect("failed splits carry an error"));
    }
    let (mean_train_r2, sd_train_r2) = mean_sd(&train);
    let (mean_test_r2, sd_test_r2) = mean_sd(&test);
    Ok(CvReport {
        config: cfg.clone(),
        n_sources: n,
        failed_splits: splits.len() - test.len(),
        splits,
        mean_train_r2,
        sd_train_r2,
        mean_test_r2,
        sd_test_r2,
    })
}

fn partition(n: usize, k: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = rand::seq::index::sample(&mut rng, n, k).into_vec();
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &s in &train {
        in_train[s] = true;
    }
    let test = (0..n).filter(|&s| !in_train[s]).collect();
    (train, test)
}

fn evaluate(
    full: &DesignMatrix,
    train: &[usize],
    test: &[usize],
    split: usize,
    opts: &SelectionOptions,
) -> Result<(crate::regress::SelectionTrace, f64), ValidateError> {
    let trace = select_on_design(&full.restrict_sources(train), opts)?;
    let fit = trace.final_fit();
    let held = full.restrict_sources(test).select(trace.selected());
    let predicted = fit.predict(&held);
    let mean = held.y.iter().sum::<f64>() / held.y.len() as f64;
    let tss: f64 = held.y.iter().map(|y| (y - mean).powi(2)).sum();
    if tss == 0.0 {
        return Err(ValidateError::DegenerateSplit { split });
    }
    let rss: f64 = held.y.iter().zip(&predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok((trace, 1.0 - rss / tss))
}

fn run_split(
    full: &DesignMatrix,
    n: usize,
    k: usize,
    split: usize,
    seed: u64,
    opts: &SelectionOptions,
) -> (SplitResult, Option<ValidateError>) {
    let (train, test) = partition(n, k, seed);
    let mut out = SplitResult {
        split,
        seed,
        train_sources: train,
        test_sources: test,
        train_r2: None,
        test_r2: None,
        selected: Vec::new(),
        beta: Vec::new(),
        stop: None,
        error: None,
    };
    match evaluate(full, &out.train_sources, &out.test_sources, split, opts) {
        Ok((trace, r2)) => {
            let fit = trace.final_fit();
            out.train_r2 = Some(fit.r2);
            out.test_r2 = Some(r2);
            out.selected = trace.selected_names();
            out.beta = fit.beta.clone();
            out.stop = Some(trace.stop);
        }
        Err(e) => {
            // keep the training fit when only the test side is degenerate
            if let Ok(trace) = select_on_design(&full.restrict_sources(&out.train_sources), opts) {
                let fit = trace.final_fit();
                out.train_r2 = Some(fit.r2);
                out.selected = trace.selected_names();
                out.beta = fit.beta.clone();
                out.stop = Some(trace.stop);
            }
            out.error = Some(e.to_string());
            return (out, Some(e));
        }
    }
    (out, None)
}

/// Cross-validated recovery of `target`'s random-walk table from the
/// candidate meta-paths, on an augmented graph.
pub fn monte_carlo_cv(
    g: &TypedGraph,
    target: &MetaPath,
    candidates: &MetaPathSet,
    opts: &SelectionOptions,
    cfg: &CvConfig,
) -> Result<CvReport, ValidateError> {
    let y = Feature::from(pcrw(g, target)?);
    let xs: Vec<Feature> = pcrw_batch(g, candidates)?.into_iter().map(Feature::from).collect();
    monte_carlo_cv_features(&y, &xs, opts, cfg)
}
