//! The pipeline behind each subcommand.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hin_recovery::regress::{assemble_design, SelectionOptions};
use hin_recovery::validate::{monte_carlo_cv_features, null_model_links, CvConfig, CvReport, NullMode};
use hin_recovery::{
    aggregate_features, divide_by_category, enumerate_metapaths, forward_select_features, pcrw, pcrw_batch,
    Categorization, Feature, FeatureAggregation, LinkTypeId, MetaPath, MetaPathSet, Schema, SelectionTrace,
    StopReason, TypedGraph,
};
use serde::Serialize;

use crate::config::{CandidateSource, ExperimentConfig};
use crate::ingest::{self, EdgeList};

/// A regressor: one meta-path, or a named group aggregated into one table.
#[derive(Clone, Debug)]
struct Candidate {
    name: String,
    paths: Vec<String>,
}

/// Loads the configured input and applies inverses and merges. The result
/// is unaugmented.
pub fn load_network(cfg: &ExperimentConfig) -> Result<EdgeList> {
    let mut list = ingest::load(&cfg.input, cfg.header)?;
    list.graph = derive(&list.graph, cfg)?;
    Ok(list)
}

fn derive(g: &TypedGraph, cfg: &ExperimentConfig) -> Result<TypedGraph> {
    let mut g = g.clone();
    for (name, of) in &cfg.inverse {
        let of_id = g
            .link_type_id(of)
            .ok_or_else(|| anyhow!("inverse `{name}`: unknown link type `{of}`"))?;
        g = g.with_inverse(of_id, name)?;
    }
    for c in &cfg.collapse {
        let node = |n: &str| g.node_type_id(n).ok_or_else(|| anyhow!("collapse `{}`: unknown node type `{n}`", c.name));
        let (s, t) = (node(&c.source)?, node(&c.target)?);
        g = g.collapse_link_types(s, t, &c.name)?;
    }
    Ok(g)
}

fn options(cfg: &ExperimentConfig) -> SelectionOptions {
    SelectionOptions {
        alpha: cfg.alpha,
        intercept: cfg.intercept,
        drop_holes: !cfg.keep_holes,
    }
}

fn parse_path(text: &str, schema: &Schema) -> Result<MetaPath> {
    MetaPath::parse(text, schema).with_context(|| format!("meta-path `{text}`"))
}

fn candidates(cfg: &ExperimentConfig, schema: &Schema) -> Result<Vec<Candidate>> {
    let target = parse_path(&cfg.target, schema)?;
    let canonical = |text: &str| parse_path(text, schema).map(|p| p.to_string());
    Ok(match cfg.candidate_source()? {
        CandidateSource::Enumerate(max_len) => {
            let exclude = (target.len() == 1).then(|| target.steps()[0]);
            enumerate_metapaths(schema, target.source_type(), target.target_type(), max_len, exclude)
                .iter()
                .map(|p| p.to_string())
                .filter(|p| *p != target.to_string())
                .map(|p| Candidate {
                    name: p.clone(),
                    paths: vec![p],
                })
                .collect()
        }
        CandidateSource::MetaPaths(list) => list
            .iter()
            .map(|p| {
                let p = canonical(p)?;
                Ok(Candidate {
                    name: p.clone(),
                    paths: vec![p],
                })
            })
            .collect::<Result<_>>()?,
        CandidateSource::Features(groups) => groups
            .iter()
            .map(|g| {
                Ok(Candidate {
                    name: g.name.clone(),
                    paths: g.metapaths.iter().map(|p| canonical(p)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?,
    })
}

/// Response and regressor tables on an augmented graph.
fn tables(g: &TypedGraph, target: &str, cands: &[Candidate], agg: FeatureAggregation) -> Result<(Feature, Vec<Feature>)> {
    let schema = g.schema();
    let target = parse_path(target, &schema)?;
    let y = Feature::from(pcrw(g, &target)?);
    let paths: Vec<MetaPath> = cands
        .iter()
        .flat_map(|c| &c.paths)
        .map(|p| parse_path(p, &schema))
        .collect::<Result<_>>()?;
    let set = MetaPathSet::new(&schema, target.source_type(), target.target_type(), paths)?;
    let mut results = pcrw_batch(g, &set)?.into_iter().map(Feature::from);
    let mut xs = Vec::with_capacity(cands.len());
    for c in cands {
        let group: Vec<Feature> = results.by_ref().take(c.paths.len()).collect();
        if group.len() == 1 && group[0].name == c.name {
            xs.extend(group);
        } else {
            let refs: Vec<&Feature> = group.iter().collect();
            xs.extend(aggregate_features(&[(c.name.as_str(), refs)], agg)?);
        }
    }
    Ok((y, xs))
}

fn select(g: &TypedGraph, cfg: &ExperimentConfig, cands: &[Candidate]) -> Result<(Feature, Vec<Feature>, SelectionTrace)> {
    let (y, xs) = tables(g, &cfg.target, cands, cfg.feature_agg)?;
    let sources: Vec<usize> = (0..y.real_sources()).collect();
    let trace = forward_select_features(&y, &xs, &sources, &options(cfg))?;
    Ok((y, xs, trace))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Forward selection on every source: `trace.csv`, `trace.json` and the
/// observed-vs-fitted pairs in `fitted.csv`.
pub fn describe(cfg: &ExperimentConfig) -> Result<()> {
    let list = load_network(cfg)?;
    let g = list.graph.augment_with_holes()?;
    let cands = candidates(cfg, &g.schema())?;
    let (y, xs, trace) = select(&g, cfg, &cands)?;

    let sources: Vec<usize> = (0..y.real_sources()).collect();
    let chosen: Vec<&Feature> = trace.selected().iter().map(|&i| &xs[i]).collect();
    let opts = options(cfg);
    let design = assemble_design(&y, &chosen, &sources, opts.intercept, opts.drop_holes)?;
    let fitted = trace.final_fit().predict(&design);

    write_with(&cfg.out.join("trace.csv"), |w| trace.write_csv(w))?;
    write_json(&cfg.out.join("trace.json"), &trace)?;
    write_with(&cfg.out.join("fitted.csv"), |w| {
        writeln!(w, "observed,fitted")?;
        for (o, f) in design.y.iter().zip(&fitted) {
            writeln!(w, "{o},{f}")?;
        }
        Ok(())
    })?;
    println!(
        "{} candidates; selected [{}]; r2 {:.6}; stop: {:?}",
        cands.len(),
        trace.selected_names().join(", "),
        trace.final_fit().r2,
        trace.stop
    );
    Ok(())
}

fn cv_config(cfg: &ExperimentConfig) -> CvConfig {
    CvConfig {
        train_fraction: cfg.cv.train_fraction,
        n_splits: cfg.cv.splits,
        seed: cfg.seed,
    }
}

fn write_cv(dir: &Path, report: &CvReport) -> Result<()> {
    write_json(&dir.join("cv_report.json"), report)?;
    write_with(&dir.join("cv_long.csv"), |w| report.write_csv(w))
}

/// Monte Carlo cross-validation, on the whole network or per category.
pub fn recover(cfg: &ExperimentConfig, per_category: bool) -> Result<()> {
    let list = load_network(cfg)?;
    if per_category {
        return recover_per_category(cfg, &list);
    }
    let g = list.graph.augment_with_holes()?;
    let cands = candidates(cfg, &g.schema())?;
    let (y, xs) = tables(&g, &cfg.target, &cands, cfg.feature_agg)?;
    let report = monte_carlo_cv_features(&y, &xs, &options(cfg), &cv_config(cfg))?;
    write_cv(&cfg.out, &report)?;
    println!(
        "test r2 {:.6} ± {:.6} over {} splits ({} failed)",
        report.mean_test_r2,
        report.sd_test_r2,
        report.splits.len(),
        report.failed_splits
    );
    Ok(())
}

/// Reads `node_id<TAB>category` lines for the pivot type.
pub fn load_categories(path: &Path, list: &EdgeList, pivot: hin_recovery::NodeTypeId) -> Result<Categorization> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let index = list.id_map(pivot);
    let mut labels: Vec<Option<String>> = vec![None; index.len()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let at = || format!("{}:{}", path.display(), i + 1);
        let (id, cat) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}: expected `node_id<TAB>category`", at()))?;
        let &node = index
            .get(id)
            .ok_or_else(|| anyhow!("{}: unknown {} `{id}`", at(), list.graph.node_type(pivot).name))?;
        if labels[node].replace(cat.to_string()).is_some() {
            bail!("{}: `{id}` is categorized twice", at());
        }
    }
    if let Some(missing) = labels.iter().position(Option::is_none) {
        bail!("{}: no category for `{}`", path.display(), list.ids[pivot.0][missing]);
    }
    Ok(Categorization::from_labels(labels))
}

fn dir_name(category: &str) -> String {
    category
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct CategoryRow {
    category: String,
    n_sources: Option<usize>,
    mean_train_r2: Option<f64>,
    sd_train_r2: Option<f64>,
    mean_test_r2: Option<f64>,
    sd_test_r2: Option<f64>,
    failed_splits: Option<usize>,
    status: String,
}

fn recover_per_category(cfg: &ExperimentConfig, list: &EdgeList) -> Result<()> {
    let div = cfg
        .division
        .as_ref()
        .ok_or_else(|| anyhow!("--per-category needs a [division] section"))?;
    let schema = list.graph.schema();
    let pivot = list
        .graph
        .node_type_id(&div.pivot_type)
        .ok_or_else(|| anyhow!("unknown pivot type `{}`", div.pivot_type))?;
    let anchor = parse_path(&div.anchor, &schema)?;
    let cats = load_categories(&div.categories, list, pivot)?;
    let parts = divide_by_category(&list.graph, pivot, &cats, &anchor)?;

    // the anchor defines the division, so it would explain the target trivially
    let anchor_text = anchor.to_string();
    let cands: Vec<Candidate> = candidates(cfg, &schema)?
        .into_iter()
        .filter_map(|mut c| {
            c.paths.retain(|p| *p != anchor_text);
            (!c.paths.is_empty()).then_some(c)
        })
        .collect();

    let mut rows = Vec::new();
    for part in &parts {
        let mut row = CategoryRow {
            category: part.category.clone(),
            n_sources: None,
            mean_train_r2: None,
            sd_train_r2: None,
            mean_test_r2: None,
            sd_test_r2: None,
            failed_splits: None,
            status: "ok".into(),
        };
        if part.empty {
            row.status = "empty".into();
            rows.push(row);
            continue;
        }
        let run = || -> Result<CvReport> {
            let g = part.graph.augment_with_holes()?;
            let (y, xs) = tables(&g, &cfg.target, &cands, cfg.feature_agg)?;
            let report = monte_carlo_cv_features(&y, &xs, &options(cfg), &cv_config(cfg))?;
            write_cv(&cfg.out.join(dir_name(&part.category)), &report)?;
            Ok(report)
        };
        match run() {
            Ok(r) => {
                row.n_sources = Some(r.n_sources);
                row.mean_train_r2 = Some(r.mean_train_r2);
                row.sd_train_r2 = Some(r.sd_train_r2);
                row.mean_test_r2 = Some(r.mean_test_r2);
                row.sd_test_r2 = Some(r.sd_test_r2);
                row.failed_splits = Some(r.failed_splits);
            }
            Err(e) => row.status = format!("error: {e:#}"),
        }
        println!("{}: {}", row.category, row.status);
        rows.push(row);
    }

    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    write_with(&cfg.out.join("summary.csv"), |w| {
        writeln!(w, "category,n_sources,mean_train_r2,sd_train_r2,mean_test_r2,sd_test_r2,failed_splits,status")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                csv_field(&r.category),
                r.n_sources.map_or(String::new(), |n| n.to_string()),
                opt(r.mean_train_r2),
                opt(r.sd_train_r2),
                opt(r.mean_test_r2),
                opt(r.sd_test_r2),
                r.failed_splits.map_or(String::new(), |n| n.to_string()),
                csv_field(&r.status)
            )?;
        }
        Ok(())
    })?;
    write_json(&cfg.out.join("summary.json"), &rows)?;
    let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
    if failed > 0 {
        bail!("{failed} of {} categories failed; see summary.csv", rows.len());
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    /// `None` for the real network.
    pub replicate: Option<usize>,
    pub seed: Option<u64>,
    pub r2: Option<f64>,
    pub selected: Vec<String>,
    pub stop: Option<StopReason>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NullReport {
    pub target: String,
    pub mode: NullMode,
    pub link_types: Vec<String>,
    pub real: RunResult,
    pub replicates: Vec<RunResult>,
    pub null_mean_r2: Option<f64>,
    pub null_max_r2: Option<f64>,
    /// Null replicates whose selection admitted no regressor.
    pub empty_null_models: usize,
}

/// Selection on the real network and on `replicates` reshuffled copies.
/// Replicate `r` uses seed `seed + r`; reshuffling happens before inverses,
/// merges and augmentation.
pub fn nullcheck(cfg: &ExperimentConfig) -> Result<()> {
    let base = ingest::load(&cfg.input, cfg.header)?.graph;
    let links: Vec<LinkTypeId> = if cfg.null.link_types.is_empty() {
        (0..base.link_types().len())
            .map(LinkTypeId)
            .filter(|&l| base.edge_count(l) >= 2)
            .collect()
    } else {
        cfg.null
            .link_types
            .iter()
            .map(|n| base.link_type_id(n).ok_or_else(|| anyhow!("unknown link type `{n}` in [null]")))
            .collect::<Result<_>>()?
    };

    let real_graph = derive(&base, cfg)?.augment_with_holes()?;
    let cands = candidates(cfg, &real_graph.schema())?;
    let run = |g: &TypedGraph| -> Result<SelectionTrace> { Ok(select(g, cfg, &cands)?.2) };
    let real_trace = run(&real_graph)?;
    let real = RunResult {
        replicate: None,
        seed: None,
        r2: Some(real_trace.final_fit().r2),
        selected: real_trace.selected_names(),
        stop: Some(real_trace.stop),
        error: None,
    };

    let mut replicates = Vec::with_capacity(cfg.null.replicates);
    for r in 0..cfg.null.replicates {
        let seed = cfg.seed.wrapping_add(r as u64);
        let outcome = null_model_links(&base, &links, cfg.null.mode, seed)
            .map_err(anyhow::Error::from)
            .and_then(|g| Ok(derive(&g, cfg)?.augment_with_holes()?))
            .and_then(|g| run(&g));
        replicates.push(match outcome {
            Ok(t) => RunResult {
                replicate: Some(r),
                seed: Some(seed),
                r2: Some(t.final_fit().r2),
                selected: t.selected_names(),
                stop: Some(t.stop),
                error: None,
            },
            Err(e) => RunResult {
                replicate: Some(r),
                seed: Some(seed),
                r2: None,
                selected: Vec::new(),
                stop: None,
                error: Some(format!("{e:#}")),
            },
        });
    }

    let null_r2: Vec<f64> = replicates.iter().filter_map(|r| r.r2).collect();
    let report = NullReport {
        target: cfg.target.clone(),
        mode: cfg.null.mode,
        link_types: links.iter().map(|&l| base.link(l).name.clone()).collect(),
        null_mean_r2: (!null_r2.is_empty()).then(|| null_r2.iter().sum::<f64>() / null_r2.len() as f64),
        null_max_r2: null_r2.iter().copied().reduce(f64::max),
        empty_null_models: replicates.iter().filter(|r| r.r2.is_some() && r.selected.is_empty()).count(),
        real,
        replicates,
    };

    write_json(&cfg.out.join("nullcheck.json"), &report)?;
    write_with(&cfg.out.join("nullcheck.csv"), |w| {
        writeln!(w, "run,seed,r2,n_selected,selected,error")?;
        for r in std::iter::once(&report.real).chain(&report.replicates) {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.replicate.map_or("real".to_string(), |i| i.to_string()),
                r.seed.map_or(String::new(), |s| s.to_string()),
                r.r2.map_or(String::new(), |v| v.to_string()),
                r.selected.len(),
                csv_field(&r.selected.join(";")),
                csv_field(r.error.as_deref().unwrap_or(""))
            )?;
        }
        Ok(())
    })?;
    println!(
        "real r2 {:.6}; null max {}; {} of {} null models empty",
        report.real.r2.unwrap_or(f64::NAN),
        report.null_max_r2.map_or("n/a".into(), |v| format!("{v:.6}")),
        report.empty_null_models,
        report.replicates.len()
    );
    Ok(())
}

/// Writes the walk table of `metapath` as `src,dst,prob` with node ids,
/// optionally only the row of one source id.
pub fn pcrw_dump(list: &EdgeList, metapath: &str, source: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let g = list.graph.augment_with_holes()?;
    let mp = parse_path(metapath, &g.schema())?;
    let table = pcrw(&g, &mp)?.table;
    let (st, tt) = (mp.source_type(), mp.target_type());
    let rows: Vec<usize> = match source {
        Some(id) => vec![list
            .node_index(st, id)
            .ok_or_else(|| anyhow!("unknown {} `{id}`", g.node_type(st).name))?],
        None => (0..table.rows()).collect(),
    };
    writeln!(out, "src,dst,prob")?;
    for r in rows {
        for (c, p) in table.row_iter(r) {
            writeln!(out, "{},{},{p}", csv_field(list.label(st, r)), csv_field(list.label(tt, c)))?;
        }
    }
    Ok(())
}

/// Node types with their sizes and link types with their edge counts.
pub fn schema_dump(list: &EdgeList, out: &mut dyn Write) -> Result<()> {
    let g = &list.graph;
    writeln!(out, "node types:")?;
    for (i, t) in g.node_types().iter().enumerate() {
        writeln!(out, "  {}\t{} nodes", t.name, g.real_count(hin_recovery::NodeTypeId(i)))?;
    }
    writeln!(out, "link types:")?;
    for (i, l) in g.link_types().iter().enumerate() {
        writeln!(
            out,
            "  {}\t{} -> {}\t{} edges",
            l.name,
            g.node_type(l.source).name,
            g.node_type(l.target).name,
            g.edge_count(LinkTypeId(i))
        )?;
    }
    Ok(())
}
