//! File-based stages and the end-to-end run.
//!
//! Every artifact starts with a `# config <fingerprint>` line, is written
//! under a `.partial` name and renamed once complete.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    evaluate, predictions_by_unit, read_predictions, split_units, write_plot_data,
    write_predictions, EvalReport, PredictionRow, Split, SplitAssignment, UnitOutcome,
};
use crate::features::{
    featurize, read_bags, read_features, write_bags, write_features, write_vocab_tsv, BagStats,
    FeatureConfig, FeatureSet, Scheme, Transform, UnitBag,
};
use crate::geomap::{
    assign_geoid, load_boundaries, rollup_geoid, DemographicTable, Point, Resolution, SpatialIndex,
};
use crate::ingest::{
    filter_stream, read_records, serialize_record, BoundingBox, IngestSummary, LineRecord,
    RawRecord,
};
use crate::model::{
    clamp_nonnegative, default_denominator, fit_sgd, grid_search, make_targets, predict_known,
    predict_unknown, read_model, write_model, RegressionModel, TrainConfig, Variant, ETA0_GRID,
    LAMBDA_GRID,
};
use crate::tokenize::Tokenizer;

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// File path or glob pattern of line-delimited record files.
    pub records: String,
    pub boundaries: PathBuf,
    pub truth: PathBuf,
    pub workdir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// When false, `train.lambda` and `train.eta0` are used as given.
    pub search: bool,
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            search: true,
            lambdas: LAMBDA_GRID.to_vec(),
            etas: ETA0_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub thresholds: Vec<u64>,
    pub quantile: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: vec![1, 10, 100, 1000],
            quantile: 0.95,
        }
    }
}

fn default_features() -> FeatureConfig {
    FeatureConfig::new(Scheme::NormalizedUser, Transform::Gaussian).expect("valid pairing")
}

fn default_resolution() -> Resolution {
    Resolution::Block
}

fn default_variable() -> String {
    "gender".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_resolution")]
    pub resolution: Resolution,
    #[serde(default = "default_variable")]
    pub variable: String,
    #[serde(default)]
    pub split_seed: u64,
    /// `W,E,S,N`; the contiguous US when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<String>,
    pub paths: PathsConfig,
    #[serde(default = "default_features")]
    pub features: FeatureConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative paths are taken relative to the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        if Path::new(&p.records).is_relative() {
            p.records = base.join(&p.records).to_string_lossy().into_owned();
        }
        for path in [&mut p.boundaries, &mut p.truth, &mut p.workdir] {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(sw) = p.stopwords.as_mut().filter(|s| s.is_relative()) {
            *sw = base.join(&*sw);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.bounding_box()?;
        if self.variable.is_empty() {
            return Err(Error::Config("variable must be named".into()));
        }
        if self.grid.search && (self.grid.lambdas.is_empty() || self.grid.etas.is_empty()) {
            return Err(Error::Config("grid search needs lambdas and etas".into()));
        }
        if !(self.eval.quantile > 0.0 && self.eval.quantile < 1.0) {
            return Err(Error::Config("eval.quantile must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> Result<BoundingBox> {
        self.bbox
            .as_deref()
            .map_or(Ok(BoundingBox::CONTIGUOUS_US), str::parse)
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML rendering.
    pub fn fingerprint(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn tokenizer(&self) -> Result<Tokenizer> {
        match &self.paths.stopwords {
            Some(path) => Tokenizer::with_stopwords_file(path),
            None => Ok(Tokenizer::default()),
        }
    }
}

/// Artifact locations inside a work directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub filtered: PathBuf,
    pub ingest_summary: PathBuf,
    pub assigned: PathBuf,
    pub bags: PathBuf,
    pub splits: PathBuf,
    pub vocab: PathBuf,
    pub features: PathBuf,
    pub model: PathBuf,
    pub grid: PathBuf,
    pub predictions: PathBuf,
    pub report: PathBuf,
    pub plot: PathBuf,
}

impl Artifacts {
    pub fn in_dir(dir: &Path) -> Self {
        Artifacts {
            filtered: dir.join("filtered.jsonl"),
            ingest_summary: dir.join("ingest_summary.json"),
            assigned: dir.join("assigned.jsonl"),
            bags: dir.join("bags.jsonl"),
            splits: dir.join("splits.csv"),
            vocab: dir.join("vocab.tsv"),
            features: dir.join("features.tsv"),
            model: dir.join("model.txt"),
            grid: dir.join("grid.csv"),
            predictions: dir.join("predictions.csv"),
            report: dir.join("report.csv"),
            plot: dir.join("plot.csv"),
        }
    }
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

/// Write `path` through a `.partial` file that is renamed only on success.
pub fn write_artifact<F>(path: &Path, stamp: Option<&str>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let tmp = partial_path(path);
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut out = BufWriter::new(file);
    if let Some(fp) = stamp {
        writeln!(out, "# config {fp}").map_err(|e| Error::io(&tmp, e))?;
    }
    body(&mut out)?;
    out.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, stamp: Option<&str>, text: &str) -> Result<()> {
    write_artifact(path, stamp, |out| {
        out.write_all(text.as_bytes())
            .map_err(|e| Error::io(path, e))
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Sorted paths matching `pattern`, which may also name a single file.
pub fn expand_inputs(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths =
        glob::glob(pattern).map_err(|e| Error::Config(format!("bad glob {pattern:?}: {e}")))?;
    let mut out: Vec<PathBuf> = paths
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::io(e.path().to_path_buf(), e.into()))?;
    out.sort();
    if out.is_empty() {
        return Err(Error::Config(format!("no input files match {pattern:?}")));
    }
    Ok(out)
}

/// Assigned records only; comments are skipped and any malformed line is an
/// error since these files are produced by earlier stages.
fn for_each_record_chunk<F>(path: &Path, mut f: F) -> Result<()>
where
    F: FnMut(Vec<RawRecord>) -> Result<()>,
{
    let mut chunk = Vec::with_capacity(CHUNK);
    for item in read_records(open(path)?) {
        match item? {
            LineRecord::Record(r) => chunk.push(r),
            LineRecord::Comment => continue,
            LineRecord::InvalidUtf8 { line } => {
                return Err(Error::parse(
                    line,
                    format!("{}: invalid UTF-8", path.display()),
                ))
            }
            LineRecord::Malformed(e) => return Err(e),
        }
        if chunk.len() == CHUNK {
            f(std::mem::take(&mut chunk))?;
        }
    }
    if !chunk.is_empty() {
        f(chunk)?;
    }
    Ok(())
}

pub fn stage_ingest(
    inputs: &[PathBuf],
    bbox: &BoundingBox,
    out: &Path,
    summary_out: Option<&Path>,
    stamp: Option<&str>,
) -> Result<IngestSummary> {
    let mut total = IngestSummary::default();
    write_artifact(out, stamp, |w| {
        for input in inputs {
            let s = filter_stream(open(input)?, w, bbox)?;
            log::info!("{}: kept {} of {} lines", input.display(), s.kept, s.lines);
            total.merge(&s);
        }
        Ok(())
    })?;
    if let Some(path) = summary_out {
        write_text(path, None, &(serde_json::to_string_pretty(&total)? + "\n"))?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssignSummary {
    pub assigned: u64,
    pub unassigned: u64,
}

pub fn stage_assign(
    records: &Path,
    boundaries: &Path,
    out: &Path,
    stamp: Option<&str>,
) -> Result<AssignSummary> {
    let index = SpatialIndex::build(load_boundaries(boundaries)?);
    let mut summary = AssignSummary::default();
    write_artifact(out, stamp, |w| {
        for_each_record_chunk(records, |chunk| {
            let assigned: Vec<RawRecord> = chunk
                .into_par_iter()
                .map(|mut r| {
                    r.geoid = assign_geoid(Point::new(r.longitude, r.latitude), &index)
                        .map(str::to_string);
                    r
                })
                .collect();
            for r in assigned {
                if r.geoid.is_some() {
                    summary.assigned += 1;
                    writeln!(w, "{}", serialize_record(&r)).map_err(|e| Error::io(out, e))?;
                } else {
                    summary.unassigned += 1;
                }
            }
            Ok(())
        })
    })?;
    log::info!(
        "assigned {} records, {} outside every unit",
        summary.assigned,
        summary.unassigned
    );
    Ok(summary)
}

pub fn stage_bag(
    assigned: &Path,
    resolution: Resolution,
    tokenizer: &Tokenizer,
    out: &Path,
    stamp: Option<&str>,
) -> Result<Vec<BagStats>> {
    let mut bags: BTreeMap<String, UnitBag> = BTreeMap::new();
    for_each_record_chunk(assigned, |chunk| {
        let rows: Vec<(String, u64, Vec<String>)> = chunk
            .into_par_iter()
            .map(|r| {
                let geoid = r.geoid.as_deref().ok_or_else(|| Error::Geoid {
                    geoid: String::new(),
                    reason: format!("record of user {} has no geoid", r.user_id),
                })?;
                Ok((
                    rollup_geoid(geoid, resolution)?,
                    r.user_id,
                    tokenizer.tokenize(&r.text),
                ))
            })
            .collect::<Result<_>>()?;
        for (geoid, user, tokens) in rows {
            bags.entry(geoid.clone())
                .or_insert_with(|| UnitBag::new(geoid.clone()))
                .accumulate(&geoid, user, &tokens)?;
        }
        Ok(())
    })?;
    let stats: Vec<BagStats> = bags.values().map(UnitBag::finalize).collect();
    write_artifact(out, stamp, |w| {
        write_bags(w, &stats).map_err(|e| Error::io(out, e))
    })?;
    Ok(stats)
}

pub fn load_bags(path: &Path) -> Result<Vec<BagStats>> {
    read_bags(open(path)?)
}

pub fn stage_split(
    bags: &Path,
    seed: u64,
    out: &Path,
    stamp: Option<&str>,
) -> Result<SplitAssignment> {
    let geoids: Vec<String> = load_bags(bags)?.into_iter().map(|b| b.geoid).collect();
    let splits = split_units(&geoids, seed)?;
    write_text(out, stamp, &splits.to_csv())?;
    Ok(splits)
}

pub fn load_splits(path: &Path) -> Result<SplitAssignment> {
    SplitAssignment::parse_csv(open(path)?)
}

pub fn stage_featurize(
    bags: &Path,
    splits: &Path,
    config: FeatureConfig,
    vocab_out: &Path,
    features_out: &Path,
    stamp: Option<&str>,
) -> Result<FeatureSet> {
    let bags = load_bags(bags)?;
    let splits = load_splits(splits)?;
    let (vocab, idf, set) = featurize(&bags, splits.as_map(), config)?;
    write_text(vocab_out, stamp, &write_vocab_tsv(&vocab, &idf))?;
    write_text(features_out, stamp, &write_features(&set))?;
    Ok(set)
}

pub fn load_features(path: &Path) -> Result<FeatureSet> {
    read_features(open(path)?)
}

/// Truth table at `resolution`, rolled up from finer units when needed.
pub fn load_truth(path: &Path, resolution: Resolution) -> Result<DemographicTable> {
    DemographicTable::load(path)?.rollup(resolution)
}

#[derive(Debug, Clone)]
pub struct TrainRequest<'a> {
    pub variable: &'a str,
    pub train: &'a TrainConfig,
    pub grid: &'a GridConfig,
}

/// Fit a model on the training and validation rows of `features`.
pub fn train_model(
    features: &FeatureSet,
    truth: &DemographicTable,
    req: &TrainRequest<'_>,
) -> Result<(RegressionModel, Vec<crate::model::GridPoint>)> {
    let categories: Vec<String> = truth.categories(req.variable)?.to_vec();
    let variant = req.train.variant;
    let q = match variant {
        Variant::Known => req
            .train
            .denominator
            .unwrap_or_else(|| default_denominator(req.variable, &categories)),
        Variant::Unknown => 0,
    };
    let mut parts = BTreeMap::new();
    let mut skipped = 0usize;
    for row in &features.rows {
        if !row.split.is_training() {
            continue;
        }
        match truth.geo_unit(&row.geoid) {
            Ok(unit) => {
                let (xs, units) = parts
                    .entry(row.split)
                    .or_insert_with(|| (Vec::new(), Vec::new()));
                xs.push(row.vector.clone());
                units.push(unit);
            }
            Err(Error::MissingTruth { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} training units have no ground truth and were skipped");
    }
    let (train_x, train_units) = parts.remove(&Split::Train).ok_or(Error::EmptyTrainingSet)?;
    let (val_x, val_units) = parts.remove(&Split::Validation).unwrap_or_default();
    let alpha = req.train.alpha;
    let train_y = make_targets(&train_units, variant, req.variable, q, alpha)?;
    let val_y = make_targets(&val_units, variant, req.variable, q, alpha)?;

    let (config, weights, evaluations) = if req.grid.search {
        if val_x.is_empty() {
            return Err(Error::TooFewUnits {
                needed: 1,
                found: 0,
            });
        }
        let out = grid_search(
            &train_x,
            &train_y,
            &val_x,
            &val_y,
            &req.grid.lambdas,
            &req.grid.etas,
            req.train,
        )?;
        (out.config, out.weights, out.evaluations)
    } else {
        let xs: Vec<_> = train_x.iter().chain(&val_x).cloned().collect();
        let weights = train_y
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let v = val_y.get(j).map_or(&[][..], Vec::as_slice);
                let ys: Vec<f64> = t.iter().chain(v).copied().collect();
                fit_sgd(&xs, &ys, req.train)
            })
            .collect::<Result<_>>()?;
        (req.train.clone(), weights, Vec::new())
    };
    let model = RegressionModel {
        variant,
        variable: req.variable.to_string(),
        categories,
        denominator: (variant == Variant::Known).then_some(q),
        weights,
        dim: features.dim,
        features: features.config,
        vocab_fingerprint: features.vocab_fingerprint.clone(),
        train: TrainConfig {
            denominator: (variant == Variant::Known).then_some(q),
            ..config
        },
    };
    model.check()?;
    Ok((model, evaluations))
}

#[allow(clippy::too_many_arguments)]
pub fn stage_train(
    features: &Path,
    truth: &Path,
    resolution: Resolution,
    req: &TrainRequest<'_>,
    model_out: &Path,
    grid_out: Option<&Path>,
    stamp: Option<&str>,
) -> Result<RegressionModel> {
    let features = load_features(features)?;
    let truth = load_truth(truth, resolution)?;
    let (model, evaluations) = train_model(&features, &truth, req)?;
    if let Some(path) = grid_out {
        let mut text = String::from("lambda,eta0,score\n");
        for p in &evaluations {
            text.push_str(&format!("{:?},{:?},{:?}\n", p.lambda, p.eta0, p.score));
        }
        write_text(path, stamp, &text)?;
    }
    write_text(model_out, stamp, &write_model(&model))?;
    log::info!(
        "model trained with lambda={} eta0={}",
        model.train.lambda,
        model.train.eta0
    );
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<RegressionModel> {
    read_model(open(path)?)
}

/// Predictions for the rows of `features` whose split is in `splits`.
pub fn predict_rows(
    model: &RegressionModel,
    features: &FeatureSet,
    truth: Option<&DemographicTable>,
    splits: &[Split],
) -> Result<Vec<PredictionRow>> {
    if features.vocab_fingerprint != model.vocab_fingerprint || features.config != model.features {
        return Err(Error::Config(format!(
            "features ({} / {}) do not match the model ({} / {})",
            features.config, features.vocab_fingerprint, model.features, model.vocab_fingerprint
        )));
    }
    let mut out = Vec::new();
    for row in features.rows.iter().filter(|r| splits.contains(&r.split)) {
        let raw = match model.variant {
            Variant::Unknown => predict_unknown(model, &row.vector)?,
            Variant::Known => {
                let p = truth
                    .and_then(|t| t.population(&row.geoid))
                    .ok_or_else(|| Error::MissingTruth {
                        geoid: row.geoid.clone(),
                        what: "population".into(),
                    })?;
                predict_known(model, &row.vector, p as f64)?
            }
        };
        let counts = clamp_nonnegative(&raw);
        for ((cat, r), c) in model.categories.iter().zip(&raw).zip(counts) {
            out.push(PredictionRow {
                geoid: row.geoid.clone(),
                variable: model.variable.clone(),
                category: cat.clone(),
                count: c,
                raw: *r,
            });
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn stage_predict(
    model: &Path,
    features: &Path,
    truth: Option<&Path>,
    resolution: Resolution,
    splits: &[Split],
    out: &Path,
    stamp: Option<&str>,
) -> Result<Vec<PredictionRow>> {
    let model = load_model(model)?;
    let features = load_features(features)?;
    let truth = truth.map(|t| load_truth(t, resolution)).transpose()?;
    let rows = predict_rows(&model, &features, truth.as_ref(), splits)?;
    write_text(out, stamp, &write_predictions(&rows, None))?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct EvalRequest<'a> {
    pub variable: &'a str,
    pub config_name: &'a str,
    pub resolution: Resolution,
    pub thresholds: &'a [u64],
    pub quantile: f64,
}

pub fn evaluate_predictions(
    preds: &[PredictionRow],
    truth: &DemographicTable,
    bags: &[BagStats],
    req: &EvalRequest<'_>,
) -> Result<EvalReport> {
    let categories = truth.categories(req.variable)?.to_vec();
    let by_unit = predictions_by_unit(preds, req.variable, &categories)?;
    let users: BTreeMap<&str, u64> = bags
        .iter()
        .map(|b| (b.geoid.as_str(), b.total_users))
        .collect();
    let units = by_unit
        .into_iter()
        .map(|(geoid, pred)| {
            let truth_counts = truth.counts(&geoid, req.variable)?;
            let u = users
                .get(geoid.as_str())
                .copied()
                .ok_or_else(|| Error::MissingTruth {
                    geoid: geoid.clone(),
                    what: "bag".into(),
                })?;
            Ok(UnitOutcome {
                population: truth.population(&geoid).map(|p| p as f64),
                truth: truth_counts.into_iter().map(|c| c as f64).collect(),
                users: u,
                pred,
                geoid,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate(
        req.variable,
        &categories,
        req.config_name,
        &units,
        req.thresholds,
        req.quantile,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn stage_evaluate(
    predictions: &Path,
    truth: &Path,
    bags: &Path,
    req: &EvalRequest<'_>,
    report_out: &Path,
    plot_out: Option<&Path>,
    stamp: Option<&str>,
) -> Result<EvalReport> {
    let preds = read_predictions(open(predictions)?)?;
    let truth = load_truth(truth, req.resolution)?;
    let bags = load_bags(bags)?;
    let report = evaluate_predictions(&preds, &truth, &bags, req)?;
    write_text(report_out, None, &report.to_csv(stamp))?;
    if let Some(path) = plot_out {
        write_text(
            path,
            stamp,
            &write_plot_data(&[(req.resolution, &report.errors)]),
        )?;
    }
    Ok(report)
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub fingerprint: String,
    pub artifacts: Artifacts,
    pub ingest: IngestSummary,
    pub assign: AssignSummary,
    pub model: RegressionModel,
    pub report: EvalReport,
}

/// Every stage in order, writing artifacts into `cfg.paths.workdir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    stage("config", cfg.validate())?;
    let fp = cfg.fingerprint();
    let stamp = Some(fp.as_str());
    let bbox = stage("config", cfg.bounding_box())?;
    let tokenizer = stage("config", cfg.tokenizer())?;
    for path in [&cfg.paths.boundaries, &cfg.paths.truth] {
        if !path.exists() {
            return stage(
                "config",
                Err(Error::Config(format!("{} does not exist", path.display()))),
            );
        }
    }
    let inputs = stage("config", expand_inputs(&cfg.paths.records))?;
    let dir = &cfg.paths.workdir;
    stage(
        "config",
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
    )?;
    let a = Artifacts::in_dir(dir);

    let ingest = stage(
        "ingest",
        stage_ingest(&inputs, &bbox, &a.filtered, Some(&a.ingest_summary), stamp),
    )?;
    let assign = stage(
        "assign",
        stage_assign(&a.filtered, &cfg.paths.boundaries, &a.assigned, stamp),
    )?;
    stage(
        "bag",
        stage_bag(&a.assigned, cfg.resolution, &tokenizer, &a.bags, stamp),
    )?;
    stage(
        "split",
        stage_split(&a.bags, cfg.split_seed, &a.splits, stamp),
    )?;
    stage(
        "featurize",
        stage_featurize(
            &a.bags,
            &a.splits,
            cfg.features,
            &a.vocab,
            &a.features,
            stamp,
        ),
    )?;
    let req = TrainRequest {
        variable: &cfg.variable,
        train: &cfg.train,
        grid: &cfg.grid,
    };
    let model = stage(
        "train",
        stage_train(
            &a.features,
            &cfg.paths.truth,
            cfg.resolution,
            &req,
            &a.model,
            Some(&a.grid),
            stamp,
        ),
    )?;
    stage(
        "predict",
        stage_predict(
            &a.model,
            &a.features,
            Some(&cfg.paths.truth),
            cfg.resolution,
            &[Split::Test],
            &a.predictions,
            stamp,
        ),
    )?;
    let config_name = cfg.features.to_string();
    let ereq = EvalRequest {
        variable: &cfg.variable,
        config_name: &config_name,
        resolution: cfg.resolution,
        thresholds: &cfg.eval.thresholds,
        quantile: cfg.eval.quantile,
    };
    let report = stage(
        "evaluate",
        stage_evaluate(
            &a.predictions,
            &cfg.paths.truth,
            &a.bags,
            &ereq,
            &a.report,
            Some(&a.plot),
            stamp,
        ),
    )?;
    Ok(RunSummary {
        fingerprint: fp,
        artifacts: a,
        ingest,
        assign,
        model,
        report,
    })
}
