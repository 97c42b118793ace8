use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use geodemo::eval::write_predictions;
use geodemo::eval::Split;
use geodemo::features::{featurize, write_features, write_vocab_tsv, FeatureSet};
use geodemo::geomap::geoid_resolution;
use geodemo::pipeline::{
    expand_inputs, load_bags, load_features, load_model, load_splits, load_truth, predict_rows,
    run_pipeline, stage_assign, stage_bag, stage_evaluate, stage_ingest, stage_split, stage_train,
    write_artifact, EvalConfig, EvalRequest, PipelineConfig, TrainRequest,
};
use geodemo::synth::{generate_synthetic, write_synthetic, SynthConfig};
use geodemo::tokenize::Tokenizer;
use geodemo::{
    BoundingBox, Error, ErrorKind, FeatureConfig, Resolution, Result, Scheme, TrainConfig,
    Transform, Variant,
};

#[derive(Parser)]
#[command(
    name = "geodemo",
    version,
    about = "Estimate demographic counts of geographic units from geotagged text"
)]
struct Cli {
    /// Pipeline config (TOML). Subcommand flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 gives the single-threaded reference behaviour.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the split and SGD seeds (or the synthetic seed for `synth`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter raw records.
    Ingest {
        /// File path or glob of line-delimited records.
        #[arg(long)]
        input: String,
        #[arg(long)]
        output: PathBuf,
        /// W,E,S,N in degrees.
        #[arg(long)]
        bbox: Option<String>,
        /// Skip counts; defaults to `<output>.summary.json`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Annotate records with the block containing them.
    Assign {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        boundaries: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Tokenize assigned records into per-unit bags.
    Bag {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        resolution: Option<Resolution>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Assign units to test, validation and train splits.
    Split {
        #[arg(long)]
        bags: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build the vocabulary and feature vectors.
    Featurize {
        #[arg(long)]
        bags: PathBuf,
        #[arg(long)]
        splits: PathBuf,
        /// Only write rows of these splits (default: all).
        #[arg(long, value_delimiter = ',')]
        split: Vec<SplitArg>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        transform: Option<Transform>,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit a model, by grid search unless fixed hyperparameters are given.
    Train(TrainArgs),
    /// Predict category counts.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Truth CSV supplying populations for the population-known variant.
        #[arg(long)]
        population: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "test")]
        split: Vec<SplitArg>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        bags: PathBuf,
        #[arg(long)]
        quantile: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<u64>,
        /// Label for the predictions in the comparison block.
        #[arg(long, default_value = "model")]
        name: String,
        #[arg(long)]
        output: PathBuf,
        /// Threshold versus quantile error, for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Run every stage from the config file.
    Run,
    /// Write a synthetic corpus with known ground truth.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        units: Option<usize>,
        #[arg(long)]
        vocab: Option<usize>,
        #[arg(long)]
        variable: Option<String>,
        /// Also write a pipeline config for the corpus into the output directory.
        #[arg(long)]
        with_config: bool,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    variable: Option<String>,
    #[arg(long)]
    resolution: Option<Resolution>,
    #[arg(long, value_delimiter = ',')]
    grid_lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    grid_eta0: Vec<f64>,
    /// Fixed lambda; with --eta0 disables the grid search.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Denominator category index for the population-known variant.
    #[arg(long)]
    denominator: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    output: PathBuf,
    /// Validation score of every grid point.
    #[arg(long)]
    grid_output: Option<PathBuf>,
}

#[derive(Clone, Copy)]
struct SplitArg(Option<Split>);

impl std::str::FromStr for SplitArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(SplitArg(Some(Split::Train))),
            "validation" | "val" => Ok(SplitArg(Some(Split::Validation))),
            "test" => Ok(SplitArg(Some(Split::Test))),
            "all" => Ok(SplitArg(None)),
            _ => Err(format!(
                "unknown split {s:?}; expected train, validation, test or all"
            )),
        }
    }
}

fn split_list(args: &[SplitArg]) -> Vec<Split> {
    let all = [Split::Train, Split::Validation, Split::Test];
    if args.is_empty() || args.iter().any(|s| s.0.is_none()) {
        return all.to_vec();
    }
    all.into_iter()
        .filter(|s| args.iter().any(|a| a.0 == Some(*s)))
        .collect()
}

struct Context {
    config: Option<PipelineConfig>,
    seed: Option<u64>,
}

impl Context {
    fn stamp(&self) -> Option<String> {
        self.config.as_ref().map(PipelineConfig::fingerprint)
    }

    fn resolution(&self, flag: Option<Resolution>) -> Resolution {
        flag.or(self.config.as_ref().map(|c| c.resolution))
            .unwrap_or(Resolution::Block)
    }

    fn variable(&self, flag: Option<String>) -> String {
        flag.or(self.config.as_ref().map(|c| c.variable.clone()))
            .unwrap_or_else(|| "gender".into())
    }

    fn split_seed(&self) -> u64 {
        self.seed
            .or(self.config.as_ref().map(|c| c.split_seed))
            .unwrap_or(0)
    }

    fn eval(&self) -> EvalConfig {
        self.config
            .as_ref()
            .map(|c| c.eval.clone())
            .unwrap_or_default()
    }
}

fn resolution_of(geoid: Option<&str>) -> Result<Resolution> {
    geoid.map_or(Ok(Resolution::Block), geoid_resolution)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let mut config = cli
        .config
        .as_deref()
        .map(PipelineConfig::load)
        .transpose()?;
    if let (Some(cfg), Some(seed)) = (config.as_mut(), cli.seed) {
        cfg.split_seed = seed;
        cfg.train.seed = seed;
    }
    let ctx = Context {
        config,
        seed: cli.seed,
    };
    let stamp = ctx.stamp();
    let stamp = stamp.as_deref();

    match cli.command {
        Command::Ingest {
            input,
            output,
            bbox,
            summary,
        } => {
            let bbox = match bbox.or(ctx.config.as_ref().and_then(|c| c.bbox.clone())) {
                Some(s) => s.parse()?,
                None => BoundingBox::CONTIGUOUS_US,
            };
            let summary_path = summary.unwrap_or_else(|| with_suffix(&output, ".summary.json"));
            let s = stage_ingest(
                &expand_inputs(&input)?,
                &bbox,
                &output,
                Some(&summary_path),
                stamp,
            )?;
            eprintln!(
                "kept {} of {} lines ({} filtered, {} unparseable, {} invalid UTF-8)",
                s.kept, s.lines, s.filtered, s.parse_errors, s.invalid_utf8
            );
        }
        Command::Assign {
            records,
            boundaries,
            output,
        } => {
            let s = stage_assign(&records, &boundaries, &output, stamp)?;
            eprintln!(
                "assigned {} records, {} outside every unit",
                s.assigned, s.unassigned
            );
        }
        Command::Bag {
            records,
            resolution,
            stopwords,
            output,
        } => {
            let tokenizer = match stopwords {
                Some(path) => Tokenizer::with_stopwords_file(&path)?,
                None => match &ctx.config {
                    Some(cfg) => cfg.tokenizer()?,
                    None => Tokenizer::default(),
                },
            };
            let bags = stage_bag(
                &records,
                ctx.resolution(resolution),
                &tokenizer,
                &output,
                stamp,
            )?;
            eprintln!("wrote {} bags", bags.len());
        }
        Command::Split { bags, output } => {
            let s = stage_split(&bags, ctx.split_seed(), &output, stamp)?;
            eprintln!(
                "test {}, validation {}, train {}",
                s.count(Split::Test),
                s.count(Split::Validation),
                s.count(Split::Train)
            );
        }
        Command::Featurize {
            bags,
            splits,
            split,
            scheme,
            transform,
            vocab,
            output,
        } => {
            let base = ctx.config.as_ref().map(|c| c.features);
            let scheme = scheme
                .or(base.map(|f| f.scheme()))
                .unwrap_or(Scheme::NormalizedUser);
            let transform = transform
                .or(base.map(|f| f.transform()))
                .unwrap_or(Transform::Gaussian);
            let config = FeatureConfig::new(scheme, transform)?;
            let bags = load_bags(&bags)?;
            let assignment = load_splits(&splits)?;
            let (v, idf, set) = featurize(&bags, assignment.as_map(), config)?;
            let keep = split_list(&split);
            let set = FeatureSet {
                rows: set
                    .rows
                    .into_iter()
                    .filter(|r| keep.contains(&r.split))
                    .collect(),
                ..set
            };
            write_string(&vocab, stamp, &write_vocab_tsv(&v, &idf))?;
            write_string(&output, stamp, &write_features(&set))?;
            eprintln!(
                "vocabulary of {} words, {} feature rows ({config})",
                v.len(),
                set.rows.len()
            );
        }
        Command::Train(args) => train(&ctx, args, stamp)?,
        Command::Predict {
            model,
            features,
            population,
            split,
            output,
        } => {
            let model = load_model(&model)?;
            let features = load_features(&features)?;
            let resolution = resolution_of(features.rows.first().map(|r| r.geoid.as_str()))?;
            let truth = population.map(|p| load_truth(&p, resolution)).transpose()?;
            let rows = predict_rows(&model, &features, truth.as_ref(), &split_list(&split))?;
            write_string(&output, stamp, &write_predictions(&rows, None))?;
            eprintln!("wrote {} prediction rows", rows.len());
        }
        Command::Evaluate {
            pred,
            truth,
            bags,
            quantile,
            thresholds,
            name,
            output,
            plot,
        } => {
            let eval = ctx.eval();
            let preds = geodemo::eval::read_predictions(open(&pred)?)?;
            let variable = preds
                .first()
                .map(|r| r.variable.clone())
                .ok_or_else(|| Error::Config(format!("{} has no predictions", pred.display())))?;
            let thresholds = if thresholds.is_empty() {
                eval.thresholds
            } else {
                thresholds
            };
            let req = EvalRequest {
                variable: &variable,
                config_name: &name,
                resolution: resolution_of(preds.first().map(|r| r.geoid.as_str()))?,
                thresholds: &thresholds,
                quantile: quantile.unwrap_or(eval.quantile),
            };
            if !(req.quantile > 0.0 && req.quantile < 1.0) {
                return Err(Error::Config("--quantile must lie in (0, 1)".into()));
            }
            let report =
                stage_evaluate(&pred, &truth, &bags, &req, &output, plot.as_deref(), stamp)?;
            print_metrics(&report);
        }
        Command::Run => {
            let cfg = ctx
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("`run` needs --config".into()))?;
            let summary = run_pipeline(cfg)?;
            eprintln!(
                "config {}: {} records kept, {} assigned; artifacts in {}",
                summary.fingerprint,
                summary.ingest.kept,
                summary.assign.assigned,
                cfg.paths.workdir.display()
            );
            print_metrics(&summary.report);
        }
        Command::Synth {
            output,
            units,
            vocab,
            variable,
            with_config,
        } => {
            let base = SynthConfig::default();
            let cfg = SynthConfig {
                seed: cli.seed.unwrap_or(base.seed),
                n_units: units.unwrap_or(base.n_units),
                vocab_size: vocab.unwrap_or(base.vocab_size),
                variable: variable.unwrap_or(base.variable.clone()),
                ..base
            };
            let data = generate_synthetic(&cfg)?;
            let paths = write_synthetic(&data, &output)?;
            if with_config {
                let text = format!(
                    "variable = {:?}\nsplit_seed = {}\n\n[paths]\nrecords = \"records.jsonl\"\n\
                     boundaries = \"boundaries.geojson\"\ntruth = \"truth.csv\"\nworkdir = \"work\"\n\n\
                     [train]\nseed = {}\n",
                    cfg.variable, cfg.seed, cfg.seed
                );
                let path = output.join("pipeline.toml");
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            eprintln!(
                "wrote {} records for {} units to {}",
                data.records.len(),
                data.boundaries.len(),
                paths.records.parent().unwrap_or(Path::new(".")).display()
            );
        }
    }
    Ok(())
}

fn train(ctx: &Context, a: TrainArgs, stamp: Option<&str>) -> Result<()> {
    let base = ctx.config.as_ref();
    let mut train = base.map(|c| c.train.clone()).unwrap_or_default();
    let mut grid = base.map(|c| c.grid.clone()).unwrap_or_default();
    if let Some(v) = a.variant {
        train.variant = v;
    }
    if let Some(seed) = ctx.seed {
        train.seed = seed;
    }
    if let Some(e) = a.epochs {
        train.epochs = e;
    }
    if let Some(q) = a.denominator {
        train.denominator = Some(q);
    }
    if let Some(alpha) = a.alpha {
        train.alpha = alpha;
    }
    if !a.grid_lambda.is_empty() {
        grid.lambdas = a.grid_lambda;
    }
    if !a.grid_eta0.is_empty() {
        grid.etas = a.grid_eta0;
    }
    if let (Some(lambda), Some(eta0)) = (a.lambda, a.eta0) {
        train = TrainConfig {
            lambda,
            eta0,
            ..train
        };
        grid.search = false;
    } else if a.lambda.is_some() || a.eta0.is_some() {
        return Err(Error::Config(
            "--lambda and --eta0 must be given together".into(),
        ));
    }
    train.validate()?;
    let variable = ctx.variable(a.variable);
    let resolution = match a.resolution {
        Some(r) => r,
        None => match base {
            Some(c) => c.resolution,
            None => resolution_of(
                load_features(&a.features)?
                    .rows
                    .first()
                    .map(|r| r.geoid.as_str()),
            )?,
        },
    };
    let req = TrainRequest {
        variable: &variable,
        train: &train,
        grid: &grid,
    };
    let model = stage_train(
        &a.features,
        &a.truth,
        resolution,
        &req,
        &a.output,
        a.grid_output.as_deref(),
        stamp,
    )?;
    eprintln!(
        "{} model for {}: lambda={} eta0={}",
        model.variant.name(),
        model.variable,
        model.train.lambda,
        model.train.eta0
    );
    Ok(())
}

fn print_metrics(report: &geodemo::eval::EvalReport) {
    let mut out = std::io::stdout().lock();
    for m in report.metrics.iter().filter(|m| m.metric == "pearson_r") {
        let _ = writeln!(out, "{} {} r={:.4}", m.variable, m.category, m.value);
    }
    for c in &report.comparisons {
        let _ = writeln!(
            out,
            "{} {} vs {}: p={:.3e}",
            c.comparison, c.config_a, c.config_b, c.p_value
        );
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_string(path: &Path, stamp: Option<&str>, text: &str) -> Result<()> {
    write_artifact(path, stamp, |w| {
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Divergence => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn split_lists() {
        let parse = |s: &str| {
            s.split(',')
                .map(|p| p.parse::<SplitArg>().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(split_list(&parse("test")), [Split::Test]);
        assert_eq!(
            split_list(&parse("test,train")),
            [Split::Train, Split::Test]
        );
        assert_eq!(split_list(&parse("all")).len(), 3);
        assert_eq!(split_list(&[]).len(), 3);
        assert!("holdout".parse::<SplitArg>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(ErrorKind::Config), 2);
        assert_eq!(exit_code(ErrorKind::Data), 3);
        assert_eq!(exit_code(ErrorKind::Divergence), 4);
    }

    #[test]
    fn seed_flag_overrides_config() {
        let cli = Cli::try_parse_from([
            "geodemo", "--seed", "5", "split", "--bags", "b", "--output", "o",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(5));
        let ctx = Context {
            config: None,
            seed: cli.seed,
        };
        assert_eq!(ctx.split_seed(), 5);
    }
}
