use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use geodemo::eval::Split;
use geodemo::ingest::parse_record;
use geodemo::pipeline::{
    expand_inputs, load_bags, run_pipeline, stage_assign, stage_bag, stage_evaluate,
    stage_featurize, stage_ingest, stage_predict, stage_split, stage_train, Artifacts, EvalRequest,
    PipelineConfig, TrainRequest,
};
use geodemo::synth::{generate_synthetic, write_synthetic, SynthConfig, SynthPaths};
use geodemo::tokenize::tokenize_text;

fn corpus(dir: &Path, seed: u64) -> SynthPaths {
    let cfg = SynthConfig {
        seed,
        n_units: 120,
        vocab_size: 80,
        ..SynthConfig::default()
    };
    write_synthetic(&generate_synthetic(&cfg).unwrap(), &dir.join("corpus")).unwrap()
}

fn config(paths: &SynthPaths, workdir: &Path) -> PipelineConfig {
    let text = format!(
        "split_seed = 3\n[paths]\nrecords = {:?}\nboundaries = {:?}\ntruth = {:?}\nworkdir = {:?}\n\
         [train]\nseed = 3\n[grid]\nlambdas = [1e-4, 1e-2]\netas = [1e-3, 1e-2]\n",
        paths.records, paths.boundaries, paths.truth, workdir
    );
    PipelineConfig::from_toml(&text).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn rerun_reproduces_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let paths = corpus(dir.path(), 5);
    let cfg = config(&paths, &dir.path().join("work"));
    let first = run_pipeline(&cfg).unwrap();
    let a = &first.artifacts;
    let files = [
        &a.bags,
        &a.splits,
        &a.vocab,
        &a.features,
        &a.model,
        &a.grid,
        &a.predictions,
        &a.report,
    ];
    let before: Vec<Vec<u8>> = files.iter().map(|p| read(p)).collect();
    let second = run_pipeline(&cfg).unwrap();
    assert_eq!(first.fingerprint, second.fingerprint);
    for (path, bytes) in files.iter().zip(&before) {
        assert_eq!(
            &read(path),
            bytes,
            "{} changed between runs",
            path.display()
        );
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let paths = corpus(dir.path(), 6);
    let cfg = config(&paths, &dir.path().join("work"));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let s = pool.install(|| run_pipeline(&cfg)).unwrap();
        (read(&s.artifacts.model), read(&s.artifacts.predictions))
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn stages_run_separately_match_the_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let paths = corpus(dir.path(), 8);
    let cfg = config(&paths, &dir.path().join("full"));
    let full = run_pipeline(&cfg).unwrap();

    let stamp = Some(full.fingerprint.as_str());
    let a = Artifacts::in_dir(&dir.path().join("stages"));
    fs::create_dir_all(dir.path().join("stages")).unwrap();
    let inputs = expand_inputs(&cfg.paths.records).unwrap();
    stage_ingest(
        &inputs,
        &cfg.bounding_box().unwrap(),
        &a.filtered,
        None,
        stamp,
    )
    .unwrap();
    stage_assign(&a.filtered, &cfg.paths.boundaries, &a.assigned, stamp).unwrap();
    stage_bag(
        &a.assigned,
        cfg.resolution,
        &cfg.tokenizer().unwrap(),
        &a.bags,
        stamp,
    )
    .unwrap();
    stage_split(&a.bags, cfg.split_seed, &a.splits, stamp).unwrap();
    stage_featurize(
        &a.bags,
        &a.splits,
        cfg.features,
        &a.vocab,
        &a.features,
        stamp,
    )
    .unwrap();
    let req = TrainRequest {
        variable: &cfg.variable,
        train: &cfg.train,
        grid: &cfg.grid,
    };
    stage_train(
        &a.features,
        &cfg.paths.truth,
        cfg.resolution,
        &req,
        &a.model,
        None,
        stamp,
    )
    .unwrap();
    stage_predict(
        &a.model,
        &a.features,
        Some(&cfg.paths.truth),
        cfg.resolution,
        &[Split::Test],
        &a.predictions,
        stamp,
    )
    .unwrap();
    let name = cfg.features.to_string();
    let ereq = EvalRequest {
        variable: &cfg.variable,
        config_name: &name,
        resolution: cfg.resolution,
        thresholds: &cfg.eval.thresholds,
        quantile: cfg.eval.quantile,
    };
    stage_evaluate(
        &a.predictions,
        &cfg.paths.truth,
        &a.bags,
        &ereq,
        &a.report,
        None,
        stamp,
    )
    .unwrap();

    let f = &full.artifacts;
    for (x, y) in [
        (&f.filtered, &a.filtered),
        (&f.assigned, &a.assigned),
        (&f.bags, &a.bags),
        (&f.splits, &a.splits),
        (&f.features, &a.features),
        (&f.model, &a.model),
        (&f.predictions, &a.predictions),
        (&f.report, &a.report),
    ] {
        assert_eq!(read(x), read(y), "{} differs", y.display());
    }
}

#[test]
fn bags_match_a_direct_recount() {
    let dir = tempfile::tempdir().unwrap();
    let paths = corpus(dir.path(), 9);
    let full = run_pipeline(&config(&paths, &dir.path().join("work"))).unwrap();

    let mut words: BTreeMap<(String, String), (u64, BTreeSet<u64>)> = BTreeMap::new();
    let mut users: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    let text = fs::read_to_string(&full.artifacts.assigned).unwrap();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#'))
    {
        let r = parse_record(line, i + 1).unwrap();
        let geoid = r.geoid.clone().unwrap();
        users.entry(geoid.clone()).or_default().insert(r.user_id);
        for tok in tokenize_text(&r.text) {
            *totals.entry(geoid.clone()).or_default() += 1;
            let e = words.entry((geoid.clone(), tok)).or_default();
            e.0 += 1;
            e.1.insert(r.user_id);
        }
    }

    let bags = load_bags(&full.artifacts.bags).unwrap();
    assert_eq!(bags.len(), users.len());
    for bag in &bags {
        assert_eq!(
            bag.total_users,
            users[&bag.geoid].len() as u64,
            "{}",
            bag.geoid
        );
        assert_eq!(
            bag.total_words,
            totals.get(&bag.geoid).copied().unwrap_or(0)
        );
        for w in &bag.words {
            let (count, who) = &words[&(bag.geoid.clone(), w.word.clone())];
            assert_eq!(
                (w.count, w.users),
                (*count, who.len() as u64),
                "{} {}",
                bag.geoid,
                w.word
            );
        }
        let distinct = words.keys().filter(|(g, _)| g == &bag.geoid).count();
        assert_eq!(bag.words.len(), distinct);
    }
}

#[test]
fn missing_boundaries_fail_in_the_config_stage() {
    let dir = tempfile::tempdir().unwrap();
    let paths = corpus(dir.path(), 10);
    let mut cfg = config(&paths, &dir.path().join("work"));
    cfg.paths.boundaries = dir.path().join("nope.geojson");
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.kind(), geodemo::ErrorKind::Config);
    assert!(err.to_string().contains("nope.geojson"));
}
