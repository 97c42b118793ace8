//! Synthetic corpora with known demographics.
//!
//! Units are square blocks on a regular grid. Each user belongs to one
//! category and writes short records mixing background words with words
//! specific to that category, so category proportions and user counts both
//! leave a trace in the normalized word statistics.

use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomap::{
    canonical_categories, write_boundaries, DemographicTable, GeoUnit, PolygonSet,
};
use crate::ingest::{serialize_record, RawRecord};

pub const MIN_SYNTH_UNITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_units: usize,
    pub vocab_size: usize,
    /// `gender` or `race`.
    pub variable: String,
    pub pop_min: u64,
    pub pop_max: u64,
    /// Each resident is a user with this probability.
    pub user_rate: f64,
    pub records_per_user: (usize, usize),
    pub tokens_per_record: usize,
    pub markers_per_category: usize,
    /// Probability that a token is a marker word of the writer's category.
    pub marker_rate: f64,
    /// Symmetric Dirichlet concentration of per-unit proportions.
    pub concentration: f64,
    /// Fraction of extra records that the ingest filters must reject.
    pub noise_rate: f64,
    pub cell_size: f64,
    pub origin: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_units: 2000,
            vocab_size: 500,
            variable: "gender".into(),
            pop_min: 50,
            pop_max: 5000,
            user_rate: 0.04,
            records_per_user: (1, 3),
            tokens_per_record: 6,
            markers_per_category: 2,
            marker_rate: 0.3,
            concentration: 4.0,
            noise_rate: 0.02,
            cell_size: 0.01,
            origin: (-100.0, 35.0),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<Vec<&'static str>> {
        let cats = canonical_categories(&self.variable)
            .ok_or_else(|| Error::UnknownVariable(self.variable.clone()))?;
        let k = cats.len();
        let bad = |m: String| Err(Error::Config(m));
        if self.n_units < MIN_SYNTH_UNITS {
            return bad(format!("n_units must be at least {MIN_SYNTH_UNITS}"));
        }
        if self.vocab_size < k {
            return bad(format!(
                "vocab_size {} is below the {k} categories",
                self.vocab_size
            ));
        }
        if self.markers_per_category * k > self.vocab_size {
            return bad("marker words exceed the vocabulary".into());
        }
        if self.pop_min == 0 || self.pop_min > self.pop_max {
            return bad("need 0 < pop_min <= pop_max".into());
        }
        if !(self.user_rate > 0.0 && self.user_rate <= 1.0) {
            return bad("user_rate must lie in (0, 1]".into());
        }
        let (lo, hi) = self.records_per_user;
        if lo == 0 || lo > hi || self.tokens_per_record == 0 {
            return bad("records and tokens per user must be positive".into());
        }
        for (name, v) in [
            ("marker_rate", self.marker_rate),
            ("noise_rate", self.noise_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.markers_per_category == 0 && self.marker_rate > 0.0 {
            return bad("marker_rate needs marker words".into());
        }
        if !(self.concentration > 0.0) || !(self.cell_size > 0.0) {
            return bad("concentration and cell_size must be positive".into());
        }
        let cols = (self.n_units as f64).sqrt().ceil();
        let (lon, lat) = self.origin;
        let (w, e, s, n) = (
            lon,
            lon + cols * self.cell_size,
            lat,
            lat + cols * self.cell_size,
        );
        if !(w >= -180.0 && e <= 180.0 && s >= -90.0 && n <= 90.0) {
            return bad("grid leaves valid coordinates".into());
        }
        Ok(cats.to_vec())
    }
}

/// Ground truth for one generated unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthUnit {
    pub geoid: String,
    pub proportions: Vec<f64>,
    pub population: u64,
    pub users: u64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub config: SynthConfig,
    pub categories: Vec<String>,
    /// Marker words per category, in category order.
    pub markers: Vec<Vec<String>>,
    pub units: Vec<SynthUnit>,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub records: Vec<RawRecord>,
    pub boundaries: Vec<GeoUnit>,
    pub truth: DemographicTable,
    pub params: SynthParams,
}

/// Lowercase pseudo-word for index `i`; never a stopword.
pub fn synth_word(i: usize) -> String {
    let mut s = String::from("z");
    let mut n = i;
    for _ in 0..3 {
        s.push((b'a' + (n % 26) as u8) as char);
        n /= 26;
    }
    while n > 0 {
        s.push((b'a' + (n % 26) as u8) as char);
        n /= 26;
    }
    s
}

/// 15-digit block geoid of grid cell `i`: ten blocks per blockgroup, four
/// blockgroups per tract, 25 tracts per county.
pub fn synth_geoid(i: usize) -> String {
    let block = i % 10;
    let bg = (i / 10) % 4 + 1;
    let tract = (i / 40) % 25 + 1;
    let county = i / 1000 + 1;
    format!("48{county:03}{:06}{bg}{block:03}", tract * 100)
}

/// Integer counts summing to `total`, apportioned by largest remainder.
pub fn apportion(total: u64, proportions: &[f64]) -> Vec<u64> {
    let exact: Vec<f64> = proportions.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let mut left = total - counts.iter().sum::<u64>().min(total);
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &j in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[j] += 1;
        left -= 1;
    }
    counts
}

fn draw_proportions(rng: &mut ChaCha8Rng, k: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("validated concentration");
    let draws: Vec<f64> = (0..k)
        .map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    let mut props: Vec<f64> = draws.iter().map(|d| d / total).collect();
    let head: f64 = props[..k - 1].iter().sum();
    props[k - 1] = 1.0 - head;
    props
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthData> {
    let cats = cfg.validate()?;
    let k = cats.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let words: Vec<String> = (0..cfg.vocab_size).map(synth_word).collect();
    let n_markers = cfg.markers_per_category * k;
    let markers: Vec<Vec<String>> = words[..n_markers]
        .chunks(cfg.markers_per_category.max(1))
        .map(<[String]>::to_vec)
        .collect();
    let background = &words[n_markers..];
    let zipf = (!background.is_empty()).then(|| {
        WeightedIndex::new((1..=background.len()).map(|r| 1.0 / r as f64)).expect("weights")
    });

    let cols = (cfg.n_units as f64).sqrt().ceil() as usize;
    let (lon0, lat0) = cfg.origin;
    let (ln_lo, ln_hi) = ((cfg.pop_min as f64).ln(), (cfg.pop_max as f64).ln());

    let mut boundaries = Vec::with_capacity(cfg.n_units);
    let mut truth = DemographicTable::new();
    let mut units = Vec::with_capacity(cfg.n_units);
    let mut records = Vec::new();
    let mut next_user: u64 = 1;

    for i in 0..cfg.n_units {
        let geoid = synth_geoid(i);
        let x0 = lon0 + (i % cols) as f64 * cfg.cell_size;
        let y0 = lat0 + (i / cols) as f64 * cfg.cell_size;
        let boundary = PolygonSet::rectangle(x0, y0, x0 + cfg.cell_size, y0 + cfg.cell_size);

        let proportions = draw_proportions(&mut rng, k, cfg.concentration);
        let population = rng.random_range(ln_lo..=ln_hi).exp().round() as u64;
        let population = population.clamp(cfg.pop_min, cfg.pop_max);
        let counts = apportion(population, &proportions);
        let users = Binomial::new(population, cfg.user_rate)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(&mut rng)
            .max(1);

        let mut unit = GeoUnit::new(geoid.clone(), boundary)?;
        unit.population = Some(population);
        unit.demographics
            .insert(cfg.variable.clone(), counts.clone());
        truth.insert(&geoid, crate::geomap::POPULATION, "", population)?;
        for (cat, &c) in cats.iter().zip(&counts) {
            truth.insert(&geoid, &cfg.variable, cat, c)?;
        }

        let writer = WeightedIndex::new(&proportions).expect("proportions sum to one");
        for _ in 0..users {
            let user_id = next_user;
            next_user += 1;
            let cat = writer.sample(&mut rng);
            let n_records = rng.random_range(cfg.records_per_user.0..=cfg.records_per_user.1);
            for _ in 0..n_records {
                let tokens: Vec<&str> = (0..cfg.tokens_per_record)
                    .map(|_| {
                        let marker = zipf.is_none() || rng.random_bool(cfg.marker_rate);
                        if marker {
                            let m = &markers[cat];
                            m[rng.random_range(0..m.len())].as_str()
                        } else {
                            background[zipf.as_ref().expect("background").sample(&mut rng)].as_str()
                        }
                    })
                    .collect();
                let rec = RawRecord {
                    latitude: y0 + cfg.cell_size * rng.random_range(0.05..0.95),
                    longitude: x0 + cfg.cell_size * rng.random_range(0.05..0.95),
                    user_id,
                    text: tokens.join(" "),
                    followers_count: rng.random_range(0..=1000),
                    friends_count: rng.random_range(0..=1000),
                    is_retweet: false,
                    has_url: false,
                    urls: Vec::new(),
                    geoid: None,
                };
                if cfg.noise_rate > 0.0 && rng.random_bool(cfg.noise_rate) {
                    let mut noisy = rec.clone();
                    match rng.random_range(0..3) {
                        0 => {
                            noisy.has_url = true;
                            noisy.urls = vec![format!("https://example.com/{user_id}")];
                        }
                        1 => {
                            noisy.is_retweet = true;
                            noisy.text = format!("RT {}", noisy.text);
                        }
                        _ => noisy.followers_count = rng.random_range(1001..100_000),
                    }
                    records.push(noisy);
                }
                records.push(rec);
            }
        }

        units.push(SynthUnit {
            geoid,
            proportions,
            population,
            users,
            counts,
        });
        boundaries.push(unit);
    }

    Ok(SynthData {
        records,
        boundaries,
        truth,
        params: SynthParams {
            config: cfg.clone(),
            categories: cats.iter().map(|c| c.to_string()).collect(),
            markers,
            units,
        },
    })
}

#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub records: PathBuf,
    pub boundaries: PathBuf,
    pub truth: PathBuf,
    pub params: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: &Path) -> Self {
        SynthPaths {
            records: dir.join("records.jsonl"),
            boundaries: dir.join("boundaries.geojson"),
            truth: dir.join("truth.csv"),
            params: dir.join("synth_params.json"),
        }
    }
}

pub fn write_synthetic(data: &SynthData, dir: &Path) -> Result<SynthPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = SynthPaths::in_dir(dir);
    let mut records = String::new();
    for r in &data.records {
        records.push_str(&serialize_record(r));
        records.push('\n');
    }
    let params = serde_json::to_string_pretty(&data.params)?;
    for (path, body) in [
        (&paths.records, records),
        (&paths.boundaries, write_boundaries(&data.boundaries)),
        (&paths.truth, data.truth.to_csv()),
        (&paths.params, params),
    ] {
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(paths)
}
