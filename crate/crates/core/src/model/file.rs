//! Text model format: `key=value` header lines, then one `[weights <category>]`
//! section per modeled category listing nonzero weights as `index \t value`.

use std::collections::BTreeMap;
use std::io::BufRead;

use super::{RegressionModel, TrainConfig, Variant, Weights};
use crate::error::{Error, Result};

const MAGIC: &str = "#geodemo-model v1";

pub fn write_model(m: &RegressionModel) -> String {
    let t = &m.train;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
    kv("variant", m.variant.to_string());
    kv("variable", m.variable.clone());
    kv("categories", m.categories.join(","));
    kv("k", m.k().to_string());
    kv("q", m.denominator.map_or("-".into(), |q| q.to_string()));
    kv("D", m.dim.to_string());
    kv("features", m.features.to_string());
    kv("vocab", m.vocab_fingerprint.clone());
    kv("lambda", t.lambda.to_string());
    kv("eta0", t.eta0.to_string());
    kv("rho", t.rho.to_string());
    kv("epochs", t.epochs.to_string());
    kv("alpha", t.alpha.to_string());
    kv("intercept", t.intercept.to_string());
    kv("seed", t.seed.to_string());
    for (name, w) in m.modeled_categories().iter().zip(&m.weights) {
        out.push_str(&format!("[weights {name}]\n"));
        if t.intercept {
            out.push_str(&format!("intercept\t{}\n", w.intercept));
        }
        for (i, v) in w.coef.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            out.push_str(&format!("{i}\t{v}\n"));
        }
    }
    out
}

fn header_value<'a>(h: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    h.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::parse(0, format!("model header lacks {key}")))
}

fn parse_num<T: std::str::FromStr>(h: &BTreeMap<String, String>, key: &str) -> Result<T> {
    header_value(h, key)?
        .parse()
        .map_err(|_| Error::parse(0, format!("bad model header value for {key}")))
}

pub fn read_model<R: BufRead>(input: R) -> Result<RegressionModel> {
    let mut header = BTreeMap::new();
    let mut sections: Vec<(String, Vec<(usize, String)>)> = Vec::new();
    let mut saw_magic = false;
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<model>", e))?;
        let lineno = n + 1;
        if line == MAGIC {
            saw_magic = true;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line
            .strip_prefix("[weights ")
            .and_then(|r| r.strip_suffix(']'))
        {
            sections.push((name.to_string(), Vec::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push((lineno, line));
        } else if let Some((k, v)) = line.split_once('=') {
            header.insert(k.to_string(), v.to_string());
        } else {
            return Err(Error::parse(lineno, "expected key=value"));
        }
    }
    if !saw_magic {
        return Err(Error::parse(1, "not a model file"));
    }

    let variant: Variant = header_value(&header, "variant")?.parse()?;
    let categories: Vec<String> = header_value(&header, "categories")?
        .split(',')
        .map(str::to_string)
        .collect();
    let k: usize = parse_num(&header, "k")?;
    if k != categories.len() {
        return Err(Error::parse(0, "k disagrees with categories"));
    }
    let denominator = match header_value(&header, "q")? {
        "-" => None,
        q => Some(q.parse().map_err(|_| Error::parse(0, "bad q"))?),
    };
    let dim: usize = parse_num(&header, "D")?;
    let train = TrainConfig {
        lambda: parse_num(&header, "lambda")?,
        eta0: parse_num(&header, "eta0")?,
        rho: parse_num(&header, "rho")?,
        epochs: parse_num(&header, "epochs")?,
        seed: parse_num(&header, "seed")?,
        variant,
        denominator,
        alpha: parse_num(&header, "alpha")?,
        intercept: parse_num(&header, "intercept")?,
    };

    let mut weights = Vec::with_capacity(sections.len());
    for (_, body) in &sections {
        let mut w = Weights::zeros(dim);
        for (lineno, line) in body {
            let (i, v) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(*lineno, "expected index<TAB>value"))?;
            let v: f64 = v.parse().map_err(|_| Error::parse(*lineno, "bad weight"))?;
            if i == "intercept" {
                w.intercept = v;
                continue;
            }
            let i: usize = i.parse().map_err(|_| Error::parse(*lineno, "bad index"))?;
            if i >= dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: i + 1,
                });
            }
            w.coef[i] = v;
        }
        weights.push(w);
    }

    let model = RegressionModel {
        variant,
        variable: header_value(&header, "variable")?.to_string(),
        categories,
        denominator,
        weights,
        dim,
        features: header_value(&header, "features")?.parse()?,
        vocab_fingerprint: header_value(&header, "vocab")?.to_string(),
        train,
    };
    model.check()?;
    let expected: Vec<&str> = model.modeled_categories();
    let found: Vec<&str> = sections.iter().map(|(n, _)| n.as_str()).collect();
    if expected != found {
        return Err(Error::parse(0, "weight sections do not match categories"));
    }
    Ok(model)
}
