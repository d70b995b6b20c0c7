//! Versioned plain-text model files.
//!
//! ```text
//! # smcal model v1
//! loss=krr
//! form=exact
//! kernel=laplace
//! bandwidth=1.0000000000000000e0
//! lambda=...
//! bias=...
//! hilbert_norm_sq=...
//! train_objective=...
//! dim=1
//! [alpha]
//! <one coefficient per line>
//! [support]
//! <one comma-separated input row per line>
//! ```
//!
//! Random-feature models use `form=rff`, add `seed=` and replace the two
//! sections with `[weights]`, `[frequencies]` (one row per feature) and
//! `[phases]`. Every float carries 17 significant digits so a write/read
//! cycle is bit-exact.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{KernelModel, LossFamily, Representation};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, parse_f64};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::points::Points;
use crate::rff::RffMap;

const MAGIC: &str = "# smcal model v1";

pub fn write_model(model: &KernelModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<KernelModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text, &path.display().to_string())
}

pub(crate) fn model_to_string(model: &KernelModel) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    let spec = model.kernel_spec();
    kv("loss", model.loss.model_name().to_string());
    kv(
        "form",
        match model.repr {
            Representation::Exact { .. } => "exact".into(),
            Representation::Rff { .. } => "rff".into(),
        },
    );
    kv("kernel", spec.family().name().to_string());
    kv("bandwidth", fmt_f64(spec.bandwidth()));
    kv("lambda", fmt_f64(model.lambda));
    kv("bias", fmt_f64(model.bias));
    kv("hilbert_norm_sq", fmt_f64(model.hilbert_norm_sq));
    kv("train_objective", fmt_f64(model.train_objective));
    kv("dim", model.input_dim().to_string());
    let mut body = String::new();
    let mut rows = |name: &str, rows: &mut dyn Iterator<Item = String>| {
        body.push('[');
        body.push_str(name);
        body.push_str("]\n");
        for r in rows {
            body.push_str(&r);
            body.push('\n');
        }
    };
    let join = |row: &[f64]| {
        row.iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",")
    };
    match &model.repr {
        Representation::Exact { support, alpha, .. } => {
            rows("alpha", &mut alpha.iter().map(|&a| fmt_f64(a)));
            rows("support", &mut support.rows().map(join));
        }
        Representation::Rff { map, weights } => {
            kv("seed", map.seed().to_string());
            rows("weights", &mut weights.iter().map(|&w| fmt_f64(w)));
            rows(
                "frequencies",
                &mut map.frequencies().chunks(map.input_dim()).map(join),
            );
            rows("phases", &mut map.phases().iter().map(|&p| fmt_f64(p)));
        }
    }
    format!("{MAGIC}\n{out}{body}")
}

pub(crate) fn model_from_str(text: &str, path: &str) -> Result<KernelModel> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(perr(1, format!("missing `{MAGIC}` header"))),
    }
    let mut keys: HashMap<String, (usize, String)> = HashMap::new();
    let mut sections: HashMap<String, Vec<(usize, Vec<f64>)>> = HashMap::new();
    let mut current: Option<String> = None;
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if sections.contains_key(name) {
                return Err(perr(no, format!("duplicate section [{name}]")));
            }
            sections.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
            continue;
        }
        match &current {
            None => {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| perr(no, format!("expected key=value, got `{line}`")))?;
                keys.insert(k.trim().to_string(), (no, v.trim().to_string()));
            }
            Some(sec) => {
                let row = line
                    .split(',')
                    .map(parse_f64)
                    .collect::<Result<Vec<f64>>>()
                    .map_err(|e| perr(no, e.to_string()))?;
                sections
                    .get_mut(sec)
                    .expect("section exists")
                    .push((no, row));
            }
        }
    }
    let get = |k: &str| -> Result<(usize, &str)> {
        keys.get(k)
            .map(|(no, v)| (*no, v.as_str()))
            .ok_or_else(|| perr(1, format!("missing key `{k}`")))
    };
    let num = |k: &str| -> Result<f64> {
        let (no, v) = get(k)?;
        parse_f64(v).map_err(|e| perr(no, e.to_string()))
    };
    let parsed = |k: &str| -> Result<(usize, &str)> { get(k) };

    let (no, loss) = parsed("loss")?;
    let loss: LossFamily = loss.parse().map_err(|e: Error| perr(no, e.to_string()))?;
    let (no, family) = parsed("kernel")?;
    let family: KernelFamily = family.parse().map_err(|e: Error| perr(no, e.to_string()))?;
    let (no, _) = parsed("bandwidth")?;
    let spec = KernelSpec::new(family, num("bandwidth")?).map_err(|e| perr(no, e.to_string()))?;
    let (no, dim) = parsed("dim")?;
    let dim: usize = dim
        .parse()
        .ok()
        .filter(|&d| d > 0)
        .ok_or_else(|| perr(no, format!("invalid dim `{dim}`")))?;

    let section = |name: &str, width: usize| -> Result<Vec<f64>> {
        let rows = sections
            .get(name)
            .ok_or_else(|| perr(1, format!("missing section [{name}]")))?;
        let mut flat = Vec::with_capacity(rows.len() * width);
        for (no, row) in rows {
            if row.len() != width {
                return Err(perr(
                    *no,
                    format!("expected {width} values, got {}", row.len()),
                ));
            }
            flat.extend_from_slice(row);
        }
        Ok(flat)
    };

    let (no, form) = parsed("form")?;
    let repr = match form {
        "exact" => {
            let alpha = section("alpha", 1)?;
            let support = Points::new(section("support", dim)?, dim)?;
            if support.len() != alpha.len() {
                return Err(perr(
                    no,
                    format!(
                        "{} coefficients for {} support rows",
                        alpha.len(),
                        support.len()
                    ),
                ));
            }
            Representation::Exact {
                kernel: spec,
                support,
                alpha,
            }
        }
        "rff" => {
            let (sno, seed) = parsed("seed")?;
            let seed: u64 = seed
                .parse()
                .map_err(|_| perr(sno, format!("invalid seed `{seed}`")))?;
            let weights = section("weights", 1)?;
            let map = RffMap::from_parts(
                &spec,
                seed,
                dim,
                section("frequencies", dim)?,
                section("phases", 1)?,
            )
            .map_err(|e| perr(no, e.to_string()))?;
            if weights.len() != map.feature_count() {
                return Err(perr(
                    no,
                    format!(
                        "{} weights for {} features",
                        weights.len(),
                        map.feature_count()
                    ),
                ));
            }
            Representation::Rff { map, weights }
        }
        other => return Err(perr(no, format!("unknown form `{other}`"))),
    };
    let lambda = num("lambda")?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(perr(get("lambda")?.0, "lambda must be positive".into()));
    }
    Ok(KernelModel {
        loss,
        repr,
        bias: num("bias")?,
        lambda,
        hilbert_norm_sq: num("hilbert_norm_sq")?,
        train_objective: num("train_objective")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_krr, KernelChoice};

    fn fitted(choice: KernelChoice) -> KernelModel {
        let x = Points::new(vec![0.1, -0.3, 0.7, 1.9, -1.2, 0.05, 2.5, -0.8], 2).unwrap();
        fit_krr(&x, &[1, 0, 1, 0], &choice, 0.037).unwrap().0
    }

    #[test]
    fn exact_round_trip_is_bit_exact() {
        let m = fitted(KernelChoice::Exact(
            KernelSpec::new(KernelFamily::Laplace, 0.7).unwrap(),
        ));
        let text = model_to_string(&m);
        let back = model_from_str(&text, "m").unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn rff_round_trip_is_bit_exact() {
        let spec = KernelSpec::new(KernelFamily::Gaussian, 1.3).unwrap();
        let map = RffMap::sample(&spec, 2, 7, 99).unwrap();
        let m = fitted(KernelChoice::Rff(map));
        let back = model_from_str(&model_to_string(&m), "m").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn file_round_trip() {
        let m = fitted(KernelChoice::Exact(
            KernelSpec::new(KernelFamily::Gaussian, 2.0).unwrap(),
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        write_model(&m, &p).unwrap();
        assert_eq!(read_model(&p).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let m = fitted(KernelChoice::Exact(
            KernelSpec::new(KernelFamily::Laplace, 1.0).unwrap(),
        ));
        let text = model_to_string(&m);
        let mut lines: Vec<&str> = text.lines().collect();
        let idx = lines.iter().position(|l| *l == "[alpha]").unwrap() + 1;
        lines[idx] = "oops";
        match model_from_str(&lines.join("\n"), "m") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, idx + 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(model_from_str("loss=krr", "m").is_err());
    }
}
