//! CSV formats: score files (`score,label`), datasets (`x1,…,xd,y`) and
//! prediction files (`value,label`). Lines starting with `#` are comments;
//! `# key=value` comments carry metadata such as `space`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LabeledDataset, Provenance, RecalibrationSet};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::metrics::{PredictionSet, Space};
use crate::points::Points;

struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_table(text: &str, path: &str) -> Result<Table> {
    let mut meta = Vec::new();
    let mut header = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if header.is_none() {
            header = Some(fields);
        } else {
            rows.push((i + 1, fields));
        }
    }
    let header = header.ok_or_else(|| Error::input(format!("{path}: file has no header")))?;
    if rows.is_empty() {
        return Err(Error::input(format!("{path}: file has no data rows")));
    }
    Ok(Table { meta, header, rows })
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_value(path: &str, line: usize, field: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(
            path,
            line,
            format!("`{field}` is not a finite number"),
        )),
    }
}

fn parse_label(path: &str, line: usize, field: &str) -> Result<u8> {
    match field.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        Ok(_) => Err(Error::input(format!(
            "{path}:{line}: label `{field}` is not 0 or 1"
        ))),
        Err(_) => Err(parse_err(path, line, format!("`{field}` is not a label"))),
    }
}

fn expect_header(table: &Table, path: &str, expected: &[&str]) -> Result<()> {
    if table
        .header
        .iter()
        .map(String::as_str)
        .eq(expected.iter().copied())
    {
        Ok(())
    } else {
        Err(Error::input(format!(
            "{path}: expected header `{}`, found `{}`",
            expected.join(","),
            table.header.join(",")
        )))
    }
}

/// Reads `value,label` pairs from a two-column table.
fn read_pairs(table: &Table, path: &str) -> Result<(Vec<f64>, Vec<u8>)> {
    let mut values = Vec::with_capacity(table.rows.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        if fields.len() != 2 {
            return Err(parse_err(
                path,
                *line,
                format!("expected 2 fields, got {}", fields.len()),
            ));
        }
        values.push(parse_value(path, *line, &fields[0])?);
        labels.push(parse_label(path, *line, &fields[1])?);
    }
    Ok((values, labels))
}

fn declared_space(table: &Table, path: &str) -> Result<Option<Space>> {
    table
        .meta("space")
        .map(|s| {
            s.parse::<Space>()
                .map_err(|e| Error::input(format!("{path}: {e}")))
        })
        .transpose()
}

/// Parses a score CSV into one-dimensional recalibration inputs.
pub fn build_recalibration_set(path: &Path) -> Result<RecalibrationSet> {
    let name = path.display().to_string();
    let table = parse_table(&read_text(path)?, &name)?;
    expect_header(&table, &name, &["score", "label"])?;
    let (scores, labels) = read_pairs(&table, &name)?;
    let source = table
        .meta("source")
        .map_or_else(|| name.clone(), str::to_string);
    RecalibrationSet::new(scores, labels, source, declared_space(&table, &name)?)
}

pub fn write_scores(path: &Path, set: &RecalibrationSet) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# source={}", set.source_model_id).unwrap();
    if let Some(space) = set.space {
        writeln!(out, "# space={space}").unwrap();
    }
    out.push_str("score,label\n");
    for (s, l) in set.scores.iter().zip(&set.labels) {
        writeln!(out, "{},{l}", fmt_f64(*s)).unwrap();
    }
    write_text(path, &out)
}

pub fn write_dataset(path: &Path, data: &LabeledDataset) -> Result<()> {
    let mut out = String::new();
    let prov = match data.provenance {
        Provenance::SyntheticGaussian => "synthetic_gaussian",
        Provenance::ScoreFile => "score_file",
        Provenance::RecalibrationDerived => "recalibration_derived",
    };
    writeln!(out, "# provenance={prov}").unwrap();
    if let Some(seed) = data.seed {
        writeln!(out, "# seed={seed}").unwrap();
    }
    let header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{},y", header.join(",")).unwrap();
    for (row, l) in data.x.rows().zip(&data.y) {
        for v in row {
            out.push_str(&fmt_f64(*v));
            out.push(',');
        }
        writeln!(out, "{l}").unwrap();
    }
    write_text(path, &out)
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let name = path.display().to_string();
    let table = parse_table(&read_text(path)?, &name)?;
    let d = table.header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=d)
        .map(|j| format!("x{j}"))
        .chain(["y".to_string()])
        .collect();
    if d == 0 || table.header != expected {
        return Err(Error::input(format!(
            "{name}: expected header `x1,...,xd,y`, found `{}`",
            table.header.join(",")
        )));
    }
    let mut x = Vec::with_capacity(table.rows.len() * d);
    let mut y = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        if fields.len() != d + 1 {
            return Err(parse_err(
                &name,
                *line,
                format!("expected {} fields, got {}", d + 1, fields.len()),
            ));
        }
        for f in &fields[..d] {
            x.push(parse_value(&name, *line, f)?);
        }
        y.push(parse_label(&name, *line, &fields[d])?);
    }
    let provenance = match table.meta("provenance") {
        Some("score_file") => Provenance::ScoreFile,
        Some("recalibration_derived") => Provenance::RecalibrationDerived,
        _ => Provenance::SyntheticGaussian,
    };
    let seed = table.meta("seed").and_then(|s| s.parse().ok());
    LabeledDataset::new(Points::new(x, d)?, y, provenance, seed)
}

pub fn write_predictions(path: &Path, preds: &PredictionSet) -> Result<()> {
    let mut out = format!("# space={}\nvalue,label\n", preds.space());
    for (v, l) in preds.values().iter().zip(preds.labels()) {
        writeln!(out, "{},{l}", fmt_f64(*v)).unwrap();
    }
    write_text(path, &out)
}

/// Reads a prediction file. The `# space=` comment wins over `default_space`;
/// one of the two must be present.
pub fn read_predictions(path: &Path, default_space: Option<Space>) -> Result<PredictionSet> {
    let name = path.display().to_string();
    let table = parse_table(&read_text(path)?, &name)?;
    expect_header(&table, &name, &["value", "label"])?;
    let space = declared_space(&table, &name)?
        .or(default_space)
        .ok_or_else(|| Error::input(format!("{name}: no `# space=` declaration")))?;
    let (values, labels) = read_pairs(&table, &name)?;
    PredictionSet::new(values, labels, space)
}
