//! File formats: JSON documents, sample CSVs and atomic output.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BoxSet, ModelError, SampleSet};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(contents).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn from_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("{what}: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values serialize");
    s.push('\n');
    s
}

/// Parses a samples CSV: one header row, then one row of `dim` numbers per sample.
pub fn parse_samples_csv(text: &str, support: &BoxSet) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Input(format!("samples line {line}: {e}")))?;
        if rec.len() != support.dim() {
            return Err(Error::Input(format!(
                "samples line {line}: expected {} values, found {}",
                support.dim(),
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Input(format!("samples line {line}, column {}: bad number {f:?}", j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(row);
    }
    SampleSet::new(points, support).map_err(|e| match e {
        ModelError::SampleOutside { sample, coord, value } => Error::Input(format!(
            "samples line {}: coordinate {coord} = {value} lies outside [{}, {}]",
            sample + 2,
            support.lower()[coord],
            support.upper()[coord]
        )),
        other => other.into(),
    })
}

/// CSV text with header `names` (or `xi0, xi1, …` when `names` is empty).
pub fn samples_csv(samples: &SampleSet, names: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = if names.is_empty() {
        (0..samples.dim()).map(|j| format!("xi{j}")).collect()
    } else {
        names.to_vec()
    };
    w.write_record(&header).expect("writing to memory");
    for p in samples.points() {
        w.write_record(p.iter().map(|v| format!("{v:?}"))).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}
