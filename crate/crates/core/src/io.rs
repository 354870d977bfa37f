//! Sample CSV and JSON sidecars.
//!
//! Sample files start with `# dim=<d>` (optionally `# seed=<s>`), then one row per
//! observation: d comma-separated floats with 17 significant digits, or `MISSING`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

pub const MISSING: &str = "MISSING";

/// Shortest fixed-width form that round-trips: 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_samples_csv<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# dim={}", data.dim())?;
    writeln!(w, "# seed={}", data.seed())?;
    let mut line = String::new();
    for s in data.iter() {
        line.clear();
        match s {
            Some(r) => {
                for (i, x) in r.iter().enumerate() {
                    if i > 0 {
                        line.push(',');
                    }
                    line.push_str(&format_float(*x));
                }
            }
            None => line.push_str(MISSING),
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: BufRead>(mut r: R) -> Result<Dataset> {
    let mut dim = None;
    let mut seed = 0u64;
    let mut first_data = None;
    let mut line = String::new();
    // Header comments, up to the first data row.
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            let c = c.trim();
            if let Some(v) = c.strip_prefix("dim=") {
                dim = Some(v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad dim header: {e}")))?);
            } else if let Some(v) = c.strip_prefix("seed=") {
                seed = v.trim().parse().map_err(|e| Error::Parse(format!("bad seed header: {e}")))?;
            }
            continue;
        }
        if !t.is_empty() {
            first_data = Some(t.to_string());
            break;
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse("missing `# dim=<d>` header".into()))?;
    let mut data = Dataset::new(dim, seed)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(std::io::Cursor::new(first_data.map(|s| s + "\n").unwrap_or_default()).chain(r));
    let mut row = Vec::with_capacity(dim);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        if rec.len() == 1 && &rec[0] == MISSING {
            data.push_missing();
            continue;
        }
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        row.clear();
        for f in rec.iter() {
            row.push(f.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?);
        }
        data.push_value(&row).map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
    }
    Ok(data)
}

pub fn write_samples_file(data: &Dataset, path: &Path) -> Result<()> {
    write_samples_csv(data, File::create(path)?)
}

pub fn read_samples_file(path: &Path) -> Result<Dataset> {
    read_samples_csv(BufReader::new(File::open(path)?))
}

/// Sidecar describing a simulated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub dim: usize,
    pub n: usize,
    pub n_missing: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

impl DatasetMeta {
    pub fn of(data: &Dataset) -> Self {
        Self { dim: data.dim(), n: data.len(), n_missing: data.missing_count(), seed: data.seed(), true_mean: None, direction: None }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
