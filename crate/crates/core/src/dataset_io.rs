//! JSON-lines dataset files: a header line carrying the [`DatasetConfig`],
//! then one record per sample. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chebyshev::{MomentVector, Spectrum};
use crate::error::{Error, Result};
use crate::response::{DatasetConfig, DatasetSample, SkewedGaussianParams};

pub const DATASET_FORMAT: &str = "chebkern-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: DatasetConfig,
}

#[derive(Serialize, Deserialize)]
struct Record {
    index: usize,
    mu: f64,
    sigma: f64,
    alpha: f64,
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    moments: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_c: Option<Vec<f64>>,
}

pub fn write_dataset(path: &Path, config: &DatasetConfig, samples: &[DatasetSample]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        config: config.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for s in samples {
        let record = Record {
            index: s.index,
            mu: s.params.mu,
            sigma: s.params.sigma,
            alpha: s.params.alpha,
            eigenvalues: s.spectrum.eigenvalues().to_vec(),
            weights: s.spectrum.weights().to_vec(),
            moments: s.moments.values().to_vec(),
            target_c: s.target_c.clone(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads only the header line.
pub fn read_dataset_config(path: &Path) -> Result<DatasetConfig> {
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    parse_header(&line)
}

fn parse_header(line: &str) -> Result<DatasetConfig> {
    let header: Header = serde_json::from_str(line)?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset header {} v{}",
            header.format, header.version
        )));
    }
    header.config.validate()?;
    Ok(header.config)
}

pub fn read_dataset(path: &Path) -> Result<(DatasetConfig, Vec<DatasetSample>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("dataset file is empty".into()))??;
    let config = parse_header(&header)?;
    let mut samples = Vec::with_capacity(config.n_samples);
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("record {}: {e}", n + 1)))?;
        let moments = MomentVector::new(rec.moments)?;
        if moments.len() != config.moment_count {
            return Err(Error::Format(format!(
                "record {} has {} moments, header says {}",
                rec.index,
                moments.len(),
                config.moment_count
            )));
        }
        if let Some(c) = &rec.target_c {
            if c.len() != moments.len() {
                return Err(Error::mismatch("stored target", moments.len(), c.len()));
            }
        }
        samples.push(DatasetSample {
            index: rec.index,
            params: SkewedGaussianParams::new(rec.mu, rec.sigma, rec.alpha, 1.0)?,
            spectrum: Spectrum::new(rec.eigenvalues, rec.weights)?,
            moments,
            target_c: rec.target_c,
        });
    }
    if samples.len() != config.n_samples {
        return Err(Error::Format(format!(
            "header promises {} samples, file has {}",
            config.n_samples,
            samples.len()
        )));
    }
    Ok((config, samples))
}
