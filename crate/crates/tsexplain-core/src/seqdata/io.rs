//! Line-oriented dataset serialization.
//!
//! The format is JSON-lines: the first line is a header object carrying the
//! shared shape and metadata, every following line is one sample. Floats are
//! written in shortest round-trip form, so read(write(ds)) reproduces every
//! value bit for bit.

use super::{DataError, Dataset, TimeSeriesSample};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Header {
    num_features: usize,
    num_steps: usize,
    num_classes: usize,
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    values: Vec<Vec<f64>>,
    labels: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gt_importance: Option<Vec<Vec<u8>>>,
}

/// Writes the dataset to any sink. Fails without writing the offending line
/// if a sample violates the header shapes or contains non-finite values.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<(), DataError> {
    dataset.validate()?;
    let header = Header {
        num_features: dataset.num_features,
        num_steps: dataset.num_steps,
        num_classes: dataset.num_classes,
        metadata: dataset.metadata.clone(),
    };
    serde_json::to_writer(&mut out, &header).map_err(io_err)?;
    out.write_all(b"\n")?;
    for s in &dataset.samples {
        let record = Record {
            id: s.id.clone(),
            values: (0..dataset.num_features)
                .map(|d| s.values.row(d).to_vec())
                .collect(),
            labels: s.labels.clone(),
            gt_importance: s
                .gt_importance
                .as_ref()
                .map(|gt| (0..dataset.num_features).map(|d| gt.row(d).to_vec()).collect()),
        };
        serde_json::to_writer(&mut out, &record).map_err(io_err)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_dataset_file<P: AsRef<Path>>(dataset: &Dataset, path: P) -> Result<(), DataError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a dataset, validating every record against the header. Errors name
/// the 1-based line they occurred on.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Dataset, DataError> {
    let mut lines = reader.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(DataError::Format {
        line: 1,
        reason: "missing header line".into(),
    })?;
    let header: Header = serde_json::from_str(&header_line?).map_err(|e| DataError::Format {
        line: 1,
        reason: format!("bad header: {e}"),
    })?;
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| DataError::Format {
            line: line_no,
            reason: format!("bad record: {e}"),
        })?;
        let sample = record_to_sample(record, &header).map_err(|reason| DataError::Format {
            line: line_no,
            reason,
        })?;
        samples.push(sample);
    }
    let dataset = Dataset {
        num_features: header.num_features,
        num_steps: header.num_steps,
        num_classes: header.num_classes,
        metadata: header.metadata,
        samples,
    };
    dataset.validate()?;
    Ok(dataset)
}

pub fn read_dataset_file<P: AsRef<Path>>(path: P) -> Result<Dataset, DataError> {
    read_dataset(BufReader::new(File::open(path)?))
}

fn record_to_sample(record: Record, header: &Header) -> Result<TimeSeriesSample, String> {
    let values = rows_to_matrix(&record.values, header, &record.id, "values")?;
    let gt = match record.gt_importance {
        None => None,
        Some(rows) => {
            let as_f64: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().map(|&v| f64::from(v)).collect())
                .collect();
            let m = rows_to_matrix(&as_f64, header, &record.id, "gt_importance")?;
            Some(m.mapv(|v| v as u8))
        }
    };
    if record.labels.len() != header.num_steps {
        return Err(format!(
            "sample {}: labels length {} does not match num_steps {}",
            record.id,
            record.labels.len(),
            header.num_steps
        ));
    }
    Ok(TimeSeriesSample {
        id: record.id,
        values,
        labels: record.labels,
        gt_importance: gt,
    })
}

fn rows_to_matrix(
    rows: &[Vec<f64>],
    header: &Header,
    id: &str,
    field: &str,
) -> Result<Array2<f64>, String> {
    if rows.len() != header.num_features {
        return Err(format!(
            "sample {id}: {field} has {} rows for {} features",
            rows.len(),
            header.num_features
        ));
    }
    let mut m = Array2::zeros((header.num_features, header.num_steps));
    for (d, row) in rows.iter().enumerate() {
        if row.len() != header.num_steps {
            return Err(format!(
                "sample {id}: {field} row {d} has {} entries for {} steps",
                row.len(),
                header.num_steps
            ));
        }
        for (t, v) in row.iter().enumerate() {
            m[[d, t]] = *v;
        }
    }
    Ok(m)
}

fn io_err(e: serde_json::Error) -> DataError {
    DataError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}
