//! Importance score files: CSV with a one-line JSON metadata header.
//!
//! ```text
//! # {"method":"winit-n8","config_hash":"...","seed":0,...}
//! sample_id,feature,step,score
//! s00000,0,0,0.0125
//! ```
//!
//! Scores print in shortest round-trip form, so write-read-write is
//! byte-stable. Wall-clock timings are deliberately kept out of these files;
//! a rerun with the same config produces identical bytes.

use super::runner::ImportanceResult;
use super::ExplainError;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMeta {
    pub method: String,
    pub config_hash: String,
    pub seed: u64,
    pub window: usize,
    pub mc_samples: usize,
    pub num_features: usize,
    pub num_steps: usize,
}

const SCORE_COLUMNS: &str = "sample_id,feature,step,score";
const RAW_COLUMNS: &str = "sample_id,feature,start,horizon,contribution";

fn check_id(id: &str) -> Result<(), ExplainError> {
    if id.is_empty() || id.contains(',') || id.contains('\n') || id.contains('\r') {
        return Err(ExplainError::InvalidArgument(format!(
            "sample id {id:?} cannot be stored in a comma-separated file"
        )));
    }
    Ok(())
}

/// Writes aggregated scores for a batch of samples.
pub fn write_importance<W: Write>(
    mut w: W,
    meta: &ImportanceMeta,
    results: &[ImportanceResult],
) -> Result<(), ExplainError> {
    for r in results {
        check_id(&r.sample_id)?;
        if r.scores.dim() != (meta.num_features, meta.num_steps) {
            return Err(ExplainError::InvalidArgument(format!(
                "sample {} has score shape {:?}, metadata says ({}, {})",
                r.sample_id,
                r.scores.dim(),
                meta.num_features,
                meta.num_steps
            )));
        }
        if r.method != meta.method {
            return Err(ExplainError::InvalidArgument(format!(
                "sample {} was scored by {}, metadata says {}",
                r.sample_id, r.method, meta.method
            )));
        }
    }
    writeln!(w, "# {}", serde_json::to_string(meta).expect("metadata serializes"))?;
    writeln!(w, "{SCORE_COLUMNS}")?;
    for r in results {
        for f in 0..meta.num_features {
            for t in 0..meta.num_steps {
                writeln!(w, "{},{f},{t},{}", r.sample_id, r.scores[[f, t]])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads scores back. Wall-clock fields are not stored and come back as
/// zero; raw contribution tables live in a separate file and come back as
/// `None`.
pub fn read_importance<R: BufRead>(
    r: R,
) -> Result<(ImportanceMeta, Vec<ImportanceResult>), ExplainError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or(ExplainError::Format { line: 1, reason: "empty file".into() })?;
    let json = header
        .strip_prefix("# ")
        .ok_or_else(|| ExplainError::Format {
            line: 1,
            reason: "expected a `# {json}` metadata header".into(),
        })?;
    let meta: ImportanceMeta = serde_json::from_str(json).map_err(|e| ExplainError::Format {
        line: 1,
        reason: format!("bad metadata: {e}"),
    })?;
    let columns = lines
        .next()
        .transpose()?
        .ok_or(ExplainError::Format { line: 2, reason: "missing column header".into() })?;
    if columns != SCORE_COLUMNS {
        return Err(ExplainError::Format {
            line: 2,
            reason: format!("expected columns {SCORE_COLUMNS:?}, found {columns:?}"),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut scores: HashMap<String, (Array2<f64>, usize)> = HashMap::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 3;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| ExplainError::Format { line: line_no, reason };
        let mut parts = line.splitn(4, ',');
        let id = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| bad("missing sample id".into()))?;
        let feature: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad feature index".into()))?;
        let step: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad step index".into()))?;
        let score: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad score".into()))?;
        if !score.is_finite() {
            return Err(bad(format!("non-finite score {score}")));
        }
        if feature >= meta.num_features || step >= meta.num_steps {
            return Err(bad(format!(
                "cell ({feature}, {step}) outside ({}, {})",
                meta.num_features, meta.num_steps
            )));
        }
        let entry = scores.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            (Array2::zeros((meta.num_features, meta.num_steps)), 0)
        });
        entry.0[[feature, step]] = score;
        entry.1 += 1;
    }

    let expect = meta.num_features * meta.num_steps;
    let mut results = Vec::with_capacity(order.len());
    for id in order {
        let (grid, count) = scores.remove(&id).expect("tracked sample");
        if count != expect {
            return Err(ExplainError::InvalidArgument(format!(
                "sample {id} has {count} cells, expected {expect}"
            )));
        }
        results.push(ImportanceResult {
            sample_id: id,
            method: meta.method.clone(),
            scores: grid,
            raw: None,
            wall_seconds: 0.0,
        });
    }
    Ok((meta, results))
}

/// Writes per-horizon contribution tables for results that carry them.
pub fn write_windowed<W: Write>(
    mut w: W,
    meta: &ImportanceMeta,
    results: &[ImportanceResult],
) -> Result<(), ExplainError> {
    writeln!(w, "# {}", serde_json::to_string(meta).expect("metadata serializes"))?;
    writeln!(w, "{RAW_COLUMNS}")?;
    for r in results {
        check_id(&r.sample_id)?;
        let Some(tables) = &r.raw else { continue };
        for ws in tables {
            for (s, row) in ws.contributions.iter().enumerate() {
                for (n, c) in row.iter().enumerate() {
                    writeln!(w, "{},{},{s},{n},{c}", r.sample_id, ws.feature)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::engine::testkit::{toy_models, toy_series};
    use super::super::runner::{explain_sample, ExplainConfig, Method};
    use super::*;
    use crate::seqdata::TimeSeriesSample;

    fn meta(method: &str) -> ImportanceMeta {
        ImportanceMeta {
            method: method.to_string(),
            config_hash: "0000".to_string(),
            seed: 7,
            window: 3,
            mc_samples: 2,
            num_features: 3,
            num_steps: 10,
        }
    }

    fn sample_results(method: Method) -> Vec<ImportanceResult> {
        let (predictor, generator) = toy_models(3, 8);
        let cfg = ExplainConfig {
            window: 3,
            mc_samples: 2,
            seed: 7,
            keep_raw: method == Method::Winit,
            ..ExplainConfig::new(method)
        };
        (0..3)
            .map(|i| {
                let sample = TimeSeriesSample {
                    id: format!("s{i:05}"),
                    values: toy_series(3, 10),
                    labels: vec![0; 10],
                    gt_importance: None,
                };
                explain_sample(&predictor, &generator, &sample, &cfg).unwrap()
            })
            .collect()
    }

    #[test]
    fn roundtrip_is_bit_exact_and_byte_stable() {
        let results = sample_results(Method::Winit);
        let meta = meta("winit-n3");
        let mut buf = Vec::new();
        write_importance(&mut buf, &meta, &results).unwrap();
        let (meta_back, read) = read_importance(buf.as_slice()).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(read.len(), results.len());
        for (a, b) in results.iter().zip(&read) {
            assert_eq!(a.sample_id, b.sample_id);
            for (x, y) in a.scores.iter().zip(b.scores.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let mut again = Vec::new();
        write_importance(&mut again, &meta_back, &read).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn windowed_tables_are_written() {
        let results = sample_results(Method::Winit);
        let mut buf = Vec::new();
        write_windowed(&mut buf, &meta("winit-n3"), &results).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# {"));
        assert_eq!(lines.next().unwrap(), "sample_id,feature,start,horizon,contribution");
        // 3 samples x 3 features x sum over starts of min(3, 10 - s) cells.
        let cells: usize = (0..10).map(|s| 3usize.min(10 - s)).sum();
        assert_eq!(lines.count(), 3 * 3 * cells);
    }

    #[test]
    fn rejects_inconsistent_batches() {
        let results = sample_results(Method::Ifit);
        let mut buf = Vec::new();
        let err = write_importance(&mut buf, &meta("fit"), &results).unwrap_err();
        assert!(matches!(err, ExplainError::InvalidArgument(_)));
        let mut wrong = meta("ifit");
        wrong.num_steps = 9;
        let err = write_importance(&mut buf, &wrong, &results).unwrap_err();
        assert!(matches!(err, ExplainError::InvalidArgument(_)));
    }

    #[test]
    fn read_errors_carry_line_numbers() {
        let results = sample_results(Method::Ifit);
        let meta = meta("ifit");
        let mut buf = Vec::new();
        write_importance(&mut buf, &meta, &results).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let mangled = text.replace("s00001,2,3,", "s00001,2,three,");
        match read_importance(mangled.as_bytes()).unwrap_err() {
            ExplainError::Format { line, reason } => {
                assert!(line > 2, "line {line}");
                assert!(reason.contains("step"), "{reason}");
            }
            other => panic!("unexpected error {other:?}"),
        }

        let headless = text.replacen("# {", "{", 1);
        assert!(matches!(
            read_importance(headless.as_bytes()).unwrap_err(),
            ExplainError::Format { line: 1, .. }
        ));

        let mut truncated: Vec<&str> = text.lines().collect();
        truncated.pop();
        let truncated = truncated.join("\n");
        assert!(matches!(
            read_importance(truncated.as_bytes()).unwrap_err(),
            ExplainError::InvalidArgument(_)
        ));
    }

    #[test]
    fn rejects_ids_that_break_the_format() {
        let mut results = sample_results(Method::Ifit);
        results[0].sample_id = "a,b".to_string();
        let mut buf = Vec::new();
        assert!(matches!(
            write_importance(&mut buf, &meta("ifit"), &results).unwrap_err(),
            ExplainError::InvalidArgument(_)
        ));
    }
}
