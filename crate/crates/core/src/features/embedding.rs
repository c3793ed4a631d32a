//! Text embedding files: `dim=<d>` on the first line, then one row of `d`
//! space-separated floats per frame.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ContextVector, FeatureError};

pub fn load_embedding_stream(path: impl AsRef<Path>) -> Result<Vec<ContextVector>, FeatureError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_embedding_stream(&text)
}

pub fn parse_embedding_stream(text: &str) -> Result<Vec<ContextVector>, FeatureError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let dim = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| FeatureError::BadHeader {
            line: 1,
            found: header.to_string(),
        })?;

    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut values = Vec::with_capacity(dim);
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| FeatureError::MalformedRow {
                line: line_no,
                token: token.to_string(),
            })?;
            if !v.is_finite() {
                return Err(FeatureError::MalformedRow {
                    line: line_no,
                    token: token.to_string(),
                });
            }
            values.push(v);
        }
        if values.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                line: line_no,
                expected: dim,
                found: values.len(),
            });
        }
        let index = out.len() as u64;
        out.push(ContextVector::new(values, index));
    }
    Ok(out)
}

/// Serialize contexts in the embedding file format. Floats are written in
/// shortest round-trip form, so reading the file back is lossless.
pub fn write_embedding_stream(
    path: impl AsRef<Path>,
    dim: usize,
    contexts: &[ContextVector],
) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let mut text = format!("dim={dim}\n");
    for c in contexts {
        let mut first = true;
        for v in &c.values {
            if !first {
                text.push(' ');
            }
            first = false;
            let _ = write!(text, "{v:?}");
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })
}
