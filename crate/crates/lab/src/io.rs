//! Sample files: one observation per row, comma separated, optional header.

use std::io::{Read, Write};
use std::path::Path;

use copula_core::{Sample, SampleKind, TiePolicy};

use crate::error::{ConfigError, LabError, Result};

/// Parses rows of floats. A first row that does not parse is taken as a
/// header; any later unparsable field is an error.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(ConfigError::Argument(format!("row {}: {e}", i + 1)).into()),
        }
    }
    if let Some(first) = rows.first() {
        let d = first.len();
        if let Some(k) = rows.iter().position(|r| r.len() != d) {
            return Err(ConfigError::Argument(format!(
                "row {} has {} fields, expected {d}",
                k + 1,
                rows[k].len()
            ))
            .into());
        }
    }
    Ok(rows)
}

pub fn read_sample(path: &Path, kind: SampleKind, ties: TiePolicy) -> Result<Sample> {
    let file = std::fs::File::open(path).map_err(|e| LabError::io(path, e))?;
    let rows = read_rows(file)?;
    Ok(Sample::from_rows(&rows, kind, ties)?)
}

/// Header `u1,..,ud` then one row per observation.
pub fn write_sample<W: Write>(out: W, sample: &Sample) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=sample.dim()).map(|j| format!("u{j}")))?;
    for i in 0..sample.n() {
        w.write_record(sample.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush().map_err(|e| LabError::Io {
        path: "<output>".into(),
        source: e,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let a = read_rows("u1,u2\n0.1,0.2\n0.3,0.4\n".as_bytes()).unwrap();
        let b = read_rows("0.1,0.2\n0.3,0.4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
    }

    #[test]
    fn ragged_and_garbage_rows_fail() {
        assert!(read_rows("0.1,0.2\n0.3\n".as_bytes()).is_err());
        assert!(read_rows("0.1,0.2\nx,0.4\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read() {
        let s = copula_core::CopulaModel::independence(3)
            .sample(20, 4)
            .unwrap();
        let mut buf = Vec::new();
        write_sample(&mut buf, &s).unwrap();
        let rows = read_rows(buf.as_slice()).unwrap();
        let back = Sample::from_rows(&rows, SampleKind::PseudoUniform, TiePolicy::Reject).unwrap();
        assert_eq!(back.data(), s.data());
    }
}
