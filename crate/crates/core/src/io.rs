//! File formats: matrices as CSV or the `SEPM` binary layout, corrector models and
//! experiment reports as JSON.
//!
//! Reals are written in Rust's shortest round-trip decimal form and JSON is parsed
//! with exact float round-tripping, so every format reproduces values bit for bit.
//!
//! `SEPM` layout (all little-endian):
//!
//! ```text
//! offset 0   magic   b"SEPM"
//! offset 4   version u32 (= 1)
//! offset 8   rows    u64
//! offset 16  cols    u64
//! offset 24  rows * cols IEEE-754 f64, row-major
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corrector::{CorrectorModel, Label, LabeledDataset};
use crate::error::{Result, SepError};
use crate::sampling::{DistributionKind, FeatureMatrix};

pub const BIN_MAGIC: [u8; 4] = *b"SEPM";
pub const BIN_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Bin,
}

impl std::str::FromStr for MatrixFormat {
    type Err = SepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "bin" => Ok(MatrixFormat::Bin),
            other => Err(SepError::domain(format!("unknown matrix format '{other}'"))),
        }
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> SepError {
    SepError::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_real(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let t = tok.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| parse_err(path, line, format!("not a number: '{t}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value '{t}'")));
    }
    Ok(v)
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => !(s.trim().is_empty() || s.starts_with('#')),
            Err(_) => true,
        })
}

/// Parses comma-separated rows; lines starting with `#` and blank lines are skipped.
/// `path` is only used in error messages.
pub fn read_csv<R: BufRead>(reader: R, path: &Path) -> Result<FeatureMatrix> {
    let mut cols = None;
    let mut rows = 0;
    let mut data = Vec::new();
    for (line_no, line) in data_lines(reader) {
        let line = line?;
        let start = data.len();
        for tok in line.split(',') {
            data.push(parse_real(tok, path, line_no)?);
        }
        let arity = data.len() - start;
        match cols {
            None => cols = Some(arity),
            Some(c) if c != arity => {
                return Err(parse_err(path, line_no, format!("expected {c} columns, found {arity}")));
            }
            _ => {}
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(parse_err(path, 0, "no data rows"));
    };
    FeatureMatrix::new(rows, cols, data)
}

pub fn write_csv<W: Write>(matrix: &FeatureMatrix, mut w: W) -> Result<()> {
    for row in matrix.iter_rows() {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bin<R: Read>(mut r: R) -> Result<FeatureMatrix> {
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|_| SepError::Format("truncated SEPM header".into()))?;
    if header[0..4] != BIN_MAGIC {
        return Err(SepError::Format("bad magic, expected SEPM".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != BIN_VERSION {
        return Err(SepError::Format(format!("unsupported SEPM version {version}")));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes"));
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| SepError::Format(format!("matrix {rows}x{cols} too large")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(SepError::Format(format!(
            "expected {} payload bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    FeatureMatrix::new(rows as usize, cols as usize, data)
}

pub fn write_bin<W: Write>(matrix: &FeatureMatrix, mut w: W) -> Result<()> {
    w.write_all(&BIN_MAGIC)?;
    w.write_all(&BIN_VERSION.to_le_bytes())?;
    w.write_all(&(matrix.rows() as u64).to_le_bytes())?;
    w.write_all(&(matrix.cols() as u64).to_le_bytes())?;
    for v in matrix.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    match format {
        MatrixFormat::Csv => read_csv(BufReader::new(file), path),
        MatrixFormat::Bin => read_bin(BufReader::new(file)),
    }
}

pub fn write_matrix(matrix: &FeatureMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        MatrixFormat::Csv => write_csv(matrix, file),
        MatrixFormat::Bin => write_bin(matrix, file),
    }
}

/// Labeled CSV: feature columns followed by a final `positive` or `trash` column.
pub fn read_labeled_csv<R: BufRead>(reader: R, path: &Path) -> Result<LabeledDataset> {
    let mut cols = None;
    let mut rows = 0;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in data_lines(reader) {
        let line = line?;
        let (features, tag) = line
            .rsplit_once(',')
            .ok_or_else(|| parse_err(path, line_no, "expected features followed by a label"))?;
        labels.push(match tag.trim() {
            "positive" => Label::Positive,
            "trash" => Label::Trash,
            other => return Err(parse_err(path, line_no, format!("unknown label '{other}'"))),
        });
        let start = data.len();
        for tok in features.split(',') {
            data.push(parse_real(tok, path, line_no)?);
        }
        let arity = data.len() - start;
        match cols {
            None => cols = Some(arity),
            Some(c) if c != arity => {
                return Err(parse_err(path, line_no, format!("expected {c} feature columns, found {arity}")));
            }
            _ => {}
        }
        rows += 1;
    }
    let Some(cols) = cols else {
        return Err(parse_err(path, 0, "no data rows"));
    };
    LabeledDataset::new(FeatureMatrix::new(rows, cols, data)?, labels)
}

pub fn read_labeled(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    read_labeled_csv(BufReader::new(File::open(path)?), path)
}

pub fn write_labeled_csv<W: Write>(data: &LabeledDataset, mut w: W) -> Result<()> {
    for (row, label) in data.features().iter_rows().zip(data.labels()) {
        for v in row {
            write!(w, "{v},")?;
        }
        writeln!(w, "{}", label.as_str())?;
    }
    w.flush()?;
    Ok(())
}

pub fn model_to_json(model: &CorrectorModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(model)?)
}

pub fn model_from_json(text: &str) -> Result<CorrectorModel> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_model(model: &CorrectorModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(model)? + "\n")?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<CorrectorModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

/// Monte Carlo configuration; echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distributions: Vec<DistributionKind>,
    pub n_list: Vec<usize>,
    pub m: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() || self.n_list.is_empty() {
            return Err(SepError::domain("distributions and n_list must be non-empty"));
        }
        if self.distributions.contains(&DistributionKind::Ellipsoid) {
            return Err(SepError::domain("ellipsoid cells are not supported in experiments; use `sample`"));
        }
        if self.n_list.contains(&0) {
            return Err(SepError::domain("every n must be at least 1"));
        }
        if self.m < 2 {
            return Err(SepError::domain("m must be at least 2"));
        }
        if self.repeats == 0 {
            return Err(SepError::domain("repeats must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub distribution: DistributionKind,
    pub n: usize,
    pub f1_min: f64,
    pub f1_median: f64,
    pub f1_max: f64,
    /// One census value per repeat, in repeat order.
    pub f1_values: Vec<f64>,
    /// Maximised single-point bound; present for the ball only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_ball: Option<f64>,
}

/// Monte Carlo report. Wall-clock timing is kept out of this document so that
/// identical configurations produce byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<ExperimentCell>,
    pub tool_version: String,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, cells: Vec<ExperimentCell>) -> Self {
        ExperimentReport { config, cells, tool_version: TOOL_VERSION.to_string() }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        for cell in &self.cells {
            if cell.f1_values.len() != self.config.repeats {
                return Err(SepError::Format(format!(
                    "cell ({}, {}) has {} values, expected {}",
                    cell.distribution.as_str(),
                    cell.n,
                    cell.f1_values.len(),
                    self.config.repeats
                )));
            }
            if cell.theory_ball.is_some() != (cell.distribution == DistributionKind::Ball) {
                return Err(SepError::Format("theory_ball must be present exactly for ball cells".into()));
            }
            if !(cell.f1_min <= cell.f1_median && cell.f1_median <= cell.f1_max) {
                return Err(SepError::Format("f1 summary out of order".into()));
            }
        }
        Ok(())
    }

    pub fn cell(&self, kind: DistributionKind, n: usize) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.distribution == kind && c.n == n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ExperimentReport = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    fn bits(m: &FeatureMatrix) -> Vec<u64> {
        m.data().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn csv_single_value_round_trip() {
        let m = FeatureMatrix::new(1, 1, vec![0.5]).unwrap();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0.5\n");
        assert_eq!(read_csv(Cursor::new(buf), p()).unwrap(), m);
    }

    #[test]
    fn csv_header_and_comments() {
        let text = "# x,y\n1,2\n\n3.5, -4e-3\n";
        let m = read_csv(Cursor::new(text), p()).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.row(1), &[3.5, -4e-3]);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = read_csv(Cursor::new("1,2\n3,4\n5\n"), p()).unwrap_err();
        assert!(matches!(err, SepError::Parse { line: 3, .. }), "{err}");
        let err = read_csv(Cursor::new("1,2\n3,abc\n"), p()).unwrap_err();
        assert!(matches!(err, SepError::Parse { line: 2, .. }), "{err}");
        for bad in ["NaN,1\n", "1,inf\n", "-inf,0\n"] {
            assert!(matches!(read_csv(Cursor::new(bad), p()), Err(SepError::Parse { line: 1, .. })));
        }
        assert!(read_csv(Cursor::new("# only a header\n"), p()).is_err());
    }

    #[test]
    fn bin_round_trip_is_bit_exact() {
        let data = vec![-0.0, 5e-324, f64::MIN_POSITIVE / 3.0, 1.0 / 3.0, -1e300, 2.0];
        let m = FeatureMatrix::new(3, 2, data).unwrap();
        let mut buf = Vec::new();
        write_bin(&m, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SEPM");
        assert_eq!(buf.len(), 24 + 6 * 8);
        let back = read_bin(Cursor::new(buf)).unwrap();
        assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn bin_rejects_corruption() {
        let m = FeatureMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_bin(&m, &mut buf).unwrap();
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(read_bin(Cursor::new(bad_magic)).is_err());
        assert!(read_bin(Cursor::new(&buf[..buf.len() - 1])).is_err());
        let mut nan = buf.clone();
        nan[24..32].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(read_bin(Cursor::new(nan)).is_err());
        let mut version = buf;
        version[4] = 9;
        assert!(read_bin(Cursor::new(version)).is_err());
    }

    #[test]
    fn labeled_csv() {
        let text = "1,2,positive\n3,4,trash\n";
        let d = read_labeled_csv(Cursor::new(text), p()).unwrap();
        assert_eq!(d.labels(), &[Label::Positive, Label::Trash]);
        let mut buf = Vec::new();
        write_labeled_csv(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
        assert!(matches!(
            read_labeled_csv(Cursor::new("1,2,maybe\n"), p()),
            Err(SepError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn experiment_config_validation() {
        let mut c = ExperimentConfig {
            distributions: vec![DistributionKind::Cube],
            n_list: vec![2],
            m: 10,
            repeats: 3,
            seed: 1,
        };
        assert!(c.validate().is_ok());
        c.repeats = 0;
        assert!(c.validate().is_err());
        c.repeats = 1;
        c.distributions.push(DistributionKind::Ellipsoid);
        assert!(c.validate().is_err());
        let text = r#"{"distributions":["ball"],"n_list":[3],"m":5,"repeats":1,"seed":0,"extra":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(rows in 1usize..6, cols in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..rows * cols)
                .map(|_| {
                    let bits: u64 = rng.random();
                    let v = f64::from_bits(bits);
                    if v.is_finite() { v } else { rng.random::<f64>() - 0.5 }
                })
                .collect();
            let m = FeatureMatrix::new(rows, cols, data).unwrap();
            let mut buf = Vec::new();
            write_csv(&m, &mut buf).unwrap();
            let back = read_csv(Cursor::new(buf), p()).unwrap();
            prop_assert_eq!(bits(&back), bits(&m));
        }
    }
}
