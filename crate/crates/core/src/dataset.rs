//! Binary-response regression data: CSV ingestion, validation and
//! aggregation of exact replicate covariate patterns (EVPs).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{GofError, Result};

/// Observations `(x_i, y_i)` with `y_i` in {0, 1} and an intercept in
/// column 0 of the design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
}

impl Dataset {
    /// Builds a dataset from responses and a design matrix that already
    /// carries its intercept column.
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n {
            return Err(GofError::InvalidInput(format!(
                "design has {} rows but there are {} responses",
                x.nrows(),
                n
            )));
        }
        let d = x.ncols();
        if d == 0 {
            return Err(GofError::InvalidInput("design has no columns".into()));
        }
        if n < d {
            return Err(GofError::TooFewObservations { n, d });
        }
        for (i, &v) in y.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(GofError::NonBinaryResponse {
                    row: i + 1,
                    value: v.to_string(),
                });
            }
        }
        if let Some(i) = (0..n).find(|&i| x[(i, 0)] != 1.0) {
            return Err(GofError::InvalidInput(format!(
                "column 0 must be the intercept (row {} has {})",
                i + 1,
                x[(i, 0)]
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GofError::InvalidInput(
                "design contains non-finite entries".into(),
            ));
        }
        Ok(Self { y, x })
    }

    /// Builds a dataset from covariates without an intercept column.
    pub fn with_intercept(y: DVector<f64>, covariates: &DMatrix<f64>) -> Result<Self> {
        Self::new(y, prepend_intercept(covariates))
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Returns a copy with rows reordered so that new row `k` is old row `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let y = DVector::from_fn(self.n(), |k, _| self.y[order[k]]);
        let x = DMatrix::from_fn(self.n(), self.d(), |k, j| self.x[(order[k], j)]);
        Self { y, x }
    }

    /// Writes the dataset as CSV: a `y` column followed by the non-intercept
    /// covariates `x1..x{d-1}`. Values are written in shortest round-trip form,
    /// so reading the file back reproduces the dataset bit for bit.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        header.extend((1..self.d()).map(|j| format!("x{j}")));
        w.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(self.d());
        for i in 0..self.n() {
            record.clear();
            record.push(format!("{}", self.y[i] as u8));
            record.extend((1..self.d()).map(|j| format!("{:?}", self.x[(i, j)])));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn csv_err(e: csv::Error) -> GofError {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => GofError::Io(io),
            _ => unreachable!(),
        },
        _ => {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
            GofError::Parse {
                row,
                msg: e.to_string(),
            }
        }
    }
}

pub fn prepend_intercept(covariates: &DMatrix<f64>) -> DMatrix<f64> {
    let n = covariates.nrows();
    DMatrix::from_fn(n, covariates.ncols() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            covariates[(i, j - 1)]
        }
    })
}

/// How the intercept column is obtained when loading a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterceptMode {
    /// Prepend a column of ones unless the first covariate column is already
    /// identically one.
    #[default]
    Auto,
    /// Always prepend.
    Prepend,
    /// The first covariate column is the intercept and must be all ones.
    Present,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub response: String,
    pub intercept: InterceptMode,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            response: "y".to_string(),
            intercept: InterceptMode::Auto,
        }
    }
}

/// Reads a delimited file with a header row. Row numbers in errors are file
/// line numbers (the header is line 1).
pub fn load_dataset(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_dataset(std::io::BufReader::new(file), options)
}

pub fn read_dataset<R: Read>(reader: R, options: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let response_col = headers
        .iter()
        .position(|h| h == options.response)
        .ok_or_else(|| GofError::Parse {
            row: 1,
            msg: format!("no response column named {:?}", options.response),
        })?;
    let covariate_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != response_col).collect();

    let mut y = Vec::new();
    let mut values = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(csv_err)?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw = &record[response_col];
        let yi = match raw {
            "0" => 0.0,
            "1" => 1.0,
            other => match other.parse::<f64>() {
                Ok(v) if v == 0.0 || v == 1.0 => v,
                _ => {
                    return Err(GofError::NonBinaryResponse {
                        row,
                        value: other.to_string(),
                    })
                }
            },
        };
        y.push(yi);
        for &j in &covariate_cols {
            let cell = &record[j];
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| GofError::NonNumeric {
                    row,
                    column: headers[j].to_string(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
    }

    let n = y.len();
    let p = covariate_cols.len();
    let covariates = DMatrix::from_row_slice(n, p, &values);
    let first_is_ones = p > 0 && n > 0 && covariates.column(0).iter().all(|&v| v == 1.0);
    let x = match options.intercept {
        InterceptMode::Prepend => prepend_intercept(&covariates),
        InterceptMode::Auto if !first_is_ones => prepend_intercept(&covariates),
        InterceptMode::Auto => covariates,
        InterceptMode::Present => {
            if !first_is_ones {
                return Err(GofError::InvalidInput(
                    "first covariate column is not an intercept column of ones".into(),
                ));
            }
            covariates
        }
    };
    Dataset::new(DVector::from_vec(y), x)
}

/// One distinct covariate row and the Bernoulli trials observed at it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvpCount {
    /// Index of the first observation with this pattern.
    pub first_row: usize,
    pub trials: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvpSummary {
    pub m: usize,
    pub replication_ratio: f64,
    /// Per-EVP counts in order of first appearance.
    pub counts: Vec<EvpCount>,
}

/// Counts distinct covariate rows under exact bitwise equality.
pub fn aggregate_evps(data: &Dataset) -> EvpSummary {
    let x = data.x();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(data.n());
    let mut counts: Vec<EvpCount> = Vec::new();
    for i in 0..data.n() {
        let key: Vec<u64> = x.row(i).iter().map(|v| v.to_bits()).collect();
        let slot = *index.entry(key).or_insert_with(|| {
            counts.push(EvpCount {
                first_row: i,
                trials: 0,
                successes: 0,
            });
            counts.len() - 1
        });
        counts[slot].trials += 1;
        counts[slot].successes += data.y()[i] as usize;
    }
    let m = counts.len();
    EvpSummary {
        m,
        replication_ratio: data.n() as f64 / m as f64,
        counts,
    }
}
