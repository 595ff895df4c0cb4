//! Observed data: covariates always present, response present where d = 1.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    /// Row-major n × d_x covariates.
    x: Vec<f64>,
    y: Vec<Option<f64>>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, x: Vec<f64>, y: Vec<Option<f64>>) -> Result<Self> {
        let d = columns.len();
        if x.len() != d * y.len() {
            return Err(Error::InvalidArgument(format!(
                "covariate buffer has {} values, expected {} × {}",
                x.len(),
                y.len(),
                d
            )));
        }
        Ok(Self { columns, x, y })
    }

    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>], y: Vec<Option<f64>>) -> Result<Self> {
        let x = rows.iter().flatten().copied().collect();
        Self::new(columns, x, y)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d_x(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.columns.len();
        &self.x[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n()).map(move |i| self.row(i))
    }

    #[inline]
    pub fn y(&self, i: usize) -> Option<f64> {
        self.y[i]
    }

    pub fn responses(&self) -> &[Option<f64>] {
        &self.y
    }

    #[inline]
    pub fn observed(&self, i: usize) -> bool {
        self.y[i].is_some()
    }

    pub fn n1(&self) -> usize {
        self.y.iter().filter(|v| v.is_some()).count()
    }

    pub fn n2(&self) -> usize {
        self.n() - self.n1()
    }

    /// Estimation needs at least one observed and one missing response.
    pub fn check_estimable(&self) -> Result<()> {
        let (n1, n2) = (self.n1(), self.n2());
        if n1 == 0 || n2 == 0 {
            return Err(Error::DegenerateData(format!(
                "need n1 >= 1 and n2 >= 1, got n1 = {n1}, n2 = {n2}"
            )));
        }
        Ok(())
    }

    /// Rows selected by index, with repetition.
    pub fn select(&self, indices: &[usize]) -> Self {
        let d = self.d_x();
        let mut x = Vec::with_capacity(indices.len() * d);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self {
            columns: self.columns.clone(),
            x,
            y,
        }
    }

    /// Keep the named covariate columns, in the given order.
    pub fn project(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Spec(format!("declared covariate '{n}' is not a data column")))
            })
            .collect::<Result<Vec<_>>>()?;
        let x = (0..self.n())
            .flat_map(|i| idx.iter().map(move |&j| self.row(i)[j]))
            .collect();
        Self::new(names.to_vec(), x, self.y.clone())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Replace exact matches of `from` with `to` in one covariate column.
    pub fn recode(&mut self, column: usize, from: f64, to: f64) {
        let d = self.d_x();
        for i in 0..self.n() {
            let v = &mut self.x[i * d + column];
            if *v == from {
                *v = to;
            }
        }
    }

    /// Read a CSV with a header row. The response column may hold empty fields or `NA`.
    pub fn read_csv<R: Read>(reader: R, response: &str, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(source, 1, e.to_string()))?.clone();
        let y_col = header.iter().position(|h| h == response).ok_or_else(|| {
            parse_err(
                source,
                1,
                format!("response column '{response}' not found in header"),
            )
        })?;
        let columns: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != y_col)
            .map(|(_, h)| h.to_string())
            .collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let line = k + 2;
            let record = record.map_err(|e| parse_err(source, line, e.to_string()))?;
            if record.len() != header.len() {
                return Err(parse_err(
                    source,
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            for (j, field) in record.iter().enumerate() {
                if j == y_col {
                    y.push(if field.is_empty() || field == "NA" {
                        None
                    } else {
                        Some(parse_number(field).ok_or_else(|| {
                            parse_err(source, line, format!("bad response value '{field}'"))
                        })?)
                    });
                } else {
                    let v = parse_number(field).ok_or_else(|| {
                        parse_err(
                            source,
                            line,
                            format!("bad value '{field}' in column '{}'", &header[j]),
                        )
                    })?;
                    x.push(v);
                }
            }
        }
        Self::new(columns, x, y)
    }

    pub fn read_csv_path(path: &Path, response: &str) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file, response, &path.display().to_string())
    }

    /// Covariates first, response last; missing responses are written as empty fields.
    pub fn write_csv<W: Write>(&self, mut w: W, response: &str) -> Result<()> {
        let mut header = self.columns.join(",");
        header.push(',');
        header.push_str(response);
        writeln!(w, "{header}")?;
        for i in 0..self.n() {
            let mut line = self
                .row(i)
                .iter()
                .map(|v| format_f64(*v))
                .collect::<Vec<_>>()
                .join(",");
            line.push(',');
            if let Some(v) = self.y[i] {
                line.push_str(&format_f64(v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// 17 significant digits, which round-trips every f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_number(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_err(source: &str, line: usize, message: String) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message,
    }
}
