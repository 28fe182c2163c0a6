//! Wildfire dataset: CSV loading, validation, the zero/missing
//! cross-tabulation, covariate standardization, and empirical σ̂ fields.

use std::fmt;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{project_lonlat, Point};

pub const MONTH_MIN: u32 = 3;
pub const MONTH_MAX: u32 = 9;
pub const N_PERIODS: usize = (MONTH_MAX - MONTH_MIN + 1) as usize;
pub const YEAR_MIN: i32 = 1993;
pub const YEAR_MAX: i32 = 2015;

/// One cell-month record. `None` marks a masked (to-predict) value;
/// covariates use NaN for missing entries.
#[derive(Debug, Clone)]
pub struct WildfireRecord {
    pub lon: f64,
    pub lat: f64,
    pub year: i32,
    pub month: u32,
    pub cnt: Option<f64>,
    pub ba: Option<f64>,
    pub covs: Vec<f64>,
}

/// Records plus the derived cell structure (unique lon/lat centers in
/// first-appearance order, projected to planar km).
#[derive(Debug, Clone)]
pub struct WildfireDataset {
    pub records: Vec<WildfireRecord>,
    pub n_covs: usize,
    pub cells: Vec<Point>,
    /// record index → cell index
    pub cell_of: Vec<usize>,
    /// reference latitude of the planar projection
    pub ref_lat: f64,
}

/// Counts of {zero, positive, missing} × {zero, positive, missing} over
/// (CNT, BA) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossTab {
    /// rows: CNT in {0, >0, NA}; columns: BA in {0, >0, NA}
    pub counts: [[usize; 3]; 3],
}

impl CrossTab {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

impl fmt::Display for CrossTab {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12} {:>9} {:>9} {:>9}", "CNT \\ BA", "0", ">0", "NA")?;
        for (label, row) in ["0", ">0", "NA"].iter().zip(&self.counts) {
            writeln!(
                f,
                "{:>12} {:>9} {:>9} {:>9}",
                label, row[0], row[1], row[2]
            )?;
        }
        write!(f, "{:>12} {:>9}", "total", self.total())
    }
}

fn state_index(v: Option<f64>) -> usize {
    match v {
        Some(x) if x == 0.0 => 0,
        Some(_) => 1,
        None => 2,
    }
}

impl WildfireDataset {
    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cross_tab(&self) -> CrossTab {
        let mut counts = [[0usize; 3]; 3];
        for r in &self.records {
            counts[state_index(r.cnt)][state_index(r.ba)] += 1;
        }
        CrossTab { counts }
    }

    /// Year span covered by the records as (first year, number of years).
    pub fn year_span(&self) -> (i32, usize) {
        let min = self.records.iter().map(|r| r.year).min().unwrap_or(YEAR_MIN);
        let max = self.records.iter().map(|r| r.year).max().unwrap_or(YEAR_MIN);
        (min, (max - min + 1) as usize)
    }

    /// Raw extended covariate row: file covariates then year and month
    /// as (unscaled) linear terms.
    pub fn extended_row(&self, record: usize) -> Vec<f64> {
        let r = &self.records[record];
        let mut row = r.covs.clone();
        row.push(r.year as f64);
        row.push(r.month as f64);
        row
    }

    pub fn n_extended(&self) -> usize {
        self.n_covs + 2
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_value(field: &str, line: usize, what: &str) -> Result<Option<f64>> {
    let t = field.trim();
    if t.is_empty() || t == "NA" {
        return Ok(None);
    }
    t.parse::<f64>()
        .map(Some)
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {t:?}")))
}

/// Parse the dataset CSV from any reader. The header must be
/// `lon,lat,year,month,CNT,BA,cov_1..cov_k` with k ≥ 1.
pub fn parse_dataset(reader: impl BufRead) -> Result<WildfireDataset> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file: expected a header row"))?;
    let header = header.map_err(|e| parse_err(1, e.to_string()))?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let fixed = ["lon", "lat", "year", "month", "CNT", "BA"];
    if cols.len() < fixed.len() + 1 {
        return Err(parse_err(1, format!("header has {} columns", cols.len())));
    }
    for (want, got) in fixed.iter().zip(&cols) {
        if want != got {
            return Err(parse_err(
                1,
                format!("expected column {want:?}, found {got:?}"),
            ));
        }
    }
    let n_covs = cols.len() - fixed.len();
    for (k, got) in cols[fixed.len()..].iter().enumerate() {
        let want = format!("cov_{}", k + 1);
        if *got != want {
            return Err(parse_err(
                1,
                format!("expected column {want:?}, found {got:?}"),
            ));
        }
    }

    let mut records = Vec::new();
    let mut inconsistent: Vec<usize> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let need = |i: usize, what: &str| -> Result<f64> {
            parse_value(fields[i], line_no, what)?
                .ok_or_else(|| parse_err(line_no, format!("{what} is missing")))
        };
        let lon = need(0, "lon")?;
        let lat = need(1, "lat")?;
        let year = need(2, "year")? as i32;
        let month = need(3, "month")? as u32;
        if !(YEAR_MIN..=YEAR_MAX).contains(&year) {
            return Err(parse_err(line_no, format!("year {year} out of range")));
        }
        if !(MONTH_MIN..=MONTH_MAX).contains(&month) {
            return Err(parse_err(line_no, format!("month {month} out of range")));
        }
        let cnt = parse_value(fields[4], line_no, "CNT")?;
        if let Some(c) = cnt {
            if c < 0.0 || c.fract() != 0.0 {
                return Err(parse_err(line_no, format!("CNT {c} is not a count")));
            }
        }
        let ba = parse_value(fields[5], line_no, "BA")?;
        if let Some(b) = ba {
            if b < 0.0 {
                return Err(parse_err(line_no, format!("BA {b} is negative")));
            }
        }
        if let (Some(c), Some(b)) = (cnt, ba) {
            if (c == 0.0) != (b == 0.0) {
                inconsistent.push(line_no);
            }
        }
        let covs = fields[6..]
            .iter()
            .enumerate()
            .map(|(k, f)| {
                Ok(parse_value(f, line_no, &format!("cov_{}", k + 1))?.unwrap_or(f64::NAN))
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(WildfireRecord {
            lon,
            lat,
            year,
            month,
            cnt,
            ba,
            covs,
        });
    }
    if !inconsistent.is_empty() {
        let shown: Vec<String> = inconsistent.iter().take(10).map(|l| l.to_string()).collect();
        return Err(Error::Inconsistency(format!(
            "{} records break CNT = 0 ⟺ BA = 0 (lines {}{})",
            inconsistent.len(),
            shown.join(", "),
            if inconsistent.len() > 10 { ", …" } else { "" }
        )));
    }
    if records.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }

    // derive cells from unique (lon, lat) pairs in first-appearance order
    let ref_lat = records.iter().map(|r| r.lat).sum::<f64>() / records.len() as f64;
    let mut cells: Vec<Point> = Vec::new();
    let mut keys: Vec<(u64, u64)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut cell_of = Vec::with_capacity(records.len());
    for r in &records {
        let key = (r.lon.to_bits(), r.lat.to_bits());
        let id = *index.entry(key).or_insert_with(|| {
            keys.push(key);
            cells.push(Point::new(0.0, 0.0));
            cells.len() - 1
        });
        cell_of.push(id);
    }
    for (cell, &(lon_bits, lat_bits)) in cells.iter_mut().zip(&keys) {
        *cell = project_lonlat(f64::from_bits(lon_bits), f64::from_bits(lat_bits), ref_lat)?;
    }

    Ok(WildfireDataset {
        records,
        n_covs,
        cells,
        cell_of,
        ref_lat,
    })
}

/// Load and validate the dataset CSV from disk.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<WildfireDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(std::io::BufReader::new(file))
}

/// Per-column affine transforms that standardize the extended covariate
/// rows of the training set.
#[derive(Debug, Clone)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    /// Fit means and sample standard deviations over the rows where the
    /// column is present (finite).
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DegenerateCovariate("no rows to standardize".into()));
        }
        let p = rows[0].len();
        let mut means = vec![0.0; p];
        let mut sds = vec![0.0; p];
        for j in 0..p {
            let vals: Vec<f64> = rows
                .iter()
                .map(|r| r[j])
                .filter(|v| v.is_finite())
                .collect();
            if vals.len() < 2 {
                return Err(Error::DegenerateCovariate(format!(
                    "column {j} has {} usable values",
                    vals.len()
                )));
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len() - 1) as f64;
            if var <= 0.0 {
                return Err(Error::DegenerateCovariate(format!(
                    "column {j} is constant (value {mean})"
                )));
            }
            means[j] = mean;
            sds[j] = var.sqrt();
        }
        Ok(Standardization { means, sds })
    }

    /// Apply `(x − μ)/σ` per column; missing (non-finite) entries stay NaN.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }
}

/// Which empirical variability field to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaTarget {
    /// SD of the binary occurrence indicator over observed months.
    Occurrence,
    /// SD of log CNT over months with positive counts.
    Count,
    /// SD of log BA over months with positive burnt area.
    BurntArea,
}

/// Per-cell empirical σ̂. Cells with fewer than two defining
/// observations receive the mean of the defined values.
pub fn empirical_sigma_hat(dataset: &WildfireDataset, target: SigmaTarget) -> Vec<f64> {
    let n = dataset.n_cells();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (r, rec) in dataset.records.iter().enumerate() {
        let cell = dataset.cell_of[r];
        match target {
            SigmaTarget::Occurrence => {
                if let Some(c) = rec.cnt {
                    samples[cell].push(if c > 0.0 { 1.0 } else { 0.0 });
                }
            }
            SigmaTarget::Count => {
                if let Some(c) = rec.cnt {
                    if c > 0.0 {
                        samples[cell].push(c.ln());
                    }
                }
            }
            SigmaTarget::BurntArea => {
                if let Some(b) = rec.ba {
                    if b > 0.0 {
                        samples[cell].push(b.ln());
                    }
                }
            }
        }
    }
    let mut out = vec![f64::NAN; n];
    let mut defined_sum = 0.0;
    let mut defined_n = 0usize;
    for (cell, vals) in samples.iter().enumerate() {
        if vals.len() >= 2 {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len() - 1) as f64;
            out[cell] = var.sqrt();
            defined_sum += out[cell];
            defined_n += 1;
        }
    }
    let fill = if defined_n > 0 {
        defined_sum / defined_n as f64
    } else {
        0.0
    };
    for v in &mut out {
        if !v.is_finite() {
            *v = fill;
        }
    }
    out
}
