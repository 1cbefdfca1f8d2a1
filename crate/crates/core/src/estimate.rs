//! Core and tail parameters from a historical return series.
//!
//! Tails are the observations strictly beyond the empirical `q` and `1 - q`
//! quantiles (type-7 interpolation). Each tail size is the mean absolute
//! return of its bucket. The core is then recalibrated so the full model
//! reproduces the sample mean and (population) variance.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{KellyError, Result};
use crate::model::{calibrate_center_two_sided, GaussianCore, TailSpec};
use crate::numeric::{compensated_sum, quantile_sorted};

/// Minimum series length accepted by [`estimate_params`].
pub const MIN_OBSERVATIONS: usize = 30;
pub const DEFAULT_TAIL_QUANTILE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    values: Vec<f64>,
    period_label: String,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>, period_label: impl Into<String>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > -1.0)) {
            return Err(KellyError::invalid(format!(
                "return #{} is {v}; returns must be finite and above -1",
                i + 1
            )));
        }
        Ok(Self {
            values,
            period_label: period_label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period_label(&self) -> &str {
        &self.period_label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateDiagnostics {
    pub n_observations: usize,
    pub tail_quantile: f64,
    pub left_threshold: f64,
    pub right_threshold: f64,
    pub n_left: usize,
    pub n_right: usize,
    pub interior_mean: f64,
    pub interior_std: f64,
    pub sample_mean: f64,
    pub sample_std: f64,
    /// No observation fell below the left threshold; `alpha` was set to 0.
    pub degenerate_left: bool,
    /// No observation fell above the right threshold; `beta` was set to 0.
    pub degenerate_right: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub core: GaussianCore,
    pub tails: TailSpec,
    pub diagnostics: EstimateDiagnostics,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, var.sqrt())
}

fn mean_abs(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        compensated_sum(xs.iter().map(|x| x.abs())) / xs.len() as f64
    }
}

/// Estimates `(core, tails)` with tail quantile `q` in `(0, 0.25]`.
pub fn estimate_params(series: &ReturnSeries, q: f64) -> Result<Estimate> {
    let n = series.len();
    if n < MIN_OBSERVATIONS {
        return Err(KellyError::SeriesTooShort {
            len: n,
            min: MIN_OBSERVATIONS,
        });
    }
    if !(q > 0.0 && q <= 0.25) {
        return Err(KellyError::invalid(format!(
            "tail quantile must lie in (0, 0.25], got {q}"
        )));
    }
    let mut sorted = series.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, q);
    let hi = quantile_sorted(&sorted, 1.0 - q);

    let left: Vec<f64> = sorted.iter().copied().filter(|&x| x < lo).collect();
    let right: Vec<f64> = sorted.iter().copied().filter(|&x| x > hi).collect();
    let interior: Vec<f64> = sorted.iter().copied().filter(|&x| x >= lo && x <= hi).collect();

    let nf = n as f64;
    let tails = TailSpec::new(
        left.len() as f64 / nf,
        mean_abs(&left),
        right.len() as f64 / nf,
        mean_abs(&right),
    )?;
    let (sample_mean, sample_std) = mean_std(series.values());
    let (interior_mean, interior_std) = mean_std(&interior);
    let core = calibrate_center_two_sided(sample_mean, sample_std, &tails)?;

    Ok(Estimate {
        core,
        tails,
        diagnostics: EstimateDiagnostics {
            n_observations: n,
            tail_quantile: q,
            left_threshold: lo,
            right_threshold: hi,
            n_left: left.len(),
            n_right: right.len(),
            interior_mean,
            interior_std,
            sample_mean,
            sample_std,
            degenerate_left: left.is_empty(),
            degenerate_right: right.is_empty(),
        },
    })
}

/// Reads returns from CSV text: either one value per line or a column named
/// `return`. A first line that is not numeric is taken as a header.
pub fn read_returns<R: Read>(reader: R, period_label: &str) -> Result<ReturnSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut column = 0usize;
    let mut values = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| KellyError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if let Some(i) = record.iter().position(|f| f.eq_ignore_ascii_case("return")) {
                column = i;
                continue;
            }
            if record.len() == 1 && record[0].parse::<f64>().is_err() {
                continue;
            }
            if record.len() > 1 {
                return Err(KellyError::Parse {
                    line,
                    message: "multi-column input needs a header with a 'return' column".into(),
                });
            }
        }
        let field = record.get(column).ok_or_else(|| KellyError::Parse {
            line,
            message: format!("missing column {}", column + 1),
        })?;
        let value: f64 = field.parse().map_err(|_| KellyError::Parse {
            line,
            message: format!("'{field}' is not a number"),
        })?;
        if !(value.is_finite() && value > -1.0) {
            return Err(KellyError::Parse {
                line,
                message: format!("return {value} must be finite and above -1"),
            });
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(KellyError::EmptyFile);
    }
    ReturnSeries::new(values, period_label)
}

pub fn read_returns_csv(path: impl AsRef<Path>) -> Result<ReturnSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| KellyError::Io(format!("{}: {e}", path.display())))?;
    read_returns(file, &path.display().to_string())
}
