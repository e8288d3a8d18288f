use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid_arg, QPolicyError, Result};

/// Mean, sample standard deviation and a Student-t 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: usize,
}

impl SummaryStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(QPolicyError::TooFewSeries(n));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        let half = t * std / (n as f64).sqrt();
        Ok(Self {
            mean,
            std,
            ci95_low: mean - half,
            ci95_high: mean + half,
            n,
        })
    }

    pub fn half_width(&self) -> f64 {
        (self.ci95_high - self.ci95_low) / 2.0
    }
}

/// Per-index statistics across equally long series.
pub fn summarize(series: &[Vec<f64>]) -> Result<Vec<SummaryStats>> {
    if series.len() < 2 {
        return Err(QPolicyError::TooFewSeries(series.len()));
    }
    let len = series[0].len();
    if series.iter().any(|s| s.len() != len) {
        return Err(invalid_arg("series must have equal lengths"));
    }
    (0..len)
        .map(|i| {
            let column: Vec<f64> = series.iter().map(|s| s[i]).collect();
            SummaryStats::from_samples(&column)
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid_arg("need at least two paired points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(invalid_arg("log-log regression needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid_arg("x values are all equal"));
    }
    Ok(sxy / sxx)
}
