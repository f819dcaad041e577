//! Gaussian kernel density estimate used for density-versus-sample distances.

use std::f64::consts::PI;

use crate::error::{MddError, Result};

/// Above this many points the estimate is evaluated on a linearly binned grid.
const DIRECT_LIMIT: usize = 4096;
const GRID_SIZE: usize = 4096;
/// Kernel support in bandwidths.
const CUTOFF: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct GaussianKde {
    sorted: Vec<f64>,
    bandwidth: f64,
    grid: Option<Grid>,
}

#[derive(Debug, Clone)]
struct Grid {
    start: f64,
    step: f64,
    density: Vec<f64>,
}

/// Silverman's rule of thumb, `1.06 * s * n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(MddError::InsufficientData { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let h = 1.06 * var.sqrt() * (n as f64).powf(-0.2);
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(MddError::DegenerateData(
            "sample has zero spread, kernel bandwidth is 0".into(),
        ))
    }
}

impl GaussianKde {
    /// Builds the estimate; `bandwidth` overrides Silverman's rule.
    pub fn new(values: &[f64], bandwidth: Option<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(MddError::InsufficientData {
                needed: 2,
                got: values.len(),
            });
        }
        let bandwidth = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(MddError::domain(format!("bandwidth must be > 0, got {h}"))),
            None => silverman_bandwidth(values)?,
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let grid = (sorted.len() > DIRECT_LIMIT).then(|| binned_grid(&sorted, bandwidth));
        Ok(Self {
            sorted,
            bandwidth,
            grid,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Range outside which the estimate is numerically zero.
    pub fn range(&self) -> (f64, f64) {
        (
            self.sorted[0] - CUTOFF * self.bandwidth,
            self.sorted[self.sorted.len() - 1] + CUTOFF * self.bandwidth,
        )
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.grid {
            Some(g) => g.interpolate(x),
            None => self.direct(x),
        }
    }

    fn direct(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.sorted.partition_point(|&v| v < x - CUTOFF * h);
        let hi = self.sorted.partition_point(|&v| v <= x + CUTOFF * h);
        let sum: f64 = self.sorted[lo..hi]
            .iter()
            .map(|&v| {
                let z = (x - v) / h;
                (-0.5 * z * z).exp()
            })
            .sum();
        sum / (self.sorted.len() as f64 * h * (2.0 * PI).sqrt())
    }
}

impl Grid {
    fn interpolate(&self, x: f64) -> f64 {
        let pos = (x - self.start) / self.step;
        if pos < 0.0 || pos >= (self.density.len() - 1) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }
}

/// Linear binning followed by a direct discrete convolution with the kernel.
fn binned_grid(sorted: &[f64], h: f64) -> Grid {
    let start = sorted[0] - CUTOFF * h;
    let end = sorted[sorted.len() - 1] + CUTOFF * h;
    let step = (end - start) / (GRID_SIZE - 1) as f64;
    let mut counts = vec![0.0; GRID_SIZE];
    for &v in sorted {
        let pos = (v - start) / step;
        let i = (pos.floor() as usize).min(GRID_SIZE - 2);
        let frac = pos - i as f64;
        counts[i] += 1.0 - frac;
        counts[i + 1] += frac;
    }
    let half = ((CUTOFF * h / step).ceil() as usize).min(GRID_SIZE - 1);
    let kernel: Vec<f64> = (0..=half)
        .map(|j| {
            let z = j as f64 * step / h;
            (-0.5 * z * z).exp()
        })
        .collect();
    let norm = sorted.len() as f64 * h * (2.0 * PI).sqrt();
    let density = (0..GRID_SIZE)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(GRID_SIZE - 1);
            (lo..=hi)
                .map(|j| counts[j] * kernel[i.abs_diff(j)])
                .sum::<f64>()
                / norm
        })
        .collect();
    Grid {
        start,
        step,
        density,
    }
}
