use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SAMPLES: usize = 10_000_000;

/// Uniform time samples `t_start, ..., t_end` inclusive (units of inverse energy).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 10.0,
            samples: 1001,
        }
    }
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, samples: usize) -> Result<Self> {
        let g = Self {
            t_start,
            t_end,
            samples,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "time grid needs finite t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if !(2..=MAX_SAMPLES).contains(&self.samples) {
            return Err(Error::InvalidParameter(format!(
                "time grid needs 2..={MAX_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.t_end - self.t_start) / (self.samples - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.samples {
            self.t_end
        } else {
            self.t_start + i as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.time(i)).collect()
    }
}

/// One real value per grid sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.samples {
            return Err(Error::GridMismatch(grid.samples, values.len()));
        }
        Ok(Self {
            label: label.into(),
            grid,
            values,
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `max_t |self - other|`.
    pub fn max_abs_diff(&self, other: &TimeSeries) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.values.len(), other.values.len()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `|self - reference| / |reference|` per sample.
    pub fn relative_error(&self, reference: &TimeSeries) -> Result<TimeSeries> {
        if self.grid != reference.grid {
            return Err(Error::GridMismatch(reference.values.len(), self.values.len()));
        }
        let values = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, r)| (a - r).abs() / r.abs())
            .collect();
        TimeSeries::new("rel_error", self.grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = TimeGrid::default();
        g.validate().unwrap();
        let t = g.times();
        assert_eq!(t.len(), 1001);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1000], 10.0);
        assert!((t[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, MAX_SAMPLES + 1).is_err());
    }

    #[test]
    fn series_length_checked() {
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(TimeSeries::new("x", g, vec![1.0]), Err(Error::GridMismatch(3, 1))));
        let a = TimeSeries::new("a", g, vec![1.0, 2.0, 4.0]).unwrap();
        let b = TimeSeries::new("b", g, vec![1.0, 2.5, 4.0]).unwrap();
        assert_eq!(a.spread(), 3.0);
        assert_eq!(b.max_abs_diff(&a).unwrap(), 0.5);
        assert_eq!(b.relative_error(&a).unwrap().values, vec![0.0, 0.25, 0.0]);
    }
}
