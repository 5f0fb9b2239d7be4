//! Rectangular grids over `R^n`, row-major with the last axis fastest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nullrep::RealPoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis {axis}: need at least 2 points, got {count}")]
    Degenerate { axis: usize, count: usize },
    #[error("axis {axis}: bounds must be finite with min < max (got {min}..{max})")]
    Bounds { axis: usize, min: f64, max: f64 },
    #[error("grid must have at least one axis")]
    Empty,
    #[error("cannot parse axis `{0}`, expected min:max:count")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    /// Number of points including both endpoints.
    pub count: usize,
}

impl AxisSpec {
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AxisSpec>", into = "Vec<AxisSpec>")]
pub struct GridSpec {
    axes: Vec<AxisSpec>,
    strides: Vec<usize>,
}

impl TryFrom<Vec<AxisSpec>> for GridSpec {
    type Error = GridError;
    fn try_from(axes: Vec<AxisSpec>) -> Result<Self, GridError> {
        GridSpec::new(axes)
    }
}

impl From<GridSpec> for Vec<AxisSpec> {
    fn from(g: GridSpec) -> Self {
        g.axes
    }
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self, GridError> {
        if axes.is_empty() {
            return Err(GridError::Empty);
        }
        for (axis, a) in axes.iter().enumerate() {
            if a.count < 2 {
                return Err(GridError::Degenerate { axis, count: a.count });
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(GridError::Bounds { axis, min: a.min, max: a.max });
            }
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].count;
        }
        Ok(GridSpec { axes, strides })
    }

    /// The same box `[min, max]` with `count` points on every axis.
    pub fn cube(dim: usize, min: f64, max: f64, count: usize) -> Result<Self, GridError> {
        GridSpec::new(vec![AxisSpec { min, max, count }; dim])
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.strides[0] * self.axes[0].count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(AxisSpec::spacing).collect()
    }

    pub fn flat(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dim());
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn contains(&self, index: &[usize]) -> bool {
        index.len() == self.dim() && index.iter().zip(&self.axes).all(|(i, a)| *i < a.count)
    }

    pub fn point(&self, flat: usize) -> RealPoint {
        RealPoint::new(self.multi(flat).iter().zip(&self.axes).map(|(&i, a)| a.coord(i)).collect())
    }

    /// Neighbor of `flat` one step along `axis` in direction `forward`.
    pub fn step(&self, flat: usize, axis: usize, forward: bool) -> Option<usize> {
        let i = (flat / self.strides[axis]) % self.axes[axis].count;
        if forward {
            (i + 1 < self.axes[axis].count).then(|| flat + self.strides[axis])
        } else {
            (i > 0).then(|| flat - self.strides[axis])
        }
    }

    /// True when no axis index sits on the boundary.
    pub fn is_interior(&self, flat: usize) -> bool {
        self.multi(flat).iter().zip(&self.axes).all(|(&i, a)| i > 0 && i + 1 < a.count)
    }
}

impl FromStr for GridSpec {
    type Err = GridError;

    /// `min:max:count` per axis, comma separated.
    fn from_str(s: &str) -> Result<Self, GridError> {
        let axes = s
            .split(',')
            .map(|part| {
                let fields: Vec<&str> = part.trim().split(':').collect();
                let [min, max, count] = fields[..] else {
                    return Err(GridError::Syntax(part.to_string()));
                };
                let bad = || GridError::Syntax(part.to_string());
                Ok(AxisSpec {
                    min: min.trim().parse().map_err(|_| bad())?,
                    max: max.trim().parse().map_err(|_| bad())?,
                    count: count.trim().parse().map_err(|_| bad())?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        GridSpec::new(axes)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (d, a) in self.axes.iter().enumerate() {
            if d > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}:{}", a.min, a.max, a.count)?;
        }
        Ok(())
    }
}
