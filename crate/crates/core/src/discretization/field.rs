use std::ops::{Deref, DerefMut};

use super::Grid;
use crate::error::{Error, Result};

/// Nodal values on Ω at one time level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(pub Vec<f64>);

/// Values at the boundary nodes (in [`Grid::boundary_index`] order) at one time level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryField(pub Vec<f64>);

macro_rules! field_impl {
    ($ty:ident, $count:ident) => {
        impl $ty {
            pub fn constant(grid: &Grid, value: f64) -> Self {
                Self(vec![value; grid.$count()])
            }

            pub fn zeros(grid: &Grid) -> Self {
                Self::constant(grid, 0.0)
            }

            /// Errors unless the value count matches the grid.
            pub fn check(&self, grid: &Grid) -> Result<()> {
                let expected = grid.$count();
                if self.0.len() != expected {
                    return Err(Error::GridMismatch {
                        expected,
                        found: self.0.len(),
                    });
                }
                Ok(())
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn min(&self) -> f64 {
                self.0.iter().copied().fold(f64::INFINITY, f64::min)
            }

            pub fn max(&self) -> f64 {
                self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
                Self(self.0.iter().map(|&v| f(v)).collect())
            }

            pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
                Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
            }
        }

        impl From<Vec<f64>> for $ty {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl Deref for $ty {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $ty {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
    };
}

field_impl!(ScalarField, node_count);
field_impl!(BoundaryField, boundary_count);

impl ScalarField {
    /// Samples `f(x, y)` at every node (`y = 0` in 1D).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(
            (0..grid.node_count())
                .map(|n| {
                    let [x, y] = grid.coords(n);
                    f(x, y)
                })
                .collect(),
        )
    }

    /// Restriction to Γ.
    pub fn trace(&self, grid: &Grid) -> BoundaryField {
        BoundaryField(grid.boundary_index().iter().map(|&n| self.0[n]).collect())
    }
}

impl BoundaryField {
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(
            grid.boundary_index()
                .iter()
                .map(|&n| {
                    let [x, y] = grid.coords(n);
                    f(x, y)
                })
                .collect(),
        )
    }
}

/// Checks every level of a time series against the grid and the expected level count.
pub(crate) fn check_series<F>(
    series: &[F],
    levels: usize,
    check: impl Fn(&F) -> Result<()>,
) -> Result<()> {
    if series.len() != levels {
        return Err(Error::TimeMismatch {
            expected: levels,
            found: series.len(),
        });
    }
    series.iter().try_for_each(check)
}
