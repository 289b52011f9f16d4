//! Uniform grids on `[0, 1]` and composite Simpson quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Simpson,
}

/// Grid resolution and quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Number of intervals; even and at least 16.
    pub n_grid: usize,
    #[serde(default)]
    pub quadrature: Quadrature,
}

impl GridSpec {
    pub fn new(n_grid: usize) -> Result<Self> {
        let g = GridSpec {
            n_grid,
            quadrature: Quadrature::Simpson,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 16 || self.n_grid % 2 != 0 {
            return Err(Error::InvalidGrid(self.n_grid));
        }
        Ok(())
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n_grid as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n_grid as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n_grid).map(|i| self.x(i)).collect()
    }
}

/// Composite Simpson rule over equispaced samples (odd sample count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n % 2 == 0 && n >= 2);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n] + 4.0 * odd + 2.0 * even)
}

/// Simpson integral of a pointwise product, without allocating the product.
pub fn simpson_product(u: &[f64], v: &[f64], h: f64) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let n = u.len() - 1;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let p = u[i] * v[i];
        if i % 2 == 1 {
            odd += p;
        } else {
            even += p;
        }
    }
    h / 3.0 * (u[0] * v[0] + u[n] * v[n] + 4.0 * odd + 2.0 * even)
}
