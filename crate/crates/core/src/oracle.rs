//! Independent frequency check from a lumped-mass finite-element model of
//! the string with its two boundary particles.
//!
//! Nodes `x_i = i h`, `i = 0..=n`. The string mass is lumped with the
//! trapezoid weights `h` (interior) and `h/2` (ends); each boundary particle
//! adds its mass `mu_j` and spring `mu_j w_j2` to its end node. The normal
//! frequencies solve the generalised problem `K u = Omega^2 M u` with
//! diagonal `M`, which is reduced to a symmetric tridiagonal matrix and solved
//! by Sturm-sequence bisection.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let prev = if q == 0.0 {
                f64::EPSILON * (self.off[i - 1].abs() + 1.0)
            } else {
                q
            };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k` smallest eigenvalues in ascending order.
    pub fn smallest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let (lo0, hi0) = self.gershgorin();
        (0..k.min(self.diag.len()))
            .map(|i| {
                let (mut lo, mut hi) = (lo0, hi0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > i {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }
}

/// Mass-normalised stiffness `M^{-1/2} K M^{-1/2}` of the lumped model.
pub fn lumped_matrix(params: &ModelParams, n: usize) -> Result<Tridiagonal> {
    params.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "lumped model needs at least 2 elements".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let mut m = vec![h; n + 1];
    m[0] = 0.5 * h;
    m[n] = 0.5 * h;
    let mut k: Vec<f64> = m.iter().map(|mi| params.w2 * mi + 2.0 / h).collect();
    k[0] = params.w2 * m[0] + 1.0 / h + params.mu0 * params.w02;
    k[n] = params.w2 * m[n] + 1.0 / h + params.mu1 * params.w12;
    m[0] += params.mu0;
    m[n] += params.mu1;
    let diag = (0..=n).map(|i| k[i] / m[i]).collect();
    let off = (0..n)
        .map(|i| -1.0 / h / (m[i] * m[i + 1]).sqrt())
        .collect();
    Ok(Tridiagonal { diag, off })
}

/// The `count` lowest squared frequencies `Omega^2` of the lumped model.
pub fn lumped_frequencies_squared(
    params: &ModelParams,
    n: usize,
    count: usize,
) -> Result<Vec<f64>> {
    Ok(lumped_matrix(params, n)?.smallest_eigenvalues(count))
}
