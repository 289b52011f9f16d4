//! Functions on `[0, 1]` under the atomic measure
//! `mu = alpha_0 delta_0 + Lebesgue + alpha_1 delta_1`, and the calculus built
//! on them.
//!
//! A [`MuFunction`] stores grid samples of the restriction to `(0, 1)` and,
//! separately, the values carried by the two atoms. The first and last grid
//! samples are the one-sided limits (traces) `F(0+)`, `F(1-)`; the atom values
//! `F(0)`, `F(1)` are independent of them.
//!
//! Radon-Nikodym derivatives are the ordinary derivative in the interior and
//! `(-1)^j (gamma_j(F) - F(j)) / alpha_j` on the atoms.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{simpson_product, GridSpec};
use crate::model::{endpoint_sign, CalibratedMeasure, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct MuFunction {
    values: Vec<f64>,
    atoms: [f64; 2],
}

impl MuFunction {
    /// Wraps grid samples (`n_grid + 1` values) and atom values.
    pub fn new(values: Vec<f64>, atoms: [f64; 2]) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        GridSpec::new(n)?;
        Ok(MuFunction { values, atoms })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &GridSpec, f: F, atoms: [f64; 2]) -> Self {
        MuFunction {
            values: grid.points().into_iter().map(f).collect(),
            atoms,
        }
    }

    /// Samples `f` and sets the atom values equal to the traces.
    pub fn from_fn_continuous<F: Fn(f64) -> f64>(grid: &GridSpec, f: F) -> Self {
        let mut out = Self::from_fn(grid, f, [0.0; 2]);
        out.atoms = [out.trace(0), out.trace(1)];
        out
    }

    /// Samples `f` and places atom values on the Robin domain of `cal`.
    pub fn from_fn_robin<F: Fn(f64) -> f64>(
        grid: &GridSpec,
        f: F,
        cal: &CalibratedMeasure,
    ) -> Self {
        Self::from_fn(grid, f, [0.0; 2]).with_robin_atoms(cal)
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        MuFunction {
            values: vec![0.0; grid.n_grid + 1],
            atoms: [0.0; 2],
        }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        MuFunction {
            values: vec![c; grid.n_grid + 1],
            atoms: [c; 2],
        }
    }

    /// The function equal to one on the left atom and zero elsewhere.
    pub fn boundary_indicator(grid: &GridSpec) -> Self {
        MuFunction {
            values: vec![0.0; grid.n_grid + 1],
            atoms: [1.0, 0.0],
        }
    }

    #[inline]
    pub fn n_grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            n_grid: self.n_grid(),
            quadrature: Default::default(),
        }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n_grid() as f64
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn atoms(&self) -> [f64; 2] {
        self.atoms
    }

    #[inline]
    pub fn atom(&self, j: usize) -> f64 {
        self.atoms[j]
    }

    /// One-sided limit at endpoint `j`.
    #[inline]
    pub fn trace(&self, j: usize) -> f64 {
        if j == 0 {
            self.values[0]
        } else {
            self.values[self.n_grid()]
        }
    }

    pub fn set_atoms(&mut self, atoms: [f64; 2]) {
        self.atoms = atoms;
    }

    /// Replaces the atom values by `gamma_j / (1 + alpha_j A(j))`.
    ///
    /// When `1 + alpha_j A(j) = 0` the Robin relation forces the trace to
    /// vanish and leaves the atom free; the atom is then set to zero.
    pub fn with_robin_atoms(mut self, cal: &CalibratedMeasure) -> Self {
        for j in 0..2 {
            let f = cal.trace_factor(j);
            self.atoms[j] = if f == 0.0 { 0.0 } else { self.trace(j) / f };
        }
        self
    }

    fn check_grid(&self, other: &MuFunction) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::GridMismatch {
                left: self.n_grid(),
                right: other.n_grid(),
            });
        }
        Ok(())
    }

    pub fn product(&self, other: &MuFunction) -> Result<MuFunction> {
        self.check_grid(other)?;
        Ok(MuFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            atoms: [
                self.atoms[0] * other.atoms[0],
                self.atoms[1] * other.atoms[1],
            ],
        })
    }

    pub fn scaled(&self, s: f64) -> MuFunction {
        MuFunction {
            values: self.values.iter().map(|v| v * s).collect(),
            atoms: [self.atoms[0] * s, self.atoms[1] * s],
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &MuFunction) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        self.atoms[0] += s * other.atoms[0];
        self.atoms[1] += s * other.atoms[1];
        Ok(())
    }

    /// Largest pointwise distance over the grid samples (atoms excluded).
    pub fn sup_distance_interior(&self, other: &MuFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// CSV with `atom0=` and `atom1=` header records followed by `x,value` rows.
    /// Numbers carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(48 * (self.values.len() + 3));
        let _ = writeln!(s, "atom0={:.16e}", self.atoms[0]);
        let _ = writeln!(s, "atom1={:.16e}", self.atoms[1]);
        s.push_str("x,value\n");
        let n = self.n_grid() as f64;
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{:.16e}", i as f64 / n, v);
        }
        s
    }

    /// Parses the format written by [`MuFunction::to_csv`]. Lines starting
    /// with `#` are skipped.
    pub fn from_csv(text: &str) -> Result<MuFunction> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut atom = |key: &str| -> Result<f64> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {key} record")))?;
            let rest = line
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| Error::Parse(format!("expected {key}=..., got {line:?}")))?;
            rest.parse()
                .map_err(|e| Error::Parse(format!("bad {key} value: {e}")))
        };
        let atoms = [atom("atom0")?, atom("atom1")?];
        match lines.next() {
            Some("x,value") => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected x,value header, got {other:?}"
                )))
            }
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            let parse = |t: &str| -> Result<f64> {
                t.trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad number {t:?}: {e}")))
            };
            xs.push(parse(x)?);
            values.push(parse(v)?);
        }
        let n = values.len().saturating_sub(1);
        GridSpec::new(n).map_err(|_| Error::Parse(format!("{n} intervals is not a valid grid")))?;
        for (i, x) in xs.iter().enumerate() {
            if (x - i as f64 / n as f64).abs() > 1e-12 {
                return Err(Error::Parse(format!(
                    "row {i}: x = {x} is off the uniform grid"
                )));
            }
        }
        MuFunction::new(values, atoms)
    }
}

/// `<u, v>_mu = alpha_0 u(0) v(0) + alpha_1 u(1) v(1) + int_0^1 u v`, with the
/// boundary terms taken from the atom values.
pub fn inner_mu(u: &MuFunction, v: &MuFunction, cal: &CalibratedMeasure) -> Result<f64> {
    u.check_grid(v)?;
    Ok(cal.alpha[0] * u.atoms[0] * v.atoms[0]
        + cal.alpha[1] * u.atoms[1] * v.atoms[1]
        + simpson_product(&u.values, &v.values, u.h()))
}

/// Modified product `mu_0 g0(u) g0(v) + mu_1 g1(u) g1(v) + int u v` built on traces.
pub fn inner_modified(u: &MuFunction, v: &MuFunction, params: &ModelParams) -> Result<f64> {
    u.check_grid(v)?;
    Ok(params.mu0 * u.trace(0) * v.trace(0)
        + params.mu1 * u.trace(1) * v.trace(1)
        + simpson_product(&u.values, &v.values, u.h()))
}

/// Second-order finite-difference derivative of equispaced samples:
/// centred inside, three-point one-sided at both ends.
pub fn grid_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut d = vec![0.0; n + 1];
    let inv = 0.5 / h;
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv;
    for i in 1..n {
        d[i] = (values[i + 1] - values[i - 1]) * inv;
    }
    d[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) * inv;
    d
}

fn atom_derivative(trace: f64, atom: f64, j: usize, cal: &CalibratedMeasure) -> f64 {
    endpoint_sign(j) / cal.alpha[j] * (trace - atom)
}

/// Radon-Nikodym derivative given the interior derivative samples of `f`.
pub fn rn_derivative_with(
    f: &MuFunction,
    interior_derivative: Vec<f64>,
    cal: &CalibratedMeasure,
) -> Result<MuFunction> {
    if interior_derivative.len() != f.values.len() {
        return Err(Error::GridMismatch {
            left: f.n_grid(),
            right: interior_derivative.len().saturating_sub(1),
        });
    }
    let atoms = [
        atom_derivative(f.trace(0), f.atoms[0], 0, cal),
        atom_derivative(f.trace(1), f.atoms[1], 1, cal),
    ];
    Ok(MuFunction {
        values: interior_derivative,
        atoms,
    })
}

/// Radon-Nikodym derivative with finite differences in the interior.
pub fn rn_derivative(f: &MuFunction, cal: &CalibratedMeasure) -> MuFunction {
    let d = grid_derivative(&f.values, f.h());
    rn_derivative_with(f, d, cal).expect("derivative has the grid of its input")
}

/// A function together with interior samples of its first two derivatives.
///
/// Jets built from closed forms give exact Radon-Nikodym calculus up to
/// rounding; [`Jet::from_grid`] falls back to finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: MuFunction,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Jet {
    pub fn new(value: MuFunction, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        let len = value.values.len();
        for d in [&d1, &d2] {
            if d.len() != len {
                return Err(Error::GridMismatch {
                    left: len - 1,
                    right: d.len().saturating_sub(1),
                });
            }
        }
        Ok(Jet { value, d1, d2 })
    }

    pub fn from_grid(f: &MuFunction) -> Jet {
        let h = f.h();
        let d1 = grid_derivative(&f.values, h);
        let d2 = grid_derivative(&d1, h);
        Jet {
            value: f.clone(),
            d1,
            d2,
        }
    }

    pub fn rn_derivative(&self, cal: &CalibratedMeasure) -> MuFunction {
        rn_derivative_with(&self.value, self.d1.clone(), cal).expect("jet grids agree")
    }

    pub fn rn_second_derivative(&self, cal: &CalibratedMeasure) -> MuFunction {
        let first_atoms = [
            atom_derivative(self.value.trace(0), self.value.atoms[0], 0, cal),
            atom_derivative(self.value.trace(1), self.value.atoms[1], 1, cal),
        ];
        let n = self.d1.len() - 1;
        MuFunction {
            values: self.d2.clone(),
            atoms: [
                atom_derivative(self.d1[0], first_atoms[0], 0, cal),
                atom_derivative(self.d1[n], first_atoms[1], 1, cal),
            ],
        }
    }

    /// `(1 + C) d^2/dmu^2`; `C` vanishes in the interior.
    pub fn laplacian(&self, cal: &CalibratedMeasure) -> MuFunction {
        let mut out = self.rn_second_derivative(cal);
        for j in 0..2 {
            out.atoms[j] *= 1.0 + cal.c[j];
        }
        out
    }
}

/// Generalised Laplacian `(1 + C) d^2/dmu^2` with finite differences inside.
pub fn laplacian_mu(f: &MuFunction, cal: &CalibratedMeasure) -> MuFunction {
    Jet::from_grid(f).laplacian(cal)
}

/// Largest deviation from the modified Leibniz rule
/// `d(FG)/dmu = F' G + F G' + K F' G'` with `K(j) = (-1)^j alpha_j`, `K = 0` inside.
pub fn leibniz_residual(f: &MuFunction, g: &MuFunction, cal: &CalibratedMeasure) -> Result<f64> {
    let lhs = rn_derivative(&f.product(g)?, cal);
    let df = rn_derivative(f, cal);
    let dg = rn_derivative(g, cal);
    let mut worst = 0.0_f64;
    for i in 0..f.values.len() {
        let rhs = df.values[i] * g.values[i] + f.values[i] * dg.values[i];
        worst = worst.max((lhs.values[i] - rhs).abs());
    }
    for j in 0..2 {
        let rhs = df.atoms[j] * g.atoms[j]
            + f.atoms[j] * dg.atoms[j]
            + cal.leibniz_weight(j) * df.atoms[j] * dg.atoms[j];
        worst = worst.max((lhs.atoms[j] - rhs).abs());
    }
    Ok(worst)
}

/// `(-1)^j dF/dmu(j) - A(j) F(j)` at both ends; zero exactly on the Robin domain.
///
/// With `1 + alpha_j A(j) = 0` the condition reduces to a vanishing trace.
pub fn robin_residual(f: &MuFunction, cal: &CalibratedMeasure) -> [f64; 2] {
    let mut out = [0.0; 2];
    for j in 0..2 {
        let d = atom_derivative(f.trace(j), f.atoms[j], j, cal);
        out[j] = endpoint_sign(j) * d - cal.a[j] * f.atoms[j];
    }
    out
}
