//! Time evolution of Cauchy data.
//!
//! Two independent routes:
//!
//! * exact evolution in the eigenbasis, where each coefficient is a harmonic
//!   oscillator with frequency `sqrt(w2 - lambda_n)`;
//! * an explicit leapfrog integrator for the original string equation with
//!   the two Newtonian boundary particles, used as an oracle.
//!
//! The finite-difference integrator knows nothing about the boundary measure:
//! its state is a plain grid profile whose end samples are the particle
//! positions. On output the atom values are set equal to the traces.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{CalibratedMeasure, ModelParams};
use crate::mufunc::{inner_mu, rn_derivative_with, robin_residual, Jet, MuFunction};
use crate::spectrum::{Mode, Spectrum};

/// Cauchy data `(Q, P)` at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub q: MuFunction,
    pub p: MuFunction,
    pub time: f64,
}

impl CauchyData {
    pub fn new(q: MuFunction, p: MuFunction, time: f64) -> Result<Self> {
        if q.n_grid() != p.n_grid() {
            return Err(Error::GridMismatch {
                left: q.n_grid(),
                right: p.n_grid(),
            });
        }
        Ok(CauchyData { q, p, time })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        CauchyData {
            q: MuFunction::zeros(grid),
            p: MuFunction::zeros(grid),
            time: 0.0,
        }
    }
}

/// The first `n` basis functions sampled on a grid, with analytic derivatives.
#[derive(Debug, Clone)]
pub struct Basis {
    pub params: ModelParams,
    pub cal: CalibratedMeasure,
    pub grid: GridSpec,
    pub modes: Vec<Mode>,
    pub functions: Vec<MuFunction>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
}

impl Basis {
    pub fn new(spec: &Spectrum, grid: &GridSpec, n: usize) -> Result<Basis> {
        grid.validate()?;
        if n > spec.modes.len() {
            return Err(Error::InsufficientModes {
                got: spec.modes.len(),
                need: n,
            });
        }
        let modes: Vec<Mode> = spec.modes[..n].to_vec();
        let jets: Vec<Jet> = modes
            .par_iter()
            .map(|m| spec.basis_jet(m, grid))
            .collect::<Result<_>>()?;
        let mut functions = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for j in jets {
            functions.push(j.value);
            d1.push(j.d1);
            d2.push(j.d2);
        }
        Ok(Basis {
            params: spec.params,
            cal: spec.cal.clone(),
            grid: *grid,
            modes,
            functions,
            d1,
            d2,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn indices(&self) -> Vec<i64> {
        self.modes.iter().map(|m| m.index).collect()
    }

    /// Temporal frequencies `sqrt(w2 - lambda_n)`.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        self.modes
            .iter()
            .map(|m| m.frequency(&self.params))
            .collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::BasisMismatch {
                left: self.len(),
                right: n,
            });
        }
        Ok(())
    }

    /// `sum_n c_n Y_n`.
    pub fn superpose(&self, coeffs: &[f64]) -> Result<MuFunction> {
        self.check_len(coeffs.len())?;
        let mut out = MuFunction::zeros(&self.grid);
        for (c, f) in coeffs.iter().zip(&self.functions) {
            if *c != 0.0 {
                out.add_scaled(*c, f)?;
            }
        }
        Ok(out)
    }

    /// `sum_n c_n Y_n` together with its analytic interior derivatives.
    pub fn superpose_jet(&self, coeffs: &[f64]) -> Result<Jet> {
        let value = self.superpose(coeffs)?;
        let len = self.grid.n_grid + 1;
        let mut d1 = vec![0.0; len];
        let mut d2 = vec![0.0; len];
        for (k, c) in coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for i in 0..len {
                d1[i] += c * self.d1[k][i];
                d2[i] += c * self.d2[k][i];
            }
        }
        Jet::new(value, d1, d2)
    }
}

/// Coefficients `Q_n = <Y_n, Q>_mu`, `P_n = <Y_n, P>_mu` in a truncated basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub indices: Vec<i64>,
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
    /// `||Q - sum Q_n Y_n||_mu` at projection time.
    pub q_residual: f64,
    /// `||P - sum P_n Y_n||_mu` at projection time.
    pub p_residual: f64,
}

impl ModeCoefficients {
    pub fn from_real(indices: Vec<i64>, q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != indices.len() || p.len() != indices.len() {
            return Err(Error::BasisMismatch {
                left: indices.len(),
                right: q.len().max(p.len()),
            });
        }
        Ok(ModeCoefficients {
            indices,
            q: q.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            p: p.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            q_residual: 0.0,
            p_residual: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

fn project_one(f: &MuFunction, basis: &Basis) -> Result<(Vec<f64>, f64)> {
    let c: Vec<f64> = basis
        .functions
        .par_iter()
        .map(|y| inner_mu(y, f, &basis.cal))
        .collect::<Result<_>>()?;
    let mut rest = f.clone();
    for (ck, y) in c.iter().zip(&basis.functions) {
        rest.add_scaled(-ck, y)?;
    }
    let res = inner_mu(&rest, &rest, &basis.cal)?.max(0.0).sqrt();
    Ok((c, res))
}

/// Projects Cauchy data on the basis.
pub fn project(data: &CauchyData, basis: &Basis) -> Result<ModeCoefficients> {
    if data.q.n_grid() != basis.grid.n_grid {
        return Err(Error::GridMismatch {
            left: data.q.n_grid(),
            right: basis.grid.n_grid,
        });
    }
    let (q, q_residual) = project_one(&data.q, basis)?;
    let (p, p_residual) = project_one(&data.p, basis)?;
    let mut out = ModeCoefficients::from_real(basis.indices(), &q, &p)?;
    out.q_residual = q_residual;
    out.p_residual = p_residual;
    Ok(out)
}

/// Advances every coefficient by `t`:
/// `Q_n(t) = Q_n cos(W t) + P_n sin(W t) / W`, `P_n(t) = -W Q_n sin(W t) + P_n cos(W t)`,
/// with `W = sqrt(w2 - lambda_n)`. This is the sum of the two counter-rotating
/// exponentials `1/2 e^{+-iWt} (Q_n -+ i P_n / W)`.
pub fn evolve_coefficients(
    coeffs: &ModeCoefficients,
    basis: &Basis,
    t: f64,
) -> Result<ModeCoefficients> {
    basis.check_len(coeffs.len())?;
    let w = basis.frequencies()?;
    let mut out = coeffs.clone();
    for k in 0..coeffs.len() {
        let (s, c) = (w[k] * t).sin_cos();
        let (q, p) = (coeffs.q[k], coeffs.p[k]);
        out.q[k] = q * c + p * (s / w[k]);
        out.p[k] = -q * (w[k] * s) + p * c;
    }
    Ok(out)
}

/// Real part of the field reconstructed from coefficients; imaginary parts
/// (zero for real data) are discarded.
pub fn reconstruct(coeffs: &ModeCoefficients, basis: &Basis, time: f64) -> Result<CauchyData> {
    let q: Vec<f64> = coeffs.q.iter().map(|z| z.re).collect();
    let p: Vec<f64> = coeffs.p.iter().map(|z| z.re).collect();
    CauchyData::new(basis.superpose(&q)?, basis.superpose(&p)?, time)
}

/// Field at time `t` by exact mode evolution.
pub fn evolve_modes(coeffs: &ModeCoefficients, basis: &Basis, t: f64) -> Result<CauchyData> {
    reconstruct(&evolve_coefficients(coeffs, basis, t)?, basis, t)
}

/// Like [`evolve_modes`] but returns `Q(t)` with analytic derivatives.
pub fn evolve_modes_jet(
    coeffs: &ModeCoefficients,
    basis: &Basis,
    t: f64,
) -> Result<(Jet, MuFunction)> {
    let c = evolve_coefficients(coeffs, basis, t)?;
    let q: Vec<f64> = c.q.iter().map(|z| z.re).collect();
    let p: Vec<f64> = c.p.iter().map(|z| z.re).collect();
    Ok((basis.superpose_jet(&q)?, basis.superpose(&p)?))
}

/// `1/2 sum (|P_n|^2 + (w2 - lambda_n) |Q_n|^2)`.
pub fn mode_energy(coeffs: &ModeCoefficients, basis: &Basis) -> Result<f64> {
    basis.check_len(coeffs.len())?;
    let w = basis.frequencies()?;
    Ok(0.5
        * coeffs
            .q
            .iter()
            .zip(&coeffs.p)
            .zip(&w)
            .map(|((q, p), w)| p.norm_sqr() + w * w * q.norm_sqr())
            .sum::<f64>())
}

/// Energy functional
/// `1/2<P,P> + 1/2<Q',Q'> + 1/2 w2 <Q,Q> + sum_j alpha_j^2 r_j Q''(j) + 1/2 sum_j A(j) Q(j)^2`,
/// all products in `L^2_mu`, derivatives Radon-Nikodym, `r_j` the Robin residual.
/// The constraint term vanishes on the Robin domain; off it, its value
/// depends on how the second derivative at the atoms is discretised.
pub fn hamiltonian_jet(
    q: &Jet,
    p: &MuFunction,
    cal: &CalibratedMeasure,
    params: &ModelParams,
) -> Result<f64> {
    let dq = rn_derivative_with(&q.value, q.d1.clone(), cal)?;
    let d2q = q.rn_second_derivative(cal);
    let robin = robin_residual(&q.value, cal);
    let mut h = 0.5 * inner_mu(p, p, cal)?
        + 0.5 * inner_mu(&dq, &dq, cal)?
        + 0.5 * params.w2 * inner_mu(&q.value, &q.value, cal)?;
    for j in 0..2 {
        let qj = q.value.atom(j);
        h += cal.alpha[j] * cal.alpha[j] * robin[j] * d2q.atom(j) + 0.5 * cal.a[j] * qj * qj;
    }
    Ok(h)
}

/// [`hamiltonian_jet`] with finite-difference derivatives of `Q`.
pub fn hamiltonian(
    data: &CauchyData,
    cal: &CalibratedMeasure,
    params: &ModelParams,
) -> Result<f64> {
    hamiltonian_jet(&Jet::from_grid(&data.q), &data.p, cal, params)
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

/// Outcome of [`fd_evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub data: CauchyData,
    pub steps: usize,
    /// Time step actually used (`t_end / steps`).
    pub dt: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Largest `|E(t) - E(0)| / |E(0)|` over the sampled steps.
    pub max_relative_drift: f64,
}

/// Discrete energy of a grid state: trapezoid-weighted kinetic and mass
/// terms, forward-difference strain, and the two particles.
pub fn fd_energy(u: &[f64], v: &[f64], params: &ModelParams) -> f64 {
    let n = u.len() - 1;
    let h = 1.0 / n as f64;
    let mut e = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 * h } else { h };
        e += 0.5 * w * (v[i] * v[i] + params.w2 * u[i] * u[i]);
    }
    for i in 0..n {
        let d = u[i + 1] - u[i];
        e += 0.5 * d * d / h;
    }
    e += 0.5 * params.mu0 * (v[0] * v[0] + params.w02 * u[0] * u[0]);
    e += 0.5 * params.mu1 * (v[n] * v[n] + params.w12 * u[n] * u[n]);
    e
}

fn fd_acceleration(u: &[f64], params: &ModelParams, out: &mut [f64]) {
    let n = u.len() - 1;
    let h = 1.0 / n as f64;
    let inv_h2 = 1.0 / (h * h);
    for i in 1..n {
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2 - params.w2 * u[i];
    }
    let du0 = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    let du1 = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    out[0] = du0 / params.mu0 - params.w02 * u[0];
    out[n] = -du1 / params.mu1 - params.w12 * u[n];
}

const FD_ENERGY_EVERY: usize = 10;
const FD_BLOWUP: f64 = 1e6;
const FD_CFL: f64 = 0.9;

/// Leapfrog integration of the string equation `u_tt = u_xx - w2 u` with the
/// particle equations `mu0 u_tt(0) = u_x(0) - mu0 w02 u(0)` and
/// `mu1 u_tt(1) = -u_x(1) - mu1 w12 u(1)`; wall derivatives use three-point
/// one-sided differences. The grid samples of `Q` and `P` are the initial
/// profile and velocity, their end samples the particle states.
///
/// `dt` is shrunk to `t_end / ceil(t_end / dt)` so the last step lands on `t_end`.
pub fn fd_evolve(data: &CauchyData, params: &ModelParams, dt: f64, t_end: f64) -> Result<FdReport> {
    fd_evolve_observed(data, params, dt, t_end, 0, |_, _, _| {})
}

/// [`fd_evolve`] calling `observe(t, u, u_t)` every `every` steps (and at the
/// start and end) when `every > 0`.
pub fn fd_evolve_observed<F>(
    data: &CauchyData,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
    every: usize,
    mut observe: F,
) -> Result<FdReport>
where
    F: FnMut(f64, &[f64], &[f64]),
{
    params.validate()?;
    let n = data.q.n_grid();
    if data.p.n_grid() != n {
        return Err(Error::GridMismatch {
            left: n,
            right: data.p.n_grid(),
        });
    }
    let h = 1.0 / n as f64;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if dt > FD_CFL * h {
        return Err(Error::CflViolation {
            dt,
            limit: FD_CFL * h,
        });
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t_end must be non-negative, got {t_end}"
        )));
    }
    let steps = (t_end / dt).ceil() as usize;
    let u0 = data.q.values().to_vec();
    let v0 = data.p.values().to_vec();
    let e0 = fd_energy(&u0, &v0, params);
    let t0 = data.time;
    if steps == 0 {
        if every > 0 {
            observe(t0, &u0, &v0);
        }
        return Ok(FdReport {
            data: data_with_trace_atoms(u0, v0, t0)?,
            steps: 0,
            dt,
            energy_initial: e0,
            energy_final: e0,
            max_relative_drift: 0.0,
        });
    }
    let dt = t_end / steps as f64;
    let scale = u0
        .iter()
        .chain(&v0)
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if every > 0 {
        observe(t0, &u0, &v0);
    }

    let mut acc = vec![0.0; n + 1];
    fd_acceleration(&u0, params, &mut acc);
    let mut prev = u0.clone();
    let mut cur: Vec<f64> = (0..=n)
        .map(|i| u0[i] + dt * v0[i] + 0.5 * dt * dt * acc[i])
        .collect();
    let mut next = vec![0.0; n + 1];
    let mut vel = vec![0.0; n + 1];
    let mut drift = 0.0_f64;
    let inv2dt = 0.5 / dt;

    for k in 1..=steps {
        fd_acceleration(&cur, params, &mut acc);
        for i in 0..=n {
            next[i] = 2.0 * cur[i] - prev[i] + dt * dt * acc[i];
        }
        let observe_now = every > 0 && (k % every == 0 || k == steps);
        if k % FD_ENERGY_EVERY == 0 || k == steps || observe_now {
            for i in 0..=n {
                vel[i] = (next[i] - prev[i]) * inv2dt;
            }
            let e = fd_energy(&cur, &vel, params);
            drift = drift.max((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
            let sup = cur.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(sup <= FD_BLOWUP * scale) {
                return Err(Error::BlowUp {
                    time: t0 + k as f64 * dt,
                });
            }
            if observe_now {
                observe(t0 + k as f64 * dt, &cur, &vel);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    // `prev` now holds u at t_end; its velocity was computed on the last step
    let energy_final = fd_energy(&prev, &vel, params);
    Ok(FdReport {
        data: data_with_trace_atoms(prev, vel, t0 + t_end)?,
        steps,
        dt,
        energy_initial: e0,
        energy_final,
        max_relative_drift: drift,
    })
}

fn data_with_trace_atoms(u: Vec<f64>, v: Vec<f64>, time: f64) -> Result<CauchyData> {
    let n = u.len() - 1;
    let (ua, va) = ([u[0], u[n]], [v[0], v[n]]);
    CauchyData::new(MuFunction::new(u, ua)?, MuFunction::new(v, va)?, time)
}
