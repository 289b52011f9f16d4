//! Secular equations, eigenfunctions and the orthonormal basis `{Y_n}`.
//!
//! Three families of eigenvalues `lambda` of the generalised Laplacian:
//!
//! * negative, `lambda = -omega^2`: oscillatory eigenfunctions, infinitely many;
//! * positive, `lambda = omega^2 < w2`: exponential eigenfunctions, finitely many,
//!   possible only when some detuning is negative;
//! * zero: an affine eigenfunction on a codimension-one parameter locus.
//!
//! Mode labels follow the sign of the eigenvalue: negative-`lambda` modes get
//! `n = 1, 2, ...` in order of increasing `omega`, the zero mode gets `n = 0`,
//! and positive-`lambda` modes get `n = -1, -2, ...` in order of increasing
//! `omega`. Modes are stored by ascending `n`, i.e. by descending `lambda`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{CalibratedMeasure, ModelParams};
use crate::mufunc::{inner_mu, robin_residual, Jet, MuFunction};
use crate::roots::{bisect, newton_polish, sign_changes, Bracket};

/// Sign-change samples per `pi`-interval in the low-frequency scan.
pub const SCAN_PER_PI: usize = 4096;
/// Initial number of `pi`-intervals covered by the low-frequency scan.
pub const SCAN_INTERVALS: usize = 20;
/// Subdivisions of the positive-family scan.
pub const POSITIVE_SCAN: usize = 10_000;
/// Two roots closer than this are reported as a collision.
pub const COLLISION_GAP: f64 = 1e-9;
/// Relative disagreement that triggers a normalization warning.
pub const NORM_WARN_REL: f64 = 1e-6;
/// Tolerance of the zero-mode condition.
pub const ZERO_MODE_TOL: f64 = 1e-12;
/// Tolerance of the Robin test applied to every basis function.
pub const BASIS_ROBIN_TOL: f64 = 1e-9;

const ROOT_REL_TOL: f64 = 4e-16;
const NEWTON_STEPS: usize = 3;
const MAX_SCAN_DOUBLINGS: usize = 5;

// ---------------------------------------------------------------------------
// Secular functions

fn r_poly(w: f64, p: &ModelParams) -> f64 {
    let w2 = w * w;
    p.mu0 * (w2 - p.delta(0)) + p.mu1 * (w2 - p.delta(1))
}

fn p_poly(w: f64, p: &ModelParams) -> f64 {
    let w2 = w * w;
    w2 - p.mu0 * p.mu1 * (w2 - p.delta(0)) * (w2 - p.delta(1))
}

/// Secular function of the negative family:
/// `P(w) sin w + R(w) w cos w` with
/// `P = w^2 - mu0 mu1 (w^2 - D0)(w^2 - D1)` and `R = mu0 (w^2 - D0) + mu1 (w^2 - D1)`.
pub fn secular_negative(omega: f64, params: &ModelParams) -> f64 {
    let (s, c) = omega.sin_cos();
    p_poly(omega, params) * s + r_poly(omega, params) * omega * c
}

/// Derivative of [`secular_negative`] in `omega`.
pub fn secular_negative_derivative(omega: f64, params: &ModelParams) -> f64 {
    let (s, c) = omega.sin_cos();
    let w = omega;
    let (d0, d1) = (params.delta(0), params.delta(1));
    let p = p_poly(w, params);
    let r = r_poly(w, params);
    let dp = 2.0 * w - params.mu0 * params.mu1 * 2.0 * w * (2.0 * w * w - d0 - d1);
    let dr = 2.0 * w * (params.mu0 + params.mu1);
    dp * s + p * c + (dr * w + r) * c - r * w * s
}

/// `K = (1 + mu0 D0)(1 + mu1 D1) - 1`. The negative secular function behaves
/// like `-K omega` and the positive one like `-2 K omega` near the origin.
pub fn zero_mode_defect(params: &ModelParams) -> f64 {
    let a0 = params.mu0 * params.delta(0);
    let a1 = params.mu1 * params.delta(1);
    a0 + a1 + a0 * a1
}

/// `omega -> 0` limit of `secular_negative(omega) / omega`.
pub fn secular_negative_limit_at_zero(params: &ModelParams) -> f64 {
    -zero_mode_defect(params)
}

/// Secular function of the positive family, as
/// `e^{-w}(w - mu0(w^2+D0))(w - mu1(w^2+D1)) - e^{w}(w + mu0(w^2+D0))(w + mu1(w^2+D1))`.
pub fn secular_positive(omega: f64, params: &ModelParams) -> f64 {
    let (u0, u1, v0, v1) = positive_factors(omega, params);
    (-omega).exp() * u0 * u1 - omega.exp() * v0 * v1
}

fn positive_factors(w: f64, p: &ModelParams) -> (f64, f64, f64, f64) {
    let e0 = p.mu0 * (w * w + p.delta(0));
    let e1 = p.mu1 * (w * w + p.delta(1));
    (w - e0, w - e1, w + e0, w + e1)
}

/// `e^{-w} secular_positive(w)`: same zeros, no overflow.
fn positive_scaled(w: f64, p: &ModelParams) -> f64 {
    let (u0, u1, v0, v1) = positive_factors(w, p);
    (-2.0 * w).exp() * u0 * u1 - v0 * v1
}

fn positive_scaled_derivative(w: f64, p: &ModelParams) -> f64 {
    let (u0, u1, v0, v1) = positive_factors(w, p);
    let du0 = 1.0 - 2.0 * p.mu0 * w;
    let du1 = 1.0 - 2.0 * p.mu1 * w;
    let dv0 = 1.0 + 2.0 * p.mu0 * w;
    let dv1 = 1.0 + 2.0 * p.mu1 * w;
    (-2.0 * w).exp() * (-2.0 * u0 * u1 + du0 * u1 + u0 * du1) - (dv0 * v1 + v0 * dv1)
}

fn refine_root<F, D>(f: F, df: D, br: Bracket) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let tight = bisect(&f, br, ROOT_REL_TOL);
    newton_polish(&f, &df, tight, NEWTON_STEPS)
}

fn check_collisions(roots: &[f64]) -> Result<()> {
    for w in roots.windows(2) {
        if w[1] - w[0] < COLLISION_GAP {
            return Err(Error::BracketCollision {
                first: w[0],
                second: w[1],
            });
        }
    }
    Ok(())
}

/// Roots of the negative family together with the low-range bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeRoots {
    /// Strictly increasing secular roots.
    pub omegas: Vec<f64>,
    /// Last `pi`-interval of the dense scan whose root count differs from one.
    pub n0: Option<usize>,
    /// Root count of every `pi`-interval covered by the dense scan.
    pub scan_counts: Vec<usize>,
}

fn dense_negative_scan(params: &ModelParams, a: f64, b: f64, samples: usize) -> Vec<f64> {
    let k = zero_mode_defect(params);
    let h = |w: f64| {
        if w == 0.0 {
            -k
        } else {
            secular_negative(w, params) / w
        }
    };
    // with K = 0 the scan function vanishes at the origin; start just inside
    let start = if a == 0.0 && k == 0.0 {
        0.5 * (b - a) / samples as f64
    } else {
        a
    };
    let f = |w: f64| secular_negative(w, params);
    let df = |w: f64| secular_negative_derivative(w, params);
    sign_changes(h, start, b, samples)
        .into_iter()
        .map(|br| {
            // translate the bracket of f/w into one of f; both share signs for w > 0
            let lo = br.lo.max(f64::MIN_POSITIVE);
            let fb = Bracket {
                lo,
                hi: br.hi,
                f_lo: if br.lo == 0.0 { -k } else { f(lo) },
                f_hi: f(br.hi),
            };
            refine_root(f, df, fb)
        })
        .collect()
}

/// Finds the first `k_max` roots of [`secular_negative`] on `(0, inf)`.
///
/// A dense scan over `(0, L pi)` locates every root and counts roots per
/// `pi`-interval; `n0` is the last interval whose count is not one. The scan
/// range doubles while `n0` lies within five intervals of its end. Above
/// `n0` each interval is solved by a single bracketed solve.
pub fn find_negative_modes(params: &ModelParams, k_max: usize) -> Result<NegativeRoots> {
    params.validate()?;
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let mut intervals = SCAN_INTERVALS;
    let mut doublings = 0;
    let (low, counts, n0) = loop {
        let roots =
            dense_negative_scan(params, 0.0, intervals as f64 * PI, SCAN_PER_PI * intervals);
        let mut counts = vec![0usize; intervals];
        for w in &roots {
            let k = ((w / PI).floor() as usize).min(intervals - 1);
            counts[k] += 1;
        }
        let n0 = counts.iter().rposition(|&c| c != 1);
        match n0 {
            Some(n) if n + 5 > intervals && doublings < MAX_SCAN_DOUBLINGS => {
                intervals *= 2;
                doublings += 1;
            }
            _ => break (roots, counts, n0),
        }
    };

    let first_regular = n0.map_or(0, |n| n + 1);
    let mut omegas: Vec<f64> = low
        .into_iter()
        .filter(|w| (w / PI).floor() < first_regular as f64)
        .collect();
    if omegas.len() < k_max {
        let need = k_max - omegas.len();
        let tail: Vec<Vec<f64>> = (first_regular..first_regular + need)
            .into_par_iter()
            .map(|k| solve_bracket(params, k))
            .collect();
        omegas.extend(tail.into_iter().flatten());
    }
    omegas.truncate(k_max);
    check_collisions(&omegas)?;
    Ok(NegativeRoots {
        omegas,
        n0,
        scan_counts: counts,
    })
}

/// Root(s) of the negative family in `(k pi, (k+1) pi)`.
fn solve_bracket(params: &ModelParams, k: usize) -> Vec<f64> {
    let f = |w: f64| secular_negative(w, params);
    let df = |w: f64| secular_negative_derivative(w, params);
    let (lo, hi) = (k as f64 * PI, (k + 1) as f64 * PI);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if lo > 0.0 && f_lo != 0.0 && f_hi != 0.0 && (f_lo < 0.0) != (f_hi < 0.0) {
        return vec![refine_root(f, df, Bracket { lo, hi, f_lo, f_hi })];
    }
    // no clean sign change at the bracket ends: fall back to a dense scan
    dense_negative_scan(params, lo, hi, SCAN_PER_PI)
}

/// Roots of the positive family found by scanning `(0, 2 w)` with
/// `w = sqrt(w2)`. Roots at or above `w` are non-physical.
pub fn find_positive_roots(params: &ModelParams) -> Result<Vec<f64>> {
    params.validate()?;
    let k = zero_mode_defect(params);
    let top = 2.0 * params.omega_tilde();
    let h = |w: f64| {
        if w == 0.0 {
            -2.0 * k
        } else {
            positive_scaled(w, params) / w
        }
    };
    let start = if k == 0.0 {
        0.5 * top / POSITIVE_SCAN as f64
    } else {
        0.0
    };
    let f = |w: f64| positive_scaled(w, params);
    let df = |w: f64| positive_scaled_derivative(w, params);
    let roots: Vec<f64> = sign_changes(h, start, top, POSITIVE_SCAN)
        .into_iter()
        .map(|br| {
            let lo = br.lo.max(f64::MIN_POSITIVE);
            refine_root(
                f,
                df,
                Bracket {
                    lo,
                    hi: br.hi,
                    f_lo: if br.lo == 0.0 { -2.0 * k } else { f(lo) },
                    f_hi: f(br.hi),
                },
            )
        })
        .collect();
    check_collisions(&roots)?;
    Ok(roots)
}

// ---------------------------------------------------------------------------
// Eigenfunctions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeClass {
    /// `lambda < 0`
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    /// `0 < lambda < w2`
    #[serde(rename = "+")]
    Positive,
}

impl ModeClass {
    pub fn symbol(self) -> &'static str {
        match self {
            ModeClass::Negative => "-",
            ModeClass::Zero => "0",
            ModeClass::Positive => "+",
        }
    }
}

/// Unnormalised closed-form eigenfunction.
///
/// * negative: `a cos(w x) + b sin(w x)`, `a = w`, `b = mu0 (D0 - w^2)`;
/// * positive: `a e^{w x} + b e^{-w x}`, `a = w + mu0 (w^2 + D0)`, `b = w - mu0 (w^2 + D0)`;
/// * zero: `a + b x`, `a = 1`, `b = mu0 D0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub class: ModeClass,
    pub omega: f64,
    pub a: f64,
    pub b: f64,
}

impl Eigenfunction {
    pub fn new(class: ModeClass, omega: f64, params: &ModelParams) -> Self {
        let d0 = params.delta(0);
        let (a, b) = match class {
            ModeClass::Negative => (omega, params.mu0 * (d0 - omega * omega)),
            ModeClass::Positive => {
                let e = params.mu0 * (omega * omega + d0);
                (omega + e, omega - e)
            }
            ModeClass::Zero => (1.0, params.mu0 * d0),
        };
        let omega = if class == ModeClass::Zero { 0.0 } else { omega };
        Eigenfunction { class, omega, a, b }
    }

    pub fn lambda(&self) -> f64 {
        match self.class {
            ModeClass::Negative => -self.omega * self.omega,
            ModeClass::Positive => self.omega * self.omega,
            ModeClass::Zero => 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let w = self.omega;
        match self.class {
            ModeClass::Negative => {
                let (s, c) = (w * x).sin_cos();
                self.a * c + self.b * s
            }
            ModeClass::Positive => self.a * (w * x).exp() + self.b * (-w * x).exp(),
            ModeClass::Zero => self.a + self.b * x,
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        let w = self.omega;
        match self.class {
            ModeClass::Negative => {
                let (s, c) = (w * x).sin_cos();
                w * (self.b * c - self.a * s)
            }
            ModeClass::Positive => w * (self.a * (w * x).exp() - self.b * (-w * x).exp()),
            ModeClass::Zero => self.b,
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.lambda() * self.eval(x)
    }

    /// `int_0^1 X^2` in closed form.
    pub fn square_integral(&self) -> f64 {
        let (a, b, w) = (self.a, self.b, self.omega);
        match self.class {
            ModeClass::Negative => {
                let s2 = (2.0 * w).sin() / (4.0 * w);
                let s = w.sin();
                a * a * (0.5 + s2) + b * b * (0.5 - s2) + a * b * s * s / w
            }
            ModeClass::Positive => {
                let up = (2.0 * w).exp_m1() / (2.0 * w);
                let down = -(-2.0 * w).exp_m1() / (2.0 * w);
                a * a * up + b * b * down + 2.0 * a * b
            }
            ModeClass::Zero => a * a + a * b + b * b / 3.0,
        }
    }

    /// Residuals of the two boundary rows
    /// `X'(0) = mu0 (lambda + D0) X(0)` and `X'(1) = -mu1 (lambda + D1) X(1)`,
    /// each scaled by the size of its terms.
    pub fn boundary_residuals(&self, params: &ModelParams) -> [f64; 2] {
        let lam = self.lambda();
        let r0 = params.mu0 * (lam + params.delta(0)) * self.eval(0.0);
        let r1 = -params.mu1 * (lam + params.delta(1)) * self.eval(1.0);
        let (d0, d1) = (self.d1(0.0), self.d1(1.0));
        [
            (d0 - r0).abs() / d0.abs().max(r0.abs()).max(1.0),
            (d1 - r1).abs() / d1.abs().max(r1.abs()).max(1.0),
        ]
    }
}

/// `g^2 = mu0 X(0)^2 + mu1 X(1)^2 + int X^2`, the squared norm making
/// `<Y, Y>_mu = 1` (the atom weights satisfy `alpha_j (1 - alpha_j mu_j D_j)^2 = mu_j`).
pub fn normalization_exact(x: &Eigenfunction, params: &ModelParams) -> f64 {
    let (x0, x1) = (x.eval(0.0), x.eval(1.0));
    (params.mu0 * x0 * x0 + params.mu1 * x1 * x1 + x.square_integral()).sqrt()
}

/// Approximate normalization for the negative family,
/// `g^2 = 1/2 (mu0 D0 + (1+mu0) w^2 + mu0^2 (w^2-D0)^2
///   + mu1^2 (w^2+D1)(w^2 + mu0^2 (w^2-D0)^2) / (w^2 + mu1^2 (w^2-D1)^2))`.
///
/// Exact when `mu1 = 1`; otherwise it agrees with [`normalization_exact`]
/// only to leading order in `w`.
pub fn normalization_approx(omega: f64, params: &ModelParams) -> f64 {
    let w2 = omega * omega;
    let (mu0, mu1) = (params.mu0, params.mu1);
    let (d0, d1) = (params.delta(0), params.delta(1));
    let b = mu0 * mu0 * (w2 - d0) * (w2 - d0);
    let tail = mu1 * mu1 * (w2 + d1) * (w2 + b) / (w2 + mu1 * mu1 * (w2 - d1) * (w2 - d1));
    (0.5 * (mu0 * d0 + (1.0 + mu0) * w2 + b + tail)).sqrt()
}

/// `omega_k - k pi - (1/mu0 + 1/mu1) / (k pi)`.
pub fn asymptote_error(omega: f64, k: usize, params: &ModelParams) -> f64 {
    let kp = k as f64 * PI;
    omega - kp - (1.0 / params.mu0 + 1.0 / params.mu1) / kp
}

/// Returns the affine eigenfunction when `K = 0` within [`ZERO_MODE_TOL`].
pub fn zero_mode(params: &ModelParams) -> Option<Eigenfunction> {
    if zero_mode_defect(params).abs() <= ZERO_MODE_TOL {
        Some(Eigenfunction::new(ModeClass::Zero, 0.0, params))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Modes and the spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: i64,
    pub class: ModeClass,
    pub lambda: f64,
    pub omega: f64,
    /// Normalization, `Y_n = X_n / g` in the interior.
    pub g: f64,
    /// Approximate closed-form normalization of the negative family, for comparison.
    pub g_approx: Option<f64>,
    /// `floor(omega / pi)` for negative-family modes.
    pub bracket: Option<usize>,
    pub eigenfunction: Eigenfunction,
    /// `(1 - alpha_j mu_j D_j)`, the ratio between atom value and trace.
    pub atom_factor: [f64; 2],
}

impl Mode {
    fn build(class: ModeClass, omega: f64, params: &ModelParams, cal: &CalibratedMeasure) -> Mode {
        let ef = Eigenfunction::new(class, omega, params);
        let g = normalization_exact(&ef, params);
        let g_approx = (class == ModeClass::Negative).then(|| normalization_approx(omega, params));
        let bracket = (class == ModeClass::Negative).then(|| (omega / PI).floor() as usize);
        let atom_factor = [0, 1].map(|j| 1.0 - cal.alpha[j] * params.mu(j) * params.delta(j));
        Mode {
            index: 0,
            class,
            lambda: ef.lambda(),
            omega: ef.omega,
            g,
            g_approx,
            bracket,
            eigenfunction: ef,
            atom_factor,
        }
    }

    /// `Y_n(x)` on `[0, 1]` (traces at the ends).
    pub fn eval(&self, x: f64) -> f64 {
        self.eigenfunction.eval(x) / self.g
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.eigenfunction.d1(x) / self.g
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.eigenfunction.d2(x) / self.g
    }

    /// Atom value `Y_n(j)`.
    pub fn atom(&self, j: usize) -> f64 {
        self.atom_factor[j] * self.eigenfunction.eval(j as f64) / self.g
    }

    /// `sqrt(w2 - lambda)`, the oscillation frequency in time.
    pub fn frequency(&self, params: &ModelParams) -> Result<f64> {
        let gap = params.w2 - self.lambda;
        if !(gap > 0.0) {
            return Err(Error::FrequencyDomainError {
                index: self.index,
                lambda: self.lambda,
                w2: params.w2,
            });
        }
        Ok(gap.sqrt())
    }

    pub fn asymptote_error(&self, params: &ModelParams) -> Option<f64> {
        match self.bracket {
            Some(k) if k > 0 => Some(asymptote_error(self.omega, k, params)),
            _ => None,
        }
    }

    /// Relative mismatch between the approximate and exact normalization.
    pub fn normalization_mismatch(&self) -> Option<f64> {
        self.g_approx.map(|gp| (gp - self.g).abs() / self.g)
    }
}

/// Result of a Gram-matrix check of the leading basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoCertificate {
    pub count: usize,
    pub n_grid: usize,
    pub max_offdiag: f64,
    pub max_diag_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub params: ModelParams,
    pub cal: CalibratedMeasure,
    /// Physical modes by ascending index.
    pub modes: Vec<Mode>,
    /// Number of negative-family modes.
    pub n_max: usize,
    pub n0: Option<usize>,
    /// Positive-family roots with `omega^2 >= w2`, excluded from the basis.
    pub nonphysical: Vec<f64>,
    pub warnings: Vec<String>,
    pub certificate: Option<OrthoCertificate>,
}

impl Spectrum {
    /// Solves all three families and normalises `n_max` negative-family modes
    /// plus every physical positive and zero mode.
    pub fn build(params: &ModelParams, cal: &CalibratedMeasure, n_max: usize) -> Result<Spectrum> {
        let neg = find_negative_modes(params, n_max)?;
        let pos = find_positive_roots(params)?;
        let wt = params.omega_tilde();
        let (physical, nonphysical): (Vec<f64>, Vec<f64>) = pos.into_iter().partition(|&w| w < wt);

        let mut modes: Vec<Mode> = physical
            .iter()
            .rev()
            .map(|&w| Mode::build(ModeClass::Positive, w, params, cal))
            .collect();
        let n_pos = modes.len() as i64;
        for (i, m) in modes.iter_mut().enumerate() {
            m.index = -(n_pos - i as i64);
        }
        if zero_mode(params).is_some() {
            modes.push(Mode::build(ModeClass::Zero, 0.0, params, cal));
        }
        let negative: Vec<Mode> = neg
            .omegas
            .par_iter()
            .enumerate()
            .map(|(i, &w)| {
                let mut m = Mode::build(ModeClass::Negative, w, params, cal);
                m.index = i as i64 + 1;
                m
            })
            .collect();
        modes.extend(negative);

        let mut warnings = Vec::new();
        for m in &modes {
            if let Some(rel) = m.normalization_mismatch() {
                if rel > NORM_WARN_REL {
                    warnings.push(format!(
                        "mode {}: approximate normalization differs from the exact norm by {:.3e} relative",
                        m.index, rel
                    ));
                }
            }
        }
        if !nonphysical.is_empty() {
            warnings.push(format!(
                "{} positive-family root(s) with omega >= sqrt(w2) excluded",
                nonphysical.len()
            ));
        }
        Ok(Spectrum {
            params: *params,
            cal: cal.clone(),
            modes,
            n_max: neg.omegas.len(),
            n0: neg.n0,
            nonphysical,
            warnings,
            certificate: None,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, index: i64) -> Option<&Mode> {
        self.modes.iter().find(|m| m.index == index)
    }

    pub fn negative_modes(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.class == ModeClass::Negative)
    }

    /// Samples `Y_n` on `grid` and checks that it lies in the Robin domain.
    pub fn basis_mode(&self, mode: &Mode, grid: &GridSpec) -> Result<MuFunction> {
        grid.validate()?;
        let f = MuFunction::from_fn(grid, |x| mode.eval(x), [mode.atom(0), mode.atom(1)]);
        let r = robin_residual(&f, &self.cal);
        let scale = 1.0 + mode.atom(0).abs().max(mode.atom(1).abs());
        let worst = r[0].abs().max(r[1].abs());
        if worst > BASIS_ROBIN_TOL * scale {
            return Err(Error::RobinViolation {
                index: mode.index,
                residual: worst,
            });
        }
        Ok(f)
    }

    /// `Y_n` with analytic first and second derivatives.
    pub fn basis_jet(&self, mode: &Mode, grid: &GridSpec) -> Result<Jet> {
        let value = self.basis_mode(mode, grid)?;
        let pts = grid.points();
        let d1 = pts.iter().map(|&x| mode.d1(x)).collect();
        let d2 = pts.iter().map(|&x| mode.d2(x)).collect();
        Jet::new(value, d1, d2)
    }

    /// First `count` basis functions.
    pub fn basis(&self, grid: &GridSpec, count: usize) -> Result<Vec<MuFunction>> {
        self.modes
            .iter()
            .take(count)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|m| self.basis_mode(m, grid))
            .collect()
    }

    /// Largest `|Delta_mu Y - lambda Y|` on the atoms and in the interior,
    /// with analytic interior derivatives.
    pub fn eigen_residual(&self, mode: &Mode, grid: &GridSpec) -> Result<(f64, f64)> {
        let jet = self.basis_jet(mode, grid)?;
        let lap = jet.laplacian(&self.cal);
        let y = &jet.value;
        let atoms = (0..2)
            .map(|j| (lap.atom(j) - mode.lambda * y.atom(j)).abs())
            .fold(0.0, f64::max);
        let interior = lap
            .values()
            .iter()
            .zip(y.values())
            .map(|(l, v)| (l - mode.lambda * v).abs())
            .fold(0.0, f64::max);
        Ok((atoms, interior))
    }

    /// Builds the Gram matrix of the first `count` basis functions under
    /// `<.,.>_mu` on `grid` and records its deviation from the identity.
    pub fn certify(&mut self, grid: &GridSpec, count: usize) -> Result<OrthoCertificate> {
        let count = count.min(self.modes.len());
        let basis = self.basis(grid, count)?;
        let rows: Vec<(f64, f64)> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut off = 0.0_f64;
                let mut diag = 0.0_f64;
                for j in i..count {
                    let v = inner_mu(&basis[i], &basis[j], &self.cal)?;
                    if i == j {
                        diag = (v - 1.0).abs();
                    } else {
                        off = off.max(v.abs());
                    }
                }
                Ok((off, diag))
            })
            .collect::<Result<_>>()?;
        let cert = OrthoCertificate {
            count,
            n_grid: grid.n_grid,
            max_offdiag: rows.iter().map(|r| r.0).fold(0.0, f64::max),
            max_diag_error: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        };
        self.certificate = Some(cert);
        Ok(cert)
    }

    /// CSV with columns `n,class,omega,lambda,g,asymptote_error`; the last
    /// column is empty where the asymptotic law does not apply.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,class,omega,lambda,g,asymptote_error\n");
        for m in &self.modes {
            let _ = write!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e},",
                m.index,
                m.class.symbol(),
                m.omega,
                m.lambda,
                m.g
            );
            if let Some(e) = m.asymptote_error(&self.params) {
                let _ = write!(s, "{e:.16e}");
            }
            s.push('\n');
        }
        s
    }
}
