//! Physical constants of the string/point-mass system and the calibration
//! of the boundary measure `mu = alpha_0 delta_0 + Lebesgue + alpha_1 delta_1`.
//!
//! Units are fixed so that the string length, tension and density are one.
//! Endpoint quantities are indexed by `j` in `{0, 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect, newton_polish, Bracket};

/// Relative residual accepted for roots of the calibration cubic.
pub const CUBIC_TOL: f64 = 1e-12;
/// Absolute (scaled) residual accepted by the boundary-condition probes.
pub const PROBE_TOL: f64 = 1e-10;
/// Number of homotopy steps used to continue the root `alpha = mu` away from resonance.
pub const HOMOTOPY_STEPS: usize = 8;
/// Spectral parameters at which a calibration is checked against the physical boundary rows.
pub const PROBE_LAMBDAS: [f64; 3] = [-2.5, 0.375, 1.75];

const COLLISION_REL: f64 = 1e-6;

/// `(-1)^j`.
#[inline]
pub fn endpoint_sign(j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The five dimensionless constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Mass ratio of the particle at `x = 0`.
    pub mu0: f64,
    /// Mass ratio of the particle at `x = 1`.
    pub mu1: f64,
    /// Restoring constant of the string (squared field mass).
    pub w2: f64,
    /// Spring frequency squared of the particle at `x = 0`.
    pub w02: f64,
    /// Spring frequency squared of the particle at `x = 1`.
    pub w12: f64,
}

impl ModelParams {
    pub fn new(mu0: f64, mu1: f64, w2: f64, w02: f64, w12: f64) -> Result<Self> {
        let p = ModelParams {
            mu0,
            mu1,
            w2,
            w02,
            w12,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu0", self.mu0),
            ("mu1", self.mu1),
            ("w2", self.w2),
            ("w02", self.w02),
            ("w12", self.w12),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.mu0 <= 0.0 || self.mu1 <= 0.0 {
            return Err(Error::InvalidParams("mass ratios must be positive".into()));
        }
        if self.w2 <= 0.0 {
            return Err(Error::InvalidParams("w2 must be positive".into()));
        }
        if self.w02 < 0.0 || self.w12 < 0.0 {
            return Err(Error::InvalidParams(
                "boundary spring constants must be non-negative".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn mu(&self, j: usize) -> f64 {
        if j == 0 {
            self.mu0
        } else {
            self.mu1
        }
    }

    /// Detuning `w_j^2 - w^2` of endpoint `j`.
    #[inline]
    pub fn delta(&self, j: usize) -> f64 {
        if j == 0 {
            self.w02 - self.w2
        } else {
            self.w12 - self.w2
        }
    }

    pub fn omega_tilde(&self) -> f64 {
        self.w2.sqrt()
    }
}

/// Sign of `1 - alpha mu delta` for the selected calibration root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// How a calibration root was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// `delta = 0`: `alpha = mu` exactly.
    Resonance,
    /// Continued from `alpha = mu` along the homotopy in `delta`.
    Continuation,
    /// Continuation lost the branch; smallest root passing the probes.
    Fallback,
    /// Built directly from user supplied weights.
    Manual,
}

/// Bookkeeping for the root chosen at one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub sign: BranchSign,
    pub selection: Selection,
    /// All positive roots of the cubic, ascending.
    pub candidates: Vec<f64>,
    /// Position of the chosen root in `candidates`.
    pub root_index: usize,
}

/// Atom weights and Robin couplings of the boundary measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedMeasure {
    pub alpha: [f64; 2],
    /// Robin couplings `A(j)`.
    pub a: [f64; 2],
    /// Laplacian corrections `C(j) = A(j) alpha_j`.
    pub c: [f64; 2],
    pub branch: [Branch; 2],
}

/// Residuals of the identities a calibration must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResiduals {
    /// `|alpha (1 - alpha mu delta)^2 - mu| / mu`.
    pub cubic: [f64; 2],
    /// `|A (1 - alpha mu delta) - mu delta| / max(1, |mu delta|)`.
    pub coupling: [f64; 2],
    /// Worst boundary-row probe residual.
    pub probe: [f64; 2],
}

impl CalibratedMeasure {
    /// A measure with prescribed weights and couplings. Used for calculus on
    /// arbitrary atomic measures, independent of any physical calibration.
    pub fn from_parts(alpha: [f64; 2], a: [f64; 2]) -> Result<Self> {
        if alpha.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "atom weights must be positive".into(),
            ));
        }
        let manual = |j: usize| Branch {
            sign: if 1.0 + alpha[j] * a[j] >= 0.0 {
                BranchSign::Plus
            } else {
                BranchSign::Minus
            },
            selection: Selection::Manual,
            candidates: vec![alpha[j]],
            root_index: 0,
        };
        Ok(CalibratedMeasure {
            alpha,
            a,
            c: [a[0] * alpha[0], a[1] * alpha[1]],
            branch: [manual(0), manual(1)],
        })
    }

    /// `1 + alpha_j A(j)`, the ratio between trace and atom value on the Robin domain.
    #[inline]
    pub fn trace_factor(&self, j: usize) -> f64 {
        1.0 + self.alpha[j] * self.a[j]
    }

    /// Modified Leibniz weight `K(j) = (-1)^j alpha_j`.
    #[inline]
    pub fn leibniz_weight(&self, j: usize) -> f64 {
        endpoint_sign(j) * self.alpha[j]
    }

    pub fn residuals(&self, params: &ModelParams) -> CalibrationResiduals {
        let mut out = CalibrationResiduals {
            cubic: [0.0; 2],
            coupling: [0.0; 2],
            probe: [0.0; 2],
        };
        for j in 0..2 {
            let (mu, d, al) = (params.mu(j), params.delta(j), self.alpha[j]);
            out.cubic[j] = cubic_value(mu, d, al).abs() / mu;
            out.coupling[j] =
                (self.a[j] * (1.0 - al * mu * d) - mu * d).abs() / (mu * d).abs().max(1.0);
            out.probe[j] = probe_residual(mu, d, al, self.a[j], j);
        }
        out
    }
}

#[inline]
fn cubic_value(mu: f64, delta: f64, alpha: f64) -> f64 {
    let t = 1.0 - alpha * mu * delta;
    alpha * t * t - mu
}

#[inline]
fn cubic_slope(mu: f64, delta: f64, alpha: f64) -> f64 {
    let s = mu * delta;
    (1.0 - s * alpha) * (1.0 - 3.0 * s * alpha)
}

/// Monotone piece of `alpha -> alpha (1 - s alpha)^2` containing `alpha`.
fn monotone_piece(s: f64, alpha: f64) -> u8 {
    if s <= 0.0 || alpha < 1.0 / (3.0 * s) {
        0
    } else if alpha < 1.0 / s {
        1
    } else {
        2
    }
}

fn refine(mu: f64, delta: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let f = |al: f64| cubic_value(mu, delta, al);
    let br = Bracket {
        lo,
        hi,
        f_lo: f(lo),
        f_hi: f(hi),
    };
    let tight = bisect(f, br, 1e-16);
    let root = newton_polish(f, |al| cubic_slope(mu, delta, al), tight, 3);
    let residual = f(root).abs();
    if residual > tol * mu {
        return Err(Error::ToleranceNotMet {
            residual: residual / mu,
            tol,
        });
    }
    Ok(root)
}

/// All positive roots of `alpha (1 - alpha mu delta)^2 = mu`, ascending.
///
/// The map `alpha -> alpha (1 - s alpha)^2` with `s = mu delta` is monotone on
/// `(0, 1/(3s))`, `(1/(3s), 1/s)` and `(1/s, inf)` when `s > 0`, and on the whole
/// half line otherwise, so each piece is bracketed and bisected separately.
/// A double root at the fold is reported twice.
pub fn calibrate_alpha(mu: f64, delta: f64, tol: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) || !mu.is_finite() || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "calibration needs mu > 0 and finite delta (mu = {mu}, delta = {delta})"
        )));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "calibration tolerance {tol} outside (0, 1e-6]"
        )));
    }
    if delta == 0.0 {
        return Ok(vec![mu]);
    }
    let s = mu * delta;
    let mut roots = Vec::with_capacity(3);
    if s < 0.0 {
        roots.push(refine(mu, delta, 0.0, mu, tol)?);
    } else {
        let fold = 1.0 / (3.0 * s);
        let zero = 1.0 / s;
        let at_fold = cubic_value(mu, delta, fold);
        if at_fold.abs() <= tol * mu {
            roots.push(fold);
            roots.push(fold);
        } else if at_fold > 0.0 {
            roots.push(refine(mu, delta, 0.0, fold, tol)?);
            roots.push(refine(mu, delta, fold, zero, tol)?);
        }
        let mut hi = 2.0 * zero;
        while cubic_value(mu, delta, hi) <= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoRealPositiveRoot { mu, delta });
            }
        }
        roots.push(refine(mu, delta, zero, hi, tol)?);
    }
    if roots.is_empty() {
        return Err(Error::NoRealPositiveRoot { mu, delta });
    }
    Ok(roots)
}

/// Robin coupling `A = mu delta / (1 - alpha mu delta)`.
pub fn coupling_a(mu: f64, delta: f64, alpha: f64) -> Result<f64> {
    let denominator = 1.0 - alpha * mu * delta;
    if denominator.abs() <= 1e-12 * (alpha * mu * delta).abs().max(1.0) {
        return Err(Error::DegenerateBranch { denominator });
    }
    Ok(mu * delta / denominator)
}

/// Checks that `Delta_mu Y = lambda Y` at the atom reproduces the physical
/// boundary row `gamma_j(Y') = (-1)^j mu_j (lambda + delta_j) gamma_j(Y)`.
///
/// For each probe the trace is set to one, the atom value follows from the
/// Robin relation, the derivative trace from the physical row, and the
/// Radon-Nikodym second derivative at the atom is compared with `lambda Y(j)`.
fn probe_residual(mu: f64, delta: f64, alpha: f64, a: f64, j: usize) -> f64 {
    let sg = endpoint_sign(j);
    let mut worst = 0.0_f64;
    for &lambda in &PROBE_LAMBDAS {
        let trace = 1.0;
        let atom = trace / (1.0 + alpha * a);
        let deriv_trace = sg * mu * (lambda + delta) * trace;
        let d1 = sg / alpha * (trace - atom);
        let d2 = sg / alpha * (deriv_trace - d1);
        let lhs = (1.0 + a * alpha) * d2;
        let rhs = lambda * atom;
        let scale = 1.0_f64.max(rhs.abs()).max(deriv_trace.abs() / alpha);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

fn branch_sign(mu: f64, delta: f64, alpha: f64) -> BranchSign {
    if 1.0 - alpha * mu * delta >= 0.0 {
        BranchSign::Plus
    } else {
        BranchSign::Minus
    }
}

fn calibrate_endpoint(mu: f64, delta: f64, j: usize, tol: f64) -> Result<(f64, f64, Branch)> {
    if delta == 0.0 {
        return Ok((
            mu,
            0.0,
            Branch {
                sign: BranchSign::Plus,
                selection: Selection::Resonance,
                candidates: vec![mu],
                root_index: 0,
            },
        ));
    }
    let candidates = calibrate_alpha(mu, delta, tol)?;

    // Homotopy from the resonant root alpha = mu, staying on one monotone piece.
    let mut tracked = Some(mu);
    for step in 1..=HOMOTOPY_STEPS {
        let Some(prev) = tracked else { break };
        let d_step = delta * step as f64 / HOMOTOPY_STEPS as f64;
        let roots = if step == HOMOTOPY_STEPS {
            candidates.clone()
        } else {
            calibrate_alpha(mu, d_step, tol)?
        };
        let piece = monotone_piece(mu * d_step, prev);
        tracked = roots
            .iter()
            .copied()
            .filter(|&r| monotone_piece(mu * d_step, r) == piece)
            .min_by(|x, y| (x - prev).abs().total_cmp(&(y - prev).abs()));
    }

    let collides = candidates
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() <= COLLISION_REL * w[1]);
    if collides {
        return Err(Error::BranchAmbiguity {
            endpoint: j,
            roots: candidates,
        });
    }

    let check = |alpha: f64| -> Option<f64> {
        let a = coupling_a(mu, delta, alpha).ok()?;
        (probe_residual(mu, delta, alpha, a, j) <= PROBE_TOL).then_some(a)
    };

    if let Some(root) = tracked {
        if let Some(a) = check(root) {
            let root_index = candidates
                .iter()
                .position(|&r| r == root)
                .unwrap_or_default();
            return Ok((
                root,
                a,
                Branch {
                    sign: branch_sign(mu, delta, root),
                    selection: Selection::Continuation,
                    candidates,
                    root_index,
                },
            ));
        }
    }

    let mut worst = 0.0_f64;
    for (root_index, &root) in candidates.iter().enumerate() {
        if let Some(a) = check(root) {
            return Ok((
                root,
                a,
                Branch {
                    sign: branch_sign(mu, delta, root),
                    selection: Selection::Fallback,
                    candidates,
                    root_index,
                },
            ));
        }
        if let Ok(a) = coupling_a(mu, delta, root) {
            worst = worst.max(probe_residual(mu, delta, root, a, j));
        } else {
            worst = f64::INFINITY;
        }
    }
    Err(Error::ValidationFailed {
        endpoint: j,
        residual: worst,
    })
}

/// Fixes the measure weights and Robin couplings from the physical constants.
pub fn calibrate(params: &ModelParams, tol: f64) -> Result<CalibratedMeasure> {
    params.validate()?;
    let (a0, c0, b0) = calibrate_endpoint(params.mu0, params.delta(0), 0, tol)?;
    let (a1, c1, b1) = calibrate_endpoint(params.mu1, params.delta(1), 1, tol)?;
    Ok(CalibratedMeasure {
        alpha: [a0, a1],
        a: [c0, c1],
        c: [c0 * a0, c1 * a1],
        branch: [b0, b1],
    })
}
