//! One-particle structure of the quantised field.
//!
//! A real solution with coefficients `(Q_n, P_n)` splits into
//! `Q_n^+ e^{i W_n t} + Q_n^- e^{-i W_n t}` with `Q_n^{+-} = (Q_n -+ i P_n / W_n) / 2`
//! and `W_n = sqrt(w2 - lambda_n)`. Positive-frequency data (`Q^- = 0`, i.e.
//! `P_n = i W_n Q_n`) carry the product
//! `<Q1, Q2>_+ = 2 sum_n W_n conj(Q1_n) Q2_n`, and `Z_n = Y_n / sqrt(2 W_n)`
//! is orthonormal for it. [`OneParticleVector`] stores coordinates in the
//! `Z_n` basis, `psi_n = sqrt(2 W_n) Q_n^+`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Basis, ModeCoefficients};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, power_law_fit, PowerFit};
use crate::mufunc::{inner_mu, MuFunction};
use crate::spectrum::Spectrum;

/// Smallest number of modes accepted by [`factorization_diagnostic`].
pub const MIN_DIAGNOSTIC_MODES: usize = 100;
/// Octave-slope ratio window for a DIVERGENT verdict.
pub const OCTAVE_RATIO: (f64, f64) = (0.8, 1.25);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneParticleVector {
    pub indices: Vec<i64>,
    pub coeffs: Vec<Complex64>,
}

impl OneParticleVector {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `<self, other>_+ = sum conj(self_n) other_n`, antilinear in `self`.
    pub fn inner(&self, other: &OneParticleVector) -> Result<Complex64> {
        if self.indices != other.indices {
            return Err(Error::BasisMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Positive- and negative-frequency parts of real data, both in `Z_n` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySplit {
    pub positive: OneParticleVector,
    pub negative: OneParticleVector,
}

/// Splits mode coefficients into frequency parts and rescales to the `Z_n` basis.
pub fn positive_frequency(coeffs: &ModeCoefficients, basis: &Basis) -> Result<FrequencySplit> {
    if coeffs.len() != basis.len() {
        return Err(Error::BasisMismatch {
            left: basis.len(),
            right: coeffs.len(),
        });
    }
    let w = basis.frequencies()?;
    let i = Complex64::i();
    let mut pos = Vec::with_capacity(w.len());
    let mut neg = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        let scale = (2.0 * w[k]).sqrt();
        let shifted = i * coeffs.p[k] / w[k];
        pos.push(0.5 * (coeffs.q[k] - shifted) * scale);
        neg.push(0.5 * (coeffs.q[k] + shifted) * scale);
    }
    Ok(FrequencySplit {
        positive: OneParticleVector {
            indices: coeffs.indices.clone(),
            coeffs: pos,
        },
        negative: OneParticleVector {
            indices: coeffs.indices.clone(),
            coeffs: neg,
        },
    })
}

/// Positive-frequency Cauchy data `(Q, i W Q)` whose `Z_n` coordinates are `psi`.
pub fn from_one_particle(psi: &OneParticleVector, basis: &Basis) -> Result<ModeCoefficients> {
    if psi.len() != basis.len() {
        return Err(Error::BasisMismatch {
            left: basis.len(),
            right: psi.len(),
        });
    }
    let w = basis.frequencies()?;
    let q: Vec<Complex64> = psi
        .coeffs
        .iter()
        .zip(&w)
        .map(|(c, w)| c / (2.0 * w).sqrt())
        .collect();
    let p = q
        .iter()
        .zip(&w)
        .map(|(q, w)| Complex64::i() * w * q)
        .collect();
    Ok(ModeCoefficients {
        indices: psi.indices.clone(),
        q,
        p,
        q_residual: 0.0,
        p_residual: 0.0,
    })
}

/// Fourier form `2 sum_n W_n conj(a_n) b_n` on `Y_n` coefficients.
pub fn inner_plus(a: &[Complex64], b: &[Complex64], basis: &Basis) -> Result<Complex64> {
    if a.len() != basis.len() || b.len() != basis.len() {
        return Err(Error::BasisMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let w = basis.frequencies()?;
    Ok(a.iter()
        .zip(b)
        .zip(&w)
        .map(|((x, y), w)| 2.0 * w * x.conj() * y)
        .sum())
}

/// A complex-valued function on the measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: MuFunction,
    pub im: MuFunction,
}

impl ComplexField {
    /// `sum c_n Y_n`.
    pub fn from_coefficients(c: &[Complex64], basis: &Basis) -> Result<Self> {
        let re: Vec<f64> = c.iter().map(|z| z.re).collect();
        let im: Vec<f64> = c.iter().map(|z| z.im).collect();
        Ok(ComplexField {
            re: basis.superpose(&re)?,
            im: basis.superpose(&im)?,
        })
    }
}

/// Integral form `2 <conj(Q1), sqrt(w2 - Delta) Q2>_mu`. The square root acts
/// modewise on the projection of `Q2`; the outer product is a quadrature.
pub fn inner_plus_integral(
    q1: &ComplexField,
    q2: &ComplexField,
    basis: &Basis,
) -> Result<Complex64> {
    let w = basis.frequencies()?;
    let coeff = |f: &MuFunction| -> Result<Vec<f64>> {
        basis
            .functions
            .par_iter()
            .map(|y| inner_mu(y, f, &basis.cal))
            .collect()
    };
    let (cr, ci) = (coeff(&q2.re)?, coeff(&q2.im)?);
    let sr: Vec<f64> = cr.iter().zip(&w).map(|(c, w)| c * w).collect();
    let si: Vec<f64> = ci.iter().zip(&w).map(|(c, w)| c * w).collect();
    let (s_re, s_im) = (basis.superpose(&sr)?, basis.superpose(&si)?);
    let cal = &basis.cal;
    // conj(a + ib)(c + id) = (ac + bd) + i(ad - bc)
    let re = inner_mu(&q1.re, &s_re, cal)? + inner_mu(&q1.im, &s_im, cal)?;
    let im = inner_mu(&q1.re, &s_im, cal)? - inner_mu(&q1.im, &s_re, cal)?;
    Ok(2.0 * Complex64::new(re, im))
}

/// One-particle energies `sqrt(w2 - lambda_n)` of the first `n` modes.
pub fn quantum_frequencies(spec: &Spectrum, n: usize) -> Result<Vec<f64>> {
    spec.modes
        .iter()
        .take(n)
        .map(|m| m.frequency(&spec.params))
        .collect()
}

/// Coefficient of the boundary indicator on one negative-family mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorCoefficient {
    pub index: i64,
    /// `floor(omega / pi)`, the label of the asymptotic law.
    pub bracket: usize,
    /// `<Y_n, F>_mu = alpha_0 Y_n(0)` with the atom value of `Y_n`.
    pub y_coefficient: f64,
    /// `<F, Z_n>_+ = sqrt(2 W_n) <Y_n, F>_mu`.
    pub z_coefficient: f64,
}

/// Coefficients of `F = 1 at x = 0, 0 elsewhere` on the first `n_max`
/// negative-family modes. Exact: only the atom at 0 contributes.
pub fn boundary_indicator_coefficients(
    spec: &Spectrum,
    n_max: usize,
) -> Result<Vec<IndicatorCoefficient>> {
    let modes: Vec<_> = spec.negative_modes().take(n_max).collect();
    if modes.len() < n_max {
        return Err(Error::InsufficientModes {
            got: modes.len(),
            need: n_max,
        });
    }
    modes
        .into_iter()
        .map(|m| {
            let y = spec.cal.alpha[0] * m.atom(0);
            let w = m.frequency(&spec.params)?;
            Ok(IndicatorCoefficient {
                index: m.index,
                bracket: m.bracket.unwrap_or(0),
                y_coefficient: y,
                z_coefficient: (2.0 * w).sqrt() * y,
            })
        })
        .collect()
}

/// `2 sqrt(alpha_0) / sqrt(mu_0 pi)`, prefactor of `|<F, Z_n>_+| ~ c n^{-1/2}`.
pub fn indicator_prefactor(spec: &Spectrum) -> f64 {
    2.0 * spec.cal.alpha[0].sqrt() / (spec.params.mu0 * std::f64::consts::PI).sqrt()
}

/// Power-law fit of `|<F, Z_n>_+|` against the bracket label over `[lo, hi]`.
pub fn fit_indicator_law(
    coeffs: &[IndicatorCoefficient],
    lo: usize,
    hi: usize,
) -> Result<PowerFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = coeffs
        .iter()
        .filter(|c| c.bracket >= lo && c.bracket <= hi)
        .map(|c| (c.bracket as f64, c.z_coefficient.abs()))
        .unzip();
    power_law_fit(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Divergent,
    Convergent,
}

/// Growth analysis of `S_N = sum_{n <= N} |c_n|^2` against `ln N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumReport {
    pub partial_sums: Vec<f64>,
    /// Slope of `S_N` against `ln N` over `N in [n/4, n]`.
    pub log_slope: f64,
    /// Slopes over `[n/4, n/2]` and `[n/2, n]`.
    pub octave_slopes: [f64; 2],
    pub verdict: Verdict,
}

fn slope_over(sums: &[f64], lo: usize, hi: usize) -> Result<f64> {
    let x: Vec<f64> = (lo..=hi).map(|n| (n as f64).ln()).collect();
    let y: Vec<f64> = (lo..=hi).map(|n| sums[n - 1]).collect();
    Ok(linear_fit(&x, &y)?.slope)
}

/// Logarithmic growth test of the partial sums of `|c_n|^2`.
///
/// The verdict is DIVERGENT when `S_N` grows with a positive slope in
/// `ln N` that is the same (ratio within [`OCTAVE_RATIO`]) over the last two
/// octaves; a convergent series has slopes decaying like `1/N`.
pub fn partial_sum_diagnostic(values: &[f64]) -> Result<PartialSumReport> {
    let n = values.len();
    if n < MIN_DIAGNOSTIC_MODES {
        return Err(Error::InsufficientModes {
            got: n,
            need: MIN_DIAGNOSTIC_MODES,
        });
    }
    let partial_sums: Vec<f64> = values
        .iter()
        .scan(0.0, |s, v| {
            *s += v * v;
            Some(*s)
        })
        .collect();
    let (q, h) = (n / 4, n / 2);
    let octave_slopes = [
        slope_over(&partial_sums, q, h)?,
        slope_over(&partial_sums, h, n)?,
    ];
    let log_slope = slope_over(&partial_sums, q, n)?;
    let ratio = octave_slopes[1] / octave_slopes[0];
    let verdict = if octave_slopes.iter().all(|s| *s > 0.0)
        && ratio >= OCTAVE_RATIO.0
        && ratio <= OCTAVE_RATIO.1
    {
        Verdict::Divergent
    } else {
        Verdict::Convergent
    };
    Ok(PartialSumReport {
        partial_sums,
        log_slope,
        octave_slopes,
        verdict,
    })
}

/// Non-factorization report for the boundary indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockReport {
    pub coefficients: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub log_slope: f64,
    /// `4 alpha_0 / (mu_0 pi)`.
    pub expected_slope: f64,
    pub verdict: Verdict,
    pub octave_slopes: [f64; 2],
    pub n_max: usize,
    /// `<F, F>_mu = alpha_0`: finite in `L^2_mu`.
    pub indicator_mu_norm_sqr: f64,
    pub coefficient_fit: Option<PowerFit>,
    pub expected_prefactor: f64,
}

/// Partial sums of `|<F, Z_n>_+|^2` for the boundary indicator `F`.
pub fn factorization_diagnostic(spec: &Spectrum, n_max: usize) -> Result<FockReport> {
    if n_max < MIN_DIAGNOSTIC_MODES {
        return Err(Error::InsufficientModes {
            got: n_max,
            need: MIN_DIAGNOSTIC_MODES,
        });
    }
    let coeffs = boundary_indicator_coefficients(spec, n_max)?;
    let values: Vec<f64> = coeffs.iter().map(|c| c.z_coefficient).collect();
    let sums = partial_sum_diagnostic(&values)?;
    let lo = (n_max / 10).max(1);
    let coefficient_fit = fit_indicator_law(&coeffs, lo, n_max).ok();
    let (alpha0, mu0) = (spec.cal.alpha[0], spec.params.mu0);
    Ok(FockReport {
        coefficients: values,
        partial_sums: sums.partial_sums,
        log_slope: sums.log_slope,
        expected_slope: 4.0 * alpha0 / (mu0 * std::f64::consts::PI),
        verdict: sums.verdict,
        octave_slopes: sums.octave_slopes,
        n_max,
        indicator_mu_norm_sqr: alpha0,
        coefficient_fit,
        expected_prefactor: indicator_prefactor(spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::{calibrate, ModelParams, CUBIC_TOL};
    use proptest::prelude::*;

    fn basis(q: ModelParams, n: usize, grid: usize) -> (Spectrum, Basis) {
        let cal = calibrate(&q, CUBIC_TOL).unwrap();
        let s = Spectrum::build(&q, &cal, n).unwrap();
        let b = Basis::new(&s, &GridSpec::new(grid).unwrap(), n).unwrap();
        (s, b)
    }

    #[test]
    fn positive_frequency_data_is_lossless() {
        let q = ModelParams::new(1.0, 1.5, 2.0, 1.0, 2.5).unwrap();
        let (_, b) = basis(q, 6, 64);
        let w = b.frequencies().unwrap();
        let mut qc = vec![Complex64::new(0.0, 0.0); 6];
        let mut pc = qc.clone();
        qc[2] = Complex64::new(1.0, 0.0);
        pc[2] = Complex64::i() * w[2];
        let c = ModeCoefficients {
            indices: b.indices(),
            q: qc,
            p: pc,
            q_residual: 0.0,
            p_residual: 0.0,
        };
        let split = positive_frequency(&c, &b).unwrap();
        assert_eq!(split.negative.norm_sqr(), 0.0);
        assert_eq!(
            split
                .positive
                .coeffs
                .iter()
                .filter(|z| z.norm() > 0.0)
                .count(),
            1
        );
        let back = from_one_particle(&split.positive, &b).unwrap();
        for k in 0..6 {
            assert!((back.q[k] - c.q[k]).norm() < 1e-12);
            assert!((back.p[k] - c.p[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn standing_wave_splits_evenly() {
        let q = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let (_, b) = basis(q, 5, 64);
        let w = b.frequencies().unwrap();
        let mut qc = vec![0.0; 5];
        qc[3] = 1.0;
        let c = ModeCoefficients::from_real(b.indices(), &qc, &[0.0; 5]).unwrap();
        let split = positive_frequency(&c, &b).unwrap();
        let want = w[3].sqrt() / 2f64.sqrt();
        assert!((split.positive.coeffs[3].norm() - want).abs() < 1e-14);
        assert!((split.negative.coeffs[3].norm() - want).abs() < 1e-14);
    }

    #[test]
    fn z_basis_is_normalised() {
        let q = ModelParams::new(0.7, 1.4, 3.0, 0.5, 1.0).unwrap();
        let (_, b) = basis(q, 8, 64);
        let w = b.frequencies().unwrap();
        for n in 0..8 {
            let mut y = vec![Complex64::new(0.0, 0.0); 8];
            y[n] = Complex64::new(1.0, 0.0);
            let yy = inner_plus(&y, &y, &b).unwrap();
            assert!((yy.re - 2.0 * w[n]).abs() < 1e-14 && yy.im == 0.0);
            let z: Vec<Complex64> = y.iter().map(|c| c / (2.0 * w[n]).sqrt()).collect();
            assert!((inner_plus(&z, &z, &b).unwrap().re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_form_matches_fourier_form() {
        let q = ModelParams::new(1.0, 1.5, 4.0, 1.0, 2.0).unwrap();
        let (_, b) = basis(q, 12, 4096);
        let a: Vec<Complex64> = (0..12)
            .map(|k| Complex64::new(1.0 / (1.0 + k as f64), 0.3 * (k as f64).cos()))
            .collect();
        let c: Vec<Complex64> = (0..12)
            .map(|k| Complex64::new((0.5 * k as f64).sin(), 1.0 / (2.0 + k as f64).powi(2)))
            .collect();
        let fourier = inner_plus(&a, &c, &b).unwrap();
        let fa = ComplexField::from_coefficients(&a, &b).unwrap();
        let fc = ComplexField::from_coefficients(&c, &b).unwrap();
        let integral = inner_plus_integral(&fa, &fc, &b).unwrap();
        assert!(
            (fourier - integral).norm() < 1e-9,
            "{fourier} vs {integral}"
        );
    }

    #[test]
    fn frequencies_are_positive() {
        let q = ModelParams::new(1.0, 1.0, 2.0, 2.0, 2.0).unwrap();
        let cal = calibrate(&q, CUBIC_TOL).unwrap();
        let s = Spectrum::build(&q, &cal, 10).unwrap();
        let f = quantum_frequencies(&s, 11).unwrap();
        assert!((f[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(f.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn diagnostic_needs_enough_modes() {
        let q = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let cal = calibrate(&q, CUBIC_TOL).unwrap();
        let s = Spectrum::build(&q, &cal, 50).unwrap();
        assert_eq!(
            factorization_diagnostic(&s, 50),
            Err(Error::InsufficientModes { got: 50, need: 100 })
        );
        let control: Vec<f64> = (1..=99).map(|n| 1.0 / n as f64).collect();
        assert!(partial_sum_diagnostic(&control).is_err());
    }

    #[test]
    fn control_vector_converges_and_finite_support_stabilises() {
        let control: Vec<f64> = (1..=500).map(|n| 1.0 / n as f64).collect();
        assert_eq!(
            partial_sum_diagnostic(&control).unwrap().verdict,
            Verdict::Convergent
        );
        let mut finite = vec![0.0; 200];
        finite[..5].copy_from_slice(&[1.0, -2.0, 0.5, 0.1, 3.0]);
        let r = partial_sum_diagnostic(&finite).unwrap();
        assert_eq!(r.verdict, Verdict::Convergent);
        assert!(r.partial_sums[4..].iter().all(|s| *s == r.partial_sums[4]));
    }

    #[test]
    fn indicator_coefficients_use_the_atom() {
        let q = ModelParams::new(1.0, 1.2, 1.0, 2.0, 0.5).unwrap();
        let cal = calibrate(&q, CUBIC_TOL).unwrap();
        let s = Spectrum::build(&q, &cal, 10).unwrap();
        let c = boundary_indicator_coefficients(&s, 10).unwrap();
        let g = GridSpec::new(64).unwrap();
        let f = MuFunction::boundary_indicator(&g);
        for (ci, m) in c.iter().zip(s.negative_modes()) {
            let y = s.basis_mode(m, &g).unwrap();
            assert_eq!(ci.y_coefficient, inner_mu(&y, &f, &cal).unwrap());
        }
        assert_eq!(inner_mu(&f, &f, &cal).unwrap(), cal.alpha[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn inner_plus_is_hermitian_and_positive(
            re in prop::collection::vec(-3.0f64..3.0, 6),
            im in prop::collection::vec(-3.0f64..3.0, 6),
            re2 in prop::collection::vec(-3.0f64..3.0, 6),
            im2 in prop::collection::vec(-3.0f64..3.0, 6),
            s in -2.0f64..2.0,
            t in -2.0f64..2.0,
        ) {
            let q = ModelParams::new(1.0, 1.5, 2.0, 1.0, 2.5).unwrap();
            let (_, b) = basis(q, 6, 16);
            let a: Vec<Complex64> = re.iter().zip(&im).map(|(x, y)| Complex64::new(*x, *y)).collect();
            let c: Vec<Complex64> = re2.iter().zip(&im2).map(|(x, y)| Complex64::new(*x, *y)).collect();
            let ac = inner_plus(&a, &c, &b).unwrap();
            let ca = inner_plus(&c, &a, &b).unwrap();
            prop_assert!((ac - ca.conj()).norm() <= 1e-12 * (1.0 + ac.norm()));
            let z = Complex64::new(s, t);
            let lin: Vec<Complex64> = c.iter().zip(&a).map(|(x, y)| z * x + y).collect();
            let lhs = inner_plus(&a, &lin, &b).unwrap();
            let rhs = z * ac + inner_plus(&a, &a, &b).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
            let aa = inner_plus(&a, &a, &b).unwrap();
            if a.iter().any(|x| x.norm() > 0.0) {
                prop_assert!(aa.re > 0.0);
            }
        }
    }
}
