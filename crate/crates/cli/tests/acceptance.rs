//! Acceptance suite. Each test prints one `CRITERION <n>: PASS|FAIL` line.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stringmass_core::dynamics::{
    evolve_modes, evolve_modes_jet, fd_evolve, hamiltonian_jet, project, Basis, CauchyData,
};
use stringmass_core::fit::power_law_fit;
use stringmass_core::fock::{
    boundary_indicator_coefficients, factorization_diagnostic, fit_indicator_law,
    indicator_prefactor, partial_sum_diagnostic, Verdict,
};
use stringmass_core::model::{calibrate, CalibratedMeasure, ModelParams, PROBE_TOL};
use stringmass_core::mufunc::{inner_modified, inner_mu, rn_derivative_with, robin_residual};
use stringmass_core::oracle::lumped_frequencies_squared;
use stringmass_core::spectrum::{
    find_negative_modes, secular_negative, secular_negative_limit_at_zero, zero_mode, ModeClass,
    Spectrum,
};
use stringmass_core::{GridSpec, CUBIC_TOL};

/// Writes straight to the stderr handle so the line appears even when the
/// test harness captures output.
fn report(n: u32, ok: bool, detail: String, start: Instant) {
    let line = format!(
        "CRITERION {n}: {} ({detail}; {:.2} s)\n",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn params(mu0: f64, mu1: f64, w2: f64, w02: f64, w12: f64) -> ModelParams {
    ModelParams::new(mu0, mu1, w2, w02, w12).unwrap()
}

fn spectrum(p: &ModelParams, n: usize) -> Spectrum {
    let cal = calibrate(p, CUBIC_TOL).unwrap();
    Spectrum::build(p, &cal, n).unwrap()
}

/// Random smooth element of the Robin domain: decaying superposition of the
/// first `k` basis functions.
fn random_coeffs(rng: &mut ChaCha8Rng, len: usize, k: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            if n < k {
                rng.gen_range(-1.0..1.0) / (1.0 + n as f64).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

#[test]
fn criterion_1_calibration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0_f64; 3];
    let mut failures = Vec::new();
    for _ in 0..50 {
        let p = params(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.0..6.0),
            rng.gen_range(0.0..6.0),
        );
        match calibrate(&p, CUBIC_TOL) {
            Ok(cal) => {
                let r = cal.residuals(&p);
                for j in 0..2 {
                    worst[0] = worst[0].max(r.cubic[j]);
                    worst[1] = worst[1].max(r.coupling[j]);
                    worst[2] = worst[2].max(r.probe[j]);
                    assert_eq!(cal.c[j], cal.a[j] * cal.alpha[j]);
                }
            }
            Err(e) => failures.push(format!("{p:?}: {e}")),
        }
    }
    let resonant = [
        params(1.0, 1.0, 1.0, 1.0, 1.0),
        params(2.0, 3.0, 1.0, 1.0, 1.0),
        params(0.3, 4.5, 2.2, 2.2, 2.2),
    ];
    let exact = resonant.iter().all(|p| {
        let cal = calibrate(p, CUBIC_TOL).unwrap();
        cal.alpha == [p.mu0, p.mu1] && cal.a == [0.0, 0.0] && cal.c == [0.0, 0.0]
    });
    let ok = failures.is_empty()
        && worst[0] <= 1e-12
        && worst[1] <= 1e-12
        && worst[2] <= PROBE_TOL
        && exact
        && start.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        ok,
        format!(
            "50 random sets, cubic {:.1e}, coupling {:.1e}, probe {:.1e}, resonance exact {exact}, failures {failures:?}",
            worst[0], worst[1], worst[2]
        ),
        start,
    );
    assert!(ok);
}

const CRITERION_2_SETS: [[f64; 5]; 5] = [
    [1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, 1.0, 2.0, 2.0],
    [0.5, 2.0, 1.5, 1.8, 1.3],
    [2.0, 0.7, 3.0, 0.5, 6.0],
    [0.3, 0.3, 0.8, 0.1, 2.5],
];

/// Root count of `secular_negative` sign changes on `(k pi, (k+1) pi)`.
fn independent_bracket_count(p: &ModelParams, k: usize) -> usize {
    let (a, b) = (k as f64 * PI, (k + 1) as f64 * PI);
    let samples = 512;
    let mut changes = 0;
    let mut prev = secular_negative(a, p);
    for i in 1..=samples {
        let cur = secular_negative(a + (b - a) * i as f64 / samples as f64, p);
        if (prev < 0.0) != (cur < 0.0) {
            changes += 1;
        }
        prev = cur;
    }
    changes
}

#[test]
fn criterion_2_bracketing_and_asymptotics() {
    let start = Instant::now();
    let mut brackets = Vec::new();
    let mut exps = Vec::new();
    let mut bracketing_ok = true;
    for set in CRITERION_2_SETS {
        let p = params(set[0], set[1], set[2], set[3], set[4]);
        let roots = find_negative_modes(&p, 205).unwrap();
        let first = roots.n0.map_or(1, |n| n + 1).max(1);
        let bad: Vec<usize> = (first..=200)
            .filter(|&k| {
                let (a, b) = (k as f64 * PI, (k + 1) as f64 * PI);
                let solver = roots.omegas.iter().filter(|w| **w > a && **w < b).count();
                solver != 1 || independent_bracket_count(&p, k) != 1
            })
            .collect();
        bracketing_ok &= bad.is_empty();
        brackets.push(format!("n0={:?} bad={bad:?}", roots.n0));

        let s = spectrum(&p, 205);
        let (x, y): (Vec<f64>, Vec<f64>) = s
            .negative_modes()
            .filter_map(|m| {
                let k = m.bracket?;
                (20..=200)
                    .contains(&k)
                    .then(|| (k as f64, m.asymptote_error(&p).unwrap()))
            })
            .unzip();
        exps.push(-power_law_fit(&x, &y).unwrap().exponent);
    }
    let exponent_ok = exps.iter().all(|e| (1.8..=2.2).contains(e));
    let ok = bracketing_ok && exponent_ok && start.elapsed().as_secs_f64() < 5.0;
    report(
        2,
        ok,
        format!(
            "one root per bracket above n0: {bracketing_ok} [{}]; remainder decay exponents over k in [20,200]: [{}] (required [1.8, 2.2])",
            brackets.join(", "),
            exps.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>().join(", ")
        ),
        start,
    );
    assert!(bracketing_ok, "bracketing failed: {brackets:?}");
    assert!(exponent_ok, "decay exponents {exps:?} outside [1.8, 2.2]");
}

fn robin_pair_checks(
    basis: &Basis,
    cal: &CalibratedMeasure,
    p: &ModelParams,
    rng: &mut ChaCha8Rng,
) -> (f64, f64, f64) {
    let n = basis.len();
    let (mut sym, mut ibp, mut modified) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let cu = random_coeffs(rng, n, n);
        let cw = random_coeffs(rng, n, n);
        let u = basis.superpose_jet(&cu).unwrap();
        let w = basis.superpose_jet(&cw).unwrap();
        assert!(robin_residual(&u.value, cal).iter().all(|r| r.abs() < 1e-9));
        let lu = u.laplacian(cal);
        let lw = w.laplacian(cal);
        let a = inner_mu(&lu, &w.value, cal).unwrap();
        let b = inner_mu(&u.value, &lw, cal).unwrap();
        sym = sym.max((a - b).abs());
        let du = rn_derivative_with(&u.value, u.d1.clone(), cal).unwrap();
        let dw = rn_derivative_with(&w.value, w.d1.clone(), cal).unwrap();
        let boundary: f64 = (0..2)
            .map(|j| cal.a[j] * u.value.atom(j) * w.value.atom(j))
            .sum();
        let rhs = -inner_mu(&du, &dw, cal).unwrap() - boundary;
        ibp = ibp.max((a - rhs).abs());
        let m1 = inner_mu(&u.value, &w.value, cal).unwrap();
        let m2 = inner_modified(&u.value, &w.value, p).unwrap();
        modified = modified.max((m1 - m2).abs() / (1.0 + m1.abs()));
    }
    (sym, ibp, modified)
}

#[test]
fn criterion_3_orthonormality_and_symmetry() {
    let start = Instant::now();
    let grid = GridSpec::new(4096).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut detail = Vec::new();
    let mut ok = true;
    for p in [
        params(1.0, 1.5, 4.0, 1.0, 2.0),
        params(1.0, 1.0, 1.0, 2.0, 2.0),
    ] {
        let mut s = spectrum(&p, 30);
        let cert = s.certify(&grid, 30).unwrap();
        let basis = Basis::new(&s, &grid, 30).unwrap();
        let (sym, ibp, modified) = robin_pair_checks(&basis, &s.cal, &p, &mut rng);
        ok &= cert.max_offdiag <= 1e-8 && sym <= 1e-8 && modified <= 1e-10 && ibp <= 1e-8;
        detail.push(format!(
            "offdiag {:.1e}, diag {:.1e}, symmetry {sym:.1e}, by-parts {ibp:.1e}, modified {modified:.1e}",
            cert.max_offdiag, cert.max_diag_error
        ));
    }
    ok &= start.elapsed().as_secs_f64() < 10.0;
    report(3, ok, detail.join("; "), start);
    assert!(ok);
}

struct OracleRun {
    gap: f64,
    fd_drift: f64,
}

fn oracle_gap(p: &ModelParams, s: &Spectrum, n_grid: usize, dt: f64) -> OracleRun {
    let grid = GridSpec::new(n_grid).unwrap();
    let basis = Basis::new(s, &grid, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = basis.superpose(&random_coeffs(&mut rng, 64, 8)).unwrap();
    let v = basis.superpose(&random_coeffs(&mut rng, 64, 8)).unwrap();
    let data = CauchyData::new(q, v, 0.0).unwrap();
    let c = project(&data, &basis).unwrap();
    let exact = evolve_modes(&c, &basis, 1.0).unwrap();
    let fd = fd_evolve(&data, p, dt, 1.0).unwrap();
    OracleRun {
        gap: fd.data.q.sup_distance_interior(&exact.q).unwrap(),
        fd_drift: fd.max_relative_drift,
    }
}

#[test]
fn criterion_4_dynamics_oracle() {
    let start = Instant::now();
    let p = params(1.0, 1.5, 2.0, 1.0, 3.0);
    let s = spectrum(&p, 64);
    let coarse = oracle_gap(&p, &s, 4096, 2.5e-5);
    let fine = oracle_gap(&p, &s, 8192, 1.25e-5);
    let ratio = coarse.gap / fine.gap;

    // mode-path energy over t in [0, 10]
    let grid = GridSpec::new(4096).unwrap();
    let basis = Basis::new(&s, &grid, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = basis.superpose(&random_coeffs(&mut rng, 64, 8)).unwrap();
    let v = basis.superpose(&random_coeffs(&mut rng, 64, 8)).unwrap();
    let data = CauchyData::new(q, v, 0.0).unwrap();
    let c = project(&data, &basis).unwrap();
    let energies: Vec<f64> = (0..=20)
        .map(|i| {
            let (jet, pm) = evolve_modes_jet(&c, &basis, 0.5 * i as f64).unwrap();
            hamiltonian_jet(&jet, &pm, &s.cal, &p).unwrap()
        })
        .collect();
    let mode_drift = energies
        .iter()
        .map(|e| (e - energies[0]).abs() / energies[0].abs())
        .fold(0.0, f64::max);

    let fd_long = fd_evolve(&data, &p, 2.5e-5, 10.0).unwrap();
    let ok = coarse.gap <= 1e-4
        && ratio >= 3.0
        && mode_drift <= 1e-8
        && fd_long.max_relative_drift <= 1e-5
        && start.elapsed().as_secs_f64() < 60.0;
    report(
        4,
        ok,
        format!(
            "gap {:.2e} -> {:.2e} (ratio {ratio:.2}), mode energy drift {mode_drift:.1e}, FD energy drift {:.1e} over t=10 (t=1 runs {:.1e}, {:.1e})",
            coarse.gap, fine.gap, fd_long.max_relative_drift, coarse.fd_drift, fine.fd_drift
        ),
        start,
    );
    assert!(ok);
}

#[test]
fn criterion_5_matrix_oracle() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for p in [
        params(1.0, 1.0, 1.0, 1.0, 1.0),
        params(1.0, 1.0, 4.0, 1.0, 1.0),
        params(0.5, 2.0, 1.5, 1.8, 1.3),
    ] {
        let s = spectrum(&p, 5);
        let oracle = lumped_frequencies_squared(&p, 2048, 5).unwrap();
        for (m, o) in s.modes.iter().zip(&oracle) {
            let secular = p.w2 - m.lambda;
            worst = worst.max((o - secular).abs() / secular);
        }
    }
    let ok = worst <= 1e-3 && start.elapsed().as_secs_f64() < 10.0;
    report(
        5,
        ok,
        format!("worst relative deviation of first 5 eigenvalues {worst:.2e}"),
        start,
    );
    assert!(ok);
}

#[test]
fn criterion_6_fock_coefficient_law() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut ok = true;
    for p in [
        params(1.0, 1.0, 1.0, 2.0, 2.0),
        params(0.5, 2.0, 1.5, 1.8, 1.3),
    ] {
        let s = spectrum(&p, 510);
        let coeffs = boundary_indicator_coefficients(&s, 510).unwrap();
        let fit = fit_indicator_law(&coeffs, 50, 500).unwrap();
        let expected = indicator_prefactor(&s);
        let pref_err = (fit.prefactor - expected).abs() / expected;
        let report_f = factorization_diagnostic(&s, 500).unwrap();
        let slope_err =
            (report_f.log_slope - report_f.expected_slope).abs() / report_f.expected_slope;
        let control: Vec<f64> = (1..=500).map(|n| 1.0 / n as f64).collect();
        let control = partial_sum_diagnostic(&control).unwrap();
        let increasing = report_f.partial_sums.windows(2).all(|w| w[1] > w[0]);
        ok &= (fit.exponent + 0.5).abs() <= 0.03
            && pref_err <= 0.03
            && slope_err <= 0.10
            && report_f.verdict == Verdict::Divergent
            && control.verdict == Verdict::Convergent
            && increasing;
        detail.push(format!(
            "exponent {:.4}, prefactor err {:.2e}, slope {:.4} vs {:.4}, verdict {:?}, control {:?}",
            fit.exponent, pref_err, report_f.log_slope, report_f.expected_slope, report_f.verdict, control.verdict
        ));
    }
    ok &= start.elapsed().as_secs_f64() < 5.0;
    report(6, ok, detail.join("; "), start);
    assert!(ok);
}

#[test]
fn criterion_7_zero_mode() {
    let start = Instant::now();
    // mu0 D0 = -1/2 and mu1 D1 = 1: (1 - 1/2)(1 + 1) = 1
    let on = params(1.0, 1.0, 1.0, 0.5, 2.0);
    let s = spectrum(&on, 5);
    let zero = s.mode(0);
    let affine = zero.map_or(false, |m| {
        m.class == ModeClass::Zero && m.eigenfunction.b == on.mu0 * on.delta(0)
    });
    // independent: f(w)/w must vanish as w -> 0, quadratically
    let near: Vec<f64> = [1e-2, 1e-3]
        .iter()
        .map(|w| secular_negative(*w, &on) / w)
        .collect();
    let limit_vanishes = near[1].abs() < 1e-5 && (near[0] / near[1]).abs() > 50.0;
    let analytic = secular_negative_limit_at_zero(&on).abs() < 1e-15;
    let generic = [
        params(1.0, 1.0, 1.0, 2.0, 2.0),
        params(0.5, 2.0, 1.5, 1.8, 1.3),
        params(1.0, 1.0, 4.0, 1.0, 1.0),
    ];
    let none = generic
        .iter()
        .all(|p| zero_mode(p).is_none() && spectrum(p, 5).mode(0).is_none());
    let ok = affine && limit_vanishes && analytic && none && start.elapsed().as_secs_f64() < 1.0;
    report(
        7,
        ok,
        format!("zero mode detected {affine}, f(w)/w at 1e-2,1e-3: {:.2e} {:.2e}, generic sets have none {none}", near[0], near[1]),
        start,
    );
    assert!(ok);
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stringmass"))
        .args(args)
        .output()
        .expect("spawn stringmass")
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn criterion_8_cli_determinism() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "params": {"mu0": 1.0, "mu1": 1.5, "w2": 2.0, "w02": 1.0, "w12": 3.0},
  "grid": {"n_grid": 512},
  "n_modes": 32,
  "evolve": {"t_end": 1.0, "dt": 0.001, "snapshot_every": 250, "initial": "random", "fd_check": true},
  "fock": {"n_max": 200},
  "spectrum": {"k_max": 50}
}"#,
    )
    .unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for cmd in ["calibrate", "spectrum", "modes", "evolve", "fock"] {
        let mut runs = Vec::new();
        for r in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{r}"));
            let o = run_cli(&[
                cmd,
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "7",
            ]);
            ok &= o.status.success();
            runs.push(if out.exists() {
                dir_contents(&out)
            } else {
                Vec::new()
            });
        }
        let same = !runs[0].is_empty() && runs[0] == runs[1];
        ok &= same;
        detail.push(format!("{cmd}: {} files identical {same}", runs[0].len()));
    }
    ok &= start.elapsed().as_secs_f64() < 30.0;
    report(8, ok, detail.join(", "), start);
    assert!(ok);
}
