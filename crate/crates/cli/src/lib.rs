//! Command implementations behind the `stringmass` binary.
//!
//! Every command validates the configuration, computes all of its outputs in
//! memory and only then writes them, so a failing run leaves no partial files.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use stringmass_core::dynamics::{
    evolve_coefficients, evolve_modes_jet, fd_evolve_observed, hamiltonian_jet, mode_energy,
    reconstruct,
};
use stringmass_core::fock::factorization_diagnostic;
use stringmass_core::model::CalibrationResiduals;
use stringmass_core::spectrum::OrthoCertificate;
use stringmass_core::{
    calibrate, Basis, CalibratedMeasure, FockReport, ModeCoefficients, ModelParams, Spectrum,
    CUBIC_TOL,
};

pub use config::{InitialData, RunConfig};

/// Number of lowest modes excited by the random initial condition.
pub const RANDOM_MODES: usize = 8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("calibration failed: {0}")]
    Calibration(stringmass_core::Error),
    #[error("spectrum failed: {0}")]
    Spectrum(stringmass_core::Error),
    #[error("dynamics failed: {0}")]
    Dynamics(stringmass_core::Error),
    #[error("fock diagnostic failed: {0}")]
    Fock(stringmass_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Calibration(_) => 2,
            CliError::Spectrum(_) => 3,
            CliError::Dynamics(_) => 4,
            CliError::Fock(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Calibrate,
    Spectrum,
    Modes,
    Evolve,
    Fock,
}

/// A file produced by a command, not yet on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Files plus human-readable notes (warnings) for stderr.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
    pub notes: Vec<String>,
}

impl Outputs {
    fn push(&mut self, name: impl Into<String>, contents: String) {
        self.files.push(OutputFile {
            name: name.into(),
            contents,
        });
    }

    /// Creates `dir` and writes every file into it.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::with_capacity(self.files.len());
        for f in &self.files {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serialises");
    s.push('\n');
    s
}

fn csv_header(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

fn calibration(cfg: &RunConfig) -> Result<CalibratedMeasure, CliError> {
    calibrate(&cfg.params, CUBIC_TOL).map_err(CliError::Calibration)
}

fn spectrum(cfg: &RunConfig, cal: &CalibratedMeasure, k_max: usize) -> Result<Spectrum, CliError> {
    Spectrum::build(&cfg.params, cal, k_max).map_err(CliError::Spectrum)
}

/// Runs `command` and returns its outputs without touching the filesystem.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outputs, CliError> {
    cfg.validate()?;
    let hash = cfg.hash();
    match command {
        Command::Calibrate => run_calibrate(cfg, &hash),
        Command::Spectrum => run_spectrum(cfg, &hash),
        Command::Modes => run_modes(cfg, &hash),
        Command::Evolve => run_evolve(cfg, &hash),
        Command::Fock => run_fock(cfg, &hash),
    }
}

#[derive(Serialize)]
struct CalibrationOutput<'a> {
    config_hash: &'a str,
    params: ModelParams,
    delta: [f64; 2],
    #[serde(flatten)]
    measure: &'a CalibratedMeasure,
    residuals: CalibrationResiduals,
}

fn run_calibrate(cfg: &RunConfig, hash: &str) -> Result<Outputs, CliError> {
    let cal = calibration(cfg)?;
    let out = CalibrationOutput {
        config_hash: hash,
        params: cfg.params,
        delta: [cfg.params.delta(0), cfg.params.delta(1)],
        measure: &cal,
        residuals: cal.residuals(&cfg.params),
    };
    let mut o = Outputs::default();
    o.push("calibration.json", json(&out));
    Ok(o)
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    config_hash: &'a str,
    k_max: usize,
    mode_count: usize,
    n0: Option<usize>,
    nonphysical_positive_roots: &'a [f64],
    warnings: &'a [String],
}

fn run_spectrum(cfg: &RunConfig, hash: &str) -> Result<Outputs, CliError> {
    let cal = calibration(cfg)?;
    let spec = spectrum(cfg, &cal, cfg.k_max())?;
    let mut o = Outputs::default();
    o.push("spectrum.csv", csv_header(hash) + &spec.to_csv());
    o.push(
        "spectrum.json",
        json(&SpectrumSummary {
            config_hash: hash,
            k_max: cfg.k_max(),
            mode_count: spec.len(),
            n0: spec.n0,
            nonphysical_positive_roots: &spec.nonphysical,
            warnings: &spec.warnings,
        }),
    );
    o.notes = spec.warnings.clone();
    Ok(o)
}

/// File name of the sampled mode with the given index.
pub fn mode_file_name(index: i64) -> String {
    if index < 0 {
        format!("mode_m{:03}.csv", -index)
    } else {
        format!("mode_{index:03}.csv")
    }
}

#[derive(Serialize)]
struct ModeRecord {
    index: i64,
    class: &'static str,
    omega: f64,
    lambda: f64,
    g: f64,
    g_approx: Option<f64>,
    atoms: [f64; 2],
    eigen_residual_atoms: f64,
    eigen_residual_interior: f64,
    file: String,
}

#[derive(Serialize)]
struct ModesOutput<'a> {
    config_hash: &'a str,
    n_grid: usize,
    certificate: OrthoCertificate,
    modes: Vec<ModeRecord>,
}

fn run_modes(cfg: &RunConfig, hash: &str) -> Result<Outputs, CliError> {
    let cal = calibration(cfg)?;
    let mut spec = spectrum(cfg, &cal, cfg.n_modes)?;
    let count = cfg.n_modes.min(spec.len());
    let grid = cfg.grid;
    let certificate = spec.certify(&grid, count).map_err(CliError::Spectrum)?;
    let sampled: Vec<(ModeRecord, String)> = spec.modes[..count]
        .par_iter()
        .map(|m| {
            let f = spec.basis_mode(m, &grid)?;
            let (ra, ri) = spec.eigen_residual(m, &grid)?;
            let file = mode_file_name(m.index);
            let record = ModeRecord {
                index: m.index,
                class: m.class.symbol(),
                omega: m.omega,
                lambda: m.lambda,
                g: m.g,
                g_approx: m.g_approx,
                atoms: [m.atom(0), m.atom(1)],
                eigen_residual_atoms: ra,
                eigen_residual_interior: ri,
                file,
            };
            Ok((record, csv_header(hash) + &f.to_csv()))
        })
        .collect::<Result<_, stringmass_core::Error>>()
        .map_err(CliError::Spectrum)?;
    let mut o = Outputs::default();
    let mut modes = Vec::with_capacity(count);
    for (record, csv) in sampled {
        o.push(record.file.clone(), csv);
        modes.push(record);
    }
    o.push(
        "modes.json",
        json(&ModesOutput {
            config_hash: hash,
            n_grid: grid.n_grid,
            certificate,
            modes,
        }),
    );
    o.notes = spec.warnings.clone();
    Ok(o)
}

/// Initial mode coefficients for the evolve command.
pub fn initial_coefficients(cfg: &RunConfig, basis: &Basis) -> Result<ModeCoefficients, CliError> {
    let n = basis.len();
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    match cfg.evolve.initial {
        InitialData::Mode => {
            let k = basis
                .modes
                .iter()
                .position(|m| m.index == cfg.evolve.mode_index)
                .ok_or_else(|| {
                    CliError::Dynamics(stringmass_core::Error::InvalidArgument(format!(
                        "mode {} is not among the {n} basis modes",
                        cfg.evolve.mode_index
                    )))
                })?;
            q[k] = 1.0;
        }
        InitialData::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for k in 0..n.min(RANDOM_MODES) {
                let decay = 1.0 / ((1 + k) * (1 + k)) as f64;
                q[k] = rng.gen_range(-1.0..1.0) * decay;
                p[k] = rng.gen_range(-1.0..1.0) * decay;
            }
        }
    }
    ModeCoefficients::from_real(basis.indices(), &q, &p).map_err(CliError::Dynamics)
}

/// Step numbers at which snapshots are taken: every `every` steps and the last.
fn snapshot_steps(steps: usize, every: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..=steps).step_by(every).collect();
    if *s.last().unwrap() != steps {
        s.push(steps);
    }
    s
}

struct Snapshot {
    t: f64,
    u: Vec<f64>,
    udot: Vec<f64>,
    mode_energy: f64,
    field_energy: f64,
}

#[derive(Serialize)]
struct FdSummary {
    steps: usize,
    dt: f64,
    max_gap: f64,
    final_gap: f64,
    energy_initial: f64,
    max_relative_energy_drift: f64,
}

#[derive(Serialize)]
struct EvolveOutput<'a> {
    config_hash: &'a str,
    initial: InitialData,
    n_modes: usize,
    n_grid: usize,
    steps: usize,
    dt: f64,
    snapshots: usize,
    initial_coefficients: &'a ModeCoefficients,
    energy_initial: f64,
    max_relative_field_energy_change: f64,
    fd_check: Option<FdSummary>,
}

fn run_evolve(cfg: &RunConfig, hash: &str) -> Result<Outputs, CliError> {
    let cal = calibration(cfg)?;
    let spec = spectrum(cfg, &cal, cfg.n_modes)?;
    let grid = cfg.grid;
    let basis = Basis::new(&spec, &grid, cfg.n_modes).map_err(CliError::Dynamics)?;
    let coeffs = initial_coefficients(cfg, &basis)?;
    let ev = &cfg.evolve;
    let dyn_err = CliError::Dynamics;

    let steps = (ev.t_end / ev.dt).ceil() as usize;
    let dt = if steps == 0 {
        ev.dt
    } else {
        ev.t_end / steps as f64
    };
    let marks = snapshot_steps(steps, ev.snapshot_every);

    let snaps: Vec<Snapshot> = marks
        .par_iter()
        .map(|&s| {
            let t = s as f64 * dt;
            let c = evolve_coefficients(&coeffs, &basis, t)?;
            let (jet, p) = evolve_modes_jet(&coeffs, &basis, t)?;
            Ok(Snapshot {
                t,
                field_energy: hamiltonian_jet(&jet, &p, &cal, &cfg.params)?,
                mode_energy: mode_energy(&c, &basis)?,
                u: jet.value.values().to_vec(),
                udot: p.values().to_vec(),
            })
        })
        .collect::<Result<_, stringmass_core::Error>>()
        .map_err(dyn_err)?;

    let fd_check = if ev.fd_check {
        let data0 = reconstruct(&coeffs, &basis, 0.0).map_err(dyn_err)?;
        let mut gaps = Vec::with_capacity(snaps.len());
        let report = fd_evolve_observed(
            &data0,
            &cfg.params,
            ev.dt,
            ev.t_end,
            ev.snapshot_every,
            |_, u, _| {
                let snap = &snaps[gaps.len().min(snaps.len() - 1)];
                let gap = u
                    .iter()
                    .zip(&snap.u)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                gaps.push(gap);
            },
        )
        .map_err(dyn_err)?;
        Some(FdSummary {
            steps: report.steps,
            dt: report.dt,
            max_gap: gaps.iter().copied().fold(0.0, f64::max),
            final_gap: gaps.last().copied().unwrap_or(0.0),
            energy_initial: report.energy_initial,
            max_relative_energy_drift: report.max_relative_drift,
        })
    } else {
        None
    };

    let h = grid.h();
    let mut evolve_csv = csv_header(hash);
    evolve_csv.push_str("t,x,u,udot\n");
    let mut energy_csv = csv_header(hash);
    energy_csv.push_str("t,mode_energy,field_energy\n");
    for s in &snaps {
        for (i, (u, v)) in s.u.iter().zip(&s.udot).enumerate() {
            let _ = writeln!(
                evolve_csv,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t,
                i as f64 * h,
                u,
                v
            );
        }
        let _ = writeln!(
            energy_csv,
            "{:.16e},{:.16e},{:.16e}",
            s.t, s.mode_energy, s.field_energy
        );
    }

    let e0 = snaps[0].field_energy;
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    let drift = snaps
        .iter()
        .map(|s| (s.field_energy - e0).abs() / scale)
        .fold(0.0, f64::max);
    let summary = EvolveOutput {
        config_hash: hash,
        initial: ev.initial,
        n_modes: basis.len(),
        n_grid: grid.n_grid,
        steps,
        dt,
        snapshots: snaps.len(),
        initial_coefficients: &coeffs,
        energy_initial: e0,
        max_relative_field_energy_change: drift,
        fd_check,
    };
    let mut o = Outputs::default();
    o.push("evolve.csv", evolve_csv);
    o.push("energy.csv", energy_csv);
    o.push("evolve.json", json(&summary));
    o.notes = spec.warnings.clone();
    Ok(o)
}

#[derive(Serialize)]
struct FockOutput<'a> {
    config_hash: &'a str,
    #[serde(flatten)]
    report: &'a FockReport,
}

fn run_fock(cfg: &RunConfig, hash: &str) -> Result<Outputs, CliError> {
    let cal = calibration(cfg)?;
    let spec = spectrum(cfg, &cal, cfg.fock.n_max)?;
    let report = factorization_diagnostic(&spec, cfg.fock.n_max).map_err(CliError::Fock)?;
    let mut o = Outputs::default();
    o.push(
        "fock.json",
        json(&FockOutput {
            config_hash: hash,
            report: &report,
        }),
    );
    o.notes = spec.warnings.clone();
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{"params": {{"mu0": 1, "mu1": 1.5, "w2": 2, "w02": 1, "w12": 3}}, "grid": {{"n_grid": 128}}, "n_modes": 12{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn snapshot_steps_include_both_ends() {
        assert_eq!(snapshot_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(snapshot_steps(8, 4), vec![0, 4, 8]);
        assert_eq!(snapshot_steps(0, 3), vec![0]);
    }

    #[test]
    fn mode_files_sort_and_are_distinct() {
        assert_eq!(mode_file_name(-2), "mode_m002.csv");
        assert_eq!(mode_file_name(0), "mode_000.csv");
        assert_eq!(mode_file_name(17), "mode_017.csv");
    }

    #[test]
    fn random_initial_data_is_seeded() {
        let a = cfg(r#", "seed": 3, "evolve": {"initial": "random"}"#);
        let cal = calibrate(&a.params, CUBIC_TOL).unwrap();
        let spec = Spectrum::build(&a.params, &cal, 12).unwrap();
        let basis = Basis::new(&spec, &a.grid, 12).unwrap();
        let x = initial_coefficients(&a, &basis).unwrap();
        let y = initial_coefficients(&a, &basis).unwrap();
        assert_eq!(x, y);
        assert!(x.q[RANDOM_MODES..].iter().all(|z| z.norm() == 0.0));
        let b = cfg(r#", "seed": 4, "evolve": {"initial": "random"}"#);
        assert_ne!(initial_coefficients(&b, &basis).unwrap(), x);
    }

    #[test]
    fn unknown_mode_index_is_a_dynamics_error() {
        let c = cfg(r#", "evolve": {"mode_index": 500}"#);
        let e = execute(Command::Evolve, &c).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn cfl_violation_is_reported_before_output() {
        let c = cfg(r#", "evolve": {"dt": 0.05, "fd_check": true}"#);
        assert_eq!(execute(Command::Evolve, &c).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn fock_needs_enough_modes() {
        let c = cfg(r#", "fock": {"n_max": 50}"#);
        assert_eq!(execute(Command::Fock, &c).unwrap_err().exit_code(), 5);
    }
}
