//! Shared fixtures for the criterion benchmarks.

use stringmass_core::{calibrate, Basis, GridSpec, ModelParams, Spectrum, CUBIC_TOL};

/// Asymmetric parameters with one detuning of each sign.
pub fn reference_params() -> ModelParams {
    ModelParams::new(1.0, 1.5, 2.0, 1.0, 3.0).expect("valid reference parameters")
}

pub fn reference_spectrum(k_max: usize) -> Spectrum {
    let p = reference_params();
    let cal = calibrate(&p, CUBIC_TOL).expect("reference calibration");
    Spectrum::build(&p, &cal, k_max).expect("reference spectrum")
}

pub fn reference_basis(n_modes: usize, n_grid: usize) -> Basis {
    let spec = reference_spectrum(n_modes);
    let grid = GridSpec::new(n_grid).expect("valid grid");
    Basis::new(&spec, &grid, n_modes).expect("reference basis")
}
