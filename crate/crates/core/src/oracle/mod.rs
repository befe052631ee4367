//! Independent verification paths for the closed-form pipeline.
//!
//! None of these reuse the propagator coefficient cascade: the direct
//! convolution builds its kernel from the normal-mode classical action, the grid
//! solver steps the Schrödinger equation spectrally, and the classical oracle
//! integrates the equations of motion numerically.

pub mod checks;
mod convolve;
mod grid;
mod manifest;
mod rk4;

pub use convolve::{classical_action, convolve_direct, ConvolveSpec};
pub use grid::{
    free_gaussian_width, grid_evolve, grid_evolve_1d, GridEvolution, GridSpec, OneDimEvolution,
};
pub use manifest::{write_manifest, OracleRecord};
pub use rk4::rk4_classical;
