//! Simulation of spectrally and polarization-correlated photon-pair
//! generation by spontaneous four-wave mixing (SFWM) in a birefringent
//! photonic-crystal fiber, plus inverse fitting of the fiber cross-section
//! from measured emission peaks with a genetic algorithm.
//!
//! Pipeline: [`fibermodel`] rasterizes the cross-section; [`modesolver`]
//! computes polarization-resolved dispersion tables; [`sfwm`] evaluates the
//! phase mismatch of the six polarization processes and traces
//! phase-matching contours; [`twophoton`] assembles joint spectral
//! amplitudes and polarization-projected joint probabilities; [`geomfit`]
//! inverts measured peaks back to the geometry.

pub mod cache;
pub mod error;
pub mod fibermodel;
pub mod geomfit;
pub mod modesolver;
pub mod sfwm;
pub mod twophoton;
pub mod units;

pub use error::{Error, Result};
