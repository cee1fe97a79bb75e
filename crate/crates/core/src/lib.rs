//! Pathwise mild solutions of `dY = -A Y dt + B(Y) dX` for the Dirichlet
//! Laplacian on `[0, 1]`, driven by rough (Hölder) paths.

pub mod config;
pub mod error;
pub mod fbm_noise;
pub mod heat_app;
pub mod holder_paths;
pub mod mild_convolution;
pub mod nonlinear_solver;
pub mod quadrature;
pub mod scale_space;
pub mod stats;
pub mod young;

pub use error::{Error, Result};
