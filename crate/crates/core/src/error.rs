use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("grid with {grid_points} points cannot resolve {n_modes} modes (need at least {required})")]
    Aliasing {
        grid_points: usize,
        n_modes: usize,
        required: usize,
    },

    #[error("index {index} out of range for path of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("mismatched grids: {0}")]
    MismatchedGrids(String),

    #[error("Young condition violated: alpha + gamma = {sum} must exceed 1")]
    YoungAdmissibility { sum: f64 },

    #[error("driver cannot supply the points required at level {level}: {detail}")]
    GridIncompatible { level: u32, detail: String },

    #[error("dyadic scheme did not reach tolerance {tol:e} within {max_level} levels (last increment {last:e})")]
    NonConvergence {
        tol: f64,
        max_level: u32,
        last: f64,
        increments: Vec<f64>,
    },

    #[error("no admissible window length at or above the grid step {grid_step:e} (start {start})")]
    StepTooSmall { start: f64, grid_step: f64 },

    #[error("Picard map is not contracting on [{start}, {end}]: factors {factors:?}")]
    ContractionFailure {
        start: f64,
        end: f64,
        factors: Vec<f64>,
    },

    #[error("Picard iteration exceeded {max_iter} iterations (last difference {last:e})")]
    MaxIterations { max_iter: usize, last: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
