//! Phase-space numerics on the half-line for the affine (ax+b) group.

pub mod affine;
pub mod error;
pub mod evolution;
pub mod families;
pub mod grid;
pub mod mellin;
pub mod phase;
pub mod special;
pub mod window;

pub use error::{Error, Result};
pub use affine::{AffineSymbol, PhasePoint};
pub use grid::{apply_operator, UniformGrid, inner_product, make_log_grid, trace, HalfLineFunction, LogGrid, OperatorMatrix, PlanckScale};
pub use phase::{CoherentState, ComplexDisplacement, HusimiField, MellinKernel, PhaseGrid};
pub use window::ConeWindow;
pub use num_complex::Complex64 as C64;
