//! Finite-difference ground state of the wedge operator on a truncated box.

mod assemble;
mod csr;
mod dst;
mod eigen;
mod solve;

pub use assemble::{assemble, assemble_coupling, reflection_permutation, GridSpec, MIN_CELLS, MIN_RAY_SAMPLES};
pub use csr::CsrMatrix;
pub use dst::ShiftedLaplacianSolver;
pub use eigen::{
    delta_well_1d, delta_well_1d_exact, lowest_eigenpair, lowest_eigenvalue, DeltaWell1d, EigenOptions, EigenPair,
};
pub use solve::{
    boundary_mass, solve, solve_delta_well_1d, write_eigenfunction_csv, DeltaWellStudy, Extrapolated, LevelResult,
    SolveOptions, SpectralResult,
};
