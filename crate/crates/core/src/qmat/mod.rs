//! Dense complex linear algebra for quantum states.
//!
//! Operators on `H_S ⊗ H_E` use system-major indexing: basis state
//! `|i>_S |k>_E` sits at row `i * dim_e + k`. Superoperators act on
//! column-stacked operators, `vec(ABC) = (Cᵀ ⊗ A) vec(B)`.

mod eig;
mod expm;
mod matrix;
mod state;

pub use eig::{herm_eig, EigenDecomposition, HERMITIAN_INPUT_TOL};
pub use expm::expm;
pub use matrix::{pauli, ComplexMatrix, C64};
pub use state::{
    helstrom, partial_trace, partial_trace_matrix, qubit_trace_distance, trace_distance,
    trace_norm, DensityMatrix, Helstrom, Keep, STATE_TOL,
};

pub(crate) use matrix::{ONE, ZERO};
