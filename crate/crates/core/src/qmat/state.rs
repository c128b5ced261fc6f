use super::eig::herm_eig;
use super::matrix::{pauli, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance for Hermiticity, unit trace and positivity of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// A positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates `m` against [`STATE_TOL`] and stores its Hermitian part.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let herm = m.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let m = m.hermitian_part();
        let min = herm_eig(&m)?.eigenvalues[0];
        if min < -STATE_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix: m })
    }

    /// Re-Hermitizes and renormalizes the trace without a positivity check.
    /// Meant for states produced by integrators and CPT maps, whose defects
    /// are roundoff.
    pub fn renormalized(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::InvalidTrace(tr));
        }
        Ok(Self {
            matrix: m.scale_real(1.0 / tr),
        })
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&psi, &psi),
        })
    }

    /// Computational basis state `|k><k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = ONE;
        Self { matrix: m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Qubit state `(I + x X + y Y + z Z)/2`. Vectors longer than 1 are
    /// rejected.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + STATE_TOL {
            return Err(Error::NotPositive(0.5 * (1.0 - len)));
        }
        let m = &(&(&ComplexMatrix::identity(2) + &pauli::x().scale_real(r[0]))
            + &pauli::y().scale_real(r[1]))
            + &pauli::z().scale_real(r[2]);
        Ok(Self {
            matrix: m.scale_real(0.5),
        })
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        let m = &self.matrix;
        Ok([
            2.0 * m[(1, 0)].re,
            2.0 * m[(1, 0)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ])
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: u.rows(),
            });
        }
        Ok(Self {
            matrix: u.matmul(&self.matrix).matmul(&u.adjoint()).hermitian_part(),
        })
    }

    /// `ρ ⊗ σ`
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }
}

/// Sum of the moduli of the eigenvalues of a Hermitian matrix.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(a)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

fn check_same_dim(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<()> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimMismatch {
            expected: r1.dim(),
            found: r2.dim(),
        });
    }
    Ok(())
}

/// `D(ρ1, ρ2) = ½ tr|ρ1 − ρ2|`
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    check_same_dim(r1, r2)?;
    Ok(0.5 * trace_norm(&(r1.matrix() - r2.matrix()))?)
}

/// Closed-form qubit trace distance from the population difference `a` and
/// the coherence difference `b`.
pub fn qubit_trace_distance(a: f64, b: C64) -> f64 {
    (a * a + b.norm_sqr()).sqrt()
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    System,
    Environment,
}

/// Partial trace of an operator on `H_S ⊗ H_E` (system index major).
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dim_s: usize,
    dim_e: usize,
    keep: Keep,
) -> Result<ComplexMatrix> {
    let n = dim_s * dim_e;
    if !m.is_square() || m.rows() != n || dim_s == 0 || dim_e == 0 {
        return Err(Error::DimMismatch {
            expected: n,
            found: m.rows(),
        });
    }
    Ok(match keep {
        Keep::System => ComplexMatrix::from_fn(dim_s, dim_s, |i, j| {
            (0..dim_e).map(|k| m[(i * dim_e + k, j * dim_e + k)]).sum()
        }),
        Keep::Environment => ComplexMatrix::from_fn(dim_e, dim_e, |a, b| {
            (0..dim_s).map(|k| m[(k * dim_e + a, k * dim_e + b)]).sum()
        }),
    })
}

pub fn partial_trace(
    rho: &DensityMatrix,
    dim_s: usize,
    dim_e: usize,
    keep: Keep,
) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), dim_s, dim_e, keep)?;
    Ok(DensityMatrix::from_trusted(m.hermitian_part()))
}

/// Optimal single-shot discrimination of two equiprobable states.
#[derive(Debug, Clone)]
pub struct Helstrom {
    /// Projector onto the nonnegative eigenspace of `ρ1 − ρ2`.
    pub projector: ComplexMatrix,
    /// `½[1 + D(ρ1, ρ2)]`
    pub p_max: f64,
}

pub fn helstrom(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<Helstrom> {
    check_same_dim(r1, r2)?;
    let diff = r1.matrix() - r2.matrix();
    let eig = herm_eig(&diff)?;
    let d = 0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    let projector = eig.map_spectrum(|l| if l >= 0.0 { ONE } else { ZERO });
    Ok(Helstrom {
        projector,
        p_max: 0.5 * (1.0 + d),
    })
}
