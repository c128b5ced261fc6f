//! Quantum channels as superoperators, Kraus sets and Choi matrices, plus the
//! divisibility audit of a one-parameter family of maps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::check_uniform_grid;
use crate::qmat::{herm_eig, ComplexMatrix, DensityMatrix, C64, ONE, ZERO};

/// Trace-preservation and Kraus-normalization tolerance.
pub const TP_TOL: f64 = 1e-9;
/// Default CP tolerance for divisibility verdicts on propagated maps.
pub const AUDIT_CP_TOL: f64 = 1e-7;
/// Pivots below this magnitude make a map non-invertible.
pub const PIVOT_TOL: f64 = 1e-12;

/// Linear map on `N x N` operators, stored as an `N² x N²` matrix acting on
/// column-stacked operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n2 = dim * dim;
        if matrix.rows() != n2 || matrix.cols() != n2 {
            return Err(Error::DimMismatch {
                expected: n2,
                found: matrix.rows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::zeros(dim * dim, dim * dim),
        }
    }

    /// Tabulates a linear action on the matrix units `E_ij`.
    pub fn from_action(dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let n2 = dim * dim;
        let mut matrix = ComplexMatrix::zeros(n2, n2);
        for j in 0..dim {
            for i in 0..dim {
                let mut unit = ComplexMatrix::zeros(dim, dim);
                unit[(i, j)] = ONE;
                let out = f(&unit).vectorize();
                let col = i + dim * j;
                for (row, z) in out.into_iter().enumerate() {
                    matrix[(row, col)] = z;
                }
            }
        }
        Self { dim, matrix }
    }

    /// Conjugation `ρ ↦ U ρ U†`.
    pub fn unitary(u: &ComplexMatrix) -> Self {
        Self {
            dim: u.rows(),
            matrix: u.conj().kron(u),
        }
    }

    /// The transpose map, positive but not completely positive.
    pub fn transpose_map(dim: usize) -> Self {
        Self::from_action(dim, |a| a.transpose())
    }

    /// `ρ ↦ tr(ρ) I/N`
    pub fn completely_depolarizing(dim: usize) -> Self {
        let mixed = ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64);
        Self::from_action(dim, |a| mixed.scale(a.trace()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, a: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            a.rows(),
            self.dim,
            "superoperator applied to wrong dimension"
        );
        let out = self.matrix.matvec(&a.vectorize());
        ComplexMatrix::unvectorize(&out, self.dim, self.dim)
    }

    /// Applies the map to a state and renormalizes. Only meaningful for CPT
    /// maps.
    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        DensityMatrix::renormalized(self.apply(rho.matrix()))
    }

    /// `self ∘ other`, i.e. `other` acts first.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            matrix: self.matrix.matmul(&other.matrix),
        }
    }

    /// Max deviation of `vec(I)† S` from `vec(I)†`.
    pub fn trace_preservation_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for col in 0..n * n {
            let s: C64 = (0..n).map(|i| self.matrix[(i + n * i, col)]).sum();
            let target = if col % (n + 1) == 0 { ONE } else { ZERO };
            worst = worst.max((s - target).norm());
        }
        worst
    }

    /// Max deviation of `S[A†]` from `S[A]†` over matrix units.
    pub fn hermiticity_preservation_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let col_ij = i + n * j;
                let col_ji = j + n * i;
                for k in 0..n {
                    for l in 0..n {
                        let lhs = self.matrix[(k + n * l, col_ji)];
                        let rhs = self.matrix[(l + n * k, col_ij)].conj();
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_error() <= tol
    }

    pub fn choi(&self) -> ChoiMatrix {
        super_to_choi(self)
    }

    pub fn invert(&self) -> Result<Self> {
        invert(self)
    }
}

/// Kraus operators `Ω_i` of a map `A ↦ Σ Ω_i A Ω_i†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        let n = first.rows();
        for op in &operators {
            if !op.is_square() {
                return Err(Error::NonSquare {
                    rows: op.rows(),
                    cols: op.cols(),
                });
            }
            if op.rows() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: op.rows(),
                });
            }
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].rows()
    }

    /// Max deviation of `Σ Ω_i† Ω_i` from the identity.
    pub fn normalization_error(&self) -> f64 {
        let n = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, op| {
                &acc + &op.adjoint().matmul(op)
            });
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    }

    pub fn apply(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, op| {
                &acc + &op.matmul(a).matmul(&op.adjoint())
            })
    }

    pub fn to_super(&self) -> Superoperator {
        kraus_to_super(self)
    }
}

/// `S = Σ_i conj(Ω_i) ⊗ Ω_i`
pub fn kraus_to_super(k: &KrausSet) -> Superoperator {
    let n = k.dim();
    let matrix = k
        .operators
        .iter()
        .fold(ComplexMatrix::zeros(n * n, n * n), |acc, op| {
            &acc + &op.conj().kron(op)
        });
    Superoperator { dim: n, matrix }
}

/// `C = Σ_ij E_ij ⊗ Φ(E_ij)`, input factor first. The identity channel maps
/// to `N |Φ+><Φ+|`, so a TP map has `tr C = N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Partial trace over the output factor; equals `I` for TP maps.
    pub fn output_marginal(&self) -> ComplexMatrix {
        let n = self.dim;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| self.matrix[(i * n + k, j * n + k)]).sum()
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(herm_eig(&self.matrix)?.eigenvalues[0])
    }

    /// Kraus operators from the eigenvectors of a PSD Choi matrix;
    /// eigenvalues at or below `tol` are dropped.
    pub fn to_kraus(&self, tol: f64) -> Result<KrausSet> {
        let n = self.dim;
        let eig = herm_eig(&self.matrix)?;
        if eig.eigenvalues[0] < -tol {
            return Err(Error::NotPositive(eig.eigenvalues[0]));
        }
        let mut ops = Vec::new();
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l <= tol {
                continue;
            }
            let v = eig.eigenvector(k);
            let s = l.sqrt();
            ops.push(ComplexMatrix::from_fn(n, n, |out, inp| {
                v[inp * n + out] * s
            }));
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(n, n));
        }
        KrausSet::new(ops)
    }
}

pub fn super_to_choi(s: &Superoperator) -> ChoiMatrix {
    let n = s.dim;
    let matrix = ComplexMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, k) = (r / n, r % n);
        let (j, l) = (c / n, c % n);
        s.matrix[(k + n * l, i + n * j)]
    });
    ChoiMatrix { dim: n, matrix }
}

/// CP test via the smallest Choi eigenvalue, which is returned alongside the
/// verdict.
pub fn is_completely_positive(s: &Superoperator, tol: f64) -> Result<(bool, f64)> {
    let min = super_to_choi(s).min_eigenvalue()?;
    Ok((min >= -tol, min))
}

pub fn invert(s: &Superoperator) -> Result<Superoperator> {
    Ok(Superoperator {
        dim: s.dim,
        matrix: s.matrix.inverse(PIVOT_TOL)?,
    })
}

/// A family `Φ(t_k, 0)` on a uniform grid with `Φ(t_0, 0) = I`.
#[derive(Debug, Clone)]
pub struct MapFamily {
    times: Vec<f64>,
    maps: Vec<Superoperator>,
}

impl MapFamily {
    pub fn new(times: Vec<f64>, maps: Vec<Superoperator>) -> Result<Self> {
        if times.len() != maps.len() {
            return Err(Error::DimMismatch {
                expected: times.len(),
                found: maps.len(),
            });
        }
        check_uniform_grid(&times)?;
        let dim = maps[0].dim;
        if let Some(bad) = maps.iter().find(|m| m.dim != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: bad.dim,
            });
        }
        let dev = maps[0]
            .matrix
            .max_abs_diff(&ComplexMatrix::identity(dim * dim));
        if dev > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "first map of a family must be the identity (deviation {dev:e})"
            )));
        }
        Ok(Self { times, maps })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn maps(&self) -> &[Superoperator] {
        &self.maps
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

/// `Φ(t_{i2}, t_{i1}) = Φ(t_{i2}, 0) Φ(t_{i1}, 0)^{-1}`
pub fn intermediate_map(family: &MapFamily, i1: usize, i2: usize) -> Result<Superoperator> {
    if i2 < i1 || i2 >= family.len() {
        return Err(Error::InvalidParameter(format!(
            "intermediate map needs i1 <= i2 < {}, got ({i1}, {i2})",
            family.len()
        )));
    }
    if i1 == i2 {
        return Ok(Superoperator::identity(family.dim()));
    }
    let inv = invert(&family.maps[i1])?;
    Ok(family.maps[i2].compose(&inv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// The intermediate map exists but has a negative Choi eigenvalue.
    NotCompletelyPositive,
    /// `Φ(t1, 0)` could not be inverted at the start of the step.
    Singular,
}

/// A maximal run of grid steps failing the same divisibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisibilityViolation {
    pub start: f64,
    pub end: f64,
    pub kind: ViolationKind,
    /// Most negative Choi eigenvalue over the run; `None` for singular runs.
    pub min_choi_eigenvalue: Option<f64>,
}

enum StepVerdict {
    Ok,
    NotCp(f64),
    Singular,
}

/// Checks CP of every adjacent-step intermediate map and merges failing steps
/// into maximal intervals. An empty result means the family is divisible at
/// grid resolution.
pub fn audit_divisibility(family: &MapFamily, tol: f64) -> Result<Vec<DivisibilityViolation>> {
    let steps: Vec<StepVerdict> = (0..family.len() - 1)
        .into_par_iter()
        .map(|k| match intermediate_map(family, k, k + 1) {
            Ok(step) => is_completely_positive(&step, tol).map(|(cp, min)| {
                if cp {
                    StepVerdict::Ok
                } else {
                    StepVerdict::NotCp(min)
                }
            }),
            Err(Error::Singular(_)) => Ok(StepVerdict::Singular),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let times = &family.times;
    let mut out: Vec<DivisibilityViolation> = Vec::new();
    for (k, verdict) in steps.iter().enumerate() {
        let (kind, eig) = match *verdict {
            StepVerdict::Ok => continue,
            StepVerdict::NotCp(min) => (ViolationKind::NotCompletelyPositive, Some(min)),
            StepVerdict::Singular => (ViolationKind::Singular, None),
        };
        match out.last_mut() {
            Some(last) if last.kind == kind && last.end == times[k] => {
                last.end = times[k + 1];
                last.min_choi_eigenvalue = match (last.min_choi_eigenvalue, eig) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
            }
            _ => out.push(DivisibilityViolation {
                start: times[k],
                end: times[k + 1],
                kind,
                min_choi_eigenvalue: eig,
            }),
        }
    }
    Ok(out)
}
