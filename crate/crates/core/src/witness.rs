//! Exact system-environment evolution in small dimensions and the local
//! witness for initial correlations.
//!
//! A second initial state is prepared by a local operation on the system,
//! `ρ²(0) = (E⊗I) ρ¹(0)`. Both totals evolve unitarily; any growth of the
//! reduced trace distance above its initial value proves that `ρ¹(0)` was
//! correlated.

use rayon::prelude::*;

use crate::channel::{Superoperator, TP_TOL};
use crate::error::{Error, Result};
use crate::grid::time_grid;
use crate::qmat::{
    herm_eig, partial_trace, partial_trace_matrix, trace_distance, trace_norm, ComplexMatrix,
    DensityMatrix, EigenDecomposition, Keep, C64,
};

/// Default threshold on the trace-distance increase.
pub const WITNESS_TOL: f64 = 1e-6;
/// Slack allowed when asserting the contraction bounds.
pub const BOUND_TOL: f64 = 1e-9;
/// Largest supported `dim_s · dim_e`.
pub const MAX_TOTAL_DIM: usize = 16;

const HAMILTONIAN_TOL: f64 = 1e-10;

/// `H = H_S⊗I + I⊗H_E + H_I` on `H_S ⊗ H_E`, system index major.
#[derive(Debug, Clone)]
pub struct TotalModel {
    dim_s: usize,
    dim_e: usize,
    hamiltonian: ComplexMatrix,
    eig: EigenDecomposition,
}

impl TotalModel {
    pub fn new(dim_s: usize, dim_e: usize, hamiltonian: ComplexMatrix) -> Result<Self> {
        let n = dim_s * dim_e;
        if dim_s == 0 || dim_e == 0 || n > MAX_TOTAL_DIM {
            return Err(Error::InvalidParameter(format!(
                "total dimension {dim_s}x{dim_e} outside 1..={MAX_TOTAL_DIM}"
            )));
        }
        if hamiltonian.rows() != n || hamiltonian.cols() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: hamiltonian.rows(),
            });
        }
        let herm = hamiltonian.hermiticity_error();
        if herm > HAMILTONIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let hamiltonian = hamiltonian.hermitian_part();
        let eig = herm_eig(&hamiltonian)?;
        Ok(Self {
            dim_s,
            dim_e,
            hamiltonian,
            eig,
        })
    }

    pub fn from_parts(
        h_s: &ComplexMatrix,
        h_e: &ComplexMatrix,
        h_i: &ComplexMatrix,
    ) -> Result<Self> {
        let (ds, de) = (h_s.rows(), h_e.rows());
        for (m, d) in [(h_s, ds), (h_e, de)] {
            if m.cols() != d {
                return Err(Error::NonSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
        }
        if h_i.rows() != ds * de || h_i.cols() != ds * de {
            return Err(Error::DimMismatch {
                expected: ds * de,
                found: h_i.rows(),
            });
        }
        let h = &(&h_s.kron(&ComplexMatrix::identity(de)) + &ComplexMatrix::identity(ds).kron(h_e))
            + h_i;
        Self::new(ds, de, h)
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        let n = self.dim_s * self.dim_e;
        if rho.dim() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: rho.dim(),
            });
        }
        Ok(())
    }

    /// `U(t) A U(t)†` computed in the eigenbasis of `H`.
    fn evolve_operator(&self, a: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let v = &self.eig.eigenvectors;
        let l = &self.eig.eigenvalues;
        let mut tilde = v.adjoint().matmul(a).matmul(v);
        let n = l.len();
        for j in 0..n {
            for k in 0..n {
                tilde[(j, k)] *= C64::from_polar(1.0, -(l[j] - l[k]) * t);
            }
        }
        v.matmul(&tilde).matmul(&v.adjoint())
    }
}

/// `U(t) = V e^{−iΛt} V†`
pub fn total_unitary(model: &TotalModel, t: f64) -> ComplexMatrix {
    model.eig.map_spectrum(|l| C64::from_polar(1.0, -l * t))
}

/// `ρ_S(t) = tr_E{U(t) ρ U(t)†}`
pub fn reduced_dynamics(
    model: &TotalModel,
    rho_total: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    model.check_state(rho_total)?;
    let m = model.evolve_operator(rho_total.matrix(), t);
    let reduced = partial_trace_matrix(&m, model.dim_s, model.dim_e, Keep::System)?;
    DensityMatrix::renormalized(reduced)
}

/// `(E⊗I) ρ`, with `E` given on the system factor.
pub fn apply_local_operation(
    op: &Superoperator,
    rho_total: &DensityMatrix,
    dim_s: usize,
    dim_e: usize,
) -> Result<DensityMatrix> {
    if op.dim() != dim_s {
        return Err(Error::DimMismatch {
            expected: dim_s,
            found: op.dim(),
        });
    }
    if rho_total.dim() != dim_s * dim_e {
        return Err(Error::DimMismatch {
            expected: dim_s * dim_e,
            found: rho_total.dim(),
        });
    }
    let tp = op.trace_preservation_error();
    if tp > TP_TOL {
        return Err(Error::NotTracePreserving(tp));
    }
    let rho = rho_total.matrix();
    let s = op.matrix();
    let n = dim_s * dim_e;
    let mut out = ComplexMatrix::zeros(n, n);
    // ρ = Σ_ij |i><j| ⊗ B_ij  ↦  Σ_ij E(|i><j|) ⊗ B_ij
    for i in 0..dim_s {
        for j in 0..dim_s {
            let col = i + dim_s * j;
            for k in 0..dim_s {
                for l in 0..dim_s {
                    let e = s[(k + dim_s * l, col)];
                    if e == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for a in 0..dim_e {
                        for b in 0..dim_e {
                            out[(k * dim_e + a, l * dim_e + b)] +=
                                e * rho[(i * dim_e + a, j * dim_e + b)];
                        }
                    }
                }
            }
        }
    }
    DensityMatrix::new(out.hermitian_part())
}

/// `D(ρ, ρ_S ⊗ ρ_E)`
pub fn correlation_distance(rho_total: &DensityMatrix, dim_s: usize, dim_e: usize) -> Result<f64> {
    let rs = partial_trace(rho_total, dim_s, dim_e, Keep::System)?;
    let re = partial_trace(rho_total, dim_s, dim_e, Keep::Environment)?;
    trace_distance(rho_total, &rs.tensor(&re))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CorrelationsWitnessed,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct WitnessRecord {
    pub times: Vec<f64>,
    /// `D(ρ¹_S(t), ρ²_S(t))`
    pub d_local: Vec<f64>,
    pub d_local_0: f64,
    /// `D(ρ¹(0), ρ²(0))` of the total states.
    pub d_total_0: f64,
    /// Correlation distance of `ρ¹(0)`.
    pub bound_corr1: f64,
    /// Correlation distance of `ρ²(0)`.
    pub bound_corr2: f64,
    /// `D(ρ¹_E(0), ρ²_E(0))`
    pub bound_env: f64,
    pub verdict: Verdict,
}

/// Largest excess of each bound over its left-hand side; all should be
/// `≤ 0` up to roundoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundExcess {
    /// `D_S(t) − D(ρ¹(0), ρ²(0))`
    pub total_contraction: f64,
    /// `D_S(t) − D_S(0) − [D(ρ¹(0), ρ²(0)) − D_S(0)]`
    pub accessible_information: f64,
    /// Increase minus the sum of both correlation distances and the
    /// environment distance.
    pub three_term: f64,
    /// Increase minus the sum of both correlation distances.
    pub correlations_only: f64,
}

impl WitnessRecord {
    pub fn max_increase(&self) -> f64 {
        self.d_local
            .iter()
            .fold(f64::NEG_INFINITY, |m, d| m.max(d - self.d_local_0))
    }

    pub fn bound_excess(&self) -> BoundExcess {
        let max_d = self
            .d_local
            .iter()
            .fold(f64::NEG_INFINITY, |m, d| m.max(*d));
        let inc = max_d - self.d_local_0;
        BoundExcess {
            total_contraction: max_d - self.d_total_0,
            accessible_information: inc - (self.d_total_0 - self.d_local_0),
            three_term: inc - (self.bound_corr1 + self.bound_corr2 + self.bound_env),
            correlations_only: inc - (self.bound_corr1 + self.bound_corr2),
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be >= 0, got {tol}"
        )));
    }
    Ok(())
}

/// Evolves an arbitrary pair of total states and records the reduced trace
/// distance. The three-term bound is asserted at every grid point.
pub fn run_pair(
    model: &TotalModel,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t_max: f64,
    dt: f64,
    tol: f64,
) -> Result<WitnessRecord> {
    model.check_state(rho1)?;
    model.check_state(rho2)?;
    check_tol(tol)?;
    let (ds, de) = (model.dim_s, model.dim_e);
    let times = time_grid(t_max, dt)?;
    let diff = rho1.matrix() - rho2.matrix();
    let d_local = times
        .par_iter()
        .map(|&t| {
            let m = model.evolve_operator(&diff, t);
            let reduced = partial_trace_matrix(&m, ds, de, Keep::System)?;
            Ok(0.5 * trace_norm(&reduced.hermitian_part())?)
        })
        .collect::<Result<Vec<f64>>>()?;

    let marginal = |r: &DensityMatrix, keep| partial_trace(r, ds, de, keep);
    let d_local_0 = trace_distance(
        &marginal(rho1, Keep::System)?,
        &marginal(rho2, Keep::System)?,
    )?;
    let bound_env = trace_distance(
        &marginal(rho1, Keep::Environment)?,
        &marginal(rho2, Keep::Environment)?,
    )?;
    let mut record = WitnessRecord {
        d_local_0,
        d_total_0: trace_distance(rho1, rho2)?,
        bound_corr1: correlation_distance(rho1, ds, de)?,
        bound_corr2: correlation_distance(rho2, ds, de)?,
        bound_env,
        times,
        d_local,
        verdict: Verdict::Inconclusive,
    };
    if record.max_increase() > tol {
        record.verdict = Verdict::CorrelationsWitnessed;
    }
    let excess = record.bound_excess().three_term;
    if excess > BOUND_TOL {
        return Err(Error::InvariantViolation(format!(
            "trace-distance increase exceeds the correlation bound by {excess:e}"
        )));
    }
    Ok(record)
}

/// The witness protocol: `ρ²(0) = (E⊗I)ρ¹(0)`, then [`run_pair`]. The
/// environment marginals coincide, so the bound by the two correlation
/// distances alone is asserted at every grid point.
pub fn run_witness(
    model: &TotalModel,
    rho1: &DensityMatrix,
    local_op: &Superoperator,
    t_max: f64,
    dt: f64,
    tol: f64,
) -> Result<WitnessRecord> {
    let rho2 = apply_local_operation(local_op, rho1, model.dim_s, model.dim_e)?;
    let record = run_pair(model, rho1, &rho2, t_max, dt, tol)?;
    let excess = record.bound_excess().correlations_only;
    if excess > BOUND_TOL {
        return Err(Error::InvariantViolation(format!(
            "trace-distance increase exceeds the sum of correlation distances by {excess:e}"
        )));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::KrausSet;
    use crate::qmat::pauli;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)]).unwrap()
    }

    fn dephasing() -> Superoperator {
        let p0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
        KrausSet::new(vec![p0, p1]).unwrap().to_super()
    }

    fn flip_flop_model() -> TotalModel {
        let (x, y) = (pauli::x(), pauli::y());
        let h_i = (&x.kron(&x) + &y.kron(&y)).scale_real(0.5);
        TotalModel::from_parts(&x.scale_real(0.5), &ComplexMatrix::zeros(2, 2), &h_i).unwrap()
    }

    #[test]
    fn unitary_basics() {
        let m = flip_flop_model();
        let id = ComplexMatrix::identity(4);
        assert!(total_unitary(&m, 0.0).max_abs_diff(&id) < 1e-12);
        let u = total_unitary(&m, 1.3);
        assert!(u.adjoint().matmul(&u).max_abs_diff(&id) < 1e-12);
        let uv = u.matmul(&total_unitary(&m, 0.4));
        assert!(uv.max_abs_diff(&total_unitary(&m, 1.7)) < 1e-12);
    }

    #[test]
    fn bell_correlation_distance() {
        assert!((correlation_distance(&bell(), 2, 2).unwrap() - 0.75).abs() < 1e-12);
        let product = DensityMatrix::basis(2, 0).tensor(&DensityMatrix::maximally_mixed(2));
        assert!(correlation_distance(&product, 2, 2).unwrap() < 1e-12);
    }

    #[test]
    fn local_operation_keeps_environment_marginal() {
        let out = apply_local_operation(&dephasing(), &bell(), 2, 2).unwrap();
        let e1 = partial_trace(&bell(), 2, 2, Keep::Environment).unwrap();
        let e2 = partial_trace(&out, 2, 2, Keep::Environment).unwrap();
        assert!(trace_distance(&e1, &e2).unwrap() < 1e-12);
        // dephased Bell state is ½(|00><00| + |11><11|)
        let expected = ComplexMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);
        let not_tp = Superoperator::zero(2);
        assert!(matches!(
            apply_local_operation(&not_tp, &bell(), 2, 2),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn bell_fixture_is_witnessed() {
        let rec = run_witness(
            &flip_flop_model(),
            &bell(),
            &dephasing(),
            10.0,
            0.01,
            WITNESS_TOL,
        )
        .unwrap();
        assert_eq!(rec.verdict, Verdict::CorrelationsWitnessed);
        assert!(rec.d_local_0 < 1e-12);
        assert!(rec.max_increase() > 0.4);
        assert!(rec.bound_env < 1e-12);
    }

    #[test]
    fn product_state_is_inconclusive() {
        let rho = DensityMatrix::from_bloch([0.6, 0.0, 0.3])
            .unwrap()
            .tensor(&DensityMatrix::from_bloch([0.0, 0.5, -0.5]).unwrap());
        let op = Superoperator::unitary(&pauli::x());
        let rec = run_witness(&flip_flop_model(), &rho, &op, 10.0, 0.01, WITNESS_TOL).unwrap();
        assert_eq!(rec.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn decoupled_reduced_dynamics() {
        let h_s = pauli::z().scale_real(0.7);
        let zero = ComplexMatrix::zeros(4, 4);
        let m = TotalModel::from_parts(&h_s, &ComplexMatrix::zeros(2, 2), &zero).unwrap();
        let rs = DensityMatrix::from_bloch([1.0, 0.0, 0.0]).unwrap();
        let rho = rs.tensor(&DensityMatrix::basis(2, 1));
        let t = 0.9;
        let out = reduced_dynamics(&m, &rho, t).unwrap();
        let u = crate::qmat::expm(&h_s.scale(C64::new(0.0, -t)));
        let expected = rs.conjugate_by(&u).unwrap();
        assert!(trace_distance(&out, &expected).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(TotalModel::new(4, 8, ComplexMatrix::zeros(32, 32)).is_err());
        assert!(TotalModel::new(2, 2, ComplexMatrix::zeros(3, 3)).is_err());
        let non_herm = ComplexMatrix::from_fn(4, 4, |i, j| if i < j { c(1.0) } else { c(0.0) });
        assert!(matches!(
            TotalModel::new(2, 2, non_herm),
            Err(Error::NotHermitian(_))
        ));
    }
}
