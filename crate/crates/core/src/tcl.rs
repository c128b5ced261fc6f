//! Time-local master equations `dρ/dt = K(t) ρ`.
//!
//! Generators are kept in Lindblad shape,
//! `K ρ = −i[H, ρ] + Σ γ_i (A_i ρ A_i† − ½{A_i† A_i, ρ})`, with rates allowed
//! to go negative. Between grid points a trajectory is interpolated linearly
//! in the generator: propagators use the midpoint value `½(K_k + K_{k+1})`,
//! and the RK4 stages of [`evolve_state`] use the same midpoint for their two
//! half-step evaluations.

use crate::channel::{MapFamily, Superoperator};
use crate::error::{Error, Result};
use crate::grid::check_uniform_grid;
use crate::qmat::{expm, herm_eig, ComplexMatrix, DensityMatrix, C64, ONE};

const GENERATOR_HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladGenerator {
    hamiltonian: ComplexMatrix,
    channels: Vec<(f64, ComplexMatrix)>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: ComplexMatrix, channels: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::NonSquare {
                rows: hamiltonian.rows(),
                cols: hamiltonian.cols(),
            });
        }
        let herm = hamiltonian.hermiticity_error();
        if herm > GENERATOR_HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let n = hamiltonian.rows();
        for (rate, op) in &channels {
            if op.rows() != n || op.cols() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: op.rows(),
                });
            }
            if !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite rate {rate}")));
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
        })
    }

    /// Purely Hamiltonian generator.
    pub fn unitary(hamiltonian: ComplexMatrix) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[(f64, ComplexMatrix)] {
        &self.channels
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.channels.iter().map(|(r, _)| *r)
    }

    pub fn to_super(&self) -> Superoperator {
        generator_to_super(self)
    }
}

/// `−i(I⊗H − Hᵀ⊗I) + Σ γ (conj(A)⊗A − ½ I⊗A†A − ½ (A†A)ᵀ⊗I)`
pub fn generator_to_super(g: &LindbladGenerator) -> Superoperator {
    let n = g.dim();
    let id = ComplexMatrix::identity(n);
    let h = &g.hamiltonian;
    let mut m = (&id.kron(h) - &h.transpose().kron(&id)).scale(C64::new(0.0, -1.0));
    for (rate, a) in &g.channels {
        let ada = a.adjoint().matmul(a);
        let jump = a.conj().kron(a);
        let anti = &id.kron(&ada) + &ada.transpose().kron(&id);
        m = &m + &(&jump - &anti.scale_real(0.5)).scale_real(*rate);
    }
    Superoperator::new(n, m).expect("generator superoperator has N² x N² shape")
}

/// Generator in a traceless orthonormal operator basis `F_i` with a
/// Hermitian coefficient matrix `c`:
/// `K ρ = −i[H, ρ] + Σ_ij c_ij (F_i ρ F_j† − ½{F_j† F_i, ρ})`.
#[derive(Debug, Clone)]
pub struct KossakowskiForm {
    hamiltonian: ComplexMatrix,
    basis: Vec<ComplexMatrix>,
    coefficients: ComplexMatrix,
}

impl KossakowskiForm {
    pub fn new(
        hamiltonian: ComplexMatrix,
        basis: Vec<ComplexMatrix>,
        coefficients: ComplexMatrix,
    ) -> Result<Self> {
        let n = hamiltonian.rows();
        let herm = hamiltonian.hermiticity_error();
        if herm > GENERATOR_HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let m = n * n - 1;
        if basis.len() != m {
            return Err(Error::DimMismatch {
                expected: m,
                found: basis.len(),
            });
        }
        if coefficients.rows() != m || coefficients.cols() != m {
            return Err(Error::DimMismatch {
                expected: m,
                found: coefficients.rows(),
            });
        }
        let herm = coefficients.hermiticity_error();
        if herm > GENERATOR_HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        for (i, fi) in basis.iter().enumerate() {
            if fi.rows() != n || fi.cols() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: fi.rows(),
                });
            }
            if fi.trace().norm() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "basis element {i} is not traceless"
                )));
            }
            for (j, fj) in basis.iter().enumerate() {
                let ip = fi.adjoint().matmul(fj).trace();
                let expected = if i == j { ONE } else { C64::new(0.0, 0.0) };
                if (ip - expected).norm() > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "basis elements {i}, {j} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self {
            hamiltonian,
            basis,
            coefficients,
        })
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn coefficients(&self) -> &ComplexMatrix {
        &self.coefficients
    }

    pub fn to_super(&self) -> Superoperator {
        let n = self.hamiltonian.rows();
        let id = ComplexMatrix::identity(n);
        let h = &self.hamiltonian;
        let mut m = (&id.kron(h) - &h.transpose().kron(&id)).scale(C64::new(0.0, -1.0));
        for (i, fi) in self.basis.iter().enumerate() {
            for (j, fj) in self.basis.iter().enumerate() {
                let c = self.coefficients[(i, j)];
                if c.norm() == 0.0 {
                    continue;
                }
                let fjf = fj.adjoint().matmul(fi);
                let jump = fj.conj().kron(fi);
                let anti = &id.kron(&fjf) + &fjf.transpose().kron(&id);
                m = &m + &(&jump - &anti.scale_real(0.5)).scale(c);
            }
        }
        Superoperator::new(n, m).expect("N² x N²")
    }
}

/// Generalized Gell-Mann matrices scaled to Hilbert-Schmidt norm 1: a
/// traceless orthonormal basis of `N² − 1` operators.
pub fn traceless_basis(n: usize) -> Vec<ComplexMatrix> {
    let s = 0.5f64.sqrt();
    let mut out = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in j + 1..n {
            let mut sym = ComplexMatrix::zeros(n, n);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            out.push(sym);
            let mut asym = ComplexMatrix::zeros(n, n);
            asym[(j, k)] = C64::new(0.0, -s);
            asym[(k, j)] = C64::new(0.0, s);
            out.push(asym);
        }
    }
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = ComplexMatrix::zeros(n, n);
        for k in 0..l {
            diag[(k, k)] = C64::new(1.0 / norm, 0.0);
        }
        diag[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        out.push(diag);
    }
    out
}

/// Diagonalizes the coefficient matrix: `c = V diag(γ) V†` gives rates `γ_k`
/// and operators `A_k = Σ_i V_ik F_i`.
pub fn canonical_form(k: &KossakowskiForm) -> Result<LindbladGenerator> {
    let eig = herm_eig(&k.coefficients)?;
    let n = k.hamiltonian.rows();
    let channels = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(col, &rate)| {
            let op = k
                .basis
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(n, n), |acc, (i, fi)| {
                    &acc + &fi.scale(eig.eigenvectors[(i, col)])
                });
            (rate, op)
        })
        .collect();
    LindbladGenerator::new(k.hamiltonian.clone(), channels)
}

/// `Φ(t) = exp(L t)` for a constant generator.
pub fn expm_propagator(g: &LindbladGenerator, t: f64) -> Result<Superoperator> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let l = generator_to_super(g);
    Superoperator::new(g.dim(), expm(&l.matrix().scale_real(t)))
}

/// Generators sampled on a uniform time grid.
#[derive(Debug, Clone)]
pub struct GeneratorTrajectory {
    times: Vec<f64>,
    generators: Vec<LindbladGenerator>,
}

impl GeneratorTrajectory {
    pub fn new(times: Vec<f64>, generators: Vec<LindbladGenerator>) -> Result<Self> {
        if times.len() != generators.len() {
            return Err(Error::DimMismatch {
                expected: times.len(),
                found: generators.len(),
            });
        }
        check_uniform_grid(&times)?;
        let n = generators[0].dim();
        if let Some(bad) = generators.iter().find(|g| g.dim() != n) {
            return Err(Error::DimMismatch {
                expected: n,
                found: bad.dim(),
            });
        }
        Ok(Self { times, generators })
    }

    /// Grid `0, dt, 2dt, …` with one generator per point.
    pub fn uniform(dt: f64, generators: Vec<LindbladGenerator>) -> Result<Self> {
        let times = (0..generators.len()).map(|k| k as f64 * dt).collect();
        Self::new(times, generators)
    }

    /// A constant generator repeated over `steps + 1` grid points.
    pub fn constant(g: LindbladGenerator, dt: f64, steps: usize) -> Result<Self> {
        Self::uniform(dt, vec![g; steps + 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn generators(&self) -> &[LindbladGenerator] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn supers(&self, from: usize, to: usize) -> Vec<ComplexMatrix> {
        self.generators[from..=to]
            .iter()
            .map(|g| generator_to_super(g).matrix().clone())
            .collect()
    }
}

/// `Φ(t_{i2}, t_{i1})` as the time-ordered product of per-step exponentials of
/// the midpoint generator. Composition `Φ(t3,t1) = Φ(t3,t2) Φ(t2,t1)` holds
/// by construction.
pub fn ordered_propagator(
    traj: &GeneratorTrajectory,
    i1: usize,
    i2: usize,
) -> Result<Superoperator> {
    if i2 < i1 || i2 >= traj.len() {
        return Err(Error::InvalidParameter(format!(
            "ordered propagator needs i1 <= i2 < {}, got ({i1}, {i2})",
            traj.len()
        )));
    }
    let n = traj.dim();
    if i1 == i2 {
        return Ok(Superoperator::identity(n));
    }
    let dt = traj.dt();
    let supers = traj.supers(i1, i2);
    let mut acc = ComplexMatrix::identity(n * n);
    for w in supers.windows(2) {
        let mid = (&w[0] + &w[1]).scale_real(0.5 * dt);
        acc = expm(&mid).matmul(&acc);
    }
    Superoperator::new(n, acc)
}

/// `Φ(t_k, 0)` for every grid point, accumulated step by step with the same
/// midpoint exponentials as [`ordered_propagator`].
pub fn propagator_family(traj: &GeneratorTrajectory) -> Result<MapFamily> {
    let n = traj.dim();
    let dt = traj.dt();
    let supers = traj.supers(0, traj.len() - 1);
    let mut maps = Vec::with_capacity(traj.len());
    let mut acc = ComplexMatrix::identity(n * n);
    maps.push(Superoperator::identity(n));
    for w in supers.windows(2) {
        let mid = (&w[0] + &w[1]).scale_real(0.5 * dt);
        acc = expm(&mid).matmul(&acc);
        maps.push(Superoperator::new(n, acc.clone())?);
    }
    MapFamily::new(traj.times.clone(), maps)
}

/// States along the grid together with the largest trace drift per unit time
/// seen before renormalization.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub states: Vec<DensityMatrix>,
    pub max_trace_drift_rate: f64,
}

/// Classical RK4 on the master equation. After every step the state is
/// re-Hermitized as `(ρ + ρ†)/2` and its trace renormalized to 1; this moves
/// states at the 1e-12 level and keeps long runs valid.
pub fn evolve_state_with_drift(
    traj: &GeneratorTrajectory,
    rho0: &DensityMatrix,
) -> Result<Evolution> {
    let n = traj.dim();
    if rho0.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: rho0.dim(),
        });
    }
    let dt = traj.dt();
    let supers = traj.supers(0, traj.len() - 1);
    let mut states = Vec::with_capacity(traj.len());
    states.push(rho0.clone());
    let mut v = rho0.matrix().vectorize();
    let mut worst_drift: f64 = 0.0;
    for w in supers.windows(2) {
        let (k0, k1) = (&w[0], &w[1]);
        let mid = (k0 + k1).scale_real(0.5);
        let axpy = |x: &[C64], y: &[C64], a: f64| -> Vec<C64> {
            x.iter().zip(y).map(|(xi, yi)| xi + yi * a).collect()
        };
        let s1 = k0.matvec(&v);
        let s2 = mid.matvec(&axpy(&v, &s1, 0.5 * dt));
        let s3 = mid.matvec(&axpy(&v, &s2, 0.5 * dt));
        let s4 = k1.matvec(&axpy(&v, &s3, dt));
        for i in 0..v.len() {
            v[i] += (s1[i] + 2.0 * s2[i] + 2.0 * s3[i] + s4[i]) * (dt / 6.0);
        }
        let m = ComplexMatrix::unvectorize(&v, n, n);
        worst_drift = worst_drift.max((m.trace() - ONE).norm() / dt);
        let state = DensityMatrix::renormalized(m)?;
        v = state.matrix().vectorize();
        states.push(state);
    }
    Ok(Evolution {
        states,
        max_trace_drift_rate: worst_drift,
    })
}

pub fn evolve_state(
    traj: &GeneratorTrajectory,
    rho0: &DensityMatrix,
) -> Result<Vec<DensityMatrix>> {
    Ok(evolve_state_with_drift(traj, rho0)?.states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adc;
    use crate::channel::is_completely_positive;
    use crate::qmat::pauli;

    fn amplitude_damping(gamma: f64) -> LindbladGenerator {
        LindbladGenerator::new(ComplexMatrix::zeros(2, 2), vec![(gamma, pauli::lower())]).unwrap()
    }

    #[test]
    fn empty_generator_is_zero() {
        let g = LindbladGenerator::unitary(ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(generator_to_super(&g), Superoperator::zero(2));
    }

    #[test]
    fn dissipator_on_excited_state() {
        let gamma = 0.7;
        let l = generator_to_super(&amplitude_damping(gamma));
        let out = l.apply(DensityMatrix::basis(2, 1).matrix());
        let expected = ComplexMatrix::from_real_diag(&[gamma, -gamma]);
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn generator_annihilates_trace() {
        let h = ComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else {
                C64::new(0.1, 0.2 * (j as f64 - i as f64))
            }
        });
        let a = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64 * 0.1, 0.05));
        let g = LindbladGenerator::new(h, vec![(-0.4, a)]).unwrap();
        let l = generator_to_super(&g);
        // vec(I)† L = 0  ⇔  every column's trace vanishes
        let n = 3;
        for col in 0..n * n {
            let s: C64 = (0..n).map(|i| l.matrix()[(i + n * i, col)]).sum();
            assert!(s.norm() < 1e-12);
        }
        assert!(l.hermiticity_preservation_error() < 1e-12);
    }

    #[test]
    fn rejects_bad_generators() {
        let skew = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(LindbladGenerator::unitary(skew).is_err());
        assert!(LindbladGenerator::new(
            ComplexMatrix::zeros(2, 2),
            vec![(1.0, ComplexMatrix::zeros(3, 3))]
        )
        .is_err());
    }

    #[test]
    fn markov_decay_matches_model_map() {
        let gamma0 = 1.3;
        let g = adc::generator(gamma0, 0.0);
        for t in [0.0, 0.5, 2.0] {
            let prop = expm_propagator(&g, t).unwrap();
            let exact = adc::map_at(adc::markov_g(gamma0, t)).unwrap();
            assert!(prop.matrix().max_abs_diff(exact.matrix()) < 1e-12);
        }
    }

    #[test]
    fn expm_propagator_at_zero_is_identity() {
        let p = expm_propagator(&amplitude_damping(2.0), 0.0).unwrap();
        assert!(p.matrix().max_abs_diff(Superoperator::identity(2).matrix()) < 1e-15);
        assert!(expm_propagator(&amplitude_damping(2.0), -1.0).is_err());
    }

    #[test]
    fn dephasing_decay() {
        let gamma = 0.35;
        let g =
            LindbladGenerator::new(ComplexMatrix::zeros(2, 2), vec![(gamma, pauli::z())]).unwrap();
        let t = 1.7;
        let p = expm_propagator(&g, t).unwrap();
        let plus = DensityMatrix::from_bloch([1.0, 0.0, 0.0]).unwrap();
        let out = p.apply(plus.matrix());
        assert!((out[(0, 1)].re - 0.5 * (-2.0 * gamma * t).exp()).abs() < 1e-13);
        assert!((out[(0, 0)].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn traceless_basis_is_orthonormal() {
        for n in 2..=4 {
            let b = traceless_basis(n);
            assert_eq!(b.len(), n * n - 1);
            let k = KossakowskiForm::new(
                ComplexMatrix::zeros(n, n),
                b,
                ComplexMatrix::zeros(n * n - 1, n * n - 1),
            );
            assert!(k.is_ok());
        }
    }

    #[test]
    fn canonical_form_of_diagonal_coefficients() {
        let basis = traceless_basis(2);
        let c = ComplexMatrix::from_real_diag(&[0.3, 0.1, 0.2]);
        let k = KossakowskiForm::new(ComplexMatrix::zeros(2, 2), basis.clone(), c).unwrap();
        let g = canonical_form(&k).unwrap();
        let rates: Vec<f64> = g.rates().collect();
        assert_eq!(rates, vec![0.1, 0.2, 0.3]);
        // sorted ascending: 0.1 belongs to F_1, 0.2 to F_2, 0.3 to F_0
        for (k_idx, f_idx) in [(0, 1), (1, 2), (2, 0)] {
            let a = &g.channels()[k_idx].1;
            assert!(
                a.max_abs_diff(&basis[f_idx]) < 1e-15
                    || a.max_abs_diff(&basis[f_idx].scale_real(-1.0)) < 1e-15
            );
        }
        assert!(
            generator_to_super(&g)
                .matrix()
                .max_abs_diff(k.to_super().matrix())
                < 1e-12
        );
    }

    #[test]
    fn canonical_form_rank_one() {
        let basis = traceless_basis(2);
        let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        let c = ComplexMatrix::outer(&v, &v).scale_real(2.0);
        let k = KossakowskiForm::new(pauli::z(), basis, c).unwrap();
        let g = canonical_form(&k).unwrap();
        let nonzero = g.rates().filter(|r| r.abs() > 1e-12).count();
        assert_eq!(nonzero, 1);
        assert!(
            generator_to_super(&g)
                .matrix()
                .max_abs_diff(k.to_super().matrix())
                < 1e-12
        );
    }

    #[test]
    fn ordered_propagator_constant_generator() {
        let g = amplitude_damping(0.8);
        let traj = GeneratorTrajectory::constant(g.clone(), 0.01, 100).unwrap();
        let p = ordered_propagator(&traj, 0, 100).unwrap();
        let exact = expm_propagator(&g, 1.0).unwrap();
        assert!(p.matrix().max_abs_diff(exact.matrix()) < 1e-4 * 1e-2);
        assert!(is_completely_positive(&p, 1e-10).unwrap().0);
        assert_eq!(
            ordered_propagator(&traj, 5, 5).unwrap(),
            Superoperator::identity(2)
        );
    }

    #[test]
    fn ordered_propagator_composition_law() {
        let gens: Vec<LindbladGenerator> = (0..=50)
            .map(|k| adc::generator(1.0 + (k as f64 * 0.1).sin(), 0.3 * k as f64 / 50.0))
            .collect();
        let traj = GeneratorTrajectory::uniform(0.02, gens).unwrap();
        let full = ordered_propagator(&traj, 0, 50).unwrap();
        let split = ordered_propagator(&traj, 20, 50)
            .unwrap()
            .compose(&ordered_propagator(&traj, 0, 20).unwrap());
        assert!(full.matrix().max_abs_diff(split.matrix()) < 1e-13);
    }

    #[test]
    fn evolve_zero_generator() {
        let traj = GeneratorTrajectory::constant(
            LindbladGenerator::unitary(ComplexMatrix::zeros(2, 2)).unwrap(),
            0.1,
            20,
        )
        .unwrap();
        let rho = DensityMatrix::from_bloch([0.2, -0.3, 0.5]).unwrap();
        let states = evolve_state(&traj, &rho).unwrap();
        assert_eq!(states.len(), 21);
        assert!(states
            .iter()
            .all(|s| s.matrix().max_abs_diff(rho.matrix()) < 1e-15));
    }

    #[test]
    fn evolve_dephasing_keeps_populations() {
        let g =
            LindbladGenerator::new(ComplexMatrix::zeros(2, 2), vec![(0.9, pauli::z())]).unwrap();
        let traj = GeneratorTrajectory::constant(g, 0.01, 300).unwrap();
        let rho = DensityMatrix::from_bloch([0.6, 0.0, 0.3]).unwrap();
        let ev = evolve_state_with_drift(&traj, &rho).unwrap();
        for s in &ev.states {
            assert!((s.matrix()[(0, 0)] - rho.matrix()[(0, 0)]).norm() < 1e-12);
            assert!((s.matrix()[(1, 1)] - rho.matrix()[(1, 1)]).norm() < 1e-12);
        }
        assert!(ev.max_trace_drift_rate < 1e-8);
    }

    #[test]
    fn evolve_dim_mismatch() {
        let traj = GeneratorTrajectory::constant(amplitude_damping(1.0), 0.1, 3).unwrap();
        assert!(matches!(
            evolve_state(&traj, &DensityMatrix::maximally_mixed(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn propagator_family_matches_ordered_products() {
        let gens: Vec<_> = (0..6)
            .map(|k| amplitude_damping(0.3 + 0.1 * k as f64))
            .collect();
        let traj = GeneratorTrajectory::uniform(0.05, gens).unwrap();
        let fam = propagator_family(&traj).unwrap();
        for k in 0..traj.len() {
            let p = ordered_propagator(&traj, 0, k).unwrap();
            assert!(fam.maps()[k].matrix().max_abs_diff(p.matrix()) < 1e-14);
        }
    }
}
