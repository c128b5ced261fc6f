//! Two-level system decaying into a zero-temperature bosonic reservoir.
//!
//! The whole model reduces to the amplitude `G(t)`, the solution of
//! `dG/dt = −∫₀ᵗ f(t − s) G(s) ds` with `G(0) = 1`, where `f` is the
//! reservoir two-point correlation function. The reduced dynamics is
//!
//! ```text
//! ρ11(t) = |G|² ρ11(0)
//! ρ00(t) = ρ00(0) + (1 − |G|²) ρ11(0)
//! ρ10(t) = G ρ10(0)
//! ```
//!
//! with `|1>` the excited state (matrix index 1) and `|0>` the ground state.

use crate::channel::{MapFamily, Superoperator};
use crate::error::{Error, Result};
use crate::grid::{check_uniform_grid, derivative, time_grid};
use crate::qmat::{pauli, ComplexMatrix, C64, ONE, ZERO};
use crate::tcl::{GeneratorTrajectory, LindbladGenerator};

/// `|G|` may exceed 1 by at most this much before a map is rejected.
pub const G_MODULUS_TOL: f64 = 1e-8;
/// Rates are not computed where `|G|` is at or below this.
pub const NEAR_ZERO_G: f64 = 1e-10;

/// Lorentzian reservoir on resonance: `f(τ) = ½ γ0 λ e^{−λ|τ|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialKernel {
    gamma0: f64,
    lambda: f64,
}

impl ExponentialKernel {
    pub fn new(gamma0: f64, lambda: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma0 must be > 0, got {gamma0}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        Ok(Self { gamma0, lambda })
    }

    /// Coupling strength, the inverse relaxation time.
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Spectral width, the inverse reservoir correlation time.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn value(&self, tau: f64) -> C64 {
        C64::new(
            0.5 * self.gamma0 * self.lambda * (-self.lambda * tau.abs()).exp(),
            0.0,
        )
    }

    pub fn correlation_time(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn relaxation_time(&self) -> f64 {
        1.0 / self.gamma0
    }

    /// `τ_E / τ_R = γ0 / λ`; the Markov regime is `α ≪ 1`.
    pub fn alpha(&self) -> f64 {
        self.gamma0 / self.lambda
    }
}

/// Correlation function sampled on a uniform grid starting at `τ = 0`,
/// linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    dt: f64,
    values: Vec<C64>,
}

impl TabulatedKernel {
    pub fn new(dt: f64, values: Vec<C64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "kernel dt must be > 0, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidGrid("tabulated kernel has no samples".into()));
        }
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Largest `τ` covered by the table.
    pub fn span(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn value(&self, tau: f64) -> Result<C64> {
        let x = tau.abs() / self.dt;
        let last = self.values.len() - 1;
        if x > last as f64 + 1e-9 {
            return Err(Error::InvalidGrid(format!(
                "tabulated kernel covers τ ≤ {}, needed {}",
                self.span(),
                tau.abs()
            )));
        }
        let k = (x.floor() as usize).min(last);
        if k == last {
            return Ok(self.values[last]);
        }
        let frac = x - k as f64;
        Ok(self.values[k] * (1.0 - frac) + self.values[k + 1] * frac)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Exponential(ExponentialKernel),
    Tabulated(TabulatedKernel),
}

impl Kernel {
    pub fn value(&self, tau: f64) -> Result<C64> {
        match self {
            Kernel::Exponential(k) => Ok(k.value(tau)),
            Kernel::Tabulated(k) => k.value(tau),
        }
    }
}

impl From<ExponentialKernel> for Kernel {
    fn from(k: ExponentialKernel) -> Self {
        Kernel::Exponential(k)
    }
}

impl From<TabulatedKernel> for Kernel {
    fn from(k: TabulatedKernel) -> Self {
        Kernel::Tabulated(k)
    }
}

/// `G(t)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GTrajectory {
    times: Vec<f64>,
    g: Vec<C64>,
}

impl GTrajectory {
    pub fn new(times: Vec<f64>, g: Vec<C64>) -> Result<Self> {
        if times.len() != g.len() {
            return Err(Error::DimMismatch {
                expected: times.len(),
                found: g.len(),
            });
        }
        check_uniform_grid(&times)?;
        if (g[0] - ONE).norm() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "G(0) must be 1, got {}",
                g[0]
            )));
        }
        if let Some(bad) = g.iter().find(|z| z.norm() > 1.0 + G_MODULUS_TOL) {
            return Err(Error::UnphysicalG(bad.norm()));
        }
        Ok(Self { times, g })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.g
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.g.iter().map(|z| z.norm()).collect()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

/// Closed-form `G(t)` for the exponential kernel.
///
/// With `d = sqrt(λ² − 2γ0λ)` this is `e^{−λt/2}[cosh(dt/2) + (λ/d) sinh(dt/2)]`.
/// Above the critical coupling `γ0 = λ/2` the real trigonometric form is used,
/// and within `1e-9 λ` of it the `d → 0` limit `e^{−λt/2}(1 + λt/2)`.
pub fn g_analytic(kernel: &ExponentialKernel, t: f64) -> Result<C64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let lambda = kernel.lambda;
    let d2 = lambda * lambda - 2.0 * kernel.gamma0 * lambda;
    let d = d2.abs().sqrt();
    let value = if d < 1e-9 * lambda {
        (-0.5 * lambda * t).exp() * (1.0 + 0.5 * lambda * t)
    } else if d2 > 0.0 {
        // e^{−λt/2} cosh(dt/2) and e^{−λt/2} sinh(dt/2) without overflow
        let plus = (0.5 * (d - lambda) * t).exp();
        let minus = (-0.5 * (d + lambda) * t).exp();
        0.5 * (plus + minus) + lambda / d * 0.5 * (plus - minus)
    } else {
        let phase = 0.5 * d * t;
        (-0.5 * lambda * t).exp() * (phase.cos() + lambda / d * phase.sin())
    };
    Ok(C64::new(value, 0.0))
}

/// The delta-correlated (Markov) limit `G(t) = e^{−γ0 t/2}`.
pub fn markov_g(gamma0: f64, t: f64) -> C64 {
    C64::new((-0.5 * gamma0 * t).exp(), 0.0)
}

/// Solves the memory-kernel equation for `G` on `[0, t_max]`.
///
/// The memory integral uses product-trapezoidal weights (½, 1, …, 1, ½) and
/// time stepping is trapezoidal, made explicit in the newest point by one
/// predictor-corrector pass. Both are second order in `dt`.
pub fn g_numeric(kernel: &Kernel, t_max: f64, dt: f64) -> Result<GTrajectory> {
    let times = time_grid(t_max, dt)?;
    if let Kernel::Exponential(k) = kernel {
        let limit = k.correlation_time() / 10.0;
        if dt > limit {
            return Err(Error::GridTooCoarse { dt, limit });
        }
    }
    let n = times.len();
    let f: Vec<C64> = times
        .iter()
        .map(|&t| kernel.value(t))
        .collect::<Result<_>>()?;

    let half_f0 = 0.5 * f[0];
    let mut g = Vec::with_capacity(n);
    g.push(ONE);
    // F_k = dG/dt at t_k
    let mut deriv = ZERO;
    for step in 1..n {
        // memory integral at t_step without the unknown endpoint term
        let mut partial = 0.5 * f[step] * g[0];
        for (j, gj) in g.iter().enumerate().skip(1) {
            partial += f[step - j] * gj;
        }
        let g_prev = g[step - 1];
        let predicted = g_prev + dt * deriv;
        let deriv_pred = -dt * (partial + half_f0 * predicted);
        let corrected = g_prev + 0.5 * dt * (deriv + deriv_pred);
        deriv = -dt * (partial + half_f0 * corrected);
        g.push(corrected);
    }
    if let Some(bad) = g.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Volterra solution diverged ({bad})"
        )));
    }
    GTrajectory::new(times, g)
}

/// Qubit map with the four relations above for a given `G`.
fn decay_super(g: C64) -> Superoperator {
    let p = g.norm_sqr();
    Superoperator::from_action(2, |a| {
        let mut out = ComplexMatrix::zeros(2, 2);
        out[(1, 1)] = p * a[(1, 1)];
        out[(0, 0)] = a[(0, 0)] + (1.0 - p) * a[(1, 1)];
        out[(1, 0)] = g * a[(1, 0)];
        out[(0, 1)] = g.conj() * a[(0, 1)];
        out
    })
}

/// The dynamical map `Φ(t, 0)` at amplitude `G(t) = g`.
pub fn map_at(g: C64) -> Result<Superoperator> {
    if g.norm() > 1.0 + G_MODULUS_TOL {
        return Err(Error::UnphysicalG(g.norm()));
    }
    Ok(decay_super(g))
}

/// `Φ(t2, t1)` from `G(t1) = g1`, `G(t2) = g2`; completely positive iff
/// `|g2| ≤ |g1|`.
pub fn intermediate_map_closed_form(g1: C64, g2: C64) -> Result<Superoperator> {
    if g1.norm() <= 1e-12 {
        return Err(Error::Singular(g1.norm()));
    }
    Ok(decay_super(g2 / g1))
}

/// Decay rate `γ(t)` and frequency shift `S(t)` of the exact time-local
/// generator. `None` marks grid points where `|G| ≤ NEAR_ZERO_G`, where the
/// rate diverges.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub gamma: Vec<Option<f64>>,
    pub shift: Vec<Option<f64>>,
}

/// `γ = −2 Re(Ġ/G)`, `S = −2 Im(Ġ/G)`.
pub fn rates(g: &GTrajectory) -> Result<Rates> {
    let dg = derivative(&g.g, g.dt())?;
    let (gamma, shift) =
        g.g.iter()
            .zip(&dg)
            .map(|(&gk, &dk)| {
                if gk.norm() <= NEAR_ZERO_G {
                    (None, None)
                } else {
                    let r = dk / gk;
                    (Some(-2.0 * r.re), Some(-2.0 * r.im))
                }
            })
            .unzip();
    Ok(Rates { gamma, shift })
}

/// The same decay rate written as `−(2/|G|) d|G|/dt`.
pub fn rate_from_modulus(g: &GTrajectory) -> Result<Vec<Option<f64>>> {
    let m = g.moduli();
    let dm = derivative(&m, g.dt())?;
    Ok(m.iter()
        .zip(&dm)
        .map(|(&mk, &dk)| (mk > NEAR_ZERO_G).then(|| -2.0 * dk / mk))
        .collect())
}

/// `K ρ = −(i/2) S [σ+σ−, ρ] + γ (σ− ρ σ+ − ½{σ+σ−, ρ})`
pub fn generator(gamma: f64, shift: f64) -> LindbladGenerator {
    LindbladGenerator::new(
        pauli::excited().scale_real(0.5 * shift),
        vec![(gamma, pauli::lower())],
    )
    .expect("qubit generator is well formed")
}

/// Exact time-local generators along a sampled `G`. Fails if `G` touches
/// zero on the grid.
pub fn generator_trajectory(g: &GTrajectory) -> Result<GeneratorTrajectory> {
    let r = rates(g)?;
    let gens = r
        .gamma
        .iter()
        .zip(&r.shift)
        .enumerate()
        .map(|(k, pair)| match pair {
            (Some(gamma), Some(shift)) => Ok(generator(*gamma, *shift)),
            _ => Err(Error::InvalidParameter(format!(
                "G vanishes at t = {}; no time-local generator",
                g.times[k]
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    GeneratorTrajectory::new(g.times.clone(), gens)
}

/// `Φ(t_k, 0)` for every grid point of a sampled `G`.
pub fn family_from_g(g: &GTrajectory) -> Result<MapFamily> {
    let maps =
        g.g.iter()
            .map(|&gk| map_at(gk))
            .collect::<Result<Vec<_>>>()?;
    MapFamily::new(g.times.clone(), maps)
}

/// Numeric `G` followed by [`map_at`] at every grid point.
pub fn family(kernel: &Kernel, t_max: f64, dt: f64) -> Result<MapFamily> {
    family_from_g(&g_numeric(kernel, t_max, dt)?)
}
