//! Random fixtures and closed-form oracles shared by the integration tests.
//! Nothing here calls into the library's numerics beyond constructors.
#![allow(dead_code)]

use nmkit::channel::KrausSet;
use nmkit::qmat::{ComplexMatrix, DensityMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Mixed state of random rank `1..=n` from a Ginibre matrix.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let rank = rng.gen_range(1..=n);
    let g = ginibre(rng, n, rank);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
}

pub fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Orthonormalizes the columns with modified Gram-Schmidt.
pub fn orthonormal_columns(mut a: ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (a.rows(), a.cols());
    for j in 0..cols {
        for k in 0..j {
            let proj: C64 = (0..rows).map(|i| a[(i, k)].conj() * a[(i, j)]).sum();
            for i in 0..rows {
                let sub = proj * a[(i, k)];
                a[(i, j)] -= sub;
            }
        }
        let norm = (0..rows).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..rows {
            a[(i, j)] /= norm;
        }
    }
    a
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    orthonormal_columns(ginibre(rng, n, n))
}

/// Random CPT map with `k` Kraus operators, cut from a random isometry
/// `C^n → C^{nk}`.
pub fn random_channel(rng: &mut ChaCha8Rng, n: usize, k: usize) -> KrausSet {
    let v = orthonormal_columns(ginibre(rng, n * k, n));
    let ops = (0..k)
        .map(|b| ComplexMatrix::from_fn(n, n, |i, j| v[(b * n + i, j)]))
        .collect();
    KrausSet::new(ops).unwrap()
}

/// Eigenvalues of a Hermitian 2x2 matrix in closed form, ascending.
pub fn eig2(m: &ComplexMatrix) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

/// Resonant decay model with an exponential kernel: closed-form amplitude
/// and its derivative, written independently of the library.
#[derive(Debug, Clone, Copy)]
pub struct DecayOracle {
    pub gamma0: f64,
    pub lambda: f64,
}

impl DecayOracle {
    pub fn new(gamma0: f64, lambda: f64) -> Self {
        Self { gamma0, lambda }
    }

    fn disc(&self) -> f64 {
        self.lambda * self.lambda - 2.0 * self.gamma0 * self.lambda
    }

    pub fn g(&self, t: f64) -> f64 {
        let l = self.lambda;
        let damp = (-0.5 * l * t).exp();
        let q = self.disc();
        if q > 0.0 {
            let d = q.sqrt();
            damp * ((0.5 * d * t).cosh() + l / d * (0.5 * d * t).sinh())
        } else if q < 0.0 {
            let w = (-q).sqrt();
            damp * ((0.5 * w * t).cos() + l / w * (0.5 * w * t).sin())
        } else {
            damp * (1.0 + 0.5 * l * t)
        }
    }

    pub fn dg(&self, t: f64) -> f64 {
        let l = self.lambda;
        let damp = (-0.5 * l * t).exp();
        let q = self.disc();
        if q > 0.0 {
            let d = q.sqrt();
            damp * (0.5 * d * t).sinh() * (d * d - l * l) / (2.0 * d)
        } else if q < 0.0 {
            let w = (-q).sqrt();
            -damp * (0.5 * w * t).sin() * (w * w + l * l) / (2.0 * w)
        } else {
            -0.25 * l * l * t * damp
        }
    }

    /// `γ(t) = −2 G'/G`
    pub fn gamma(&self, t: f64) -> f64 {
        -2.0 * self.dg(t) / self.g(t)
    }

    /// Maximal intervals on `[0, t_max]` where `|G|` grows, as
    /// `(zero of G, next extremum or t_max, |G| there)`.
    pub fn growth_lobes(&self, t_max: f64) -> Vec<(f64, f64, f64)> {
        let h = 1e-3;
        let n = (t_max / h).round() as usize;
        let mut lobes = Vec::new();
        let mut k = 0;
        while k < n {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            if self.g(a) * self.g(b) < 0.0 {
                let zero = bisect(|t| self.g(t), a, b);
                // the extremum is the next sign change of G'
                let mut peak = t_max;
                let mut j = k + 1;
                while j < n {
                    let (c, d) = (j as f64 * h, (j + 1) as f64 * h);
                    if self.dg(c) * self.dg(d) < 0.0 {
                        peak = bisect(|t| self.dg(t), c, d);
                        break;
                    }
                    j += 1;
                }
                lobes.push((zero, peak, self.g(peak).abs()));
                k = j;
            }
            k += 1;
        }
        lobes
    }
}

pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}
