//! Trace-distance dynamics of state pairs, backflow intervals and the
//! non-Markovianity measure `N(Φ)`.
//!
//! The measure of a pair is the sum of the gains `D(b_i) − D(a_i)` over the
//! maximal grid intervals on which the trace distance grows. `N(Φ)` is its
//! supremum over initial pairs; [`maximize`] approximates it from below with a
//! grid search followed by coordinate descent on Bloch vectors.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use crate::channel::MapFamily;
use crate::error::{Error, Result};
use crate::grid::derivative;
use crate::qmat::{pauli, trace_distance, trace_norm, DensityMatrix};

/// A step counts as growth only if `d[k+1] > d[k] + GROWTH_TOL`.
pub const GROWTH_TOL: f64 = 1e-12;
/// `N(Φ)` above this flags the family as non-Markovian.
pub const NONMARKOVIAN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DistanceTrajectory {
    pub times: Vec<f64>,
    pub d: Vec<f64>,
    pub pair: (DensityMatrix, DensityMatrix),
}

impl DistanceTrajectory {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthInterval {
    pub start: f64,
    pub end: f64,
    pub gain: f64,
}

#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub n_value: f64,
    pub optimal_pair: (DensityMatrix, DensityMatrix),
    pub intervals: Vec<GrowthInterval>,
    /// Number of distinct pairs whose measure was evaluated.
    pub evaluations: usize,
}

/// Search settings for [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairSearchConfig {
    /// Radii `k/radii`, `k = 1..=radii`, each combined with the 26 cube
    /// directions.
    pub radii: usize,
    pub include_antipodal: bool,
    /// Number of grid pairs refined by coordinate descent.
    pub seeds: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_iterations: usize,
}

impl Default for PairSearchConfig {
    fn default() -> Self {
        Self {
            radii: 6,
            include_antipodal: true,
            seeds: 5,
            initial_step: 0.25,
            min_step: 1e-3,
            max_iterations: 200,
        }
    }
}

fn check_pair(family: &MapFamily, r1: &DensityMatrix, r2: &DensityMatrix) -> Result<()> {
    for r in [r1, r2] {
        if r.dim() != family.dim() {
            return Err(Error::DimMismatch {
                expected: family.dim(),
                found: r.dim(),
            });
        }
    }
    Ok(())
}

/// `d[k] = D(Φ(t_k)ρ1, Φ(t_k)ρ2)`
pub fn distance_trajectory(
    family: &MapFamily,
    r1: &DensityMatrix,
    r2: &DensityMatrix,
) -> Result<DistanceTrajectory> {
    check_pair(family, r1, r2)?;
    let diff = r1.matrix() - r2.matrix();
    let d = family
        .maps()
        .par_iter()
        .map(|m| Ok(0.5 * trace_norm(&m.apply(&diff).hermitian_part())?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DistanceTrajectory {
        times: family.times().to_vec(),
        d,
        pair: (r1.clone(), r2.clone()),
    })
}

/// Information-flow rate `σ(t) = dD/dt` on the trajectory grid.
pub fn sigma(traj: &DistanceTrajectory) -> Result<Vec<f64>> {
    derivative(&traj.d, traj.dt())
}

pub fn growth_intervals(traj: &DistanceTrajectory) -> Vec<GrowthInterval> {
    growth_runs(&traj.d)
        .into_iter()
        .map(|(a, b)| GrowthInterval {
            start: traj.times[a],
            end: traj.times[b],
            gain: traj.d[b] - traj.d[a],
        })
        .collect()
}

/// Index ranges of maximal growing runs.
fn growth_runs(d: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for k in 0..d.len().saturating_sub(1) {
        let grows = d[k + 1] > d[k] + GROWTH_TOL;
        match (grows, start) {
            (true, None) => start = Some(k),
            (false, Some(a)) => {
                runs.push((a, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        runs.push((a, d.len() - 1));
    }
    runs
}

pub fn measure_for_pair(
    family: &MapFamily,
    r1: &DensityMatrix,
    r2: &DensityMatrix,
) -> Result<(f64, Vec<GrowthInterval>)> {
    let traj = distance_trajectory(family, r1, r2)?;
    let intervals = growth_intervals(&traj);
    Ok((intervals.iter().fold(0.0, |acc, i| acc + i.gain), intervals))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Larger value first, ties broken by the smaller coordinate vector.
fn better(va: f64, ka: &[f64], vb: f64, kb: &[f64]) -> bool {
    match va.total_cmp(&vb) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => lex_cmp(ka, kb) == Ordering::Less,
    }
}

fn flatten(pair: &(DensityMatrix, DensityMatrix)) -> Vec<f64> {
    let mut key = Vec::new();
    for r in [&pair.0, &pair.1] {
        for z in r.matrix().as_slice() {
            key.push(z.re);
            key.push(z.im);
        }
    }
    key
}

/// Evaluates every candidate pair and keeps the best. Works in any dimension.
pub fn maximize_over_candidates(
    family: &MapFamily,
    candidates: &[(DensityMatrix, DensityMatrix)],
) -> Result<MeasureReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate pairs".into()));
    }
    let mut results = candidates
        .par_iter()
        .map(|(r1, r2)| measure_for_pair(family, r1, r2))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    let mut best_key = flatten(&candidates[0]);
    for k in 1..candidates.len() {
        let key = flatten(&candidates[k]);
        if better(results[k].0, &key, results[best].0, &best_key) {
            best = k;
            best_key = key;
        }
    }
    let (n_value, intervals) = results.swap_remove(best);
    Ok(MeasureReport {
        n_value,
        optimal_pair: candidates[best].clone(),
        intervals,
        evaluations: candidates.len(),
    })
}

/// Linear Bloch part `T_ij = ½ tr(σ_i Φ(σ_j))` of every map in a qubit
/// family. For traceless inputs `D(t) = ½ |T(t) Δr|`.
struct BlochFamily {
    t: Vec<[[f64; 3]; 3]>,
}

impl BlochFamily {
    fn new(family: &MapFamily) -> Self {
        let sig = [pauli::x(), pauli::y(), pauli::z()];
        let t = family
            .maps()
            .iter()
            .map(|m| {
                let mut t = [[0.0; 3]; 3];
                for (j, sj) in sig.iter().enumerate() {
                    let out = m.apply(sj);
                    for (i, si) in sig.iter().enumerate() {
                        t[i][j] = 0.5 * si.matmul(&out).trace().re;
                    }
                }
                t
            })
            .collect();
        Self { t }
    }

    fn measure(&self, dr: [f64; 3]) -> f64 {
        let mut total = 0.0;
        let mut prev = None;
        for t in &self.t {
            let mut s = 0.0;
            for row in t {
                let v = row[0] * dr[0] + row[1] * dr[1] + row[2] * dr[2];
                s += v * v;
            }
            let d = 0.5 * s.sqrt();
            if let Some(p) = prev {
                if d > p + GROWTH_TOL {
                    total += d - p;
                }
            }
            prev = Some(d);
        }
        total
    }
}

fn cube_directions() -> Vec<[f64; 3]> {
    let mut dirs = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) == (0, 0, 0) {
                    continue;
                }
                let v = [i as f64, j as f64, k as f64];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                dirs.push([v[0] / n, v[1] / n, v[2] / n]);
            }
        }
    }
    dirs
}

type Point = [f64; 6];

fn dr_of(p: &Point) -> [f64; 3] {
    [p[0] - p[3], p[1] - p[4], p[2] - p[5]]
}

/// `D` depends on `Δr` only up to sign, so pairs sharing `±Δr` are evaluated
/// once.
fn dedup_key(p: &Point) -> [i64; 3] {
    let dr = dr_of(p);
    let q = |x: f64| (x * 1e9).round() as i64;
    let k = [q(dr[0]), q(dr[1]), q(dr[2])];
    let neg = [-k[0], -k[1], -k[2]];
    k.max(neg)
}

fn coarse_grid(cfg: &PairSearchConfig) -> Vec<Point> {
    let dirs = cube_directions();
    let mut points = Vec::with_capacity(cfg.radii * dirs.len());
    for k in 1..=cfg.radii {
        let r = k as f64 / cfg.radii as f64;
        for d in &dirs {
            points.push([r * d[0], r * d[1], r * d[2]]);
        }
    }
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (a, b) = (points[i], points[j]);
            pairs.push([a[0], a[1], a[2], b[0], b[1], b[2]]);
        }
    }
    if cfg.include_antipodal {
        for d in &dirs {
            pairs.push([d[0], d[1], d[2], -d[0], -d[1], -d[2]]);
        }
    }
    let mut seen = HashSet::new();
    pairs.retain(|p| seen.insert(dedup_key(p)));
    pairs
}

fn project(p: &mut Point, half: usize) {
    let v = &mut p[3 * half..3 * half + 3];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n > 1.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn refine(
    fam: &BlochFamily,
    start: Point,
    start_value: f64,
    cfg: &PairSearchConfig,
) -> (Point, f64, usize) {
    let (mut x, mut val) = (start, start_value);
    let mut step = cfg.initial_step;
    let mut evaluations = 0;
    for _ in 0..cfg.max_iterations {
        if step < cfg.min_step {
            break;
        }
        let mut improved = false;
        for c in 0..6 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[c] += sign * step;
                project(&mut y, c / 3);
                let v = fam.measure(dr_of(&y));
                evaluations += 1;
                if v > val + GROWTH_TOL {
                    x = y;
                    val = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, val, evaluations)
}

fn pair_from_point(p: &Point) -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((
        DensityMatrix::from_bloch([p[0], p[1], p[2]])?,
        DensityMatrix::from_bloch([p[3], p[4], p[5]])?,
    ))
}

/// Approximates `N(Φ)` for a qubit family.
///
/// Phase one scores a grid of Bloch-vector pairs in the closed ball, phase
/// two refines the best `cfg.seeds` of them by coordinate descent. The result
/// is a lower bound on the supremum; ties go to the lexicographically smallest
/// pair of Bloch vectors.
pub fn maximize(family: &MapFamily, cfg: &PairSearchConfig) -> Result<MeasureReport> {
    if family.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: family.dim(),
        });
    }
    if cfg.radii == 0 {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    let fam = BlochFamily::new(family);
    let grid = coarse_grid(cfg);
    let values: Vec<f64> = grid.par_iter().map(|p| fam.measure(dr_of(p))).collect();
    let mut evaluations = grid.len();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then_with(|| lex_cmp(&grid[a], &grid[b]))
    });
    let refined: Vec<(Point, f64, usize)> = order
        .iter()
        .take(cfg.seeds)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&k| refine(&fam, grid[k], values[k], cfg))
        .collect();

    let (mut best, mut best_val) = (grid[order[0]], values[order[0]]);
    for (p, v, n) in &refined {
        evaluations += n;
        if better(*v, p, best_val, &best) {
            best = *p;
            best_val = *v;
        }
    }
    let pair = pair_from_point(&best)?;
    let (n_value, intervals) = measure_for_pair(family, &pair.0, &pair.1)?;
    Ok(MeasureReport {
        n_value,
        optimal_pair: pair,
        intervals,
        evaluations,
    })
}

pub fn is_nonmarkovian(family: &MapFamily, cfg: &PairSearchConfig) -> Result<bool> {
    Ok(maximize(family, cfg)?.n_value > NONMARKOVIAN_THRESHOLD)
}

/// Initial-pair trace distance, for checking `d[0]`.
pub fn initial_distance(traj: &DistanceTrajectory) -> Result<f64> {
    trace_distance(&traj.pair.0, &traj.pair.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adc::{family, ExponentialKernel, Kernel};
    use crate::channel::Superoperator;

    fn adc(gamma0: f64, t_max: f64, dt: f64) -> MapFamily {
        let k: Kernel = ExponentialKernel::new(gamma0, 1.0).unwrap().into();
        family(&k, t_max, dt).unwrap()
    }

    fn constant_family(n: usize) -> MapFamily {
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
        MapFamily::new(times, vec![Superoperator::identity(2); n]).unwrap()
    }

    fn traj(d: Vec<f64>) -> DistanceTrajectory {
        let s = DensityMatrix::maximally_mixed(2);
        DistanceTrajectory {
            times: (0..d.len()).map(|k| k as f64).collect(),
            d,
            pair: (s.clone(), s),
        }
    }

    #[test]
    fn identity_family_is_constant() {
        let f = constant_family(5);
        let r1 = DensityMatrix::from_bloch([0.3, 0.1, -0.2]).unwrap();
        let r2 = DensityMatrix::basis(2, 1);
        let t = distance_trajectory(&f, &r1, &r2).unwrap();
        let d0 = initial_distance(&t).unwrap();
        assert!(t.d.iter().all(|d| (d - d0).abs() < 1e-14));
        assert!(sigma(&t).unwrap().iter().all(|s| s.abs() < 1e-12));
        assert!(growth_intervals(&t).is_empty());
    }

    #[test]
    fn single_uptick() {
        let t = traj(vec![0.5, 0.4, 0.41, 0.3]);
        let iv = growth_intervals(&t);
        assert_eq!(iv.len(), 1);
        assert_eq!((iv[0].start, iv[0].end), (1.0, 2.0));
        assert!((iv[0].gain - 0.01).abs() < 1e-15);
    }

    #[test]
    fn runs_merge_and_reach_the_end() {
        let t = traj(vec![0.1, 0.2, 0.3, 0.2, 0.25, 0.3]);
        let iv = growth_intervals(&t);
        assert_eq!(iv.len(), 2);
        assert_eq!((iv[0].start, iv[0].end), (0.0, 2.0));
        assert_eq!((iv[1].start, iv[1].end), (3.0, 5.0));
        assert!((iv[1].gain - 0.1).abs() < 1e-15);
        assert!(growth_intervals(&traj(vec![0.3, 0.2, 0.1])).is_empty());
    }

    #[test]
    fn equator_pair_tracks_modulus_of_g() {
        let k: Kernel = ExponentialKernel::new(5.0, 1.0).unwrap().into();
        let g = crate::adc::g_numeric(&k, 3.0, 1e-2).unwrap();
        let f = adc(5.0, 3.0, 1e-2);
        let r1 = DensityMatrix::from_bloch([1.0, 0.0, 0.0]).unwrap();
        let r2 = DensityMatrix::from_bloch([-1.0, 0.0, 0.0]).unwrap();
        let t = distance_trajectory(&f, &r1, &r2).unwrap();
        for (d, m) in t.d.iter().zip(g.moduli()) {
            assert!((d - m).abs() < 1e-12);
        }
        let (v, _) = measure_for_pair(&f, &r1, &r2).unwrap();
        let (w, _) = measure_for_pair(&f, &r2, &r1).unwrap();
        assert!(v > 0.0);
        assert!((v - w).abs() < 1e-14);
    }

    #[test]
    fn bloch_fast_path_agrees_with_general_path() {
        let f = adc(5.0, 3.0, 1e-2);
        let fam = BlochFamily::new(&f);
        let p = [0.2, -0.5, 0.3, -0.6, 0.1, -0.4];
        let (r1, r2) = pair_from_point(&p).unwrap();
        let (v, _) = measure_for_pair(&f, &r1, &r2).unwrap();
        assert!((fam.measure(dr_of(&p)) - v).abs() < 1e-12);
    }

    #[test]
    fn grid_is_deduplicated() {
        let g = coarse_grid(&PairSearchConfig::default());
        let keys: HashSet<_> = g.iter().map(dedup_key).collect();
        assert_eq!(keys.len(), g.len());
        assert!(g.len() < 156 * 155 / 2);
    }

    #[test]
    fn maximize_weak_and_strong_coupling() {
        let cfg = PairSearchConfig::default();
        assert!(!is_nonmarkovian(&adc(0.2, 5.0, 1e-2), &cfg).unwrap());
        let rep = maximize(&adc(5.0, 5.0, 1e-2), &cfg).unwrap();
        assert!(rep.n_value > 0.1);
        let sum: f64 = rep.intervals.iter().map(|i| i.gain).sum();
        assert!((sum - rep.n_value).abs() < 1e-10);
        let b1 = rep.optimal_pair.0.bloch().unwrap();
        let b2 = rep.optimal_pair.1.bloch().unwrap();
        assert!(b1[2].abs() < 1e-2 && b2[2].abs() < 1e-2);
    }

    #[test]
    fn maximize_rejects_non_qubit_families() {
        let times = vec![0.0, 0.1];
        let f = MapFamily::new(times, vec![Superoperator::identity(3); 2]).unwrap();
        assert!(maximize(&f, &PairSearchConfig::default()).is_err());
        let c = vec![(DensityMatrix::basis(3, 0), DensityMatrix::basis(3, 2))];
        let rep = maximize_over_candidates(&f, &c).unwrap();
        assert_eq!(rep.n_value, 0.0);
        assert_eq!(rep.evaluations, 1);
    }
}
