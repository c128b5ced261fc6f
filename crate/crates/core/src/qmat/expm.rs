use super::matrix::ComplexMatrix;

/// Terms are summed until the last one drops below this fraction of the
/// running sum; with the scaled norm at most ½ the neglected tail is bounded
/// by the same amount.
const TAYLOR_TOL: f64 = 1e-16;
const SCALED_NORM: f64 = 0.5;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.rows();
    let norm = a.norm_one();
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let b = a.scale_real(0.5f64.powi(squarings));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&b).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.norm_one() <= TAYLOR_TOL * sum.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}
