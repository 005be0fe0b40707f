use rand::Rng as _;

use super::{DenseMatrix, Scalar};
use crate::rng::{seeded, Rng};

/// Glorot-uniform matrix on `[-√(6/(rows+cols)), √(6/(rows+cols))]`.
pub fn xavier_init<T: Scalar>(rows: usize, cols: usize, seed: u64) -> DenseMatrix<T> {
    xavier_init_with(rows, cols, &mut seeded(seed, 0))
}

/// Like [`xavier_init`], drawing from a caller-owned generator.
pub fn xavier_init_with<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| T::of(rng.random_range(-bound..=bound)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a: DenseMatrix<f64> = xavier_init(7, 5, 3);
        assert_eq!(a, xavier_init(7, 5, 3));
        assert_ne!(a, xavier_init(7, 5, 4));
    }

    #[test]
    fn entries_within_bound() {
        let bound = (6.0f64 / 200.0).sqrt();
        let a: DenseMatrix<f64> = xavier_init(100, 100, 1);
        assert!(a.as_slice().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn sample_mean_near_zero() {
        // uniform on [-b, b] has variance b²/3; 3 standard errors of the mean
        let bound = (6.0f64 / 200.0).sqrt();
        let a: DenseMatrix<f64> = xavier_init(100, 100, 1);
        let mean = a.as_slice().iter().sum::<f64>() / 10_000.0;
        assert!(mean.abs() < 3.0 * bound / (3.0f64 * 10_000.0).sqrt());
    }
}
