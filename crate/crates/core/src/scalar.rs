//! The scalar fields moment computations run over.

use nalgebra::ComplexField;
use num_complex::Complex64;

/// A double-precision real or complex scalar.
///
/// Everything in [`crate::moments`], [`crate::hankel`] and [`crate::ideals`]
/// is generic over this trait. The Fourier pipeline runs over `Complex64`,
/// the statistics pipeline over `f64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    fn to_complex(self) -> Complex64;

    /// Embeds a complex number; real scalars keep only the real part.
    fn from_complex(z: Complex64) -> Self;

    fn of(x: f64) -> Self {
        Self::from_real(x)
    }

    /// Falling factorial `i!/(i−k)!` as a scalar.
    fn falling_factorial(i: usize, k: usize) -> Self {
        Self::of(falling_factorial(i, k))
    }
}

impl Scalar for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn from_complex(z: Complex64) -> Self {
        z.re
    }
}

impl Scalar for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }

    fn from_complex(z: Complex64) -> Self {
        z
    }
}

/// `i!/(i−k)!` by iterated multiplication; zero when `k > i`.
pub fn falling_factorial(i: usize, k: usize) -> f64 {
    if k > i {
        return 0.0;
    }
    ((i - k + 1)..=i).fold(1.0, |acc, f| acc * f as f64)
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// Pascal's triangle up to row `n`, built additively so entries stay exact.
pub fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = table[i - 1][k - 1] + table[i - 1][k];
        }
        table.push(row);
    }
    table
}

/// Largest modulus in a slice, 0 for an empty slice.
pub fn max_modulus<T: Scalar>(xs: &[T]) -> f64 {
    xs.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}
