//! Dense LU factorisation with partial pivoting.
//!
//! Systems here are at most `num_states x num_states`, so a plain
//! row-major implementation is all that is needed.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    // L (unit diagonal, below) and U (on and above) packed row-major
    factors: Vec<f64>,
    pivots: Vec<usize>,
}

impl Lu {
    /// Factorises the row-major `n x n` matrix `a`.
    pub fn new(n: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Shape(alloc::format!(
                "matrix has {} entries, expected {}",
                a.len(),
                n * n
            )));
        }
        let mut pivots: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, max) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(max > 0.0) {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                pivots.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= factor * a[k * n + j];
                    }
                }
            }
        }
        Ok(Self {
            n,
            factors: a,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Shape(alloc::format!(
                "right-hand side has {} entries, expected {n}",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.pivots.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.factors[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.factors[i * n + j] * x[j];
            }
            x[i] = acc / self.factors[i * n + i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn solves_with_pivoting() {
        // zero in the leading position forces a row swap
        let lu = Lu::new(3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]).unwrap();
        let x = lu.solve(&[5.0, 3.0, 6.0]).unwrap();
        let expected = [1.4, 1.6, 1.8];
        for (a, b) in x.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn singular_is_reported() {
        assert_eq!(
            Lu::new(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn shape_checks() {
        assert!(Lu::new(2, vec![1.0; 3]).is_err());
        let lu = Lu::new(1, vec![2.0]).unwrap();
        assert!(lu.solve(&[1.0, 2.0]).is_err());
        assert_eq!(lu.solve(&[3.0]).unwrap(), vec![1.5]);
    }
}
