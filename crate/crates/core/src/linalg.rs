//! Small dense matrices over the numeric tower.
//!
//! Dimensions here never exceed ten, so plain Gauss-Jordan with
//! value-magnitude pivoting is all that is needed. Pivot choices branch on
//! primal values only, which keeps the derivative propagation through an
//! inversion exact.

use nalgebra::DMatrix;

use crate::scalar::{EvalError, EvalResult, Scalar};

/// Row-major matrix with entries anywhere in the numeric tower.
#[derive(Debug, Clone, PartialEq)]
pub struct GMat<S> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> GMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GMat {
            rows,
            cols,
            data: vec![S::from_f64(0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = S::from_f64(1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        GMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_f64(m: &DMatrix<f64>) -> Self {
        GMat {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m
                .row_iter()
                .flat_map(|r| r.iter().map(|&v| S::from_f64(v)).collect::<Vec<_>>())
                .collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut S {
        &mut self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        (0..self.cols).map(|j| self.at(i, j).clone()).collect()
    }

    pub fn matmul(&self, other: &GMat<S>) -> GMat<S> {
        assert_eq!(self.cols, other.rows);
        let mut out = GMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = S::from_f64(0.0);
                for k in 0..self.cols {
                    acc = acc + self.at(i, k).clone() * other.at(k, j).clone();
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::from_f64(0.0);
                for k in 0..self.cols {
                    acc = acc + self.at(i, k).clone() * v[k].clone();
                }
                acc
            })
            .collect()
    }

    /// Gauss-Jordan inverse with partial pivoting on primal magnitudes.
    pub fn inverse(&self) -> EvalResult<GMat<S>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv: GMat<S> = GMat::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a.at(i, col)
                        .value()
                        .abs()
                        .total_cmp(&a.at(j, col).value().abs())
                })
                .unwrap();
            if a.at(pivot, col).value().abs() == 0.0 {
                return Err(EvalError::Domain {
                    func: "matrix inverse",
                    arg: 0.0,
                });
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a.at(col, col).clone();
            for j in 0..n {
                *a.at_mut(col, j) = a.at(col, j).clone() / d.clone();
                *inv.at_mut(col, j) = inv.at(col, j).clone() / d.clone();
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.at(i, col).clone();
                if f.value() == 0.0 && f == S::from_f64(0.0) {
                    continue;
                }
                for j in 0..n {
                    *a.at_mut(i, j) = a.at(i, j).clone() - f.clone() * a.at(col, j).clone();
                    *inv.at_mut(i, j) = inv.at(i, j).clone() - f.clone() * inv.at(col, j).clone();
                }
            }
        }
        Ok(inv)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).value())
    }
}

/// Solve the square system `a x = b` by Gaussian elimination with partial
/// pivoting on primal magnitudes.
pub fn solve_square<S: Scalar>(a: &GMat<S>, b: &[S]) -> EvalResult<Vec<S>> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(a.rows, b.len());
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m.at(i, col)
                    .value()
                    .abs()
                    .total_cmp(&m.at(j, col).value().abs())
            })
            .unwrap();
        if m.at(pivot, col).value().abs() == 0.0 {
            return Err(EvalError::Domain {
                func: "linear solve",
                arg: 0.0,
            });
        }
        if pivot != col {
            for j in 0..n {
                m.data.swap(pivot * n + j, col * n + j);
            }
            rhs.swap(pivot, col);
        }
        for i in (col + 1)..n {
            let f = m.at(i, col).clone() / m.at(col, col).clone();
            if f.value() == 0.0 && f == S::from_f64(0.0) {
                continue;
            }
            for j in col..n {
                *m.at_mut(i, j) = m.at(i, j).clone() - f.clone() * m.at(col, j).clone();
            }
            rhs[i] = rhs[i].clone() - f.clone() * rhs[col].clone();
        }
    }
    let mut x = vec![S::from_f64(0.0); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i].clone();
        for j in (i + 1)..n {
            acc = acc - m.at(i, j).clone() * x[j].clone();
        }
        x[i] = acc / m.at(i, i).clone();
    }
    Ok(x)
}

/// Euclidean norm of an f64 slice.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max-abs difference of two slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{seed, Dual};

    #[test]
    fn inverse_of_known_matrix() {
        let m = GMat::from_rows(vec![vec![2.0, 1.0], vec![1.0, 1.0]]);
        let inv = m.inverse().unwrap();
        assert_eq!(*inv.at(0, 0), 1.0);
        assert_eq!(*inv.at(0, 1), -1.0);
        assert_eq!(*inv.at(1, 0), -1.0);
        assert_eq!(*inv.at(1, 1), 2.0);
    }

    #[test]
    fn inverse_propagates_derivatives() {
        // M(x) = [[x, 0], [0, 1]] has inverse [[1/x, 0], [0, 1]];
        // d(1/x)/dx = -1/x² = -0.25 at x = 2.
        let x = seed(&[2.0_f64]);
        let mut m = GMat::<Dual<f64>>::identity(2);
        *m.at_mut(0, 0) = x[0].clone();
        let inv = m.inverse().unwrap();
        assert!((inv.at(0, 0).val - 0.5).abs() < 1e-15);
        assert!((inv.at(0, 0).grad_at(0) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn solve_matches_inverse() {
        let m = GMat::from_rows(vec![
            vec![3.0, 1.0, 0.0],
            vec![1.0, -2.0, 1.0],
            vec![0.0, 4.0, 2.0],
        ]);
        let b = vec![1.0, 0.0, -2.0];
        let x = solve_square(&m, &b).unwrap();
        let back = m.matvec(&x);
        for (bi, yi) in b.iter().zip(&back) {
            assert!((bi - yi).abs() < 1e-12);
        }
    }
}
