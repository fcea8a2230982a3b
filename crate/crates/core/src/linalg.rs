//! Dense Gaussian elimination over a [`Scalar`] field.
//!
//! Exact scalars pivot on the first nonzero entry and never drop anything.
//! Floating scalars use partial pivoting and treat a pivot as zero when it is
//! below `PIVOT_RTOL` times the largest pivot seen so far.

use crate::scalar::Scalar;

/// Relative pivot threshold for inexact scalars.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    /// Reduces in place to reduced row echelon form and returns the pivot
    /// columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut largest = 0.0_f64;
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let candidate = if S::EXACT {
                (r..self.rows).find(|&i| !self[(i, c)].is_zero())
            } else {
                (r..self.rows)
                    .max_by(|&i, &j| {
                        self[(i, c)]
                            .to_f64()
                            .abs()
                            .total_cmp(&self[(j, c)].to_f64().abs())
                    })
                    .filter(|&i| {
                        let v = self[(i, c)].to_f64().abs();
                        v > 0.0 && v > PIVOT_RTOL * largest
                    })
            };
            let Some(p) = candidate else {
                if !S::EXACT {
                    for i in r..self.rows {
                        self[(i, c)] = S::zero();
                    }
                }
                continue;
            };
            largest = largest.max(self[(p, c)].to_f64().abs());
            self.swap_rows(r, p);
            let inv = S::one() / self[(r, c)].clone();
            for j in c..self.cols {
                self[(r, j)] = self[(r, j)].clone() * inv.clone();
            }
            for i in 0..self.rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let factor = self[(i, c)].clone();
                for j in c..self.cols {
                    let v = self[(i, j)].clone() - factor.clone() * self[(r, j)].clone();
                    self[(i, j)] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right nullspace, one vector per free column, in the
    /// canonical form read off the reduced row echelon form.
    pub fn nullspace(&self) -> Vec<Vec<S>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![S::zero(); self.cols];
                v[fc] = S::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m[(r, fc)].clone();
                }
                v
            })
            .collect()
    }

    /// Solves `self x = rhs`; returns a particular solution together with a
    /// nullspace basis, or `None` when the system is inconsistent.
    pub fn solve_affine(&self, rhs: &[S]) -> Option<(Vec<S>, Vec<Vec<S>>)> {
        assert_eq!(rhs.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = rhs[i].clone();
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(r, self.cols)].clone();
        }
        Some((x, self.nullspace()))
    }

    /// Inverse of a square matrix, `None` if singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = S::one();
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Rational};

    #[test]
    fn nullspace_of_rank_one() {
        let m = Matrix::from_rows(vec![vec![q(1, 1), q(2, 1), q(3, 1)], vec![q(2, 1), q(4, 1), q(6, 1)]]);
        assert_eq!(m.rank(), 1);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(m.mul_vec(v).iter().all(|x| *x == q(0, 1)));
        }
    }

    #[test]
    fn affine_solve_and_inconsistency() {
        let m = Matrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)]]);
        let (x, ns) = m.solve_affine(&[q(3, 1), q(1, 1)]).unwrap();
        assert_eq!(x, vec![q(2, 1), q(1, 1)]);
        assert!(ns.is_empty());
        let sing = Matrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(2, 1), q(2, 1)]]);
        assert!(sing.solve_affine(&[q(1, 1), q(3, 1)]).is_none());
    }

    #[test]
    fn inverse_round_trip() {
        let m: Matrix<Rational> = Matrix::from_rows(vec![vec![q(2, 1), q(1, 1)], vec![q(7, 3), q(-1, 2)]]);
        let inv = m.inverse().unwrap();
        let mut prod = Matrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                prod[(i, j)] = (0..2).fold(q(0, 1), |acc, k| acc + m[(i, k)].clone() * inv[(k, j)].clone());
            }
        }
        assert_eq!(prod, Matrix::identity(2));
    }

    #[test]
    fn float_rank_uses_relative_threshold() {
        let m = Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15]]);
        assert_eq!(m.rank(), 1);
        let m = Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-6]]);
        assert_eq!(m.rank(), 2);
    }
}
