use std::fmt;
use std::ops::Mul;

use num_traits::One;

use super::{BiLaurent, Monomial, Rational};

/// Dense matrix with [`BiLaurent`] entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixBL {
    rows: usize,
    cols: usize,
    entries: Vec<BiLaurent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}x{1} times {2}x{3}")]
    Shape(usize, usize, usize, usize),
    #[error("matrix is not square")]
    NotSquare,
    #[error("determinant {0} is not a unit of the Laurent ring")]
    NotInvertible(String),
}

impl MatrixBL {
    pub fn from_rows(rows: Vec<Vec<BiLaurent>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(nrows > 0 && ncols > 0, "matrix must be non-empty");
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        MatrixBL {
            rows: nrows,
            cols: ncols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixBL {
            rows,
            cols,
            entries: vec![BiLaurent::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BiLaurent::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BiLaurent {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BiLaurent) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<BiLaurent> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn try_mul(&self, rhs: &MatrixBL) -> Result<MatrixBL, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::Shape(self.rows, self.cols, rhs.rows, rhs.cols));
        }
        let mut out = MatrixBL::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = BiLaurent::zero();
                for k in 0..self.cols {
                    acc += &(self.get(i, k) * rhs.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[BiLaurent]) -> Vec<BiLaurent> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = BiLaurent::zero();
                for (k, x) in v.iter().enumerate() {
                    if !x.is_zero() && !self.get(i, k).is_zero() {
                        acc += &(self.get(i, k) * x);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn scale_entries(&self, c: &Rational) -> MatrixBL {
        MatrixBL {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> MatrixBL {
        let rows = (0..self.rows)
            .filter(|&r| r != skip_r)
            .map(|r| {
                (0..self.cols)
                    .filter(|&c| c != skip_c)
                    .map(|c| self.get(r, c).clone())
                    .collect()
            })
            .collect();
        MatrixBL::from_rows(rows)
    }

    /// Laplace expansion; the matrices in play are at most 4x4.
    pub fn det(&self) -> Result<BiLaurent, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare);
        }
        Ok(self.det_unchecked())
    }

    fn det_unchecked(&self) -> BiLaurent {
        match self.rows {
            1 => self.get(0, 0).clone(),
            2 => &(self.get(0, 0) * self.get(1, 1)) - &(self.get(0, 1) * self.get(1, 0)),
            n => {
                let mut acc = BiLaurent::zero();
                for c in 0..n {
                    let e = self.get(0, c);
                    if e.is_zero() {
                        continue;
                    }
                    let term = e * &self.minor(0, c).det_unchecked();
                    if c % 2 == 0 {
                        acc += &term;
                    } else {
                        acc -= &term;
                    }
                }
                acc
            }
        }
    }

    /// Inverse of a matrix whose determinant is a unit `c * z^k`; the result
    /// is the adjugate divided by the determinant.
    pub fn inverse(&self) -> Result<MatrixBL, MatrixError> {
        let det = self.det()?;
        let (c, k) = det
            .as_unit()
            .ok_or_else(|| MatrixError::NotInvertible(det.to_string()))?;
        let inv_det = BiLaurent::monomial(Rational::one() / c, Monomial::new(-k, 0));
        let n = self.rows;
        if n == 1 {
            return Ok(MatrixBL::from_rows(vec![vec![inv_det]]));
        }
        let mut out = MatrixBL::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let cof = self.minor(c, r).det_unchecked();
                let cof = if (r + c) % 2 == 0 { cof } else { -cof };
                out.set(r, c, &cof * &inv_det);
            }
        }
        Ok(out)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    let e = self.get(r, c);
                    if r == c {
                        *e == BiLaurent::one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    /// Smallest and largest z-exponent over all entries of column `c`.
    pub fn column_zexp_range(&self, c: usize) -> Option<(i64, i64)> {
        (0..self.rows)
            .filter_map(|r| self.get(r, c).zexp_range())
            .reduce(|(a, b), (x, y)| (a.min(x), b.max(y)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(BiLaurent::is_zero)
    }
}

impl Mul for &MatrixBL {
    type Output = MatrixBL;

    fn mul(self, rhs: &MatrixBL) -> MatrixBL {
        self.try_mul(rhs).expect("non-conformable matrices")
    }
}

impl fmt::Display for MatrixBL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_polynomial;
    use super::*;

    fn m(rows: &[&[&str]]) -> MatrixBL {
        MatrixBL::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|s| parse_polynomial(s).unwrap()).collect())
                .collect(),
        )
    }

    #[test]
    fn unimodular_inverse() {
        let t = m(&[&["z^2", "z*u"], &["0", "z^-2"]]);
        assert_eq!(t.det().unwrap(), BiLaurent::one());
        let inv = t.inverse().unwrap();
        assert_eq!(inv, m(&[&["z^-2", "-z*u"], &["0", "z^2"]]));
        assert!((&t * &inv).is_identity());
        assert!((&inv * &t).is_identity());
    }

    #[test]
    fn four_by_four_inverse() {
        let t = m(&[
            &["z^2", "-u*z", "u*z", "-u^2"],
            &["0", "1", "0", "u*z^-1"],
            &["0", "0", "1", "-u*z^-1"],
            &["0", "0", "0", "z^-2"],
        ]);
        assert_eq!(t.det().unwrap(), BiLaurent::one());
        assert!((&t * &t.inverse().unwrap()).is_identity());
    }

    #[test]
    fn singular_or_ragged() {
        let s = m(&[&["1", "u"], &["1", "u"]]);
        assert!(matches!(s.inverse(), Err(MatrixError::NotInvertible(_))));
        let a = m(&[&["1", "u"]]);
        assert!(a.try_mul(&a).is_err());
        assert_eq!(a.det(), Err(MatrixError::NotSquare));
    }
}
