//! Exact integer matrix algebra: Smith normal form, rank, integer
//! nullspace lattices and linear Diophantine solves.
//!
//! All arithmetic is checked `i64`; any overflow surfaces as
//! [`Error::IntegerOverflow`] instead of wrapping.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

fn add(a: i64, b: i64) -> Result<i64> {
    a.checked_add(b).ok_or(Error::IntegerOverflow)
}

fn mul(a: i64, b: i64) -> Result<i64> {
    a.checked_mul(b).ok_or(Error::IntegerOverflow)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a as i64
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from equal-length rows. `cols` is needed only when
    /// `rows` is empty.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R], cols: usize) -> Result<Self> {
        let cols = rows.first().map_or(cols, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = 0i64;
                for l in 0..self.cols {
                    acc = add(acc, mul(self.get(i, l), rhs.get(l, j))?)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `v^T * self` for a vector of length `rows`.
    pub fn left_mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} against {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0i64; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = add(*o, mul(vi, self.get(i, j))?)?;
            }
        }
        Ok(out)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<i64> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut m: Vec<Vec<i128>> = (0..n)
            .map(|i| self.row(i).iter().map(|&x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if m[k][k] == 0 {
                match (k + 1..n).find(|&i| m[i][k] != 0) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return Ok(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = m[i][j]
                        .checked_mul(m[k][k])
                        .and_then(|a| m[i][k].checked_mul(m[k][j]).and_then(|b| a.checked_sub(b)))
                        .ok_or(Error::IntegerOverflow)?;
                    m[i][j] = num / prev;
                }
            }
            prev = m[k][k];
        }
        i64::try_from(sign * m[n - 1][n - 1]).map_err(|_| Error::IntegerOverflow)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: i64) -> Result<()> {
        if factor == 0 {
            return Ok(());
        }
        for j in 0..self.cols {
            let v = add(self.get(dst, j), mul(factor, self.get(src, j))?)?;
            self.set(dst, j, v);
        }
        Ok(())
    }

    /// col[dst] += factor * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, factor: i64) -> Result<()> {
        if factor == 0 {
            return Ok(());
        }
        for i in 0..self.rows {
            let v = add(self.get(i, dst), mul(factor, self.get(i, src))?)?;
            self.set(i, dst, v);
        }
        Ok(())
    }

    fn negate_row(&mut self, i: usize) -> Result<()> {
        for j in 0..self.cols {
            let v = self.get(i, j).checked_neg().ok_or(Error::IntegerOverflow)?;
            self.set(i, j, v);
        }
        Ok(())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            writeln!(f, "{:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// `S * A * T = D` with `S`, `T` unimodular and `D` diagonal, `d_1 | d_2 | ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfDecomposition {
    pub s: IntMatrix,
    pub d: IntMatrix,
    pub t: IntMatrix,
}

impl SnfDecomposition {
    pub fn invariant_factors(&self) -> Vec<i64> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d.get(i, i))
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().iter().filter(|&&x| x != 0).count()
    }
}

pub fn smith_normal_form(a: &IntMatrix) -> Result<SnfDecomposition> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let (r, c) = (a.rows(), a.cols());
    let mut d = a.clone();
    let mut s = IntMatrix::identity(r);
    let mut t = IntMatrix::identity(c);

    'diag: for p in 0..r.min(c) {
        loop {
            // smallest nonzero magnitude in the trailing block becomes the pivot
            let mut best: Option<(usize, usize, u64)> = None;
            for i in p..r {
                for j in p..c {
                    let v = d.get(i, j).unsigned_abs();
                    if v != 0 && best.is_none_or(|(_, _, b)| v < b) {
                        best = Some((i, j, v));
                    }
                }
            }
            let Some((pi, pj, _)) = best else {
                break 'diag;
            };
            d.swap_rows(p, pi);
            s.swap_rows(p, pi);
            d.swap_cols(p, pj);
            t.swap_cols(p, pj);

            let pivot = d.get(p, p);
            let mut clean = true;
            for i in p + 1..r {
                let q = d.get(i, p) / pivot;
                d.add_row_multiple(i, p, -q)?;
                s.add_row_multiple(i, p, -q)?;
                clean &= d.get(i, p) == 0;
            }
            for j in p + 1..c {
                let q = d.get(p, j) / pivot;
                d.add_col_multiple(j, p, -q)?;
                t.add_col_multiple(j, p, -q)?;
                clean &= d.get(p, j) == 0;
            }
            if !clean {
                continue;
            }
            // the pivot must divide the whole trailing block
            let offender = (p + 1..r).find(|&i| (p + 1..c).any(|j| d.get(i, j) % pivot != 0));
            match offender {
                Some(i) => {
                    d.add_row_multiple(p, i, 1)?;
                    s.add_row_multiple(p, i, 1)?;
                }
                None => break,
            }
        }
    }
    for i in 0..r.min(c) {
        if d.get(i, i) < 0 {
            d.negate_row(i)?;
            s.negate_row(i)?;
        }
    }
    Ok(SnfDecomposition { s, d, t })
}

pub fn rank(a: &IntMatrix) -> Result<usize> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0);
    }
    Ok(smith_normal_form(a)?.rank())
}

/// Row-style Hermite normal form of a full-row-rank set of vectors:
/// echelon, positive pivots, entries above each pivot reduced into `[0, pivot)`.
pub fn hermite_rows(vectors: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let cols = first.len();
    let mut m = IntMatrix::from_rows(vectors, cols)?;
    let rows = m.rows();
    let mut prow = 0;
    for col in 0..cols {
        if prow == rows {
            break;
        }
        // Euclid down the column until a single nonzero entry remains
        loop {
            let mut best: Option<(usize, u64)> = None;
            for i in prow..rows {
                let v = m.get(i, col).unsigned_abs();
                if v != 0 && best.is_none_or(|(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
            let Some((bi, _)) = best else { break };
            m.swap_rows(prow, bi);
            let pivot = m.get(prow, col);
            let mut done = true;
            for i in prow + 1..rows {
                let q = m.get(i, col) / pivot;
                m.add_row_multiple(i, prow, -q)?;
                done &= m.get(i, col) == 0;
            }
            if done {
                break;
            }
        }
        if m.get(prow, col) == 0 {
            continue;
        }
        if m.get(prow, col) < 0 {
            m.negate_row(prow)?;
        }
        let pivot = m.get(prow, col);
        for i in 0..prow {
            let q = m.get(i, col).div_euclid(pivot);
            m.add_row_multiple(i, prow, -q)?;
        }
        prow += 1;
    }
    Ok((0..prow).map(|i| m.row(i).to_vec()).collect())
}

/// Divides out the content and makes the first nonzero entry positive.
pub fn primitive(v: &[i64]) -> Vec<i64> {
    let g = v.iter().fold(0, |acc, &x| gcd(acc, x));
    if g == 0 {
        return v.to_vec();
    }
    let sign = v.iter().find(|&&x| x != 0).map_or(1, |x| x.signum());
    v.iter().map(|&x| sign * x / g).collect()
}

/// Lattice basis of `{alpha in Z^d : alpha^T A = 0}` for a `d x k` matrix `A`.
///
/// The basis is canonical (Hermite normal form of the lattice), so the
/// output does not depend on the path the Smith reduction took.
pub fn nullspace_basis(a: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    let d = a.rows();
    if d == 0 {
        return Ok(Vec::new());
    }
    if a.cols() == 0 || a.is_zero() {
        return Ok((0..d)
            .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
            .collect());
    }
    let snf = smith_normal_form(&a.transpose())?;
    let r = snf.rank();
    let raw: Vec<Vec<i64>> = (r..d).map(|j| snf.t.column(j)).collect();
    let basis = hermite_rows(&raw)?;
    Ok(basis.iter().map(|v| primitive(v)).collect())
}

/// One integer solution of `alpha^T A = b^T`, or `None` when none exists.
pub fn solve_diophantine(a: &IntMatrix, b: &[i64]) -> Result<Option<Vec<i64>>> {
    if b.len() != a.cols() {
        return Err(Error::ShapeMismatch(format!(
            "target of length {} for {} columns",
            b.len(),
            a.cols()
        )));
    }
    let d = a.rows();
    if b.iter().all(|&x| x == 0) {
        return Ok(Some(vec![0; d]));
    }
    if d == 0 || a.is_zero() {
        return Ok(None);
    }
    // A^T alpha = b;  S A^T T = D;  alpha = T y with D y = S b
    let snf = smith_normal_form(&a.transpose())?;
    let k = a.cols();
    let sb: Vec<i64> = (0..k)
        .map(|i| {
            (0..k).try_fold(0i64, |acc, j| add(acc, mul(snf.s.get(i, j), b[j])?))
        })
        .collect::<Result<_>>()?;
    let mut y = vec![0i64; d];
    for (i, &rhs) in sb.iter().enumerate() {
        let di = if i < d { snf.d.get(i, i) } else { 0 };
        if di == 0 {
            if rhs != 0 {
                return Ok(None);
            }
        } else {
            if rhs % di != 0 {
                return Ok(None);
            }
            y[i] = rhs / di;
        }
    }
    let alpha = (0..d)
        .map(|i| (0..d).try_fold(0i64, |acc, j| add(acc, mul(snf.t.get(i, j), y[j])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows, 0).unwrap()
    }

    fn check(a: &IntMatrix) -> SnfDecomposition {
        let snf = smith_normal_form(a).unwrap();
        let sat = snf.s.checked_mul(a).unwrap().checked_mul(&snf.t).unwrap();
        assert_eq!(sat, snf.d);
        assert_eq!(snf.s.determinant().unwrap().abs(), 1);
        assert_eq!(snf.t.determinant().unwrap().abs(), 1);
        let f = snf.invariant_factors();
        for i in 0..snf.d.rows() {
            for j in 0..snf.d.cols() {
                if i != j {
                    assert_eq!(snf.d.get(i, j), 0);
                }
            }
        }
        for w in f.windows(2) {
            assert!(w[0] >= 0 && w[1] >= 0);
            if w[0] == 0 {
                assert_eq!(w[1], 0);
            } else {
                assert_eq!(w[1] % w[0], 0);
            }
        }
        snf
    }

    #[test]
    fn identity_is_its_own_snf() {
        let snf = check(&IntMatrix::identity(3));
        assert_eq!(snf.d, IntMatrix::identity(3));
    }

    #[test]
    fn two_by_two_invariant_factors() {
        let snf = check(&m(&[&[2, 4], &[6, 8]]));
        assert_eq!(snf.invariant_factors(), vec![2, 4]);
    }

    #[test]
    fn zero_matrix() {
        let snf = check(&IntMatrix::zeros(2, 3));
        assert!(snf.d.is_zero());
        assert_eq!(rank(&IntMatrix::zeros(2, 3)).unwrap(), 0);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert_eq!(
            smith_normal_form(&IntMatrix::zeros(0, 3)),
            Err(Error::EmptyMatrix)
        );
    }

    #[test]
    fn divisibility_needs_the_fixup_step() {
        // diag(2, 3) has invariant factors (1, 6)
        let snf = check(&m(&[&[2, 0], &[0, 3]]));
        assert_eq!(snf.invariant_factors(), vec![1, 6]);
    }

    #[test]
    fn velocities_have_rank_one() {
        let v = m(&[&[1, -1], &[1, -1], &[1, -1]]);
        assert_eq!(rank(&v).unwrap(), 1);
        let basis = nullspace_basis(&v).unwrap();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert_eq!(v.left_mul_vec(b).unwrap(), vec![0, 0]);
        }
    }

    #[test]
    fn single_dimensionless_feature() {
        let basis = nullspace_basis(&m(&[&[0, 0, 0]])).unwrap();
        assert_eq!(basis, vec![vec![1]]);
    }

    #[test]
    fn diophantine_without_solution() {
        let a = m(&[&[2]]);
        assert_eq!(solve_diophantine(&a, &[1]).unwrap(), None);
        assert_eq!(solve_diophantine(&a, &[4]).unwrap(), Some(vec![2]));
        assert_eq!(solve_diophantine(&a, &[0]).unwrap(), Some(vec![0]));
    }

    #[test]
    fn overflow_is_reported() {
        let big = i64::MAX / 2 + 1;
        let a = m(&[&[big, big - 1], &[big - 1, big - 2]]);
        // large pivots force products that exceed i64
        let r = m(&[&[big, 3]]).checked_mul(&m(&[&[big], &[1]]));
        assert_eq!(r, Err(Error::IntegerOverflow));
        // SNF either succeeds exactly or reports overflow, never wraps
        match smith_normal_form(&a) {
            Ok(snf) => {
                if let Ok(sa) = snf.s.checked_mul(&a) {
                    if let Ok(sat) = sa.checked_mul(&snf.t) {
                        assert_eq!(sat, snf.d);
                    }
                }
            }
            Err(e) => assert_eq!(e, Error::IntegerOverflow),
        }
    }

    #[test]
    fn hermite_rows_are_canonical() {
        let a = vec![vec![1, -1, 0], vec![0, 1, -1]];
        let b = vec![vec![1, 0, -1], vec![2, -1, -1]];
        assert_eq!(hermite_rows(&a).unwrap(), hermite_rows(&b).unwrap());
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(m(&[&[2, 4], &[6, 8]]).determinant().unwrap(), -8);
        assert_eq!(m(&[&[0, 1], &[1, 0]]).determinant().unwrap(), -1);
        assert_eq!(
            m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]).determinant().unwrap(),
            -3
        );
    }
}
