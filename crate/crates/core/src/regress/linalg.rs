//! Dense real matrices and least squares by Householder QR with column
//! pivoting. Rank-deficient systems get the minimum-norm solution through a
//! complete orthogonal decomposition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// Column-major copy.
    fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Householder reflector `I - tau v v^T` stored with `v[0] = 1` implied.
struct Reflector {
    v: Vec<f64>,
    tau: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto `beta e_1`; returns it with `beta`.
    fn new(x: &[f64]) -> (Reflector, f64) {
        let alpha = x[0];
        let tail: f64 = x[1..].iter().map(|t| t * t).sum();
        if tail == 0.0 {
            let mut v = vec![0.0; x.len()];
            v[0] = 1.0;
            return (Reflector { v, tau: 0.0 }, alpha);
        }
        let norm = (alpha * alpha + tail).sqrt();
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let scale = 1.0 / (alpha - beta);
        let mut v = Vec::with_capacity(x.len());
        v.push(1.0);
        v.extend(x[1..].iter().map(|t| t * scale));
        (
            Reflector {
                v,
                tau: (beta - alpha) / beta,
            },
            beta,
        )
    }

    fn apply(&self, x: &mut [f64]) {
        if self.tau == 0.0 {
            return;
        }
        let s = self.tau * dot(&self.v, x);
        for (xi, vi) in x.iter_mut().zip(&self.v) {
            *xi -= s * vi;
        }
    }
}

/// Column-pivoted QR of a column-major matrix; `R` overwrites the upper
/// triangle, `perm[k]` is the original index of column `k`.
struct PivotedQr {
    cols: Vec<Vec<f64>>,
    reflectors: Vec<Reflector>,
    perm: Vec<usize>,
}

impl PivotedQr {
    fn factor(mut cols: Vec<Vec<f64>>, n: usize) -> PivotedQr {
        let p = cols.len();
        let steps = n.min(p);
        let mut perm: Vec<usize> = (0..p).collect();
        let mut norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
        let mut ref_norms = norms.clone();
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            let piv = (k..p)
                .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
                .expect("nonempty range");
            if piv != k {
                cols.swap(k, piv);
                perm.swap(k, piv);
                norms.swap(k, piv);
                ref_norms.swap(k, piv);
            }
            let (h, beta) = Reflector::new(&cols[k][k..]);
            cols[k][k] = beta;
            for x in cols[k][k + 1..].iter_mut() {
                *x = 0.0;
            }
            let (_, rest) = cols.split_at_mut(k + 1);
            rest.par_iter_mut().for_each(|c| h.apply(&mut c[k..]));
            // downdate the trailing norms, recomputing when cancellation bites
            for j in k + 1..p {
                if norms[j] == 0.0 {
                    continue;
                }
                let r = cols[j][k].abs() / norms[j];
                let t = (1.0 - r * r).max(0.0);
                let ratio = norms[j] / ref_norms[j];
                if t * ratio * ratio <= f64::EPSILON.sqrt() {
                    norms[j] = norm2(&cols[j][k + 1..]);
                    ref_norms[j] = norms[j];
                } else {
                    norms[j] *= t.sqrt();
                }
            }
            reflectors.push(h);
        }
        PivotedQr {
            cols,
            reflectors,
            perm,
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    fn apply_qt(&self, y: &mut [f64]) {
        for (k, h) in self.reflectors.iter().enumerate() {
            h.apply(&mut y[k..]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstsqSolution {
    pub weights: Vec<f64>,
    pub rank: usize,
}

/// Minimum-norm minimizer of `||X w - y||`.
///
/// `rcond` is relative to the largest pivot of `R`; `None` uses
/// `max(n, p) * eps`.
pub fn lstsq(x: &Matrix, y: &[f64], rcond: Option<f64>) -> Result<LstsqSolution> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {n} rows",
            y.len()
        )));
    }
    if p == 0 {
        return Ok(LstsqSolution {
            weights: Vec::new(),
            rank: 0,
        });
    }
    if n == 0 {
        return Ok(LstsqSolution {
            weights: vec![0.0; p],
            rank: 0,
        });
    }
    let cols = x.to_columns();
    let qr = PivotedQr::factor(cols, n);
    let steps = n.min(p);
    let tol = rcond.unwrap_or(n.max(p) as f64 * f64::EPSILON) * qr.r(0, 0).abs();
    let rank = (0..steps).take_while(|&k| qr.r(k, k).abs() > tol).count();

    let mut qty = y.to_vec();
    qr.apply_qt(&mut qty);
    let c = &qty[..rank];

    // z solves [R11 R12] z = c with minimum norm
    let z: Vec<f64> = if rank == p {
        let mut z = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|j| qr.r(i, j) * z[j]).sum();
            z[i] = (c[i] - s) / qr.r(i, i);
        }
        z
    } else if rank == 0 {
        vec![0.0; p]
    } else {
        // QR of M^T where M = [R11 R12] is rank x p
        let mt: Vec<Vec<f64>> = (0..rank)
            .map(|i| (0..p).map(|j| if j >= i { qr.r(i, j) } else { 0.0 }).collect())
            .collect();
        let mut u_cols = mt;
        let mut hs = Vec::with_capacity(rank);
        for k in 0..rank {
            let (h, beta) = Reflector::new(&u_cols[k][k..]);
            u_cols[k][k] = beta;
            for x in u_cols[k][k + 1..].iter_mut() {
                *x = 0.0;
            }
            let (_, rest) = u_cols.split_at_mut(k + 1);
            for col in rest.iter_mut() {
                h.apply(&mut col[k..]);
            }
            hs.push(h);
        }
        // M = U^T V_1^T; solve U^T t = c by forward substitution
        let mut t = vec![0.0; rank];
        for i in 0..rank {
            let s: f64 = (0..i).map(|j| u_cols[i][j] * t[j]).sum();
            t[i] = (c[i] - s) / u_cols[i][i];
        }
        let mut z = vec![0.0; p];
        z[..rank].copy_from_slice(&t);
        for (k, h) in hs.iter().enumerate().rev() {
            h.apply(&mut z[k..]);
        }
        z
    };
    let mut weights = vec![0.0; p];
    for (k, &orig) in qr.perm.iter().enumerate() {
        weights[orig] = z[k];
    }
    Ok(LstsqSolution { weights, rank })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_identity() {
        let x = Matrix::identity(3);
        let sol = lstsq(&x, &[1.0, -2.0, 3.5], None).unwrap();
        assert_eq!(sol.rank, 3);
        for (a, b) in sol.weights.iter().zip([1.0, -2.0, 3.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 1 + 2 t, exact
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![1.0, t as f64]).collect();
        let y: Vec<f64> = (0..10).map(|t| 1.0 + 2.0 * t as f64).collect();
        let sol = lstsq(&Matrix::from_rows(&rows).unwrap(), &y, None).unwrap();
        assert!((sol.weights[0] - 1.0).abs() < 1e-12);
        assert!((sol.weights[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_splits_weight_evenly() {
        // columns a, a: min-norm solution of w1 + w2 = 2 is (1, 1)
        let rows: Vec<Vec<f64>> = (1..6).map(|t| vec![t as f64, t as f64]).collect();
        let y: Vec<f64> = (1..6).map(|t| 2.0 * t as f64).collect();
        let sol = lstsq(&Matrix::from_rows(&rows).unwrap(), &y, None).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.weights[0] - 1.0).abs() < 1e-12);
        assert!((sol.weights[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_min_norm() {
        // one equation w1 + 2 w2 + 2 w3 = 9, min-norm w = (1, 2, 2)
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 2.0]]).unwrap();
        let sol = lstsq(&x, &[9.0], None).unwrap();
        assert_eq!(sol.rank, 1);
        for (a, b) in sol.weights.iter().zip([1.0, 2.0, 2.0]) {
            assert!((a - b).abs() < 1e-12, "{:?}", sol.weights);
        }
    }

    #[test]
    fn zero_columns_get_zero_weight() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let sol = lstsq(&x, &[1.0, 2.0], None).unwrap();
        assert_eq!(sol.rank, 1);
        assert_eq!(sol.weights[0], 0.0);
        assert!((sol.weights[1] - 1.0).abs() < 1e-14);
    }
}
