//! LASSO by cyclic coordinate descent on standardized columns.
//!
//! Objective on the standardized problem:
//! `(1/2N) ||y - Xs w||^2 + lambda ||w||_1`.
//! Constant columns are not standardized and not penalized; the first one
//! carries the intercept and any others get weight zero.

use serde::{Deserialize, Serialize};

use super::linalg::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    pub lambda: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    /// Scale penalized columns to unit variance before fitting.
    pub standardize: bool,
    /// Warm-started stages on a geometric path from `lambda_max` down to
    /// `lambda`; 1 fits `lambda` directly.
    pub path_steps: usize,
}

impl LassoOptions {
    pub fn new(lambda: f64) -> Self {
        LassoOptions {
            lambda,
            max_sweeps: 10_000,
            tol: 1e-10,
            standardize: true,
            path_steps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    /// Weights in the original column scale.
    pub weights: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Standardized objective after the final sweep.
    pub objective: f64,
    /// Standardized objective at the target `lambda` after every sweep of
    /// the final stage, starting from its warm start.
    pub history: Vec<f64>,
}

struct Standardized {
    cols: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
    /// Index of the column that absorbs the intercept, if any.
    intercept_col: Option<usize>,
    y: Vec<f64>,
    y_mean: f64,
    penalized: Vec<bool>,
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

fn standardize(x: &Matrix, y: &[f64], scale: bool) -> Standardized {
    let n = x.rows();
    let nf = n as f64;
    let raw: Vec<Vec<f64>> = (0..x.cols()).map(|j| x.column(j)).collect();
    let penalized: Vec<bool> = raw.iter().map(|c| !is_constant(c)).collect();
    let intercept_col = raw
        .iter()
        .position(|c| is_constant(c) && c[0] != 0.0);
    let center = intercept_col.is_some();
    let y_mean = if center { y.iter().sum::<f64>() / nf } else { 0.0 };
    let mut means = vec![0.0; raw.len()];
    let mut scales = vec![1.0; raw.len()];
    let mut cols = Vec::with_capacity(raw.len());
    for (j, c) in raw.into_iter().enumerate() {
        if !penalized[j] {
            cols.push(vec![0.0; n]);
            continue;
        }
        let mean = if center { c.iter().sum::<f64>() / nf } else { 0.0 };
        let var = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let sd = if scale { var.sqrt() } else { 1.0 };
        means[j] = mean;
        scales[j] = sd;
        cols.push(c.iter().map(|v| (v - mean) / sd).collect());
    }
    Standardized {
        cols,
        means,
        scales,
        intercept_col,
        y: y.iter().map(|v| v - y_mean).collect(),
        y_mean,
        penalized,
    }
}

/// Geometric sequence from `lambda_max` down to the target, ending exactly
/// at the target.
fn lambda_path(st: &Standardized, opts: &LassoOptions) -> Vec<f64> {
    let top = lambda_max_of(st);
    if opts.path_steps <= 1 || opts.lambda <= 0.0 || opts.lambda >= top {
        return vec![opts.lambda];
    }
    let ratio = opts.lambda / top;
    let last = (opts.path_steps - 1) as f64;
    let mut path: Vec<f64> = (0..opts.path_steps - 1)
        .map(|k| top * ratio.powf(k as f64 / last))
        .collect();
    path.push(opts.lambda);
    path
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn objective(resid: &[f64], w: &[f64], penalized: &[bool], lambda: f64) -> f64 {
    let n = resid.len() as f64;
    let loss = resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * n);
    let l1: f64 = w
        .iter()
        .zip(penalized)
        .filter(|(_, &p)| p)
        .map(|(v, _)| v.abs())
        .sum();
    loss + lambda * l1
}

/// Smallest `lambda` at which every penalized weight is zero.
pub fn lambda_max(x: &Matrix, y: &[f64], standardized: bool) -> f64 {
    lambda_max_of(&standardize(x, y, standardized))
}

fn lambda_max_of(st: &Standardized) -> f64 {
    let n = st.y.len() as f64;
    st.cols
        .iter()
        .zip(&st.penalized)
        .filter(|(_, &p)| p)
        .map(|(c, _)| c.iter().zip(&st.y).map(|(a, b)| a * b).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

pub fn fit_lasso(x: &Matrix, y: &[f64], opts: &LassoOptions) -> Result<LassoFit> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} rows", y.len())));
    }
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("lasso needs at least one row and column".into()));
    }
    if opts.lambda.is_nan() || opts.lambda < 0.0 {
        return Err(Error::InvalidInput("lambda must be nonnegative".into()));
    }
    let st = standardize(x, y, opts.standardize);
    let nf = n as f64;
    let sq_norms: Vec<f64> = st.cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let mut w = vec![0.0; p];
    let mut resid = st.y.clone();
    let mut sweeps = 0;
    let mut converged = false;
    let mut history = Vec::new();
    let stages = lambda_path(&st, opts);
    for (s, &lam) in stages.iter().enumerate() {
        let last = s + 1 == stages.len();
        if last {
            history.push(objective(&resid, &w, &st.penalized, lam));
        }
        converged = false;
        let mut full = true;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut max_delta: f64 = 0.0;
            for j in 0..p {
                if !st.penalized[j] || (!full && w[j] == 0.0) {
                    continue;
                }
                let col = &st.cols[j];
                let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + sq_norms[j] * w[j];
                let new = soft_threshold(rho, lam) / sq_norms[j];
                let delta = new - w[j];
                if delta != 0.0 {
                    for (r, a) in resid.iter_mut().zip(col) {
                        *r -= delta * a;
                    }
                    w[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if last {
                history.push(objective(&resid, &w, &st.penalized, lam));
            }
            if max_delta < opts.tol {
                // a quiet active-set pass still needs one full pass to confirm
                if full {
                    converged = true;
                    break;
                }
                full = true;
            } else {
                full = false;
            }
        }
    }
    let objective = *history.last().expect("history starts nonempty");

    // back to the original column scale
    let mut weights = vec![0.0; p];
    let mut intercept = st.y_mean;
    for j in 0..p {
        if st.penalized[j] {
            weights[j] = w[j] / st.scales[j];
            intercept -= weights[j] * st.means[j];
        }
    }
    if let Some(c) = st.intercept_col {
        weights[c] = intercept / x.get(0, c);
    }
    Ok(LassoFit {
        weights,
        sweeps,
        converged,
        objective,
        history,
    })
}
