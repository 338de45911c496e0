//! Units-equivariant linear regression over monomial features.
//!
//! A [`RegressionModel`] is a linear map `h` on a list of monomials
//! composed with a decoder monomial carrying the label units. When every
//! feature monomial is dimensionless, the model is equivariant under any
//! rescaling of the base units.

pub mod lasso;
pub mod linalg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lasso::{fit_lasso, lambda_max, LassoFit, LassoOptions};
pub use linalg::{lstsq, LstsqSolution, Matrix};

use crate::error::{Error, Result};
use crate::pi::{apply_decoder, evaluate_monomial, FeatureSpec, Monomial};
use crate::units::{Quantity, UnitVector};

/// Rows of feature values with labels that all share `label_units`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub spec: FeatureSpec,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub label_units: UnitVector,
}

impl Dataset {
    pub fn new(
        spec: FeatureSpec,
        rows: Vec<Vec<f64>>,
        labels: Vec<f64>,
        label_units: UnitVector,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != spec.d()) {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                found: r.len(),
            });
        }
        if label_units.len() != spec.k() {
            return Err(Error::DimensionMismatch {
                expected: spec.k(),
                found: label_units.len(),
            });
        }
        Ok(Dataset {
            spec,
            rows,
            labels,
            label_units,
        })
    }

    /// Builds from labelled quantities; every label must carry the same units.
    pub fn from_quantities(spec: FeatureSpec, rows: Vec<Vec<f64>>, labels: &[Quantity]) -> Result<Self> {
        let units = labels
            .first()
            .map(|q| q.units.clone())
            .unwrap_or_else(|| spec.system.zero());
        if let Some(q) = labels.iter().find(|q| q.units != units) {
            return Err(Error::UnitMismatch(units, q.units.clone()));
        }
        let values = labels.iter().map(|q| q.value).collect();
        Dataset::new(spec, rows, values, units)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label(&self, t: usize) -> Quantity {
        Quantity::new(self.labels[t], self.label_units.clone())
    }

    /// First `n` rows and the rest.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let part = |r: std::ops::Range<usize>| Dataset {
            spec: self.spec.clone(),
            rows: self.rows[r.clone()].to_vec(),
            labels: self.labels[r].to_vec(),
            label_units: self.label_units.clone(),
        };
        (part(0..n), part(n..self.len()))
    }
}

/// Entry `(t, j)` is monomial `j` evaluated on row `t`.
pub fn build_design_matrix(data: &Dataset, monomials: &[Monomial]) -> Result<Matrix> {
    design_matrix_rows(&data.rows, monomials)
}

pub fn design_matrix_rows(rows: &[Vec<f64>], monomials: &[Monomial]) -> Result<Matrix> {
    let p = monomials.len();
    let cells: Vec<Vec<f64>> = rows
        .par_iter()
        .enumerate()
        .map(|(t, x)| {
            monomials
                .iter()
                .enumerate()
                .map(|(j, m)| {
                    evaluate_monomial(m, x).map_err(|e| Error::AtCell {
                        row: t,
                        col: j,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(rows.len() * p);
    for r in cells {
        data.extend(r);
    }
    Matrix::new(rows.len(), p, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub weights: Vec<f64>,
    pub rank: usize,
    /// Set when `ridge == 0` and the design has rank below its width; the
    /// weights are then the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Minimizes `||X w - y||^2 + ridge ||w||^2` by orthogonal factorization.
pub fn fit_ols(x: &Matrix, y: &[f64], ridge: f64) -> Result<OlsFit> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidInput("least squares needs N >= 1 and p >= 1".into()));
    }
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(Error::InvalidInput("ridge must be finite and nonnegative".into()));
    }
    let p = x.cols();
    if ridge == 0.0 {
        let sol = lstsq(x, y, None)?;
        return Ok(OlsFit {
            rank_deficient: sol.rank < p,
            weights: sol.weights,
            rank: sol.rank,
        });
    }
    // stack sqrt(ridge) I under X
    let n = x.rows();
    let mut data = Vec::with_capacity((n + p) * p);
    data.extend_from_slice(x.data());
    let s = ridge.sqrt();
    for j in 0..p {
        data.extend((0..p).map(|i| if i == j { s } else { 0.0 }));
    }
    let aug = Matrix::new(n + p, p, data)?;
    let mut yy = y.to_vec();
    yy.resize(n + p, 0.0);
    let sol = lstsq(&aug, &yy, None)?;
    Ok(OlsFit {
        weights: sol.weights,
        rank: sol.rank,
        rank_deficient: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub monomials: Vec<Monomial>,
    pub weights: Vec<f64>,
    pub decoder: Monomial,
    pub intercept: f64,
    pub label_units: UnitVector,
}

impl RegressionModel {
    pub fn new(
        spec: &FeatureSpec,
        monomials: Vec<Monomial>,
        weights: Vec<f64>,
        decoder: Monomial,
    ) -> Result<Self> {
        if monomials.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} monomials but {} weights",
                monomials.len(),
                weights.len()
            )));
        }
        let label_units = decoder.units(spec)?;
        Ok(RegressionModel {
            monomials,
            weights,
            decoder,
            intercept: 0.0,
            label_units,
        })
    }

    /// Dimensionless prediction `eta = intercept + sum_j w_j phi_j(x)`.
    pub fn eta(&self, x: &[f64]) -> Result<f64> {
        let mut acc = self.intercept;
        for (m, w) in self.monomials.iter().zip(&self.weights) {
            if *w != 0.0 {
                acc += w * evaluate_monomial(m, x)?;
            }
        }
        Ok(acc)
    }

    pub fn all_features_dimensionless(&self, spec: &FeatureSpec) -> Result<bool> {
        for m in &self.monomials {
            if !m.is_dimensionless(spec)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Indices of the largest weights by magnitude, at most `n`.
    pub fn top_weights(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| self.weights[b].abs().total_cmp(&self.weights[a].abs()));
        idx.truncate(n);
        idx
    }
}

pub fn predict(model: &RegressionModel, spec: &FeatureSpec, x: &[f64]) -> Result<Quantity> {
    let eta = model.eta(x)?;
    apply_decoder(&model.decoder, spec, x, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    #[default]
    Mean,
    Median,
}

pub fn ensemble_predict(
    models: &[RegressionModel],
    spec: &FeatureSpec,
    x: &[f64],
    combiner: Combiner,
) -> Result<Quantity> {
    let first = models.first().ok_or(Error::EmptyEnsemble)?;
    let units = first.label_units.clone();
    let mut values = Vec::with_capacity(models.len());
    for m in models {
        let q = predict(m, spec, x)?;
        if q.units != units {
            return Err(Error::UnitMismatch(units, q.units));
        }
        values.push(q.value);
    }
    let value = match combiner {
        Combiner::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Combiner::Median => {
            values.sort_by(f64::total_cmp);
            let n = values.len();
            if n % 2 == 1 {
                values[n / 2]
            } else {
                0.5 * (values[n / 2 - 1] + values[n / 2])
            }
        }
    };
    Ok(Quantity::new(value, units))
}

/// `((pred - label) / scale)^2`, all three in the same units.
pub fn dimensionless_loss(pred: &Quantity, label: &Quantity, scale: &Quantity) -> Result<f64> {
    if pred.units != label.units {
        return Err(Error::UnitMismatch(pred.units.clone(), label.units.clone()));
    }
    if scale.units != label.units {
        return Err(Error::UnitMismatch(scale.units.clone(), label.units.clone()));
    }
    if scale.value == 0.0 {
        return Err(Error::ZeroScale);
    }
    let r = (pred.value - label.value) / scale.value;
    Ok(r * r)
}

/// `||pred - truth|| / (||pred|| + ||truth||)`.
pub fn state_relative_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let diff: f64 = pred
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let denom = linalg::norm2(pred) + linalg::norm2(truth);
    if denom == 0.0 {
        return Err(Error::BothZero);
    }
    Ok(diff / denom)
}

pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / pred.len().max(1) as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum FitMethod {
    Ols { ridge: f64 },
    Lasso(LassoOptions),
}

/// What the fit minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Squared error of `eta` against `label / decoder(x)`.
    #[default]
    Dimensionless,
    /// Squared error in label units, `decoder(x) * eta` against `label`.
    Dimensional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStatus {
    pub rank: Option<usize>,
    pub rank_deficient: bool,
    pub converged: bool,
    pub sweeps: Option<usize>,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: RegressionModel,
    pub status: FitStatus,
}

/// Fits the weights of `monomials` so that `decoder * h` predicts the labels.
pub fn fit_model(
    data: &Dataset,
    monomials: &[Monomial],
    decoder: &Monomial,
    method: FitMethod,
    loss: Loss,
) -> Result<FittedModel> {
    match loss {
        Loss::Dimensionless => fit_model_scaled(data, monomials, decoder, decoder, method),
        Loss::Dimensional => {
            let ones = Monomial::constant(data.spec.d());
            fit_weighted(data, monomials, decoder, &ones, method)
        }
    }
}

/// Like [`fit_model`], with residuals divided by `scale(x)`, a monomial with
/// the label's units.
pub fn fit_model_scaled(
    data: &Dataset,
    monomials: &[Monomial],
    decoder: &Monomial,
    scale: &Monomial,
    method: FitMethod,
) -> Result<FittedModel> {
    let scale_units = scale.units(&data.spec)?;
    if scale_units != data.label_units {
        return Err(Error::UnitMismatch(scale_units, data.label_units.clone()));
    }
    fit_weighted(data, monomials, decoder, scale, method)
}

/// Design matrix and targets for residuals `(decoder(x) h(x) - y) / scale(x)`:
/// columns are multiplied by `decoder / scale` and labels divided by `scale`.
pub fn weighted_design(
    data: &Dataset,
    monomials: &[Monomial],
    decoder: &Monomial,
    scale: &Monomial,
) -> Result<(Matrix, Vec<f64>)> {
    let dec_units = decoder.units(&data.spec)?;
    if dec_units != data.label_units {
        return Err(Error::UnitMismatch(dec_units, data.label_units.clone()));
    }
    let x = build_design_matrix(data, monomials)?;
    let mut factors = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for (r, label) in data.rows.iter().zip(&data.labels) {
        let d = evaluate_monomial(decoder, r)?;
        let s = evaluate_monomial(scale, r)?;
        if d == 0.0 || s == 0.0 {
            return Err(Error::ZeroScale);
        }
        factors.push(if decoder == scale { 1.0 } else { d / s });
        y.push(label / s);
    }
    if factors.iter().all(|&f| f == 1.0) {
        return Ok((x, y));
    }
    let p = x.cols();
    let mut scaled = Vec::with_capacity(x.data().len());
    for (t, f) in factors.iter().enumerate() {
        scaled.extend(x.row(t).iter().map(|v| v * f));
    }
    Ok((Matrix::new(data.len(), p, scaled)?, y))
}

fn fit_weighted(
    data: &Dataset,
    monomials: &[Monomial],
    decoder: &Monomial,
    scale: &Monomial,
    method: FitMethod,
) -> Result<FittedModel> {
    let (x, y) = weighted_design(data, monomials, decoder, scale)?;
    let (weights, status) = match method {
        FitMethod::Ols { ridge } => {
            let fit = fit_ols(&x, &y, ridge)?;
            (
                fit.weights,
                FitStatus {
                    rank: Some(fit.rank),
                    rank_deficient: fit.rank_deficient,
                    converged: true,
                    sweeps: None,
                    objective: None,
                },
            )
        }
        FitMethod::Lasso(opts) => {
            let fit = fit_lasso(&x, &y, &opts)?;
            (
                fit.weights,
                FitStatus {
                    rank: None,
                    rank_deficient: false,
                    converged: fit.converged,
                    sweeps: Some(fit.sweeps),
                    objective: Some(fit.objective),
                },
            )
        }
    };
    Ok(FittedModel {
        model: RegressionModel::new(&data.spec, monomials.to_vec(), weights, decoder.clone())?,
        status,
    })
}
