//! Scripted end-to-end experiments: the springy pendulum symbolic
//! regression, black-body radiation and the Rietkerk emulator.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pi::{
    decoder_solutions, dimensionless_basis, enumerate_monomials, evaluate_monomial, EnumerateOptions,
    FeatureSpec, Monomial,
};
use crate::regress::lasso::{lambda_max, LassoOptions};
use crate::regress::linalg::Matrix;
use crate::regress::{
    build_design_matrix, fit_model, fit_ols, mse, pearson, predict, weighted_design, Dataset, FitMethod, FitStatus, Loss,
    RegressionModel,
};
use crate::sims::pendulum::{
    hamiltonian_terms, pendulum_spec, sample_pendulum_dataset, spring_energy_scale, SamplerConfig,
};
use crate::sims::planck::{intensity_units, planck_spec, sample_blackbody};
use crate::sims::rietkerk::{reference_basis, rietkerk_experiment, rietkerk_spec, GridScale, RietkerkData};
use crate::units::GroupElement;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

/// `n` group elements with every component log-uniform in `(0.1, 10)`.
pub fn random_group_elements(k: usize, n: usize, seed: u64) -> Vec<GroupElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let g = (0..k).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
            GroupElement::new(g).expect("positive components")
        })
        .collect()
}

/// Applies `g` to every feature of `x` according to its units.
pub fn rescale_row(spec: &FeatureSpec, g: &GroupElement, x: &[f64]) -> Vec<f64> {
    spec.features()
        .iter()
        .zip(x)
        .map(|(f, v)| g.factor(&f.units) * v)
        .collect()
}

/// Largest `|f(g.x) - g.f(x)| / |g.f(x)|` over all rows and group elements.
pub fn equivariance_residual(
    model: &RegressionModel,
    spec: &FeatureSpec,
    rows: &[Vec<f64>],
    group: &[GroupElement],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in rows {
        let base = predict(model, spec, x)?.value;
        for g in group {
            let want = g.factor(&model.label_units) * base;
            let got = predict(model, spec, &rescale_row(spec, g, x))?.value;
            let rel = if want == 0.0 {
                got.abs()
            } else {
                ((got - want) / want).abs()
            };
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_mse: f64,
    pub test_mse: f64,
    pub train_mse_dimensionless: f64,
    pub test_mse_dimensionless: f64,
    pub test_pearson: f64,
}

fn predictions(model: &RegressionModel, data: &Dataset) -> Result<Vec<f64>> {
    data.rows
        .iter()
        .map(|x| Ok(predict(model, &data.spec, x)?.value))
        .collect()
}

/// Mean squared error of `pred / decoder` against `label / decoder`.
fn dimensionless_mse(decoder: &Monomial, data: &Dataset, pred: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for ((x, p), y) in data.rows.iter().zip(pred).zip(&data.labels) {
        let s = evaluate_monomial(decoder, x)?;
        acc += ((p - y) / s).powi(2);
    }
    Ok(acc / data.len().max(1) as f64)
}

pub fn evaluate(model: &RegressionModel, train: &Dataset, test: &Dataset) -> Result<(Metrics, Vec<f64>)> {
    let ptrain = predictions(model, train)?;
    let ptest = predictions(model, test)?;
    Ok((
        Metrics {
            train_mse: mse(&ptrain, &train.labels),
            test_mse: mse(&ptest, &test.labels),
            train_mse_dimensionless: dimensionless_mse(&model.decoder, train, &ptrain)?,
            test_mse_dimensionless: dimensionless_mse(&model.decoder, test, &ptest)?,
            test_pearson: pearson(&ptest, &test.labels),
        },
        ptest,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub method: FitMethod,
    pub n_features: usize,
    pub n_train: usize,
    pub metrics: Metrics,
    pub status: FitStatus,
    /// Largest weights with their monomials, most significant first.
    pub top_weights: Vec<(String, f64)>,
    pub equivariance_residual: Option<f64>,
}

fn run_report(
    label: &str,
    method: FitMethod,
    fitted: &crate::regress::FittedModel,
    train: &Dataset,
    test: &Dataset,
    group: Option<&[GroupElement]>,
    check_rows: usize,
) -> Result<(RunReport, Vec<f64>)> {
    let model = &fitted.model;
    let (metrics, ptest) = evaluate(model, train, test)?;
    let equivariance_residual = match group {
        Some(g) => Some(equivariance_residual(
            model,
            &test.spec,
            &test.rows[..check_rows.min(test.len())],
            g,
        )?),
        None => None,
    };
    Ok((
        RunReport {
            label: label.into(),
            method,
            n_features: model.monomials.len(),
            n_train: train.len(),
            metrics,
            status: fitted.status.clone(),
            top_weights: model
                .top_weights(10)
                .into_iter()
                .map(|j| (model.monomials[j].display(&train.spec).to_string(), model.weights[j]))
                .collect(),
            equivariance_residual,
        },
        ptest,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringyConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub n_lasso: usize,
    pub n_contaminants: usize,
    pub max_degree: u32,
    pub seed: u64,
    pub sampler: SamplerConfig,
    /// LASSO penalty as a fraction of `lambda_max`.
    pub lasso_lambda_ratio: f64,
    pub lasso_path_steps: usize,
    pub lasso_max_sweeps: usize,
    pub lasso_tol: f64,
    /// Weights at or below this magnitude count as zero.
    pub support_threshold: f64,
    pub equivariance_trials: usize,
    pub equivariance_rows: usize,
}

impl SpringyConfig {
    pub fn new(scale: Scale, seed: u64) -> Self {
        let (n_train, n_test) = match scale {
            Scale::Paper => (8192, 1024),
            Scale::Desk => (2048, 256),
        };
        SpringyConfig {
            n_train,
            n_test,
            n_lasso: 128,
            n_contaminants: 500,
            max_degree: 2,
            seed,
            sampler: SamplerConfig::default(),
            lasso_lambda_ratio: 1e-10,
            lasso_path_steps: 60,
            lasso_max_sweeps: 1_000_000,
            lasso_tol: 1e-13,
            support_threshold: 1e-6,
            equivariance_trials: 100,
            equivariance_rows: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub monomial: String,
    pub expected: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringyReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: SpringyConfig,
    pub dimensionless_monomials: usize,
    pub total_monomials: usize,
    pub ols: RunReport,
    pub lasso: RunReport,
    pub ols_contaminated: Option<RunReport>,
    pub lasso_contaminated: Option<RunReport>,
    /// The expanded Hamiltonian terms against the OLS weights.
    pub hamiltonian_terms: Vec<TermWeight>,
    pub max_other_weight: f64,
    pub lasso_support: Vec<String>,
    pub lasso_support_recovered: bool,
    /// Contaminated over clean held-out dimensionless MSE.
    pub contamination_ratio_ols: Option<f64>,
    pub contamination_ratio_lasso: Option<f64>,
}

/// Everything a caller may want to inspect or write out.
#[derive(Debug, Clone)]
pub struct SpringyOutcome {
    pub report: SpringyReport,
    pub train: Dataset,
    pub lasso_train: Dataset,
    pub test: Dataset,
    pub ols_model: RegressionModel,
    pub lasso_model: RegressionModel,
    pub ols_test_predictions: Vec<f64>,
    pub contaminants: Vec<Monomial>,
}

fn lasso_method(cfg: &SpringyConfig, data: &Dataset, monomials: &[Monomial], decoder: &Monomial) -> Result<FitMethod> {
    let (x, y) = weighted_design(data, monomials, decoder, decoder)?;
    let top = lambda_max(&x, &y, true);
    Ok(FitMethod::Lasso(LassoOptions {
        lambda: cfg.lasso_lambda_ratio * top,
        max_sweeps: cfg.lasso_max_sweeps,
        tol: cfg.lasso_tol,
        standardize: true,
        path_steps: cfg.lasso_path_steps,
    }))
}

/// Draws `n` distinct dimensioned monomials from the full enumeration.
pub fn random_dimensional_monomials(spec: &FeatureSpec, max_degree: u32, n: usize, seed: u64) -> Result<Vec<Monomial>> {
    let pool: Vec<Monomial> = enumerate_monomials(spec, &EnumerateOptions::new(max_degree, false))?
        .into_iter()
        .filter(|m| !m.is_dimensionless(spec).unwrap_or(true))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pool.choose_multiple(&mut rng, n).cloned().collect())
}

pub fn run_springy(cfg: &SpringyConfig) -> Result<SpringyOutcome> {
    let spec = pendulum_spec();
    let dl = enumerate_monomials(&spec, &EnumerateOptions::new(cfg.max_degree, true))?;
    let total = enumerate_monomials(&spec, &EnumerateOptions::new(cfg.max_degree, false))?.len();
    let decoder = spring_energy_scale(&spec);
    let train = sample_pendulum_dataset(cfg.n_train, cfg.seed, &cfg.sampler)?;
    let test = sample_pendulum_dataset(cfg.n_test, cfg.seed.wrapping_add(1), &cfg.sampler)?;
    let lasso_train = sample_pendulum_dataset(cfg.n_lasso, cfg.seed.wrapping_add(2), &cfg.sampler)?;
    let group = random_group_elements(spec.k(), cfg.equivariance_trials, cfg.seed.wrapping_add(3));

    let ols_method = FitMethod::Ols { ridge: 0.0 };
    let ols = fit_model(&train, &dl, &decoder, ols_method, Loss::Dimensionless)?;
    let (ols_report, ols_pred) = run_report("ols", ols_method, &ols, &train, &test, Some(&group), cfg.equivariance_rows)?;

    let lm = lasso_method(cfg, &lasso_train, &dl, &decoder)?;
    let lasso = fit_model(&lasso_train, &dl, &decoder, lm, Loss::Dimensionless)?;
    let (lasso_report, _) = run_report("lasso", lm, &lasso, &lasso_train, &test, Some(&group), cfg.equivariance_rows)?;

    let terms = hamiltonian_terms(&spec);
    let term_idx: Vec<Option<usize>> = terms
        .iter()
        .map(|(m, _)| dl.iter().position(|d| d.exps == m.exps))
        .collect();
    let hamiltonian_terms = terms
        .iter()
        .zip(&term_idx)
        .map(|((m, c), j)| TermWeight {
            monomial: m.display(&spec).to_string(),
            expected: *c,
            fitted: j.map_or(f64::NAN, |j| ols.model.weights[j]),
        })
        .collect();
    let max_other_weight = ols
        .model
        .weights
        .iter()
        .enumerate()
        .filter(|(j, _)| !term_idx.contains(&Some(*j)))
        .map(|(_, w)| w.abs())
        .fold(0.0, f64::max);
    let support: Vec<usize> = (0..dl.len())
        .filter(|&j| lasso.model.weights[j].abs() > cfg.support_threshold)
        .collect();
    let mut want: Vec<usize> = term_idx.iter().flatten().copied().collect();
    want.sort_unstable();

    let mut contaminants = Vec::new();
    let (mut oc, mut lc, mut ratio_ols, mut ratio_lasso) = (None, None, None, None);
    if cfg.n_contaminants > 0 {
        contaminants = random_dimensional_monomials(&spec, cfg.max_degree, cfg.n_contaminants, cfg.seed.wrapping_add(4))?;
        let mut mixed = dl.clone();
        mixed.extend(contaminants.iter().cloned());
        let f = fit_model(&train, &mixed, &decoder, ols_method, Loss::Dimensionless)?;
        let (r, _) = run_report("ols_contaminated", ols_method, &f, &train, &test, None, 0)?;
        ratio_ols = Some(r.metrics.test_mse_dimensionless / ols_report.metrics.test_mse_dimensionless);
        oc = Some(r);
        let lm = lasso_method(cfg, &lasso_train, &mixed, &decoder)?;
        let f = fit_model(&lasso_train, &mixed, &decoder, lm, Loss::Dimensionless)?;
        let (r, _) = run_report("lasso_contaminated", lm, &f, &lasso_train, &test, None, 0)?;
        ratio_lasso = Some(r.metrics.test_mse_dimensionless / lasso_report.metrics.test_mse_dimensionless);
        lc = Some(r);
    }

    let report = SpringyReport {
        schema_version: SCHEMA_VERSION,
        experiment: "springy".into(),
        config: cfg.clone(),
        dimensionless_monomials: dl.len(),
        total_monomials: total,
        ols: ols_report,
        lasso: lasso_report,
        ols_contaminated: oc,
        lasso_contaminated: lc,
        hamiltonian_terms,
        max_other_weight,
        lasso_support: support.iter().map(|&j| dl[j].display(&spec).to_string()).collect(),
        lasso_support_recovered: support == want,
        contamination_ratio_ols: ratio_ols,
        contamination_ratio_lasso: ratio_lasso,
    };
    Ok(SpringyOutcome {
        report,
        train,
        lasso_train,
        test,
        ols_model: ols.model,
        lasso_model: lasso.model,
        ols_test_predictions: ols_pred,
        contaminants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackbodyConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Meters.
    pub lambda_range: (f64, f64),
    /// Kelvin.
    pub t_range: (f64, f64),
    pub max_degree: u32,
}

impl BlackbodyConfig {
    /// Long wavelengths, where the Rayleigh-Jeans limit applies.
    pub fn new(scale: Scale, seed: u64) -> Self {
        let (n_train, n_test) = match scale {
            Scale::Paper => (1024, 256),
            Scale::Desk => (256, 64),
        };
        BlackbodyConfig {
            n_train,
            n_test,
            seed,
            lambda_range: (1e-3, 1e-2),
            t_range: (300.0, 3000.0),
            max_degree: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackbodyReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: BlackbodyConfig,
    pub d: usize,
    pub k: usize,
    pub rank: usize,
    pub s: usize,
    pub decoders: Vec<String>,
    pub decoder: String,
    pub constant: f64,
    pub metrics: Metrics,
    pub equivariance_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BlackbodyOutcome {
    pub report: BlackbodyReport,
    pub train: Dataset,
    pub test: Dataset,
    pub model: RegressionModel,
    pub test_predictions: Vec<f64>,
}

pub fn run_blackbody(cfg: &BlackbodyConfig) -> Result<BlackbodyOutcome> {
    let spec = planck_spec();
    let rank = spec.rank()?;
    let basis = dimensionless_basis(&spec)?;
    let decoders = decoder_solutions(&spec, &intensity_units(), cfg.max_degree)?;
    let decoder = decoders.first().cloned().ok_or_else(|| {
        Error::InvalidInput("no decoder with the intensity units".into())
    })?;
    let mut monomials = vec![Monomial::constant(spec.d())];
    monomials.extend(basis.iter().cloned());
    let train = sample_blackbody(cfg.n_train, cfg.seed, cfg.lambda_range, cfg.t_range)?;
    let test = sample_blackbody(cfg.n_test, cfg.seed.wrapping_add(1), cfg.lambda_range, cfg.t_range)?;
    let fitted = fit_model(&train, &monomials, &decoder, FitMethod::Ols { ridge: 0.0 }, Loss::Dimensionless)?;
    let (metrics, test_predictions) = evaluate(&fitted.model, &train, &test)?;
    let group = random_group_elements(spec.k(), 100, cfg.seed.wrapping_add(3));
    let eq = equivariance_residual(&fitted.model, &spec, &test.rows, &group)?;
    let report = BlackbodyReport {
        schema_version: SCHEMA_VERSION,
        experiment: "blackbody".into(),
        config: cfg.clone(),
        d: spec.d(),
        k: spec.k(),
        rank,
        s: basis.len(),
        decoders: decoders.iter().map(|m| m.display(&spec).to_string()).collect(),
        decoder: decoder.display(&spec).to_string(),
        constant: fitted.model.weights[0],
        metrics,
        equivariance_residual: eq,
    };
    Ok(BlackbodyOutcome {
        report,
        train,
        test,
        model: fitted.model,
        test_predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RietkerkConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub grid: GridScale,
    /// Decoder for the dimensionless regression, as a monomial expression.
    pub decoder: String,
}

impl RietkerkConfig {
    pub fn new(scale: Scale, seed: u64) -> Self {
        let (n_train, n_test, grid) = match scale {
            Scale::Paper => (1000, 100, GridScale::paper()),
            Scale::Desk => (200, 50, GridScale::desk()),
        };
        RietkerkConfig {
            n_train,
            n_test,
            seed,
            grid,
            // leading-order steady state from the water balance
            decoder: "c R delta_v^-1".into(),
        }
    }
}

/// Plain linear model on raw feature monomials, without a decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub monomials: Vec<Monomial>,
    pub weights: Vec<f64>,
    pub rank: usize,
}

impl BaselineModel {
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(build_design_matrix(data, &self.monomials)?.mul_vec(&self.weights))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub n_features: usize,
    pub rank: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub test_pearson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RietkerkReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: RietkerkConfig,
    pub attempted: usize,
    pub extinct: usize,
    pub blowups: usize,
    pub basis: Vec<String>,
    pub computed_basis: Vec<String>,
    pub baseline: BaselineReport,
    pub dimensionless: RunReport,
    pub decoder: String,
}

#[derive(Debug, Clone)]
pub struct RietkerkRun {
    pub report: RietkerkReport,
    pub data: RietkerkData,
    pub model: RegressionModel,
    pub baseline: BaselineModel,
    pub test_predictions: Vec<f64>,
    pub baseline_test_predictions: Vec<f64>,
}

/// `1`, then each monomial, then each inverse.
pub fn with_inverses(monomials: &[Monomial], d: usize) -> Vec<Monomial> {
    let mut out = vec![Monomial::constant(d)];
    out.extend(monomials.iter().cloned());
    out.extend(monomials.iter().map(Monomial::inverse));
    out
}

fn fit_baseline(train: &Dataset) -> Result<BaselineModel> {
    let d = train.spec.d();
    let raw: Vec<Monomial> = (0..d)
        .map(|i| {
            let mut e = vec![0; d];
            e[i] = 1;
            Monomial::new(e)
        })
        .collect();
    let monomials = with_inverses(&raw, d);
    let x: Matrix = build_design_matrix(train, &monomials)?;
    let fit = fit_ols(&x, &train.labels, 0.0)?;
    Ok(BaselineModel {
        monomials,
        weights: fit.weights,
        rank: fit.rank,
    })
}

/// Runs the Rietkerk emulation from already simulated data.
pub fn fit_rietkerk(cfg: &RietkerkConfig, data: RietkerkData) -> Result<RietkerkRun> {
    let spec = rietkerk_spec();
    let basis = reference_basis(&spec);
    let features = with_inverses(&basis, spec.d());
    let decoder = Monomial::parse(&cfg.decoder, &spec)?;

    let baseline = fit_baseline(&data.train)?;
    let bl_train = baseline.predict(&data.train)?;
    let bl_test = baseline.predict(&data.test)?;
    let baseline_report = BaselineReport {
        n_features: baseline.monomials.len(),
        rank: baseline.rank,
        train_mse: mse(&bl_train, &data.train.labels),
        test_mse: mse(&bl_test, &data.test.labels),
        test_pearson: pearson(&bl_test, &data.test.labels),
    };

    let method = FitMethod::Ols { ridge: 0.0 };
    let fitted = fit_model(&data.train, &features, &decoder, method, Loss::Dimensionless)?;
    let group = random_group_elements(spec.k(), 100, cfg.seed.wrapping_add(3));
    let (dl_report, test_predictions) = run_report(
        "dimensionless",
        method,
        &fitted,
        &data.train,
        &data.test,
        Some(&group),
        data.test.len(),
    )?;
    let report = RietkerkReport {
        schema_version: SCHEMA_VERSION,
        experiment: "rietkerk".into(),
        config: cfg.clone(),
        attempted: data.attempted,
        extinct: data.extinct,
        blowups: data.blowups,
        basis: basis.iter().map(|m| m.display(&spec).to_string()).collect(),
        computed_basis: dimensionless_basis(&spec)?
            .iter()
            .map(|m| m.display(&spec).to_string())
            .collect(),
        baseline: baseline_report,
        dimensionless: dl_report,
        decoder: decoder.display(&spec).to_string(),
    };
    Ok(RietkerkRun {
        report,
        data,
        model: fitted.model,
        baseline,
        test_predictions,
        baseline_test_predictions: bl_test,
    })
}

pub fn run_rietkerk(cfg: &RietkerkConfig) -> Result<RietkerkRun> {
    let data = rietkerk_experiment(cfg.n_train, cfg.n_test, cfg.seed, &cfg.grid)?;
    fit_rietkerk(cfg, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blackbody_recovers_rayleigh_jeans_constant() {
        let out = run_blackbody(&BlackbodyConfig::new(Scale::Desk, 1)).unwrap();
        let r = &out.report;
        assert_eq!((r.d, r.k, r.rank, r.s), (4, 4, 4, 0));
        assert_eq!(r.decoders, vec![r.decoder.clone()]);
        assert!((r.constant - 2.0).abs() < 0.1, "{}", r.constant);
        assert!(r.equivariance_residual < 1e-12);
    }

    #[test]
    fn group_elements_are_in_range_and_seeded() {
        let g = random_group_elements(3, 50, 9);
        assert!(g.iter().flat_map(|e| e.components()).all(|&c| (0.1..10.0).contains(&c)));
        assert_eq!(g, random_group_elements(3, 50, 9));
    }

    #[test]
    fn small_springy_run() {
        let mut cfg = SpringyConfig::new(Scale::Desk, 3);
        cfg.n_train = 600;
        cfg.n_test = 64;
        cfg.n_contaminants = 0;
        cfg.equivariance_trials = 5;
        cfg.equivariance_rows = 5;
        let out = run_springy(&cfg).unwrap();
        let r = &out.report;
        assert_eq!((r.dimensionless_monomials, r.total_monomials), (286, 187_500));
        for t in &r.hamiltonian_terms {
            assert!((t.fitted - t.expected).abs() < 1e-6, "{t:?}");
        }
        assert!(r.ols.metrics.test_mse_dimensionless < 1e-10);
    }
}
