use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use unitsml::experiments::{
    self, equivariance_residual, random_group_elements, rescale_row, with_inverses, BlackbodyConfig, RietkerkConfig,
    Scale, SpringyConfig, SCHEMA_VERSION,
};
use unitsml::io::{self, ModelFile, SpecFile};
use unitsml::pi::{
    decoder_solutions, dimensionless_basis, enumerate_monomials, evaluate_monomial, EnumerateOptions, FeatureSpec,
    Monomial, MonomialRecord,
};
use unitsml::regress::lasso::{lambda_max, LassoOptions};
use unitsml::regress::{
    ensemble_predict, fit_model_scaled, mse, pearson, weighted_design, Combiner, Dataset, FitMethod, RegressionModel,
};
use unitsml::sims::rietkerk::{integrate_rietkerk, random_initial_state, RietkerkOutcome, RietkerkParams};

const EXIT_SPEC: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(name = "unitsml", version, about = "Units-equivariant features and regression")]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long, global = true, env = "UNITSML_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report d, k, rank and the number of dimensionless features of a spec.
    UnitsCheck {
        spec: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write an integer basis of the dimensionless monomials.
    Basis {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate monomials up to a degree.
    Enumerate {
        spec: PathBuf,
        #[arg(long)]
        max_degree: Option<u32>,
        #[arg(long)]
        dimensionless_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a units-equivariant linear model to a units-header CSV.
    Regress(Box<RegressArgs>),
    /// Run a scripted experiment and write all artifacts.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct RegressArgs {
    train: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Spec file; without one, base units are read off the CSV header.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// basis | basis-inverses | enumerate:<deg> | file:<path>
    #[arg(long)]
    features: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// LASSO penalty; defaults to 1e-10 of the smallest all-zero penalty.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// auto | index:<i> | ensemble
    #[arg(long)]
    decoder: Option<String>,
    /// Maximum degree searched for decoders.
    #[arg(long)]
    decoder_degree: Option<u32>,
    /// Monomial with the label's units that makes the loss dimensionless.
    #[arg(long)]
    loss_scale: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// CSV of predicted, true, residual on the test set.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: ExperimentName,
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Also dump the final fields of one default-parameter run.
    #[arg(long)]
    snapshot: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Debug)]
#[serde(rename_all = "lowercase")]
enum Method {
    Ols,
    Lasso,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Debug)]
enum ExperimentName {
    Springy,
    Blackbody,
    Rietkerk,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Debug)]
enum ScaleArg {
    Desk,
    Paper,
}

/// Values a config file may provide.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    max_degree: Option<u32>,
    features: Option<String>,
    method: Option<Method>,
    lambda: Option<f64>,
    ridge: Option<f64>,
    max_sweeps: Option<usize>,
    decoder: Option<String>,
    decoder_degree: Option<u32>,
    loss_scale: Option<String>,
    scale: Option<String>,
    springy: Option<Value>,
    blackbody: Option<Value>,
    rietkerk: Option<Value>,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

trait Classify<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, err: e.into() })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))
                .or_exit(EXIT_SPEC)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))
                .or_exit(EXIT_SPEC)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let file = load_config(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .or_exit(EXIT_SPEC)?;
    }
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    match cli.command {
        Command::UnitsCheck { spec, report } => units_check(&spec, report.as_deref()),
        Command::Basis { spec, out } => basis(&spec, out.as_deref()),
        Command::Enumerate {
            spec,
            max_degree,
            dimensionless_only,
            out,
        } => enumerate(
            &spec,
            max_degree.or(file.max_degree).unwrap_or(2),
            dimensionless_only,
            out.as_deref(),
        ),
        Command::Regress(args) => regress(*args, &file, seed, threads),
        Command::Experiment(args) => experiment(args, &file, seed, threads),
    }
}

fn read_spec(path: &Path) -> Result<(SpecFile, FeatureSpec), Failure> {
    let file = io::read_spec_file(path)
        .with_context(|| format!("reading spec {}", path.display()))
        .or_exit(EXIT_SPEC)?;
    let spec = file
        .to_spec()
        .with_context(|| format!("invalid spec {}", path.display()))
        .or_exit(EXIT_SPEC)?;
    Ok((file, spec))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    io::write_json(path, value)
        .with_context(|| format!("writing {}", path.display()))
        .or_exit(EXIT_DATA)
}

fn monomial_json(m: &Monomial, spec: &FeatureSpec) -> Result<Value, Failure> {
    let rec = m.to_record(spec).or_exit(EXIT_SPEC)?;
    Ok(json!({
        "expr": m.display(spec).to_string(),
        "exps": rec.exps,
        "degree": rec.degree,
        "units": spec.system.format(&rec.units),
    }))
}

fn units_check(path: &Path, report: Option<&Path>) -> Result<u8, Failure> {
    let (_, spec) = read_spec(path)?;
    let rank = spec.rank().or_exit(EXIT_SPEC)?;
    let (d, k) = (spec.d(), spec.k());
    println!("d={d} k={k} rank={rank} s={}", d - rank);
    // features that carry identical units are legal but worth a look
    let mut same_units = Vec::new();
    let feats = spec.features();
    for i in 0..feats.len() {
        for j in i + 1..feats.len() {
            if feats[i].units == feats[j].units {
                same_units.push([feats[i].name.clone(), feats[j].name.clone()]);
            }
        }
    }
    for [a, b] in &same_units {
        println!("note: `{a}` and `{b}` share units");
    }
    let dimensionless: Vec<&str> = feats
        .iter()
        .filter(|f| f.units.is_dimensionless())
        .map(|f| f.name.as_str())
        .collect();
    if let Some(p) = report {
        write_json(
            p,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "units-check",
                "spec": path,
                "d": d, "k": k, "rank": rank, "s": d - rank,
                "shared_units": same_units,
                "dimensionless_features": dimensionless,
            }),
        )?;
    }
    Ok(0)
}

fn basis(path: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let (_, spec) = read_spec(path)?;
    let basis = dimensionless_basis(&spec).or_exit(EXIT_SPEC)?;
    println!("{} dimensionless basis monomials", basis.len());
    for m in &basis {
        println!("  {}", m.display(&spec));
    }
    if let Some(p) = out {
        let list = basis.iter().map(|m| monomial_json(m, &spec)).collect::<Result<Vec<_>, _>>()?;
        write_json(p, &list)?;
    }
    Ok(0)
}

fn enumerate(path: &Path, max_degree: u32, dimensionless_only: bool, out: Option<&Path>) -> Result<u8, Failure> {
    let (_, spec) = read_spec(path)?;
    let list = enumerate_monomials(&spec, &EnumerateOptions::new(max_degree, dimensionless_only)).or_exit(EXIT_SPEC)?;
    println!("count={}", list.len());
    if let Some(p) = out {
        let items = list.iter().map(|m| monomial_json(m, &spec)).collect::<Result<Vec<_>, _>>()?;
        write_json(
            p,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "max_degree": max_degree,
                "dimensionless_only": dimensionless_only,
                "count": list.len(),
                "monomials": items,
            }),
        )?;
    }
    Ok(0)
}

fn feature_list(choice: &str, spec: &FeatureSpec) -> Result<Vec<Monomial>, Failure> {
    let d = spec.d();
    let basis_with_one = || -> Result<Vec<Monomial>, Failure> {
        let mut v = vec![Monomial::constant(d)];
        v.extend(dimensionless_basis(spec).or_exit(EXIT_SPEC)?);
        Ok(v)
    };
    if choice == "basis" {
        return basis_with_one();
    }
    if choice == "basis-inverses" {
        return Ok(with_inverses(&dimensionless_basis(spec).or_exit(EXIT_SPEC)?, d));
    }
    if let Some(deg) = choice.strip_prefix("enumerate:") {
        let deg: u32 = deg.parse().map_err(|_| anyhow!("bad degree in `{choice}`")).or_exit(EXIT_SPEC)?;
        return enumerate_monomials(spec, &EnumerateOptions::new(deg, true)).or_exit(EXIT_SPEC);
    }
    if let Some(p) = choice.strip_prefix("file:") {
        let items: Vec<Value> = io::read_json(Path::new(p)).or_exit(EXIT_SPEC)?;
        return items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Monomial::parse(&s, spec).or_exit(EXIT_SPEC),
                other => {
                    let rec: MonomialRecord = serde_json::from_value(other).or_exit(EXIT_SPEC)?;
                    Ok(rec.into())
                }
            })
            .collect();
    }
    Err(anyhow!("unknown feature set `{choice}`")).or_exit(EXIT_SPEC)
}

#[derive(Debug, Serialize)]
struct ResolvedRegress {
    train: PathBuf,
    test: Option<PathBuf>,
    spec: Option<PathBuf>,
    features: String,
    method: Method,
    lambda: Option<f64>,
    ridge: f64,
    max_sweeps: usize,
    decoder: String,
    decoder_degree: u32,
    loss_scale: Option<String>,
    seed: u64,
    threads: Option<usize>,
}

fn regress(args: RegressArgs, file: &FileConfig, seed: u64, threads: Option<usize>) -> Result<u8, Failure> {
    let cfg = ResolvedRegress {
        train: args.train.clone(),
        test: args.test.clone(),
        spec: args.spec.clone(),
        features: args.features.or(file.features.clone()).unwrap_or_else(|| "basis".into()),
        method: args.method.or(file.method).unwrap_or(Method::Ols),
        lambda: args.lambda.or(file.lambda),
        ridge: args.ridge.or(file.ridge).unwrap_or(0.0),
        max_sweeps: args.max_sweeps.or(file.max_sweeps).unwrap_or(1_000_000),
        decoder: args.decoder.or(file.decoder.clone()).unwrap_or_else(|| "auto".into()),
        decoder_degree: args.decoder_degree.or(file.decoder_degree).unwrap_or(4),
        loss_scale: args.loss_scale.or(file.loss_scale.clone()),
        seed,
        threads,
    };

    let spec_in = match &cfg.spec {
        Some(p) => Some(read_spec(p)?.1),
        None => None,
    };
    let train = io::read_dataset_csv(&cfg.train, spec_in.as_ref())
        .with_context(|| format!("reading {}", cfg.train.display()))
        .or_exit(EXIT_DATA)?;
    let spec = train.spec.clone();
    let test = match &cfg.test {
        Some(p) => Some(
            io::read_dataset_csv(p, Some(&spec))
                .with_context(|| format!("reading {}", p.display()))
                .or_exit(EXIT_DATA)?,
        ),
        None => None,
    };
    if let Some(t) = &test {
        if t.label_units != train.label_units {
            return Err(anyhow!("test labels have different units")).or_exit(EXIT_DATA);
        }
    }
    let monomials = feature_list(&cfg.features, &spec)?;
    let loss_scale = match &cfg.loss_scale {
        Some(e) => Some(Monomial::parse(e, &spec).or_exit(EXIT_SPEC)?),
        None => None,
    };
    let decoders: Vec<Monomial> = match cfg.decoder.as_str() {
        "auto" => match &loss_scale {
            Some(m) => vec![m.clone()],
            None => decoder_solutions(&spec, &train.label_units, cfg.decoder_degree)
                .or_exit(EXIT_DATA)?
                .into_iter()
                .take(1)
                .collect(),
        },
        "ensemble" => decoder_solutions(&spec, &train.label_units, cfg.decoder_degree).or_exit(EXIT_DATA)?,
        other => {
            let i: usize = other
                .strip_prefix("index:")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| anyhow!("bad --decoder `{other}`"))
                .or_exit(EXIT_SPEC)?;
            let all = decoder_solutions(&spec, &train.label_units, cfg.decoder_degree).or_exit(EXIT_DATA)?;
            vec![all
                .get(i)
                .cloned()
                .ok_or_else(|| anyhow!("only {} decoders available", all.len()))
                .or_exit(EXIT_DATA)?]
        }
    };
    if decoders.is_empty() {
        return Err(anyhow!(
            "no monomial up to degree {} has the label units {}",
            cfg.decoder_degree,
            spec.system.format(&train.label_units)
        ))
        .or_exit(EXIT_DATA);
    }

    let mut models: Vec<RegressionModel> = Vec::new();
    let mut fits = Vec::new();
    let mut converged = true;
    for dec in &decoders {
        let scale = loss_scale.clone().unwrap_or_else(|| dec.clone());
        let method = match cfg.method {
            Method::Ols => FitMethod::Ols { ridge: cfg.ridge },
            Method::Lasso => {
                let lambda = match cfg.lambda {
                    Some(l) => l,
                    None => {
                        let (x, y) = weighted_design(&train, &monomials, dec, &scale).or_exit(EXIT_DATA)?;
                        1e-10 * lambda_max(&x, &y, true)
                    }
                };
                FitMethod::Lasso(LassoOptions {
                    lambda,
                    max_sweeps: cfg.max_sweeps,
                    tol: 1e-13,
                    standardize: true,
                    path_steps: 60,
                })
            }
        };
        let fit = fit_model_scaled(&train, &monomials, dec, &scale, method).or_exit(EXIT_DATA)?;
        converged &= fit.status.converged;
        fits.push(json!({
            "decoder": dec.display(&spec).to_string(),
            "method": method,
            "status": fit.status,
        }));
        models.push(fit.model);
    }

    let predict_all = |data: &Dataset| -> Result<Vec<f64>, Failure> {
        data.rows
            .iter()
            .map(|x| Ok(ensemble_predict(&models, &spec, x, Combiner::Mean).or_exit(EXIT_DATA)?.value))
            .collect()
    };
    let scale_for_metrics = loss_scale.clone().unwrap_or_else(|| decoders[0].clone());
    let dimensionless_mse = |data: &Dataset, pred: &[f64]| -> Result<f64, Failure> {
        let mut acc = 0.0;
        for ((x, p), y) in data.rows.iter().zip(pred).zip(&data.labels) {
            let s = evaluate_monomial(&scale_for_metrics, x).or_exit(EXIT_DATA)?;
            acc += ((p - y) / s).powi(2);
        }
        Ok(acc / data.len().max(1) as f64)
    };
    let ptrain = predict_all(&train)?;
    let mut metrics = json!({
        "train_mse": mse(&ptrain, &train.labels),
        "train_mse_dimensionless": dimensionless_mse(&train, &ptrain)?,
    });
    let check_rows: Vec<Vec<f64>>;
    if let Some(t) = &test {
        let ptest = predict_all(t)?;
        metrics["test_mse"] = json!(mse(&ptest, &t.labels));
        metrics["test_mse_dimensionless"] = json!(dimensionless_mse(t, &ptest)?);
        metrics["test_pearson"] = json!(pearson(&ptest, &t.labels));
        if let Some(p) = &args.predictions {
            io::write_predictions_csv(p, &ptest, &t.labels).or_exit(EXIT_DATA)?;
        }
        check_rows = t.rows.iter().take(100).cloned().collect();
    } else {
        check_rows = train.rows.iter().take(100).cloned().collect();
    }

    let group = random_group_elements(spec.k(), 100, seed);
    let residual = if models.len() == 1 {
        equivariance_residual(&models[0], &spec, &check_rows, &group).or_exit(EXIT_DATA)?
    } else {
        let mut worst: f64 = 0.0;
        for x in &check_rows {
            let base = ensemble_predict(&models, &spec, x, Combiner::Mean).or_exit(EXIT_DATA)?;
            for g in &group {
                let want = g.factor(&base.units) * base.value;
                let got = ensemble_predict(&models, &spec, &rescale_row(&spec, g, x), Combiner::Mean)
                    .or_exit(EXIT_DATA)?
                    .value;
                worst = worst.max(if want == 0.0 { got.abs() } else { ((got - want) / want).abs() });
            }
        }
        worst
    };

    let first = &models[0];
    let top: Vec<Value> = first
        .top_weights(10)
        .into_iter()
        .map(|j| json!({"monomial": first.monomials[j].display(&spec).to_string(), "weight": first.weights[j]}))
        .collect();
    println!(
        "features={} decoders={} method={:?} converged={converged}",
        monomials.len(),
        decoders.len(),
        cfg.method
    );
    println!("decoder: {}", decoders[0].display(&spec));
    for (k, v) in metrics.as_object().expect("object") {
        println!("{k:>26}  {v}");
    }
    println!("{:>26}  {residual:e}", "equivariance_residual");
    println!("top weights:");
    for t in &top {
        println!("  {:>+.10e}  {}", t["weight"].as_f64().unwrap_or(f64::NAN), t["monomial"].as_str().unwrap_or(""));
    }

    if let Some(p) = &args.model {
        let files = models
            .iter()
            .map(|m| ModelFile::new(m, &spec).or_exit(EXIT_DATA))
            .collect::<Result<Vec<_>, _>>()?;
        if files.len() == 1 {
            write_json(p, &files[0])?;
        } else {
            write_json(p, &files)?;
        }
    }
    if let Some(p) = &args.report {
        write_json(
            p,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "regress",
                "config": cfg,
                "spec": {"d": spec.d(), "k": spec.k(), "rank": spec.rank().or_exit(EXIT_SPEC)?},
                "n_features": monomials.len(),
                "n_train": train.len(),
                "n_test": test.as_ref().map(Dataset::len),
                "decoders": decoders.iter().map(|m| m.display(&spec).to_string()).collect::<Vec<_>>(),
                "fits": fits,
                "metrics": metrics,
                "top_weights": top,
                "equivariance_residual": residual,
                "converged": converged,
            }),
        )?;
    }
    Ok(if converged { 0 } else { EXIT_CONVERGENCE })
}

/// Overlays the keys of `over` onto a serialized default.
fn merged<T: Serialize + for<'de> Deserialize<'de>>(base: T, over: Option<&Value>) -> Result<T, Failure> {
    let mut v = serde_json::to_value(base).or_exit(EXIT_SPEC)?;
    if let (Some(Value::Object(o)), Value::Object(b)) = (over, &mut v) {
        for (k, x) in o {
            if !b.contains_key(k) {
                return Err(anyhow!("unknown config key `{k}`")).or_exit(EXIT_SPEC);
            }
            b.insert(k.clone(), x.clone());
        }
    }
    serde_json::from_value(v).context("config values").or_exit(EXIT_SPEC)
}

fn experiment(args: ExperimentArgs, file: &FileConfig, seed: u64, threads: Option<usize>) -> Result<u8, Failure> {
    let scale = match args.scale {
        Some(ScaleArg::Paper) => Scale::Paper,
        Some(ScaleArg::Desk) => Scale::Desk,
        None => match file.scale.as_deref() {
            None | Some("desk") => Scale::Desk,
            Some("paper") => Scale::Paper,
            Some(other) => return Err(anyhow!("unknown scale `{other}`")).or_exit(EXIT_SPEC),
        },
    };
    let out = &args.out;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .or_exit(EXIT_DATA)?;
    let start = Instant::now();
    let data_err = |e: unitsml::Error| Failure {
        code: EXIT_DATA,
        err: e.into(),
    };
    let mut code = 0;
    let meta = match args.name {
        ExperimentName::Springy => {
            let mut cfg = merged(SpringyConfig::new(scale, seed), file.springy.as_ref())?;
            cfg.seed = seed;
            if let Some(n) = args.n_train {
                cfg.n_train = n;
            }
            if let Some(n) = args.n_test {
                cfg.n_test = n;
            }
            let o = experiments::run_springy(&cfg).map_err(data_err)?;
            let r = &o.report;
            println!("dimensionless monomials: {}  total: {}", r.dimensionless_monomials, r.total_monomials);
            println!("expanded Hamiltonian over k_s L^2 (OLS):");
            for t in &r.hamiltonian_terms {
                println!("  {:>+.12}  (expected {:+})  {}", t.fitted, t.expected, t.monomial);
            }
            println!("max |other weight|: {:e}", r.max_other_weight);
            println!("OLS   held-out dimensionless MSE: {:e}", r.ols.metrics.test_mse_dimensionless);
            println!("LASSO held-out dimensionless MSE: {:e}  support recovered: {}", r.lasso.metrics.test_mse_dimensionless, r.lasso_support_recovered);
            if let (Some(a), Some(b)) = (r.contamination_ratio_ols, r.contamination_ratio_lasso) {
                println!("contamination MSE ratio: OLS {a:e}  LASSO {b:e}");
            }
            write_json(&out.join("report.json"), r)?;
            write_json(&out.join("spec.json"), &SpecFile::from_spec(&o.train.spec, Some(&o.train.label_units)))?;
            io::write_dataset_csv(&out.join("train.csv"), &o.train).map_err(data_err)?;
            io::write_dataset_csv(&out.join("test.csv"), &o.test).map_err(data_err)?;
            io::write_dataset_csv(&out.join("lasso_train.csv"), &o.lasso_train).map_err(data_err)?;
            write_json(&out.join("model_ols.json"), &ModelFile::new(&o.ols_model, &o.train.spec).map_err(data_err)?)?;
            write_json(&out.join("model_lasso.json"), &ModelFile::new(&o.lasso_model, &o.train.spec).map_err(data_err)?)?;
            io::write_predictions_csv(&out.join("predictions.csv"), &o.ols_test_predictions, &o.test.labels)
                .map_err(data_err)?;
            if !(r.ols.status.converged && r.lasso.status.converged) {
                code = EXIT_CONVERGENCE;
            }
            json!({"config": cfg})
        }
        ExperimentName::Blackbody => {
            let mut cfg = merged(BlackbodyConfig::new(scale, seed), file.blackbody.as_ref())?;
            cfg.seed = seed;
            if let Some(n) = args.n_train {
                cfg.n_train = n;
            }
            if let Some(n) = args.n_test {
                cfg.n_test = n;
            }
            let o = experiments::run_blackbody(&cfg).map_err(data_err)?;
            let r = &o.report;
            println!("d={} k={} rank={} s={}", r.d, r.k, r.rank, r.s);
            println!("decoders: {:?}", r.decoders);
            println!("model: {:.6} * {}", r.constant, r.decoder);
            println!("held-out MSE: {:e}  equivariance residual: {:e}", r.metrics.test_mse, r.equivariance_residual);
            write_json(&out.join("report.json"), r)?;
            write_json(&out.join("spec.json"), &SpecFile::from_spec(&o.train.spec, Some(&o.train.label_units)))?;
            io::write_dataset_csv(&out.join("train.csv"), &o.train).map_err(data_err)?;
            io::write_dataset_csv(&out.join("test.csv"), &o.test).map_err(data_err)?;
            write_json(&out.join("model.json"), &ModelFile::new(&o.model, &o.train.spec).map_err(data_err)?)?;
            io::write_predictions_csv(&out.join("predictions.csv"), &o.test_predictions, &o.test.labels)
                .map_err(data_err)?;
            json!({"config": cfg})
        }
        ExperimentName::Rietkerk => {
            let mut cfg = merged(RietkerkConfig::new(scale, seed), file.rietkerk.as_ref())?;
            cfg.seed = seed;
            if let Some(n) = args.n_train {
                cfg.n_train = n;
            }
            if let Some(n) = args.n_test {
                cfg.n_test = n;
            }
            let o = experiments::run_rietkerk(&cfg).map_err(data_err)?;
            let r = &o.report;
            println!(
                "runs attempted={} extinct={} blowups={} kept={}",
                r.attempted,
                r.extinct,
                r.blowups,
                o.data.train.len() + o.data.test.len()
            );
            println!("{:<34} {:>12} {:>8}", "model", "test MSE", "pearson");
            println!(
                "{:<34} {:>12.4} {:>8.4}",
                format!("baseline ({} features)", r.baseline.n_features),
                r.baseline.test_mse,
                r.baseline.test_pearson
            );
            println!(
                "{:<34} {:>12.4} {:>8.4}",
                format!("dimensionless ({} features)", r.dimensionless.n_features),
                r.dimensionless.metrics.test_mse,
                r.dimensionless.metrics.test_pearson
            );
            write_json(&out.join("report.json"), r)?;
            write_json(&out.join("spec.json"), &SpecFile::from_spec(&o.data.train.spec, Some(&o.data.train.label_units)))?;
            io::write_dataset_csv(&out.join("train.csv"), &o.data.train).map_err(data_err)?;
            io::write_dataset_csv(&out.join("test.csv"), &o.data.test).map_err(data_err)?;
            write_json(&out.join("model.json"), &ModelFile::new(&o.model, &o.data.train.spec).map_err(data_err)?)?;
            write_json(&out.join("baseline.json"), &o.baseline)?;
            write_json(&out.join("runs.json"), &o.data.runs)?;
            io::write_predictions_csv(&out.join("predictions.csv"), &o.test_predictions, &o.data.test.labels)
                .map_err(data_err)?;
            io::write_predictions_csv(
                &out.join("baseline_predictions.csv"),
                &o.baseline_test_predictions,
                &o.data.test.labels,
            )
            .map_err(data_err)?;
            if args.snapshot {
                let params = RietkerkParams {
                    t_total: cfg.grid.t_total,
                    dt: cfg.grid.dt,
                    length: cfg.grid.length(),
                    dl: cfg.grid.dl,
                    ..RietkerkParams::default()
                };
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let init = random_initial_state(cfg.grid.cells, cfg.grid.dl, &mut rng);
                io::write_rietkerk_snapshot(out, "initial", &init).map_err(data_err)?;
                let fin = integrate_rietkerk(&params, &init).map_err(data_err)?;
                if let RietkerkOutcome::Extinct { step, .. } = &fin {
                    println!("snapshot run went extinct at step {step}");
                }
                io::write_rietkerk_snapshot(out, "final", fin.state()).map_err(data_err)?;
            }
            json!({
                "config": cfg,
                "exclusions": {"attempted": r.attempted, "extinct": r.extinct, "blowups": r.blowups},
            })
        }
    };
    let mut meta = meta;
    meta["schema_version"] = json!(SCHEMA_VERSION);
    meta["experiment"] = json!(format!("{:?}", args.name).to_lowercase());
    meta["seed"] = json!(seed);
    meta["threads"] = json!(threads);
    meta["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    write_json(&out.join("metadata.json"), &meta)?;
    Ok(code)
}
