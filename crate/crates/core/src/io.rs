//! File formats: JSON spec files, CSV datasets with a units header row,
//! model and metadata JSON, and flat binary field snapshots.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pi::{FeatureDescriptor, FeatureSpec, MonomialRecord};
use crate::regress::{Dataset, RegressionModel};
use crate::sims::rietkerk::RietkerkState;
use crate::units::{split_factor, BaseUnitSystem, UnitVector};

fn default_weight() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub units: String,
    #[serde(default = "default_weight")]
    pub degree_weight: u32,
    #[serde(default = "default_true")]
    pub allow_negative_exponent: bool,
}

/// On-disk feature spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub base_units: Vec<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    pub features: Vec<FeatureEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_units: Option<String>,
}

impl SpecFile {
    pub fn system(&self) -> Result<BaseUnitSystem> {
        let mut sys = BaseUnitSystem::new(&self.base_units)?;
        for (name, expr) in &self.aliases {
            sys.add_alias_expr(name, expr)?;
        }
        Ok(sys)
    }

    pub fn to_spec(&self) -> Result<FeatureSpec> {
        let sys = self.system()?;
        let feats = self
            .features
            .iter()
            .map(|f| {
                let mut d = FeatureDescriptor::new(&f.name, sys.parse(&f.units)?).weight(f.degree_weight);
                d.allow_negative_exponent = f.allow_negative_exponent;
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureSpec::new(sys, feats)
    }

    pub fn label_units(&self) -> Result<Option<UnitVector>> {
        self.label_units
            .as_deref()
            .map(|e| self.system()?.parse(e))
            .transpose()
    }

    pub fn from_spec(spec: &FeatureSpec, label_units: Option<&UnitVector>) -> Self {
        let sys = &spec.system;
        SpecFile {
            base_units: sys.names().to_vec(),
            aliases: sys
                .aliases()
                .iter()
                .map(|(n, u)| (n.clone(), sys.format(u)))
                .collect(),
            features: spec
                .features()
                .iter()
                .map(|f| FeatureEntry {
                    name: f.name.clone(),
                    units: sys.format(&f.units),
                    degree_weight: f.degree_weight,
                    allow_negative_exponent: f.allow_negative_exponent,
                })
                .collect(),
            label_units: label_units.map(|u| sys.format(u)),
        }
    }
}

pub fn read_spec_file(path: &Path) -> Result<SpecFile> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

pub const LABEL_COLUMN: &str = "label";

/// Writes `names..., label` then a row of unit expressions, then the data.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let sys = &data.spec.system;
    let mut names: Vec<String> = data.spec.names().iter().map(|s| s.to_string()).collect();
    names.push(LABEL_COLUMN.into());
    w.write_record(&names)?;
    let mut units: Vec<String> = data.spec.features().iter().map(|f| sys.format(&f.units)).collect();
    units.push(sys.format(&data.label_units));
    w.write_record(&units)?;
    for (row, label) in data.rows.iter().zip(&data.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        rec.push(format!("{label:e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Base units in order of first appearance across the unit expressions.
fn infer_system(exprs: &[String]) -> Result<BaseUnitSystem> {
    let mut names: Vec<&str> = Vec::new();
    for e in exprs {
        let e = e.trim();
        if e.is_empty() || e == "1" {
            continue;
        }
        for tok in e.split_whitespace() {
            let (name, _) = split_factor(tok)?;
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    BaseUnitSystem::new(&names)
}

/// Reads a units-header CSV. With a spec, column names and units must match
/// it exactly; without one, base units are inferred from the header.
pub fn read_dataset_csv(path: &Path, spec: Option<&FeatureSpec>) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut records = r.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec?.iter().map(|s| s.trim().to_string()).collect(),
        None => return Err(Error::InvalidInput("empty CSV".into())),
    };
    let units: Vec<String> = match records.next() {
        Some(rec) => rec?.iter().map(|s| s.trim().to_string()).collect(),
        None => return Err(Error::InvalidInput("CSV is missing its units row".into())),
    };
    if header.len() < 2 || header.last().map(String::as_str) != Some(LABEL_COLUMN) {
        return Err(Error::InvalidInput(format!(
            "last CSV column must be `{LABEL_COLUMN}`"
        )));
    }
    if units.len() != header.len() {
        return Err(Error::InvalidInput("units row length differs from header".into()));
    }
    let d = header.len() - 1;
    let (spec, label_units) = match spec {
        Some(s) => {
            if s.names() != header[..d].iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::InvalidInput("CSV columns do not match the spec".into()));
            }
            for (f, e) in s.features().iter().zip(&units) {
                let u = s.system.parse(e)?;
                if u != f.units {
                    return Err(Error::UnitMismatch(f.units.clone(), u));
                }
            }
            (s.clone(), s.system.parse(&units[d])?)
        }
        None => {
            let sys = infer_system(&units)?;
            let feats: Vec<(&str, &str)> = header[..d]
                .iter()
                .zip(&units)
                .map(|(n, u)| (n.as_str(), u.as_str()))
                .collect();
            let lu = sys.parse(&units[d])?;
            (FeatureSpec::from_exprs(sys, &feats)?, lu)
        }
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (t, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::InvalidInput(format!("data row {t} has {} fields", rec.len())));
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.trim().parse::<f64>().map_err(|_| Error::AtCell {
                    row: t,
                    col: j,
                    source: Box::new(Error::InvalidInput(format!("`{s}` is not a number"))),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        labels.push(vals[d]);
        rows.push(vals[..d].to_vec());
    }
    Dataset::new(spec, rows, labels, label_units)
}

/// Columns `predicted, true, residual`.
pub fn write_predictions_csv(path: &Path, predicted: &[f64], truth: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["predicted", "true", "residual"])?;
    for (p, t) in predicted.iter().zip(truth) {
        w.write_record([format!("{p:e}"), format!("{t:e}"), format!("{:e}", p - t)])?;
    }
    w.flush()?;
    Ok(())
}

/// A model in portable form: monomials and decoder as exponent records plus
/// readable strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub spec: SpecFile,
    pub monomials: Vec<MonomialRecord>,
    pub readable: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub decoder: MonomialRecord,
    pub decoder_readable: String,
}

impl ModelFile {
    pub fn new(model: &RegressionModel, spec: &FeatureSpec) -> Result<Self> {
        Ok(ModelFile {
            spec: SpecFile::from_spec(spec, Some(&model.label_units)),
            monomials: model
                .monomials
                .iter()
                .map(|m| m.to_record(spec))
                .collect::<Result<_>>()?,
            readable: model.monomials.iter().map(|m| m.display(spec).to_string()).collect(),
            weights: model.weights.clone(),
            intercept: model.intercept,
            decoder: model.decoder.to_record(spec)?,
            decoder_readable: model.decoder.display(spec).to_string(),
        })
    }

    pub fn to_model(&self) -> Result<(RegressionModel, FeatureSpec)> {
        let spec = self.spec.to_spec()?;
        let mut model = RegressionModel::new(
            &spec,
            self.monomials.iter().cloned().map(Into::into).collect(),
            self.weights.clone(),
            self.decoder.clone().into(),
        )?;
        model.intercept = self.intercept;
        Ok((model, spec))
    }
}

/// Shape descriptor written next to a raw field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotShape {
    pub fields: Vec<String>,
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub byte_order: String,
    pub dl: f64,
    pub t: f64,
}

/// Writes `u, w, v` as consecutive little-endian f64 row-major grids to
/// `<stem>.bin` and the shape to `<stem>.json`.
pub fn write_rietkerk_snapshot(dir: &Path, stem: &str, state: &RietkerkState) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.bin")))?);
    for field in [&state.u, &state.w, &state.v] {
        for x in field {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    let shape = SnapshotShape {
        fields: vec!["u".into(), "w".into(), "v".into()],
        rows: state.n,
        cols: state.n,
        dtype: "f64".into(),
        byte_order: "little".into(),
        dl: state.dl,
        t: state.t,
    };
    write_json(&dir.join(format!("{stem}.json")), &shape)
}

pub fn read_rietkerk_snapshot(dir: &Path, stem: &str) -> Result<RietkerkState> {
    let shape: SnapshotShape = read_json(&dir.join(format!("{stem}.json")))?;
    let mut bytes = Vec::new();
    File::open(dir.join(format!("{stem}.bin")))?.read_to_end(&mut bytes)?;
    let cells = shape.rows * shape.cols;
    if shape.rows != shape.cols || bytes.len() != 3 * cells * 8 {
        return Err(Error::InvalidInput("snapshot size does not match its shape".into()));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(RietkerkState {
        n: shape.rows,
        u: vals[..cells].to_vec(),
        w: vals[cells..2 * cells].to_vec(),
        v: vals[2 * cells..].to_vec(),
        dl: shape.dl,
        t: shape.t,
    })
}
