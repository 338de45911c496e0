//! Feature lists for the springy double pendulum: the dimensionless inputs
//! and the energy scaling factors, as monomials over a declared spec.
//! Only unit bookkeeping lives here; there is no integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot_name, norm_name, scalarize, NamedQuantity, ScalarizeRules, VectorFeature};
use crate::pi::{FeatureDescriptor, FeatureSpec, Monomial};
use crate::units::{BaseUnitSystem, UnitVector};

pub const SCALARS: [(&str, &str); 6] = [
    ("m1", "kg"),
    ("m2", "kg"),
    ("k_s1", "kg s^-2"),
    ("k_s2", "kg s^-2"),
    ("L1", "m"),
    ("L2", "m"),
];

/// `dq = q2 - q1`. `q2` itself is only needed for its norm and dot products.
pub const VECTORS: [(&str, &str); 6] = [
    ("g", "m s^-2"),
    ("p1", "kg m s^-1"),
    ("p2", "kg m s^-1"),
    ("q1", "m"),
    ("q2", "m"),
    ("dq", "m"),
];

/// The vector set whose normalized inner products are inputs.
pub const INNER_PRODUCT_SET: [&str; 5] = ["g", "p1", "p2", "q1", "dq"];

pub fn double_pendulum_system() -> BaseUnitSystem {
    BaseUnitSystem::new(&["kg", "m", "s"]).expect("static names")
}

/// Scalars, then all vector norms, then all pairwise dot products.
pub fn double_pendulum_spec() -> FeatureSpec {
    let sys = double_pendulum_system();
    let u = |e: &str| sys.parse(e).expect("static expressions");
    let scalars: Vec<NamedQuantity> = SCALARS.iter().map(|(n, e)| NamedQuantity::new(n, 1.0, u(e))).collect();
    let vectors: Vec<VectorFeature> = VECTORS
        .iter()
        .map(|(n, e)| VectorFeature::new(n, [1.0, 0.0, 0.0], u(e)))
        .collect();
    let rules = ScalarizeRules {
        dots_allow_negative: true,
        ..ScalarizeRules::default()
    };
    let feats = scalarize(&scalars, &vectors, &rules).expect("distinct names");
    FeatureSpec::new(sys, feats.iter().map(FeatureDescriptor::from).collect()).expect("valid spec")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub label: String,
    pub monomial: Monomial,
    /// True when the listed feature carries a square root and the monomial
    /// is its square.
    pub squared: bool,
}

fn dot_feature(a: &str, b: &str) -> String {
    if a == b {
        return format!("{}^2", norm_name(a));
    }
    let pos = |v: &str| VECTORS.iter().position(|(n, _)| *n == v).expect("known vector");
    if pos(a) < pos(b) {
        dot_name(a, b)
    } else {
        dot_name(b, a)
    }
}

fn fixture(spec: &FeatureSpec, label: String, expr: &str, squared: bool, target: &UnitVector) -> Result<Fixture> {
    let monomial = Monomial::parse(expr, spec)?;
    let units = monomial.units(spec)?;
    if &units != target {
        return Err(Error::UnitMismatch(target.clone(), units));
    }
    Ok(Fixture {
        label,
        monomial,
        squared,
    })
}

/// The listed dimensionless inputs: 6 ratios, 10 normalized inner
/// products and 6 per pendulum, two of them squared.
pub fn dimensionless_fixtures(spec: &FeatureSpec) -> Result<Vec<Fixture>> {
    let zero = spec.system.zero();
    let mut out = Vec::new();
    for (a, b) in [("m1", "m2"), ("k_s1", "k_s2"), ("L1", "L2")] {
        out.push(fixture(spec, format!("{a}/{b}"), &format!("{a} {b}^-1"), false, &zero)?);
        out.push(fixture(spec, format!("{b}/{a}"), &format!("{b} {a}^-1"), false, &zero)?);
    }
    let set = INNER_PRODUCT_SET;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let (a, b) = (set[i], set[j]);
            let expr = format!("{} {}^-1 {}^-1", dot_feature(a, b), norm_name(a), norm_name(b));
            out.push(fixture(spec, format!("{a}.{b}/(|{a}||{b}|)"), &expr, false, &zero)?);
        }
    }
    for i in ["1", "2"] {
        let (m, k, l, q, p) = (
            format!("m{i}"),
            format!("k_s{i}"),
            format!("L{i}"),
            norm_name(&format!("q{i}")),
            norm_name(&format!("p{i}")),
        );
        let g = norm_name("g");
        let rows = [
            (format!("{m}|g|/({k}{l})"), format!("{m} {g} {k}^-1 {l}^-1"), false),
            (format!("{k}{l}/({m}|g|)"), format!("{k} {l} {m}^-1 {g}^-1"), false),
            (format!("|q{i}|/{l}"), format!("{q} {l}^-1"), false),
            (format!("|q{i}|^2/{l}^2"), format!("{q}^2 {l}^-2"), false),
            (format!("|p{i}|/(sqrt({m}{k}){l})"), format!("{p}^2 {m}^-1 {k}^-1 {l}^-2"), true),
            (format!("|p{i}|^2/({m}{k}{l}^2)"), format!("{p}^2 {m}^-1 {k}^-1 {l}^-2"), false),
        ];
        for (label, expr, sq) in rows {
            out.push(fixture(spec, label, &expr, sq, &zero)?);
        }
    }
    Ok(out)
}

/// The 26 energy scaling factors.
pub fn energy_fixtures(spec: &FeatureSpec) -> Result<Vec<Fixture>> {
    let energy = spec.system.parse("kg m^2 s^-2")?;
    let mut out = Vec::new();
    let pairs = [("1", "1"), ("1", "2"), ("2", "2")];
    for r in ["1", "2"] {
        for (i, j) in pairs {
            let expr = if i == j {
                format!("k_s{r} L{i}^2")
            } else {
                format!("k_s{r} L{i} L{j}")
            };
            out.push(fixture(spec, format!("k_s{r} L{i} L{j}"), &expr, false, &energy)?);
        }
    }
    for i in ["1", "2"] {
        for j in ["1", "2"] {
            out.push(fixture(spec, format!("m{i} L{j} |g|"), &format!("m{i} L{j} norm_g"), false, &energy)?);
        }
    }
    for i in ["1", "2"] {
        for j in ["1", "2"] {
            let expr = format!("m{i} {}", dot_feature("g", &format!("q{j}")));
            out.push(fixture(spec, format!("m{i} g.q{j}"), &expr, false, &energy)?);
        }
    }
    for r in ["1", "2"] {
        for (i, j) in pairs {
            let expr = format!("{} m{r}^-1", dot_feature(&format!("p{i}"), &format!("p{j}")));
            out.push(fixture(spec, format!("p{i}.p{j}/m{r}"), &expr, false, &energy)?);
        }
    }
    for r in ["1", "2"] {
        for (i, j) in pairs {
            let expr = format!("k_s{r} {}", dot_feature(&format!("q{i}"), &format!("q{j}")));
            out.push(fixture(spec, format!("k_s{r} q{i}.q{j}"), &expr, false, &energy)?);
        }
    }
    Ok(out)
}

/// Both fixture lists over [`double_pendulum_spec`].
pub fn double_pendulum_feature_fixtures() -> Result<(Vec<Fixture>, Vec<Fixture>)> {
    let spec = double_pendulum_spec();
    Ok((dimensionless_fixtures(&spec)?, energy_fixtures(&spec)?))
}
