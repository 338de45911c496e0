//! Base-unit systems, unit expressions, dimensioned quantities and the
//! rescaling group `(R_{>0})^k` acting on them.
//!
//! Every exponent vector is relative to the order in which the base units
//! were declared; two systems with the same names in a different order are
//! different systems.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer exponents over the `k` base units of a system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<i32>);

impl UnitVector {
    pub fn new(exps: Vec<i32>) -> Self {
        UnitVector(exps)
    }

    pub fn zeros(k: usize) -> Self {
        UnitVector(vec![0; k])
    }

    pub fn exps(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn checked_add(&self, other: &UnitVector) -> Result<UnitVector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::ExponentOverflow))
            .collect::<Result<Vec<_>>>()
            .map(UnitVector)
    }

    pub fn checked_sub(&self, other: &UnitVector) -> Result<UnitVector> {
        self.checked_add(&other.checked_scale(-1)?)
    }

    pub fn checked_scale(&self, factor: i32) -> Result<UnitVector> {
        self.0
            .iter()
            .map(|a| a.checked_mul(factor).ok_or(Error::ExponentOverflow))
            .collect::<Result<Vec<_>>>()
            .map(UnitVector)
    }
}

impl From<Vec<i32>> for UnitVector {
    fn from(v: Vec<i32>) -> Self {
        UnitVector(v)
    }
}

impl fmt::Display for UnitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

/// SI derived units, written over the SI base names they need.
const SI_ALIASES: &[(&str, &[(&str, i32)])] = &[
    ("N", &[("kg", 1), ("m", 1), ("s", -2)]),
    ("J", &[("kg", 1), ("m", 2), ("s", -2)]),
    ("Pa", &[("kg", 1), ("m", -1), ("s", -2)]),
    ("W", &[("kg", 1), ("m", 2), ("s", -3)]),
    ("V", &[("kg", 1), ("m", 2), ("s", -3), ("A", -1)]),
    ("Hz", &[("s", -1)]),
];

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `name^int` into its parts. A bare name has exponent 1.
pub(crate) fn split_factor(token: &str) -> Result<(&str, i32)> {
    let (name, exp) = match token.split_once('^') {
        Some((name, exp)) => {
            let valid = {
                let digits = exp.strip_prefix('-').unwrap_or(exp);
                !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
            };
            if !valid {
                return Err(Error::MalformedExponent(token.to_string()));
            }
            let exp: i32 = exp
                .parse()
                .map_err(|_| Error::MalformedExponent(token.to_string()))?;
            (name, exp)
        }
        None => (token, 1),
    };
    if !is_identifier(name) {
        return Err(Error::MalformedToken(token.to_string()));
    }
    Ok((name, exp))
}

/// Formats `(name, exponent)` pairs in the `name^int` grammar; `"1"` when empty.
pub(crate) fn format_factors<'a>(factors: impl IntoIterator<Item = (&'a str, i32)>) -> String {
    let parts: Vec<String> = factors
        .into_iter()
        .filter(|(_, e)| *e != 0)
        .map(|(n, e)| if e == 1 { n.to_string() } else { format!("{n}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join(" ")
    }
}

/// An ordered list of base units plus named aliases for derived units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseUnitSystem {
    names: Vec<String>,
    aliases: BTreeMap<String, UnitVector>,
}

impl BaseUnitSystem {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if !is_identifier(n) {
                return Err(Error::InvalidBaseUnit(n.to_string()));
            }
            if out.iter().any(|m| m == n) {
                return Err(Error::DuplicateBaseUnit(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(BaseUnitSystem {
            names: out,
            aliases: BTreeMap::new(),
        })
    }

    /// Same as [`BaseUnitSystem::new`] with every SI alias whose base units are present.
    pub fn with_si_aliases<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut sys = Self::new(names)?;
        for (alias, parts) in SI_ALIASES {
            if sys.index_of(alias).is_some() {
                continue;
            }
            let mut u = vec![0; sys.k()];
            let mut ok = true;
            for (base, e) in *parts {
                match sys.index_of(base) {
                    Some(j) => u[j] = *e,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                sys.aliases.insert(alias.to_string(), UnitVector(u));
            }
        }
        Ok(sys)
    }

    /// SI mechanics plus temperature: `kg m s K`.
    pub fn si_mechanical() -> Self {
        Self::with_si_aliases(&["kg", "m", "s", "K"]).expect("static names are valid")
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn aliases(&self) -> &BTreeMap<String, UnitVector> {
        &self.aliases
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn add_alias(&mut self, name: &str, units: UnitVector) -> Result<()> {
        if !is_identifier(name) {
            return Err(Error::InvalidBaseUnit(name.to_string()));
        }
        if self.index_of(name).is_some() {
            return Err(Error::DuplicateBaseUnit(name.to_string()));
        }
        if units.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: units.len(),
            });
        }
        self.aliases.insert(name.to_string(), units);
        Ok(())
    }

    /// Registers an alias given as a unit expression over this system.
    pub fn add_alias_expr(&mut self, name: &str, expr: &str) -> Result<()> {
        let u = self.parse(expr)?;
        self.add_alias(name, u)
    }

    pub fn zero(&self) -> UnitVector {
        UnitVector::zeros(self.k())
    }

    /// Parses `expr := factor (SP factor)* | "1" | ""` with `factor := NAME ("^" INT)?`.
    pub fn parse(&self, expr: &str) -> Result<UnitVector> {
        let expr = expr.trim();
        let mut acc = self.zero();
        if expr.is_empty() || expr == "1" {
            return Ok(acc);
        }
        for token in expr.split_whitespace() {
            let (name, exp) = split_factor(token)?;
            let base = if let Some(j) = self.index_of(name) {
                let mut u = vec![0; self.k()];
                u[j] = 1;
                UnitVector(u)
            } else if let Some(u) = self.aliases.get(name) {
                u.clone()
            } else {
                return Err(Error::UnknownUnit(name.to_string()));
            };
            acc = acc.checked_add(&base.checked_scale(exp)?)?;
        }
        Ok(acc)
    }

    /// Renders a unit vector over the base names only, e.g. `kg m^2 s^-2`.
    pub fn format(&self, u: &UnitVector) -> String {
        format_factors(
            self.names
                .iter()
                .map(String::as_str)
                .zip(u.exps().iter().copied()),
        )
    }
}

/// A real value tagged with its unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub units: UnitVector,
}

impl Quantity {
    pub fn new(value: f64, units: UnitVector) -> Self {
        Quantity { value, units }
    }

    pub fn dimensionless(value: f64, k: usize) -> Self {
        Quantity::new(value, UnitVector::zeros(k))
    }

    /// Multiplication by a dimensionless real.
    pub fn scale(&self, alpha: f64) -> Quantity {
        Quantity::new(alpha * self.value, self.units.clone())
    }

    pub fn add(&self, other: &Quantity) -> Result<Quantity> {
        if self.units != other.units {
            return Err(Error::UnitMismatch(self.units.clone(), other.units.clone()));
        }
        Ok(Quantity::new(self.value + other.value, self.units.clone()))
    }

    pub fn mul(&self, other: &Quantity) -> Result<Quantity> {
        Ok(Quantity::new(
            self.value * other.value,
            self.units.checked_add(&other.units)?,
        ))
    }

    pub fn pow(&self, gamma: i32) -> Result<Quantity> {
        if gamma < 0 && self.value == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Quantity::new(
            self.value.powi(gamma),
            self.units.checked_scale(gamma)?,
        ))
    }
}

/// An element of the rescaling group; component `j` rescales base unit `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement(Vec<f64>);

impl GroupElement {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::NonPositiveScale);
        }
        Ok(GroupElement(g))
    }

    pub fn identity(k: usize) -> Self {
        GroupElement(vec![1.0; k])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// `prod_j g_j^{-u_j}`: the factor by which a value with units `u` changes.
    pub fn factor(&self, u: &UnitVector) -> f64 {
        debug_assert_eq!(u.len(), self.0.len());
        self.0
            .iter()
            .zip(u.exps())
            .map(|(g, &e)| g.powi(-e))
            .product()
    }
}

/// Re-expresses `x` in the rescaled units; the physical quantity is unchanged.
pub fn rescale(g: &GroupElement, x: &Quantity) -> Quantity {
    Quantity::new(g.factor(&x.units) * x.value, x.units.clone())
}
