//! Coordinate-free scalarization of scalar and 3-vector inputs into
//! dimensional scalar features: raw scalars, norms, and pairwise dot products.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Quantity, UnitVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedQuantity {
    pub name: String,
    pub quantity: Quantity,
}

impl NamedQuantity {
    pub fn new(name: &str, value: f64, units: UnitVector) -> Self {
        NamedQuantity {
            name: name.to_string(),
            quantity: Quantity::new(value, units),
        }
    }
}

/// A physical 3-vector; all components share one unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFeature {
    pub name: String,
    pub components: [f64; 3],
    pub units: UnitVector,
}

impl VectorFeature {
    pub fn new(name: &str, components: [f64; 3], units: UnitVector) -> Self {
        VectorFeature {
            name: name.to_string(),
            components,
            units,
        }
    }

    pub fn dot(&self, other: &VectorFeature) -> f64 {
        dot3(&self.components, &other.components)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFeature {
    pub name: String,
    pub value: f64,
    pub units: UnitVector,
    pub degree_weight: u32,
    pub allow_negative_exponent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarizeRules {
    pub include_scalars: bool,
    pub include_norms: bool,
    pub include_dots: bool,
    /// Default sign permission for dot products.
    pub dots_allow_negative: bool,
    /// Unordered vector-name pairs whose dot product flips the default above.
    pub dot_sign_exceptions: BTreeSet<(String, String)>,
}

impl Default for ScalarizeRules {
    fn default() -> Self {
        ScalarizeRules {
            include_scalars: true,
            include_norms: true,
            include_dots: true,
            dots_allow_negative: false,
            dot_sign_exceptions: BTreeSet::new(),
        }
    }
}

impl ScalarizeRules {
    pub fn with_dot_exception(mut self, a: &str, b: &str) -> Self {
        self.dot_sign_exceptions.insert(ordered_pair(a, b));
        self
    }

    fn dot_allows_negative(&self, a: &str, b: &str) -> bool {
        self.dots_allow_negative ^ self.dot_sign_exceptions.contains(&ordered_pair(a, b))
    }
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn norm_name(v: &str) -> String {
    format!("norm_{v}")
}

pub fn dot_name(a: &str, b: &str) -> String {
    format!("{a}_dot_{b}")
}

/// Produces, in order: raw scalars (input order), norms (vector order),
/// then dot products over distinct pairs `(i < j)` of the vector list.
pub fn scalarize(
    scalars: &[NamedQuantity],
    vectors: &[VectorFeature],
    rules: &ScalarizeRules,
) -> Result<Vec<ScalarFeature>> {
    let mut out = Vec::new();
    if rules.include_scalars {
        for s in scalars {
            out.push(ScalarFeature {
                name: s.name.clone(),
                value: s.quantity.value,
                units: s.quantity.units.clone(),
                degree_weight: 1,
                allow_negative_exponent: true,
            });
        }
    }
    if rules.include_norms {
        for v in vectors {
            out.push(ScalarFeature {
                name: norm_name(&v.name),
                value: v.norm(),
                units: v.units.clone(),
                degree_weight: 1,
                allow_negative_exponent: true,
            });
        }
    }
    if rules.include_dots {
        for (i, a) in vectors.iter().enumerate() {
            for b in &vectors[i + 1..] {
                out.push(ScalarFeature {
                    name: dot_name(&a.name, &b.name),
                    value: a.dot(b),
                    units: a.units.checked_add(&b.units)?,
                    degree_weight: 2,
                    allow_negative_exponent: rules.dot_allows_negative(&a.name, &b.name),
                });
            }
        }
    }
    let mut seen = BTreeSet::new();
    for f in &out {
        if !seen.insert(f.name.as_str()) {
            return Err(Error::DuplicateName(f.name.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(v: &[i32]) -> UnitVector {
        UnitVector::new(v.to_vec())
    }

    fn pendulum_inputs() -> (Vec<NamedQuantity>, Vec<VectorFeature>) {
        (
            vec![
                NamedQuantity::new("m", 1.5, u(&[1, 0, 0])),
                NamedQuantity::new("k_s", 1.2, u(&[1, 0, -2])),
                NamedQuantity::new("L", 1.1, u(&[0, 1, 0])),
            ],
            vec![
                VectorFeature::new("g", [0.0, 0.0, -1.0], u(&[0, 1, -2])),
                VectorFeature::new("p", [0.3, -0.4, 0.5], u(&[1, 1, -1])),
                VectorFeature::new("q", [1.0, 0.5, -0.7], u(&[0, 1, 0])),
            ],
        )
    }

    #[test]
    fn pendulum_has_nine_scalars() {
        let (s, v) = pendulum_inputs();
        let f = scalarize(&s, &v, &ScalarizeRules::default()).unwrap();
        let names: Vec<_> = f.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "m", "k_s", "L", "norm_g", "norm_p", "norm_q", "g_dot_p", "g_dot_q", "p_dot_q"
            ]
        );
        assert_eq!(f[6].units, u(&[1, 2, -3]));
        assert_eq!(f[6].degree_weight, 2);
        assert!(!f[6].allow_negative_exponent);
        assert_eq!(f[4].units, u(&[1, 1, -1]));
        assert_eq!(f[7].value, 0.7);
    }

    #[test]
    fn scalars_only() {
        let (s, _) = pendulum_inputs();
        let f = scalarize(&s[..2], &[], &ScalarizeRules::default()).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.iter().all(|f| f.degree_weight == 1));
    }

    #[test]
    fn single_vector_has_no_dots() {
        let (_, v) = pendulum_inputs();
        let f = scalarize(&[], &v[1..2], &ScalarizeRules::default()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].units, v[1].units);
        assert!((f[0].value - v[1].norm()).abs() < 1e-15);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let (mut s, v) = pendulum_inputs();
        s.push(NamedQuantity::new("norm_g", 1.0, u(&[0, 1, -2])));
        assert_eq!(
            scalarize(&s, &v, &ScalarizeRules::default()),
            Err(Error::DuplicateName("norm_g".into()))
        );
    }

    #[test]
    fn sign_exception_flips_one_pair() {
        let (s, v) = pendulum_inputs();
        let rules = ScalarizeRules::default().with_dot_exception("q", "g");
        let f = scalarize(&s, &v, &rules).unwrap();
        let flags: Vec<_> = f[6..].iter().map(|f| f.allow_negative_exponent).collect();
        assert_eq!(flags, [false, true, false]);
    }
}
