//! Dimensionless featurization and decoding with rational monomials.
//!
//! A [`FeatureSpec`] fixes `d` named features with unit vectors over a base
//! system. Integer exponent vectors `alpha` over those features are
//! rational (Laurent) monomials `prod_i x_i^alpha_i`; their units are
//! `sum_i alpha_i u_i`. Zero-units monomials are invariant under every
//! rescaling, and a monomial with the label's units serves as a decoder.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScalarFeature;
use crate::intlinalg::{self, IntMatrix};
use crate::units::{self, BaseUnitSystem, Quantity, UnitVector};

/// Default ceiling on the number of exponent tuples an enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub units: UnitVector,
    pub degree_weight: u32,
    pub allow_negative_exponent: bool,
}

impl FeatureDescriptor {
    pub fn new(name: &str, units: UnitVector) -> Self {
        FeatureDescriptor {
            name: name.to_string(),
            units,
            degree_weight: 1,
            allow_negative_exponent: true,
        }
    }

    pub fn weight(mut self, w: u32) -> Self {
        self.degree_weight = w;
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.allow_negative_exponent = false;
        self
    }
}

impl From<&ScalarFeature> for FeatureDescriptor {
    fn from(f: &ScalarFeature) -> Self {
        FeatureDescriptor {
            name: f.name.clone(),
            units: f.units.clone(),
            degree_weight: f.degree_weight,
            allow_negative_exponent: f.allow_negative_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub system: BaseUnitSystem,
    features: Vec<FeatureDescriptor>,
}

impl FeatureSpec {
    pub fn new(system: BaseUnitSystem, features: Vec<FeatureDescriptor>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptySpec);
        }
        let mut seen = BTreeSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::DuplicateName(f.name.clone()));
            }
            if !units::is_identifier(&f.name) {
                return Err(Error::InvalidInput(format!(
                    "feature name `{}` is not an identifier",
                    f.name
                )));
            }
            if f.units.len() != system.k() {
                return Err(Error::DimensionMismatch {
                    expected: system.k(),
                    found: f.units.len(),
                });
            }
            if f.degree_weight == 0 {
                return Err(Error::ZeroDegreeWeight(f.name.clone()));
            }
        }
        Ok(FeatureSpec { system, features })
    }

    /// Builds a spec from `(name, unit expression)` pairs, all weight 1 and sign-free.
    pub fn from_exprs(system: BaseUnitSystem, features: &[(&str, &str)]) -> Result<Self> {
        let descs = features
            .iter()
            .map(|(n, e)| Ok(FeatureDescriptor::new(n, system.parse(e)?)))
            .collect::<Result<Vec<_>>>()?;
        FeatureSpec::new(system, descs)
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn d(&self) -> usize {
        self.features.len()
    }

    pub fn k(&self) -> usize {
        self.system.k()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// The `d x k` matrix whose rows are the feature unit vectors.
    pub fn units_matrix(&self) -> IntMatrix {
        let rows: Vec<Vec<i64>> = self
            .features
            .iter()
            .map(|f| f.units.exps().iter().map(|&e| i64::from(e)).collect())
            .collect();
        IntMatrix::from_rows(&rows, self.k()).expect("rows share the system's k")
    }

    pub fn rank(&self) -> Result<usize> {
        intlinalg::rank(&self.units_matrix())
    }
}

/// A rational monomial `coeff * prod_i x_i^exps_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exps: Vec<i32>,
    pub coeff: f64,
}

impl Monomial {
    pub fn new(exps: Vec<i32>) -> Self {
        Monomial { exps, coeff: 1.0 }
    }

    pub fn constant(d: usize) -> Self {
        Monomial::new(vec![0; d])
    }

    pub fn with_coeff(mut self, coeff: f64) -> Self {
        self.coeff = coeff;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// `max_i weight_i * |alpha_i|`.
    pub fn degree(&self, spec: &FeatureSpec) -> u32 {
        self.exps
            .iter()
            .zip(spec.features())
            .map(|(&e, f)| f.degree_weight * e.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// `sum_i |alpha_i|`.
    pub fn total_degree(&self) -> u32 {
        self.exps.iter().map(|e| e.unsigned_abs()).sum()
    }

    pub fn units(&self, spec: &FeatureSpec) -> Result<UnitVector> {
        if self.exps.len() != spec.d() {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                found: self.exps.len(),
            });
        }
        let mut acc = spec.system.zero();
        for (&e, f) in self.exps.iter().zip(spec.features()) {
            if e != 0 {
                acc = acc.checked_add(&f.units.checked_scale(e)?)?;
            }
        }
        Ok(acc)
    }

    pub fn is_dimensionless(&self, spec: &FeatureSpec) -> Result<bool> {
        Ok(self.units(spec)?.is_dimensionless())
    }

    pub fn inverse(&self) -> Monomial {
        Monomial {
            exps: self.exps.iter().map(|e| -e).collect(),
            coeff: 1.0 / self.coeff,
        }
    }

    /// Exponent-wise sum; coefficients multiply.
    pub fn times(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
            coeff: self.coeff * other.coeff,
        }
    }

    /// Parses `name^int` factors over the spec's feature names; `"1"` is the constant.
    pub fn parse(expr: &str, spec: &FeatureSpec) -> Result<Monomial> {
        let mut exps = vec![0i32; spec.d()];
        let expr = expr.trim();
        if expr.is_empty() || expr == "1" {
            return Ok(Monomial::new(exps));
        }
        for token in expr.split_whitespace() {
            let (name, e) = units::split_factor(token)?;
            let i = spec
                .index_of(name)
                .ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
            exps[i] = exps[i].checked_add(e).ok_or(Error::ExponentOverflow)?;
        }
        Ok(Monomial::new(exps))
    }

    pub fn display<'a>(&'a self, spec: &'a FeatureSpec) -> MonomialDisplay<'a> {
        MonomialDisplay { m: self, spec }
    }

    pub fn to_record(&self, spec: &FeatureSpec) -> Result<MonomialRecord> {
        Ok(MonomialRecord {
            exps: self.exps.clone(),
            coeff: self.coeff,
            degree: self.degree(spec),
            units: self.units(spec)?,
        })
    }
}

pub struct MonomialDisplay<'a> {
    m: &'a Monomial,
    spec: &'a FeatureSpec,
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = units::format_factors(
            self.spec
                .features()
                .iter()
                .map(|d| d.name.as_str())
                .zip(self.m.exps.iter().copied()),
        );
        if self.m.coeff == 1.0 {
            write!(f, "{body}")
        } else if body == "1" {
            write!(f, "{}", self.m.coeff)
        } else {
            write!(f, "{} {body}", self.m.coeff)
        }
    }
}

/// JSON shape of a monomial: `{"exps":[..],"coeff":x,"degree":n,"units":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialRecord {
    pub exps: Vec<i32>,
    pub coeff: f64,
    pub degree: u32,
    pub units: UnitVector,
}

impl From<MonomialRecord> for Monomial {
    fn from(r: MonomialRecord) -> Self {
        Monomial {
            exps: r.exps,
            coeff: r.coeff,
        }
    }
}

/// Lattice basis of the dimensionless monomials: `d - rank(U)` of them.
pub fn dimensionless_basis(spec: &FeatureSpec) -> Result<Vec<Monomial>> {
    intlinalg::nullspace_basis(&spec.units_matrix())?
        .into_iter()
        .map(|v| {
            v.into_iter()
                .map(|x| i32::try_from(x).map_err(|_| Error::ExponentOverflow))
                .collect::<Result<Vec<_>>>()
                .map(Monomial::new)
        })
        .collect()
}

/// Integer coordinates of `m` in `basis`, if it lies in their lattice.
pub fn lattice_coordinates(basis: &[Monomial], m: &Monomial) -> Result<Option<Vec<i64>>> {
    if basis.is_empty() {
        return Ok(m.is_constant().then(Vec::new));
    }
    let rows: Vec<Vec<i64>> = basis
        .iter()
        .map(|b| b.exps.iter().map(|&e| i64::from(e)).collect())
        .collect();
    let a = IntMatrix::from_rows(&rows, m.exps.len())?;
    let target: Vec<i64> = m.exps.iter().map(|&e| i64::from(e)).collect();
    intlinalg::solve_diophantine(&a, &target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateOptions {
    pub max_degree: u32,
    pub dimensionless_only: bool,
    /// Optional extra filter `sum_i |alpha_i| <= cap`.
    pub total_degree_cap: Option<u32>,
    pub cap: u128,
}

impl EnumerateOptions {
    pub fn new(max_degree: u32, dimensionless_only: bool) -> Self {
        EnumerateOptions {
            max_degree,
            dimensionless_only,
            total_degree_cap: None,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

fn exponent_ranges(spec: &FeatureSpec, max_degree: u32) -> Vec<(i32, i32)> {
    spec.features()
        .iter()
        .map(|f| {
            let hi = i32::try_from(max_degree / f.degree_weight).unwrap_or(i32::MAX);
            let lo = if f.allow_negative_exponent { -hi } else { 0 };
            (lo, hi)
        })
        .collect()
}

/// Product sweep over per-feature exponent ranges, keeping tuples whose
/// units equal `target` (or all tuples when `target` is `None`).
/// Output is lexicographic in the exponent vector.
fn sweep(
    spec: &FeatureSpec,
    max_degree: u32,
    target: Option<&UnitVector>,
    total_degree_cap: Option<u32>,
    cap: u128,
) -> Result<Vec<Monomial>> {
    let ranges = exponent_ranges(spec, max_degree);
    let count = ranges
        .iter()
        .try_fold(1u128, |acc, (lo, hi)| acc.checked_mul((hi - lo + 1) as u128))
        .unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let d = spec.d();
    let k = spec.k();
    let units: Vec<Vec<i64>> = spec
        .features()
        .iter()
        .map(|f| f.units.exps().iter().map(|&e| i64::from(e)).collect())
        .collect();
    let target: Option<Vec<i64>> = target.map(|t| t.exps().iter().map(|&e| i64::from(e)).collect());

    let mut out = Vec::new();
    let mut alpha: Vec<i32> = ranges.iter().map(|r| r.0).collect();
    let mut acc = vec![0i64; k];
    loop {
        let keep_units = match &target {
            None => true,
            Some(t) => {
                acc.iter_mut().for_each(|a| *a = 0);
                for (i, &e) in alpha.iter().enumerate() {
                    if e != 0 {
                        for j in 0..k {
                            acc[j] += i64::from(e) * units[i][j];
                        }
                    }
                }
                acc == *t
            }
        };
        let keep_total = total_degree_cap
            .is_none_or(|c| alpha.iter().map(|e| e.unsigned_abs()).sum::<u32>() <= c);
        if keep_units && keep_total {
            out.push(Monomial::new(alpha.clone()));
        }
        // odometer, last feature fastest
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if alpha[i] < ranges[i].1 {
                alpha[i] += 1;
                break;
            }
            alpha[i] = ranges[i].0;
        }
    }
}

/// All monomials with `degree <= max_degree` that honor each feature's sign
/// flag, optionally restricted to the dimensionless ones.
pub fn enumerate_monomials(spec: &FeatureSpec, opts: &EnumerateOptions) -> Result<Vec<Monomial>> {
    let zero = spec.system.zero();
    sweep(
        spec,
        opts.max_degree,
        opts.dimensionless_only.then_some(&zero),
        opts.total_degree_cap,
        opts.cap,
    )
}

/// Group-averaging projection on a single monomial: identity on
/// dimensionless monomials, zero on everything else.
pub fn reynolds_project(m: &Monomial, spec: &FeatureSpec) -> Result<Option<Monomial>> {
    Ok(m.is_dimensionless(spec)?.then(|| m.clone()))
}

/// Every monomial with units `target` and `degree <= max_degree`, ordered by
/// degree, then total degree, then exponent vector.
pub fn decoder_solutions(
    spec: &FeatureSpec,
    target: &UnitVector,
    max_degree: u32,
) -> Result<Vec<Monomial>> {
    decoder_solutions_capped(spec, target, max_degree, DEFAULT_ENUMERATION_CAP)
}

pub fn decoder_solutions_capped(
    spec: &FeatureSpec,
    target: &UnitVector,
    max_degree: u32,
    cap: u128,
) -> Result<Vec<Monomial>> {
    if target.len() != spec.k() {
        return Err(Error::DimensionMismatch {
            expected: spec.k(),
            found: target.len(),
        });
    }
    let b: Vec<i64> = target.exps().iter().map(|&e| i64::from(e)).collect();
    if intlinalg::solve_diophantine(&spec.units_matrix(), &b)?.is_none() {
        return Ok(Vec::new());
    }
    let mut sols = sweep(spec, max_degree, Some(target), None, cap)?;
    sols.sort_by_key(|m| (m.degree(spec), m.total_degree()));
    Ok(sols)
}

/// `x^n` by repeated squaring; negative `n` inverts the result.
pub fn pow_int(x: f64, n: i32) -> f64 {
    let mut base = x;
    let mut e = n.unsigned_abs();
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

pub fn evaluate_monomial(m: &Monomial, x: &[f64]) -> Result<f64> {
    if x.len() != m.exps.len() {
        return Err(Error::DimensionMismatch {
            expected: m.exps.len(),
            found: x.len(),
        });
    }
    let mut acc = m.coeff;
    for (i, (&e, &xi)) in m.exps.iter().zip(x).enumerate() {
        if e == 0 {
            continue;
        }
        if e < 0 && xi == 0.0 {
            return Err(Error::PoleAtZero(i));
        }
        acc *= pow_int(xi, e);
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(Error::NonFinite)
    }
}

/// `eta * decoder(x)`, carrying the decoder's units.
pub fn apply_decoder(dec: &Monomial, spec: &FeatureSpec, x: &[f64], eta: f64) -> Result<Quantity> {
    let scale = evaluate_monomial(dec, x)?;
    Ok(Quantity::new(eta * scale, dec.units(spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planck() -> FeatureSpec {
        FeatureSpec::from_exprs(
            BaseUnitSystem::si_mechanical(),
            &[("lambda", "m"), ("T", "K"), ("c", "m s^-1"), ("k_B", "kg m^2 s^-2 K^-1")],
        )
        .unwrap()
    }

    fn two_masses() -> FeatureSpec {
        FeatureSpec::from_exprs(BaseUnitSystem::si_mechanical(), &[("m1", "kg"), ("m2", "kg")])
            .unwrap()
    }

    fn springy() -> FeatureSpec {
        FeatureSpec::from_exprs(
            BaseUnitSystem::si_mechanical(),
            &[("m", "kg"), ("k_s", "kg s^-2"), ("L", "m"), ("norm_p", "kg m s^-1")],
        )
        .unwrap()
    }

    #[test]
    fn planck_has_no_dimensionless_features() {
        assert!(dimensionless_basis(&planck()).unwrap().is_empty());
    }

    #[test]
    fn two_masses_give_the_ratio() {
        let b = dimensionless_basis(&two_masses()).unwrap();
        assert_eq!(b, vec![Monomial::new(vec![1, -1])]);
    }

    #[test]
    fn degree_one_two_masses_enumeration() {
        let got = enumerate_monomials(&two_masses(), &EnumerateOptions::new(1, true)).unwrap();
        let exps: Vec<_> = got.iter().map(|m| m.exps.clone()).collect();
        // exhaustive over {-1,0,1}^2: only (a,-a) is massless
        assert_eq!(exps, vec![vec![-1, 1], vec![0, 0], vec![1, -1]]);
    }

    #[test]
    fn degree_zero_is_just_the_constant() {
        for spec in [planck(), two_masses(), springy()] {
            for dl in [true, false] {
                let got = enumerate_monomials(&spec, &EnumerateOptions::new(0, dl)).unwrap();
                assert_eq!(got, vec![Monomial::constant(spec.d())]);
            }
        }
    }

    #[test]
    fn enumeration_cap() {
        let mut opts = EnumerateOptions::new(3, false);
        opts.cap = 100;
        assert!(matches!(
            enumerate_monomials(&planck(), &opts),
            Err(Error::EnumerationTooLarge { count: 2401, cap: 100 })
        ));
    }

    #[test]
    fn total_degree_cap_filters() {
        let mut opts = EnumerateOptions::new(2, false);
        opts.total_degree_cap = Some(1);
        let got = enumerate_monomials(&two_masses(), &opts).unwrap();
        assert_eq!(got.len(), 5);
    }

    #[test]
    fn evaluates_the_dimensionless_momentum_monomial() {
        let spec = springy();
        let m = Monomial::parse("m k_s L^2 norm_p^-2", &spec).unwrap();
        assert!(m.is_dimensionless(&spec).unwrap());
        assert_eq!(m.degree(&spec), 2);
        assert_eq!(evaluate_monomial(&m, &[2.0, 3.0, 2.0, 4.0]).unwrap(), 1.5);
        assert_eq!(
            evaluate_monomial(&Monomial::constant(4), &[9.0, 0.0, -1.0, 5.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn poles_and_overflow() {
        let m = Monomial::new(vec![0, -1]);
        assert_eq!(evaluate_monomial(&m, &[1.0, 0.0]), Err(Error::PoleAtZero(1)));
        let big = Monomial::new(vec![40, 0]);
        assert_eq!(evaluate_monomial(&big, &[1e10, 1.0]), Err(Error::NonFinite));
    }

    #[test]
    fn pow_int_matches_powi() {
        for n in -7..=7 {
            for x in [0.5, 1.3, -2.0, 3.0] {
                let a = pow_int(x, n);
                let b = f64::powi(x, n);
                assert!((a - b).abs() <= 1e-14 * b.abs());
            }
        }
    }

    #[test]
    fn reynolds_projection() {
        let spec = springy();
        let dl = Monomial::parse("m k_s L^2 norm_p^-2", &spec).unwrap();
        assert_eq!(reynolds_project(&dl, &spec).unwrap(), Some(dl.clone()));
        let len = Monomial::parse("L", &spec).unwrap();
        assert_eq!(reynolds_project(&len, &spec).unwrap(), None);
        let one = Monomial::constant(4);
        assert_eq!(reynolds_project(&one, &spec).unwrap(), Some(one));
    }

    #[test]
    fn planck_decoder_is_unique() {
        let spec = planck();
        let v = spec.system.parse("kg m^-1 s^-3").unwrap();
        let sols = decoder_solutions(&spec, &v, 4).unwrap();
        assert_eq!(sols, vec![Monomial::new(vec![-4, 1, 1, 1])]);
        let q = apply_decoder(&sols[0], &spec, &[1.0, 1.0, 1.0, 1.0], 2.0).unwrap();
        assert_eq!(q, Quantity::new(2.0, v));
    }

    #[test]
    fn energy_decoders_include_spring_scale() {
        let spec = springy();
        let energy = spec.system.parse("J").unwrap();
        let sols = decoder_solutions(&spec, &energy, 2).unwrap();
        let ksl2 = Monomial::parse("k_s L^2", &spec).unwrap();
        assert!(sols.contains(&ksl2));
        for s in &sols {
            assert_eq!(s.units(&spec).unwrap(), energy);
        }
        let q = apply_decoder(&ksl2, &spec, &[1.0, 3.0, 2.0, 1.0], 0.5).unwrap();
        assert_eq!(q.value, 6.0);
        let zero = apply_decoder(&ksl2, &spec, &[1.0, 3.0, 2.0, 1.0], 0.0).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn zero_target_degree_zero() {
        let spec = springy();
        let sols = decoder_solutions(&spec, &spec.system.zero(), 0).unwrap();
        assert_eq!(sols, vec![Monomial::constant(4)]);
    }

    #[test]
    fn unreachable_target_has_no_decoder() {
        let spec = FeatureSpec::from_exprs(BaseUnitSystem::si_mechanical(), &[("area", "m^2")])
            .unwrap();
        let len = spec.system.parse("m").unwrap();
        assert!(decoder_solutions(&spec, &len, 4).unwrap().is_empty());
    }

    #[test]
    fn spec_validation() {
        let sys = BaseUnitSystem::si_mechanical();
        assert_eq!(
            FeatureSpec::new(sys.clone(), vec![]),
            Err(Error::EmptySpec)
        );
        assert!(matches!(
            FeatureSpec::from_exprs(sys.clone(), &[("a", "m"), ("a", "s")]),
            Err(Error::DuplicateName(_))
        ));
        let bad = FeatureDescriptor::new("a", UnitVector::new(vec![1]));
        assert!(FeatureSpec::new(sys, vec![bad]).is_err());
    }

    #[test]
    fn monomial_text_round_trip() {
        let spec = springy();
        let m = Monomial::parse("m^-1 norm_p^2", &spec).unwrap();
        assert_eq!(m.display(&spec).to_string(), "m^-1 norm_p^2");
        assert_eq!(Monomial::parse(&m.display(&spec).to_string(), &spec).unwrap(), m);
        assert_eq!(Monomial::constant(4).display(&spec).to_string(), "1");
        assert!(matches!(
            Monomial::parse("q", &spec),
            Err(Error::UnknownFeature(_))
        ));
    }
}
