//! Black-body radiation: wavelength, temperature and the two constants
//! `c`, `k_B` over `(kg, m, s, K)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pi::{FeatureSpec, Monomial};
use crate::regress::Dataset;
use crate::units::{BaseUnitSystem, UnitVector};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const PLANCK: f64 = 6.626_070_15e-34;

pub fn planck_spec() -> FeatureSpec {
    FeatureSpec::from_exprs(
        BaseUnitSystem::si_mechanical(),
        &[
            ("lambda", "m"),
            ("T", "K"),
            ("c", "m s^-1"),
            ("k_B", "kg m^2 s^-2 K^-1"),
        ],
    )
    .expect("static spec")
}

/// Spectral radiance per unit wavelength, `kg m^-1 s^-3`.
pub fn intensity_units() -> UnitVector {
    UnitVector::new(vec![1, -1, -3, 0])
}

/// `c k_B T / lambda^4`.
pub fn rayleigh_jeans_decoder(spec: &FeatureSpec) -> Monomial {
    Monomial::parse("lambda^-4 T c k_B", spec).expect("planck feature names")
}

pub fn planck_law(lambda: f64, t: f64) -> f64 {
    let x = PLANCK * SPEED_OF_LIGHT / (lambda * BOLTZMANN * t);
    2.0 * PLANCK * SPEED_OF_LIGHT * SPEED_OF_LIGHT / lambda.powi(5) / x.exp_m1()
}

pub fn rayleigh_jeans(lambda: f64, t: f64) -> f64 {
    2.0 * SPEED_OF_LIGHT * BOLTZMANN * t / lambda.powi(4)
}

/// Samples `lambda ~ U(lambda_range)`, `T ~ U(t_range)` and labels each row
/// with the full Planck law.
pub fn sample_blackbody(n: usize, seed: u64, lambda_range: (f64, f64), t_range: (f64, f64)) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if !(lambda_range.0 > 0.0 && t_range.0 > 0.0) {
        return Err(Error::InvalidInput("wavelength and temperature must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let lambda = lambda_range.0 + (lambda_range.1 - lambda_range.0) * rng.random::<f64>();
        let t = t_range.0 + (t_range.1 - t_range.0) * rng.random::<f64>();
        rows.push(vec![lambda, t, SPEED_OF_LIGHT, BOLTZMANN]);
        labels.push(planck_law(lambda, t));
    }
    Dataset::new(planck_spec(), rows, labels, intensity_units())
}
