//! The springy pendulum: Hamiltonian, random sampler and its 9-scalar
//! feature spec over `(kg, m, s)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot3, scalarize, NamedQuantity, ScalarizeRules, VectorFeature};
use crate::pi::{FeatureDescriptor, FeatureSpec, Monomial};
use crate::regress::Dataset;
use crate::units::{BaseUnitSystem, UnitVector};

pub fn pendulum_system() -> BaseUnitSystem {
    BaseUnitSystem::with_si_aliases(&["kg", "m", "s"]).expect("static names are valid")
}

pub fn energy_units() -> UnitVector {
    UnitVector::new(vec![1, 2, -2])
}

/// Scalarization rules behind the 286 / 187,500 degree-2 counts:
/// dot products may not take negative powers, except `g.q`.
pub fn pendulum_rules() -> ScalarizeRules {
    ScalarizeRules::default().with_dot_exception("g", "q")
}

pub fn hamiltonian(m: f64, k_s: f64, l: f64, g: &[f64; 3], p: &[f64; 3], q: &[f64; 3]) -> Result<f64> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::NonPositiveMass);
    }
    let qn = dot3(q, q).sqrt();
    Ok(0.5 * dot3(p, p) / m + 0.5 * k_s * (qn - l) * (qn - l) - m * dot3(g, q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumSample {
    pub m: f64,
    pub k_s: f64,
    pub l: f64,
    pub g: [f64; 3],
    pub p: [f64; 3],
    pub q: [f64; 3],
    pub h: f64,
}

impl PendulumSample {
    pub fn new(m: f64, k_s: f64, l: f64, g: [f64; 3], p: [f64; 3], q: [f64; 3]) -> Result<Self> {
        let h = hamiltonian(m, k_s, l, &g, &p, &q)?;
        Ok(PendulumSample { m, k_s, l, g, p, q, h })
    }

    pub fn inputs(&self) -> (Vec<NamedQuantity>, Vec<VectorFeature>) {
        let sys = pendulum_system();
        let u = |e: &str| sys.parse(e).expect("static unit expressions");
        (
            vec![
                NamedQuantity::new("m", self.m, u("kg")),
                NamedQuantity::new("k_s", self.k_s, u("kg s^-2")),
                NamedQuantity::new("L", self.l, u("m")),
            ],
            vec![
                VectorFeature::new("g", self.g, u("m s^-2")),
                VectorFeature::new("p", self.p, u("kg m s^-1")),
                VectorFeature::new("q", self.q, u("m")),
            ],
        )
    }

    /// The 9 scalar feature values in spec order.
    pub fn features(&self) -> Vec<f64> {
        let (s, v) = self.inputs();
        scalarize(&s, &v, &pendulum_rules())
            .expect("pendulum names are distinct")
            .into_iter()
            .map(|f| f.value)
            .collect()
    }
}

/// `m, k_s, L, norm_g, norm_p, norm_q, g_dot_p, g_dot_q, p_dot_q`.
pub fn pendulum_spec() -> FeatureSpec {
    let probe = PendulumSample::new(1.0, 1.0, 1.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
        .expect("positive mass");
    let (s, v) = probe.inputs();
    let feats = scalarize(&s, &v, &pendulum_rules()).expect("pendulum names are distinct");
    FeatureSpec::new(
        pendulum_system(),
        feats.iter().map(FeatureDescriptor::from).collect(),
    )
    .expect("pendulum spec is valid")
}

/// The spring energy scale `k_s L^2` used to make the Hamiltonian dimensionless.
pub fn spring_energy_scale(spec: &FeatureSpec) -> Monomial {
    Monomial::parse("k_s L^2", spec).expect("pendulum feature names")
}

/// Expansion of `H / (k_s L^2)` into dimensionless monomials with their
/// coefficients.
pub fn hamiltonian_terms(spec: &FeatureSpec) -> Vec<(Monomial, f64)> {
    [
        ("norm_p^2 m^-1 k_s^-1 L^-2", 0.5),
        ("norm_q^2 L^-2", 0.5),
        ("norm_q L^-1", -1.0),
        ("1", 0.5),
        ("m g_dot_q k_s^-1 L^-2", -1.0),
    ]
    .iter()
    .map(|(e, c)| (Monomial::parse(e, spec).expect("pendulum feature names"), *c))
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mass: (f64, f64),
    pub spring: (f64, f64),
    pub length: (f64, f64),
    pub g_magnitude: (f64, f64),
    pub p_magnitude: (f64, f64),
    pub q_magnitude: (f64, f64),
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mass: (1.0, 2.0),
            spring: (1.0, 2.0),
            length: (1.0, 2.0),
            g_magnitude: (0.5, 1.5),
            p_magnitude: (0.5, 1.5),
            q_magnitude: (0.5, 1.5),
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Isotropic unit vector from a normalized Gaussian triple.
fn direction(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = dot3(&v, &v).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn scaled(d: [f64; 3], s: f64) -> [f64; 3] {
    [d[0] * s, d[1] * s, d[2] * s]
}

pub fn sample_pendulum(n: usize, seed: u64, cfg: &SamplerConfig) -> Vec<PendulumSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let m = uniform(&mut rng, cfg.mass);
            let k_s = uniform(&mut rng, cfg.spring);
            let l = uniform(&mut rng, cfg.length);
            let g = scaled(direction(&mut rng), uniform(&mut rng, cfg.g_magnitude));
            let p = scaled(direction(&mut rng), uniform(&mut rng, cfg.p_magnitude));
            let q = scaled(direction(&mut rng), uniform(&mut rng, cfg.q_magnitude));
            PendulumSample::new(m, k_s, l, g, p, q).expect("sampled masses are positive")
        })
        .collect()
}

pub fn pendulum_dataset(samples: &[PendulumSample]) -> Result<Dataset> {
    Dataset::new(
        pendulum_spec(),
        samples.iter().map(PendulumSample::features).collect(),
        samples.iter().map(|s| s.h).collect(),
        energy_units(),
    )
}

pub fn sample_pendulum_dataset(n: usize, seed: u64, cfg: &SamplerConfig) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    pendulum_dataset(&sample_pendulum(n, seed, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pi::{enumerate_monomials, evaluate_monomial, EnumerateOptions};

    #[test]
    fn hamiltonian_vanishes_at_rest() {
        let h = hamiltonian(1.3, 2.0, 1.5, &[0.0, 0.0, -1.0], &[0.0; 3], &[1.5, 0.0, 0.0]).unwrap();
        assert!(h.abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_worked_value() {
        let h = hamiltonian(1.0, 1.0, 1.0, &[0.0, 0.0, -1.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, -2.0])
            .unwrap();
        assert_eq!(h, -1.0);
    }

    #[test]
    fn doubling_momentum_quadruples_kinetic_term() {
        let g = [0.1, 0.2, -0.9];
        let q = [0.3, -0.4, 1.0];
        let base = hamiltonian(1.5, 1.2, 1.1, &g, &[0.0; 3], &q).unwrap();
        let k1 = hamiltonian(1.5, 1.2, 1.1, &g, &[0.3, 0.4, 0.5], &q).unwrap() - base;
        let k2 = hamiltonian(1.5, 1.2, 1.1, &g, &[0.6, 0.8, 1.0], &q).unwrap() - base;
        assert!((k2 - 4.0 * k1).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_mass() {
        assert_eq!(
            hamiltonian(0.0, 1.0, 1.0, &[0.0; 3], &[0.0; 3], &[0.0; 3]),
            Err(Error::NonPositiveMass)
        );
    }

    #[test]
    fn degree_two_monomial_counts() {
        let spec = pendulum_spec();
        let dl = enumerate_monomials(&spec, &EnumerateOptions::new(2, true)).unwrap();
        let all = enumerate_monomials(&spec, &EnumerateOptions::new(2, false)).unwrap();
        assert_eq!(dl.len(), 286);
        assert_eq!(all.len(), 187_500);
    }

    #[test]
    fn expansion_reproduces_hamiltonian() {
        let spec = pendulum_spec();
        let terms = hamiltonian_terms(&spec);
        let scale = spring_energy_scale(&spec);
        for s in sample_pendulum(50, 3, &SamplerConfig::default()) {
            let x = s.features();
            let eta: f64 = terms
                .iter()
                .map(|(m, c)| c * evaluate_monomial(m, &x).unwrap())
                .sum();
            let h = eta * evaluate_monomial(&scale, &x).unwrap();
            assert!((h - s.h).abs() <= 1e-12 * s.h.abs().max(1.0));
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_pendulum(5, 42, &SamplerConfig::default());
        let b = sample_pendulum(5, 42, &SamplerConfig::default());
        assert_eq!(a, b);
        assert_ne!(a, sample_pendulum(5, 43, &SamplerConfig::default()));
    }

    #[test]
    fn collapsed_ranges_give_a_known_row() {
        let cfg = SamplerConfig {
            mass: (1.5, 1.5),
            spring: (2.0, 2.0),
            length: (1.25, 1.25),
            g_magnitude: (1.0, 1.0),
            p_magnitude: (0.5, 0.5),
            q_magnitude: (1.0, 1.0),
        };
        let d = sample_pendulum_dataset(1, 9, &cfg).unwrap();
        let x = &d.rows[0];
        assert_eq!(&x[..3], &[1.5, 2.0, 1.25]);
        for (got, want) in x[3..6].iter().zip([1.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        // with |q| = 1, H = |p|^2/(2m) + k_s (1 - L)^2 / 2 - m g.q
        let want = 0.25 / 3.0 + 0.0625 - 1.5 * x[7];
        assert!((d.labels[0] - want).abs() < 1e-14);
    }
}
