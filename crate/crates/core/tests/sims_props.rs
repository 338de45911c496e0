use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unitsml::pi::evaluate_monomial;
use unitsml::sims::double_pendulum::double_pendulum_spec;
use unitsml::sims::pendulum::{hamiltonian_terms, pendulum_spec, sample_pendulum, SamplerConfig};
use unitsml::sims::planck::{planck_law, rayleigh_jeans, BOLTZMANN, PLANCK, SPEED_OF_LIGHT};
use unitsml::sims::rietkerk::{
    integrate_rietkerk, rietkerk_system, step, RietkerkOutcome, RietkerkParams, RietkerkState, PARAMETER_TABLE,
};
use unitsml::units::GroupElement;

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> RietkerkState {
    let mut s = RietkerkState::uniform(n, 2.0, 0.0, 0.0, 0.0);
    for i in 0..n * n {
        s.u[i] = rng.random_range(0.0..5.0);
        s.w[i] = rng.random_range(0.0..5.0);
        s.v[i] = rng.random_range(0.0..50.0);
    }
    s
}

fn random_params(rng: &mut ChaCha8Rng) -> RietkerkParams {
    let v: Vec<f64> = PARAMETER_TABLE.iter().map(|p| p.2 * rng.random_range(0.5..1.5)).collect();
    let mut p = RietkerkParams::from_slice(&v).unwrap();
    p.dl = 2.0;
    p.dt = 0.005;
    p.t_total = 0.05;
    p
}

/// One explicit step on a 3 x 3 periodic grid, written out cell by cell.
fn oracle_step(p: &RietkerkParams, s: &RietkerkState) -> RietkerkState {
    let n = 3;
    let at = |f: &[f64], i: usize, j: usize| f[(i % n) * n + (j % n)];
    let lap = |f: &[f64], i: usize, j: usize| {
        (at(f, i + n - 1, j) + at(f, i + 1, j) + at(f, i, j + n - 1) + at(f, i, j + 1) - 4.0 * at(f, i, j)) / (s.dl * s.dl)
    };
    let mut out = s.clone();
    for i in 0..n {
        for j in 0..n {
            let (u, w, v) = (at(&s.u, i, j), at(&s.w, i, j), at(&s.v, i, j));
            let inf = p.alpha * u * (v + p.k2 * p.w0) / (v + p.k2);
            let upt = p.g_m * w / (w + p.k1) * v;
            out.u[i * n + j] = u + p.dt * (p.r - inf + p.d_u * lap(&s.u, i, j));
            out.w[i * n + j] = w + p.dt * (inf - upt - p.delta_w * w + p.d_w * lap(&s.w, i, j));
            out.v[i * n + j] = v + p.dt * (p.c * upt - p.delta_v * v + p.d_v * lap(&s.v, i, j));
        }
    }
    out.t = s.t + p.dt;
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_step_matches_cellwise_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng);
        let s = random_state(3, &mut rng);
        let got = step(&p, &s);
        let want = oracle_step(&p, &s);
        prop_assert!(close(&got.u, &want.u, 1e-14));
        prop_assert!(close(&got.w, &want.w, 1e-14));
        prop_assert!(close(&got.v, &want.v, 1e-14));
    }

    #[test]
    fn integration_commutes_with_unit_changes(seed in any::<u64>(), e in prop::array::uniform4(-0.5f64..0.5)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_params(&mut rng);
        let s = random_state(4, &mut rng);
        let sys = rietkerk_system();
        let g = GroupElement::new(e.map(|x| 10f64.powf(x)).to_vec()).unwrap();
        let f = |expr: &str| g.factor(&sys.parse(expr).unwrap());
        let scaled: Vec<f64> = PARAMETER_TABLE.iter().zip(p.to_vec()).map(|((_, u, _), v)| f(u) * v).collect();
        let mut gp = RietkerkParams::from_slice(&scaled).unwrap();
        // keep the step count identical
        gp.t_total = gp.dt * p.steps() as f64;
        let (fw, fv, fm) = (f("l m^-2"), f("g m^-2"), f("m"));
        let gs = RietkerkState {
            n: s.n,
            u: s.u.iter().map(|x| fw * x).collect(),
            w: s.w.iter().map(|x| fw * x).collect(),
            v: s.v.iter().map(|x| fv * x).collect(),
            dl: fm * s.dl,
            t: 0.0,
        };
        let a = integrate_rietkerk(&p, &s).unwrap();
        let b = integrate_rietkerk(&gp, &gs).unwrap();
        let (RietkerkOutcome::Survived { state: a }, RietkerkOutcome::Survived { state: b }) = (a, b) else {
            panic!("short runs from a vegetated start survive");
        };
        let av: Vec<f64> = a.v.iter().map(|x| fv * x).collect();
        prop_assert!(close(&av, &b.v, 1e-9));
        let aw: Vec<f64> = a.w.iter().map(|x| fw * x).collect();
        prop_assert!(close(&aw, &b.w, 1e-9));
    }

    #[test]
    fn hamiltonian_expansion_reproduces_labels(seed in any::<u64>()) {
        let spec = pendulum_spec();
        let terms = hamiltonian_terms(&spec);
        for s in sample_pendulum(20, seed, &SamplerConfig::default()) {
            let x = s.features();
            let scale = s.k_s * s.l * s.l;
            let sum: f64 = terms.iter().map(|(m, c)| c * evaluate_monomial(m, &x).unwrap()).sum();
            prop_assert!((sum * scale - s.h).abs() <= 1e-12 * (1.0 + s.h.abs()));
        }
    }

    #[test]
    fn planck_ratio_depends_on_one_group(lam in 1e-6f64..1e-2, t in 100.0f64..5000.0) {
        let x = PLANCK * SPEED_OF_LIGHT / (lam * BOLTZMANN * t);
        let ratio = planck_law(lam, t) / rayleigh_jeans(lam, t);
        prop_assert!((ratio - x / x.exp_m1()).abs() <= 1e-12 * ratio.max(1e-300));
        prop_assert!(ratio < 1.0);
    }
}

#[test]
fn rayleigh_jeans_limit() {
    let (lam, t) = (1e-2, 3000.0);
    let r = planck_law(lam, t) / rayleigh_jeans(lam, t);
    assert!((r - 1.0).abs() < 1e-3);
}

#[test]
fn bare_soil_stays_bare_and_rain_accumulates() {
    let p = RietkerkParams {
        t_total: 1.0,
        ..Default::default()
    };
    let s = RietkerkState::uniform(5, p.dl, 0.0, 0.0, 0.0);
    let out = integrate_rietkerk(&p, &s).unwrap();
    let fin = out.state();
    assert!(fin.v.iter().all(|&v| v == 0.0));
    assert!(fin.u.iter().all(|&u| u > 0.0));
}

#[test]
fn double_pendulum_spec_is_consistent() {
    let spec = double_pendulum_spec();
    assert_eq!(spec.d() - spec.rank().unwrap(), 24);
}
