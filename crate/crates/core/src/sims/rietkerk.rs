//! Rietkerk arid-vegetation model: explicit Euler with a periodic 5-point
//! Laplacian, plus the randomized survival dataset built on top of it.
//!
//! Base units are `(l, g, d, m)`: liters of water, grams of biomass, days
//! and meters. Water volume and surface length are deliberately kept as
//! separate base units.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pi::{FeatureSpec, Monomial};
use crate::regress::Dataset;
use crate::units::{BaseUnitSystem, Quantity, UnitVector};

/// Mean vegetation below this (g m^-2) at any step marks a run as extinct.
pub const EXTINCTION_THRESHOLD: f64 = 1e-3;
/// Undershoot tolerated before a run counts as numerically unstable.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-9;

pub fn rietkerk_system() -> BaseUnitSystem {
    BaseUnitSystem::new(&["l", "g", "d", "m"]).expect("static names are valid")
}

/// `(name, unit expression, default)` in table order; the last four are
/// integration parameters.
pub const PARAMETER_TABLE: [(&str, &str, f64); 16] = [
    ("R", "l d^-1 m^-2", 0.375),
    ("alpha", "d^-1", 0.2),
    ("k2", "g m^-2", 5.0),
    ("W0", "1", 0.1),
    ("D_u", "d^-1 m^2", 100.0),
    ("g_m", "l g^-1 d^-1", 0.05),
    ("k1", "l m^-2", 5.0),
    ("delta_w", "d^-1", 0.2),
    ("D_w", "d^-1 m^2", 0.1),
    ("c", "l^-1 g", 20.0),
    ("delta_v", "d^-1", 0.25),
    ("D_v", "d^-1 m^2", 0.1),
    ("T", "d", 200.0),
    ("dt", "d", 0.005),
    ("L", "m", 200.0),
    ("dl", "m", 2.0),
];

/// Number of physical (sampled) parameters at the head of the table.
pub const N_PHYSICAL: usize = 12;

/// A reference dimensionless basis over the parameter table.
pub const REFERENCE_BASIS: [&str; 12] = [
    "c alpha^-1 g_m",
    "R^-1 alpha k1",
    "R^-1 c^-1 alpha k2",
    "alpha^-1 delta_w",
    "alpha^-1 delta_v",
    "W0",
    "alpha^-1 D_v L^-2",
    "alpha^-1 D_u L^-2",
    "alpha T",
    "alpha dt",
    "alpha^-1 D_w L^-2",
    "L^-1 dl",
];

pub fn rietkerk_spec() -> FeatureSpec {
    let sys = rietkerk_system();
    let feats: Vec<(&str, &str)> = PARAMETER_TABLE.iter().map(|(n, u, _)| (*n, *u)).collect();
    FeatureSpec::from_exprs(sys, &feats).expect("static table is valid")
}

pub fn vegetation_units() -> UnitVector {
    rietkerk_system().parse("g m^-2").expect("static expression")
}

pub fn reference_basis(spec: &FeatureSpec) -> Vec<Monomial> {
    REFERENCE_BASIS
        .iter()
        .map(|e| Monomial::parse(e, spec).expect("table names"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RietkerkParams {
    pub r: f64,
    pub alpha: f64,
    pub k2: f64,
    pub w0: f64,
    pub d_u: f64,
    pub g_m: f64,
    pub k1: f64,
    pub delta_w: f64,
    pub d_w: f64,
    pub c: f64,
    pub delta_v: f64,
    pub d_v: f64,
    pub t_total: f64,
    pub dt: f64,
    pub length: f64,
    pub dl: f64,
}

impl Default for RietkerkParams {
    fn default() -> Self {
        let v: Vec<f64> = PARAMETER_TABLE.iter().map(|p| p.2).collect();
        RietkerkParams::from_slice(&v).expect("16 defaults")
    }
}

impl RietkerkParams {
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 16 {
            return Err(Error::DimensionMismatch {
                expected: 16,
                found: v.len(),
            });
        }
        Ok(RietkerkParams {
            r: v[0],
            alpha: v[1],
            k2: v[2],
            w0: v[3],
            d_u: v[4],
            g_m: v[5],
            k1: v[6],
            delta_w: v[7],
            d_w: v[8],
            c: v[9],
            delta_v: v[10],
            d_v: v[11],
            t_total: v[12],
            dt: v[13],
            length: v[14],
            dl: v[15],
        })
    }

    /// Values in table order, matching [`rietkerk_spec`].
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.r,
            self.alpha,
            self.k2,
            self.w0,
            self.d_u,
            self.g_m,
            self.k1,
            self.delta_w,
            self.d_w,
            self.c,
            self.delta_v,
            self.d_v,
            self.t_total,
            self.dt,
            self.length,
            self.dl,
        ]
    }

    pub fn steps(&self) -> usize {
        (self.t_total / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let v = self.to_vec();
        // R = 0 is allowed (no rainfall); everything else must be positive
        if v.iter().any(|x| !x.is_finite())
            || v[1..].iter().zip(&PARAMETER_TABLE[1..]).any(|(x, (n, _, _))| {
                *x < 0.0 || (*x == 0.0 && matches!(*n, "alpha" | "k2" | "dt" | "dl"))
            })
            || self.r < 0.0
        {
            return Err(Error::InvalidInput("Rietkerk parameters must be positive".into()));
        }
        let diff = self.d_u.max(self.d_w).max(self.d_v);
        if diff * self.dt / (self.dl * self.dl) > 0.25 {
            return Err(Error::InvalidInput(format!(
                "explicit diffusion number {} exceeds 0.25",
                diff * self.dt / (self.dl * self.dl)
            )));
        }
        Ok(())
    }
}

/// Square periodic grids of surface water `u`, soil water `w` (l m^-2) and
/// vegetation `v` (g m^-2), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RietkerkState {
    pub n: usize,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub dl: f64,
    pub t: f64,
}

impl RietkerkState {
    pub fn uniform(n: usize, dl: f64, u: f64, w: f64, v: f64) -> Self {
        RietkerkState {
            n,
            u: vec![u; n * n],
            w: vec![w; n * n],
            v: vec![v; n * n],
            dl,
            t: 0.0,
        }
    }
}

/// u0, w0 ~ U[0, 5] per cell; v0 ~ U[0, 50] on a random 10% of cells.
pub fn random_initial_state(n: usize, dl: f64, rng: &mut impl Rng) -> RietkerkState {
    let cells = n * n;
    let u = (0..cells).map(|_| 5.0 * rng.random::<f64>()).collect();
    let w = (0..cells).map(|_| 5.0 * rng.random::<f64>()).collect();
    let v = (0..cells)
        .map(|_| {
            let seeded = rng.random::<f64>() < 0.1;
            let amount = 50.0 * rng.random::<f64>();
            if seeded {
                amount
            } else {
                0.0
            }
        })
        .collect();
    RietkerkState {
        n,
        u,
        w,
        v,
        dl,
        t: 0.0,
    }
}

struct Neighbors {
    up: Vec<usize>,
    down: Vec<usize>,
}

impl Neighbors {
    fn new(n: usize) -> Self {
        Neighbors {
            up: (0..n).map(|i| (i + n - 1) % n).collect(),
            down: (0..n).map(|i| (i + 1) % n).collect(),
        }
    }
}

#[inline]
fn laplacian(f: &[f64], n: usize, nb: &Neighbors, i: usize, j: usize, inv_dl2: f64) -> f64 {
    let c = f[i * n + j];
    (f[nb.up[i] * n + j] + f[nb.down[i] * n + j] + f[i * n + nb.up[j]] + f[i * n + nb.down[j]]
        - 4.0 * c)
        * inv_dl2
}

/// One explicit Euler step from `s` into `out`; returns the new mean vegetation.
fn euler_step(p: &RietkerkParams, s: &RietkerkState, out: &mut RietkerkState, nb: &Neighbors) -> f64 {
    let n = s.n;
    let inv_dl2 = 1.0 / (s.dl * s.dl);
    let mut v_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            let (u, w, v) = (s.u[idx], s.w[idx], s.v[idx]);
            let infiltration = p.alpha * (v + p.k2 * p.w0) / (v + p.k2) * u;
            let uptake = p.g_m * v * w / (p.k1 + w);
            let du = p.r - infiltration + p.d_u * laplacian(&s.u, n, nb, i, j, inv_dl2);
            let dw = infiltration - uptake - p.delta_w * w
                + p.d_w * laplacian(&s.w, n, nb, i, j, inv_dl2);
            let dv = p.c * uptake - p.delta_v * v + p.d_v * laplacian(&s.v, n, nb, i, j, inv_dl2);
            out.u[idx] = u + p.dt * du;
            out.w[idx] = w + p.dt * dw;
            let nv = v + p.dt * dv;
            out.v[idx] = nv;
            v_sum += nv;
        }
    }
    out.t = s.t + p.dt;
    v_sum / (n * n) as f64
}

/// A single Euler step, exposed for checking against independent arithmetic.
pub fn step(p: &RietkerkParams, s: &RietkerkState) -> RietkerkState {
    let mut out = s.clone();
    euler_step(p, s, &mut out, &Neighbors::new(s.n));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum RietkerkOutcome {
    Survived { state: RietkerkState },
    Extinct { step: usize, state: RietkerkState },
}

impl RietkerkOutcome {
    pub fn state(&self) -> &RietkerkState {
        match self {
            RietkerkOutcome::Survived { state } | RietkerkOutcome::Extinct { state, .. } => state,
        }
    }
}

fn healthy(s: &RietkerkState) -> bool {
    s.u.iter()
        .chain(&s.w)
        .chain(&s.v)
        .all(|&x| x.is_finite() && x >= -NEGATIVITY_TOLERANCE)
}

/// Integrates for `T / dt` steps. Extinction is reported as an outcome;
/// non-finite or clearly negative fields are an error.
pub fn integrate_rietkerk(params: &RietkerkParams, init: &RietkerkState) -> Result<RietkerkOutcome> {
    params.validate()?;
    if init.n == 0 || [&init.u, &init.w, &init.v].iter().any(|f| f.len() != init.n * init.n) {
        return Err(Error::InvalidInput("grids must be n x n".into()));
    }
    let nb = Neighbors::new(init.n);
    let mut cur = init.clone();
    cur.dl = params.dl;
    let mut next = cur.clone();
    let had_vegetation = cur.v.iter().any(|&x| x != 0.0);
    for k in 1..=params.steps() {
        let mean_v = euler_step(params, &cur, &mut next, &nb);
        std::mem::swap(&mut cur, &mut next);
        // the health scan is the expensive part, so sample it
        if !mean_v.is_finite() || (k % 64 == 0 && !healthy(&cur)) {
            return Err(Error::NumericalBlowup(k));
        }
        if had_vegetation && mean_v < EXTINCTION_THRESHOLD {
            return Ok(RietkerkOutcome::Extinct { step: k, state: cur });
        }
    }
    if !healthy(&cur) {
        return Err(Error::NumericalBlowup(params.steps()));
    }
    Ok(RietkerkOutcome::Survived { state: cur })
}

pub fn mean_vegetation(state: &RietkerkState) -> Quantity {
    let mean = state.v.iter().sum::<f64>() / state.v.len().max(1) as f64;
    Quantity::new(mean, vegetation_units())
}

/// Grid and horizon; integration parameters are held fixed across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScale {
    pub cells: usize,
    pub dl: f64,
    pub t_total: f64,
    pub dt: f64,
}

impl GridScale {
    /// 100 x 100 cells of 2 m over 200 days.
    pub fn paper() -> Self {
        GridScale {
            cells: 100,
            dl: 2.0,
            t_total: 200.0,
            dt: 0.005,
        }
    }

    /// 50 x 50 cells of 2 m over 50 days.
    pub fn desk() -> Self {
        GridScale {
            cells: 50,
            dl: 2.0,
            t_total: 50.0,
            dt: 0.005,
        }
    }

    pub fn length(&self) -> f64 {
        self.cells as f64 * self.dl
    }
}

/// Physical parameters ~ U(0.5 x, 1.5 x) around the defaults; integration
/// parameters from `scale`.
pub fn sample_params(rng: &mut impl Rng, scale: &GridScale) -> RietkerkParams {
    let mut v: Vec<f64> = PARAMETER_TABLE[..N_PHYSICAL]
        .iter()
        .map(|(_, _, x)| x * (0.5 + rng.random::<f64>()))
        .collect();
    v.extend([scale.t_total, scale.dt, scale.length(), scale.dl]);
    RietkerkParams::from_slice(&v).expect("16 values")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: u64,
    pub params: RietkerkParams,
    pub mean_vegetation: Option<f64>,
    pub extinct_at: Option<usize>,
    pub blowup_at: Option<usize>,
}

fn run_one(seed: u64, index: u64, scale: &GridScale) -> RunRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let params = sample_params(&mut rng, scale);
    let init = random_initial_state(scale.cells, scale.dl, &mut rng);
    let mut rec = RunRecord {
        index,
        params,
        mean_vegetation: None,
        extinct_at: None,
        blowup_at: None,
    };
    match integrate_rietkerk(&params, &init) {
        Ok(RietkerkOutcome::Survived { state }) => rec.mean_vegetation = Some(mean_vegetation(&state).value),
        Ok(RietkerkOutcome::Extinct { step, .. }) => rec.extinct_at = Some(step),
        Err(Error::NumericalBlowup(k)) => rec.blowup_at = Some(k),
        Err(_) => rec.blowup_at = Some(0),
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RietkerkData {
    pub train: Dataset,
    pub test: Dataset,
    pub attempted: usize,
    pub extinct: usize,
    pub blowups: usize,
    pub runs: Vec<RunRecord>,
}

/// Runs randomized simulations (in parallel, ordered by run index) until
/// `n_train + n_test` survive, then splits them in index order.
pub fn rietkerk_experiment(n_train: usize, n_test: usize, seed: u64, scale: &GridScale) -> Result<RietkerkData> {
    let needed = n_train + n_test;
    let max_runs = 20 * needed.max(1);
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut runs: Vec<RunRecord> = Vec::new();
    let mut survivors = 0;
    while survivors < needed && runs.len() < max_runs {
        let start = runs.len() as u64;
        let end = (runs.len() + batch).min(max_runs) as u64;
        let fresh: Vec<RunRecord> = (start..end)
            .into_par_iter()
            .map(|i| run_one(seed, i, scale))
            .collect();
        for r in fresh {
            if survivors < needed {
                survivors += usize::from(r.mean_vegetation.is_some());
                runs.push(r);
            }
        }
    }
    if survivors < needed {
        return Err(Error::InsufficientSurvivors {
            found: survivors,
            needed,
        });
    }
    let spec = rietkerk_spec();
    let kept: Vec<&RunRecord> = runs.iter().filter(|r| r.mean_vegetation.is_some()).collect();
    let rows: Vec<Vec<f64>> = kept.iter().map(|r| r.params.to_vec()).collect();
    let labels: Vec<f64> = kept.iter().map(|r| r.mean_vegetation.unwrap_or(0.0)).collect();
    let all = Dataset::new(spec, rows, labels, vegetation_units())?;
    let (train, test) = all.split_at(n_train);
    Ok(RietkerkData {
        train,
        test,
        attempted: runs.len(),
        extinct: runs.iter().filter(|r| r.extinct_at.is_some()).count(),
        blowups: runs.iter().filter(|r| r.blowup_at.is_some()).count(),
        runs,
    })
}
