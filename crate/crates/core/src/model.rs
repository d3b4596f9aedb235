//! Domain types shared by the metrics, coefficient, solver and engine modules.
//!
//! A [`WaveformSet`] is the `Mt x N` complex transmit matrix: row `m` is the
//! fast-time sequence of antenna `m`, column `n` is the snapshot across the
//! array at sample `n`. Indices are zero-based throughout the crate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::steering_vector;

/// Tolerance used when deduplicating and comparing angles (radians).
const ANGLE_EPS: f64 = 1e-12;

/// Complex transmit matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSet {
    mt: usize,
    n: usize,
    data: Vec<Complex64>,
}

impl WaveformSet {
    pub fn new(mt: usize, n: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dims(mt, n)?;
        if data.len() != mt * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {mt}x{n} waveform, got {}",
                mt * n,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Dimension("waveform contains non-finite entries".into()));
        }
        Ok(Self { mt, n, data })
    }

    pub fn zeros(mt: usize, n: usize) -> Result<Self> {
        Self::new(mt, n, vec![Complex64::new(0.0, 0.0); mt * n])
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let mt = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows have unequal lengths".into()));
        }
        Self::new(mt, n, rows.concat())
    }

    /// Builds a matrix from `f(m, n)`.
    pub fn from_fn(mt: usize, n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(mt * n);
        for m in 0..mt {
            for k in 0..n {
                data.push(f(m, k));
            }
        }
        Self::new(mt, n, data)
    }

    #[inline]
    pub fn mt(&self) -> usize {
        self.mt
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, t: usize, d: usize) -> Complex64 {
        self.data[t * self.n + d]
    }

    #[inline]
    pub fn set(&mut self, t: usize, d: usize, v: Complex64) {
        self.data[t * self.n + d] = v;
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.n..(t + 1) * self.n]
    }

    pub fn column(&self, d: usize) -> Vec<Complex64> {
        (0..self.mt).map(|m| self.get(m, d)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn check_index(&self, t: usize, d: usize) -> Result<()> {
        if t >= self.mt || d >= self.n {
            return Err(Error::IndexOutOfRange { t, d, mt: self.mt, n: self.n });
        }
        Ok(())
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn row_energy(&self, t: usize) -> f64 {
        self.row(t).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Peak-to-average power ratio `max |s|^2 / (||S||^2 / (Mt N))`.
    pub fn par(&self) -> f64 {
        let peak = self.data.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let avg = self.energy() / (self.mt * self.n) as f64;
        peak / avg
    }

    /// Checks that the matrix lies in the constraint set.
    pub fn check_feasible(&self, constraint: &ConstraintSpec) -> Result<()> {
        let budget = (self.mt * self.n) as f64;
        let energy = self.energy();
        if energy <= 0.0 {
            return Err(Error::InfeasibleInitial("zero energy".into()));
        }
        match *constraint {
            ConstraintSpec::Energy => {
                if energy > budget * (1.0 + 1e-9) {
                    return Err(Error::InfeasibleInitial(format!("energy {energy} exceeds {budget}")));
                }
            }
            ConstraintSpec::Par { gamma_p } => {
                if energy > budget * (1.0 + 1e-9) {
                    return Err(Error::InfeasibleInitial(format!("energy {energy} exceeds {budget}")));
                }
                let par = self.par();
                if par > gamma_p * (1.0 + 1e-9) {
                    return Err(Error::InfeasibleInitial(format!("PAR {par} exceeds {gamma_p}")));
                }
            }
            ConstraintSpec::ContinuousPhase => {
                if let Some(z) = self.data.iter().find(|z| (z.norm() - 1.0).abs() > 1e-9) {
                    return Err(Error::InfeasibleInitial(format!("entry {z} is not unimodular")));
                }
            }
            ConstraintSpec::DiscretePhase { alphabet } => {
                if let Some(z) = self.data.iter().find(|z| mpsk_index(**z, alphabet).is_none()) {
                    return Err(Error::InfeasibleInitial(format!("entry {z} is not a {alphabet}-PSK symbol")));
                }
            }
        }
        Ok(())
    }

    /// Replaces every entry by its canonical MPSK symbol. Entries must already be
    /// within tolerance of the alphabet.
    pub(crate) fn snap_to_alphabet(&mut self, alphabet: usize) {
        for z in &mut self.data {
            if let Some(l) = mpsk_index(*z, alphabet) {
                *z = mpsk_symbol(l, alphabet);
            }
        }
    }
}

fn check_dims(mt: usize, n: usize) -> Result<()> {
    if mt < 1 {
        return Err(Error::Dimension(format!("mt must be >= 1, got {mt}")));
    }
    if n < 2 {
        return Err(Error::Dimension(format!("n must be >= 2, got {n}")));
    }
    Ok(())
}

/// Canonical `L`-PSK symbol `exp(j 2 pi l / L)`.
///
/// Every discrete-phase entry in the crate is produced by this function so that
/// alphabet membership can be checked bitwise.
pub fn mpsk_symbol(l: usize, alphabet: usize) -> Complex64 {
    let phi = 2.0 * PI * (l % alphabet) as f64 / alphabet as f64;
    Complex64::new(phi.cos(), phi.sin())
}

/// Alphabet index of `z` if it is within `1e-9` of an `L`-PSK symbol.
pub fn mpsk_index(z: Complex64, alphabet: usize) -> Option<usize> {
    if alphabet < 2 {
        return None;
    }
    let step = 2.0 * PI / alphabet as f64;
    let l = (z.arg().rem_euclid(2.0 * PI) / step).round() as usize % alphabet;
    ((z - mpsk_symbol(l, alphabet)).norm() <= 1e-9).then_some(l)
}

/// Angular geometry: desired/undesired angle sets and their averaged
/// steering outer products.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleScenario {
    theta_d: Vec<f64>,
    theta_u: Vec<f64>,
    dt_over_lambda: f64,
    mt: usize,
    n: usize,
    a_d: Vec<Complex64>,
    a_u: Vec<Complex64>,
}

impl AngleScenario {
    /// Builds the scenario from angle lists in radians. Lists are sorted and
    /// deduplicated; overlapping desired/undesired angles are rejected.
    pub fn new(
        mt: usize,
        n: usize,
        theta_d: &[f64],
        theta_u: &[f64],
        dt_over_lambda: f64,
    ) -> Result<Self> {
        check_dims(mt, n)?;
        if !(dt_over_lambda.is_finite() && dt_over_lambda > 0.0) {
            return Err(Error::Scenario(format!("dt_over_lambda must be positive, got {dt_over_lambda}")));
        }
        let theta_d = normalize_angles(theta_d, "theta_d")?;
        let theta_u = normalize_angles(theta_u, "theta_u")?;
        for &d in &theta_d {
            if theta_u.iter().any(|&u| (u - d).abs() <= ANGLE_EPS) {
                return Err(Error::Scenario(format!(
                    "desired and undesired angle sets overlap at {:.6} deg",
                    d.to_degrees()
                )));
            }
        }
        let a_d = averaged_outer_product(&theta_d, mt, n, dt_over_lambda);
        let a_u = averaged_outer_product(&theta_u, mt, n, dt_over_lambda);
        Ok(Self { theta_d, theta_u, dt_over_lambda, mt, n, a_d, a_u })
    }

    /// Builds the scenario from `[lo, hi, step]` regions given in degrees.
    pub fn from_regions_deg(
        mt: usize,
        n: usize,
        desired: &[AngleRegion],
        undesired: &[AngleRegion],
        dt_over_lambda: f64,
    ) -> Result<Self> {
        let expand = |regions: &[AngleRegion]| -> Result<Vec<f64>> {
            let mut out = Vec::new();
            for r in regions {
                out.extend(r.expand_deg()?.into_iter().map(f64::to_radians));
            }
            Ok(out)
        };
        Self::new(mt, n, &expand(desired)?, &expand(undesired)?, dt_over_lambda)
    }

    /// Desired region `[-55, -35]`, undesired `[-90, -60] U [-30, 90]`, 5 degree grid,
    /// half-wavelength spacing.
    pub fn reference(mt: usize, n: usize) -> Result<Self> {
        Self::from_regions_deg(
            mt,
            n,
            &[AngleRegion::new(-55.0, -35.0, 5.0)],
            &[AngleRegion::new(-90.0, -60.0, 5.0), AngleRegion::new(-30.0, 90.0, 5.0)],
            0.5,
        )
    }

    pub fn theta_d(&self) -> &[f64] {
        &self.theta_d
    }

    pub fn theta_u(&self) -> &[f64] {
        &self.theta_u
    }

    pub fn dt_over_lambda(&self) -> f64 {
        self.dt_over_lambda
    }

    pub fn mt(&self) -> usize {
        self.mt
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Averaged desired-direction matrix, row-major `Mt x Mt`.
    pub fn a_d(&self) -> &[Complex64] {
        &self.a_d
    }

    /// Averaged undesired-direction matrix, row-major `Mt x Mt`.
    pub fn a_u(&self) -> &[Complex64] {
        &self.a_u
    }
}

fn normalize_angles(angles: &[f64], name: &str) -> Result<Vec<f64>> {
    if angles.is_empty() {
        return Err(Error::Scenario(format!("{name} is empty")));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::Scenario(format!("{name} contains non-finite angles")));
    }
    let mut v = angles.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_EPS);
    Ok(v)
}

/// `(1 / (N M)) sum_r a(theta_r) a(theta_r)^H`, accumulated in angle order.
fn averaged_outer_product(angles: &[f64], mt: usize, n: usize, dt_over_lambda: f64) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); mt * mt];
    for &theta in angles {
        let a = steering_vector(theta, mt, dt_over_lambda);
        for i in 0..mt {
            for j in 0..mt {
                acc[i * mt + j] += a[i] * a[j].conj();
            }
        }
    }
    let scale = 1.0 / (n as f64 * angles.len() as f64);
    acc.iter_mut().for_each(|z| *z *= scale);
    acc
}

/// A `[lo, hi]` angular interval sampled every `step` degrees, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRegion {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub step_deg: f64,
}

impl AngleRegion {
    pub const DEFAULT_STEP_DEG: f64 = 5.0;

    pub fn new(lo_deg: f64, hi_deg: f64, step_deg: f64) -> Self {
        Self { lo_deg, hi_deg, step_deg }
    }

    pub fn expand_deg(&self) -> Result<Vec<f64>> {
        let AngleRegion { lo_deg, hi_deg, step_deg } = *self;
        if !(lo_deg.is_finite() && hi_deg.is_finite() && step_deg.is_finite()) {
            return Err(Error::Scenario("angle region has non-finite bounds".into()));
        }
        if lo_deg > hi_deg {
            return Err(Error::Scenario(format!("angle region [{lo_deg}, {hi_deg}] is reversed")));
        }
        if !(-90.0..=90.0).contains(&lo_deg) || !(-90.0..=90.0).contains(&hi_deg) {
            return Err(Error::Scenario(format!("angle region [{lo_deg}, {hi_deg}] leaves [-90, 90]")));
        }
        if step_deg <= 0.0 {
            return Err(Error::Scenario(format!("angle step must be positive, got {step_deg}")));
        }
        let count = ((hi_deg - lo_deg) / step_deg + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| lo_deg + i as f64 * step_deg).collect())
    }
}

/// Feasible set for the transmit matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    /// `||S||_F^2 <= Mt N`.
    Energy,
    /// Energy budget plus a peak-to-average power bound (linear scale).
    Par { gamma_p: f64 },
    /// Unit-modulus entries with arbitrary phase.
    ContinuousPhase,
    /// Unit-modulus entries from the `alphabet`-PSK constellation.
    DiscretePhase { alphabet: usize },
}

impl ConstraintSpec {
    /// PAR constraint from a threshold in dB.
    pub fn par_db(gamma_p_db: f64) -> Self {
        ConstraintSpec::Par { gamma_p: 10f64.powf(gamma_p_db / 10.0) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintSpec::Energy => "energy",
            ConstraintSpec::Par { .. } => "par",
            ConstraintSpec::ContinuousPhase => "continuous",
            ConstraintSpec::DiscretePhase { .. } => "discrete",
        }
    }

    fn validate(&self, mt: usize, n: usize) -> Result<()> {
        match *self {
            ConstraintSpec::Par { gamma_p } => {
                let budget = (mt * n) as f64;
                if !(gamma_p.is_finite() && gamma_p >= 1.0) {
                    return Err(Error::Constraint(format!("gamma_p must be >= 1, got {gamma_p}")));
                }
                if gamma_p >= budget {
                    return Err(Error::Constraint(format!("gamma_p must be < Mt*N = {budget}, got {gamma_p}")));
                }
            }
            ConstraintSpec::DiscretePhase { alphabet } if alphabet < 2 => {
                return Err(Error::Constraint(format!("alphabet size must be >= 2, got {alphabet}")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Everything needed for one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mt: usize,
    pub n: usize,
    pub scenario: AngleScenario,
    pub constraint: ConstraintSpec,
    /// Scalarization weight: `eta * spatial + (1 - eta) * range`.
    pub eta: f64,
    /// Stop once a full sweep decreases the objective by no more than this.
    pub zeta: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Alphabet size of the random MPSK initializer.
    pub init_alphabet: usize,
}

impl RunConfig {
    pub const DEFAULT_ZETA: f64 = 1e-6;
    pub const DEFAULT_MAX_SWEEPS: usize = 1000;
    pub const DEFAULT_INIT_ALPHABET: usize = 8;

    /// Config with the reference angle regions and default stopping rule.
    pub fn new(mt: usize, n: usize, constraint: ConstraintSpec, eta: f64) -> Result<Self> {
        validate_config(Self {
            mt,
            n,
            scenario: AngleScenario::reference(mt, n)?,
            constraint,
            eta,
            zeta: Self::DEFAULT_ZETA,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
            seed: 0,
            init_alphabet: Self::DEFAULT_INIT_ALPHABET,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }
}

/// Checks every invariant of `cfg` and rebuilds the scenario matrices for its
/// dimensions.
pub fn validate_config(cfg: RunConfig) -> Result<RunConfig> {
    check_dims(cfg.mt, cfg.n)?;
    if !(0.0..=1.0).contains(&cfg.eta) {
        return Err(Error::Config(format!("eta out of [0,1]: {}", cfg.eta)));
    }
    if !(cfg.zeta.is_finite() && cfg.zeta > 0.0) {
        return Err(Error::Config(format!("zeta must be > 0, got {}", cfg.zeta)));
    }
    if cfg.max_sweeps < 1 {
        return Err(Error::Config("max_sweeps must be >= 1".into()));
    }
    if cfg.init_alphabet < 2 {
        return Err(Error::Config(format!("init_alphabet must be >= 2, got {}", cfg.init_alphabet)));
    }
    cfg.constraint.validate(cfg.mt, cfg.n)?;
    let scenario = AngleScenario::new(
        cfg.mt,
        cfg.n,
        cfg.scenario.theta_d(),
        cfg.scenario.theta_u(),
        cfg.scenario.dt_over_lambda(),
    )?;
    Ok(RunConfig { scenario, ..cfg })
}
