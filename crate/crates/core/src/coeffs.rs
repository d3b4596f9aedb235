//! Closed-form coefficients of the objective as a function of one entry.
//!
//! With every entry except `s = S[t][d]` held fixed, the two metrics reduce to
//!
//! ```text
//! spatial(s) = (2 Re{a0 s} + a1 + a3 |s|^2) / (2 Re{b0 s} + b1 + b3 |s|^2)
//! range(s)   = (2 Re{c0 s^2} + 2 Re{c1 s} + c2 + c5 |s|^2) / (|s|^4 + d1 |s|^2 + d2)
//! ```
//!
//! The free functions here build the coefficients from scratch. [`RowState`]
//! produces the same coefficients in `O(Mt N)` per entry by maintaining the
//! correlations of the row being swept.

use num_complex::Complex64;

use crate::error::Result;
use crate::metrics::{hermitian_form, range_isl_with, scalarize, Correlator};
use crate::model::{AngleScenario, ConstraintSpec, WaveformSet};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficients of the undesired (`a*`) and desired (`b*`) power sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialCoefficients {
    pub a0: Complex64,
    pub a1: f64,
    pub a3: f64,
    pub b0: Complex64,
    pub b1: f64,
    pub b3: f64,
}

/// Coefficients of the range ISL (`c*`) and of the mainlobe energy (`d*`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeCoefficients {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: f64,
    pub c5: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Bounds on `|s|^2` implied by the constraint, given the other entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintBounds {
    /// Energy left in the budget: `|s|^2 <= gamma_e`.
    pub gamma_e: f64,
    /// PAR lower bound `|s|^2 >= gamma_l` (may be negative); 0 without a PAR bound.
    pub gamma_l: f64,
    /// PAR upper bound `|s|^2 <= gamma_u`; infinite without a PAR bound.
    pub gamma_u: f64,
}

/// Everything a single-entry solver needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryCoefficients {
    pub t: usize,
    pub d: usize,
    pub eta: f64,
    /// Value of the entry before the update.
    pub current: Complex64,
    pub a0: Complex64,
    pub a1: f64,
    pub a3: f64,
    pub b0: Complex64,
    pub b1: f64,
    pub b3: f64,
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: f64,
    pub c5: f64,
    pub d1: f64,
    pub d2: f64,
    pub gamma_e: f64,
    pub gamma_l: f64,
    pub gamma_u: f64,
}

impl EntryCoefficients {
    pub fn from_parts(
        t: usize,
        d: usize,
        eta: f64,
        current: Complex64,
        sp: SpatialCoefficients,
        rg: RangeCoefficients,
        bounds: ConstraintBounds,
    ) -> Self {
        Self {
            t,
            d,
            eta,
            current,
            a0: sp.a0,
            a1: sp.a1,
            a3: sp.a3,
            b0: sp.b0,
            b1: sp.b1,
            b3: sp.b3,
            c0: rg.c0,
            c1: rg.c1,
            c2: rg.c2,
            c5: rg.c5,
            d1: rg.d1,
            d2: rg.d2,
            gamma_e: bounds.gamma_e,
            gamma_l: bounds.gamma_l,
            gamma_u: bounds.gamma_u,
        }
    }

    /// Undesired and desired power sums with the entry set to `v`.
    pub fn spatial_parts(&self, v: Complex64) -> (f64, f64) {
        let e = v.norm_sqr();
        (
            2.0 * (self.a0 * v).re + self.a1 + self.a3 * e,
            2.0 * (self.b0 * v).re + self.b1 + self.b3 * e,
        )
    }

    /// Range ISL and mainlobe energy with the entry set to `v`.
    pub fn range_parts(&self, v: Complex64) -> (f64, f64) {
        let e = v.norm_sqr();
        (
            2.0 * (self.c0 * v * v).re + 2.0 * (self.c1 * v).re + self.c2 + self.c5 * e,
            e * e + self.d1 * e + self.d2,
        )
    }

    pub fn spatial_at(&self, v: Complex64) -> f64 {
        let (num, den) = self.spatial_parts(v);
        num / den
    }

    pub fn range_at(&self, v: Complex64) -> f64 {
        let (isl, main) = self.range_parts(v);
        isl / main
    }

    /// Scalarized objective with the entry set to `v`.
    pub fn objective_at(&self, v: Complex64) -> f64 {
        let spatial = if self.eta > 0.0 { self.spatial_at(v) } else { 0.0 };
        let range = if self.eta < 1.0 { self.range_at(v) } else { 0.0 };
        scalarize(self.eta, spatial, range)
    }

    pub fn objective_polar(&self, r: f64, phi: f64) -> f64 {
        self.objective_at(Complex64::from_polar(r, phi))
    }

    /// Objective at the incoming value of the entry.
    pub fn current_objective(&self) -> f64 {
        self.objective_at(self.current)
    }
}

/// Spatial coefficients for entry `(t, d)`, computed from the full matrix.
pub fn spatial_coeffs(
    s: &WaveformSet,
    t: usize,
    d: usize,
    scenario: &AngleScenario,
) -> Result<SpatialCoefficients> {
    s.check_index(t, d)?;
    let (a0, a1, a3) = quadratic_coeffs(s, t, d, scenario.a_u());
    let (b0, b1, b3) = quadratic_coeffs(s, t, d, scenario.a_d());
    Ok(SpatialCoefficients { a0, a1, a3, b0, b1, b3 })
}

/// `sum_n col_n^H A col_n = 2 Re{k0 s} + k1 + k3 |s|^2` with `s = S[t][d]`.
fn quadratic_coeffs(s: &WaveformSet, t: usize, d: usize, a: &[Complex64]) -> (Complex64, f64, f64) {
    let mt = s.mt();
    let mut col = s.column(d);
    col[t] = ZERO;
    let k0: Complex64 = (0..mt).filter(|&m| m != t).map(|m| col[m].conj() * a[m * mt + t]).sum();
    let mut k1 = hermitian_form(a, &col);
    for n in (0..s.n()).filter(|&n| n != d) {
        k1 += hermitian_form(a, &s.column(n));
    }
    (k0, k1, a[t * mt + t].re)
}

/// Range coefficients for entry `(t, d)`, built from correlations of the
/// entry-zeroed rows.
pub fn range_coeffs(s: &WaveformSet, t: usize, d: usize) -> Result<RangeCoefficients> {
    s.check_index(t, d)?;
    let (mt, n) = (s.mt(), s.n());
    let corr = Correlator::new(n);
    let mut xt = s.row(t).to_vec();
    xt[d] = ZERO;

    let lag = |k: i64| (k + n as i64 - 1) as usize;
    let at = |row: &[Complex64], i: i64| -> Complex64 {
        if (0..n as i64).contains(&i) {
            row[i as usize]
        } else {
            ZERO
        }
    };
    let lags = -(n as i64 - 1)..n as i64;
    let d = d as i64;

    let mut c0 = ZERO;
    let mut c1 = ZERO;
    let mut c2 = 0.0;
    let mut c5 = 0.0;

    // Autocorrelation of row t.
    let g_tt = corr.correlate(&xt, &xt);
    for k in lags.clone().filter(|&k| k != 0) {
        let g = g_tt[lag(k)];
        let alpha = at(&xt, d + k).conj();
        let beta = at(&xt, d - k);
        c0 += alpha * beta.conj();
        c1 += g.conj() * alpha + g * beta.conj();
        c2 += g.norm_sqr();
        c5 += alpha.norm_sqr() + beta.norm_sqr();
    }

    // Cross-correlations of row t with every other row, both orders.
    for l in (0..mt).filter(|&l| l != t) {
        let sl = s.row(l);
        let g_tl = corr.correlate(&xt, sl);
        let g_lt = corr.correlate(sl, &xt);
        for k in lags.clone() {
            let alpha = at(sl, d + k).conj();
            let beta = at(sl, d - k);
            c1 += g_tl[lag(k)].conj() * alpha + g_lt[lag(k)] * beta.conj();
            c2 += g_tl[lag(k)].norm_sqr() + g_lt[lag(k)].norm_sqr();
            c5 += alpha.norm_sqr() + beta.norm_sqr();
        }
    }

    // Sidelobes among the other rows do not involve row t at all.
    let mut without_t = s.clone();
    for k in 0..n {
        without_t.set(t, k, ZERO);
    }
    c2 += range_isl_with(&without_t, &corr);

    let xt_energy: f64 = xt.iter().map(|z| z.norm_sqr()).sum();
    let others: f64 = (0..mt).filter(|&m| m != t).map(|m| s.row_energy(m).powi(2)).sum();
    Ok(RangeCoefficients { c0, c1, c2, c5, d1: 2.0 * xt_energy, d2: others + xt_energy * xt_energy })
}

/// Energy and PAR bounds on `|S[t][d]|^2`.
pub fn constraint_bounds(
    s: &WaveformSet,
    t: usize,
    d: usize,
    constraint: &ConstraintSpec,
) -> Result<ConstraintBounds> {
    s.check_index(t, d)?;
    let rest = s.energy() - s.get(t, d).norm_sqr();
    let peak = s
        .as_slice()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != t * s.n() + d)
        .map(|(_, z)| z.norm_sqr())
        .fold(0.0, f64::max);
    Ok(bounds_from(s.mt() * s.n(), rest, peak, constraint))
}

fn bounds_from(size: usize, rest: f64, peak: f64, constraint: &ConstraintSpec) -> ConstraintBounds {
    let budget = size as f64;
    let gamma_e = budget - rest;
    match *constraint {
        ConstraintSpec::Par { gamma_p } => ConstraintBounds {
            gamma_e,
            gamma_l: (budget * peak - gamma_p * rest) / gamma_p,
            gamma_u: gamma_p * rest / (budget - gamma_p),
        },
        _ => ConstraintBounds { gamma_e, gamma_l: 0.0, gamma_u: f64::INFINITY },
    }
}

/// All coefficients for entry `(t, d)`, computed from scratch.
pub fn entry_coefficients(
    s: &WaveformSet,
    t: usize,
    d: usize,
    scenario: &AngleScenario,
    constraint: &ConstraintSpec,
    eta: f64,
) -> Result<EntryCoefficients> {
    Ok(EntryCoefficients::from_parts(
        t,
        d,
        eta,
        s.get(t, d),
        spatial_coeffs(s, t, d, scenario)?,
        range_coeffs(s, t, d)?,
        constraint_bounds(s, t, d, constraint)?,
    ))
}

/// Incrementally maintained correlations for a sweep along row `t`.
///
/// Built once per row (all rows other than `t` stay fixed while `t` is swept)
/// and updated in `O(Mt N)` after each entry change.
#[derive(Debug, Clone)]
pub struct RowState {
    t: usize,
    mt: usize,
    n: usize,
    /// `cross[l][k + N - 1] = r_{t,l}(k)` for `l != t`.
    cross: Vec<Vec<Complex64>>,
    /// `auto[k + N - 1] = r_{t,t}(k)`.
    auto: Vec<Complex64>,
    /// Range ISL among the rows other than `t`.
    others_isl: f64,
    others_energy: f64,
    others_energy_sq: f64,
    others_peak: f64,
    row_energy: f64,
    undesired_power: f64,
    desired_power: f64,
}

impl RowState {
    pub fn new(s: &WaveformSet, t: usize, scenario: &AngleScenario, corr: &Correlator) -> Self {
        let (mt, n) = (s.mt(), s.n());
        let row_t = s.row(t);
        let spec_t = corr.spectrum(row_t);
        let cross = (0..mt)
            .map(|l| {
                if l == t {
                    Vec::new()
                } else if n < 16 {
                    crate::metrics::correlate_direct(row_t, s.row(l))
                } else {
                    corr.correlate_spectra(&spec_t, &corr.spectrum(s.row(l)))
                }
            })
            .collect();
        let auto = if n < 16 {
            crate::metrics::correlate_direct(row_t, row_t)
        } else {
            corr.correlate_spectra(&spec_t, &spec_t)
        };

        let mut without_t = s.clone();
        for k in 0..n {
            without_t.set(t, k, ZERO);
        }
        let others_isl = range_isl_with(&without_t, corr);
        let others = (0..mt).filter(|&m| m != t);
        let others_energy = others.clone().map(|m| s.row_energy(m)).sum();
        let others_energy_sq = others.clone().map(|m| s.row_energy(m).powi(2)).sum();
        let others_peak = others
            .flat_map(|m| s.row(m).iter().map(|z| z.norm_sqr()))
            .fold(0.0, f64::max);
        let (undesired_power, desired_power) = crate::metrics::spatial_power(s, scenario);
        Self {
            t,
            mt,
            n,
            cross,
            auto,
            others_isl,
            others_energy,
            others_energy_sq,
            others_peak,
            row_energy: s.row_energy(t),
            undesired_power,
            desired_power,
        }
    }

    pub fn row(&self) -> usize {
        self.t
    }

    fn spatial(&self, s: &WaveformSet, d: usize, scenario: &AngleScenario) -> SpatialCoefficients {
        let (t, mt) = (self.t, self.mt);
        let v = s.get(t, d);
        let col = s.column(d);
        let (au, ad) = (scenario.a_u(), scenario.a_d());
        let mut a0 = ZERO;
        let mut b0 = ZERO;
        for m in (0..mt).filter(|&m| m != t) {
            a0 += col[m].conj() * au[m * mt + t];
            b0 += col[m].conj() * ad[m * mt + t];
        }
        let a3 = au[t * mt + t].re;
        let b3 = ad[t * mt + t].re;
        let e = v.norm_sqr();
        SpatialCoefficients {
            a0,
            a1: self.undesired_power - 2.0 * (a0 * v).re - a3 * e,
            a3,
            b0,
            b1: self.desired_power - 2.0 * (b0 * v).re - b3 * e,
            b3,
        }
    }

    /// Autocorrelation of row `t` with entry `d` zeroed.
    fn zeroed_auto(&self, xt: &[Complex64], d: usize, v: Complex64) -> Vec<Complex64> {
        let n = self.n as i64;
        let d = d as i64;
        let mut g = self.auto.clone();
        for k in -(n - 1)..n {
            let i = (k + n - 1) as usize;
            if (0..n).contains(&(d + k)) {
                g[i] -= v * xt[(d + k) as usize].conj();
            }
            if (0..n).contains(&(d - k)) {
                g[i] -= xt[(d - k) as usize] * v.conj();
            }
        }
        g[(n - 1) as usize] -= v.norm_sqr();
        g
    }

    fn range(&self, s: &WaveformSet, d: usize) -> RangeCoefficients {
        let (t, n) = (self.t, self.n as i64);
        let v = s.get(t, d);
        let mut xt = s.row(t).to_vec();
        xt[d] = ZERO;
        let di = d as i64;

        let mut c0 = ZERO;
        let mut c1 = ZERO;
        let mut c2 = self.others_isl;

        let g_tt = self.zeroed_auto(&xt, d, v);
        for k in (-(n - 1)..n).filter(|&k| k != 0) {
            let g = g_tt[(k + n - 1) as usize];
            let alpha = if (0..n).contains(&(di + k)) { xt[(di + k) as usize].conj() } else { ZERO };
            let beta = if (0..n).contains(&(di - k)) { xt[(di - k) as usize] } else { ZERO };
            c0 += alpha * beta.conj();
            c1 += g.conj() * alpha + g * beta.conj();
            c2 += g.norm_sqr();
        }

        // r_{l,t}(k) = conj(r_{t,l}(-k)), so both cross orders contribute equally.
        let mut cross_c1 = ZERO;
        let mut cross_c2 = 0.0;
        for l in (0..self.mt).filter(|&l| l != t) {
            let sl = s.row(l);
            for (i, &r) in self.cross[l].iter().enumerate() {
                let j = di + i as i64 - (n - 1);
                let mut g = r;
                if (0..n).contains(&j) {
                    let alpha = sl[j as usize].conj();
                    g -= v * alpha;
                    cross_c1 += g.conj() * alpha;
                }
                cross_c2 += g.norm_sqr();
            }
        }
        c1 += 2.0 * cross_c1;
        c2 += 2.0 * cross_c2;

        let xt_energy = self.row_energy - v.norm_sqr();
        RangeCoefficients {
            c0,
            c1,
            c2,
            c5: 2.0 * (self.others_energy + xt_energy),
            d1: 2.0 * xt_energy,
            d2: self.others_energy_sq + xt_energy * xt_energy,
        }
    }

    fn bounds(&self, s: &WaveformSet, d: usize, constraint: &ConstraintSpec) -> ConstraintBounds {
        let v = s.get(self.t, d);
        let rest = self.others_energy + self.row_energy - v.norm_sqr();
        let peak = match constraint {
            ConstraintSpec::Par { .. } => s
                .row(self.t)
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != d)
                .map(|(_, z)| z.norm_sqr())
                .fold(self.others_peak, f64::max),
            _ => 0.0,
        };
        bounds_from(self.mt * self.n, rest, peak, constraint)
    }

    /// Coefficients for entry `(t, d)` of the current matrix.
    pub fn coefficients(
        &self,
        s: &WaveformSet,
        d: usize,
        scenario: &AngleScenario,
        constraint: &ConstraintSpec,
        eta: f64,
    ) -> EntryCoefficients {
        EntryCoefficients::from_parts(
            self.t,
            d,
            eta,
            s.get(self.t, d),
            self.spatial(s, d, scenario),
            self.range(s, d),
            self.bounds(s, d, constraint),
        )
    }

    /// Records that entry `(t, d)` changes to `new`. Call before writing `new`
    /// into `s`.
    pub fn update(&mut self, s: &WaveformSet, d: usize, new: Complex64, scenario: &AngleScenario) {
        let (t, n) = (self.t, self.n as i64);
        let old = s.get(t, d);
        let delta = new - old;
        let di = d as i64;

        let sp = self.spatial(s, d, scenario);
        let e = new.norm_sqr();
        self.undesired_power = 2.0 * (sp.a0 * new).re + sp.a1 + sp.a3 * e;
        self.desired_power = 2.0 * (sp.b0 * new).re + sp.b1 + sp.b3 * e;

        let mut xt = s.row(t).to_vec();
        xt[d] = ZERO;
        let mut g = self.zeroed_auto(&xt, d, old);
        for k in -(n - 1)..n {
            let i = (k + n - 1) as usize;
            if (0..n).contains(&(di + k)) {
                g[i] += new * xt[(di + k) as usize].conj();
            }
            if (0..n).contains(&(di - k)) {
                g[i] += xt[(di - k) as usize] * new.conj();
            }
        }
        g[(n - 1) as usize] += e;
        self.auto = g;

        for l in (0..self.mt).filter(|&l| l != t) {
            let sl = s.row(l);
            for (i, r) in self.cross[l].iter_mut().enumerate() {
                let j = di + i as i64 - (n - 1);
                if (0..n).contains(&j) {
                    *r += delta * sl[j as usize].conj();
                }
            }
        }
        self.row_energy += e - old.norm_sqr();
    }
}
