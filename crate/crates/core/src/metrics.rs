//! Direct evaluation of beampattern, aperiodic correlations and the two ISLR
//! figures of merit. Everything here works on the full matrix and is the
//! reference the per-entry coefficient machinery is checked against.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AngleScenario, WaveformSet};

/// Below this length correlations are summed directly instead of via FFT.
const FFT_MIN_LEN: usize = 16;

/// Values at or below this clamp to [`DB_FLOOR`] when converted to dB.
const DB_CLAMP: f64 = 1e-300;
pub const DB_FLOOR: f64 = -3000.0;

/// Power ratio in dB.
pub fn to_db(x: f64) -> f64 {
    if x <= DB_CLAMP {
        DB_FLOOR
    } else {
        10.0 * x.log10()
    }
}

/// ULA steering vector, element `k` is `exp(j 2 pi (dt/lambda) k sin(theta))`.
pub fn steering_vector(theta: f64, mt: usize, dt_over_lambda: f64) -> Vec<Complex64> {
    let w = 2.0 * PI * dt_over_lambda * theta.sin();
    (0..mt).map(|k| Complex64::from_polar(1.0, w * k as f64)).collect()
}

/// Transmit power toward `theta`: `(1/N) sum_n |a(theta)^H s_n|^2`.
pub fn beampattern(s: &WaveformSet, theta: f64, dt_over_lambda: f64) -> f64 {
    let a = steering_vector(theta, s.mt(), dt_over_lambda);
    let mut acc = 0.0;
    for d in 0..s.n() {
        let proj: Complex64 = (0..s.mt()).map(|m| a[m].conj() * s.get(m, d)).sum();
        acc += proj.norm_sqr();
    }
    acc / s.n() as f64
}

/// Real part of the Hermitian form `x^H A x` (`A` row-major, square).
///
/// Panics if the imaginary residue is not negligible, which can only happen
/// when `A` is not Hermitian.
pub fn hermitian_form(a: &[Complex64], x: &[Complex64]) -> f64 {
    let m = x.len();
    debug_assert_eq!(a.len(), m * m);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let row: Complex64 = (0..m).map(|j| a[i * m + j] * x[j]).sum();
        acc += x[i].conj() * row;
    }
    assert!(
        acc.im.abs() <= 1e-10 * acc.re.abs() + 1e-14,
        "Hermitian form has imaginary residue {} (real part {})",
        acc.im,
        acc.re
    );
    acc.re
}

/// Undesired and desired power sums `(sum_n s_n^H A_u s_n, sum_n s_n^H A_d s_n)`.
pub fn spatial_power(s: &WaveformSet, scenario: &AngleScenario) -> (f64, f64) {
    check_scenario(s, scenario);
    let mut num = 0.0;
    let mut den = 0.0;
    for d in 0..s.n() {
        let col = s.column(d);
        num += hermitian_form(scenario.a_u(), &col);
        den += hermitian_form(scenario.a_d(), &col);
    }
    (num, den)
}

fn check_scenario(s: &WaveformSet, scenario: &AngleScenario) {
    assert_eq!(s.mt(), scenario.mt(), "waveform and scenario disagree on Mt");
}

/// Ratio of undesired to desired averaged beampattern power.
pub fn spatial_islr(s: &WaveformSet, scenario: &AngleScenario) -> Result<f64> {
    let (num, den) = spatial_power(s, scenario);
    if den <= 1e-15 * s.energy() || den <= 0.0 {
        return Err(Error::DegenerateDenominator { power: den });
    }
    Ok(num / den)
}

/// `r(k) = sum_n x[n] conj(y[n+k])` at a single lag, summed directly.
pub fn cross_correlation(x: &[Complex64], y: &[Complex64], k: i64) -> Result<Complex64> {
    let n = x.len();
    assert_eq!(n, y.len(), "correlation inputs must have equal length");
    if k.unsigned_abs() as usize >= n.max(1) {
        return Err(Error::LagOutOfRange { lag: k, len: n });
    }
    Ok(lag_sum(x, y, k))
}

fn lag_sum(x: &[Complex64], y: &[Complex64], k: i64) -> Complex64 {
    let n = x.len() as i64;
    let lo = 0.max(-k);
    let hi = n.min(n - k);
    (lo..hi).map(|i| x[i as usize] * y[(i + k) as usize].conj()).sum()
}

/// Direct O(N^2) correlation at every lag; index `k + N - 1` holds lag `k`.
pub fn correlate_direct(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() as i64;
    (-(n - 1)..n).map(|k| lag_sum(x, y, k)).collect()
}

/// FFT-based aperiodic correlation for sequences of one fixed length.
#[derive(Clone)]
pub struct Correlator {
    n: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator").field("n", &self.n).field("size", &self.size).finish()
    }
}

impl Correlator {
    pub fn new(n: usize) -> Self {
        let size = (2 * n.max(1) - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Zero-padded spectrum of `x`.
    pub fn spectrum(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        buf[..self.n].copy_from_slice(x);
        self.forward.process(&mut buf);
        buf
    }

    /// Correlation from precomputed spectra; index `k + N - 1` holds lag `k`.
    pub fn correlate_spectra(&self, fx: &[Complex64], fy: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = fx.iter().zip(fy).map(|(a, b)| a * b.conj()).collect();
        self.inverse.process(&mut buf);
        // buf[j] = r(-j) (circularly), scaled by the FFT size.
        let scale = 1.0 / self.size as f64;
        let n = self.n as i64;
        (-(n - 1)..n)
            .map(|k| buf[(-k).rem_euclid(self.size as i64) as usize] * scale)
            .collect()
    }

    pub fn correlate(&self, x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
        if self.n < FFT_MIN_LEN {
            return correlate_direct(x, y);
        }
        self.correlate_spectra(&self.spectrum(x), &self.spectrum(y))
    }
}

/// All lags of `r_{x,y}`; FFT for long sequences, direct sum otherwise.
pub fn correlate(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    Correlator::new(x.len()).correlate(x, y)
}

/// `sum_m |r_mm(0)|^2 = sum_m ||s_m||^4`.
pub fn mainlobe_energy(s: &WaveformSet) -> f64 {
    (0..s.mt()).map(|m| s.row_energy(m).powi(2)).sum()
}

/// Range ISL: all auto- and cross-correlation energy except the zero-lag
/// autocorrelation peaks.
pub fn range_isl(s: &WaveformSet) -> f64 {
    range_isl_with(s, &Correlator::new(s.n()))
}

pub(crate) fn range_isl_with(s: &WaveformSet, corr: &Correlator) -> f64 {
    let mt = s.mt();
    let use_fft = s.n() >= FFT_MIN_LEN;
    let spectra: Vec<Vec<Complex64>> = if use_fft {
        s.rows().map(|r| corr.spectrum(r)).collect()
    } else {
        Vec::new()
    };
    let mut total = 0.0;
    for m in 0..mt {
        for l in m..mt {
            let r = if use_fft {
                corr.correlate_spectra(&spectra[m], &spectra[l])
            } else {
                correlate_direct(s.row(m), s.row(l))
            };
            let e: f64 = r.iter().map(|z| z.norm_sqr()).sum();
            // r_lm(k) = conj(r_ml(-k)), so off-diagonal pairs count twice.
            total += if l == m { e } else { 2.0 * e };
        }
    }
    (total - mainlobe_energy(s)).max(0.0)
}

/// Range ISL over the mainlobe energy `sum_m |r_mm(0)|^2`.
pub fn range_islr(s: &WaveformSet) -> Result<f64> {
    let main = mainlobe_energy(s);
    if main <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(range_isl(s) / main)
}

/// Both ISLRs and their scalarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslrReport {
    pub spatial_islr: f64,
    pub range_islr: f64,
    pub objective: f64,
    pub spatial_islr_db: f64,
    pub range_islr_db: f64,
}

impl IslrReport {
    pub fn new(spatial_islr: f64, range_islr: f64, eta: f64) -> Self {
        Self {
            spatial_islr,
            range_islr,
            objective: scalarize(eta, spatial_islr, range_islr),
            spatial_islr_db: to_db(spatial_islr),
            range_islr_db: to_db(range_islr),
        }
    }
}

/// `eta * spatial + (1 - eta) * range`, skipping a term whose weight is zero.
pub fn scalarize(eta: f64, spatial: f64, range: f64) -> f64 {
    let mut f = 0.0;
    if eta > 0.0 {
        f += eta * spatial;
    }
    if eta < 1.0 {
        f += (1.0 - eta) * range;
    }
    f
}

/// Evaluates both metrics and `f_o = eta f_spatial + (1 - eta) f_range`.
pub fn objective(s: &WaveformSet, scenario: &AngleScenario, eta: f64) -> Result<IslrReport> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Config(format!("eta out of [0,1]: {eta}")));
    }
    Ok(IslrReport::new(spatial_islr(s, scenario)?, range_islr(s)?, eta))
}

pub(crate) fn objective_with(
    s: &WaveformSet,
    scenario: &AngleScenario,
    eta: f64,
    corr: &Correlator,
) -> Result<IslrReport> {
    let main = mainlobe_energy(s);
    if main <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let range = range_isl_with(s, corr) / main;
    Ok(IslrReport::new(spatial_islr(s, scenario)?, range, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_waveform, rel_err};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ones(mt: usize, n: usize) -> WaveformSet {
        WaveformSet::from_fn(mt, n, |_, _| c(1.0, 0.0)).unwrap()
    }

    fn barker13() -> WaveformSet {
        let b = [1., 1., 1., 1., 1., -1., -1., 1., 1., -1., 1., -1., 1.];
        WaveformSet::from_rows(&[b.iter().map(|&x| c(x, 0.0)).collect()]).unwrap()
    }

    /// Every lag of every pair, summed by brute force.
    fn brute_isl(s: &WaveformSet) -> f64 {
        let n = s.n() as i64;
        let mut total = 0.0;
        for m in 0..s.mt() {
            for l in 0..s.mt() {
                for k in -(n - 1)..n {
                    if m == l && k == 0 {
                        continue;
                    }
                    let mut r = c(0.0, 0.0);
                    for i in 0..n {
                        let j = i + k;
                        if (0..n).contains(&j) {
                            r += s.get(m, i as usize) * s.get(l, j as usize).conj();
                        }
                    }
                    total += r.norm_sqr();
                }
            }
        }
        total
    }

    #[test]
    fn steering_vector_examples() {
        assert!(steering_vector(0.0, 4, 0.5).iter().all(|z| (*z - c(1.0, 0.0)).norm() < 1e-15));
        let a = steering_vector(PI / 2.0, 2, 0.5);
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-15 && (a[1] - c(-1.0, 0.0)).norm() < 1e-15);
        let a = steering_vector(PI / 6.0, 2, 0.5);
        assert!((a[1] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn beampattern_examples() {
        let s = ones(2, 5);
        assert!((beampattern(&s, 0.0, 0.5) - 4.0).abs() < 1e-12);
        assert!(beampattern(&s, PI / 2.0, 0.5).abs() < 1e-12);
    }

    #[test]
    fn beampattern_matches_column_loop() {
        let s = random_waveform(3, 8, 11);
        let theta: f64 = 0.3;
        let mut acc = 0.0;
        for d in 0..8 {
            let mut re = 0.0;
            let mut im = 0.0;
            for m in 0..3 {
                let ph = -2.0 * PI * 0.5 * m as f64 * theta.sin();
                let z = s.get(m, d);
                re += ph.cos() * z.re - ph.sin() * z.im;
                im += ph.cos() * z.im + ph.sin() * z.re;
            }
            acc += re * re + im * im;
        }
        assert!(rel_err(beampattern(&s, theta, 0.5), acc / 8.0) < 1e-12);
    }

    #[test]
    fn spatial_islr_examples() {
        let s = ones(2, 4);
        let sc = AngleScenario::new(2, 4, &[0.0], &[PI / 2.0], 0.5).unwrap();
        assert!(spatial_islr(&s, &sc).unwrap().abs() < 1e-12);
        let sc = AngleScenario::new(2, 4, &[PI / 2.0], &[0.0], 0.5).unwrap();
        assert!(matches!(spatial_islr(&s, &sc), Err(Error::DegenerateDenominator { .. })));
    }

    #[test]
    fn spatial_islr_equals_averaged_beampatterns() {
        let s = random_waveform(4, 16, 5);
        let sc = AngleScenario::reference(4, 16).unwrap();
        let avg = |angles: &[f64]| angles.iter().map(|&t| beampattern(&s, t, 0.5)).sum::<f64>() / angles.len() as f64;
        let want = avg(sc.theta_u()) / avg(sc.theta_d());
        assert!(rel_err(spatial_islr(&s, &sc).unwrap(), want) < 1e-12);
    }

    #[test]
    fn cross_correlation_examples() {
        let x = vec![c(1.0, 0.0); 4];
        assert_eq!(cross_correlation(&x, &x, 1).unwrap(), c(3.0, 0.0));
        let y = vec![c(1.0, 2.0), c(-0.5, 0.25), c(3.0, -1.0)];
        let e: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        assert!((cross_correlation(&y, &y, 0).unwrap() - c(e, 0.0)).norm() < 1e-12);
        let r = cross_correlation(&[c(1.0, 0.0), c(0.0, 1.0)], &[c(1.0, 0.0), c(-1.0, 0.0)], 0).unwrap();
        assert_eq!(r, c(1.0, -1.0));
        assert!(matches!(cross_correlation(&x, &x, 4), Err(Error::LagOutOfRange { .. })));
        assert!(matches!(cross_correlation(&x, &x, -4), Err(Error::LagOutOfRange { .. })));
    }

    #[test]
    fn range_examples() {
        let b = barker13();
        assert!((brute_isl(&b) - 12.0).abs() < 1e-12);
        assert!((range_isl(&b) - 12.0).abs() < 1e-12);
        assert!((range_islr(&b).unwrap() - 12.0 / 169.0).abs() < 1e-14);
        assert!((to_db(range_islr(&b).unwrap()) + 11.487).abs() < 1e-3);
        let two = ones(1, 2);
        assert!((range_isl(&two) - 2.0).abs() < 1e-14);
        assert!((range_islr(&two).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(range_islr(&WaveformSet::zeros(2, 4).unwrap()), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn range_isl_matches_brute_force() {
        for (mt, n, seed) in [(2, 8, 1), (3, 17, 2), (4, 33, 3)] {
            let s = random_waveform(mt, n, seed);
            assert!(rel_err(range_isl(&s), brute_isl(&s)) < 1e-10, "mt={mt} n={n}");
        }
    }

    #[test]
    fn fft_correlation_matches_direct_up_to_1024() {
        for (n, seed) in [(16, 1), (100, 2), (1024, 3)] {
            let s = random_waveform(2, n, seed);
            let fast = Correlator::new(n).correlate(s.row(0), s.row(1));
            let slow = correlate_direct(s.row(0), s.row(1));
            let scale = slow.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-9 * scale, "n={n}");
            }
        }
    }

    #[test]
    fn objective_weight_collapse() {
        let s = random_waveform(4, 16, 9);
        let sc = AngleScenario::reference(4, 16).unwrap();
        let sp = spatial_islr(&s, &sc).unwrap();
        let rg = range_islr(&s).unwrap();
        assert_eq!(objective(&s, &sc, 1.0).unwrap().objective, sp);
        assert_eq!(objective(&s, &sc, 0.0).unwrap().objective, rg);
        assert!(rel_err(objective(&s, &sc, 0.5).unwrap().objective, 0.5 * (sp + rg)) < 1e-12);
        assert!(objective(&s, &sc, 1.5).is_err());
    }

    #[test]
    fn db_floor() {
        assert_eq!(to_db(0.0), DB_FLOOR);
        assert!((to_db(10.0) - 10.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn correlation_conjugate_symmetry(seed in 0u64..1000, n in 2usize..40) {
            let s = random_waveform(2, n, seed);
            let r01 = correlate_direct(s.row(0), s.row(1));
            let r10 = correlate_direct(s.row(1), s.row(0));
            for k in 0..(2 * n - 1) {
                prop_assert!((r01[k] - r10[2 * n - 2 - k].conj()).norm() <= 1e-12);
            }
        }

        #[test]
        fn metrics_are_scale_invariant(seed in 0u64..1000, re in -3.0f64..3.0, im in 0.1f64..3.0) {
            let s = random_waveform(3, 12, seed);
            let sc = AngleScenario::reference(3, 12).unwrap();
            let k = Complex64::new(re, im);
            let scaled = WaveformSet::from_fn(3, 12, |m, n| k * s.get(m, n)).unwrap();
            prop_assert!(rel_err(spatial_islr(&scaled, &sc).unwrap(), spatial_islr(&s, &sc).unwrap()) < 1e-10);
            prop_assert!(rel_err(range_islr(&scaled).unwrap(), range_islr(&s).unwrap()) < 1e-10);
        }

        #[test]
        fn range_isl_invariant_to_row_phase(seed in 0u64..1000, phi in -PI..PI, row in 0usize..3) {
            let s = random_waveform(3, 20, seed);
            let u = Complex64::from_polar(1.0, phi);
            let rot = WaveformSet::from_fn(3, 20, |m, n| if m == row { u * s.get(m, n) } else { s.get(m, n) }).unwrap();
            prop_assert!(rel_err(range_isl(&rot), range_isl(&s)) < 1e-10);
        }

        #[test]
        fn spatial_islr_invariant_to_column_permutation(seed in 0u64..1000, shift in 1usize..15) {
            let s = random_waveform(4, 16, seed);
            let sc = AngleScenario::reference(4, 16).unwrap();
            let p = WaveformSet::from_fn(4, 16, |m, n| s.get(m, (n * 7 + shift) % 16)).unwrap();
            prop_assert!(rel_err(spatial_islr(&p, &sc).unwrap(), spatial_islr(&s, &sc).unwrap()) < 1e-12);
        }
    }
}
