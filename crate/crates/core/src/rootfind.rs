//! Roots of small real polynomials via companion-matrix eigenvalues.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative tolerance on the imaginary part for a root to count as real.
pub const DEFAULT_IMAG_TOL: f64 = 1e-8;

/// Real polynomial, coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    /// `coeffs[k]` multiplies `x^k`. Trailing (highest-degree) zeros are trimmed.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// `coeffs[0]` multiplies the highest power.
    pub fn from_descending(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().rev().copied().collect())
    }

    /// Monic-free product `prod (x - r_i)` scaled by `lead`.
    pub fn from_roots(roots: &[f64], lead: f64) -> Self {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree after trimming; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn derivative(&self) -> RealPolynomial {
        RealPolynomial::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    /// `sum |p_k| |x|^k`, the natural scale for judging a residual at `x`.
    pub fn magnitude_bound(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }
}

/// All complex roots of `p`, with multiplicity.
///
/// Coefficients are normalized by their largest magnitude, the companion
/// matrix is reduced to real Schur form, and every eigenvalue gets a few
/// Newton refinements against the original polynomial.
pub fn roots(p: &RealPolynomial) -> Result<Vec<Complex64>> {
    let deg = p.degree().ok_or(Error::ZeroPolynomial)?;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let c = p.coeffs();
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let c: Vec<f64> = c.iter().map(|x| x / scale).collect();
    if !c.iter().all(|x| x.is_finite()) {
        return Err(Error::RootFinding);
    }

    // Zero roots are exact; peel them off before forming the companion matrix.
    let zeros = c.iter().take_while(|&&x| x == 0.0).count();
    let c = &c[zeros..];
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    let d = c.len() - 1;
    if d == 0 {
        return Ok(out);
    }
    let lead = c[d];
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -c[i] / lead;
    }
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000).ok_or(Error::RootFinding)?;
    let eig = schur.complex_eigenvalues();

    let dp = p.derivative();
    for z in eig.iter() {
        out.push(polish(p, &dp, Complex64::new(z.re, z.im)));
    }
    Ok(out)
}

fn polish(p: &RealPolynomial, dp: &RealPolynomial, mut z: Complex64) -> Complex64 {
    let mut best = p.eval_complex(z).norm();
    for _ in 0..3 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - p.eval_complex(z) / d;
        let r = p.eval_complex(next).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = next;
    }
    z
}

/// Real roots of `p`, ascending and deduplicated at a spacing of `1e-9`.
///
/// A root counts as real if `|im| <= imag_tol (1 + |re|)`, or if it is only
/// slightly complex and `p(re)` is negligible, which catches multiple roots
/// split into tiny conjugate pairs by rounding.
pub fn real_roots(p: &RealPolynomial, imag_tol: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = roots(p)?
        .into_iter()
        .filter(|z| {
            let slack = 1.0 + z.re.abs();
            z.im.abs() <= imag_tol * slack
                || (z.im.abs() <= 1e-5 * slack && p.eval(z.re).abs() <= 1e-12 * p.magnitude_bound(z.re))
        })
        .map(|z| z.re)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    Ok(out)
}
