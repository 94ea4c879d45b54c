//! Legendre polynomials and fully normalized associated Legendre functions.
//!
//! `P̃_lm(x) = √((2l+1)/(4π) · (l−m)!/(l+m)!) · P_lm(x)`, with the
//! Condon–Shortley phase carried by `P_lm`. Columns over `l` for fixed `m` are
//! produced by the normalized three-term recurrence. The diagonal seed
//! `P̃_mm ∝ sin^m θ` leaves the double range at high order, so the recurrence
//! tracks a binary exponent alongside the mantissa.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Highest degree supported by the recurrences.
pub const MAX_DEGREE: usize = 1024;

const SCALE_BITS: i32 = 256;
const BIG: f64 = 1.157_920_892_373_162e77; // 2^256
const SMALL: f64 = 8.636_168_555_094_445e-78; // 2^-256

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::Domain(format!("|x| must be at most 1, got {x}")));
    }
    Ok(())
}

/// `P_l(t)` by the three-term recurrence.
pub fn legendre_poly(l: usize, t: f64) -> Result<f64> {
    check_x(t)?;
    Ok(legendre_poly_unchecked(l, t))
}

pub(crate) fn legendre_poly_unchecked(l: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if l == 0 {
        return p0;
    }
    for k in 1..l {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Writes `P_l(t)` for `l = 0..out.len()` into `out`.
pub(crate) fn legendre_poly_series(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = ((2.0 * lf - 1.0) * t * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
    }
}

/// `P̃_lm(x)` for `l = m..=l_max` at fixed `m` and `x`.
///
/// Each entry is stored as `mantissa · 2^exponent`; [`value`](Self::value)
/// folds the two into a double, which underflows to zero where the true
/// magnitude is below the double range.
#[derive(Clone, Debug)]
pub struct LegendreColumn {
    pub m: usize,
    pub x: f64,
    mantissas: Vec<f64>,
    exponents: Vec<i32>,
}

impl LegendreColumn {
    pub fn l_max(&self) -> usize {
        self.m + self.mantissas.len() - 1
    }

    pub fn value(&self, l: usize) -> f64 {
        let i = l - self.m;
        scaled_to_f64(self.mantissas[i], self.exponents[i])
    }

    /// `(mantissa, exponent)` with value `mantissa · 2^exponent`.
    pub fn scaled(&self, l: usize) -> (f64, i32) {
        let i = l - self.m;
        (self.mantissas[i], self.exponents[i])
    }

    /// `log10 |P̃_lm(x)|`, finite even where the double value underflows.
    pub fn log10_abs(&self, l: usize) -> f64 {
        let (mant, exp) = self.scaled(l);
        mant.abs().log10() + exp as f64 * std::f64::consts::LOG10_2
    }

    /// Values as doubles for `l = m..=l_max`.
    pub fn values(&self) -> Vec<f64> {
        self.mantissas
            .iter()
            .zip(&self.exponents)
            .map(|(&m, &e)| scaled_to_f64(m, e))
            .collect()
    }
}

fn scaled_to_f64(mant: f64, exp: i32) -> f64 {
    if exp == 0 {
        mant
    } else {
        let mut v = mant;
        let mut e = exp;
        while e < 0 && v != 0.0 {
            v *= SMALL;
            e += SCALE_BITS;
        }
        v
    }
}

/// Normalized column `P̃_lm(x)` for `l = m..=l_max`.
pub fn normalized_assoc_legendre(l_max: usize, m: usize, x: f64) -> Result<LegendreColumn> {
    check_x(x)?;
    if m > l_max {
        return Err(Error::Domain(format!("order m={m} exceeds l_max={l_max}")));
    }
    if l_max > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "l_max={l_max} exceeds supported maximum {MAX_DEGREE}"
        )));
    }
    let n = l_max - m + 1;
    let mut mantissas = Vec::with_capacity(n);
    let mut exponents = Vec::with_capacity(n);
    ColumnCoeffs::new(l_max, m).run(x, |mant, exp| {
        mantissas.push(mant);
        exponents.push(exp);
    });
    Ok(LegendreColumn {
        m,
        x,
        mantissas,
        exponents,
    })
}

/// Recurrence coefficients for one order `m`, shared across abscissae.
#[derive(Clone, Debug)]
pub(crate) struct ColumnCoeffs {
    diag: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ColumnCoeffs {
    pub(crate) fn new(l_max: usize, m: usize) -> Self {
        let diag = (1..=m)
            .map(|i| -((2 * i + 1) as f64 / (2 * i) as f64).sqrt())
            .collect();
        let mf = m as f64;
        let (a, b) = (m + 1..=l_max)
            .map(|l| {
                let lf = l as f64;
                let l1 = lf - 1.0;
                (
                    ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt(),
                    ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt(),
                )
            })
            .unzip();
        Self { diag, a, b }
    }

    /// Runs the recurrence, emitting `(mantissa, binary exponent)` per degree.
    fn run(&self, x: f64, mut emit: impl FnMut(f64, i32)) {
        let sin_theta = ((1.0 - x) * (1.0 + x)).sqrt();
        let mut cur = 1.0 / (4.0 * PI).sqrt();
        let mut scale = 0i32;
        for d in &self.diag {
            cur *= d * sin_theta;
            if cur != 0.0 && cur.abs() < SMALL {
                cur *= BIG;
                scale -= 1;
            }
        }
        emit(cur, scale * SCALE_BITS);
        let mut prev = 0.0;
        for (a, b) in self.a.iter().zip(&self.b) {
            let next = a * (x * cur - b * prev);
            prev = cur;
            cur = next;
            if scale < 0 && cur.abs() > 1.0 {
                prev *= SMALL;
                cur *= SMALL;
                scale += 1;
            }
            emit(cur, scale * SCALE_BITS);
        }
    }

    /// Writes `P̃_lm(x)` for `l = m..=l_max` into `out` (length `l_max − m + 1`).
    pub(crate) fn fill(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.a.len() + 1);
        let mut i = 0;
        self.run(x, |mant, exp| {
            out[i] = scaled_to_f64(mant, exp);
            i += 1;
        });
    }
}
