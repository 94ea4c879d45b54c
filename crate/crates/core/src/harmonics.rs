//! Spherical harmonics, the reference inverse transform, and the empirical
//! forward transform from scattered samples.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::healpix::{HealpixGrid, SphPoint};
use crate::legendre::{normalized_assoc_legendre, ColumnCoeffs};

/// Complex coefficients `a_lm` for `0 ≤ m ≤ l ≤ l_max`.
///
/// Storage is l-major: `(0,0), (1,0), (1,1), (2,0), …`, i.e. index
/// `l(l+1)/2 + m`. Negative orders are implied by the real-field symmetry
/// `a_{l,−m} = (−1)^m conj(a_lm)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoeffs {
    l_max: usize,
    coeffs: Vec<Complex64>,
}

#[inline]
pub fn packed_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

impl HarmonicCoeffs {
    pub fn zeros(l_max: usize) -> Self {
        Self {
            l_max,
            coeffs: vec![Complex64::new(0.0, 0.0); packed_index(l_max, l_max) + 1],
        }
    }

    pub fn from_packed(l_max: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = packed_index(l_max, l_max) + 1;
        if coeffs.len() != expected {
            return Err(Error::Validation(format!(
                "l_max={l_max} needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { l_max, coeffs })
    }

    /// Gaussian coefficients of a real field with unit expected power per
    /// `(l, m)`: `a_l0 ~ N(0, 1)`, real and imaginary parts `~ N(0, 1/2)`.
    pub fn random<R: Rng + ?Sized>(l_max: usize, rng: &mut R) -> Self {
        let mut out = Self::zeros(l_max);
        let half = 0.5f64.sqrt();
        for l in 0..=l_max {
            let g: f64 = rng.sample(StandardNormal);
            out.set(l, 0, Complex64::new(g, 0.0));
            for m in 1..=l {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                out.set(l, m, Complex64::new(half * re, half * im));
            }
        }
        out
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn get(&self, l: usize, m: usize) -> Complex64 {
        self.coeffs[packed_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: usize, value: Complex64) {
        self.coeffs[packed_index(l, m)] = value;
    }

    pub fn get_mut(&mut self, l: usize, m: usize) -> &mut Complex64 {
        &mut self.coeffs[packed_index(l, m)]
    }

    /// Coefficient for any order, negative ones by symmetry.
    pub fn get_signed(&self, l: usize, m: i64) -> Complex64 {
        let a = self.get(l, m.unsigned_abs() as usize);
        if m >= 0 {
            a
        } else if m % 2 == 0 {
            a.conj()
        } else {
            -a.conj()
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `(l, m, a_lm)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..=self.l_max).flat_map(move |l| (0..=l).map(move |m| (l, m, self.get(l, m))))
    }

    /// `Σ_{l, −l≤m≤l} |a_lm|²`, negative orders counted through symmetry.
    pub fn energy(&self) -> f64 {
        self.iter()
            .map(|(_, m, a)| {
                if m == 0 {
                    a.norm_sqr()
                } else {
                    2.0 * a.norm_sqr()
                }
            })
            .sum()
    }

    /// Same coefficients with degrees above `l_max` dropped or zero-filled.
    pub fn resized(&self, l_max: usize) -> Self {
        let mut out = Self::zeros(l_max);
        for l in 0..=l_max.min(self.l_max) {
            for m in 0..=l {
                out.set(l, m, self.get(l, m));
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + other`, both at the same `l_max`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.l_max != other.l_max {
            return Err(Error::Validation(format!(
                "l_max mismatch: {} vs {}",
                self.l_max, other.l_max
            )));
        }
        Ok(Self {
            l_max: self.l_max,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Relative L2 distance `‖self − reference‖ / ‖reference‖` with the
    /// symmetric energy norm.
    pub fn relative_error(&self, reference: &Self) -> Result<f64> {
        let neg = reference.scaled(-1.0);
        Ok((self.add(&neg)?.energy() / reference.energy()).sqrt())
    }
}

/// `Y_lm(θ, φ)` with the Condon–Shortley phase; negative `m` via
/// `Y_{l,−m} = (−1)^m conj(Y_lm)`.
pub fn eval_y(l: usize, m: i64, point: &SphPoint) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("|m|={am} exceeds l={l}")));
    }
    let p = normalized_assoc_legendre(l, am, point.theta.cos())?.value(l);
    let y = Complex64::from_polar(p, am as f64 * point.phi);
    Ok(if m >= 0 {
        y
    } else if am.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    })
}

fn check_band(alm: &HarmonicCoeffs, l_st: usize, l_en: usize) -> Result<()> {
    if l_st > l_en {
        return Err(Error::EmptyBand { l_st, l_en });
    }
    if l_en > alm.l_max() {
        return Err(Error::Validation(format!(
            "band top l_en={l_en} exceeds coefficient l_max={}",
            alm.l_max()
        )));
    }
    Ok(())
}

/// `Σ_{l=l_st}^{l_en} Σ_m a_lm Y_lm(x)` at each point by direct summation.
///
/// Uses the real-field symmetry: `a_l0 Y_l0 + 2 Re Σ_{m>0} a_lm Y_lm`.
/// Cost is `O(N · l_en²)`; this is the reference path for the fast transform.
pub fn naive_isht(
    alm: &HarmonicCoeffs,
    points: &[SphPoint],
    l_st: usize,
    l_en: usize,
) -> Result<Vec<f64>> {
    check_band(alm, l_st, l_en)?;
    let columns: Vec<ColumnCoeffs> = (0..=l_en).map(|m| ColumnCoeffs::new(l_en, m)).collect();
    let mut buf = vec![0.0; l_en + 1];
    Ok(points
        .iter()
        .map(|pt| {
            let x = pt.theta.cos();
            let mut total = 0.0;
            for (m, col) in columns.iter().enumerate() {
                let p = &mut buf[..l_en - m + 1];
                col.fill(x, p);
                let mut q = Complex64::new(0.0, 0.0);
                for l in l_st.max(m)..=l_en {
                    q += alm.get(l, m) * p[l - m];
                }
                if m == 0 {
                    total += q.re;
                } else {
                    total += 2.0 * (q * Complex64::from_polar(1.0, m as f64 * pt.phi)).re;
                }
            }
            total
        })
        .collect())
}

/// How sample cubature weights are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightScheme {
    /// `4π / N` for every sample.
    Equal,
    /// One weight per line, read from a file.
    File(PathBuf),
    /// Areas of the nearest-sample cells on a fine HEALPix raster.
    ApproxVoronoi { fine_nside: usize },
}

impl WeightScheme {
    pub const DEFAULT_FINE_NSIDE: usize = 64;
}

fn check_distinct(points: &[SphPoint]) -> Result<()> {
    let mut keys: Vec<(u64, u64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.theta.to_bits(), p.phi.to_bits(), i))
        .collect();
    keys.sort_unstable();
    for w in keys.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(Error::Validation(format!(
                "samples {} and {} coincide",
                w[0].2, w[1].2
            )));
        }
    }
    Ok(())
}

fn rescale_to_sphere(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    let factor = 4.0 * PI / total;
    weights.iter_mut().for_each(|w| *w *= factor);
}

/// Cubature weights for scattered samples. Every scheme returns strictly
/// positive weights summing to `4π`.
pub fn compute_weights(points: &[SphPoint], scheme: &WeightScheme) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Validation("no sample points".into()));
    }
    check_distinct(points)?;
    let n = points.len();
    let mut weights = match scheme {
        WeightScheme::Equal => vec![4.0 * PI / n as f64; n],
        WeightScheme::File(path) => {
            let w = crate::formats::read_weights(path)?;
            if w.len() != n {
                return Err(Error::Validation(format!(
                    "{}: {} weights for {n} points",
                    path.display(),
                    w.len()
                )));
            }
            if let Some(i) = w.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{}: weight {i} is not positive ({})",
                    path.display(),
                    w[i]
                )));
            }
            w
        }
        WeightScheme::ApproxVoronoi { fine_nside } => voronoi_weights(points, *fine_nside)?,
    };
    rescale_to_sphere(&mut weights);
    Ok(weights)
}

fn voronoi_weights(points: &[SphPoint], fine_nside: usize) -> Result<Vec<f64>> {
    let fine = HealpixGrid::new(fine_nside)?;
    let samples: Vec<[f64; 3]> = points.iter().map(SphPoint::unit_vector).collect();
    let mut counts = vec![0usize; points.len()];
    for c in fine.centers() {
        let v = c.unit_vector();
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, s) in samples.iter().enumerate() {
            let d = crate::healpix::dot(&v, s);
            if d > best_dot {
                best_dot = d;
                best = i;
            }
        }
        counts[best] += 1;
    }
    let cell = fine.weight();
    let mut weights: Vec<f64> = counts.iter().map(|&c| c as f64 * cell).collect();
    let min_positive = weights
        .iter()
        .copied()
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    for w in weights.iter_mut().filter(|w| **w == 0.0) {
        *w = min_positive;
    }
    Ok(weights)
}

/// True when `(l_max + 1)²` coefficients exceed the sample count, in which
/// case the empirical transform aliases.
pub fn aliasing_risk(l_max: usize, n_samples: usize) -> bool {
    (l_max + 1) * (l_max + 1) > n_samples
}

/// `â_lm = Σ_i w_i T(x_i) conj(Y_lm(x_i))` for `0 ≤ m ≤ l ≤ l_max`.
pub fn sht_irregular(
    points: &[SphPoint],
    values: &[f64],
    weights: &[f64],
    l_max: usize,
) -> Result<HarmonicCoeffs> {
    if points.len() != values.len() || points.len() != weights.len() {
        return Err(Error::Validation(format!(
            "length mismatch: {} points, {} values, {} weights",
            points.len(),
            values.len(),
            weights.len()
        )));
    }
    let mut alm = HarmonicCoeffs::zeros(l_max);
    let columns: Vec<ColumnCoeffs> = (0..=l_max).map(|m| ColumnCoeffs::new(l_max, m)).collect();
    let mut buf = vec![0.0; l_max + 1];
    for ((pt, &value), &w) in points.iter().zip(values).zip(weights) {
        let wt = w * value;
        if wt == 0.0 {
            continue;
        }
        let x = pt.theta.cos();
        for (m, col) in columns.iter().enumerate() {
            let p = &mut buf[..l_max - m + 1];
            col.fill(x, p);
            let phase = Complex64::from_polar(wt, -(m as f64) * pt.phi);
            for l in m..=l_max {
                *alm.get_mut(l, m) += phase * p[l - m];
            }
        }
    }
    Ok(alm)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::legendre::legendre_poly;

    fn random_point(rng: &mut ChaCha8Rng) -> SphPoint {
        let z: f64 = rng.random_range(-1.0..1.0);
        SphPoint::new(z.acos(), rng.random_range(0.0..2.0 * PI)).unwrap()
    }

    #[test]
    fn y00_is_constant() {
        let y = eval_y(0, 0, &SphPoint::new(1.1, 4.0).unwrap()).unwrap();
        assert!((y.re - 0.282_094_791_773_878_14).abs() < 1e-15);
        assert_eq!(y.im, 0.0);
    }

    #[test]
    fn negative_order_symmetry() {
        let p = SphPoint::new(1.0, 2.0).unwrap();
        let a = eval_y(1, -1, &p).unwrap();
        let b = eval_y(1, 1, &p).unwrap();
        assert!((a + b.conj()).norm() < 1e-15);
        assert!(eval_y(2, 3, &p).is_err());
    }

    #[test]
    fn addition_formula_l3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (x, y) = (random_point(&mut rng), random_point(&mut rng));
            let lhs: Complex64 = (-3i64..=3)
                .map(|m| eval_y(3, m, &x).unwrap() * eval_y(3, m, &y).unwrap().conj())
                .sum();
            let rhs = 7.0 / (4.0 * PI) * legendre_poly(3, x.cos_angle(&y)).unwrap();
            assert!((lhs.re - rhs).abs() < 1e-12 && lhs.im.abs() < 1e-12);
        }
    }

    #[test]
    fn naive_isht_simple_fields() {
        let pts: Vec<_> = HealpixGrid::new(4).unwrap().centers();
        let mut alm = HarmonicCoeffs::zeros(2);
        alm.set(0, 0, Complex64::new((4.0 * PI).sqrt(), 0.0));
        for v in naive_isht(&alm, &pts, 0, 2).unwrap() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let mut alm = HarmonicCoeffs::zeros(2);
        alm.set(1, 0, Complex64::new(1.0, 0.0));
        let vals = naive_isht(&alm, &pts, 0, 2).unwrap();
        let c = (3.0 / (4.0 * PI)).sqrt();
        for (v, p) in vals.iter().zip(&pts) {
            assert!((v - c * p.theta.cos()).abs() < 1e-14);
        }
        assert!(matches!(
            naive_isht(&alm, &pts, 2, 1),
            Err(Error::EmptyBand { .. })
        ));
        assert!(naive_isht(&alm, &pts, 0, 3).is_err());
    }

    #[test]
    fn band_without_monopole_has_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alm = HarmonicCoeffs::random(6, &mut rng);
        let grid = HealpixGrid::new(16).unwrap();
        let vals = naive_isht(&alm, &grid.centers(), 1, 6).unwrap();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-3);
    }

    #[test]
    fn weight_schemes() {
        let grid = HealpixGrid::new(8).unwrap();
        let pts = grid.centers();
        let eq = compute_weights(&pts, &WeightScheme::Equal).unwrap();
        assert!(eq.iter().all(|w| (w - 4.0 * PI / 768.0).abs() < 1e-15));
        let vor = compute_weights(&pts, &WeightScheme::ApproxVoronoi { fine_nside: 64 }).unwrap();
        for w in &vor {
            assert!((w / (4.0 * PI / 768.0) - 1.0).abs() < 0.05, "{w}");
        }
        for w in [&eq, &vor] {
            assert!((w.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        }
        let mut dup = pts.clone();
        dup[5] = dup[2];
        assert!(matches!(
            compute_weights(&dup, &WeightScheme::Equal),
            Err(Error::Validation(_))
        ));
        assert!(compute_weights(&[], &WeightScheme::Equal).is_err());
    }

    #[test]
    fn starved_samples_get_positive_weight() {
        // Two nearly coincident samples: one of them owns no fine pixel.
        let pts = vec![
            SphPoint::new(1.0, 1.0).unwrap(),
            SphPoint::new(1.0, 1.0 + 1e-9).unwrap(),
            SphPoint::new(2.5, 4.0).unwrap(),
        ];
        let w = compute_weights(&pts, &WeightScheme::ApproxVoronoi { fine_nside: 4 }).unwrap();
        assert!(w.iter().all(|&v| v > 0.0));
        assert!((w.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sht_of_constant_field() {
        let grid = HealpixGrid::new(8).unwrap();
        let pts = grid.centers();
        let w = compute_weights(&pts, &WeightScheme::Equal).unwrap();
        let c = 2.5;
        let alm = sht_irregular(&pts, &vec![c; pts.len()], &w, 16).unwrap();
        let a00 = alm.get(0, 0);
        assert!((a00.re - c * (4.0 * PI).sqrt()).abs() < 1e-6);
        // Equal-weight HEALPix quadrature of Y_l0 at n_side = 8 leaks up to
        // 5.8e-3 of a_00 (largest at l = 12); orders not divisible by 4 cancel
        // along each ring.
        for (l, m, a) in alm.iter() {
            if m % 4 != 0 {
                assert!(a.norm() <= 1e-12 * a00.norm(), "l={l} m={m} {a}");
            } else if l > 0 {
                assert!(a.norm() <= 6e-3 * a00.norm(), "l={l} m={m} {a}");
            }
        }
        let zero = sht_irregular(&pts, &vec![0.0; pts.len()], &w, 4).unwrap();
        assert!(zero.iter().all(|(_, _, a)| a == Complex64::new(0.0, 0.0)));
        assert!(sht_irregular(&pts, &[1.0], &w, 2).is_err());
    }

    #[test]
    fn sht_recovers_real_part_of_y32() {
        // Re(Y_32) = (Y_32 + Y_{3,−2}) / 2, so â_32 = 1/2.
        let grid = HealpixGrid::new(64).unwrap();
        let pts = grid.centers();
        let vals: Vec<f64> = pts.iter().map(|p| eval_y(3, 2, p).unwrap().re).collect();
        let w = vec![grid.weight(); pts.len()];
        let alm = sht_irregular(&pts, &vals, &w, 4).unwrap();
        assert!((alm.get(3, 2) - Complex64::new(0.5, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn energy_counts_negative_orders() {
        let mut a = HarmonicCoeffs::zeros(1);
        a.set(0, 0, Complex64::new(2.0, 0.0));
        a.set(1, 1, Complex64::new(1.0, 1.0));
        assert_eq!(a.energy(), 4.0 + 2.0 * 2.0);
        assert_eq!(a.get_signed(1, -1), Complex64::new(-1.0, 1.0));
    }
}
