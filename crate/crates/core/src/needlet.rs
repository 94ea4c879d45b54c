//! Needlet frames: planning, evaluation, analysis, synthesis, inner products
//! and thresholding.
//!
//! Level `j` uses the band `⌈B^{j−1}⌉ ≤ l ≤ ⌊B^{j+1}⌋` weighted by
//! `b(l/B^j)`, and is centred on the pixels of a HEALPix grid with
//! `⌊B^{j+1}⌋ ≤ 2·n_side_j` and equal weight `λ_j = 4π/n_pix_j`.
//! Analysis and synthesis truncate each band at the data's `l_max`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fastsht::{IshtOptions, IshtPlan};
use crate::harmonics::{eval_y, naive_isht, HarmonicCoeffs};
use crate::healpix::{HealpixGrid, SphPoint, MAX_NSIDE};
use crate::legendre::legendre_poly_series;
use crate::window::WindowSpec;

// Powers of B that land within rounding of an integer are snapped to it, so
// that the floor/ceil band rules are stable for integral B.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-10 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// One frequency level of a needlet plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub j: usize,
    /// `⌈B^{j−1}⌉`.
    pub l_st: usize,
    /// `⌊B^{j+1}⌋`, the top of the window support.
    pub l_top: usize,
    /// `min(l_top, l_max)`.
    pub l_en: usize,
    pub n_side: usize,
    /// Cubature weight `4π / (12·n_side²)`.
    pub lambda: f64,
}

impl Level {
    pub fn n_pix(&self) -> usize {
        12 * self.n_side * self.n_side
    }
}

#[derive(Clone, Debug)]
pub struct NeedletPlan {
    window: Arc<WindowSpec>,
    l_max: usize,
    levels: Vec<Level>,
}

/// Builds the level layout for dilation `b > 1` and data bandwidth `l_max ≥ 1`.
///
/// `j_max` is the largest `j` with `⌈B^{j−1}⌉ ≤ l_max`. The top level can be
/// degenerate: for `B = 2, l_max = 16` level 5 has band `[16, 16]` where the
/// window vanishes, so its coefficients are identically zero.
pub fn make_plan(b: f64, l_max: usize) -> Result<NeedletPlan> {
    let window = WindowSpec::new(b)?;
    NeedletPlan::with_window(Arc::new(window), l_max)
}

impl NeedletPlan {
    pub fn with_window(window: Arc<WindowSpec>, l_max: usize) -> Result<Self> {
        if l_max == 0 {
            return Err(Error::InvalidArgument("l_max must be at least 1".into()));
        }
        let b = window.base();
        let mut levels = Vec::new();
        for j in 0.. {
            let l_st = snap(b.powi(j as i32 - 1)).ceil() as usize;
            if l_st > l_max {
                break;
            }
            let l_top = snap(b.powi(j as i32 + 1)).floor() as usize;
            let n_side = l_top.div_ceil(2).max(1).next_power_of_two();
            if n_side > MAX_NSIDE {
                return Err(Error::InvalidArgument(format!(
                    "level {j} needs n_side={n_side} beyond the supported {MAX_NSIDE}"
                )));
            }
            levels.push(Level {
                j,
                l_st,
                l_top,
                l_en: l_top.min(l_max),
                n_side,
                lambda: 4.0 * PI / (12 * n_side * n_side) as f64,
            });
        }
        Ok(Self {
            window,
            l_max,
            levels,
        })
    }

    /// Same bands with every level grid refined by a power-of-two `factor`.
    pub fn oversampled(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "oversampling factor must be a power of two, got {factor}"
            )));
        }
        let mut levels = self.levels.clone();
        for level in &mut levels {
            level.n_side *= factor;
            if level.n_side > MAX_NSIDE {
                return Err(Error::InvalidArgument(format!(
                    "level {} needs n_side={} beyond the supported {MAX_NSIDE}",
                    level.j, level.n_side
                )));
            }
            level.lambda = 4.0 * PI / (12 * level.n_side * level.n_side) as f64;
        }
        Ok(Self {
            window: self.window.clone(),
            l_max: self.l_max,
            levels,
        })
    }

    pub fn base(&self) -> f64 {
        self.window.base()
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn j_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> Result<&Level> {
        self.levels.get(j).ok_or(Error::Index {
            index: j,
            len: self.levels.len(),
        })
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    /// `b(l / B^j)`.
    pub fn weight(&self, j: usize, l: usize) -> f64 {
        self.window.b(l as f64 / self.base().powi(j as i32))
    }

    pub fn grid(&self, j: usize) -> Result<HealpixGrid> {
        HealpixGrid::new(self.level(j)?.n_side)
    }

    /// Number of coefficients per level.
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Level::n_pix).collect()
    }

    fn same_layout(&self, other: &NeedletPlan) -> bool {
        self.l_max == other.l_max && self.base() == other.base() && self.levels == other.levels
    }

    /// Radial profile of the level-`j` needlets, with the band either ending
    /// at the window support or clipped at `l_max`.
    pub fn profile(&self, j: usize, clipped: bool) -> Result<NeedletProfile> {
        let level = self.level(j)?;
        let top = if clipped { level.l_en } else { level.l_top };
        let mut coeffs = vec![0.0; top + 1];
        for (l, c) in coeffs.iter_mut().enumerate().skip(level.l_st) {
            *c = self.weight(j, l) * (2 * l + 1) as f64 / (4.0 * PI);
        }
        Ok(NeedletProfile {
            scale: level.lambda.sqrt(),
            coeffs,
        })
    }
}

/// `ψ(t) = √λ Σ_l c_l P_l(t)` as a function of `t = ⟨ξ, x⟩`.
#[derive(Clone, Debug)]
pub struct NeedletProfile {
    scale: f64,
    coeffs: Vec<f64>,
}

impl NeedletProfile {
    pub fn value(&self, cos_angle: f64) -> f64 {
        let t = cos_angle.clamp(-1.0, 1.0);
        // Clenshaw on the Legendre recurrence.
        let (mut b1, mut b2) = (0.0, 0.0);
        for l in (1..self.coeffs.len()).rev() {
            let lf = l as f64;
            let alpha = (2.0 * lf + 1.0) / (lf + 1.0) * t;
            let beta = -(lf + 1.0) / (lf + 2.0);
            let b0 = self.coeffs[l] + alpha * b1 + beta * b2;
            b2 = b1;
            b1 = b0;
        }
        let c0 = self.coeffs.first().copied().unwrap_or(0.0);
        self.scale * (c0 + t * b1 - 0.5 * b2)
    }

    /// Value at great-circle distance `d` from the centre.
    pub fn at_distance(&self, d: f64) -> f64 {
        self.value(d.cos())
    }
}

/// `ψ_jk(x)` from the Legendre sum over the full window band.
pub fn eval_needlet(plan: &NeedletPlan, j: usize, k: usize, x: &SphPoint) -> Result<f64> {
    let grid = plan.grid(j)?;
    let centre = grid.pixel_center(k)?;
    Ok(plan.profile(j, false)?.value(centre.cos_angle(x)))
}

/// `ψ_jk(x)` from the harmonic form `√λ Σ_l b(l/B^j) Σ_m Y_lm(ξ_jk) conj(Y_lm(x))`.
/// Much slower than [`eval_needlet`]; kept as an independent evaluation path.
pub fn eval_needlet_harmonic(plan: &NeedletPlan, j: usize, k: usize, x: &SphPoint) -> Result<f64> {
    let level = plan.level(j)?;
    let centre = plan.grid(j)?.pixel_center(k)?;
    let mut total = Complex64::new(0.0, 0.0);
    for l in level.l_st..=level.l_top {
        let w = plan.weight(j, l);
        if w == 0.0 {
            continue;
        }
        let mut s = Complex64::new(0.0, 0.0);
        for m in -(l as i64)..=l as i64 {
            s += eval_y(l, m, &centre)? * eval_y(l, m, x)?.conj();
        }
        total += s * w;
    }
    Ok(level.lambda.sqrt() * total.re)
}

/// Needlet coefficients `β_jk`, one ring-ordered array per level, plus the
/// monopole `a_00` that the frame leaves out.
#[derive(Clone, Debug)]
pub struct NeedletCoeffs {
    plan: NeedletPlan,
    pub a00: f64,
    betas: Vec<Vec<f64>>,
}

impl NeedletCoeffs {
    pub fn new(plan: NeedletPlan, a00: f64, betas: Vec<Vec<f64>>) -> Result<Self> {
        let sizes = plan.sizes();
        if betas.len() != sizes.len() {
            return Err(Error::Validation(format!(
                "{} levels given, plan has {}",
                betas.len(),
                sizes.len()
            )));
        }
        for (j, (b, n)) in betas.iter().zip(&sizes).enumerate() {
            if b.len() != *n {
                return Err(Error::Validation(format!(
                    "level {j}: {} coefficients, expected {n}",
                    b.len()
                )));
            }
            if let Some(k) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "level {j}: beta[{k}] is not finite"
                )));
            }
        }
        if !a00.is_finite() {
            return Err(Error::Validation("a00 is not finite".into()));
        }
        Ok(Self { plan, a00, betas })
    }

    pub fn zeros(plan: NeedletPlan) -> Self {
        let betas = plan.sizes().into_iter().map(|n| vec![0.0; n]).collect();
        Self {
            plan,
            a00: 0.0,
            betas,
        }
    }

    pub fn plan(&self) -> &NeedletPlan {
        &self.plan
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.betas[j]
    }

    pub fn level_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.betas[j]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.betas
    }

    /// `Σ_jk β_jk² + a_00²`.
    pub fn energy(&self) -> f64 {
        self.a00 * self.a00 + self.betas.iter().flatten().map(|b| b * b).sum::<f64>()
    }
}

/// Which inverse transform evaluates the windowed bands on level grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IshtMethod {
    Fast,
    /// Direct per-point summation; reference and benchmark baseline.
    Naive,
}

/// Reusable analysis/synthesis engine for one plan.
pub struct NeedletTransform {
    plan: NeedletPlan,
    method: IshtMethod,
    // One per level; None for degenerate levels and for the naive method.
    isht: Vec<Option<IshtPlan>>,
}

impl NeedletTransform {
    pub fn new(plan: &NeedletPlan, method: IshtMethod, options: IshtOptions) -> Result<Self> {
        let mut isht = Vec::with_capacity(plan.levels.len());
        for level in &plan.levels {
            let live = method == IshtMethod::Fast && level_is_live(plan, level);
            isht.push(if live {
                Some(IshtPlan::new(&plan.grid(level.j)?, level.l_en, options)?)
            } else {
                None
            });
        }
        Ok(Self {
            plan: plan.clone(),
            method,
            isht,
        })
    }

    pub fn plan(&self) -> &NeedletPlan {
        &self.plan
    }

    /// `β_jk = √λ_j Σ_l b(l/B^j) Σ_m a_lm Y_lm(ξ_jk)` over every level.
    pub fn analyze(&self, alm: &HarmonicCoeffs) -> Result<NeedletCoeffs> {
        let plan = &self.plan;
        if alm.l_max() < plan.l_max {
            return Err(Error::Validation(format!(
                "coefficients stop at l_max={} but the plan needs {}",
                alm.l_max(),
                plan.l_max
            )));
        }
        let mut out = NeedletCoeffs::zeros(plan.clone());
        out.a00 = alm.get(0, 0).re;
        for level in &plan.levels {
            if !level_is_live(plan, level) {
                continue;
            }
            let mut windowed = HarmonicCoeffs::zeros(level.l_en);
            for l in level.l_st..=level.l_en {
                let w = plan.weight(level.j, l);
                for m in 0..=l {
                    windowed.set(l, m, alm.get(l, m) * w);
                }
            }
            let mut values = match (&self.isht[level.j], self.method) {
                (Some(isht), _) => isht.execute(&windowed, level.l_st, level.l_en)?,
                _ => naive_isht(
                    &windowed,
                    &plan.grid(level.j)?.centers(),
                    level.l_st,
                    level.l_en,
                )?,
            };
            let s = level.lambda.sqrt();
            values.iter_mut().for_each(|v| *v *= s);
            out.betas[level.j] = values;
        }
        Ok(out)
    }

    /// `â_lm = a_00 δ_l0 + Σ_j b(l/B^j) √λ_j Σ_k β_jk conj(Y_lm(ξ_jk))`,
    /// truncated at the plan's `l_max`.
    pub fn synthesize(&self, beta: &NeedletCoeffs) -> Result<HarmonicCoeffs> {
        let plan = &self.plan;
        if !plan.same_layout(&beta.plan) {
            return Err(Error::Validation(
                "needlet coefficients belong to a different plan".into(),
            ));
        }
        let mut alm = HarmonicCoeffs::zeros(plan.l_max);
        alm.set(0, 0, Complex64::new(beta.a00, 0.0));
        for level in &plan.levels {
            if !level_is_live(plan, level) {
                continue;
            }
            let values = &beta.betas[level.j];
            if values.iter().all(|&v| v == 0.0) {
                continue;
            }
            let owned;
            let isht = match &self.isht[level.j] {
                Some(p) => p,
                None => {
                    owned =
                        IshtPlan::new(&plan.grid(level.j)?, level.l_en, IshtOptions::default())?;
                    &owned
                }
            };
            let y = isht.adjoint(values, level.l_st, level.l_en)?;
            let s = level.lambda.sqrt();
            for l in level.l_st..=level.l_en {
                let w = plan.weight(level.j, l) * s;
                for m in 0..=l {
                    *alm.get_mut(l, m) += y.get(l, m) * w;
                }
            }
        }
        Ok(alm)
    }
}

// A level contributes only if the window is nonzero somewhere on its clipped band.
fn level_is_live(plan: &NeedletPlan, level: &Level) -> bool {
    level.l_st <= level.l_en && (level.l_st..=level.l_en).any(|l| plan.weight(level.j, l) > 0.0)
}

pub fn analyze(alm: &HarmonicCoeffs, plan: &NeedletPlan) -> Result<NeedletCoeffs> {
    NeedletTransform::new(plan, IshtMethod::Fast, IshtOptions::default())?.analyze(alm)
}

pub fn synthesize(beta: &NeedletCoeffs) -> Result<HarmonicCoeffs> {
    NeedletTransform::new(&beta.plan, IshtMethod::Fast, IshtOptions::default())?.synthesize(beta)
}

/// `a_00 Y_00(x) + Σ_jk β_jk ψ_jk(x)` by direct summation over needlets.
///
/// Needlet bands are clipped at the plan's `l_max`, matching [`synthesize`].
/// Cost is `O(N · Σ_j n_pix_j · l_max)`; intended for checks and small maps.
pub fn eval_field(beta: &NeedletCoeffs, points: &[SphPoint]) -> Result<Vec<f64>> {
    let plan = &beta.plan;
    let y00 = 1.0 / (4.0 * PI).sqrt();
    let mut terms = Vec::new();
    for level in &plan.levels {
        let values = &beta.betas[level.j];
        if values.iter().all(|&v| v == 0.0) {
            continue;
        }
        let profile = plan.profile(level.j, true)?;
        let centres: Vec<([f64; 3], f64)> = plan
            .grid(level.j)?
            .centers()
            .iter()
            .zip(values)
            .filter(|(_, &v)| v != 0.0)
            .map(|(c, &v)| (c.unit_vector(), v))
            .collect();
        terms.push((profile, centres));
    }
    let mut series = Vec::new();
    Ok(points
        .iter()
        .map(|p| {
            let x = p.unit_vector();
            let mut total = beta.a00 * y00;
            for (profile, centres) in &terms {
                series.resize(profile.coeffs.len(), 0.0);
                for (c, v) in centres {
                    let t = crate::healpix::dot(c, &x).clamp(-1.0, 1.0);
                    legendre_poly_series(t, &mut series);
                    let s: f64 = profile.coeffs.iter().zip(&series).map(|(a, b)| a * b).sum();
                    total += v * profile.scale * s;
                }
            }
            total
        })
        .collect())
}

/// `⟨ψ_jk, ψ_j'k'⟩ = √(λ_j λ_j') Σ_l b(l/B^j) b(l/B^j') (2l+1)/(4π) P_l(⟨ξ_jk, ξ_j'k'⟩)`.
///
/// Exactly zero when `|j − j'| ≥ 2`: the two windows never overlap.
pub fn inner_product(plan: &NeedletPlan, j: usize, k: usize, jp: usize, kp: usize) -> Result<f64> {
    let (a, b) = (plan.level(j)?, plan.level(jp)?);
    let xa = plan.grid(j)?.pixel_center(k)?;
    let xb = plan.grid(jp)?.pixel_center(kp)?;
    let lo = a.l_st.max(b.l_st);
    let hi = a.l_top.min(b.l_top);
    let weights: Vec<(usize, f64)> = (lo..=hi)
        .map(|l| (l, plan.weight(j, l) * plan.weight(jp, l)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    let Some(&(top, _)) = weights.last() else {
        return Ok(0.0);
    };
    let mut series = vec![0.0; top + 1];
    legendre_poly_series(xa.cos_angle(&xb), &mut series);
    let sum: f64 = weights
        .iter()
        .map(|&(l, w)| w * (2 * l + 1) as f64 / (4.0 * PI) * series[l])
        .sum();
    Ok((a.lambda * b.lambda).sqrt() * sum)
}

/// Keeps the `⌈keep_fraction · n⌉` largest-magnitude coefficients on each
/// selected level and zeroes the rest. Ties favour the lower flat index.
pub fn hard_threshold(
    beta: &NeedletCoeffs,
    levels: &[usize],
    keep_fraction: f64,
) -> Result<NeedletCoeffs> {
    if !(0.0..=1.0).contains(&keep_fraction) {
        return Err(Error::InvalidArgument(format!(
            "keep fraction must lie in [0, 1], got {keep_fraction}"
        )));
    }
    let mut out = beta.clone();
    for &j in levels {
        if j >= beta.betas.len() {
            return Err(Error::Validation(format!(
                "level {j} not in plan (j_max = {})",
                beta.plan.j_max()
            )));
        }
        let values = &mut out.betas[j];
        let n = values.len();
        let keep = ((keep_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
        for &k in &order[keep.min(n)..] {
            values[k] = 0.0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::legendre::legendre_poly;

    fn plan_2_16() -> NeedletPlan {
        make_plan(2.0, 16).unwrap()
    }

    #[test]
    fn plan_b2_lmax16() {
        let plan = plan_2_16();
        assert_eq!(plan.j_max(), 5);
        let l4 = plan.level(4).unwrap();
        assert_eq!((l4.l_st, l4.l_en, l4.l_top, l4.n_side), (8, 16, 32, 16));
        let l5 = plan.level(5).unwrap();
        assert_eq!((l5.l_st, l5.l_en), (16, 16));
        assert_eq!(plan.weight(5, 16), 0.0);
        let bands: Vec<_> = plan
            .levels()
            .iter()
            .map(|l| (l.l_st, l.l_top, l.n_side))
            .collect();
        assert_eq!(
            bands,
            vec![
                (1, 2, 1),
                (1, 4, 2),
                (2, 8, 4),
                (4, 16, 8),
                (8, 32, 16),
                (16, 64, 32)
            ]
        );
        assert_eq!(make_plan(2.0, 1).unwrap().j_max(), 1);
        assert!(make_plan(1.0, 16).is_err());
        assert!(make_plan(0.5, 16).is_err());
    }

    #[test]
    fn non_dyadic_plans_are_consistent() {
        for b in [1.5, 3.0, 2.5] {
            let plan = make_plan(b, 40).unwrap();
            for level in plan.levels() {
                assert!(level.l_st <= 40);
                assert!(level.l_top <= 2 * level.n_side);
                assert!(level.n_side == 1 || level.l_top > level.n_side);
            }
            let next = snap(b.powi(plan.j_max() as i32)).ceil() as usize;
            assert!(next > 40);
            for pair in plan.levels().windows(3) {
                assert!(
                    pair[0].l_top <= pair[2].l_st,
                    "bands j, j+2 overlap for B={b}"
                );
            }
        }
    }

    #[test]
    fn profile_matches_direct_legendre_sum() {
        let plan = plan_2_16();
        let prof = plan.profile(3, false).unwrap();
        for &t in &[-1.0, -0.4, 0.0, 0.3, 0.99, 1.0] {
            let lambda = plan.level(3).unwrap().lambda;
            let direct: f64 = (4..=16)
                .map(|l| {
                    plan.weight(3, l) * (2 * l + 1) as f64 / (4.0 * PI)
                        * legendre_poly(l, t).unwrap()
                })
                .sum::<f64>()
                * lambda.sqrt();
            assert!((prof.value(t) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn needlet_peaks_at_centre_and_decays() {
        let plan = plan_2_16();
        let grid = plan.grid(3).unwrap();
        let centre = grid.pixel_center(100).unwrap();
        let peak = eval_needlet(&plan, 3, 100, &centre).unwrap();
        let dense = HealpixGrid::new(32).unwrap();
        for p in dense.centers() {
            assert!(eval_needlet(&plan, 3, 100, &p).unwrap() <= peak);
        }
        let antipode = SphPoint::new(PI - centre.theta, centre.phi + PI).unwrap();
        let far = eval_needlet(&plan, 3, 100, &antipode).unwrap();
        assert!(far.abs() <= 1e-2 * peak, "far={far} peak={peak}");
        assert!(eval_needlet(&plan, 3, 768, &centre).is_err());
        assert!(eval_needlet(&plan, 9, 0, &centre).is_err());
    }

    #[test]
    fn legendre_and_harmonic_forms_agree() {
        let plan = plan_2_16();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = SphPoint::new(
                rng.random_range(-1.0f64..1.0).acos(),
                rng.random_range(0.0..2.0 * PI),
            )
            .unwrap();
            let j = rng.random_range(0..=3);
            let k = rng.random_range(0..plan.level(j).unwrap().n_pix());
            let a = eval_needlet(&plan, j, k, &x).unwrap();
            let b = eval_needlet_harmonic(&plan, j, k, &x).unwrap();
            assert!((a - b).abs() < 1e-10, "j={j} k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn monopole_gives_no_needlet_coefficients() {
        let plan = plan_2_16();
        let mut alm = HarmonicCoeffs::zeros(16);
        alm.set(0, 0, Complex64::new(3.0, 0.0));
        let beta = analyze(&alm, &plan).unwrap();
        assert_eq!(beta.a00, 3.0);
        assert!(beta.levels().iter().flatten().all(|&b| b == 0.0));
    }

    #[test]
    fn single_degree_hits_one_level() {
        let plan = plan_2_16();
        let mut alm = HarmonicCoeffs::zeros(16);
        alm.set(4, 0, Complex64::new(1.0, 0.0));
        let beta = analyze(&alm, &plan).unwrap();
        for j in 0..=plan.j_max() {
            let nonzero = beta.level(j).iter().any(|&b| b != 0.0);
            assert_eq!(nonzero, j == 2, "level {j}");
        }
    }

    #[test]
    fn analyze_rejects_short_coefficients() {
        let plan = plan_2_16();
        assert!(analyze(&HarmonicCoeffs::zeros(8), &plan).is_err());
    }

    #[test]
    fn naive_and_fast_analysis_agree() {
        let plan = plan_2_16();
        let alm = HarmonicCoeffs::random(16, &mut ChaCha8Rng::seed_from_u64(1));
        let fast = analyze(&alm, &plan).unwrap();
        let naive = NeedletTransform::new(&plan, IshtMethod::Naive, IshtOptions::default())
            .unwrap()
            .analyze(&alm)
            .unwrap();
        for (a, b) in fast
            .levels()
            .iter()
            .flatten()
            .zip(naive.levels().iter().flatten())
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_betas_with_monopole() {
        let plan = plan_2_16();
        let mut beta = NeedletCoeffs::zeros(plan);
        beta.a00 = (4.0 * PI).sqrt();
        let alm = synthesize(&beta).unwrap();
        assert_eq!(alm.get(0, 0).re, (4.0 * PI).sqrt());
        assert!(alm.iter().skip(1).all(|(_, _, a)| a.norm() == 0.0));
        let pts = HealpixGrid::new(2).unwrap().centers();
        for v in eval_field(&beta, &pts).unwrap() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        beta.a00 = 0.0;
        assert!(eval_field(&beta, &pts).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_coefficient_field_is_a_clipped_needlet() {
        let plan = plan_2_16();
        let mut beta = NeedletCoeffs::zeros(plan.clone());
        beta.level_mut(2)[17] = 2.5;
        let centre = plan.grid(2).unwrap().pixel_center(17).unwrap();
        let prof = plan.profile(2, true).unwrap();
        let pts = HealpixGrid::new(4).unwrap().centers();
        let field = eval_field(&beta, &pts).unwrap();
        for (v, p) in field.iter().zip(&pts) {
            assert!((v - 2.5 * prof.value(centre.cos_angle(p))).abs() < 1e-13);
        }
    }

    #[test]
    fn inner_products() {
        let plan = plan_2_16();
        assert_eq!(inner_product(&plan, 1, 3, 3, 40).unwrap(), 0.0);
        assert_eq!(inner_product(&plan, 4, 0, 2, 5).unwrap(), 0.0);
        assert!(inner_product(&plan, 3, 7, 3, 7).unwrap() > 0.0);
        let near = inner_product(&plan, 3, 7, 4, 30).unwrap();
        assert!(near.is_finite());
        assert!(inner_product(&plan, 3, 7, 9, 0).is_err());
    }

    #[test]
    fn threshold_counts() {
        let plan = plan_2_16();
        let alm = HarmonicCoeffs::random(16, &mut ChaCha8Rng::seed_from_u64(8));
        let beta = analyze(&alm, &plan).unwrap();
        let same = hard_threshold(&beta, &[0, 1, 2, 3, 4], 1.0).unwrap();
        assert_eq!(same.levels(), beta.levels());
        let t = hard_threshold(&beta, &[4], 0.05).unwrap();
        let zeros = t.level(4).iter().filter(|&&b| b == 0.0).count();
        assert_eq!(zeros, 3072 - 154);
        for j in 0..4 {
            assert_eq!(t.level(j), beta.level(j));
        }
        let kept_min = t
            .level(4)
            .iter()
            .filter(|&&b| b != 0.0)
            .fold(f64::INFINITY, |m, b| m.min(b.abs()));
        let dropped_max = beta
            .level(4)
            .iter()
            .zip(t.level(4))
            .filter(|(_, &n)| n == 0.0)
            .fold(0.0f64, |m, (b, _)| m.max(b.abs()));
        assert!(kept_min >= dropped_max);
        let none = hard_threshold(&beta, &[3], 0.0).unwrap();
        assert!(none.level(3).iter().all(|&b| b == 0.0));
        assert!(hard_threshold(&beta, &[6], 0.5).is_err());
        assert!(hard_threshold(&beta, &[1], 1.5).is_err());
    }

    #[test]
    fn threshold_ties_prefer_lower_index() {
        let plan = make_plan(2.0, 1).unwrap();
        let mut beta = NeedletCoeffs::zeros(plan);
        beta.level_mut(0)
            .copy_from_slice(&[1.0, -2.0, 2.0, 1.0, 0.5, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = hard_threshold(&beta, &[0], 2.0 / 12.0).unwrap();
        assert_eq!(&t.level(0)[..6], &[0.0, -2.0, 2.0, 0.0, 0.0, 0.0]);
    }
}
