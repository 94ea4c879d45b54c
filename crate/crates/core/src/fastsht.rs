//! Fast inverse spherical harmonic transform on HEALPix rings.
//!
//! For a ring at `cos θ_r = z` with `n_r` pixels starting at longitude `φ_r0`:
//!
//! 1. `q_m = Σ_{l=max(m,l_st)}^{l_en} a_lm P̃_lm(z)` (Legendre columns shared by
//!    all pixels of the ring, and by the mirror ring through
//!    `P̃_lm(−z) = (−1)^{l+m} P̃_lm(z)`);
//! 2. fold orders onto ring frequencies, `τ_t = Σ_{m ≡ t mod n_r, m ≥ 1} q_m e^{i m φ_r0}`;
//! 3. `II_p = Σ_t τ_t e^{2πi pt/n_r}` by one inverse FFT;
//! 4. pixel value `q_0 + 2 Re II_p`.
//!
//! [`IshtPlan::adjoint`] runs the same pipeline backwards and computes
//! `Σ_k f_k conj(Y_lm(ξ_k))` over the grid.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::harmonics::HarmonicCoeffs;
use crate::healpix::{HealpixGrid, RingLayout};
use crate::legendre::ColumnCoeffs;

/// Unnormalized inverse DFT, `out_p = Σ_t τ_t e^{2πi pt/n}`.
pub fn inverse_dft(tau: &[Complex64]) -> Vec<Complex64> {
    let mut out = tau.to_vec();
    if !out.is_empty() {
        FftPlanner::new()
            .plan_fft_inverse(out.len())
            .process(&mut out);
    }
    out
}

/// Per-ring intermediates of the fast transform.
#[derive(Clone, Debug)]
pub struct RingSpectrum {
    /// 1-based ring index.
    pub ring: usize,
    /// `q_m` for `m = 0..=l_en`.
    pub q: Vec<Complex64>,
    /// Folded coefficients `τ_t`, one per pixel of the ring.
    pub tau: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IshtOptions {
    /// Reuse northern Legendre columns on mirror rings through parity.
    pub reuse_parity: bool,
    /// Precompute and keep all Legendre columns for the grid.
    pub cache_legendre: bool,
}

impl Default for IshtOptions {
    fn default() -> Self {
        Self {
            reuse_parity: true,
            cache_legendre: false,
        }
    }
}

struct RingFfts {
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

/// Transform plan for one grid and maximum degree.
pub struct IshtPlan {
    grid: HealpixGrid,
    l_max: usize,
    options: IshtOptions,
    columns: Vec<ColumnCoeffs>,
    ffts: HashMap<usize, RingFfts>,
    // Per northern ring (equator included): P̃_lm(z_r) in m-major packing.
    cache: Option<Vec<Vec<f64>>>,
}

// Offset of (l, m) in an m-major packing of 0 ≤ m ≤ l ≤ l_max.
fn m_major_offset(l_max: usize, m: usize) -> usize {
    m * (l_max + 1) - m * (m.saturating_sub(1)) / 2
}

impl IshtPlan {
    pub fn new(grid: &HealpixGrid, l_max: usize, options: IshtOptions) -> Result<Self> {
        if l_max > crate::legendre::MAX_DEGREE {
            return Err(Error::Domain(format!(
                "l_max={l_max} exceeds supported maximum {}",
                crate::legendre::MAX_DEGREE
            )));
        }
        let columns: Vec<ColumnCoeffs> = (0..=l_max).map(|m| ColumnCoeffs::new(l_max, m)).collect();
        let mut planner = FftPlanner::new();
        let mut ffts = HashMap::new();
        for ring in grid.rings() {
            ffts.entry(ring.len).or_insert_with(|| RingFfts {
                inverse: planner.plan_fft_inverse(ring.len),
                forward: planner.plan_fft_forward(ring.len),
            });
        }
        let cache = options.cache_legendre.then(|| {
            let total = m_major_offset(l_max, l_max) + 1;
            grid.rings()[..north_count(grid)]
                .iter()
                .map(|ring| {
                    let mut table = vec![0.0; total];
                    for (m, col) in columns.iter().enumerate() {
                        let off = m_major_offset(l_max, m);
                        col.fill(ring.z, &mut table[off..off + l_max - m + 1]);
                    }
                    table
                })
                .collect()
        });
        Ok(Self {
            grid: grid.clone(),
            l_max,
            options,
            columns,
            ffts,
            cache,
        })
    }

    pub fn grid(&self) -> &HealpixGrid {
        &self.grid
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    fn check_band(&self, l_st: usize, l_en: usize) -> Result<()> {
        if l_st > l_en {
            return Err(Error::EmptyBand { l_st, l_en });
        }
        if l_en > self.l_max {
            return Err(Error::Validation(format!(
                "band top l_en={l_en} exceeds plan l_max={}",
                self.l_max
            )));
        }
        Ok(())
    }

    /// Legendre column `P̃_lm(z)` for `l = m..=l_en` of northern ring `i`
    /// (0-based), from the cache or freshly computed into `buf`.
    fn column<'a>(&'a self, i: usize, m: usize, l_en: usize, buf: &'a mut [f64]) -> &'a [f64] {
        let n = l_en - m + 1;
        match &self.cache {
            Some(tables) => {
                let off = m_major_offset(self.l_max, m);
                &tables[i][off..off + n]
            }
            None => {
                let full = &mut buf[..self.l_max - m + 1];
                self.columns[m].fill(self.grid.rings()[i].z, full);
                &full[..n]
            }
        }
    }

    fn column_at(&self, z: f64, m: usize, l_en: usize, buf: &mut [f64]) -> usize {
        let full = &mut buf[..self.l_max - m + 1];
        self.columns[m].fill(z, full);
        l_en - m + 1
    }

    /// Pixel values `Σ_{l=l_st}^{l_en} Σ_m a_lm Y_lm(ξ_k)` in flat ring order.
    pub fn execute(&self, alm: &HarmonicCoeffs, l_st: usize, l_en: usize) -> Result<Vec<f64>> {
        self.check_band(l_st, l_en)?;
        if l_en > alm.l_max() {
            return Err(Error::Validation(format!(
                "band top l_en={l_en} exceeds coefficient l_max={}",
                alm.l_max()
            )));
        }
        let rings = self.grid.rings();
        let n_rings = rings.len();
        let mut out = vec![0.0; self.grid.n_pix()];
        let mut buf = vec![0.0; self.l_max + 1];
        let mut south_buf = vec![0.0; self.l_max + 1];
        let zero = Complex64::new(0.0, 0.0);
        let mut q_north = vec![zero; l_en + 1];
        let mut q_south = vec![zero; l_en + 1];
        let mut scratch = Vec::new();
        for i in 0..north_count(&self.grid) {
            let mirror = n_rings - 1 - i;
            let has_mirror = mirror != i;
            for m in 0..=l_en {
                let p = self.column(i, m, l_en, &mut buf);
                let (mut even, mut odd) = (zero, zero);
                for l in l_st.max(m)..=l_en {
                    let t = alm.get(l, m) * p[l - m];
                    if (l + m) % 2 == 0 {
                        even += t;
                    } else {
                        odd += t;
                    }
                }
                q_north[m] = even + odd;
                if has_mirror {
                    q_south[m] = if self.options.reuse_parity {
                        even - odd
                    } else {
                        let n = self.column_at(rings[mirror].z, m, l_en, &mut south_buf);
                        let ps = &south_buf[..n];
                        let (mut se, mut so) = (zero, zero);
                        for l in l_st.max(m)..=l_en {
                            let t = alm.get(l, m) * ps[l - m];
                            if (l + m) % 2 == 0 {
                                se += t;
                            } else {
                                so += t;
                            }
                        }
                        se + so
                    };
                }
            }
            self.ring_values(&q_north, &rings[i], &mut out, &mut scratch);
            if has_mirror {
                self.ring_values(&q_south, &rings[mirror], &mut out, &mut scratch);
            }
        }
        Ok(out)
    }

    fn ring_values(
        &self,
        q: &[Complex64],
        ring: &RingLayout,
        out: &mut [f64],
        tau: &mut Vec<Complex64>,
    ) {
        fold(q, ring, tau);
        self.ffts[&ring.len].inverse.process(tau);
        let base = q[0].re;
        for (dst, t) in out[ring.start..ring.start + ring.len]
            .iter_mut()
            .zip(tau.iter())
        {
            *dst = base + 2.0 * t.re;
        }
    }

    /// `q` and `τ` of one ring (1-based index), computed without parity reuse.
    pub fn ring_spectrum(
        &self,
        alm: &HarmonicCoeffs,
        l_st: usize,
        l_en: usize,
        r: usize,
    ) -> Result<RingSpectrum> {
        self.check_band(l_st, l_en)?;
        let ring = *self.grid.ring(r)?;
        let mut buf = vec![0.0; self.l_max + 1];
        let q: Vec<Complex64> = (0..=l_en)
            .map(|m| {
                let n = self.column_at(ring.z, m, l_en, &mut buf);
                let p = &buf[..n];
                (l_st.max(m)..=l_en).map(|l| alm.get(l, m) * p[l - m]).sum()
            })
            .collect();
        let mut tau = Vec::new();
        fold(&q, &ring, &mut tau);
        Ok(RingSpectrum { ring: r, q, tau })
    }

    /// `y_lm = Σ_k f_k conj(Y_lm(ξ_k))` for `l_st ≤ l ≤ l_en`; other degrees
    /// are zero. Output degree range is the plan's `l_max`.
    pub fn adjoint(&self, values: &[f64], l_st: usize, l_en: usize) -> Result<HarmonicCoeffs> {
        self.check_band(l_st, l_en)?;
        if values.len() != self.grid.n_pix() {
            return Err(Error::Validation(format!(
                "{} values for a grid of {} pixels",
                values.len(),
                self.grid.n_pix()
            )));
        }
        let rings = self.grid.rings();
        let n_rings = rings.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = HarmonicCoeffs::zeros(self.l_max);
        let mut buf = vec![0.0; self.l_max + 1];
        let mut g_north = vec![zero; l_en + 1];
        let mut g_south = vec![zero; l_en + 1];
        let mut scratch = Vec::new();
        for i in 0..north_count(&self.grid) {
            let mirror = n_rings - 1 - i;
            let has_mirror = mirror != i;
            self.ring_phases(values, &rings[i], &mut g_north, &mut scratch);
            if has_mirror {
                self.ring_phases(values, &rings[mirror], &mut g_south, &mut scratch);
            }
            for m in 0..=l_en {
                let p = self.column(i, m, l_en, &mut buf);
                let (gn, gs) = (g_north[m], if has_mirror { g_south[m] } else { zero });
                let (even, odd) = (gn + gs, gn - gs);
                for l in l_st.max(m)..=l_en {
                    let g = if (l + m) % 2 == 0 { even } else { odd };
                    *out.get_mut(l, m) += g * p[l - m];
                }
            }
        }
        Ok(out)
    }

    // G_m = e^{−imφ0} Σ_p f_p e^{−2πi m p / n_r}.
    fn ring_phases(
        &self,
        values: &[f64],
        ring: &RingLayout,
        g: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
    ) {
        scratch.clear();
        scratch.extend(
            values[ring.start..ring.start + ring.len]
                .iter()
                .map(|&v| Complex64::new(v, 0.0)),
        );
        self.ffts[&ring.len].forward.process(scratch);
        for (m, gm) in g.iter_mut().enumerate() {
            *gm = scratch[m % ring.len] * Complex64::from_polar(1.0, -(m as f64) * ring.phi0);
        }
    }
}

// Northern rings plus the equator.
fn north_count(grid: &HealpixGrid) -> usize {
    2 * grid.n_side()
}

// τ_t = Σ_{m ≥ 1, m ≡ t (mod n_r)} q_m e^{i m φ_r0}
fn fold(q: &[Complex64], ring: &RingLayout, tau: &mut Vec<Complex64>) {
    tau.clear();
    tau.resize(ring.len, Complex64::new(0.0, 0.0));
    for (m, qm) in q.iter().enumerate().skip(1) {
        tau[m % ring.len] += qm * Complex64::from_polar(1.0, m as f64 * ring.phi0);
    }
}

/// One-shot fast inverse transform over a band, default options.
pub fn fast_isht(
    alm: &HarmonicCoeffs,
    l_st: usize,
    l_en: usize,
    grid: &HealpixGrid,
) -> Result<Vec<f64>> {
    if l_st > l_en {
        return Err(Error::EmptyBand { l_st, l_en });
    }
    IshtPlan::new(grid, l_en, IshtOptions::default())?.execute(alm, l_st, l_en)
}
