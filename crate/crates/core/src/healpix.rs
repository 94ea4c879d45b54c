//! Ring-scheme HEALPix pixelization.
//!
//! Pixels are numbered in ring order: north to south, and eastward within each
//! ring. Only pixel centers and the common pixel area are modelled; boundaries
//! and the nested scheme are not needed by the transforms.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest supported resolution parameter.
pub const MAX_NSIDE: usize = 1 << 13;

/// A point on the unit sphere in (co-latitude, longitude), radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphPoint {
    pub theta: f64,
    pub phi: f64,
}

impl SphPoint {
    /// Validates `theta ∈ [0, π]` and wraps `phi` into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::Domain(format!(
                "point (theta={theta}, phi={phi}) is not on the sphere"
            )));
        }
        Ok(Self {
            theta,
            phi: wrap_phi(phi),
        })
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        let theta = v[2].clamp(-1.0, 1.0).acos();
        let phi = wrap_phi(v[1].atan2(v[0]));
        Self { theta, phi }
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Cosine of the angle between two points, clamped to `[-1, 1]`.
    pub fn cos_angle(&self, other: &SphPoint) -> f64 {
        dot(&self.unit_vector(), &other.unit_vector()).clamp(-1.0, 1.0)
    }

    /// Great-circle distance in radians.
    pub fn distance(&self, other: &SphPoint) -> f64 {
        // atan2 form stays accurate for nearly coincident and antipodal pairs
        let (a, b) = (self.unit_vector(), other.unit_vector());
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        dot(&cross, &cross).sqrt().atan2(dot(&a, &b))
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn wrap_phi(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// One iso-latitude ring of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingLayout {
    /// 1-based ring index, north to south.
    pub index: usize,
    /// Number of pixels on the ring.
    pub len: usize,
    /// `cos θ` of the ring.
    pub z: f64,
    /// Longitude of the first pixel.
    pub phi0: f64,
    /// Flat index of the first pixel.
    pub start: usize,
}

impl RingLayout {
    pub fn theta(&self) -> f64 {
        self.z.acos()
    }

    pub fn phi(&self, p: usize) -> f64 {
        self.phi0 + TAU * p as f64 / self.len as f64
    }
}

#[derive(Clone, Debug)]
pub struct HealpixGrid {
    n_side: usize,
    rings: Vec<RingLayout>,
}

impl HealpixGrid {
    /// Builds the ring-scheme grid for a power-of-two `n_side` in `1..=2^13`.
    pub fn new(n_side: usize) -> Result<Self> {
        if n_side == 0 || !n_side.is_power_of_two() || n_side > MAX_NSIDE {
            return Err(Error::InvalidArgument(format!(
                "n_side must be a power of two in 1..={MAX_NSIDE}, got {n_side}"
            )));
        }
        let ns = n_side as f64;
        let n_rings = 4 * n_side - 1;
        let mut rings = Vec::with_capacity(n_rings);
        let mut start = 0;
        // Northern hemisphere including the equator.
        for r in 1..=2 * n_side {
            let (len, z, phi0) = if r < n_side {
                let rf = r as f64;
                (4 * r, 1.0 - rf * rf / (3.0 * ns * ns), PI / (4.0 * rf))
            } else {
                let shift = ((r - n_side + 1) % 2) as f64 * 0.5;
                (
                    4 * n_side,
                    4.0 / 3.0 - 2.0 * r as f64 / (3.0 * ns),
                    FRAC_PI_2 / ns * shift,
                )
            };
            rings.push(RingLayout {
                index: r,
                len,
                z,
                phi0,
                start,
            });
            start += len;
        }
        // Southern rings mirror the northern ones with z negated.
        for r in 2 * n_side + 1..=n_rings {
            let m = rings[n_rings - r];
            rings.push(RingLayout {
                index: r,
                len: m.len,
                z: -m.z,
                phi0: m.phi0,
                start,
            });
            start += m.len;
        }
        debug_assert_eq!(start, 12 * n_side * n_side);
        Ok(Self { n_side, rings })
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn n_pix(&self) -> usize {
        12 * self.n_side * self.n_side
    }

    pub fn n_rings(&self) -> usize {
        self.rings.len()
    }

    pub fn rings(&self) -> &[RingLayout] {
        &self.rings
    }

    /// Ring by 1-based index.
    pub fn ring(&self, r: usize) -> Result<&RingLayout> {
        if r == 0 || r > self.rings.len() {
            return Err(Error::Index {
                index: r,
                len: self.rings.len(),
            });
        }
        Ok(&self.rings[r - 1])
    }

    /// Equal cubature weight `4π / n_pix`.
    pub fn weight(&self) -> f64 {
        4.0 * PI / self.n_pix() as f64
    }

    /// `(ring, in-ring position)` of a flat pixel index; rings are 1-based.
    pub fn locate(&self, k: usize) -> Result<(usize, usize)> {
        if k >= self.n_pix() {
            return Err(Error::Index {
                index: k,
                len: self.n_pix(),
            });
        }
        let i = self.rings.partition_point(|ring| ring.start <= k) - 1;
        Ok((i + 1, k - self.rings[i].start))
    }

    pub fn flat_index(&self, r: usize, p: usize) -> Result<usize> {
        let ring = self.ring(r)?;
        if p >= ring.len {
            return Err(Error::Index {
                index: p,
                len: ring.len,
            });
        }
        Ok(ring.start + p)
    }

    pub fn mirror_ring(&self, r: usize) -> Result<usize> {
        self.ring(r)?;
        Ok(self.rings.len() + 1 - r)
    }

    pub fn pixel_center(&self, k: usize) -> Result<SphPoint> {
        let (r, p) = self.locate(k)?;
        let ring = &self.rings[r - 1];
        Ok(SphPoint {
            theta: ring.theta(),
            phi: ring.phi(p),
        })
    }

    /// All pixel centers in flat order.
    pub fn centers(&self) -> Vec<SphPoint> {
        let mut out = Vec::with_capacity(self.n_pix());
        for ring in &self.rings {
            let theta = ring.theta();
            out.extend((0..ring.len).map(|p| SphPoint {
                theta,
                phi: ring.phi(p),
            }));
        }
        out
    }

    /// Flat index of the pixel containing `point`.
    pub fn pixel_of(&self, point: &SphPoint) -> usize {
        let ns = self.n_side as i64;
        let z = point.theta.cos();
        let za = z.abs();
        let tt = wrap_phi(point.phi) / FRAC_PI_2;
        if za <= 2.0 / 3.0 {
            let t1 = ns as f64 * (0.5 + tt);
            let t2 = ns as f64 * z * 0.75;
            let jp = (t1 - t2) as i64;
            let jm = (t1 + t2) as i64;
            let ir = ns + 1 + jp - jm;
            let kshift = 1 - (ir & 1);
            let ip = ((jp + jm - ns + kshift + 1) / 2).rem_euclid(4 * ns);
            let ncap = 2 * ns * (ns - 1);
            (ncap + (ir - 1) * 4 * ns + ip) as usize
        } else {
            let tp = tt - tt.floor();
            let tmp = ns as f64 * (3.0 * (1.0 - za)).sqrt();
            let jp = (tp * tmp) as i64;
            let jm = ((1.0 - tp) * tmp) as i64;
            let ir = jp + jm + 1;
            let ip = ((tt * ir as f64) as i64).rem_euclid(4 * ir);
            if z > 0.0 {
                (2 * ir * (ir - 1) + ip) as usize
            } else {
                (12 * ns * ns - 2 * ir * (ir + 1) + ip) as usize
            }
        }
    }
}

/// Jitters every pixel center by independent uniform offsets of at most
/// `amplitude × √(4π/n_pix)` along θ and along `φ·sin θ`.
///
/// Deterministic for a given seed. θ is kept strictly inside `(0, π)`.
pub fn perturb_grid(grid: &HealpixGrid, amplitude: f64, seed: u64) -> Result<Vec<SphPoint>> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidArgument(format!(
            "perturbation amplitude must lie in [0, 1), got {amplitude}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = amplitude * grid.weight().sqrt();
    const EPS: f64 = 1e-9;
    Ok(grid
        .centers()
        .into_iter()
        .map(|c| {
            let du: f64 = rng.random_range(-1.0..=1.0);
            let dv: f64 = rng.random_range(-1.0..=1.0);
            let theta = (c.theta + step * du).clamp(EPS, PI - EPS);
            let phi = wrap_phi(c.phi + step * dv / c.theta.sin());
            SphPoint { theta, phi }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nside_one_layout() {
        let g = HealpixGrid::new(1).unwrap();
        assert_eq!(g.n_pix(), 12);
        assert_eq!(g.n_rings(), 3);
        let lens: Vec<_> = g.rings().iter().map(|r| r.len).collect();
        assert_eq!(lens, vec![4, 4, 4]);
        let z: Vec<_> = g.rings().iter().map(|r| r.z).collect();
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(z[1], 0.0);
        assert_eq!(z[2], -z[0]);
    }

    #[test]
    fn nside_two_ring_lengths() {
        let g = HealpixGrid::new(2).unwrap();
        assert_eq!(g.n_pix(), 48);
        let lens: Vec<_> = g.rings().iter().map(|r| r.len).collect();
        assert_eq!(lens, vec![4, 8, 8, 8, 8, 8, 4]);
    }

    #[test]
    fn rejects_bad_nside() {
        for n in [0, 3, 6, MAX_NSIDE * 2] {
            assert!(matches!(
                HealpixGrid::new(n),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn first_pixel_centers() {
        let g = HealpixGrid::new(1).unwrap();
        let c = g.pixel_center(0).unwrap();
        assert!((c.theta - (2.0f64 / 3.0).acos()).abs() < 1e-15);
        assert!((c.phi - PI / 4.0).abs() < 1e-15);
        let e = g.pixel_center(4).unwrap();
        assert!((e.theta - FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(g.pixel_center(12), Err(Error::Index { .. })));
    }

    #[test]
    fn locate_and_mirror() {
        let g1 = HealpixGrid::new(1).unwrap();
        assert_eq!(g1.locate(5).unwrap(), (2, 1));
        let g2 = HealpixGrid::new(2).unwrap();
        assert_eq!(g2.mirror_ring(1).unwrap(), 7);
        assert_eq!(g2.mirror_ring(4).unwrap(), 4);
        assert!(g2.mirror_ring(0).is_err());
        assert!(g2.mirror_ring(8).is_err());
        for r in 1..=7 {
            let m = g2.mirror_ring(r).unwrap();
            assert_eq!(g2.ring(m).unwrap().z, -g2.ring(r).unwrap().z);
            assert_eq!(g2.ring(m).unwrap().len, g2.ring(r).unwrap().len);
        }
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        for e in 0..=13 {
            let g = HealpixGrid::new(1 << e).unwrap();
            let total = g.weight() * g.n_pix() as f64;
            assert!((total - 4.0 * PI).abs() <= 1e-12 * 4.0 * PI);
            assert_eq!(g.n_rings(), 4 * g.n_side() - 1);
            assert_eq!(g.rings().iter().map(|r| r.len).sum::<usize>(), g.n_pix());
        }
    }

    #[test]
    fn flat_index_round_trip() {
        for n in [1, 2, 4, 16] {
            let g = HealpixGrid::new(n).unwrap();
            for k in 0..g.n_pix() {
                let (r, p) = g.locate(k).unwrap();
                assert_eq!(g.flat_index(r, p).unwrap(), k);
            }
        }
    }

    #[test]
    fn z_strictly_decreasing() {
        let g = HealpixGrid::new(8).unwrap();
        assert!(g.rings().windows(2).all(|w| w[0].z > w[1].z));
    }

    #[test]
    fn pixel_of_center_is_identity() {
        for n in [1, 2, 8, 32] {
            let g = HealpixGrid::new(n).unwrap();
            for (k, c) in g.centers().iter().enumerate() {
                assert_eq!(g.pixel_of(c), k);
            }
        }
    }

    #[test]
    fn equal_weight_quadrature_of_zonal_harmonics() {
        // Σ_k w·Y_l0(ξ_k) for 1 ≤ l ≤ 2·n_side. The equal-weight rule is only
        // approximate; the 1e-3 level is reached from n_side = 64 on.
        use crate::legendre::normalized_assoc_legendre;
        for n in [64, 128] {
            let g = HealpixGrid::new(n).unwrap();
            let l_max = 2 * n;
            let mut sums = vec![0.0; l_max + 1];
            for ring in g.rings() {
                let col = normalized_assoc_legendre(l_max, 0, ring.z).unwrap();
                for (l, s) in sums.iter_mut().enumerate() {
                    *s += ring.len as f64 * g.weight() * col.value(l);
                }
            }
            for (l, s) in sums.iter().enumerate().skip(1) {
                assert!(s.abs() < 1e-3, "n_side={n} l={l} sum={s}");
            }
        }
    }

    #[test]
    fn perturbation() {
        let g = HealpixGrid::new(8).unwrap();
        let exact = perturb_grid(&g, 0.0, 3).unwrap();
        assert_eq!(exact, g.centers());
        let a = perturb_grid(&g, 0.3, 42).unwrap();
        let b = perturb_grid(&g, 0.3, 42).unwrap();
        assert_eq!(a.len(), 768);
        assert_eq!(a, b);
        assert_ne!(a, perturb_grid(&g, 0.3, 43).unwrap());
        let bound = 0.3 * g.weight().sqrt();
        for (p, c) in a.iter().zip(g.centers()) {
            assert!(p.theta > 0.0 && p.theta < PI);
            assert!((0.0..TAU).contains(&p.phi));
            assert!((p.theta - c.theta).abs() <= bound + 1e-15);
        }
        assert!(perturb_grid(&g, 1.0, 0).is_err());
    }
}
