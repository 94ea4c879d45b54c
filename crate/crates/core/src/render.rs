//! Hammer equal-area projection and full-sky rasters.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::path::Path;

use crate::error::{Error, Result};
use crate::formats::write_bytes;
use crate::healpix::{HealpixGrid, SphPoint};

/// Smallest accepted raster width.
pub const MIN_WIDTH: usize = 64;

/// Raster color for pixels outside the ellipse.
pub const BACKGROUND: [u8; 3] = [255, 255, 255];

/// Projected coordinates, `x ∈ [−2√2, 2√2]`, `y ∈ [−√2, √2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HammerXY {
    pub x: f64,
    pub y: f64,
}

impl HammerXY {
    pub fn in_ellipse(&self) -> bool {
        self.x * self.x / 8.0 + self.y * self.y / 2.0 <= 1.0 + 1e-12
    }
}

/// Longitude relative to `center`, in `(−π, π]`.
fn recenter(phi: f64, center: f64) -> f64 {
    let d = (phi - center).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Projects with the given central meridian.
pub fn hammer_project_at(point: &SphPoint, central_meridian: f64) -> HammerXY {
    let lat = PI / 2.0 - point.theta;
    let lon = recenter(point.phi, central_meridian);
    let (sl, cl) = lat.sin_cos();
    let d = (1.0 + cl * (lon / 2.0).cos()).sqrt();
    HammerXY {
        x: 2.0 * SQRT_2 * cl * (lon / 2.0).sin() / d,
        y: SQRT_2 * sl / d,
    }
}

/// Projects with the central meridian at `φ = π`.
pub fn hammer_project(point: &SphPoint) -> HammerXY {
    hammer_project_at(point, PI)
}

/// Inverse projection; `None` outside the ellipse.
pub fn hammer_inverse(xy: HammerXY, central_meridian: f64) -> Option<SphPoint> {
    if !xy.in_ellipse() {
        return None;
    }
    let z2 = 1.0 - (xy.x / 4.0).powi(2) - (xy.y / 2.0).powi(2);
    let z = z2.max(0.0).sqrt();
    let lon = 2.0 * (z * xy.x).atan2(2.0 * (2.0 * z * z - 1.0));
    let lat = (z * xy.y).clamp(-1.0, 1.0).asin();
    let theta = (PI / 2.0 - lat).clamp(0.0, PI);
    Some(SphPoint {
        theta,
        phi: crate::healpix::wrap_phi(lon + central_meridian),
    })
}

/// Fixed 256-entry blue-white-red palette, linear in RGB between three anchors.
pub fn palette() -> [[u8; 3]; 256] {
    const LOW: [f64; 3] = [59.0, 76.0, 192.0];
    const MID: [f64; 3] = [221.0, 221.0, 221.0];
    const HIGH: [f64; 3] = [180.0, 4.0, 38.0];
    let mut out = [[0u8; 3]; 256];
    for (i, c) in out.iter_mut().enumerate() {
        let t = i as f64 / 255.0;
        let (a, b, s) = if t < 0.5 {
            (LOW, MID, t * 2.0)
        } else {
            (MID, HIGH, t * 2.0 - 1.0)
        };
        for k in 0..3 {
            c[k] = (a[k] + (b[k] - a[k]) * s).round() as u8;
        }
    }
    out
}

/// Values to draw: on a HEALPix grid, or at scattered points (nearest sample).
#[derive(Clone, Copy, Debug)]
pub enum MapSource<'a> {
    Grid {
        grid: &'a HealpixGrid,
        values: &'a [f64],
    },
    Points {
        points: &'a [SphPoint],
        values: &'a [f64],
    },
}

impl MapSource<'_> {
    fn len_check(&self) -> Result<()> {
        let (n, m) = match self {
            MapSource::Grid { grid, values } => (grid.n_pix(), values.len()),
            MapSource::Points { points, values } => (points.len(), values.len()),
        };
        if n != m || m == 0 {
            return Err(Error::Validation(format!(
                "map has {m} values for {n} locations"
            )));
        }
        Ok(())
    }

    fn lookup(&self, x: &SphPoint, vectors: &[[f64; 3]]) -> f64 {
        match self {
            MapSource::Grid { grid, values } => values[grid.pixel_of(x)],
            MapSource::Points { values, .. } => {
                let u = x.unit_vector();
                let mut best = (f64::NEG_INFINITY, 0);
                for (i, v) in vectors.iter().enumerate() {
                    let c = crate::healpix::dot(&u, v);
                    if c > best.0 {
                        best = (c, i);
                    }
                }
                values[best.1]
            }
        }
    }
}

/// A projected map: sampled values per raster pixel (NaN outside the ellipse).
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn sample(source: &MapSource<'_>, width: usize, central_meridian: f64) -> Result<Self> {
        if width < MIN_WIDTH {
            return Err(Error::InvalidArgument(format!(
                "raster width must be at least {MIN_WIDTH}, got {width}"
            )));
        }
        source.len_check()?;
        let vectors: Vec<[f64; 3]> = match source {
            MapSource::Points { points, .. } => points.iter().map(SphPoint::unit_vector).collect(),
            MapSource::Grid { .. } => Vec::new(),
        };
        let height = width / 2;
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let xy = pixel_to_xy(col, row, width, height);
                values.push(match hammer_inverse(xy, central_meridian) {
                    Some(p) => source.lookup(&p, &vectors),
                    None => f64::NAN,
                });
            }
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Raster pixel containing the projection of `point`.
    pub fn pixel_of(&self, point: &SphPoint, central_meridian: f64) -> (usize, usize) {
        let xy = hammer_project_at(point, central_meridian);
        let col = ((xy.x + 2.0 * SQRT_2) / (4.0 * SQRT_2) * self.width as f64).floor();
        let row = ((SQRT_2 - xy.y) / (2.0 * SQRT_2) * self.height as f64).floor();
        (
            (col.max(0.0) as usize).min(self.width - 1),
            (row.max(0.0) as usize).min(self.height - 1),
        )
    }

    /// Symmetric color range `±max|v|`, or `[min, max]` when the map has one sign.
    fn range(&self) -> (f64, f64) {
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        if lo < 0.0 && hi > 0.0 {
            let m = lo.abs().max(hi);
            (-m, m)
        } else {
            (lo, hi)
        }
    }

    /// RGB triples, row-major, top row first.
    pub fn to_rgb(&self) -> Vec<u8> {
        let pal = palette();
        let (lo, hi) = self.range();
        let span = hi - lo;
        let mut out = Vec::with_capacity(3 * self.values.len());
        for &v in &self.values {
            let c = if !v.is_finite() {
                BACKGROUND
            } else if span > 0.0 {
                pal[(((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as usize]
            } else {
                pal[128]
            };
            out.extend_from_slice(&c);
        }
        out
    }

    /// RGBA bytes with a transparent background, for canvas drawing.
    pub fn to_rgba(&self) -> Vec<u8> {
        let rgb = self.to_rgb();
        let mut out = Vec::with_capacity(4 * self.values.len());
        for (px, v) in rgb.chunks_exact(3).zip(&self.values) {
            out.extend_from_slice(px);
            out.push(if v.is_finite() { 255 } else { 0 });
        }
        out
    }

    /// Binary PPM (P6) image.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_rgb());
        out
    }
}

fn pixel_to_xy(col: usize, row: usize, width: usize, height: usize) -> HammerXY {
    HammerXY {
        x: ((col as f64 + 0.5) / width as f64) * 4.0 * SQRT_2 - 2.0 * SQRT_2,
        y: SQRT_2 - ((row as f64 + 0.5) / height as f64) * 2.0 * SQRT_2,
    }
}

/// Renders a map to a PPM file with the central meridian at `φ = π`.
pub fn render_map(source: &MapSource<'_>, width: usize, out_path: &Path) -> Result<Raster> {
    let raster = Raster::sample(source, width, PI)?;
    write_bytes(out_path, &raster.to_ppm())?;
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> SphPoint {
        SphPoint::new(PI / 2.0 - lat, lon).unwrap()
    }

    #[test]
    fn closed_forms() {
        let c = hammer_project_at(&pt(0.0, 0.0), 0.0);
        assert!(c.x.abs() < 1e-15 && c.y.abs() < 1e-15);
        let n = hammer_project_at(&pt(PI / 2.0, 0.3), 0.0);
        assert!(n.x.abs() < 1e-15 && (n.y - SQRT_2).abs() < 1e-15);
        let e = hammer_project_at(&pt(0.0, PI), 0.0);
        assert!((e.x - 2.0 * SQRT_2).abs() < 1e-12 && e.y.abs() < 1e-15);
        // default central meridian puts φ = π at the center
        let d = hammer_project(&pt(0.0, PI));
        assert!(d.x.abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let grid = HealpixGrid::new(8).unwrap();
        for p in grid.centers() {
            let xy = hammer_project_at(&p, 1.0);
            assert!(xy.in_ellipse());
            let q = hammer_inverse(xy, 1.0).unwrap();
            assert!(p.distance(&q) < 1e-9, "{p:?} {q:?}");
        }
        assert!(hammer_inverse(HammerXY { x: 2.8, y: 1.0 }, 0.0).is_none());
    }

    #[test]
    fn palette_endpoints() {
        let p = palette();
        assert_eq!(p[0], [59, 76, 192]);
        assert_eq!(p[255], [180, 4, 38]);
        assert_eq!(p.len(), 256);
    }

    #[test]
    fn constant_map_is_uniform() {
        let grid = HealpixGrid::new(2).unwrap();
        let values = vec![3.0; grid.n_pix()];
        let r = Raster::sample(
            &MapSource::Grid {
                grid: &grid,
                values: &values,
            },
            64,
            PI,
        )
        .unwrap();
        let rgb = r.to_rgb();
        let inside: Vec<&[u8]> = rgb
            .chunks_exact(3)
            .zip(&r.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(c, _)| c)
            .collect();
        assert!(!inside.is_empty());
        assert!(inside.iter().all(|c| *c == inside[0]));
        let ppm = r.to_ppm();
        assert!(ppm.starts_with(b"P6\n64 32\n255\n"));
        assert_eq!(ppm.len(), "P6\n64 32\n255\n".len() + 64 * 32 * 3);
    }

    #[test]
    fn rejects_narrow_and_mismatched() {
        let grid = HealpixGrid::new(1).unwrap();
        let v = vec![0.0; 12];
        let src = MapSource::Grid {
            grid: &grid,
            values: &v,
        };
        assert_eq!(
            Raster::sample(&src, 63, PI).unwrap_err().kind(),
            "invalid-argument"
        );
        let short = MapSource::Grid {
            grid: &grid,
            values: &v[..5],
        };
        assert_eq!(
            Raster::sample(&short, 64, PI).unwrap_err().kind(),
            "validation"
        );
    }
}
