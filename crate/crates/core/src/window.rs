//! Littlewood–Paley window `b(ξ)` built from a smooth bump.
//!
//! `f(t) = exp(−1/(1−t²))` on `(−1, 1)` is integrated into a smooth step
//! `ψ(u)`, which defines `φ(t)` (1 below `1/B`, 0 above 1). The window is
//! `b(ξ) = √(φ(ξ/B) − φ(ξ))`. Squared dilates telescope, so
//! `Σ_j b²(η/B^j) = 1` for every `η ≥ 1`.

use crate::error::{Error, Result};

/// Intervals in the tabulated smooth step.
pub const TABLE_INTERVALS: usize = 4096;

const DEFAULT_QUAD_TOL: f64 = 1e-14;

fn bump(t: f64) -> f64 {
    if t <= -1.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / ((1.0 - t) * (1.0 + t))).exp()
    }
}

fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson_step(&f, a, fa, b, fb);
    adaptive_simpson_rec(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Window parameters and the tabulated smooth step.
#[derive(Clone, Debug)]
pub struct WindowSpec {
    b: f64,
    quad_tol: f64,
    norm: f64,
    // ψ on the half range [−1, 0], nodes spaced 2/TABLE_INTERVALS apart.
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl WindowSpec {
    pub fn new(b: f64) -> Result<Self> {
        Self::with_tolerance(b, DEFAULT_QUAD_TOL)
    }

    pub fn with_tolerance(b: f64, quad_tol: f64) -> Result<Self> {
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("B must exceed 1, got {b}")));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadrature tolerance must be positive, got {quad_tol}"
            )));
        }
        let half_nodes = TABLE_INTERVALS / 2;
        let h = 2.0 / TABLE_INTERVALS as f64;
        let mut cumulative = Vec::with_capacity(half_nodes + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..half_nodes {
            let a = -1.0 + i as f64 * h;
            acc += adaptive_simpson(bump, a, a + h, quad_tol / TABLE_INTERVALS as f64);
            cumulative.push(acc);
        }
        let norm = 2.0 * acc;
        let values: Vec<f64> = cumulative.iter().map(|c| c / norm).collect();
        let mut slopes: Vec<f64> = (0..=half_nodes)
            .map(|i| bump(-1.0 + i as f64 * h) / norm)
            .collect();
        limit_slopes(&values, &mut slopes, h);
        Ok(Self {
            b,
            quad_tol,
            norm,
            values,
            slopes,
        })
    }

    /// Dilation parameter `B`.
    pub fn base(&self) -> f64 {
        self.b
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// `∫_{−1}^{1} exp(−1/(1−t²)) dt`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Smooth step `ψ(u)` from the interpolation table. Inputs outside
    /// `[−1, 1]` saturate.
    pub fn psi(&self, u: f64) -> f64 {
        if u <= -1.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else if u > 0.0 {
            1.0 - self.psi_half(-u)
        } else {
            self.psi_half(u)
        }
    }

    fn psi_half(&self, u: f64) -> f64 {
        let h = 2.0 / TABLE_INTERVALS as f64;
        let s = (u + 1.0) / h;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let t = s - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    /// Reference `ψ(u)` by direct adaptive quadrature.
    pub fn psi_quadrature(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        adaptive_simpson(bump, -1.0, u, self.quad_tol) / self.norm
    }

    /// Smooth cutoff: 1 on `[0, 1/B]`, 0 beyond 1.
    pub fn phi(&self, t: f64) -> f64 {
        let inv_b = 1.0 / self.b;
        if t <= inv_b {
            1.0
        } else if t > 1.0 {
            0.0
        } else {
            self.psi(1.0 - 2.0 * self.b * (t - inv_b) / (self.b - 1.0))
        }
    }

    /// `1 − φ(t)`, evaluated without cancellation near `t = 1/B`.
    pub fn phi_complement(&self, t: f64) -> f64 {
        let inv_b = 1.0 / self.b;
        if t <= inv_b {
            0.0
        } else if t > 1.0 {
            1.0
        } else {
            self.psi(2.0 * self.b * (t - inv_b) / (self.b - 1.0) - 1.0)
        }
    }

    /// Window value `b(ξ)`; zero for `ξ ≤ 1/B` and `ξ ≥ B`.
    ///
    /// On `(1/B, 1]` the first term `φ(ξ/B)` is exactly 1 and on `(1, B)` the
    /// second term `φ(ξ)` is exactly 0, so only one smooth step is evaluated.
    pub fn b(&self, xi: f64) -> f64 {
        if xi <= 1.0 / self.b || xi >= self.b {
            0.0
        } else if xi <= 1.0 {
            self.phi_complement(xi).max(0.0).sqrt()
        } else {
            self.phi(xi / self.b).max(0.0).sqrt()
        }
    }
}

// Fritsch–Carlson limiter: keeps the Hermite interpolant monotone.
fn limit_slopes(values: &[f64], slopes: &mut [f64], h: f64) {
    for i in 0..values.len() - 1 {
        let delta = (values[i + 1] - values[i]) / h;
        if delta == 0.0 {
            slopes[i] = 0.0;
            slopes[i + 1] = 0.0;
            continue;
        }
        let a = slopes[i] / delta;
        let b = slopes[i + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            slopes[i] = tau * a * delta;
            slopes[i + 1] = tau * b * delta;
        }
    }
}

/// `ψ(u)` with a domain check, `|u| ≤ 1`.
pub fn bump_psi(u: f64, spec: &WindowSpec) -> Result<f64> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!(
            "bump argument must lie in [-1, 1], got {u}"
        )));
    }
    Ok(spec.psi(u))
}

/// `b(ξ)` with a domain check, `ξ ≥ 0`.
pub fn window_b(xi: f64, spec: &WindowSpec) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::Domain(format!(
            "window argument must be non-negative, got {xi}"
        )));
    }
    Ok(spec.b(xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_endpoints() {
        let w = WindowSpec::new(2.0).unwrap();
        assert_eq!(bump_psi(-1.0, &w).unwrap(), 0.0);
        assert_eq!(bump_psi(1.0, &w).unwrap(), 1.0);
        assert_eq!(bump_psi(0.0, &w).unwrap(), 0.5);
        assert!(bump_psi(1.5, &w).is_err());
    }

    #[test]
    fn table_matches_quadrature() {
        let w = WindowSpec::new(2.0).unwrap();
        for i in 0..=400 {
            let u = -1.0 + 2.0 * i as f64 / 400.0 + 1.234e-4;
            let u = u.min(1.0);
            let diff = (w.psi(u) - w.psi_quadrature(u)).abs();
            assert!(diff < 1e-10, "u={u} diff={diff}");
        }
    }

    #[test]
    fn step_is_monotone() {
        let w = WindowSpec::new(2.0).unwrap();
        let mut last = 0.0;
        for i in 0..=20_000 {
            let v = w.psi(-1.0 + 2.0 * i as f64 / 20_000.0);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn window_support_and_peak() {
        for b in [1.5, 2.0, 3.0] {
            let w = WindowSpec::new(b).unwrap();
            assert_eq!(w.b(1.0 / b), 0.0);
            assert_eq!(w.b(b), 0.0);
            assert_eq!(w.b(1.0), 1.0);
            assert_eq!(w.b(0.5 / b), 0.0);
            assert_eq!(w.b(2.0 * b), 0.0);
            let lo = 1.0 / b;
            for i in 1..1000 {
                let xi = lo + (b - lo) * i as f64 / 1000.0;
                assert!(w.b(xi) > 0.0, "B={b} xi={xi}");
            }
        }
        assert!(WindowSpec::new(1.0).is_err());
        assert!(window_b(-0.1, &WindowSpec::new(2.0).unwrap()).is_err());
    }

    #[test]
    fn dyadic_partition_at_3_7() {
        let w = WindowSpec::new(2.0).unwrap();
        let s: f64 = (0..=12).map(|j| w.b(3.7 / 2f64.powi(j)).powi(2)).sum();
        assert!((s - 1.0).abs() < 1e-8);
    }

    #[test]
    fn smooth_across_support_ends() {
        // Every finite difference up to order 4 vanishes on both sides of the
        // support endpoints and stays bounded inside.
        let w = WindowSpec::new(2.0).unwrap();
        let h = 1e-4;
        let diffs = |x: f64| {
            let f = |i: i32| w.b(x + i as f64 * h);
            [
                (f(1) - f(-1)) / (2.0 * h),
                (f(1) - 2.0 * f(0) + f(-1)) / h.powi(2),
                (f(2) - 2.0 * f(1) + 2.0 * f(-1) - f(-2)) / (2.0 * h.powi(3)),
                (f(2) - 4.0 * f(1) + 6.0 * f(0) - 4.0 * f(-1) + f(-2)) / h.powi(4),
            ]
        };
        for &edge in &[0.5, 2.0] {
            for k in -5..=5 {
                let d = diffs(edge + k as f64 * h);
                assert!(d.iter().all(|v| v.abs() < 1e-6), "edge={edge} k={k} {d:?}");
            }
        }
        for i in 1..1500 {
            let d = diffs(0.5 + 1.5 * i as f64 / 1500.0);
            assert!(d.iter().all(|v| v.is_finite() && v.abs() < 1e7), "{d:?}");
        }
    }
}
