//! Browser bindings for three visual operations: a single needlet on the
//! sphere with its radial profile, the window functions for a dilation base,
//! and the Wendland thresholding demo with an adjustable keep fraction.
//!
//! The plain-Rust functions carry the logic and are tested natively; the
//! `#[wasm_bindgen]` items only convert errors for JavaScript.

use std::f64::consts::PI;

use needlets::fastsht::fast_isht;
use needlets::healpix::HealpixGrid;
use needlets::needlet::{eval_needlet, hard_threshold, make_plan, synthesize};
use needlets::render::{MapSource, Raster};
use needlets::wendland::{run_demo, DemoConfig, DemoResult};
use needlets::{Result, WindowSpec};
use wasm_bindgen::prelude::*;

/// Grid the needlet view is evaluated on before projection.
const VIEW_NSIDE: usize = 32;

/// RGBA raster (`width × width/2`) of needlet `(j, k)`.
pub fn needlet_raster(b: f64, l_max: usize, j: usize, k: usize, width: usize) -> Result<Raster> {
    let plan = make_plan(b, l_max)?;
    let grid = HealpixGrid::new(VIEW_NSIDE)?;
    let values = grid
        .centers()
        .iter()
        .map(|x| eval_needlet(&plan, j, k, x))
        .collect::<Result<Vec<f64>>>()?;
    Raster::sample(
        &MapSource::Grid {
            grid: &grid,
            values: &values,
        },
        width,
        PI,
    )
}

/// Profile of level-`j` needlets at `samples` distances evenly spaced on `[0, π]`.
pub fn needlet_profile(b: f64, l_max: usize, j: usize, samples: usize) -> Result<Vec<f64>> {
    let profile = make_plan(b, l_max)?.profile(j, false)?;
    let n = samples.max(2);
    Ok((0..n)
        .map(|i| profile.at_distance(PI * i as f64 / (n - 1) as f64))
        .collect())
}

/// `b²(ξ/B^j)` for `j = 0..levels` at `samples` points on `[0, B^levels]`,
/// level-major, followed by their sum.
pub fn window_curves(b: f64, levels: usize, samples: usize) -> Result<Vec<f64>> {
    let spec = WindowSpec::new(b)?;
    let n = samples.max(2);
    let top = b.powi(levels as i32);
    let xs: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
    let mut out = Vec::with_capacity((levels + 1) * n);
    let mut sum = vec![0.0; n];
    for j in 0..levels {
        for (i, x) in xs.iter().enumerate() {
            let v = spec.b(x / b.powi(j as i32)).powi(2);
            sum[i] += v;
            out.push(v);
        }
    }
    out.extend(sum);
    Ok(out)
}

/// Demo state kept between slider moves: the pipeline runs once, thresholding
/// and synthesis are repeated per keep fraction.
pub struct WendlandState {
    demo: DemoResult,
}

impl WendlandState {
    pub fn new(seed: u64, amplitude: f64) -> Result<Self> {
        let config = DemoConfig {
            seed,
            amplitude,
            map_nside: VIEW_NSIDE,
            ..DemoConfig::default()
        };
        Ok(Self {
            demo: run_demo(&config)?,
        })
    }

    pub fn harmonic_raster(&self, width: usize) -> Result<Raster> {
        let grid = &self.demo.map_grid;
        Raster::sample(
            &MapSource::Grid {
                grid,
                values: &self.demo.sh_map,
            },
            width,
            PI,
        )
    }

    /// Reconstruction after keeping `keep` of the top level, and the
    /// outside-support max of that map.
    pub fn thresholded(&self, keep: f64, width: usize) -> Result<(Raster, f64)> {
        let d = &self.demo;
        let beta = hard_threshold(&d.beta, &[d.threshold_level], keep)?;
        let alm = synthesize(&beta)?;
        let values = fast_isht(&alm, 0, alm.l_max(), &d.map_grid)?;
        let field = DemoConfig::default().field;
        let outside = d
            .map_grid
            .centers()
            .iter()
            .zip(&values)
            .filter(|(x, _)| !field.contains(x))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let raster = Raster::sample(
            &MapSource::Grid {
                grid: &d.map_grid,
                values: &values,
            },
            width,
            PI,
        )?;
        Ok((raster, outside))
    }

    pub fn outside_max_harmonic(&self) -> f64 {
        self.demo.metrics.outside_max_sh
    }
}

fn js(e: needlets::Error) -> JsError {
    JsError::new(&format!("{}: {e}", e.kind()))
}

#[wasm_bindgen(js_name = needletRgba)]
pub fn needlet_rgba(
    b: f64,
    l_max: usize,
    j: usize,
    k: usize,
    width: usize,
) -> std::result::Result<Vec<u8>, JsError> {
    needlet_raster(b, l_max, j, k, width)
        .map(|r| r.to_rgba())
        .map_err(js)
}

#[wasm_bindgen(js_name = needletProfile)]
pub fn needlet_profile_js(
    b: f64,
    l_max: usize,
    j: usize,
    samples: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    needlet_profile(b, l_max, j, samples).map_err(js)
}

#[wasm_bindgen(js_name = levelSize)]
pub fn level_size(b: f64, l_max: usize, j: usize) -> std::result::Result<usize, JsError> {
    let plan = make_plan(b, l_max).map_err(js)?;
    Ok(plan.level(j).map_err(js)?.n_pix())
}

#[wasm_bindgen(js_name = windowCurves)]
pub fn window_curves_js(
    b: f64,
    levels: usize,
    samples: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    window_curves(b, levels, samples).map_err(js)
}

#[wasm_bindgen]
pub struct WendlandDemo {
    state: WendlandState,
    outside: f64,
}

#[wasm_bindgen]
impl WendlandDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, amplitude: f64) -> std::result::Result<WendlandDemo, JsError> {
        Ok(Self {
            state: WendlandState::new(seed, amplitude).map_err(js)?,
            outside: f64::NAN,
        })
    }

    #[wasm_bindgen(js_name = harmonicRgba)]
    pub fn harmonic_rgba(&self, width: usize) -> std::result::Result<Vec<u8>, JsError> {
        self.state
            .harmonic_raster(width)
            .map(|r| r.to_rgba())
            .map_err(js)
    }

    #[wasm_bindgen(js_name = thresholdedRgba)]
    pub fn thresholded_rgba(
        &mut self,
        keep: f64,
        width: usize,
    ) -> std::result::Result<Vec<u8>, JsError> {
        let (raster, outside) = self.state.thresholded(keep, width).map_err(js)?;
        self.outside = outside;
        Ok(raster.to_rgba())
    }

    /// Outside-support max of the last thresholded map.
    #[wasm_bindgen(getter, js_name = outsideThresholded)]
    pub fn outside_thresholded(&self) -> f64 {
        self.outside
    }

    #[wasm_bindgen(getter, js_name = outsideHarmonic)]
    pub fn outside_harmonic(&self) -> f64 {
        self.state.outside_max_harmonic()
    }
}
