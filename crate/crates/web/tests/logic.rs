use needlets_web::{needlet_profile, needlet_raster, window_curves, WendlandState};

#[test]
fn needlet_view_has_canvas_shape() {
    let r = needlet_raster(2.0, 16, 3, 100, 128).unwrap();
    assert_eq!((r.width, r.height), (128, 64));
    let rgba = r.to_rgba();
    assert_eq!(rgba.len(), 128 * 64 * 4);
    // corners fall outside the ellipse and are transparent
    assert_eq!(rgba[3], 0);
    assert!(needlet_raster(2.0, 16, 9, 0, 128).is_err());
}

#[test]
fn profile_peaks_at_zero_distance() {
    let p = needlet_profile(2.0, 16, 3, 200).unwrap();
    assert_eq!(p.len(), 200);
    assert!(p.iter().all(|v| v.abs() <= p[0]));
}

#[test]
fn window_curves_sum_to_one_inside_the_covered_range() {
    let (b, levels, n) = (2.0, 4, 161);
    let c = window_curves(b, levels, n).unwrap();
    assert_eq!(c.len(), (levels + 1) * n);
    let sum = &c[levels * n..];
    // ξ ∈ [1, B^{levels−1}] is covered by levels 0..levels
    for (i, s) in sum.iter().enumerate() {
        let xi = 16.0 * i as f64 / (n - 1) as f64;
        if (1.0..=8.0).contains(&xi) {
            assert!((s - 1.0).abs() < 1e-12, "xi={xi} sum={s}");
        }
    }
}

#[test]
fn thresholding_slider_extremes() {
    let state = WendlandState::new(0, 0.3).unwrap();
    let (_, full) = state.thresholded(1.0, 64).unwrap();
    let (_, none) = state.thresholded(0.0, 64).unwrap();
    assert!(full > 0.0 && none > 0.0);
    assert!((full - state.outside_max_harmonic()).abs() < 0.05);
    assert!(state.thresholded(1.5, 64).is_err());
}
