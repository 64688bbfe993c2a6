//! Browser bindings: a thin JSON-in/JSON-out layer over the `orbita` library
//! for the static demo page in `www/`.

use orbita::circle;
use orbita::mathieu;
use orbita::optics::{self, MaskSpectrum, OpticalConfig, PropagationMethod};
use orbita::states::{self, Family, StateRequest};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct StateView {
    family: String,
    alpha: f64,
    phi: Vec<f64>,
    density: Vec<f64>,
    m: Vec<i32>,
    spectrum: Vec<f64>,
    var_e: f64,
    var_l: f64,
    product: f64,
}

fn err_js(e: orbita::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Angular density, momentum spectrum and uncertainties of one family member.
/// Returns a JSON string.
#[wasm_bindgen]
pub fn state_view(family: &str, alpha: f64, grid: usize, window: i32) -> Result<String, JsValue> {
    let family: Family = family.parse().map_err(err_js)?;
    let pkg = states::make_state(&StateRequest::new(family, alpha)).map_err(err_js)?;
    let samples = circle::synthesize(&pkg.state, grid.clamp(64, 4096)).map_err(err_js)?;
    let report = circle::uncertainty_report(&pkg.state).map_err(err_js)?;
    let window = window.clamp(1, 64);
    let view = StateView {
        family: family.as_str().to_string(),
        alpha,
        phi: (0..samples.values().len()).map(|j| samples.phi(j)).collect(),
        density: samples.values().iter().map(|v| v.norm_sqr()).collect(),
        m: (-window..=window).collect(),
        spectrum: (-window..=window)
            .map(|m| pkg.state.amplitude(m).norm_sqr())
            .collect(),
        var_e: report.var_e,
        var_l: report.var_l,
        product: (report.var_e * report.var_l).sqrt(),
    };
    serde_json::to_string(&view).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[derive(Serialize)]
struct SweepView {
    q: Vec<f64>,
    var_e: Vec<f64>,
    var_l: Vec<f64>,
    product: Vec<f64>,
    bound: Vec<f64>,
}

/// Uncertainty curve of the Mathieu ground family over a log-spaced `q` grid,
/// together with the dispersion bound `DeltaE DeltaL >= sqrt(var_e(1-var_e))/2`.
#[wasm_bindgen]
pub fn mathieu_sweep(n: usize, q_min: f64, q_max: f64, points: usize) -> Result<String, JsValue> {
    let points = points.clamp(2, 400);
    let (lo, hi) = (q_min.max(1e-6), q_max.max(q_min * 1.0001));
    let q_grid: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    let curve = mathieu::sweep_uncertainty_curve(n, &q_grid).map_err(err_js)?;
    let pts: Vec<_> = curve.iter().filter(|p| p.n == n).collect();
    let view = SweepView {
        q: pts.iter().map(|p| p.q).collect(),
        var_e: pts.iter().map(|p| p.var_e).collect(),
        var_l: pts.iter().map(|p| p.var_l).collect(),
        product: pts.iter().map(|p| p.product).collect(),
        bound: pts
            .iter()
            .map(|p| (p.var_e * (1.0 - p.var_e)).max(0.0).sqrt() / 2.0)
            .collect(),
    };
    serde_json::to_string(&view).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[derive(Serialize)]
struct ResponseView {
    n_min: i32,
    entries: Vec<Vec<f64>>,
    dominance: Vec<f64>,
}

/// Detector response matrix on a reduced grid, sized for interactive use.
#[wasm_bindgen]
pub fn response_heatmap(max_helicity: i32, aperture_radius: f64) -> Result<String, JsValue> {
    let h = max_helicity.clamp(1, 8);
    let cfg = OpticalConfig {
        radial_samples: 256,
        helicity: [-h, h],
        aperture_radius: aperture_radius.clamp(1e-6, 5e-4),
        ..OpticalConfig::default()
    };
    let resp = optics::response_matrix(&cfg, PropagationMethod::ClosedForm).map_err(err_js)?;
    let view = ResponseView {
        n_min: -h,
        dominance: (-h..=h).map(|n| resp.dominance(n)).collect(),
        entries: resp.entries,
    };
    serde_json::to_string(&view).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Measured spectrum of a wedge mask through the analyzer bench (reduced grid).
#[wasm_bindgen]
pub fn wedge_measurement(opening: f64, aperture_radius: f64) -> Result<String, JsValue> {
    let cfg = OpticalConfig {
        radial_samples: 256,
        helicity: [-6, 6],
        aperture_radius: aperture_radius.clamp(1e-6, 5e-4),
        ..OpticalConfig::default()
    };
    let resp = optics::response_matrix(&cfg, PropagationMethod::ClosedForm).map_err(err_js)?;
    let mask = MaskSpectrum::wedge(opening.clamp(0.05, 6.28), -6, 6).map_err(err_js)?;
    let spec = optics::simulate_spectrum(&mask, &resp, None);
    serde_json::to_string(&spec).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_view_produces_json() {
        let s = state_view("vonmises", 0.3, 256, 10).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["family"], "vonmises");
        assert_eq!(v["phi"].as_array().unwrap().len(), 256);
    }

    #[test]
    fn sweep_produces_monotone_var_e() {
        let s = mathieu_sweep(0, 0.1, 10.0, 20).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let var_e: Vec<f64> = v["var_e"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(var_e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
