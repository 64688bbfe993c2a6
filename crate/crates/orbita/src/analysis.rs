//! Recovery of momentum spectra and uncertainty products from simulated
//! detector data.
//!
//! The measured powers `P(N)` mix the true weights through the detector
//! response, `P(N) = sum_m C[N][m] p_m`. The pipeline inverts that mixing by
//! Tikhonov-regularized non-negative least squares, fits a parametric family
//! to the recovered spectrum, evaluates the closed-form uncertainty product of
//! the fitted member, and attaches residual-bootstrap error bars.

use crate::mathieu;
use crate::optics::{self, MaskSpectrum, NoiseModel, OpticalConfig, ResponseMatrix};
use crate::states::{self, Family, StateRequest};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Spectrum recovered by deconvolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveredSpectrum {
    pub m_min: i32,
    /// Non-negative weights normalized to sum 1 over the window.
    pub probabilities: Vec<f64>,
    /// Unnormalized solution of the regularized problem (detector units).
    pub raw: Vec<f64>,
    pub regularization: f64,
}

impl RecoveredSpectrum {
    pub fn window(&self) -> (i32, i32) {
        (self.m_min, self.m_min + self.probabilities.len() as i32 - 1)
    }

    pub fn probability(&self, m: i32) -> f64 {
        let idx = m - self.m_min;
        if idx < 0 || idx as usize >= self.probabilities.len() {
            0.0
        } else {
            self.probabilities[idx as usize]
        }
    }
}

/// Lawson–Hanson active-set solver for `min |A x - b|` with `x >= 0`.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.amax() * b.amax().max(1.0);
    let max_outer = 6 * n;

    let solve_passive = |passive: &[bool], cols: usize| -> DVector<f64> {
        let sub = a.select_columns(
            passive
                .iter()
                .enumerate()
                .filter(|(_, &p)| p)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
                .iter(),
        );
        let svd = sub.svd(true, true);
        svd.solve(b, 1e-13).unwrap_or_else(|_| DVector::zeros(cols))
    };

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&i| !passive[i])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match candidate {
            Some(i) if w[i] > tol => passive[i] = true,
            _ => return Ok(x),
        }
        loop {
            let cols = passive.iter().filter(|&&p| p).count();
            let z = solve_passive(&passive, cols);
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = z[k];
                }
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let a_i = x[i] / (x[i] - z[k]);
                    alpha = alpha.min(a_i);
                }
            }
            if !alpha.is_finite() {
                return Err(Error::Deconvolution(
                    "active-set step failed to make progress".into(),
                ));
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (z[k] - x[i]);
                if x[i] <= 1e-14 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    Err(Error::Deconvolution(
        "active-set iteration limit exceeded".into(),
    ))
}

fn response_to_matrix(response: &ResponseMatrix) -> DMatrix<f64> {
    let (n_lo, n_hi) = response.n_range();
    let (m_lo, m_hi) = response.m_range();
    DMatrix::from_fn(
        (n_hi - n_lo + 1) as usize,
        (m_hi - m_lo + 1) as usize,
        |i, j| response.get(n_lo + i as i32, m_lo + j as i32),
    )
}

/// Inverts the detector response on a measured spectrum with Tikhonov
/// regularization strength `lambda` and a non-negativity constraint.
pub fn deconvolve(
    measured: &[(i32, f64)],
    response: &ResponseMatrix,
    lambda: f64,
) -> Result<RecoveredSpectrum> {
    let (n_lo, n_hi) = response.n_range();
    if measured.len() != (n_hi - n_lo + 1) as usize
        || measured.iter().zip(n_lo..=n_hi).any(|(&(n, _), want)| n != want)
    {
        return Err(Error::Deconvolution(
            "measured spectrum does not cover the response analyzer range".into(),
        ));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "regularization strength must be non-negative",
        });
    }
    let c = response_to_matrix(response);
    if lambda == 0.0 {
        let sv = c.clone().svd(false, false).singular_values;
        let (s_max, s_min) = (sv.max(), sv.min());
        if s_min <= 1e-12 * s_max {
            return Err(Error::Deconvolution(format!(
                "response matrix is numerically singular (condition > 1e12); \
                 pass lambda > 0 or use the L-curve selector (s_min = {s_min:.3e})"
            )));
        }
    }
    let (rows, cols) = (c.nrows(), c.ncols());
    let mut aug = DMatrix::zeros(rows + cols, cols);
    aug.view_mut((0, 0), (rows, cols)).copy_from(&c);
    let sqrt_l = lambda.sqrt();
    for j in 0..cols {
        aug[(rows + j, j)] = sqrt_l;
    }
    let mut rhs = DVector::zeros(rows + cols);
    for (i, &(_, p)) in measured.iter().enumerate() {
        rhs[i] = p;
    }
    let x = nnls(&aug, &rhs)?;
    let raw: Vec<f64> = x.iter().copied().collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Deconvolution(
            "recovered spectrum vanished; the data carry no power".into(),
        ));
    }
    let (m_lo, _) = response.m_range();
    Ok(RecoveredSpectrum {
        m_min: m_lo,
        probabilities: raw.iter().map(|&v| v / total).collect(),
        raw,
        regularization: lambda,
    })
}

/// Chooses the Tikhonov strength at the corner of the L-curve
/// (log residual norm vs log solution norm) over a logarithmic grid.
pub fn deconvolve_l_curve(
    measured: &[(i32, f64)],
    response: &ResponseMatrix,
) -> Result<RecoveredSpectrum> {
    let scale: f64 = measured.iter().map(|&(_, p)| p * p).sum::<f64>().sqrt();
    if scale <= 0.0 {
        return Err(Error::Deconvolution("measured spectrum is all zero".into()));
    }
    let lambdas: Vec<f64> = (0..24)
        .map(|i| scale * scale * 1e-10 * 10f64.powf(i as f64 * 0.375))
        .collect();
    let c = response_to_matrix(response);
    let candidates: Vec<(f64, RecoveredSpectrum, f64, f64)> = lambdas
        .par_iter()
        .filter_map(|&l| deconvolve(measured, response, l).ok().map(|r| (l, r)))
        .map(|(l, r)| {
            let x = DVector::from_vec(r.raw.clone());
            let p = DVector::from_iterator(measured.len(), measured.iter().map(|&(_, p)| p));
            let rho = (&c * &x - p).norm().max(1e-300 * scale);
            let eta = x.norm().max(1e-300);
            (l, r, rho.ln(), eta.ln())
        })
        .collect();
    if candidates.len() < 3 {
        return Err(Error::Deconvolution(
            "too few regularization candidates converged for the L-curve".into(),
        ));
    }
    // discrete curvature of the (log rho, log eta) polyline
    let mut best = (1usize, f64::NEG_INFINITY);
    for i in 1..candidates.len() - 1 {
        let (_, _, x0, y0) = candidates[i - 1];
        let (_, _, x1, y1) = candidates[i];
        let (_, _, x2, y2) = candidates[i + 1];
        let (ax, ay) = (x1 - x0, y1 - y0);
        let (bx, by) = (x2 - x1, y2 - y1);
        let cross = ax * by - ay * bx;
        let denom = (ax * ax + ay * ay).sqrt()
            * (bx * bx + by * by).sqrt()
            * ((x2 - x0).powi(2) + (y2 - y0).powi(2)).sqrt();
        if denom > 0.0 {
            let curvature = 2.0 * cross / denom;
            if curvature > best.1 {
                best = (i, curvature);
            }
        }
    }
    Ok(candidates.into_iter().nth(best.0).unwrap().1)
}

/// Parametric model for a recovered spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumModel {
    Family(Family),
    Mathieu { n: usize },
}

impl SpectrumModel {
    pub fn name(&self) -> String {
        match self {
            SpectrumModel::Family(f) => f.as_str().to_string(),
            SpectrumModel::Mathieu { n } => format!("mathieu[{n}]"),
        }
    }
}

impl FromStr for SpectrumModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("mathieu") {
            return Ok(SpectrumModel::Mathieu { n: 0 });
        }
        Ok(SpectrumModel::Family(s.parse()?))
    }
}

/// Model spectrum over a window, normalized to unit sum over the window.
fn model_spectrum(model: SpectrumModel, width: f64, lo: i32, hi: i32) -> Result<Vec<f64>> {
    let mut p = match model {
        SpectrumModel::Family(f) => states::momentum_spectrum_closed_form(f, width, 0.0, lo, hi)?,
        SpectrumModel::Mathieu { n } => {
            let modes = mathieu::solve_modes(width, n, 64)?;
            modes[n].momentum_spectrum(lo, hi)
        }
    };
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::Fit("model spectrum vanished on the window".into()));
    }
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

fn model_variances(model: SpectrumModel, width: f64, lo: i32, hi: i32) -> Result<(f64, f64)> {
    match model {
        SpectrumModel::Family(Family::Wedge) => {
            // the untruncated variance diverges; report the windowed value
            let var_e = states::closed_var_e(Family::Wedge, width)?;
            let p = model_spectrum(model, width, lo, hi)?;
            let mean: f64 = p.iter().zip(lo..=hi).map(|(&p, m)| p * m as f64).sum();
            let var_l = p
                .iter()
                .zip(lo..=hi)
                .map(|(&p, m)| p * (m as f64 - mean).powi(2))
                .sum();
            Ok((var_e, var_l))
        }
        SpectrumModel::Family(f) => {
            Ok((states::closed_var_e(f, width)?, states::closed_var_l(f, width)?))
        }
        SpectrumModel::Mathieu { n } => {
            let modes = mathieu::solve_modes(width, n, 64)?;
            let point = mathieu::mode_uncertainties(&modes[n])?;
            Ok((point.var_e, point.var_l))
        }
    }
}

fn width_domain(model: SpectrumModel) -> Result<(f64, f64, bool)> {
    // (lo, hi, logarithmic)
    match model {
        SpectrumModel::Family(Family::Wedge) => Ok((1e-4, 2.0 * std::f64::consts::PI, false)),
        SpectrumModel::Family(Family::Cosine) => Ok((1e-3, 3.5, false)),
        SpectrumModel::Family(Family::VonMises) => Ok((1e-4, 1e4, true)),
        SpectrumModel::Family(Family::TruncatedGaussian) => Ok((1e-3, 1e3, true)),
        // var_e down to ~0.04 at q = 1e3; larger q makes the eigenproblem
        // needlessly large for a window-limited fit
        SpectrumModel::Mathieu { .. } => Ok((1e-3, 1e3, true)),
        SpectrumModel::Family(_) => Err(Error::Unsupported(
            "no closed-form spectrum to fit for this family",
        )),
    }
}

/// Fit of a parametric model to a recovered spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: SpectrumModel,
    /// Fitted width parameter (`alpha` for the families, `q` for Mathieu).
    pub width: f64,
    /// Scale relating the model window spectrum to the recovered one.
    pub normalization: f64,
    pub residual_norm: f64,
    pub var_e: f64,
    pub var_l: f64,
    /// `DeltaE * DeltaL` of the fitted member.
    pub product: f64,
}

/// Weighted least-squares score of one candidate width; the scale is profiled
/// out in closed form.
fn fit_score(
    model: SpectrumModel,
    width: f64,
    spectrum: &RecoveredSpectrum,
) -> Result<(f64, f64)> {
    let (lo, hi) = spectrum.window();
    let q = model_spectrum(model, width, lo, hi)?;
    let p = &spectrum.probabilities;
    // Poisson variance proxy max(p, q, eps): the model floor keeps bins the
    // deconvolution clipped to zero from dominating the score
    let var = |pi: f64, qi: f64| pi.max(qi).max(1e-6);
    let mut num = 0.0;
    let mut den = 0.0;
    for (pi, qi) in p.iter().zip(&q) {
        let w = 1.0 / var(*pi, *qi);
        num += w * pi * qi;
        den += w * qi * qi;
    }
    if den <= 0.0 {
        return Err(Error::Fit("degenerate model spectrum".into()));
    }
    let s = num / den;
    let score = p
        .iter()
        .zip(&q)
        .map(|(pi, qi)| (pi - s * qi).powi(2) / var(*pi, *qi))
        .sum();
    Ok((score, s))
}

/// Fits the model width to a recovered spectrum by golden-section search on
/// the weighted least-squares score.
pub fn fit_spectrum(spectrum: &RecoveredSpectrum, model: SpectrumModel) -> Result<FitResult> {
    let (d_lo, d_hi, log) = width_domain(model)?;
    let map = |t: f64| if log { t.exp() } else { t };
    let unmap = |w: f64| if log { w.ln() } else { w };
    let score_at = |t: f64| fit_score(model, map(t), spectrum).map(|(s, _)| s);

    // coarse bracket, then golden-section refinement
    let coarse = 48;
    let (mut a, mut b) = (unmap(d_lo), unmap(d_hi));
    let mut best = (a, f64::INFINITY);
    for i in 0..=coarse {
        let t = a + (b - a) * i as f64 / coarse as f64;
        if let Ok(s) = score_at(t) {
            if s < best.1 {
                best = (t, s);
            }
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Fit("no candidate width produced a valid score".into()));
    }
    let step = (b - a) / coarse as f64;
    a = (best.0 - step).max(unmap(d_lo));
    b = (best.0 + step).min(unmap(d_hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (score_at(c)?, score_at(d)?);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = score_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = score_at(d)?;
        }
        if (b - a).abs() < 1e-12 * (1.0 + b.abs()) {
            break;
        }
    }
    let width = map(0.5 * (a + b));
    let (score, s) = fit_score(model, width, spectrum)?;
    let (lo, hi) = spectrum.window();
    let (var_e, var_l) = model_variances(model, width, lo, hi)?;
    Ok(FitResult {
        model,
        width,
        normalization: s,
        residual_norm: score.sqrt(),
        var_e,
        var_l,
        product: (var_e * var_l).sqrt(),
    })
}

/// One-sigma spreads of the fitted quantities over bootstrap replicates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ErrorBars {
    pub width: f64,
    pub var_e: f64,
    pub var_l: f64,
    pub product: f64,
    pub replicates: usize,
}

/// Deconvolves and fits a measured spectrum, then attaches residual-bootstrap
/// error bars: replicates resample the measurement-space residuals (with
/// replacement) on top of the refitted forward model, and each replicate is
/// pushed through the identical deconvolve-and-fit path.
pub fn uncertainty_with_errors(
    measured: &[(i32, f64)],
    response: &ResponseMatrix,
    model: SpectrumModel,
    replicates: usize,
    seed: u64,
) -> Result<(RecoveredSpectrum, FitResult, ErrorBars)> {
    let recovered = deconvolve_l_curve(measured, response)?;
    let fit = fit_spectrum(&recovered, model)?;

    // forward-model the fitted family member (the unconstrained deconvolution
    // solution can interpolate the data, leaving empty residuals)
    let c = response_to_matrix(response);
    let (lo, hi) = recovered.window();
    let total: f64 = recovered.raw.iter().sum();
    let q = model_spectrum(model, fit.width, lo, hi)?;
    let x = DVector::from_iterator(q.len(), q.iter().map(|&v| fit.normalization * total * v));
    let forward = &c * &x;
    // relative residuals: detector noise is multiplicative, and the channel
    // powers span orders of magnitude
    let floor = 1e-12 * forward.amax().max(f64::MIN_POSITIVE);
    let residuals: Vec<f64> = measured
        .iter()
        .enumerate()
        .map(|(i, &(_, p))| (p - forward[i]) / forward[i].max(floor))
        .collect();

    let lambda = recovered.regularization;
    let stats: Vec<(f64, f64, f64, f64)> = (0..replicates)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let resampled: Vec<(i32, f64)> = measured
                .iter()
                .enumerate()
                .map(|(i, &(n, _))| {
                    let r = residuals[rng.gen_range(0..residuals.len())];
                    (n, (forward[i] * (1.0 + r)).max(0.0))
                })
                .collect();
            let rec = deconvolve(&resampled, response, lambda).ok()?;
            let f = fit_spectrum(&rec, model).ok()?;
            Some((f.width, f.var_e, f.var_l, f.product))
        })
        .collect();
    if stats.len() < replicates / 2 {
        return Err(Error::Fit(format!(
            "only {} of {replicates} bootstrap replicates converged",
            stats.len()
        )));
    }
    let std = |get: &dyn Fn(&(f64, f64, f64, f64)) -> f64| -> f64 {
        let n = stats.len() as f64;
        let mean = stats.iter().map(|s| get(s)).sum::<f64>() / n;
        (stats.iter().map(|s| (get(s) - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
    };
    let bars = ErrorBars {
        width: std(&|s| s.0),
        var_e: std(&|s| s.1),
        var_l: std(&|s| s.2),
        product: std(&|s| s.3),
        replicates: stats.len(),
    };
    Ok((recovered, fit, bars))
}

/// One input state of a pipeline scenario. Either `width` or a target
/// circular variance `var_e` must be given; `var_e` is inverted through the
/// family's closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioState {
    pub family: String,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub var_e: Option<f64>,
}

fn default_window() -> [i32; 2] {
    [-15, 15]
}

fn default_bootstrap() -> usize {
    200
}

/// Scenario file for the end-to-end pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub states: Vec<ScenarioState>,
    #[serde(default)]
    pub optics: OpticalConfig,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default = "default_window")]
    pub window: [i32; 2],
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    /// The standard synthetic benchmark: Mathieu ground modes at four target
    /// circular variances, pushed through the default bench.
    pub fn benchmark() -> Self {
        Scenario {
            states: [0.31, 0.54, 0.79, 0.91]
                .iter()
                .map(|&v| ScenarioState {
                    family: "mathieu".into(),
                    width: None,
                    var_e: Some(v),
                })
                .collect(),
            optics: OpticalConfig::default(),
            noise: Some(NoiseModel {
                seed: 7,
                level: 0.02,
            }),
            window: default_window(),
            bootstrap: default_bootstrap(),
            seed: 7,
        }
    }
}

/// Per-state outcome row of the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineRow {
    pub family: String,
    pub width: f64,
    pub var_e_theory: f64,
    pub product_theory: f64,
    pub width_recovered: f64,
    pub var_e_recovered: f64,
    pub product_recovered: f64,
    pub product_err: f64,
}

/// Raw, deconvolved and fitted spectra of one state, for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumTriple {
    pub m: Vec<i32>,
    pub measured: Vec<f64>,
    pub deconvolved: Vec<f64>,
    pub fitted: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub rows: Vec<PipelineRow>,
    pub example: SpectrumTriple,
}

fn resolve_width(model: SpectrumModel, st: &ScenarioState) -> Result<f64> {
    if let Some(w) = st.width {
        return Ok(w);
    }
    let target = st.var_e.ok_or(Error::InvalidParameter {
        name: "state",
        value: f64::NAN,
        reason: "scenario state needs either width or var_e",
    })?;
    match model {
        SpectrumModel::Family(f) => states::find_width_for_var_e(f, target),
        SpectrumModel::Mathieu { n } => mathieu::find_q_for_var_e(n, target),
    }
}

fn state_for(model: SpectrumModel, width: f64) -> Result<crate::circle::MomentumWavefunction> {
    match model {
        SpectrumModel::Family(f) => Ok(states::make_state(&StateRequest::new(f, width))?.state),
        SpectrumModel::Mathieu { n } => {
            let modes = mathieu::solve_modes(width, n, 64)?;
            modes[n].to_wavefunction()
        }
    }
}

/// Runs the full synthetic measurement-and-recovery pipeline.
pub fn run_pipeline(scenario: &Scenario) -> Result<PipelineReport> {
    if scenario.states.is_empty() {
        return Err(Error::InvalidParameter {
            name: "states",
            value: 0.0,
            reason: "scenario needs at least one input state",
        });
    }
    let mut cfg = scenario.optics.clone();
    cfg.helicity = scenario.window;
    let response = optics::response_matrix(&cfg, optics::PropagationMethod::ClosedForm)?;
    let [lo, hi] = scenario.window;

    let mut rows = Vec::new();
    let mut example = None;
    for (idx, st) in scenario.states.iter().enumerate() {
        let model: SpectrumModel = st.family.parse()?;
        let width = resolve_width(model, st)?;
        let (var_e_theory, var_l_theory) = model_variances(model, width, lo, hi)?;
        let state = state_for(model, width)?;
        let mask = MaskSpectrum::from_state(&state, lo, hi)?;
        let noise = scenario.noise.map(|n| NoiseModel {
            seed: n.seed.wrapping_add(idx as u64),
            level: n.level,
        });
        let measured = optics::simulate_spectrum(&mask, &response, noise.as_ref());
        let (recovered, fit, bars) = uncertainty_with_errors(
            &measured,
            &response,
            model,
            scenario.bootstrap,
            scenario.seed.wrapping_add(idx as u64),
        )?;
        if example.is_none() {
            let total: f64 = measured.iter().map(|&(_, p)| p).sum();
            let fitted = model_spectrum(model, fit.width, lo, hi)?;
            example = Some(SpectrumTriple {
                m: (lo..=hi).collect(),
                measured: measured.iter().map(|&(_, p)| p / total).collect(),
                deconvolved: recovered.probabilities.clone(),
                fitted,
            });
        }
        rows.push(PipelineRow {
            family: model.name(),
            width,
            var_e_theory,
            product_theory: (var_e_theory * var_l_theory).sqrt(),
            width_recovered: fit.width,
            var_e_recovered: fit.var_e,
            product_recovered: fit.product,
            product_err: bars.product,
        });
    }
    Ok(PipelineReport {
        rows,
        example: example.unwrap(),
    })
}
