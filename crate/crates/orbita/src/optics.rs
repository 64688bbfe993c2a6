//! Fourier-optics simulation of an orbital-angular-momentum spectrum
//! measurement.
//!
//! A unit-power Gaussian beam illuminates an amplitude mask `t_A(phi)`
//! (helicity decomposition `a_m`), propagates a distance `z`, passes a spiral
//! phase mask `e^{-i N phi}`, and is optically Fourier transformed; the power
//! through a circular aperture in the focal plane estimates the weight of
//! helicity `N` in the masked beam. Per-helicity radial amplitudes follow
//!
//! `u_m(r, z) = 2 pi u0 i^m h0 exp(-i k r^2 / 2z) A_m(r, z)`,
//! `A_m = int_0^inf exp(-alpha r'^2) J_m(beta r r') r' dr'`,
//!
//! with `h0 = i/(lambda z)`, `alpha = 1/w0^2 + i k/(2z)`, `beta = k/z`. The
//! closed form of `A_m` uses modified Bessel functions of half-integer order
//! at complex argument; adaptive quadrature of the integral is the oracle
//! path. Focal-plane amplitudes are Hankel transforms of order 0 (matched
//! mode) and `m - N` (crosstalk modes); detected powers integrate their
//! intensities over the aperture.

use crate::circle::{self, MomentumWavefunction};
use crate::special;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Multiplicative Gaussian detector noise, seeded for reproducibility.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseModel {
    pub seed: u64,
    pub level: f64,
}

/// Beam and bench geometry. Serialized keys match the config-file format:
/// `wavelength`, `waist`, `z`, `focal`, `R`, `grid`, `helicity`, `noise`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticalConfig {
    pub wavelength: f64,
    pub waist: f64,
    pub z: f64,
    pub focal: f64,
    #[serde(rename = "R")]
    pub aperture_radius: f64,
    #[serde(rename = "grid")]
    pub radial_samples: usize,
    pub helicity: [i32; 2],
    pub noise: Option<NoiseModel>,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        Self {
            wavelength: 532e-9,
            waist: 1e-3,
            z: 0.5,
            focal: 0.3,
            aperture_radius: 5e-5,
            radial_samples: 2048,
            helicity: [-15, 15],
            noise: None,
        }
    }
}

impl OpticalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("waist", self.waist),
            ("focal", self.focal),
            ("R", self.aperture_radius),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive and finite",
                });
            }
        }
        if !(self.z > 0.0) {
            return Err(Error::InvalidParameter {
                name: "z",
                value: self.z,
                reason: "Fresnel kernel is singular at z = 0; propagation distance must be positive",
            });
        }
        if self.radial_samples < 64 {
            return Err(Error::InvalidParameter {
                name: "grid",
                value: self.radial_samples as f64,
                reason: "need at least 64 radial samples",
            });
        }
        if self.helicity[0] > self.helicity[1] {
            return Err(Error::InvalidParameter {
                name: "helicity",
                value: self.helicity[0] as f64,
                reason: "helicity range is empty",
            });
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(
            1.0 / (self.waist * self.waist),
            self.wavenumber() / (2.0 * self.z),
        )
    }

    pub fn beta(&self) -> f64 {
        self.wavenumber() / self.z
    }

    pub fn q_parameter(&self) -> Complex64 {
        let b = self.beta();
        b * b / (8.0 * self.alpha())
    }

    /// Aperture radius in focal-plane frequency units: `nu0 = R/(lambda f')`.
    pub fn nu0(&self) -> f64 {
        self.aperture_radius / (self.wavelength * self.focal)
    }

    /// Gaussian beam radius after propagating to the phase-mask plane.
    pub fn propagated_radius(&self) -> f64 {
        let z_r = PI * self.waist * self.waist / self.wavelength;
        self.waist * (1.0 + (self.z / z_r).powi(2)).sqrt()
    }

    pub fn r_max(&self) -> f64 {
        8.0 * self.propagated_radius()
    }

    /// Midpoint radial grid on (0, r_max); avoids the r = 0 coordinate
    /// singularity of the half-integer Bessel factors.
    pub fn radial_grid(&self) -> Vec<f64> {
        let dr = self.r_max() / self.radial_samples as f64;
        (0..self.radial_samples)
            .map(|j| (j as f64 + 0.5) * dr)
            .collect()
    }

    pub fn nu_max(&self) -> f64 {
        4.0 / self.waist
    }

    fn u0(&self) -> f64 {
        (2.0 / (PI * self.waist * self.waist)).sqrt()
    }
}

fn i_pow(m: i32) -> Complex64 {
    match m.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Helicity decomposition `a_m` of an amplitude mask,
/// `t_A(phi) = sum_m a_m e^{i m phi}`.
#[derive(Debug, Clone)]
pub struct MaskSpectrum {
    m_min: i32,
    coefficients: Vec<Complex64>,
}

impl MaskSpectrum {
    pub fn from_coefficients(m_min: i32, coefficients: Vec<Complex64>) -> Result<Self> {
        let weight: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if weight > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter {
                name: "mask",
                value: weight,
                reason: "passive mask requires sum |a_m|^2 <= 1",
            });
        }
        Ok(Self {
            m_min,
            coefficients,
        })
    }

    /// `t_A = e^{i m phi}`.
    pub fn pure_vortex(m: i32, m_min: i32, m_max: i32) -> Result<Self> {
        if m < m_min || m > m_max {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m as f64,
                reason: "vortex charge outside the requested range",
            });
        }
        let mut coefficients = vec![Complex64::new(0.0, 0.0); (m_max - m_min + 1) as usize];
        coefficients[(m - m_min) as usize] = Complex64::new(1.0, 0.0);
        Self::from_coefficients(m_min, coefficients)
    }

    /// Wedge mask of opening `alpha`: `a_m = (alpha/2pi) sinc(m alpha/2)`.
    pub fn wedge(alpha: f64, m_min: i32, m_max: i32) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0 * PI) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "wedge opening must lie in (0, 2pi]",
            });
        }
        let coefficients = (m_min..=m_max)
            .map(|m| {
                let x = m as f64 * alpha / 2.0;
                let sinc = if x.abs() < 1e-6 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                };
                Complex64::new(alpha / (2.0 * PI) * sinc, 0.0)
            })
            .collect();
        Self::from_coefficients(m_min, coefficients)
    }

    /// Mask imprinting a momentum wavefunction's angular amplitude, scaled to
    /// peak transmission 1. Realized as `t_A(phi) = Psi(-phi)/max|Psi|` so
    /// the optical helicity index coincides with the state's momentum index.
    pub fn from_state(state: &MomentumWavefunction, m_min: i32, m_max: i32) -> Result<Self> {
        let grid = circle::DEFAULT_GRID.max(((4 * state.truncation() + 8) as usize).next_power_of_two());
        let samples = circle::synthesize(state, grid)?;
        let peak = samples
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0_f64, f64::max);
        // Psi(-phi) = (1/sqrt(2pi)) sum_m e^{+i m phi} Psi_m: a_m = Psi_m/(sqrt(2pi) peak)
        let scale = 1.0 / ((2.0 * PI).sqrt() * peak);
        let coefficients = (m_min..=m_max)
            .map(|m| state.amplitude(m) * scale)
            .collect();
        Self::from_coefficients(m_min, coefficients)
    }

    pub fn m_range(&self) -> (i32, i32) {
        (self.m_min, self.m_min + self.coefficients.len() as i32 - 1)
    }

    pub fn coefficient(&self, m: i32) -> Complex64 {
        let idx = m - self.m_min;
        if idx < 0 || idx as usize >= self.coefficients.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coefficients[idx as usize]
        }
    }

    pub fn weight(&self, m: i32) -> f64 {
        self.coefficient(m).norm_sqr()
    }

    pub fn total_weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `a_m = (1/2pi) int t_A(phi) e^{-i m phi} dphi` by the discrete transform
/// on a uniform angular grid.
pub fn mask_spectrum(samples: &[Complex64], m_min: i32, m_max: i32) -> Result<MaskSpectrum> {
    let n = samples.len();
    if n < (m_max - m_min + 1).max(1) as usize {
        return Err(Error::GridTooSmall {
            got: n,
            truncation: m_max.abs().max(m_min.abs()),
            need: (m_max - m_min + 1) as usize,
        });
    }
    if let Some(bad) = samples.iter().find(|t| t.norm() > 1.0 + 1e-9) {
        return Err(Error::InvalidParameter {
            name: "t_A",
            value: bad.norm(),
            reason: "mask transmission must satisfy |t_A| <= 1",
        });
    }
    let coefficients = (m_min..=m_max)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, t) in samples.iter().enumerate() {
                let phi = 2.0 * PI * j as f64 / n as f64;
                acc += t * Complex64::from_polar(1.0, -(m as f64) * phi);
            }
            acc / n as f64
        })
        .collect();
    MaskSpectrum::from_coefficients(m_min, coefficients)
}

/// Per-helicity radial complex amplitude at the phase-mask plane, sampled on
/// the configuration's midpoint radial grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub m: i32,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    ClosedForm,
    Quadrature,
}

/// Closed-form `A_m(r, z)` via scaled half-order modified Bessel functions.
pub fn a_m_closed(cfg: &OpticalConfig, m: i32, r: f64) -> Complex64 {
    let alpha = cfg.alpha();
    if r == 0.0 {
        return if m == 0 {
            0.5 / alpha
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let q = cfg.q_parameter();
    let x = q * r * r;
    let ma = m.abs();
    // J_{-m} = (-1)^m J_m carries over to A_{-m} = (-1)^m A_m
    let low = special::bessel_i_scaled_complex(ma as i64 - 1, x);
    let high = special::bessel_i_scaled_complex(ma as i64 + 1, x);
    let val = r * q / cfg.beta() * (PI / alpha).sqrt() * (low - high);
    if m < 0 && m % 2 != 0 {
        -val
    } else {
        val
    }
}

/// `A_m(r, z)` by direct quadrature of the defining integral (oracle path).
pub fn a_m_quadrature(cfg: &OpticalConfig, m: i32, r: f64) -> Result<Complex64> {
    let alpha = cfg.alpha();
    let beta = cfg.beta();
    let upper = 6.0 * cfg.waist;
    let f = |rp: f64| -> Complex64 {
        (-alpha * rp * rp).exp() * special::bessel_j(m, beta * r * rp) * rp
    };
    // Simpson with interval doubling until two refinements agree
    let oscillations = (beta * r * upper + cfg.wavenumber() * upper * upper / (2.0 * cfg.z))
        / (2.0 * PI);
    let mut n = ((oscillations * 16.0) as usize).next_power_of_two().max(1024);
    let simpson = |n: usize| -> Complex64 {
        let h = upper / n as f64;
        let mut acc = f(0.0) + f(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    };
    let scale = 0.5 * cfg.waist * cfg.waist; // |A_0(0)| magnitude for tolerance
    let mut prev = simpson(n);
    for _ in 0..6 {
        n *= 2;
        let next = simpson(n);
        if (next - prev).norm() < 1e-10 * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "A_m integral did not settle for m = {m}, r = {r:.4e} (last n = {n})"
    )))
}

/// Propagates every helicity in the configured range to the phase-mask plane:
/// `u_m(r) = 2 pi u0 i^m h0 e^{-i k r^2/2z} A_m(r)`.
pub fn propagate(cfg: &OpticalConfig, method: PropagationMethod) -> Result<Vec<RadialField>> {
    cfg.validate()?;
    let r = cfg.radial_grid();
    let h0 = Complex64::new(0.0, 1.0 / (cfg.wavelength * cfg.z));
    let k = cfg.wavenumber();
    let pref = 2.0 * PI * cfg.u0() * h0;
    (cfg.helicity[0]..=cfg.helicity[1])
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| {
            let values = r
                .iter()
                .map(|&r| {
                    let a = match method {
                        PropagationMethod::ClosedForm => a_m_closed(cfg, m, r),
                        PropagationMethod::Quadrature => a_m_quadrature(cfg, m, r)?,
                    };
                    let fresnel = Complex64::from_polar(1.0, -k * r * r / (2.0 * cfg.z));
                    Ok(pref * i_pow(m) * fresnel * a)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RadialField { m, values })
        })
        .collect()
}

fn field_for<'a>(fields: &'a [RadialField], m: i32) -> Result<&'a RadialField> {
    fields.iter().find(|f| f.m == m).ok_or(Error::InvalidParameter {
        name: "m",
        value: m as f64,
        reason: "helicity not present in the propagated set",
    })
}

/// Hankel transform of order `order` of a radial field, evaluated on `nu`.
fn hankel(cfg: &OpticalConfig, values: &[Complex64], order: i32, nu: &[f64]) -> Vec<Complex64> {
    let r = cfg.radial_grid();
    let dr = cfg.r_max() / cfg.radial_samples as f64;
    nu.iter()
        .map(|&nu| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &rj) in r.iter().enumerate() {
                acc += values[j] * special::bessel_j(order, 2.0 * PI * nu * rj) * rj;
            }
            acc * 2.0 * PI * dr
        })
        .collect()
}

/// Focal-plane decomposition behind the analyzer of charge `N`: the matched
/// transform `u_bar = ubar_N` and crosstalk transforms `v_bar[m]` for every
/// other propagated helicity.
#[derive(Debug, Clone)]
pub struct FocalDecomposition {
    pub analyzer_charge: i32,
    pub nu: Vec<f64>,
    pub u_bar: Vec<Complex64>,
    pub v_bar: Vec<(i32, Vec<Complex64>)>,
}

/// Default focal-plane frequency grid (midpoint, covers the aperture scan).
pub fn nu_grid(cfg: &OpticalConfig) -> Vec<f64> {
    let n = (cfg.radial_samples / 2).max(256);
    let d = cfg.nu_max() / n as f64;
    (0..n).map(|i| (i as f64 + 0.5) * d).collect()
}

pub fn analyzer_field(
    fields: &[RadialField],
    analyzer_charge: i32,
    cfg: &OpticalConfig,
) -> Result<FocalDecomposition> {
    let nu = nu_grid(cfg);
    let matched = field_for(fields, analyzer_charge)?;
    let u_bar = hankel(cfg, &matched.values, 0, &nu);
    let v_bar = fields
        .par_iter()
        .filter(|f| f.m != analyzer_charge)
        .map(|f| {
            let d = f.m - analyzer_charge;
            let mut v = hankel(cfg, &f.values, d, &nu);
            let phase = i_pow(d);
            v.iter_mut().for_each(|x| *x *= phase);
            (f.m, v)
        })
        .collect();
    Ok(FocalDecomposition {
        analyzer_charge,
        nu,
        u_bar,
        v_bar,
    })
}

fn band_power(nu: &[f64], amplitude: &[Complex64], nu0: f64) -> f64 {
    let d = nu[1] - nu[0];
    let mut acc = 0.0;
    for (&nu, a) in nu.iter().zip(amplitude) {
        if nu > nu0 {
            break;
        }
        acc += a.norm_sqr() * nu;
    }
    2.0 * PI * acc * d
}

/// Detected power through the aperture: the matched-vortex part `P_N` and the
/// crosstalk part `P_C`, weighted by the mask decomposition.
pub fn detected_power(
    dec: &FocalDecomposition,
    mask: &MaskSpectrum,
    cfg: &OpticalConfig,
) -> Result<(f64, f64)> {
    let nu0 = cfg.nu0();
    if nu0 > *dec.nu.last().unwrap() {
        return Err(Error::InvalidParameter {
            name: "R",
            value: cfg.aperture_radius,
            reason: "aperture exceeds the computed focal-plane grid",
        });
    }
    let p_n = mask.weight(dec.analyzer_charge) * band_power(&dec.nu, &dec.u_bar, nu0);
    let p_c = dec
        .v_bar
        .iter()
        .map(|(m, v)| mask.weight(*m) * band_power(&dec.nu, v, nu0))
        .sum();
    Ok((p_n, p_c))
}

/// Detector response: power through the aperture for analyzer charge `N` and
/// unit-power pure-vortex input `m`, over the configured helicity range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseMatrix {
    pub n_min: i32,
    pub m_min: i32,
    /// `entries[N - n_min][m - m_min]`.
    pub entries: Vec<Vec<f64>>,
}

impl ResponseMatrix {
    pub fn get(&self, n: i32, m: i32) -> f64 {
        let (i, j) = ((n - self.n_min) as usize, (m - self.m_min) as usize);
        self.entries[i][j]
    }

    pub fn n_range(&self) -> (i32, i32) {
        (self.n_min, self.n_min + self.entries.len() as i32 - 1)
    }

    pub fn m_range(&self) -> (i32, i32) {
        (self.m_min, self.m_min + self.entries[0].len() as i32 - 1)
    }

    /// Diagonal dominance ratio `C[N][N] / sum_{m != N} C[N][m]`.
    pub fn dominance(&self, n: i32) -> f64 {
        let (m_lo, m_hi) = self.m_range();
        let off: f64 = (m_lo..=m_hi)
            .filter(|&m| m != n)
            .map(|m| self.get(n, m))
            .sum();
        self.get(n, n) / off
    }
}

/// Computes the response matrix by running the analyzer over pure-vortex
/// basis inputs. Parallel over the analyzer charge.
pub fn response_matrix(cfg: &OpticalConfig, method: PropagationMethod) -> Result<ResponseMatrix> {
    cfg.validate()?;
    let fields = propagate(cfg, method)?;
    let [lo, hi] = cfg.helicity;
    let nu0 = cfg.nu0();
    // fine frequency grid restricted to the aperture for the power integrals
    let bins = 256usize;
    let dnu = nu0 / bins as f64;
    let nu: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) * dnu).collect();
    let r = cfg.radial_grid();
    let dr = cfg.r_max() / cfg.radial_samples as f64;
    let modes = (hi - lo + 1) as usize;
    let max_order = (hi - lo) as usize;

    // The Bessel batch at each (nu, r) serves every (analyzer, mode) pair, so
    // parallelize over frequency bins and reduce the per-bin power increments.
    let entries_flat = nu
        .par_iter()
        .map(|&nu_i| {
            // amp[(n, m)] = sum_j u_m(r_j) J_{m-n}(2 pi nu r_j) r_j
            let mut amp = vec![Complex64::new(0.0, 0.0); modes * modes];
            for (j, &rj) in r.iter().enumerate() {
                let js = special::bessel_j_upto(max_order, 2.0 * PI * nu_i * rj);
                for ni in 0..modes {
                    for (mi, f) in fields.iter().enumerate() {
                        let d = mi as i32 - ni as i32;
                        let jd = if d >= 0 {
                            js[d as usize]
                        } else if d % 2 != 0 {
                            -js[(-d) as usize]
                        } else {
                            js[(-d) as usize]
                        };
                        amp[ni * modes + mi] += f.values[j] * jd * rj;
                    }
                }
            }
            // the 2 pi of the Hankel transform appears squared in the power
            let w = 2.0 * PI * nu_i * dnu * (2.0 * PI * dr) * (2.0 * PI * dr);
            amp.iter().map(|a| a.norm_sqr() * w).collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; modes * modes],
            |mut acc, part| {
                acc.iter_mut().zip(&part).for_each(|(a, p)| *a += p);
                acc
            },
        );
    let entries: Vec<Vec<f64>> = (0..modes)
        .map(|ni| entries_flat[ni * modes..(ni + 1) * modes].to_vec())
        .collect();
    Ok(ResponseMatrix {
        n_min: lo,
        m_min: lo,
        entries,
    })
}

/// Measured spectrum: `P(N) = sum_m |a_m|^2 C[N][m]`, with optional seeded
/// multiplicative Gaussian noise.
pub fn simulate_spectrum(
    mask: &MaskSpectrum,
    response: &ResponseMatrix,
    noise: Option<&NoiseModel>,
) -> Vec<(i32, f64)> {
    let (n_lo, n_hi) = response.n_range();
    let (m_lo, m_hi) = response.m_range();
    let mut powers: Vec<(i32, f64)> = (n_lo..=n_hi)
        .map(|n| {
            let p = (m_lo..=m_hi)
                .map(|m| mask.weight(m) * response.get(n, m))
                .sum();
            (n, p)
        })
        .collect();
    if let Some(noise) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for (_, p) in powers.iter_mut() {
            let g: f64 = rng.sample(rand::distributions::Standard);
            // Box-Muller on two uniform draws keeps the dependency surface small
            let u: f64 = rng.sample(rand::distributions::Standard);
            let gauss = (-2.0 * g.max(1e-12).ln()).sqrt() * (2.0 * PI * u).cos();
            *p = (*p * (1.0 + noise.level * gauss)).max(0.0);
        }
    }
    powers
}

/// Aperture scan report: per-radius loss and crosstalk terms of the
/// objective, and the minimizing radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApertureReport {
    pub radii: Vec<f64>,
    pub loss: Vec<f64>,
    pub crosstalk: Vec<f64>,
    pub objective: Vec<f64>,
    pub best_radius: f64,
}

/// Scans the aperture radius and minimizes
/// `objective(R) = mean_N [ lost matched power + captured crosstalk ]`
/// over the given analyzer set.
pub fn optimize_aperture(cfg: &OpticalConfig, mode_set: &[i32]) -> Result<ApertureReport> {
    if mode_set.is_empty() {
        return Err(Error::InvalidParameter {
            name: "mode_set",
            value: 0.0,
            reason: "need at least one analyzer charge",
        });
    }
    cfg.validate()?;
    let fields = propagate(cfg, PropagationMethod::ClosedForm)?;
    let decs: Vec<FocalDecomposition> = mode_set
        .par_iter()
        .map(|&n| analyzer_field(&fields, n, cfg))
        .collect::<Result<Vec<_>>>()?;

    let nu = &decs[0].nu;
    let dnu = nu[1] - nu[0];
    // cumulative band powers let every candidate radius reuse one pass
    let cumulative = |amp: &[Complex64]| -> Vec<f64> {
        let mut acc = 0.0;
        amp.iter()
            .zip(nu)
            .map(|(a, &nu)| {
                acc += 2.0 * PI * a.norm_sqr() * nu * dnu;
                acc
            })
            .collect()
    };

    let scan: Vec<f64> = {
        let r_hi = 0.98 * cfg.nu_max() * cfg.wavelength * cfg.focal;
        let r_lo = r_hi / 300.0;
        (0..80)
            .map(|i| r_lo * (r_hi / r_lo).powf(i as f64 / 79.0))
            .collect()
    };
    let mut loss = vec![0.0; scan.len()];
    let mut crosstalk = vec![0.0; scan.len()];
    for dec in &decs {
        let cum_u = cumulative(&dec.u_bar);
        let total = *cum_u.last().unwrap();
        let cum_v: Vec<Vec<f64>> = dec
            .v_bar
            .iter()
            .filter(|(m, _)| mode_set.contains(m))
            .map(|(_, v)| cumulative(v))
            .collect();
        for (i, &radius) in scan.iter().enumerate() {
            let nu0 = radius / (cfg.wavelength * cfg.focal);
            let idx = ((nu0 / dnu) as usize).min(nu.len() - 1);
            loss[i] += (1.0 - cum_u[idx] / total) / mode_set.len() as f64;
            crosstalk[i] += cum_v.iter().map(|c| c[idx]).sum::<f64>()
                / (total * mode_set.len() as f64);
        }
    }
    let objective: Vec<f64> = loss
        .iter()
        .zip(&crosstalk)
        .map(|(l, c)| l + c)
        .collect();
    let best = objective
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| scan[i])
        .unwrap();
    Ok(ApertureReport {
        radii: scan,
        loss,
        crosstalk,
        objective,
        best_radius: best,
    })
}

/// Total power of a propagated mode at the phase-mask plane,
/// `2 pi int |u_m|^2 r dr` (should be 1 for a unit-power input mode).
pub fn mode_power(cfg: &OpticalConfig, field: &RadialField) -> f64 {
    let dr = cfg.r_max() / cfg.radial_samples as f64;
    2.0 * PI
        * cfg
            .radial_grid()
            .iter()
            .zip(&field.values)
            .map(|(&r, v)| v.norm_sqr() * r)
            .sum::<f64>()
        * dr
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_cfg() -> OpticalConfig {
        OpticalConfig {
            radial_samples: 512,
            helicity: [-5, 5],
            ..OpticalConfig::default()
        }
    }

    #[test]
    fn open_mask_is_delta() {
        let t = vec![Complex64::new(1.0, 0.0); 256];
        let mask = mask_spectrum(&t, -5, 5).unwrap();
        for m in -5..=5 {
            let want = if m == 0 { 1.0 } else { 0.0 };
            assert_relative_eq!(mask.coefficient(m).norm(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn helicity_mask_is_shifted_delta() {
        let t: Vec<Complex64> = (0..256)
            .map(|j| Complex64::from_polar(1.0, 3.0 * 2.0 * PI * j as f64 / 256.0))
            .collect();
        let mask = mask_spectrum(&t, -5, 5).unwrap();
        assert_relative_eq!(mask.coefficient(3).norm(), 1.0, epsilon = 1e-12);
        assert!(mask.coefficient(0).norm() < 1e-12);
    }

    #[test]
    fn wedge_mask_matches_transform() {
        let alpha = 1.9;
        let n = 4096;
        let t: Vec<Complex64> = (0..n)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / n as f64;
                let phi = if phi > PI { phi - 2.0 * PI } else { phi };
                if phi.abs() <= alpha / 2.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let grid = mask_spectrum(&t, -6, 6).unwrap();
        let closed = MaskSpectrum::wedge(alpha, -6, 6).unwrap();
        for m in -6..=6 {
            // grid sampling of the sharp edge limits agreement to O(1/n)
            assert_relative_eq!(
                grid.coefficient(m).re,
                closed.coefficient(m).re,
                epsilon = 2e-3
            );
        }
    }

    #[test]
    fn overdriven_mask_is_refused() {
        let t = vec![Complex64::new(1.2, 0.0); 64];
        assert!(mask_spectrum(&t, -2, 2).is_err());
    }

    #[test]
    fn gaussian_propagates_to_gaussian() {
        let cfg = small_cfg();
        let fields = propagate(&cfg, PropagationMethod::ClosedForm).unwrap();
        let f0 = field_for(&fields, 0).unwrap();
        // fundamental mode: on-axis maximum and unit power
        let peak = f0.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert_relative_eq!(f0.values[0].norm(), peak, max_relative = 1e-3);
        assert_relative_eq!(mode_power(&cfg, f0), 1.0, max_relative = 5e-3);
        // vortex: null toward the axis (first sample sits at r = dr/2 > 0)
        let f1 = field_for(&fields, 1).unwrap();
        let p1 = f1.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(f1.values[0].norm() < 5e-2 * p1);
        assert!(f1.values[0].norm() < f1.values[4].norm());
        assert!(a_m_closed(&cfg, 1, 0.0).norm() == 0.0);
        assert_relative_eq!(
            a_m_closed(&cfg, 0, 0.0).norm(),
            (0.5 / cfg.alpha()).norm(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let cfg = OpticalConfig {
            radial_samples: 64,
            helicity: [0, 5],
            ..OpticalConfig::default()
        };
        let r = cfg.radial_grid();
        for m in 0..=5 {
            let peak = r
                .iter()
                .map(|&r| a_m_closed(&cfg, m, r).norm())
                .fold(0.0, f64::max);
            for &r in r.iter().step_by(7) {
                let c = a_m_closed(&cfg, m, r);
                let q = a_m_quadrature(&cfg, m, r).unwrap();
                assert!(
                    (c - q).norm() <= 1e-6 * peak,
                    "m = {m}, r = {r:.3e}: closed {c}, quadrature {q}"
                );
            }
        }
    }

    #[test]
    fn zero_distance_is_refused() {
        let cfg = OpticalConfig {
            z: 0.0,
            ..OpticalConfig::default()
        };
        assert!(propagate(&cfg, PropagationMethod::ClosedForm).is_err());
    }

    #[test]
    fn matched_mode_peaks_on_axis() {
        let cfg = small_cfg();
        let fields = propagate(&cfg, PropagationMethod::ClosedForm).unwrap();
        let dec = analyzer_field(&fields, 2, &cfg).unwrap();
        let u0 = dec.u_bar[0].norm_sqr();
        let u_peak = dec.u_bar.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        assert!(u0 > 0.5 * u_peak, "matched spot must peak on axis");
        for (m, v) in &dec.v_bar {
            // first frequency sample sits at nu = dnu/2 > 0; the crosstalk
            // amplitude scales as nu^{|m - N|} toward the axis
            let v_peak = v.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
            assert!(
                v[0].norm_sqr() < 0.05 * v_peak.max(1e-300),
                "crosstalk m = {m} must be suppressed near the axis"
            );
        }
    }

    #[test]
    fn pure_vortex_has_no_crosstalk() {
        let cfg = small_cfg();
        let fields = propagate(&cfg, PropagationMethod::ClosedForm).unwrap();
        let mask = MaskSpectrum::pure_vortex(2, -5, 5).unwrap();
        let dec = analyzer_field(&fields, 2, &cfg).unwrap();
        let (p_n, p_c) = detected_power(&dec, &mask, &cfg).unwrap();
        assert!(p_n > 0.0);
        assert_eq!(p_c, 0.0);
    }

    #[test]
    fn full_aperture_recovers_total_power() {
        let mut cfg = small_cfg();
        cfg.helicity = [-2, 2];
        // full plane: nu0 at the grid edge
        cfg.aperture_radius = 0.99 * cfg.nu_max() * cfg.wavelength * cfg.focal;
        let fields = propagate(&cfg, PropagationMethod::ClosedForm).unwrap();
        let mask = MaskSpectrum::wedge(2.0, -2, 2).unwrap();
        let dec = analyzer_field(&fields, 1, &cfg).unwrap();
        let (p_n, p_c) = detected_power(&dec, &mask, &cfg).unwrap();
        let plane: f64 = (-2..=2)
            .map(|m| mask.weight(m) * mode_power(&cfg, field_for(&fields, m).unwrap()))
            .sum();
        assert_relative_eq!(p_n + p_c, plane, max_relative = 1e-2);
    }

    #[test]
    fn small_aperture_suppresses_crosstalk() {
        let cfg = small_cfg();
        let fields = propagate(&cfg, PropagationMethod::ClosedForm).unwrap();
        let mask = MaskSpectrum::wedge(2.0, -5, 5).unwrap();
        let dec = analyzer_field(&fields, 0, &cfg).unwrap();
        let ratio = |radius: f64| {
            let mut c = cfg.clone();
            c.aperture_radius = radius;
            let (p_n, p_c) = detected_power(&dec, &mask, &c).unwrap();
            p_c / p_n
        };
        let tight = ratio(5e-6);
        let wide = ratio(4e-4);
        assert!(tight < 0.1 * wide, "tight {tight}, wide {wide}");
    }

    #[test]
    fn response_matrix_basics() {
        let mut cfg = small_cfg();
        cfg.helicity = [-3, 3];
        let resp = response_matrix(&cfg, PropagationMethod::ClosedForm).unwrap();
        for n in -3..=3 {
            for m in -3..=3 {
                assert!(resp.get(n, m) >= 0.0);
                if m != n {
                    assert!(
                        resp.get(n, n) > resp.get(n, m),
                        "diagonal dominance failed at N = {n}, m = {m}"
                    );
                }
            }
        }
        // response of a pure vortex equals the matrix column
        let mask = MaskSpectrum::pure_vortex(2, -3, 3).unwrap();
        let spec = simulate_spectrum(&mask, &resp, None);
        for (n, p) in spec {
            assert_relative_eq!(p, resp.get(n, 2), epsilon = 1e-15);
        }
    }

    #[test]
    fn response_matrix_consistent_with_detected_power() {
        let mut cfg = small_cfg();
        cfg.helicity = [-2, 2];
        let resp = response_matrix(&cfg, PropagationMethod::ClosedForm).unwrap();
        let fields = propagate(&cfg, PropagationMethod::ClosedForm).unwrap();
        let mask = MaskSpectrum::pure_vortex(1, -2, 2).unwrap();
        // matched channel
        let dec = analyzer_field(&fields, 1, &cfg).unwrap();
        let (p_n, _) = detected_power(&dec, &mask, &cfg).unwrap();
        assert_relative_eq!(resp.get(1, 1), p_n, max_relative = 1e-2);
        // crosstalk channel
        let dec0 = analyzer_field(&fields, 0, &cfg).unwrap();
        let (_, p_c) = detected_power(&dec0, &mask, &cfg).unwrap();
        assert_relative_eq!(resp.get(0, 1), p_c, max_relative = 1e-2);
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let mut cfg = small_cfg();
        cfg.helicity = [-2, 2];
        let resp = response_matrix(&cfg, PropagationMethod::ClosedForm).unwrap();
        let mask = MaskSpectrum::wedge(2.0, -2, 2).unwrap();
        let noise = NoiseModel {
            seed: 11,
            level: 0.01,
        };
        let a = simulate_spectrum(&mask, &resp, Some(&noise));
        let b = simulate_spectrum(&mask, &resp, Some(&noise));
        assert_eq!(a, b);
        let clean = simulate_spectrum(&mask, &resp, None);
        for ((_, pa), (_, pc)) in a.iter().zip(&clean) {
            assert!((pa - pc).abs() <= 0.1 * pc.max(1e-30));
            assert!(*pa >= 0.0);
        }
    }

    #[test]
    fn aperture_scan_shapes() {
        let mut cfg = small_cfg();
        cfg.helicity = [-3, 3];
        // single-mode set: no crosstalk, so bigger is always better
        let single = optimize_aperture(&cfg, &[0]).unwrap();
        assert_relative_eq!(
            single.best_radius,
            *single.radii.last().unwrap(),
            max_relative = 1e-12
        );
        assert!(single.crosstalk.iter().all(|&c| c == 0.0));
        // mixed set: interior optimum
        let mixed = optimize_aperture(&cfg, &[-2, -1, 0, 1, 2]).unwrap();
        let first = mixed.radii[0];
        let last = *mixed.radii.last().unwrap();
        assert!(mixed.best_radius > first && mixed.best_radius < last);
        // monotonicity: loss falls and crosstalk grows with R
        for w in mixed.loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for w in mixed.crosstalk.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = OpticalConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"R\""));
        let back: OpticalConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.radial_samples, cfg.radial_samples);
        // defaults fill missing keys
        let sparse: OpticalConfig = serde_json::from_str("{\"waist\":2e-3}").unwrap();
        assert_eq!(sparse.waist, 2e-3);
        assert_eq!(sparse.z, 0.5);
    }
}
