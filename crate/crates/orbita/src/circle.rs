//! States on the circle and the angle/angular-momentum Fourier pair.
//!
//! Convention lock: `E` lowers the angular momentum by one, `E|m> = |m-1>`,
//! and acts as multiplication by `e^{i phi}` in the angle representation
//! `Psi(phi) = (1/sqrt(2 pi)) sum_m e^{-i m phi} Psi_m`. Consequently
//! `<E> = sum_m conj(Psi_m) Psi_{m+1}` and an angle shift by `phi'`
//! multiplies `<E>` by `e^{+i phi'}`. A dedicated test pins this down.

use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default momentum-space truncation.
pub const DEFAULT_TRUNCATION: i32 = 64;
/// Default angular grid size (power of two).
pub const DEFAULT_GRID: usize = 1024;

const NORM_TOL: f64 = 1e-10;
/// Tail probability below which a truncated state counts as converged.
pub const TAIL_TOL: f64 = 1e-12;

/// Complex amplitudes `Psi_m` on the integer grid `m in [-M, M]`.
#[derive(Debug, Clone)]
pub struct MomentumWavefunction {
    coeffs: Vec<Complex64>, // index 0 <-> m = -M
    truncation: i32,
}

impl MomentumWavefunction {
    /// Builds a state from coefficients ordered `m = -M..=M` and normalizes.
    pub fn new(coeffs: Vec<Complex64>, truncation: i32) -> Result<Self> {
        if truncation < 0 || coeffs.len() != (2 * truncation + 1) as usize {
            return Err(Error::InvalidParameter {
                name: "truncation",
                value: truncation as f64,
                reason: "coefficient count must be 2M+1",
            });
        }
        let norm2: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::NotNormalized { defect: 1.0 });
        }
        let scale = 1.0 / norm2.sqrt();
        let coeffs = coeffs.into_iter().map(|c| c * scale).collect();
        Ok(Self { coeffs, truncation })
    }

    /// Builds a state by sampling `f(m)` over `m = -M..=M`.
    pub fn from_fn(truncation: i32, f: impl Fn(i32) -> Complex64) -> Result<Self> {
        let coeffs = (-truncation..=truncation).map(f).collect();
        Self::new(coeffs, truncation)
    }

    /// Momentum eigenstate `|m>`.
    pub fn eigenstate(m: i32, truncation: i32) -> Result<Self> {
        if m.abs() > truncation {
            return Err(Error::SupportOverflow {
                shift: m,
                truncation,
            });
        }
        Self::from_fn(truncation, |k| {
            if k == m {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn truncation(&self) -> i32 {
        self.truncation
    }

    /// Amplitude at momentum `m` (zero outside the truncation window).
    pub fn amplitude(&self, m: i32) -> Complex64 {
        if m.abs() > self.truncation {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + self.truncation) as usize]
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `p_m = |Psi_m|^2`, ordered `m = -M..=M`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Truncation adequacy: both edge probabilities below [`TAIL_TOL`].
    pub fn is_converged(&self) -> bool {
        let m = self.truncation as usize;
        self.coeffs[0].norm_sqr() <= TAIL_TOL && self.coeffs[2 * m].norm_sqr() <= TAIL_TOL
    }

    /// Re-embeds the state in a window `[-M', M']`, `M' >= M`.
    pub fn with_truncation(&self, truncation: i32) -> Result<Self> {
        if truncation < self.truncation {
            return Err(Error::SupportOverflow {
                shift: 0,
                truncation,
            });
        }
        Self::from_fn(truncation, |m| self.amplitude(m))
    }
}

/// JSON wire format `{ "M": int, "re": [..], "im": [..] }`, ordered `m = -M..M`.
#[derive(Serialize, Deserialize)]
pub struct StateJson {
    #[serde(rename = "M")]
    pub truncation: i32,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&MomentumWavefunction> for StateJson {
    fn from(s: &MomentumWavefunction) -> Self {
        StateJson {
            truncation: s.truncation,
            re: s.coeffs.iter().map(|c| c.re).collect(),
            im: s.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<StateJson> for MomentumWavefunction {
    type Error = Error;
    fn try_from(j: StateJson) -> Result<Self> {
        if j.re.len() != j.im.len() {
            return Err(Error::InvalidParameter {
                name: "re/im",
                value: j.re.len() as f64,
                reason: "re and im arrays must have equal length",
            });
        }
        let coeffs = j
            .re
            .iter()
            .zip(&j.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        MomentumWavefunction::new(coeffs, j.truncation)
    }
}

/// Complex angular samples `Psi(phi_j)` on `phi_j = 2 pi j / N`.
#[derive(Debug, Clone)]
pub struct AngularSamples {
    values: Vec<Complex64>,
}

impl AngularSamples {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.values.len() as f64
    }

    /// `(2 pi / N) sum_j |Psi(phi_j)|^2` — equals the momentum norm for
    /// band-limited states (Parseval on the periodic trapezoid rule).
    pub fn quadrature_norm(&self) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * 2.0 * PI / n
    }

    /// Probability density samples `|Psi(phi_j)|^2`.
    pub fn density(&self) -> AngularDensity {
        AngularDensity {
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }
}

/// Real probability density samples on the uniform angular grid.
#[derive(Debug, Clone)]
pub struct AngularDensity {
    values: Vec<f64>,
}

impl AngularDensity {
    /// Wraps samples, requiring normalization `(2 pi / N) sum p = 1` to 1e-10.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let d = Self { values };
        let defect = (d.total() - 1.0).abs();
        if defect > NORM_TOL {
            return Err(Error::NotNormalized { defect });
        }
        Ok(d)
    }

    /// Wraps arbitrary nonnegative samples and rescales to unit integral.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let n = values.len() as f64;
        let total: f64 = values.iter().sum::<f64>() * 2.0 * PI / n;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NotNormalized { defect: 1.0 });
        }
        values.iter_mut().for_each(|v| *v /= total);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.values.len() as f64
    }

    fn total(&self) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().sum::<f64>() * 2.0 * PI / n
    }

    /// `c_l = integral p(phi) e^{i l phi} dphi` by the periodic trapezoid rule.
    pub fn fourier_coefficient(&self, l: i32) -> Complex64 {
        let n = self.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &p) in self.values.iter().enumerate() {
            let phi = 2.0 * PI * j as f64 / n as f64;
            acc += p * Complex64::from_polar(1.0, l as f64 * phi);
        }
        acc * 2.0 * PI / n as f64
    }

    /// Circular variance `1 - |<e^{i phi}>|^2` of the density.
    pub fn circular_variance(&self) -> f64 {
        1.0 - self.fourier_coefficient(1).norm_sqr()
    }
}

/// Angle representation: `Psi(phi_j) = (1/sqrt(2 pi)) sum_m e^{-i m phi_j} Psi_m`.
pub fn synthesize(state: &MomentumWavefunction, grid_size: usize) -> Result<AngularSamples> {
    let need = (2 * state.truncation + 1) as usize;
    if grid_size < need {
        return Err(Error::GridTooSmall {
            got: grid_size,
            truncation: state.truncation,
            need,
        });
    }
    let m = state.truncation;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let values = (0..grid_size)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / grid_size as f64;
            // Horner in w = e^{-i phi}: sum_m w^m Psi_m = w^{-M} sum_k w^k Psi_{k-M}
            let w = Complex64::from_polar(1.0, -phi);
            let mut acc = Complex64::new(0.0, 0.0);
            for c in state.coeffs.iter().rev() {
                acc = acc * w + c;
            }
            acc * Complex64::from_polar(1.0, phi * m as f64) * norm
        })
        .collect();
    Ok(AngularSamples::new(values))
}

/// Momentum representation: `Psi_m = (1/sqrt(2 pi)) integral Psi(phi) e^{i m phi} dphi`,
/// evaluated by the exact discrete sum on the periodic grid.
pub fn analyze(samples: &AngularSamples, truncation: i32) -> Result<MomentumWavefunction> {
    let n = samples.grid_size();
    let need = (2 * truncation + 1) as usize;
    if n < need {
        return Err(Error::GridTooSmall {
            got: n,
            truncation,
            need,
        });
    }
    let norm = (2.0 * PI / n as f64) / (2.0 * PI).sqrt();
    let coeffs = (-truncation..=truncation)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            let w = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64);
            let mut wj = Complex64::new(1.0, 0.0);
            for v in samples.values() {
                acc += v * wj;
                wj *= w;
            }
            acc * norm
        })
        .collect();
    MomentumWavefunction::new(coeffs, truncation)
}

/// Circular and angular-momentum moments of a normalized state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintyReport {
    /// `<E>` — the first circular moment (complex).
    pub mean_e: Complex64,
    /// `<L>`.
    pub mean_l: f64,
    /// Circular variance `1 - |<E>|^2`.
    pub var_e: f64,
    /// `<L^2> - <L>^2`.
    pub var_l: f64,
    /// Variance of the cosine component `C = (E + E^t)/2`.
    pub var_c: f64,
    /// Variance of the sine component `S = (E - E^t)/(2i)`.
    pub var_s: f64,
    /// Uncertainty product `DeltaE * DeltaL = sqrt(var_e * var_l)`.
    pub product: f64,
}

/// Computes circular moments in momentum space and cross-checks `<E>`, `<E^2>`
/// against angle-grid quadrature.
pub fn uncertainty_report(state: &MomentumWavefunction) -> Result<UncertaintyReport> {
    let defect = (state.norm_sqr() - 1.0).abs();
    if defect > NORM_TOL {
        return Err(Error::NotNormalized { defect });
    }
    let m0 = state.truncation;
    let mut mean_e = Complex64::new(0.0, 0.0);
    let mut mean_e2 = Complex64::new(0.0, 0.0);
    let mut mean_l = 0.0;
    let mut mean_l2 = 0.0;
    for m in -m0..=m0 {
        let c = state.amplitude(m);
        mean_e += c.conj() * state.amplitude(m + 1);
        mean_e2 += c.conj() * state.amplitude(m + 2);
        let p = c.norm_sqr();
        mean_l += m as f64 * p;
        mean_l2 += (m as f64) * (m as f64) * p;
    }
    let var_e = (1.0 - mean_e.norm_sqr()).max(0.0);
    let var_l = (mean_l2 - mean_l * mean_l).max(0.0);
    // C^2 = (E^2 + E^t^2 + 2)/4 with E unitary, and likewise for S
    let var_c = (2.0 + 2.0 * mean_e2.re) / 4.0 - mean_e.re * mean_e.re;
    let var_s = (2.0 - 2.0 * mean_e2.re) / 4.0 - mean_e.im * mean_e.im;

    // independent angle-grid route for the circular moments
    let grid = DEFAULT_GRID.max(((4 * m0 + 8) as usize).next_power_of_two());
    let density = synthesize(state, grid)?.density();
    let q1 = density.fourier_coefficient(1);
    let q2 = density.fourier_coefficient(2);
    let d1 = (q1 - mean_e).norm();
    let d2 = (q2 - mean_e2).norm();
    if d1 > 1e-10 {
        return Err(Error::CrossCheck {
            what: "<E>",
            defect: d1,
        });
    }
    if d2 > 1e-10 {
        return Err(Error::CrossCheck {
            what: "<E^2>",
            defect: d2,
        });
    }

    Ok(UncertaintyReport {
        mean_e,
        mean_l,
        var_e,
        var_l,
        var_c: var_c.max(0.0),
        var_s: var_s.max(0.0),
        product: (var_e * var_l).sqrt(),
    })
}

/// Shift-covariant POVM smoothing kernel: coefficients `lambda_l`,
/// `lambda_0 = 1`, `lambda_{-l} = conj(lambda_l)`, `|lambda_l| <= 1`, and a
/// pointwise-nonnegative kernel `K(phi) = (1/2 pi) sum_l lambda_l e^{i l phi}`.
#[derive(Debug, Clone)]
pub struct PovmKernel {
    lambdas: Vec<Complex64>, // l = 0..=l_max
}

impl PovmKernel {
    pub fn new(lambdas: Vec<Complex64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidKernel("no coefficients".into()));
        }
        if (lambdas[0] - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidKernel(
                "lambda_0 must equal 1 (completeness)".into(),
            ));
        }
        if let Some(l) = lambdas.iter().position(|c| c.norm() > 1.0 + 1e-12) {
            return Err(Error::InvalidKernel(format!("|lambda_{l}| > 1")));
        }
        let k = Self { lambdas };
        let grid = 4096.max(8 * k.l_max() as usize);
        let min = (0..grid)
            .map(|j| k.kernel_at(2.0 * PI * j as f64 / grid as f64))
            .fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(Error::InvalidKernel(format!(
                "kernel is negative (min {min:.3e})"
            )));
        }
        Ok(k)
    }

    /// Ideal (delta) kernel up to harmonic `l_max`.
    pub fn ideal(l_max: usize) -> Self {
        Self {
            lambdas: vec![Complex64::new(1.0, 0.0); l_max + 1],
        }
    }

    /// Completeness-only kernel: destroys all angular information.
    pub fn uniform() -> Self {
        Self {
            lambdas: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Geometric kernel `lambda_l = r^l` (wrapped-Cauchy smoothing), `0 < r <= 1`.
    pub fn geometric(r: f64, l_max: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidKernel("geometric ratio must be in [0,1]".into()));
        }
        Self::new((0..=l_max as i32).map(|l| Complex64::new(r.powi(l), 0.0)).collect())
    }

    pub fn l_max(&self) -> i32 {
        self.lambdas.len() as i32 - 1
    }

    /// `lambda_l` for any integer `l` (conjugate symmetry, zero past `l_max`).
    pub fn lambda(&self, l: i32) -> Complex64 {
        let a = l.unsigned_abs() as usize;
        if a >= self.lambdas.len() {
            Complex64::new(0.0, 0.0)
        } else if l >= 0 {
            self.lambdas[a]
        } else {
            self.lambdas[a].conj()
        }
    }

    pub fn kernel_at(&self, phi: f64) -> f64 {
        let mut acc = 1.0;
        for (l, lam) in self.lambdas.iter().enumerate().skip(1) {
            acc += 2.0 * (lam * Complex64::from_polar(1.0, l as f64 * phi)).re;
        }
        acc / (2.0 * PI)
    }
}

/// Smears an angular probability density with a POVM kernel:
/// `p_out(phi) = integral K(phi') p(phi + phi') dphi'`, i.e. the Fourier
/// coefficients of `p` are multiplied by `lambda_l`.
pub fn povm_smooth(density: &AngularDensity, kernel: &PovmKernel) -> Result<AngularDensity> {
    let n = density.grid_size();
    // harmonic content of the density on an N-point grid is at most N/2
    let l_cut = kernel.l_max().min(n as i32 / 2);
    let coeffs: Vec<Complex64> = (1..=l_cut)
        .map(|l| kernel.lambda(l) * density.fourier_coefficient(l))
        .collect();
    let values = (0..n)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let mut acc = 1.0;
            for (i, c) in coeffs.iter().enumerate() {
                let l = (i + 1) as f64;
                acc += 2.0 * (c * Complex64::from_polar(1.0, -l * phi)).re;
            }
            (acc / (2.0 * PI)).max(0.0)
        })
        .collect();
    AngularDensity::normalized(values)
}

/// Phase-space displacement: multiplies by `e^{i m phi'}` (angle shift by
/// `phi'`) and then shifts the momentum index. Angular density translates by
/// `phi'`; it is invariant under the momentum shift.
pub fn shift_state(
    state: &MomentumWavefunction,
    angle_shift: f64,
    momentum_shift: i32,
) -> Result<MomentumWavefunction> {
    let m0 = state.truncation;
    if momentum_shift.abs() > 2 * m0 {
        return Err(Error::SupportOverflow {
            shift: momentum_shift,
            truncation: m0,
        });
    }
    // refuse if occupied coefficients would fall off the window
    let lost: f64 = if momentum_shift > 0 {
        (m0 - momentum_shift + 1..=m0)
            .map(|m| state.amplitude(m).norm_sqr())
            .sum()
    } else {
        (-m0..=-m0 - momentum_shift - 1)
            .map(|m| state.amplitude(m).norm_sqr())
            .sum()
    };
    if lost > TAIL_TOL {
        return Err(Error::SupportOverflow {
            shift: momentum_shift,
            truncation: m0,
        });
    }
    MomentumWavefunction::from_fn(m0, |m| {
        let src = m - momentum_shift;
        if src.abs() > m0 {
            Complex64::new(0.0, 0.0)
        } else {
            state.amplitude(src) * Complex64::from_polar(1.0, src as f64 * angle_shift)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn momentum_eigenstate_is_flat_in_angle() {
        let s = MomentumWavefunction::eigenstate(0, 8).unwrap();
        let a = synthesize(&s, 64).unwrap();
        for v in a.values() {
            assert_relative_eq!(v.re, 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-14);
            assert!(v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn helicity_three_winds_backwards() {
        let s = MomentumWavefunction::eigenstate(3, 8).unwrap();
        let a = synthesize(&s, 64).unwrap();
        for (j, v) in a.values().iter().enumerate() {
            assert_relative_eq!(v.norm_sqr(), 1.0 / (2.0 * PI), epsilon = 1e-14);
            let expect = -3.0 * a.phi(j);
            let diff = (v.arg() - expect).rem_euclid(2.0 * PI);
            assert!(diff < 1e-10 || (2.0 * PI - diff) < 1e-10);
        }
    }

    #[test]
    fn equal_superposition_density() {
        // Psi_0 = Psi_1 = 1/sqrt(2)  =>  p(phi) = (1 + cos phi)/(2 pi)
        let s = MomentumWavefunction::from_fn(4, |m| {
            if m == 0 || m == 1 {
                c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let d = synthesize(&s, 256).unwrap().density();
        for (j, &p) in d.values().iter().enumerate() {
            assert_relative_eq!(p, (1.0 + d.phi(j).cos()) / (2.0 * PI), epsilon = 1e-12);
        }
        // quadrature normalization of the derived density
        assert_relative_eq!(d.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn analyze_recovers_pure_helicity() {
        let n = 128;
        let vals = (0..n)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / n as f64;
                Complex64::from_polar(1.0 / (2.0 * PI).sqrt(), -5.0 * phi)
            })
            .collect();
        let s = analyze(&AngularSamples::new(vals), 10).unwrap();
        for m in -10..=10 {
            let want = if m == 5 { 1.0 } else { 0.0 };
            assert_relative_eq!(s.amplitude(m).norm(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let s = MomentumWavefunction::from_fn(16, |m| {
            c((-0.07 * (m as f64) * (m as f64)).exp(), 0.02 * m as f64)
        })
        .unwrap();
        let back = analyze(&synthesize(&s, 128).unwrap(), 16).unwrap();
        for m in -16..=16 {
            assert!((s.amplitude(m) - back.amplitude(m)).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_too_small_is_refused() {
        let s = MomentumWavefunction::eigenstate(0, 10).unwrap();
        assert!(matches!(
            synthesize(&s, 20),
            Err(Error::GridTooSmall { .. })
        ));
        let a = synthesize(&s, 64).unwrap();
        assert!(matches!(analyze(&a, 40), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn eigenstate_report() {
        let s = MomentumWavefunction::eigenstate(0, 8).unwrap();
        let r = uncertainty_report(&s).unwrap();
        assert_relative_eq!(r.var_l, 0.0, epsilon = 1e-14);
        assert_relative_eq!(r.var_e, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.product, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn two_level_report_by_hand() {
        let s = MomentumWavefunction::from_fn(4, |m| {
            if m == 0 || m == 1 {
                c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let r = uncertainty_report(&s).unwrap();
        assert_relative_eq!(r.mean_e.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.var_e, 0.75, epsilon = 1e-12);
        assert_relative_eq!(r.var_l, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn convention_lock_angle_shift_multiplies_mean_e() {
        let s = MomentumWavefunction::from_fn(6, |m| c((-(m as f64).powi(2) / 4.0).exp(), 0.0))
            .unwrap();
        let r0 = uncertainty_report(&s).unwrap();
        let phi = 0.37;
        let shifted = shift_state(&s, phi, 0).unwrap();
        let r1 = uncertainty_report(&shifted).unwrap();
        let expect = r0.mean_e * Complex64::from_polar(1.0, phi);
        assert!((r1.mean_e - expect).norm() < 1e-12);
        // and the density itself translates by +phi
        let n = 256;
        let d0 = synthesize(&s, n).unwrap().density();
        let d1 = synthesize(&shifted, n).unwrap().density();
        let k = (phi / (2.0 * PI / n as f64)).round() as usize;
        let phi_snap = 2.0 * PI * k as f64 / n as f64;
        let resnap = shift_state(&s, phi_snap, 0).unwrap();
        let d1s = synthesize(&resnap, n).unwrap().density();
        for j in 0..n {
            assert_relative_eq!(d1s.values()[(j + k) % n], d0.values()[j], epsilon = 1e-10);
        }
        let _ = d1;
    }

    #[test]
    fn momentum_shift_moves_ladder() {
        let s = MomentumWavefunction::eigenstate(0, 8).unwrap();
        let up = shift_state(&s, 0.0, 2).unwrap();
        assert_relative_eq!(up.amplitude(2).norm(), 1.0, epsilon = 1e-14);
        let r = uncertainty_report(&up).unwrap();
        assert_relative_eq!(r.var_e, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.mean_l, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn shift_preserves_uncertainties() {
        let s = MomentumWavefunction::from_fn(12, |m| {
            c((-(m as f64).powi(2) / 9.0).exp(), 0.01 * m as f64)
        })
        .unwrap()
        // headroom so the momentum shift keeps the support inside the window
        .with_truncation(24)
        .unwrap();
        let r0 = uncertainty_report(&s).unwrap();
        let r1 = uncertainty_report(&shift_state(&s, 1.234, 3).unwrap()).unwrap();
        assert_relative_eq!(r0.var_e, r1.var_e, epsilon = 1e-12);
        assert_relative_eq!(r0.var_l, r1.var_l, epsilon = 1e-12);
    }

    #[test]
    fn shift_overflow_is_refused() {
        let s = MomentumWavefunction::eigenstate(7, 8).unwrap();
        assert!(matches!(
            shift_state(&s, 0.0, 2),
            Err(Error::SupportOverflow { .. })
        ));
    }

    #[test]
    fn povm_delta_kernel_is_identity() {
        let s = MomentumWavefunction::from_fn(6, |m| c((-(m as f64).powi(2) / 3.0).exp(), 0.0))
            .unwrap();
        let d = synthesize(&s, 256).unwrap().density();
        let out = povm_smooth(&d, &PovmKernel::ideal(16)).unwrap();
        for (a, b) in d.values().iter().zip(out.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn povm_uniform_kernel_erases_everything() {
        let s = MomentumWavefunction::from_fn(6, |m| c((-(m as f64).powi(2) / 3.0).exp(), 0.0))
            .unwrap();
        let d = synthesize(&s, 256).unwrap().density();
        let out = povm_smooth(&d, &PovmKernel::uniform()).unwrap();
        for v in out.values() {
            assert_relative_eq!(v, &(1.0 / (2.0 * PI)), epsilon = 1e-12);
        }
    }

    #[test]
    fn povm_geometric_halves_first_moment() {
        let alpha = 0.8;
        let vm = |phi: f64| ((phi.cos()) / (2.0 * alpha)).exp();
        let n = 512;
        let vals: Vec<f64> = (0..n).map(|j| vm(2.0 * PI * j as f64 / n as f64).powi(2)).collect();
        let d = AngularDensity::normalized(vals).unwrap();
        let kernel = PovmKernel::geometric(0.5, 64).unwrap();
        let out = povm_smooth(&d, &kernel).unwrap();
        let before = d.fourier_coefficient(1).norm();
        let after = out.fourier_coefficient(1).norm();
        assert_relative_eq!(after, 0.5 * before, epsilon = 1e-10);
        assert!(out.circular_variance() >= d.circular_variance());
        // direct convolution oracle at a few angles
        let fine = 4096;
        for &j in &[0usize, 100, 300] {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let mut conv = 0.0;
            for jj in 0..fine {
                let phip = 2.0 * PI * jj as f64 / fine as f64;
                // interpolate d on its own grid by Fourier is overkill; use
                // the closed-form von Mises density instead
                let p = vm(phi + phip).powi(2);
                conv += kernel.kernel_at(phip) * p;
            }
            conv *= 2.0 * PI / fine as f64;
            // normalize the oracle the same way as the input density
            let z: f64 = (0..fine)
                .map(|jj| vm(2.0 * PI * jj as f64 / fine as f64).powi(2))
                .sum::<f64>()
                * 2.0 * PI
                / fine as f64;
            assert_relative_eq!(out.values()[j], conv / z, epsilon = 1e-6);
        }
    }

    #[test]
    fn povm_kernel_validation() {
        // lambda_0 != 1
        assert!(PovmKernel::new(vec![c(0.9, 0.0)]).is_err());
        // |lambda| > 1
        assert!(PovmKernel::new(vec![c(1.0, 0.0), c(1.2, 0.0)]).is_err());
        // negative kernel: lambda_1 = 1 but lambda_2 = -1 goes negative
        assert!(PovmKernel::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = MomentumWavefunction::from_fn(5, |m| c(0.3 * m as f64 + 1.0, -0.1 * m as f64))
            .unwrap();
        let j = serde_json::to_string(&StateJson::from(&s)).unwrap();
        let back: MomentumWavefunction =
            serde_json::from_str::<StateJson>(&j).unwrap().try_into().unwrap();
        for m in -5..=5 {
            assert!((s.amplitude(m) - back.amplitude(m)).norm() < 1e-12);
        }
    }
}
