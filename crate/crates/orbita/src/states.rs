//! Closed-form state families on the circle and their statistics.
//!
//! Six one-parameter families: the wedge (hard angular aperture), the
//! stretched cosine half-wave, the von Mises amplitude, the truncated
//! Gaussian, the wrapped-Gaussian *probability* state, and the coherent
//! states of the ladder operator `W = e^{-L + 1/2} E`.
//!
//! Where a family has closed-form Fourier coefficients (wedge, cosine,
//! von Mises, truncated Gaussian, coherent) the state is built directly from
//! them; the wrapped Gaussian is built by angle-grid quadrature of the
//! square-root density. Closed-form variances are carried alongside the
//! state. The wedge and cosine spectra have algebraic tails, so their
//! momentum-space truncation never converges in the `|Psi_M|^2 < 1e-12`
//! sense; the wedge additionally stores a window-truncated `var_l` (its full
//! angular-momentum variance diverges), and the cosine `var_l = 1/alpha^2`
//! refers to the full untruncated spectrum.

use crate::circle::{self, MomentumWavefunction};
use crate::special;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "wedge")]
    Wedge,
    #[serde(rename = "cosine")]
    Cosine,
    #[serde(rename = "vonmises")]
    VonMises,
    #[serde(rename = "truncated")]
    TruncatedGaussian,
    #[serde(rename = "wrapped")]
    WrappedGaussian,
    #[serde(rename = "coherent")]
    Coherent,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Wedge => "wedge",
            Family::Cosine => "cosine",
            Family::VonMises => "vonmises",
            Family::TruncatedGaussian => "truncated",
            Family::WrappedGaussian => "wrapped",
            Family::Coherent => "coherent",
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wedge" => Ok(Family::Wedge),
            "cosine" => Ok(Family::Cosine),
            "vonmises" | "von-mises" | "von_mises" => Ok(Family::VonMises),
            "truncated" | "truncatedgaussian" => Ok(Family::TruncatedGaussian),
            "wrapped" | "wrappedgaussian" => Ok(Family::WrappedGaussian),
            "coherent" => Ok(Family::Coherent),
            _ => Err(Error::InvalidParameter {
                name: "family",
                value: f64::NAN,
                reason: "unknown family name",
            }),
        }
    }
}

/// Request for a family member; `alpha` is the width parameter (sigma for the
/// wrapped Gaussian, unused for coherent), `mu` the angular center (theta for
/// coherent), `ell` the coherent log-radius, `truncation` 0 for automatic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateRequest {
    pub family: Family,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub ell: f64,
    #[serde(default)]
    pub truncation: i32,
}

impl StateRequest {
    pub fn new(family: Family, alpha: f64) -> Self {
        Self {
            family,
            alpha,
            mu: 0.0,
            ell: 0.0,
            truncation: 0,
        }
    }

    pub fn with_center(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_ell(mut self, ell: f64) -> Self {
        self.ell = ell;
        self
    }

    pub fn with_truncation(mut self, truncation: i32) -> Self {
        self.truncation = truncation;
        self
    }
}

/// Closed-form variances carried with a state package.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClosedForm {
    pub var_e: f64,
    pub var_l: f64,
    /// `Some(M)` when `var_l` is a window-truncated value over `|m| <= M`
    /// (wedge: the untruncated variance diverges).
    pub var_l_window: Option<i32>,
}

impl ClosedForm {
    pub fn product(&self) -> f64 {
        (self.var_e * self.var_l).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct StatePackage {
    pub family: Family,
    pub alpha: f64,
    pub mu: f64,
    pub ell: f64,
    pub state: MomentumWavefunction,
    pub closed_form: Option<ClosedForm>,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

fn auto_truncation(family: Family, alpha: f64, ell: f64) -> i32 {
    let m = match family {
        Family::Wedge | Family::Cosine => circle::DEFAULT_TRUNCATION as f64,
        Family::VonMises => {
            let kappa = 1.0 / (2.0 * alpha);
            kappa + 12.0 * kappa.sqrt() + 20.0
        }
        Family::TruncatedGaussian => 6.0 * alpha + 15.0,
        Family::WrappedGaussian => 11.0 / alpha + 15.0,
        Family::Coherent => ell.abs() + 12.0,
    };
    (m.ceil() as i32).clamp(8, 4096)
}

/// Wedge amplitude coefficient (unnormalized): `sqrt(alpha/2pi) sinc(m alpha/2)`.
fn wedge_amplitude(m: i32, alpha: f64) -> f64 {
    (alpha / (2.0 * PI)).sqrt() * sinc(m as f64 * alpha / 2.0)
}

/// Cosine amplitude coefficient in the cancellation-free form
/// `C sinc(pi(|m| alpha - 1)/2) / (1 + |m| alpha)` — identical to
/// `cos(pi m alpha / 2)/(1 - m^2 alpha^2)` up to a positive constant, with the
/// removable singularity at `|m| alpha = 1` built in.
fn cosine_amplitude(m: i32, alpha: f64) -> f64 {
    let x = m.unsigned_abs() as f64 * alpha;
    sinc(PI * (x - 1.0) / 2.0) / (1.0 + x)
}

fn truncated_amplitude(m: i32, alpha: f64) -> f64 {
    // Re[erf] and the Gaussian weight are both even in m
    special::erf_re_scaled(
        PI * alpha / std::f64::consts::SQRT_2,
        m.unsigned_abs() as f64 / (std::f64::consts::SQRT_2 * alpha),
    )
}

/// Wrapped Gaussian density `p_sigma(phi)`; image summation for sharp peaks,
/// harmonic (theta-function) series otherwise.
pub fn wrapped_gaussian_density(phi: f64, sigma: f64) -> f64 {
    if sigma * sigma < 0.1 {
        let mut acc = 0.0;
        let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
        // enough images that the farthest contributes < 1e-300
        let k_max = (40.0 * sigma / (2.0 * PI)).ceil() as i32 + 2;
        for k in -k_max..=k_max {
            let d = phi + 2.0 * PI * k as f64;
            acc += norm * (-0.5 * d * d / (sigma * sigma)).exp();
        }
        acc
    } else {
        special::jacobi_theta3(phi / 2.0, (-sigma * sigma / 2.0).exp()) / (2.0 * PI)
    }
}

/// Builds a family member. Centered construction plus a covariant shift to
/// `mu`; closed-form variances attached where the family provides them.
pub fn make_state(req: &StateRequest) -> Result<StatePackage> {
    let StateRequest {
        family,
        alpha,
        mu,
        ell,
        truncation,
    } = *req;
    match family {
        Family::Wedge => require("alpha", alpha, alpha > 0.0 && alpha <= 2.0 * PI, "wedge opening must lie in (0, 2pi]")?,
        Family::Cosine | Family::VonMises | Family::TruncatedGaussian | Family::WrappedGaussian => {
            require("alpha", alpha, alpha > 0.0 && alpha.is_finite(), "width parameter must be positive")?
        }
        Family::Coherent => require("ell", ell, ell.is_finite(), "log-radius must be finite")?,
    }
    let m_max = if truncation > 0 {
        truncation
    } else {
        auto_truncation(family, alpha, ell)
    };

    let state = match family {
        Family::Wedge => MomentumWavefunction::from_fn(m_max, |m| Complex64::new(wedge_amplitude(m, alpha), 0.0))?,
        Family::Cosine => MomentumWavefunction::from_fn(m_max, |m| Complex64::new(cosine_amplitude(m, alpha), 0.0))?,
        Family::VonMises => {
            let kappa = 1.0 / (2.0 * alpha);
            let scaled = special::bessel_i_scaled(m_max as usize, kappa);
            MomentumWavefunction::from_fn(m_max, |m| {
                Complex64::new(scaled[m.unsigned_abs() as usize], 0.0)
            })?
        }
        Family::TruncatedGaussian => {
            MomentumWavefunction::from_fn(m_max, |m| Complex64::new(truncated_amplitude(m, alpha), 0.0))?
        }
        Family::WrappedGaussian => {
            let grid = (((4 * m_max + 8) as usize).next_power_of_two()).max(circle::DEFAULT_GRID);
            let samples = circle::AngularSamples::new(
                (0..grid)
                    .map(|j| {
                        let phi = 2.0 * PI * j as f64 / grid as f64;
                        // center at 0: density argument wrapped to [-pi, pi)
                        let phi_c = if phi > PI { phi - 2.0 * PI } else { phi };
                        Complex64::new(wrapped_gaussian_density(phi_c, alpha).sqrt(), 0.0)
                    })
                    .collect(),
            );
            circle::analyze(&samples, m_max)?
        }
        Family::Coherent => {
            // centered (theta = 0): Psi_m = |w|^m e^{-m^2/2}
            MomentumWavefunction::from_fn(m_max, |m| {
                let m = m as f64;
                Complex64::new((-ell * m - m * m / 2.0).exp(), 0.0)
            })?
        }
    };
    let state = if mu != 0.0 {
        circle::shift_state(&state, mu, 0)?
    } else {
        state
    };

    let closed_form = match family {
        Family::Wedge => {
            let p: Vec<f64> = (-m_max..=m_max)
                .map(|m| wedge_amplitude(m, alpha).powi(2))
                .collect();
            let total: f64 = p.iter().sum();
            let second: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let m = i as f64 - m_max as f64;
                    m * m * p
                })
                .sum();
            Some(ClosedForm {
                var_e: 1.0 - (4.0 / (alpha * alpha)) * (alpha / 2.0).sin().powi(2),
                var_l: second / total,
                var_l_window: Some(m_max),
            })
        }
        Family::Cosine => Some(ClosedForm {
            var_e: cosine_var_e(alpha),
            var_l: 1.0 / (alpha * alpha),
            var_l_window: None,
        }),
        Family::VonMises => Some(ClosedForm {
            var_e: von_mises_var_e(alpha),
            var_l: von_mises_var_l(alpha),
            var_l_window: None,
        }),
        Family::TruncatedGaussian => Some(ClosedForm {
            var_e: truncated_var_e(alpha),
            var_l: truncated_var_l(alpha),
            var_l_window: None,
        }),
        Family::WrappedGaussian | Family::Coherent => None,
    };

    // rapidly decaying families: the truncated state must reproduce the
    // closed forms; algebraic-tail families (wedge, cosine) are exempt
    if matches!(family, Family::VonMises | Family::TruncatedGaussian) {
        let cf = closed_form.as_ref().unwrap();
        let report = circle::uncertainty_report(&state)?;
        let defect = (report.var_e - cf.var_e)
            .abs()
            .max((report.var_l - cf.var_l).abs());
        if defect > 1e-6 {
            return Err(Error::CrossCheck {
                what: "closed-form variances vs truncated state",
                defect,
            });
        }
    }

    Ok(StatePackage {
        family,
        alpha,
        mu,
        ell,
        state,
        closed_form,
    })
}

fn cosine_var_e(alpha: f64) -> f64 {
    // 1 - 64 sin^2(pi alpha/2) / (pi^2 alpha^2 (alpha^2-4)^2), with the
    // removable singularity at alpha = 2 in cancellation-free sinc form:
    // sin(pi alpha/2) = -sin(pi(alpha-2)/2)
    let d = alpha - 2.0;
    1.0 - 16.0 * sinc(PI * d / 2.0).powi(2) / (alpha * alpha * (alpha + 2.0).powi(2))
}

fn von_mises_var_e(alpha: f64) -> f64 {
    let i = special::bessel_i_scaled(1, 1.0 / alpha);
    1.0 - (i[1] / i[0]).powi(2)
}

fn von_mises_var_l(alpha: f64) -> f64 {
    let i = special::bessel_i_scaled(1, 1.0 / alpha);
    i[1] / (4.0 * alpha * i[0])
}

fn truncated_var_e(alpha: f64) -> f64 {
    let num = special::erf_re_scaled(PI * alpha, 1.0 / (2.0 * alpha));
    let den = libm::erf(PI * alpha);
    1.0 - (num / den).powi(2)
}

fn truncated_var_l(alpha: f64) -> f64 {
    let e = libm::erf(PI * alpha);
    alpha * alpha / 2.0 * (1.0 - 2.0 * PI.sqrt() * alpha * (-PI * PI * alpha * alpha).exp() / e)
}

/// Closed-form circular variance as a function of the width parameter.
pub fn closed_var_e(family: Family, alpha: f64) -> Result<f64> {
    match family {
        Family::Wedge => {
            require("alpha", alpha, alpha > 0.0 && alpha <= 2.0 * PI, "wedge opening must lie in (0, 2pi]")?;
            Ok(1.0 - (4.0 / (alpha * alpha)) * (alpha / 2.0).sin().powi(2))
        }
        Family::Cosine => {
            require("alpha", alpha, alpha > 0.0, "width parameter must be positive")?;
            Ok(cosine_var_e(alpha))
        }
        Family::VonMises => {
            require("alpha", alpha, alpha > 0.0, "width parameter must be positive")?;
            Ok(von_mises_var_e(alpha))
        }
        Family::TruncatedGaussian => {
            require("alpha", alpha, alpha > 0.0, "width parameter must be positive")?;
            Ok(truncated_var_e(alpha))
        }
        _ => Err(Error::Unsupported(
            "no closed-form circular variance for this family",
        )),
    }
}

/// Closed-form angular-momentum variance (families where it is finite).
pub fn closed_var_l(family: Family, alpha: f64) -> Result<f64> {
    match family {
        Family::Cosine => Ok(1.0 / (alpha * alpha)),
        Family::VonMises => Ok(von_mises_var_l(alpha)),
        Family::TruncatedGaussian => Ok(truncated_var_l(alpha)),
        Family::Wedge => Err(Error::Unsupported(
            "wedge angular-momentum variance diverges; use the windowed value in StatePackage",
        )),
        _ => Err(Error::Unsupported(
            "no closed-form angular-momentum variance for this family",
        )),
    }
}

/// Inverts `closed_var_e` for the width parameter by bisection.
/// Monotone domains: wedge `(0, 2pi]`, cosine `(0, 3.5]` (wrapped past
/// `alpha = 2`), von Mises and truncated Gaussian on a wide log grid.
pub fn find_width_for_var_e(family: Family, target: f64) -> Result<f64> {
    require("target", target, target > 0.0 && target < 1.0, "circular variance must lie in (0, 1)")?;
    let (mut lo, mut hi, increasing) = match family {
        Family::Wedge => (1e-6, 2.0 * PI, true),
        Family::Cosine => (1e-6, 3.5, true),
        Family::VonMises => (1e-6, 1e6, true),
        Family::TruncatedGaussian => (1e-4, 1e4, false),
        _ => {
            return Err(Error::Unsupported(
                "no closed-form circular variance for this family",
            ))
        }
    };
    let f = |a: f64| closed_var_e(family, a);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    let bracket_ok = if increasing {
        flo <= target && target <= fhi
    } else {
        fhi <= target && target <= flo
    };
    if !bracket_ok {
        return Err(Error::NonConverged(format!(
            "target var_e = {target} not bracketed for family {}",
            family.as_str()
        )));
    }
    for _ in 0..200 {
        let mid = if matches!(family, Family::VonMises | Family::TruncatedGaussian) {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let v = f(mid)?;
        if (v > target) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo).abs() < 1e-14 * hi.abs() {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form momentum spectrum `p_m` over `m = lo..=hi`. Values follow the
/// family formulas (normalized over all integers m; window sums may fall
/// short of 1 for heavy-tailed families).
pub fn momentum_spectrum_closed_form(
    family: Family,
    alpha: f64,
    ell: f64,
    lo: i32,
    hi: i32,
) -> Result<Vec<f64>> {
    match family {
        Family::Wedge => {
            require("alpha", alpha, alpha > 0.0 && alpha <= 2.0 * PI, "wedge opening must lie in (0, 2pi]")?;
            Ok((lo..=hi).map(|m| wedge_amplitude(m, alpha).powi(2)).collect())
        }
        Family::Cosine => {
            require("alpha", alpha, alpha > 0.0, "width parameter must be positive")?;
            // p_m = alpha sinc^2(pi(|m| alpha - 1)/2)/(1+|m| alpha)^2
            Ok((lo..=hi)
                .map(|m| alpha * cosine_amplitude(m, alpha).powi(2))
                .collect())
        }
        Family::VonMises => {
            require("alpha", alpha, alpha > 0.0, "width parameter must be positive")?;
            let kappa = 1.0 / (2.0 * alpha);
            let m_abs = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
            let num = special::bessel_i_scaled(m_abs, kappa);
            let den = special::bessel_i_scaled_one(0, 2.0 * kappa);
            Ok((lo..=hi)
                .map(|m| num[m.unsigned_abs() as usize].powi(2) / den)
                .collect())
        }
        Family::TruncatedGaussian => {
            require("alpha", alpha, alpha > 0.0, "width parameter must be positive")?;
            let den = PI.sqrt() * alpha * libm::erf(PI * alpha);
            Ok((lo..=hi)
                .map(|m| truncated_amplitude(m, alpha).powi(2) / den)
                .collect())
        }
        Family::Coherent => {
            // p_m proportional to e^{-2 ell m - m^2}; normalized over a wide window
            let spread = ell.abs().ceil() as i32 + 40;
            let z: f64 = (-spread..=spread)
                .map(|m| {
                    let m = m as f64;
                    (-2.0 * ell * m - m * m).exp()
                })
                .sum();
            Ok((lo..=hi)
                .map(|m| {
                    let m = m as f64;
                    (-2.0 * ell * m - m * m).exp() / z
                })
                .collect())
        }
        Family::WrappedGaussian => Err(Error::Unsupported(
            "the wrapped-Gaussian amplitude has no closed-form momentum spectrum",
        )),
    }
}

/// Residuals of the defining eigenrelations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenResidual {
    /// `||(L + i kappa C) Psi||` for von Mises (state rotated onto the
    /// intelligent orientation), `||W Psi - w Psi||` for coherent.
    pub eigen_residual: f64,
    /// von Mises: `|varC varL - <S>^2/4|`; coherent:
    /// `|dQ^2 dP^2 - |<[Q,P]>|^2/4|`.
    pub saturation_defect: f64,
}

/// Verifies the eigenrelation that defines the family: the von Mises state is
/// intelligent for the (C, L) Robertson inequality, the coherent state is an
/// eigenstate of `W` and saturates the (Q, P) uncertainty relation.
pub fn verify_eigenrelations(pkg: &StatePackage) -> Result<EigenResidual> {
    match pkg.family {
        Family::VonMises => {
            let kappa = 1.0 / (2.0 * pkg.alpha);
            // undo the package center, then rotate onto the orientation where
            // (L + i kappa C) Psi = 0 holds (coefficients (-i)^m I_m(kappa))
            let centered = circle::shift_state(&pkg.state, -pkg.mu - PI / 2.0, 0)?;
            let m0 = centered.truncation();
            let mut res2 = 0.0;
            for m in -m0..=m0 {
                let r = Complex64::new(m as f64, 0.0) * centered.amplitude(m)
                    + Complex64::new(0.0, kappa / 2.0)
                        * (centered.amplitude(m + 1) + centered.amplitude(m - 1));
                res2 += r.norm_sqr();
            }
            let report = circle::uncertainty_report(&centered)?;
            let mean_s = report.mean_e.im;
            let defect = (report.var_c * report.var_l - mean_s * mean_s / 4.0).abs();
            Ok(EigenResidual {
                eigen_residual: res2.sqrt(),
                saturation_defect: defect,
            })
        }
        Family::Coherent => {
            let w = Complex64::from_polar((-pkg.ell).exp(), pkg.mu);
            // work in a slightly larger window so two ladder applications
            // stay inside it
            let m0 = pkg.state.truncation() + 2;
            let psi: Vec<Complex64> = (-m0..=m0).map(|m| pkg.state.amplitude(m)).collect();
            let idx = |m: i32| (m + m0) as usize;
            let apply_w = |v: &[Complex64]| -> Vec<Complex64> {
                (-m0..=m0)
                    .map(|m| {
                        if m + 1 > m0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            ((m as f64) + 0.5).exp() * v[idx(m + 1)]
                        }
                    })
                    .collect()
            };
            let apply_wd = |v: &[Complex64]| -> Vec<Complex64> {
                (-m0..=m0)
                    .map(|m| {
                        if m - 1 < -m0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            ((m as f64) - 0.5).exp() * v[idx(m - 1)]
                        }
                    })
                    .collect()
            };
            let wpsi = apply_w(&psi);
            let residual: f64 = wpsi
                .iter()
                .zip(&psi)
                .map(|(a, b)| (a - w * b).norm_sqr())
                .sum::<f64>()
                .sqrt();

            let sqrt2 = std::f64::consts::SQRT_2;
            let combine = |a: &[Complex64], b: &[Complex64], ca: Complex64, cb: Complex64| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| ca * x + cb * y)
                    .collect::<Vec<_>>()
            };
            let wd = apply_wd(&psi);
            let q1 = combine(&wpsi, &wd, (1.0 / sqrt2).into(), (1.0 / sqrt2).into());
            let p1 = combine(
                &wpsi,
                &wd,
                Complex64::new(0.0, -1.0 / sqrt2),
                Complex64::new(0.0, 1.0 / sqrt2),
            );
            let q2 = combine(
                &apply_w(&q1),
                &apply_wd(&q1),
                (1.0 / sqrt2).into(),
                (1.0 / sqrt2).into(),
            );
            let p2 = combine(
                &apply_w(&p1),
                &apply_wd(&p1),
                Complex64::new(0.0, -1.0 / sqrt2),
                Complex64::new(0.0, 1.0 / sqrt2),
            );
            let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
                a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
            };
            let mean_q = inner(&psi, &q1).re;
            let mean_p = inner(&psi, &p1).re;
            let var_q = inner(&psi, &q2).re - mean_q * mean_q;
            let var_p = inner(&psi, &p2).re - mean_p * mean_p;
            // [Q, P] by operator application: QP - PQ
            let qp = combine(
                &apply_w(&p1),
                &apply_wd(&p1),
                (1.0 / sqrt2).into(),
                (1.0 / sqrt2).into(),
            );
            let pq = combine(
                &apply_w(&q1),
                &apply_wd(&q1),
                Complex64::new(0.0, -1.0 / sqrt2),
                Complex64::new(0.0, 1.0 / sqrt2),
            );
            let comm = inner(&psi, &combine(&qp, &pq, 1.0.into(), Complex64::new(-1.0, 0.0)));
            let defect = (var_q * var_p - comm.norm_sqr() / 4.0).abs();
            Ok(EigenResidual {
                eigen_residual: residual,
                saturation_defect: defect,
            })
        }
        _ => Err(Error::Unsupported(
            "only the von Mises and coherent families have defining eigenrelations",
        )),
    }
}

/// Solves `I_1(2 kappa)/I_0(2 kappa) = r` for kappa (moment matching a von
/// Mises distribution to a mean resultant length `r` in `[0, 1)`).
pub fn von_mises_kappa_for_mean_resultant(r: f64) -> Result<f64> {
    require("r", r, (0.0..1.0).contains(&r), "mean resultant length must lie in [0, 1)")?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let ratio = |kappa: f64| {
        let i = special::bessel_i_scaled(1, 2.0 * kappa);
        i[1] / i[0]
    };
    let (mut lo, mut hi) = (1e-12_f64, 1e12_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ratio(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
