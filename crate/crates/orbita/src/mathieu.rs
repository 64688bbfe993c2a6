//! Constrained minimum-uncertainty states on the circle.
//!
//! Minimizing the uncertainty product at fixed circular (or angular-momentum)
//! spread leads to the eigenproblem of `H = L^2 + (q/2) cos phi`, i.e. the
//! Mathieu equation in the half-angle variable. The `2 pi`-periodic even
//! solutions are the angular Mathieu functions `ce_{2n}(eta, q)` with
//! characteristic value `a = 4 eps`, `eps` the matrix eigenvalue.
//!
//! The eigenproblem is solved per parity sector: the even sector in the
//! normalized cosine basis `{1/sqrt(2 pi), cos(k phi)/sqrt(pi)}` is symmetric
//! tridiagonal with diagonal `k^2` and off-diagonals `(q/(2 sqrt 2), q/4,
//! q/4, ...)`. Solving per sector keeps the `q -> 0` degeneracy between
//! parity partners from mixing eigenvectors.

use crate::circle::{self, MomentumWavefunction};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TAIL_TARGET: f64 = 1e-14;
const MAX_TRUNCATION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// `ce_{2n}` family (used throughout the crate).
    Even,
    /// `se_{2n}` family; exposed for completeness, not used by any pipeline.
    Odd,
}

/// One periodic Mathieu mode: order `n`, parameter `q`, characteristic value
/// and Fourier coefficients `A_{2k}` of `ce_{2n}` (or the sine analogue).
#[derive(Debug, Clone)]
pub struct MathieuMode {
    n: usize,
    q: f64,
    parity: Parity,
    char_value: f64,
    coeffs: Vec<f64>,
}

/// JSON wire format `{ n, q, a, A: [...] }`.
#[derive(Serialize, Deserialize)]
pub struct ModeJson {
    pub n: usize,
    pub q: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub coeffs: Vec<f64>,
}

impl MathieuMode {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Mathieu characteristic value `a` (so that `ce'' + (a - 2q cos 2eta) ce = 0`).
    pub fn char_value(&self) -> f64 {
        self.char_value
    }

    /// Fourier coefficients `A_{2k}`, `k = 0..=K` (for the odd family the
    /// leading entry is zero and `k >= 1` holds the sine coefficients).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn to_json(&self) -> ModeJson {
        ModeJson {
            n: self.n,
            q: self.q,
            a: self.char_value,
            coeffs: self.coeffs.clone(),
        }
    }

    /// `Theta_{2n} = 2 A_0 A_2 + sum_{k>=1} A_{2k} A_{2k+2}` — the mean of
    /// `cos phi` in the mode.
    pub fn theta(&self) -> f64 {
        let a = &self.coeffs;
        let mut acc = 2.0 * a[0] * a[1];
        for k in 1..a.len() - 1 {
            acc += a[k] * a[k + 1];
        }
        acc
    }

    pub fn is_converged(&self) -> bool {
        let k = self.coeffs.len() - 1;
        self.coeffs[k].powi(2) <= 1e-12 && self.coeffs[k - 1].powi(2) <= 1e-12
    }

    /// Converts to the canonical momentum representation
    /// (`Psi_0 = sqrt(2) A_0`, `Psi_{+-k} = A_{2k}/sqrt(2)`).
    pub fn to_wavefunction(&self) -> Result<MomentumWavefunction> {
        let k_max = self.coeffs.len() as i32 - 1;
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        match self.parity {
            Parity::Even => MomentumWavefunction::from_fn(k_max, |m| {
                let k = m.unsigned_abs() as usize;
                if k == 0 {
                    Complex64::new(self.coeffs[0] * std::f64::consts::SQRT_2, 0.0)
                } else {
                    Complex64::new(self.coeffs[k] * inv_sqrt2, 0.0)
                }
            }),
            Parity::Odd => MomentumWavefunction::from_fn(k_max, |m| {
                let k = m.unsigned_abs() as usize;
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    // sin(k phi) = (e^{ik phi} - e^{-ik phi})/(2i)
                    let sign = if m > 0 { -1.0 } else { 1.0 };
                    Complex64::new(0.0, sign * self.coeffs[k] * inv_sqrt2)
                }
            }),
        }
    }

    /// Momentum probabilities `p_m` over `m = lo..=hi`.
    pub fn momentum_spectrum(&self, lo: i32, hi: i32) -> Vec<f64> {
        (lo..=hi)
            .map(|m| {
                let k = m.unsigned_abs() as usize;
                if k >= self.coeffs.len() {
                    0.0
                } else if k == 0 {
                    match self.parity {
                        Parity::Even => 2.0 * self.coeffs[0].powi(2),
                        Parity::Odd => 0.0,
                    }
                } else {
                    0.5 * self.coeffs[k].powi(2)
                }
            })
            .collect()
    }
}

/// Uncertainties of one mode at one `q`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UncertaintyCurvePoint {
    pub q: f64,
    pub n: usize,
    pub var_e: f64,
    pub var_l: f64,
    /// `DeltaL * DeltaE`.
    pub product: f64,
}

fn even_tridiagonal(q: f64, size: usize) -> (Vec<f64>, Vec<f64>) {
    let diag: Vec<f64> = (0..size).map(|k| (k * k) as f64).collect();
    let mut off = vec![q / 4.0; size - 1];
    off[0] = q / (2.0 * std::f64::consts::SQRT_2);
    (diag, off)
}

fn odd_tridiagonal(q: f64, size: usize) -> (Vec<f64>, Vec<f64>) {
    let diag: Vec<f64> = (1..=size).map(|k| (k * k) as f64).collect();
    let off = vec![q / 4.0; size - 1];
    (diag, off)
}

fn eigensolve(diag: &[f64], off: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, &d) in diag.iter().enumerate() {
        m[(i, i)] = d;
    }
    for (i, &o) in off.iter().enumerate() {
        m[(i, i + 1)] = o;
        m[(i + 1, i)] = o;
    }
    SymmetricEigen::new(m)
}

/// Solves the even-sector (or odd-sector) eigenproblem for modes
/// `n = 0..=n_max`, growing the truncation until the coefficient tails drop
/// below 1e-14.
pub fn solve_modes_parity(
    q: f64,
    n_max: usize,
    truncation: usize,
    parity: Parity,
) -> Result<Vec<MathieuMode>> {
    if q < 0.0 {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "q < 0 is a shifted copy of the q > 0 problem; not supported",
        });
    }
    let mut size = truncation
        .max(n_max + 8)
        .max((2.0 * q.sqrt()) as usize + 16)
        .min(MAX_TRUNCATION);
    loop {
        let (diag, off) = match parity {
            Parity::Even => even_tridiagonal(q, size + 1),
            Parity::Odd => odd_tridiagonal(q, size),
        };
        let eig = eigensolve(&diag, &off);
        // sort eigenpairs ascending
        let mut order: Vec<usize> = (0..diag.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        if n_max >= order.len() {
            return Err(Error::NonConverged(format!(
                "requested mode {n_max} exceeds basis size {}",
                order.len()
            )));
        }

        let mut modes = Vec::with_capacity(n_max + 1);
        let mut tail_ok = true;
        for n in 0..=n_max {
            let idx = order[n];
            let eps = eig.eigenvalues[idx];
            let v = eig.eigenvectors.column(idx);

            // eigen-residual of the tridiagonal system
            let mut res = 0.0_f64;
            for i in 0..diag.len() {
                let mut h = diag[i] * v[i];
                if i > 0 {
                    h += off[i - 1] * v[i - 1];
                }
                if i + 1 < diag.len() {
                    h += off[i] * v[i + 1];
                }
                res += (h - eps * v[i]).powi(2);
            }
            // residual tolerance scales with the matrix magnitude
            let scale = diag.last().copied().unwrap_or(1.0).max(q).max(1.0);
            if res.sqrt() > (1e-13 * scale).max(1e-9) {
                return Err(Error::NonConverged(format!(
                    "eigen-residual {:.3e} at q = {q}, n = {n}",
                    res.sqrt()
                )));
            }

            let tail = v[diag.len() - 1].abs().max(v[diag.len() - 2].abs());
            if tail > TAIL_TARGET {
                tail_ok = false;
            }

            // basis -> Fourier coefficients A_{2k}
            let mut coeffs: Vec<f64> = match parity {
                Parity::Even => {
                    let mut c: Vec<f64> = v.iter().copied().collect();
                    c[0] *= std::f64::consts::FRAC_1_SQRT_2;
                    c
                }
                Parity::Odd => {
                    let mut c = Vec::with_capacity(diag.len() + 1);
                    c.push(0.0);
                    c.extend(v.iter().copied());
                    c
                }
            };
            // sign convention: lowest-index significant coefficient positive
            if let Some(first) = coeffs.iter().find(|c| c.abs() > 1e-8) {
                if *first < 0.0 {
                    coeffs.iter_mut().for_each(|c| *c = -*c);
                }
            }
            modes.push(MathieuMode {
                n,
                q,
                parity,
                char_value: 4.0 * eps,
                coeffs,
            });
        }
        if tail_ok {
            return Ok(modes);
        }
        if size >= MAX_TRUNCATION {
            return Err(Error::NonConverged(format!(
                "coefficient tail above {TAIL_TARGET:.0e} at truncation cap {MAX_TRUNCATION}"
            )));
        }
        size = (2 * size).min(MAX_TRUNCATION);
    }
}

/// Even-family (`ce_{2n}`) modes for `n = 0..=n_max`.
pub fn solve_modes(q: f64, n_max: usize, truncation: usize) -> Result<Vec<MathieuMode>> {
    solve_modes_parity(q, n_max, truncation, Parity::Even)
}

/// Closed-form uncertainties `var_l = (a - 2 q Theta)/4`, `var_e = 1 - Theta^2`,
/// cross-checked against the momentum-space route.
pub fn mode_uncertainties(mode: &MathieuMode) -> Result<UncertaintyCurvePoint> {
    if !mode.is_converged() {
        return Err(Error::NonConverged(
            "mode coefficients not converged; refusing uncertainty evaluation".into(),
        ));
    }
    let theta = mode.theta();
    let var_e = (1.0 - theta * theta).max(0.0);
    let var_l = ((mode.char_value - 2.0 * mode.q * theta) / 4.0).max(0.0);

    let report = circle::uncertainty_report(&mode.to_wavefunction()?)?;
    let scale_l = var_l.abs().max(1.0);
    if (report.var_e - var_e).abs() > 1e-8 || (report.var_l - var_l).abs() > 1e-8 * scale_l {
        return Err(Error::CrossCheck {
            what: "Mathieu closed-form variances",
            defect: (report.var_e - var_e).abs().max((report.var_l - var_l).abs()),
        });
    }
    Ok(UncertaintyCurvePoint {
        q: mode.q,
        n: mode.n,
        var_e,
        var_l,
        product: (var_e * var_l).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Small,
    Large,
}

/// Asymptotic point plus a flag telling whether `q` is inside the regime of
/// validity (small: `q <= 1`; large: `q >= 100`).
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticPoint {
    pub point: UncertaintyCurvePoint,
    pub in_regime: bool,
}

/// Perturbative (small `q`) and harmonic (large `q`) variance expansions.
pub fn asymptotic_uncertainties(n: usize, q: f64, regime: Regime) -> AsymptoticPoint {
    let (var_l, var_e, in_regime) = match regime {
        Regime::Small => {
            let (vl, ve) = if n == 1 {
                (1.0 - 5.0 * q * q / 48.0, 1.0 - 25.0 * q * q / 144.0)
            } else {
                let nn = n as f64;
                let d = 4.0 * nn * nn - 1.0;
                (nn * nn - q * q / (8.0 * d), 1.0 - q * q / (4.0 * d * d))
            };
            (vl, ve, q <= 1.0)
        }
        Regime::Large => {
            let f = (4 * n + 1) as f64;
            (f * q.sqrt() / 4.0, f / q.sqrt(), q >= 100.0)
        }
    };
    AsymptoticPoint {
        point: UncertaintyCurvePoint {
            q,
            n,
            var_e,
            var_l,
            product: (var_e.max(0.0) * var_l.max(0.0)).sqrt(),
        },
        in_regime,
    }
}

/// Uncertainty curves for modes `n = 0..=n_max` over a `q` grid
/// (the theory curves behind the uncertainty-product comparisons).
pub fn sweep_uncertainty_curve(n_max: usize, q_grid: &[f64]) -> Result<Vec<UncertaintyCurvePoint>> {
    let mut rows: Vec<Vec<UncertaintyCurvePoint>> = q_grid
        .par_iter()
        .map(|&q| {
            let modes = solve_modes(q, n_max, 0)?;
            modes.iter().map(mode_uncertainties).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.drain(..).flatten().collect())
}

/// Finds `q` such that the fundamental even mode has circular variance
/// `target` (monotone bisection; `var_e` decreases from 1 to 0 with `q`).
pub fn find_q_for_var_e(n: usize, target: f64) -> Result<f64> {
    if !(0.0 < target && target < 1.0) {
        return Err(Error::InvalidParameter {
            name: "target",
            value: target,
            reason: "circular variance must lie strictly inside (0, 1)",
        });
    }
    let var_e_at = |q: f64| -> Result<f64> {
        let modes = solve_modes(q, n, 0)?;
        Ok(mode_uncertainties(&modes[n])?.var_e)
    };
    // expand the bracket outward from q = 1 (var_e decreases with q), so the
    // eigenproblem only grows as far as the target demands
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    if var_e_at(1.0)? > target {
        loop {
            hi *= 4.0;
            if hi > 1e6 {
                return Err(Error::NonConverged(format!(
                    "target var_e = {target} needs q beyond 1e6"
                )));
            }
            if var_e_at(hi)? <= target {
                break;
            }
            lo = hi;
        }
    } else {
        loop {
            lo /= 4.0;
            if lo < 1e-8 {
                return Err(Error::NonConverged(format!(
                    "target var_e = {target} not reached even as q -> 0"
                )));
            }
            if var_e_at(lo)? >= target {
                break;
            }
            hi = lo;
        }
    }
    for _ in 0..70 {
        let mid = (lo * hi).sqrt();
        if var_e_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi / lo - 1.0).abs() < 1e-12 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_rotor_limit() {
        let modes = solve_modes(0.0, 3, 0).unwrap();
        for (n, m) in modes.iter().enumerate() {
            assert_relative_eq!(m.char_value(), (2.0 * n as f64).powi(2), epsilon = 1e-10);
        }
        // ce_0 at q = 0 is the constant 1/sqrt(2)
        assert_relative_eq!(modes[0].coefficients()[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(modes[0].coefficients()[1..].iter().all(|c| c.abs() < 1e-12));
        // ce_2 at q = 0 is cos(2 eta) = cos(phi)
        assert_relative_eq!(modes[1].coefficients()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn characteristic_value_at_q_one() {
        // oracle: large-truncation eigensolve plus a finite-difference
        // residual of the Mathieu ODE on a fine eta grid
        let modes = solve_modes(1.0, 0, 200).unwrap();
        let a = modes[0].char_value();
        assert_relative_eq!(a, -0.4551, epsilon = 5e-5);

        // residual of ce'' + (a - 2 q cos 2eta) ce = 0 by central differences
        let coeffs = modes[0].coefficients();
        let ce = |eta: f64| -> f64 {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * (2.0 * k as f64 * eta).cos())
                .sum()
        };
        let h = 1e-4;
        let mut worst = 0.0_f64;
        for i in 0..500 {
            let eta = std::f64::consts::PI * i as f64 / 500.0;
            let d2 = (ce(eta + h) - 2.0 * ce(eta) + ce(eta - h)) / (h * h);
            let r = d2 + (a - 2.0 * 1.0 * (2.0 * eta).cos()) * ce(eta);
            worst = worst.max(r.abs());
        }
        assert!(worst < 1e-5, "ODE residual {worst}");
    }

    #[test]
    fn small_q_coefficient_ratio() {
        let q = 0.01;
        let modes = solve_modes(q, 0, 0).unwrap();
        let c = modes[0].coefficients();
        // linearized ce_0 = (1 - (q/2) cos 2eta)/sqrt(2): A_2/A_0 = -q/2
        assert_relative_eq!(c[1] / c[0], -q / 2.0, epsilon = 1e-4 * q);
    }

    #[test]
    fn normalization_invariant() {
        for &q in &[0.0, 0.5, 3.0, 40.0] {
            for m in solve_modes(q, 2, 0).unwrap() {
                let c = m.coefficients();
                let norm = 2.0 * c[0] * c[0] + c[1..].iter().map(|x| x * x).sum::<f64>();
                assert_relative_eq!(norm, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn uncertainties_at_q_zero() {
        let modes = solve_modes(0.0, 1, 0).unwrap();
        let u0 = mode_uncertainties(&modes[0]).unwrap();
        assert_relative_eq!(u0.var_l, 0.0, epsilon = 1e-12);
        assert_relative_eq!(u0.var_e, 1.0, epsilon = 1e-12);
        let u1 = mode_uncertainties(&modes[1]).unwrap();
        assert_relative_eq!(u1.var_l, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn closed_forms_match_momentum_route() {
        // mode_uncertainties cross-checks internally; just exercise a spread of q
        for &q in &[0.2, 2.0, 25.0, 400.0] {
            for m in solve_modes(q, 2, 0).unwrap() {
                mode_uncertainties(&m).unwrap();
            }
        }
    }

    #[test]
    fn high_q_product_approaches_limit() {
        let modes = solve_modes(1e4, 0, 0).unwrap();
        let u = mode_uncertainties(&modes[0]).unwrap();
        assert!((u.product - 0.5).abs() / 0.5 < 0.05);
    }

    #[test]
    fn characteristic_values_monotone_and_continuous() {
        let grid: Vec<f64> = (0..40).map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 39.0)).collect();
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for &q in &grid {
            let a: Vec<f64> = solve_modes(q, 3, 0)
                .unwrap()
                .iter()
                .map(|m| m.char_value())
                .collect();
            for w in a.windows(2) {
                assert!(w[1] > w[0], "eigenvalue ordering broken at q = {q}");
            }
            if let Some((pq, p)) = prev {
                for (x, y) in p.iter().zip(&a) {
                    // |da/dq| <= 2 asymptotically; allow slack on the log grid
                    assert!(
                        (y - x).abs() < 1.0 + 2.5 * (q - pq),
                        "jump at q = {q}: {x} -> {y}"
                    );
                }
            }
            prev = Some((q, a));
        }
    }

    #[test]
    fn odd_family_exposed() {
        let modes = solve_modes_parity(1.0, 1, 0, Parity::Odd).unwrap();
        // se characteristic values b_{2n}(q): b_2(1) ~ 3.917024...
        assert_relative_eq!(modes[0].char_value(), 3.917024, epsilon = 1e-4);
        let wf = modes[0].to_wavefunction().unwrap();
        // odd in phi: density symmetric, <S> = 0, and no m = 0 component
        assert!(wf.amplitude(0).norm() < 1e-14);
    }

    #[test]
    fn find_q_matches_var_e() {
        for &target in &[0.31, 0.54, 0.79, 0.91] {
            let q = find_q_for_var_e(0, target).unwrap();
            let u = mode_uncertainties(&solve_modes(q, 0, 0).unwrap()[0]).unwrap();
            assert_relative_eq!(u.var_e, target, epsilon = 1e-8);
        }
    }

    #[test]
    fn negative_q_is_refused() {
        assert!(solve_modes(-1.0, 0, 0).is_err());
    }
}
