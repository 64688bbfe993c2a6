//! Special functions used across the crate: modified Bessel functions of
//! integer order (real argument) and real order (complex argument), a scaled
//! complex error function, and the third Jacobi theta function.
//!
//! Ordinary Bessel J and the real error function come from `libm`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// J_n(x) for integer order, any sign of n, x >= 0.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let v = match n.unsigned_abs() {
        0 => libm::j0(x),
        1 => libm::j1(x),
        k => libm::jn(k as i32, x),
    };
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// J_n(x) for all orders n = 0..=n_max at once (Miller's downward recurrence
/// with the normalization J_0 + 2 sum_k J_{2k} = 1). Much cheaper than
/// calling `bessel_j` per order when many orders share one argument.
pub fn bessel_j_upto(n_max: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return out;
    }
    let start = n_max + 2 + ((x + 40.0).sqrt() * 4.0) as usize + (1.5 * x) as usize;
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut out = vec![0.0; n_max + 1];
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        let jm1 = (2.0 * (k as f64 + 1.0) / x) * j - jp1;
        jp1 = j;
        j = jm1;
        if k <= n_max {
            out[k] = j;
        }
        if k == 0 {
            norm += j;
        } else if k % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            jp1 /= 1e250;
            j /= 1e250;
            norm /= 1e250;
            for v in out.iter_mut() {
                *v /= 1e250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Scaled modified Bessel functions e^{-x} I_n(x) for n = 0..=n_max, x >= 0.
///
/// Miller's downward recurrence normalized with e^{-x}(I_0 + 2 sum I_k) = 1.
pub fn bessel_i_scaled(n_max: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return out;
    }
    // start high enough that the seed order is deep in the decaying tail
    let start = n_max + 2 + ((x + 40.0).sqrt() * 4.0) as usize + (1.5 * x) as usize;
    let mut ip1 = 0.0_f64;
    let mut i = 1e-300_f64;
    let mut out = vec![0.0; n_max + 1];
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        let im1 = ip1 + (2.0 * (k as f64 + 1.0) / x) * i;
        ip1 = i;
        i = im1;
        if k <= n_max {
            out[k] = i;
        }
        if k > 0 {
            norm += 2.0 * i;
        } else {
            norm += i;
        }
        // rescale to avoid overflow of the unnormalized recurrence
        if i > 1e250 {
            ip1 /= 1e250;
            i /= 1e250;
            norm /= 1e250;
            for v in out.iter_mut() {
                *v /= 1e250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// e^{-x} I_n(x) for a single order.
pub fn bessel_i_scaled_one(n: usize, x: f64) -> f64 {
    bessel_i_scaled(n, x)[n]
}

/// 1 / Gamma(h/2) for integer or half-integer arguments given as `h` (twice
/// the argument). Returns 0 at the poles (argument a nonpositive integer).
fn recip_gamma_half(h: i64) -> f64 {
    if h <= 0 {
        if h % 2 == 0 {
            return 0.0; // pole
        }
        // Gamma(a) for negative half-integer a via reflection-free recurrence:
        // Gamma(a) = Gamma(a+1)/a
        let mut a = h as f64 / 2.0;
        let mut g = 1.0;
        while a < 0.5 {
            g /= a;
            a += 1.0;
        }
        // now a == 1/2
        return 1.0 / (g * PI.sqrt());
    }
    if h % 2 == 0 {
        // integer argument n = h/2: Gamma(n) = (n-1)!
        let n = h / 2;
        let mut g = 1.0_f64;
        for k in 2..n {
            g *= k as f64;
        }
        1.0 / g
    } else {
        // half-integer: Gamma(1/2 + k) = (2k-1)!!/2^k sqrt(pi)
        let k = (h - 1) / 2;
        let mut g = PI.sqrt();
        let mut a = 0.5;
        for _ in 0..k {
            g *= a;
            a += 1.0;
        }
        1.0 / g
    }
}

/// Scaled modified Bessel function e^{-z} I_nu(z) for real order `nu`
/// (integer or half-integer times 0.5 is all we need, but any real works in
/// the series branch) and complex argument with Re z >= 0.
///
/// Series for |z| <= 25, large-argument asymptotics beyond. `nu2` is twice
/// the order so half-integers stay exact.
pub fn bessel_i_scaled_complex(nu2: i64, z: Complex64) -> Complex64 {
    let nu = nu2 as f64 / 2.0;
    let r = z.norm();
    if r == 0.0 {
        return if nu2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    if r <= 25.0 {
        // I_nu(z) = (z/2)^nu sum_k (z^2/4)^k / (k! Gamma(nu+k+1))
        let q = z * z * 0.25;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut kfact = 1.0_f64;
        for k in 0..120 {
            let rg = recip_gamma_half(nu2 + 2 * (k + 1));
            let term = pow * (rg / kfact);
            sum += term;
            if term.norm() < 1e-18 * sum.norm().max(1e-280) && k as f64 > r {
                break;
            }
            pow *= q;
            kfact *= (k + 1) as f64;
        }
        let prefix = if nu2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            (0.5 * z).powf(nu)
        };
        prefix * sum * (-z).exp()
    } else {
        // DLMF 10.40.5: two-exponential asymptotic expansion, scaled by e^{-z}
        let mut s_plus = Complex64::new(1.0, 0.0);
        let mut s_minus = Complex64::new(1.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        let four_nu2 = 4.0 * nu * nu;
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let kk = k as f64;
            let num = four_nu2 - (2.0 * kk - 1.0) * (2.0 * kk - 1.0);
            term = term * Complex64::new(num / (8.0 * kk), 0.0) / z;
            if term.norm() > prev {
                break; // divergent tail of the asymptotic series
            }
            prev = term.norm();
            if k % 2 == 1 {
                s_plus -= term;
                s_minus += term;
            } else {
                s_plus += term;
                s_minus += term;
            }
            if term.norm() < 1e-17 {
                break;
            }
        }
        let sqrt2piz = (2.0 * PI * z).sqrt();
        let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
        let phase = Complex64::from_polar(1.0, sign * PI * (nu + 0.5));
        (s_plus + phase * (-2.0 * z).exp() * s_minus) / sqrt2piz
    }
}

const FADDEEVA_N: usize = 40;

fn faddeeva_coeffs() -> &'static [f64; FADDEEVA_N] {
    static COEFFS: OnceLock<[f64; FADDEEVA_N]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        // Weideman's rational expansion: coefficients are the Fourier
        // coefficients of exp(-t^2)(L^2 + t^2) under t = L tan(theta/2).
        let n = FADDEEVA_N;
        let m = 2 * n;
        let m2 = 2 * m;
        let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
        let mut f = vec![0.0_f64; m2];
        for (idx, kk) in (-(m as i64) + 1..m as i64).enumerate() {
            let theta = kk as f64 * PI / m as f64;
            let t = l * (theta / 2.0).tan();
            f[idx + 1] = (-t * t).exp() * (l * l + t * t);
        }
        // real part of the DFT of fftshift(f)
        let mut a = [0.0_f64; FADDEEVA_N];
        for (j, aj) in a.iter_mut().enumerate() {
            // we need fft coefficients 1..N of the shifted sequence
            let jj = j + 1;
            let mut acc = 0.0;
            for k in 0..m2 {
                // fftshift: index k reads from original index (k + m2/2) mod m2
                let src = (k + m) % m2;
                acc += f[src] * (2.0 * PI * (jj * k) as f64 / m2 as f64).cos();
            }
            *aj = acc / m2 as f64;
        }
        a.reverse(); // polyval ordering: highest power first
        a
    })
}

/// Faddeeva function w(z) = e^{-z^2} erfc(-iz) for Im z >= 0.
pub fn faddeeva(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    let n = FADDEEVA_N as f64;
    let l = (n / std::f64::consts::SQRT_2).sqrt();
    let a = faddeeva_coeffs();
    let iz = Complex64::new(-z.im, z.re);
    let denom = Complex64::new(l, 0.0) - iz;
    let zz = (Complex64::new(l, 0.0) + iz) / denom;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in a.iter() {
        p = p * zz + c;
    }
    2.0 * p / (denom * denom) + Complex64::new(1.0, 0.0) / (PI.sqrt() * denom)
}

/// e^{-y^2} Re[erf(x + i y)] for x >= 0, y >= 0, evaluated without overflow.
///
/// erfc(z) = e^{-z^2} w(iz), so e^{-y^2} erfc(x+iy) = e^{-x^2} e^{-2ixy} w(-y+ix).
pub fn erf_re_scaled(x: f64, y: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let y = y.abs(); // Re erf is even in y
    let w = faddeeva(Complex64::new(-y, x));
    let rot = Complex64::from_polar((-x * x).exp(), -2.0 * x * y);
    (-y * y).exp() - (rot * w).re
}

/// Third Jacobi theta function theta_3(zeta | q) for real zeta and 0 <= q < 1.
pub fn jacobi_theta3(zeta: f64, q: f64) -> f64 {
    let mut sum = 1.0;
    for k in 1i32..400 {
        let qk = q.powi(k * k);
        if qk < 1e-18 {
            break;
        }
        sum += 2.0 * qk * (2.0 * k as f64 * zeta).cos();
    }
    sum
}
