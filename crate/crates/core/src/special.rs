//! Special functions used by the kernels and the analytic mode oracle.
//!
//! Cylindrical Bessel functions of integer and half-integer order, spherical
//! Bessel functions, the sine integral and normalized spherical harmonics.
//! Accuracy targets are ~1e-13 relative to the local envelope of each
//! function for arguments up to 1e4.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Crossover above which the Hankel asymptotic expansion is used for J0/J1.
const HANKEL_THRESHOLD: f64 = 20.0;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Hankel asymptotic expansion of J_nu(x) for large positive x.
fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    let mut k = 1usize;
    loop {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag > prev || k > 200 {
            break;
        }
        // Terms alternate between Q (odd k) and P (even k) with sign (-1)^{floor(k/2)}.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if mag < 1e-17 {
            break;
        }
        prev = mag;
        k += 1;
    }
    // chi = x - (nu/2 + 1/4) pi, evaluated by rotating (cos x, sin x) to keep
    // the full precision of large arguments.
    let shift = (nu / 2.0 + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (ss, cs) = shift.sin_cos();
    let cos_chi = cx * cs + sx * ss;
    let sin_chi = sx * cs - cx * ss;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Miller backward recurrence for J_0..=J_{out.len()-1}, normalized with
/// 1 = J_0 + 2 sum_k J_{2k}. Valid for any x > 0.
fn bessel_j_backward_into(x: f64, out: &mut [f64]) {
    let nmax = out.len() - 1;
    let top = nmax.max(x.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    out.fill(0.0);
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let two_over_x = 2.0 / x;
    let mut n = start;
    loop {
        if n <= nmax {
            out[n] = j;
        }
        if n % 2 == 0 {
            norm += if n == 0 { j } else { 2.0 * j };
        }
        if n == 0 {
            break;
        }
        let jm1 = n as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        n -= 1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
}

fn bessel_j_backward(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    bessel_j_backward_into(x, &mut out);
    out
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        1.0
    } else if x < HANKEL_THRESHOLD {
        let mut v = [0.0; 1];
        bessel_j_backward_into(x, &mut v);
        v[0]
    } else {
        hankel_asymptotic(0.0, x)
    }
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    if x == 0.0 {
        0.0
    } else if x < HANKEL_THRESHOLD {
        let mut v = [0.0; 2];
        bessel_j_backward_into(x, &mut v);
        s * v[1]
    } else {
        s * hankel_asymptotic(1.0, x)
    }
}

/// J_0, J_1 and J_2 at one argument, sharing the work between orders.
pub fn bessel_j012(x: f64) -> [f64; 3] {
    let ax = x.abs();
    let s = if x < 0.0 { -1.0 } else { 1.0 };
    if ax == 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let (j0, j1, j2) = if ax < HANKEL_THRESHOLD {
        let mut v = [0.0; 3];
        bessel_j_backward_into(ax, &mut v);
        (v[0], v[1], v[2])
    } else {
        let j0 = hankel_asymptotic(0.0, ax);
        let j1 = hankel_asymptotic(1.0, ax);
        (j0, j1, 2.0 / ax * j1 - j0)
    };
    [j0, s * j1, j2]
}

/// J_0..=J_nmax at a single argument.
pub fn bessel_j_array(nmax: usize, x: f64) -> Vec<f64> {
    let ax = x.abs();
    let mut out = if ax == 0.0 {
        let mut v = vec![0.0; nmax + 1];
        v[0] = 1.0;
        v
    } else if (nmax as f64) < ax && ax >= HANKEL_THRESHOLD {
        let mut v = vec![0.0; nmax + 1];
        v[0] = hankel_asymptotic(0.0, ax);
        if nmax >= 1 {
            v[1] = hankel_asymptotic(1.0, ax);
        }
        for n in 1..nmax {
            v[n + 1] = 2.0 * n as f64 / ax * v[n] - v[n - 1];
        }
        v
    } else {
        bessel_j_backward(nmax, ax)
    };
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Bessel function of the first kind of integer order.
pub fn bessel_jn(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = match m {
        0 => bessel_j0(x),
        1 => bessel_j1(x),
        _ => bessel_j_array(m, x)[m],
    };
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Bessel function J_nu(x) for nu = twice_order / 2, i.e. any integer or
/// half-integer order (negative orders included). Requires x > 0 for
/// negative half-integer orders, which diverge at the origin.
pub fn bessel_j_halves(twice_order: i32, x: f64) -> f64 {
    if twice_order % 2 == 0 {
        return bessel_jn(twice_order / 2, x);
    }
    if twice_order > 0 {
        let l = ((twice_order - 1) / 2) as usize;
        if x == 0.0 {
            return 0.0;
        }
        (2.0 * x / PI).sqrt() * spherical_jn_array(l, x)[l]
    } else {
        let l = ((-twice_order - 1) / 2) as usize;
        let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
        sign * (2.0 * x / PI).sqrt() * spherical_yn_array(l, x)[l]
    }
}

/// Spherical Bessel functions j_0..=j_lmax at a single argument.
pub fn spherical_jn_array(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    let ax = x.abs();
    if ax == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let j0 = sinc(ax);
    if (lmax as f64) < ax {
        out[0] = j0;
        if lmax >= 1 {
            out[1] = if ax < 1e-3 {
                ax / 3.0 * (1.0 - ax * ax / 10.0)
            } else {
                (j0 - ax.cos()) / ax
            };
        }
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / ax * out[l] - out[l - 1];
        }
    } else {
        let top = lmax.max(ax.ceil() as usize);
        let start = top + 20 + (40.0 * top as f64).sqrt() as usize;
        let mut fp1 = 0.0;
        let mut f = 1e-300;
        let f0;
        let mut f1 = 0.0;
        let mut l = start;
        loop {
            if l <= lmax {
                out[l] = f;
            }
            if l == 1 {
                f1 = f;
            }
            if l == 0 {
                f0 = f;
                break;
            }
            let fm1 = (2 * l + 1) as f64 / ax * f - fp1;
            fp1 = f;
            f = fm1;
            l -= 1;
            if f.abs() > 1e250 {
                f *= 1e-250;
                fp1 *= 1e-250;
                f1 *= 1e-250;
                for v in out.iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        // Normalize against whichever of j0, j1 is better conditioned.
        let j1 = if ax < 1e-3 {
            ax / 3.0 * (1.0 - ax * ax / 10.0)
        } else {
            (j0 - ax.cos()) / ax
        };
        let scale = if j0.abs() >= j1.abs() { j0 / f0 } else { j1 / f1 };
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
    if x < 0.0 {
        for (l, v) in out.iter_mut().enumerate() {
            if l % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Spherical Bessel function j_l(x).
pub fn spherical_jn(l: usize, x: f64) -> f64 {
    spherical_jn_array(l, x)[l]
}

/// Spherical Bessel functions of the second kind y_0..=y_lmax, x > 0.
pub fn spherical_yn_array(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if lmax >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for l in 1..lmax {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
    out
}

/// Spherical Bessel j_l with the convention j_{-1}(x) = cos(x)/x used by the
/// three-dimensional mode eigenvalue formula.
pub fn spherical_jn_ext(l: i64, x: f64) -> f64 {
    if l >= 0 {
        spherical_jn(l as usize, x)
    } else if l == -1 {
        x.cos() / x
    } else {
        panic!("spherical_jn_ext supports l >= -1");
    }
}

/// Sine integral Si(x) = int_0^x sin(t)/t dt.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let s = if x < 0.0 { -1.0 } else { 1.0 };
    if ax == 0.0 {
        return 0.0;
    }
    if ax <= 2.0 {
        // Power series sum (-1)^k x^{2k+1} / ((2k+1)(2k+1)!).
        let x2 = ax * ax;
        let mut term = ax;
        let mut sum = ax;
        let mut k = 0usize;
        loop {
            let a = (2 * k + 2) as f64;
            let b = (2 * k + 3) as f64;
            term *= -x2 / (a * b);
            let add = term / b;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
            k += 1;
        }
        return s * sum;
    }
    // Continued fraction for E1(ix) by the modified Lentz method;
    // Si(x) = pi/2 + Im E1(ix).
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, ax);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..100_000usize {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let (sn, cs) = ax.sin_cos();
    h *= Complex64::new(cs, -sn);
    s * (FRAC_PI_2 + h.im)
}

/// Associated Legendre values including the spherical-harmonic normalization,
/// `out[l][m] = sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m(cos theta)` with the
/// Condon-Shortley phase, for 0 <= m <= l <= lmax.
pub fn normalized_legendre(lmax: usize, cos_theta: f64) -> Vec<Vec<f64>> {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let mut p: Vec<Vec<f64>> = (0..=lmax).map(|l| vec![0.0; l + 1]).collect();
    p[0][0] = (0.25 / PI).sqrt();
    for m in 1..=lmax {
        p[m][m] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_theta * p[m - 1][m - 1];
    }
    for m in 0..lmax {
        p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * cos_theta * p[m][m];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lp = lf - 1.0;
            let b = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
            p[l][m] = a * (cos_theta * p[l - 1][m] - p[l - 2][m] / b);
        }
    }
    p
}

/// Complex spherical harmonic Y_l^m(theta, phi), Condon-Shortley convention.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let p = normalized_legendre(l, theta.cos())[l][am];
    let y = Complex64::from_polar(p, am as f64 * phi);
    if m >= 0 {
        y
    } else if am % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}

/// Real spherical harmonics for all (l, m) with l <= lmax, written into
/// `out` in the order l = 0..=lmax, m = -l..=l. The basis satisfies
/// sum_m Y_lm(a) Y_lm(b) = (2l+1)/(4pi) P_l(a.b).
pub fn real_spherical_harmonics(lmax: usize, unit: [f64; 3], out: &mut [f64]) {
    assert!(out.len() >= (lmax + 1) * (lmax + 1));
    let cos_theta = unit[2].clamp(-1.0, 1.0);
    let rho = (unit[0] * unit[0] + unit[1] * unit[1]).sqrt();
    let (cphi, sphi) = if rho > 0.0 {
        (unit[0] / rho, unit[1] / rho)
    } else {
        (1.0, 0.0)
    };
    let p = normalized_legendre(lmax, cos_theta);
    let mut cos_m = vec![1.0; lmax + 1];
    let mut sin_m = vec![0.0; lmax + 1];
    for m in 1..=lmax {
        cos_m[m] = cos_m[m - 1] * cphi - sin_m[m - 1] * sphi;
        sin_m[m] = sin_m[m - 1] * cphi + cos_m[m - 1] * sphi;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for l in 0..=lmax {
        let base = l * l + l;
        out[base] = p[l][0];
        for m in 1..=l {
            out[base + m] = sqrt2 * p[l][m] * cos_m[m];
            out[base - m] = sqrt2 * p[l][m] * sin_m[m];
        }
    }
}

/// Legendre polynomial P_n(x) and its derivative by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
