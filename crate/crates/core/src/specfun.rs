//! Legendre and Hermite polynomials, Gaussian density and tail, Gaussian
//! Minkowski functionals, Euler-characteristic densities and flag
//! coefficients.
//!
//! Hermite polynomials follow the probabilists' convention
//! (`H_{q+1}(u) = u H_q(u) - q H_{q-1}(u)`), so `E[H_p(Z) H_q(Z)] = q! δ_pq`
//! for a standard normal `Z`. The index `-1` is reserved for the Gaussian
//! tail `1 - Φ(u)`.

use crate::error::{Error, Result};
use crate::real::Real;

/// Legendre polynomial `P_ℓ(x)` or one of its first two derivatives.
///
/// Values come from the three-term recurrence; the derivatives use the
/// companion recurrences `P'_{n+1} = P'_{n-1} + (2n+1) P_n` and
/// `P''_{n+1} = P''_{n-1} + (2n+1) P'_n`, which stay regular at `|x| = 1`.
/// At the endpoints the closed forms `P'_ℓ(1) = ℓ(ℓ+1)/2` and
/// `P''_ℓ(1) = (ℓ-1)ℓ(ℓ+1)(ℓ+2)/8` (with the parity sign at `x = -1`) are used.
pub fn legendre_p<T: Real>(ell: usize, x: T, deriv: u8) -> Result<T> {
    if !(x.abs() <= T::one()) {
        return Err(Error::domain(format!("legendre_p: |x| = {x} exceeds 1")));
    }
    if deriv > 2 {
        return Err(Error::domain(format!(
            "legendre_p: derivative order {deriv} not in 0..=2"
        )));
    }
    if x.abs() == T::one() {
        return Ok(legendre_endpoint(ell, x > T::zero(), deriv));
    }
    let [p, dp, ddp] = legendre_with_derivatives(ell, x);
    Ok(match deriv {
        0 => p,
        1 => dp,
        _ => ddp,
    })
}

/// `[P_ℓ(x), P'_ℓ(x), P''_ℓ(x)]` by simultaneous recurrences.
pub(crate) fn legendre_with_derivatives<T: Real>(ell: usize, x: T) -> [T; 3] {
    // (p, dp, ddp) at n-1 and n
    let (mut p0, mut d0, mut dd0) = (T::one(), T::zero(), T::zero());
    if ell == 0 {
        return [p0, d0, dd0];
    }
    let (mut p1, mut d1, mut dd1) = (x, T::one(), T::zero());
    for n in 1..ell {
        let nf = T::from_usize_lossy(n);
        let two_n1 = T::from_usize_lossy(2 * n + 1);
        let p2 = (two_n1 * x * p1 - nf * p0) / (nf + T::one());
        let d2 = d0 + two_n1 * p1;
        let dd2 = dd0 + two_n1 * d1;
        p0 = p1;
        d0 = d1;
        dd0 = dd1;
        p1 = p2;
        d1 = d2;
        dd1 = dd2;
    }
    [p1, d1, dd1]
}

fn legendre_endpoint<T: Real>(ell: usize, positive: bool, deriv: u8) -> T {
    let l = T::from_usize_lossy(ell);
    let (value, parity) = match deriv {
        0 => (T::one(), ell),
        1 => (l * (l + T::one()) / T::lit(2.0), ell + 1),
        _ => (
            (l - T::one()) * l * (l + T::one()) * (l + T::lit(2.0)) / T::lit(8.0),
            ell,
        ),
    };
    if positive || parity % 2 == 0 {
        value
    } else {
        -value
    }
}

/// Values `P_0(x), …, P_lmax(x)`.
pub fn legendre_table<T: Real>(lmax: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(T::one());
    if lmax == 0 {
        return out;
    }
    out.push(x);
    for n in 1..lmax {
        let nf = T::from_usize_lossy(n);
        let next =
            (T::from_usize_lossy(2 * n + 1) * x * out[n] - nf * out[n - 1]) / (nf + T::one());
        out.push(next);
    }
    out
}

/// Probabilists' Hermite polynomial `H_q(u)`; `q = -1` yields `1 - Φ(u)`.
pub fn hermite<T: Real>(q: i32, u: T) -> Result<T> {
    match q {
        q if q < -1 => Err(Error::domain(format!("hermite: order {q} < -1"))),
        -1 => Ok(gaussian_tail(u).1),
        0 => Ok(T::one()),
        _ => {
            let (mut h0, mut h1) = (T::one(), u);
            for n in 1..q {
                let h2 = u * h1 - T::from_i32(n).unwrap() * h0;
                h0 = h1;
                h1 = h2;
            }
            Ok(h1)
        }
    }
}

/// Standard normal density and upper tail `(φ(u), 1 - Φ(u))`.
///
/// The tail is `erfc(u/√2)/2`, which keeps full relative precision for
/// large positive `u`.
pub fn gaussian_tail<T: Real>(u: T) -> (T, T) {
    let half = T::lit(0.5);
    let pdf = (-half * u * u).exp() / (T::TAU()).sqrt();
    let tail = half * (u / T::SQRT_2()).erfc();
    (pdf, tail)
}

/// Gaussian Minkowski functional `M_j^γ([u, ∞))`.
pub fn gaussian_minkowski<T: Real>(j: i32, u: T) -> Result<T> {
    if j < 0 {
        return Err(Error::domain(format!("gaussian_minkowski: j = {j} < 0")));
    }
    let (pdf, tail) = gaussian_tail(u);
    if j == 0 {
        Ok(tail)
    } else {
        Ok(hermite(j - 1, u)? * pdf)
    }
}

/// Euler-characteristic density `ρ_ℓ(u) = (2π)^{-ℓ/2} M_ℓ^γ([u, ∞))`.
pub fn ec_density<T: Real>(ell: u32, u: T) -> T {
    let m = gaussian_minkowski(ell as i32, u).expect("non-negative index");
    m * T::TAU().powi(-(ell as i32)).sqrt()
}

fn ln_unit_ball_volume<T: Real>(i: u32) -> T {
    let half_i = T::from_u32(i).unwrap() / T::lit(2.0);
    half_i * T::PI().ln() - (half_i + T::one()).ln_gamma()
}

/// Flag coefficient `[i+ℓ; ℓ] = C(i+ℓ, ℓ) ω_{i+ℓ} / (ω_i ω_ℓ)`, with `ω_k` the
/// volume of the unit ball in `R^k`.
pub fn flag_coeff<T: Real>(i: u32, ell: u32) -> T {
    let n = T::from_u32(i + ell).unwrap();
    let fi = T::from_u32(i).unwrap();
    let fl = T::from_u32(ell).unwrap();
    let ln_binom =
        (n + T::one()).ln_gamma() - (fi + T::one()).ln_gamma() - (fl + T::one()).ln_gamma();
    (ln_binom + ln_unit_ball_volume::<T>(i + ell)
        - ln_unit_ball_volume::<T>(i)
        - ln_unit_ball_volume::<T>(ell))
    .exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_p(5, 1.0, 0).unwrap(), 1.0);
        assert_eq!(legendre_p(3, 1.0, 1).unwrap(), 6.0);
        assert_eq!(legendre_p(2, 1.0, 2).unwrap(), 3.0);
    }

    #[test]
    fn legendre_endpoint_matches_finite_differences_of_recurrence() {
        // P''_ℓ(1) from a one-sided second difference of the plain recurrence.
        for ell in [2usize, 3, 7, 12] {
            let p = |x: f64| legendre_table(ell, x)[ell];
            let h = 1e-4;
            let fd = (p(1.0) - 2.0 * p(1.0 - h) + p(1.0 - 2.0 * h)) / (h * h);
            let closed = legendre_p(ell, 1.0, 2).unwrap();
            assert!(close(fd, closed, 1e-2), "ℓ={ell}: {fd} vs {closed}");
        }
    }

    #[test]
    fn legendre_parity_at_minus_one() {
        assert_eq!(legendre_p(3, -1.0, 0).unwrap(), -1.0);
        assert_eq!(legendre_p(3, -1.0, 1).unwrap(), 6.0);
        assert_eq!(legendre_p(2, -1.0, 1).unwrap(), -3.0);
        assert_eq!(legendre_p(4, -1.0, 2).unwrap(), 45.0);
        // interior recurrence approaches the same endpoint values
        let near = legendre_p(4, -1.0 + 1e-9, 2).unwrap();
        assert!(close(near, 45.0, 1e-6));
    }

    #[test]
    fn legendre_rejects_bad_input() {
        assert!(matches!(legendre_p(2, 1.5, 0), Err(Error::Domain(_))));
        assert!(matches!(legendre_p(2, f64::NAN, 0), Err(Error::Domain(_))));
        assert!(matches!(legendre_p(2, 0.5, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn legendre_bounded_on_grid() {
        for k in 0..=1000 {
            let x = -1.0 + 2.0 * k as f64 / 1000.0;
            let row = legendre_table(200, x);
            for (ell, v) in row.iter().enumerate() {
                assert!(v.abs() <= 1.0 + 1e-12, "ℓ={ell} x={x} P={v}");
            }
        }
        assert!(legendre_table(200, 1.0f64)
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn legendre_derivatives_match_central_differences() {
        let h = 1e-5;
        for ell in [1usize, 4, 9, 30, 80] {
            for &x in &[-0.93, -0.41, 0.0, 0.27, 0.88] {
                let p = |x: f64| legendre_p(ell, x, 0).unwrap();
                let d1 = legendre_p(ell, x, 1).unwrap();
                let d2 = legendre_p(ell, x, 2).unwrap();
                let fd1 = (p(x + h) - p(x - h)) / (2.0 * h);
                let fd2 = (legendre_p(ell, x + h, 1).unwrap() - legendre_p(ell, x - h, 1).unwrap())
                    / (2.0 * h);
                let scale1 = d1.abs().max(1.0);
                let scale2 = d2.abs().max(1.0);
                assert!(
                    (fd1 - d1).abs() / scale1 < 1e-6,
                    "ℓ={ell} x={x}: {fd1} vs {d1}"
                );
                assert!(
                    (fd2 - d2).abs() / scale2 < 1e-6,
                    "ℓ={ell} x={x}: {fd2} vs {d2}"
                );
            }
        }
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(2, 0.0).unwrap(), -1.0);
        assert_eq!(hermite(0, 7.3).unwrap(), 1.0);
        assert_eq!(hermite(-1, 0.0).unwrap(), 0.5);
        assert!(matches!(hermite(-2, 0.0_f64), Err(Error::Domain(_))));
        // H_3(u) = u^3 - 3u
        assert!(close(hermite(3, 1.7).unwrap(), 1.7f64.powi(3) - 5.1, 1e-14));
    }

    #[test]
    fn gaussian_tail_examples() {
        let (pdf, tail) = gaussian_tail(0.0);
        assert!(close(pdf, 0.398_942_280_401_432_7, 1e-15));
        assert_eq!(tail, 0.5);
        assert!(gaussian_tail(40.0).1 < 1e-300);
        let (_, a) = gaussian_tail(1.7f64);
        let (_, b) = gaussian_tail(-1.7);
        assert!((a + b - 1.0).abs() < 1e-15);
        // reference value 1 - Φ(1)
        assert!((gaussian_tail(1.0f64).1 - 0.158_655_253_931_457_05).abs() < 1e-14);
        // deep tail keeps relative precision: 1 - Φ(8) = 6.22096057427178e-16
        assert!(close(gaussian_tail(8.0).1, 6.220_960_574_271_78e-16, 1e-12));
    }

    #[test]
    fn minkowski_and_ec_density_examples() {
        assert_eq!(gaussian_minkowski(0, 0.0).unwrap(), 0.5);
        assert!(close(
            gaussian_minkowski(1, 0.0).unwrap(),
            0.398_942_280_401_432_7,
            1e-15
        ));
        assert_eq!(gaussian_minkowski(2, 0.0).unwrap(), 0.0);
        assert!(gaussian_minkowski(-1, 0.0_f64).is_err());

        assert!(close(ec_density(0, 1.0), 0.158_655_253_931_457, 1e-13));
        assert!(close(ec_density(1, 0.0), 1.0 / (2.0 * PI), 1e-15));
        assert_eq!(ec_density(2, 0.0), 0.0);
        // ρ_2(u) = u e^{-u²/2} / (2π)^{3/2}
        let u = 1.3f64;
        let expect = u * (-u * u / 2.0).exp() / (2.0 * PI).powf(1.5);
        assert!(close(ec_density(2, u), expect, 1e-14));
    }

    #[test]
    fn flag_coefficients() {
        assert!(close(flag_coeff::<f64>(1, 1), PI / 2.0, 1e-14));
        assert!(close(flag_coeff::<f64>(2, 0), 1.0, 1e-14));
        assert!(close(flag_coeff::<f64>(0, 2), 1.0, 1e-14));
        assert!(close(flag_coeff::<f64>(0, 0), 1.0, 1e-14));
    }

    #[test]
    fn single_precision_path() {
        let v: f32 = legendre_p(3, 1.0f32, 1).unwrap();
        assert_eq!(v, 6.0);
        let (_, t) = gaussian_tail(0.0f32);
        assert_eq!(t, 0.5);
    }

    /// Probabilists' Gauss-Hermite rule for the weight φ(u), by Newton
    /// iteration on the orthonormal Hermite recurrence.
    fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
        // orthonormal h_k: h_{k+1} = (u h_k - √k h_{k-1}) / √(k+1); returns
        // (h_n(u), h_n'(u), Σ_{k<n} h_k(u)²)
        let eval = |u: f64| -> (f64, f64, f64) {
            let (mut a, mut b) = (0.0f64, 1.0f64);
            let mut norm = 0.0;
            for k in 0..n {
                norm += b * b;
                let c = (u * b - (k as f64).sqrt() * a) / ((k + 1) as f64).sqrt();
                a = b;
                b = c;
            }
            (b, (n as f64).sqrt() * a, norm)
        };
        // bracket the zeros on a fine grid, then polish by Newton
        let grid: Vec<f64> = (0..=24_000).map(|k| -12.0 + k as f64 * 1e-3).collect();
        grid.windows(2)
            .filter(|w| eval(w[0]).0 * eval(w[1]).0 < 0.0)
            .map(|w| {
                let mut u = 0.5 * (w[0] + w[1]);
                for _ in 0..50 {
                    let (h, dh, _) = eval(u);
                    u -= h / dh;
                }
                (u, 1.0 / eval(u).2)
            })
            .collect()
    }

    #[test]
    fn hermite_orthogonality_under_gauss_hermite_quadrature() {
        let rule = gauss_hermite(20);
        assert_eq!(rule.len(), 20);
        let total: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut fact = 1.0;
        for q in 0..=6 {
            if q > 0 {
                fact *= q as f64;
            }
            for p in 0..=6 {
                let integral: f64 = rule
                    .iter()
                    .map(|&(u, w)| w * hermite(p, u).unwrap() * hermite(q, u).unwrap())
                    .sum();
                let expect = if p == q { fact } else { 0.0 };
                assert!((integral - expect).abs() < 1e-8, "p={p} q={q}: {integral}");
            }
        }
    }

    #[test]
    fn meridian_endpoint_derivatives() {
        // g(t) = P_ℓ(cos t): g''(0) = -P'_ℓ(1) and g''''(0) = 3 P''_ℓ(1) + P'_ℓ(1)
        for ell in [2usize, 5, 10] {
            let g = |t: f64| legendre_p(ell, t.cos(), 0).unwrap();
            let h = 2e-3;
            let d2 = (-g(2.0 * h) + 16.0 * g(h) - 30.0 * g(0.0) + 16.0 * g(-h) - g(-2.0 * h))
                / (12.0 * h * h);
            let h4 = 2e-2;
            let d4 = (-g(3.0 * h4) + 12.0 * g(2.0 * h4) - 39.0 * g(h4) + 56.0 * g(0.0)
                - 39.0 * g(-h4)
                + 12.0 * g(-2.0 * h4)
                - g(-3.0 * h4))
                / (6.0 * h4.powi(4));
            let dp = legendre_p(ell, 1.0, 1).unwrap();
            let ddp = legendre_p(ell, 1.0, 2).unwrap();
            assert!(((d2 + dp) / dp).abs() < 1e-4, "ℓ={ell}: {d2} vs {}", -dp);
            let expect = 3.0 * ddp + dp;
            assert!(
                ((d4 - expect) / expect).abs() < 1e-4,
                "ℓ={ell}: {d4} vs {expect}"
            );
        }
    }
}
