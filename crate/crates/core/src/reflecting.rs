//! Transient analysis of the chain `R(t)` on `{0, 1, 2, …}` with a
//! reflecting boundary at zero: state 0 jumps up at rate `λ` only, every
//! other state moves like the bilateral chain.
//!
//! Closed forms exist for `q₀₀(t)` and `q₁₀(t)`; moments and the
//! probability of an even state accept any evaluator of `q_{k,0}` so that
//! other initial states can be served by the uniformization oracle.

use num_complex::Complex64;

use crate::bilateral::{is_even, Rates};
use crate::error::{domain, Result};
use crate::quad::{integrate, QuadControl};
use crate::specfun::{bessel_i, hyp1f2, SeriesAccumulator, SeriesControl};

/// `a = λ + μ`, `b = λ − μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumDiffParams {
    pub a: f64,
    pub b: f64,
}

impl From<&Rates> for SumDiffParams {
    fn from(r: &Rates) -> Self {
        Self {
            a: r.sum(),
            b: r.diff(),
        }
    }
}

/// Square roots `A`, `B` and the two roots `ψ₁²`, `ψ₂²` of the biquadratic
/// that solves the Laplace-domain system at transform variable `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceRoots {
    pub s: f64,
    pub a_term: f64,
    pub b_term: f64,
    pub psi1_sq: f64,
    pub psi2_sq: f64,
}

#[derive(Debug, Clone, Copy)]
struct ComplexRoots {
    a_term: Complex64,
    b_term: Complex64,
    psi2_sq: Complex64,
}

fn complex_roots(s: Complex64, p: &SumDiffParams) -> ComplexRoots {
    // A² = s(s + 2a) and B² = (s + a − b)(s + a + b) stay off the negative
    // real axis for Re s > 0, so principal roots are analytic there
    let a_term = (s * (s + 2.0 * p.a)).sqrt();
    let b_term = ((s + p.a - p.b) * (s + p.a + p.b)).sqrt();
    let gap = p.a * p.a - p.b * p.b;
    // (A − B)² / (a² − b²) rewritten through A² − B² = b² − a²
    let sum = a_term + b_term;
    let psi2_sq = gap / (sum * sum);
    ComplexRoots {
        a_term,
        b_term,
        psi2_sq,
    }
}

fn check_transform_variable(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("transform variable must be positive, got {s}"));
    }
    Ok(())
}

pub fn laplace_roots(s: f64, rates: &Rates) -> Result<LaplaceRoots> {
    check_transform_variable(s)?;
    let p = SumDiffParams::from(rates);
    let c = complex_roots(Complex64::new(s, 0.0), &p);
    let psi2_sq = c.psi2_sq.re;
    Ok(LaplaceRoots {
        s,
        a_term: c.a_term.re,
        b_term: c.b_term.re,
        psi1_sq: 1.0 / psi2_sq,
        psi2_sq,
    })
}

/// Laplace transform `π₁,ₙ(s)` of `q₁,ₙ(t)`.
pub fn pi_1n(s: f64, n: u64, rates: &Rates) -> Result<f64> {
    check_transform_variable(s)?;
    Ok(pi_1n_complex(Complex64::new(s, 0.0), n, rates).re)
}

/// [`pi_1n`] continued to complex `s` with `Re s > 0`.
pub fn pi_1n_complex(s: Complex64, n: u64, rates: &Rates) -> Complex64 {
    let (lambda, mu) = (rates.lambda(), rates.mu());
    let p = SumDiffParams::from(rates);
    let r = complex_roots(s, &p);
    if n == 0 {
        // (2λ+s)(2μ+s) − AB = B(B − A) = B(a² − b²)/(A + B)
        let gap = p.a * p.a - p.b * p.b;
        let num = r.b_term * gap / (r.a_term + r.b_term);
        let den = lambda * (s * (2.0 * mu + s) + r.a_term * r.b_term);
        return num / den;
    }
    let psi = r.psi2_sq;
    let denom = mu * (1.0 - psi) - s * psi;
    if n.is_multiple_of(2) {
        let m = (n / 2) as i32;
        (2.0 * mu + s) * (lambda + s) * psi.powi(m + 1) / (lambda * lambda * denom)
    } else {
        let m = n.div_ceil(2) as i32;
        (lambda + s) * psi.powi(m) * (1.0 + psi) / (lambda * denom)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and non-negative, got {t}"));
    }
    Ok(())
}

/// `q₀₀(t) = P{R(t) = 0 | R(0) = 0}`.
pub fn q00(t: f64, rates: &Rates, ctl: &SeriesControl) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let SumDiffParams { a, b } = SumDiffParams::from(rates);
    let ratio = b / a;
    let arg = 0.25 * b * b * t * t;
    let half_at = 0.5 * a * t;
    // log of (t/2)^{2k} a^{2k+1} / (k!² (a+b)) · e^{-at}
    let mut ln_coef = a.ln() - (a + b).ln() - a * t;
    let mut acc = SeriesAccumulator::new(ctl.rel_tol);
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        let f1 = hyp1f2(-0.5, kf + 0.5, kf + 1.0, arg, ctl)?;
        let f2 = hyp1f2(-0.5, kf + 1.0, kf + 1.5, arg, ctl)?;
        let odd_pow = ratio.powi(2 * k as i32 + 1);
        let bracket = (1.0 + odd_pow) * f1 + half_at / (kf + 1.0) * (1.0 - odd_pow * ratio) * f2;
        let term = ln_coef.exp() * bracket;
        let next_ratio = half_at * half_at / ((kf + 1.0) * (kf + 1.0));
        if acc.push(term, next_ratio) {
            return Ok(acc.sum());
        }
        ln_coef += 2.0 * half_at.ln() - 2.0 * (kf + 1.0).ln();
    }
    Err(acc.not_converged())
}

/// `q₁₀(t) = P{R(t) = 0 | R(0) = 1}` from its hypergeometric series.
///
/// The coefficient of the second and fourth sums is `b[(a/2)^{2n+2} −
/// (b/2)^{2n+2}]`; this is what the inverse transform of `π₁,₀` yields
/// and what the uniformization oracle confirms.
pub fn q10_series(t: f64, rates: &Rates, ctl: &SeriesControl) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let lambda = rates.lambda();
    let SumDiffParams { a, b } = SumDiffParams::from(rates);
    let ratio_sq = (b / a).powi(2);
    let arg_a = 0.25 * a * a * t * t;
    let arg_b = 0.25 * b * b * t * t;
    let half_at = 0.5 * a * t;
    let xi = |u: f64, v: f64| -> Result<f64> {
        Ok(hyp1f2(0.5, u, v, arg_a, ctl)? - hyp1f2(0.5, v, u, arg_b, ctl)?)
    };
    let eta = |u: f64, v: f64| -> Result<f64> {
        Ok(a * hyp1f2(0.5, u, v, arg_a, ctl)? + b * hyp1f2(0.5, v, u, arg_b, ctl)?)
    };
    // ln[(a/2)^{2n+2} t^{2n} / (n! (n+1)!)] − at − ln(λ(a+b))
    let mut ln_coef = 2.0 * (0.5 * a).ln() - a * t - (lambda * (a + b)).ln();
    let mut acc = SeriesAccumulator::new(ctl.rel_tol);
    for n in 0..ctl.max_terms {
        let nf = n as f64;
        let shrink = 1.0 - ratio_sq.powi(n as i32 + 1);
        let odd = t / (2.0 * nf + 1.0);
        let even = odd * t / (2.0 * nf + 2.0);
        let bracket = xi(nf + 0.5, nf + 1.0)?
            + b * odd * xi(nf + 1.0, nf + 1.5)?
            + odd * eta(nf + 1.0, nf + 1.5)?
            + b * even * eta(nf + 1.5, nf + 2.0)?;
        let term = (ln_coef + shrink.ln()).exp() * bracket;
        let next_ratio = half_at * half_at / ((nf + 1.0) * (nf + 2.0));
        if acc.push(term, next_ratio) {
            return Ok(acc.sum());
        }
        ln_coef += 2.0 * half_at.ln() - ((nf + 1.0) * (nf + 2.0)).ln();
    }
    Err(acc.not_converged())
}

/// `I₁(z)/z`, with its limit 1/2 at the origin.
fn bessel_i1_over_z(z: f64, ctl: &SeriesControl) -> Result<f64> {
    if z == 0.0 {
        Ok(0.5)
    } else {
        Ok(bessel_i(1, z, ctl)? / z)
    }
}

/// `h(x) = a[I₀(ax) + I₁(ax)] + b[I₀(bx) − I₁(bx)]`, the second factor of
/// the convolution that gives `q₁₀`.
pub fn convolution_kernel(x: f64, rates: &Rates) -> Result<f64> {
    let ctl = SeriesControl::default();
    let SumDiffParams { a, b } = SumDiffParams::from(rates);
    Ok(a * (bessel_i(0, a * x, &ctl)? + bessel_i(1, a * x, &ctl)?)
        + b * (bessel_i(0, b * x, &ctl)? - bessel_i(1, b * x, &ctl)?))
}

/// `q₁₀(t)` from its convolution-integral representation, by adaptive
/// quadrature with absolute tolerance `quad_tol`.
pub fn q10_integral(t: f64, rates: &Rates, quad_tol: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let ctl = SeriesControl::default();
    let SumDiffParams { a, b } = SumDiffParams::from(rates);
    // e^{-ax}·K(x), with K(x) = a² I₁(ax)/(ax) − b² I₁(bx)/(bx)
    //   + (bx/2)[a² ₁F₂(½; 3/2, 2; a²x²/4) − b² ₁F₂(½; 3/2, 2; b²x²/4)]
    let lag = |x: f64| -> Result<f64> {
        let direct =
            a * a * bessel_i1_over_z(a * x, &ctl)? - b * b * bessel_i1_over_z(b * x, &ctl)?;
        let cumulative = 0.5
            * b
            * x
            * (a * a * hyp1f2(0.5, 1.5, 2.0, 0.25 * a * a * x * x, &ctl)?
                - b * b * hyp1f2(0.5, 1.5, 2.0, 0.25 * b * b * x * x, &ctl)?);
        Ok((-a * x).exp() * (direct + cumulative))
    };
    let integrand = |s: f64| -> Result<f64> {
        Ok(lag(t - s)? * (-a * s).exp() * convolution_kernel(s, rates)?)
    };
    let total = integrate(integrand, 0.0, t, &QuadControl::with_tol(quad_tol))?;
    Ok(total / (2.0 * rates.lambda() * (a + b)))
}

/// Closed-form `q_{k,0}(t)` for the two initial states that have one.
pub fn q_k0(k: u64, t: f64, rates: &Rates, ctl: &SeriesControl) -> Result<f64> {
    match k {
        0 => q00(t, rates, ctl),
        1 => q10_series(t, rates, ctl),
        _ => domain(format!(
            "closed-form q_(k,0) exists only for k in {{0, 1}}, got {k}; inject an evaluator instead"
        )),
    }
}

fn initial_even(k: u64) -> f64 {
    if is_even(k as i64) {
        1.0
    } else {
        0.0
    }
}

/// `P_k(t) = P{R(t) even | R(0) = k}` as the solution of
/// `P' = −2(λ+μ)P + λ q_{k,0} + 2μ` with `P_k(0) = 1` for even `k` and 0 for
/// odd `k`.
pub fn p_even<Q>(k: u64, t: f64, rates: &Rates, q_k0: Q, quad: &QuadControl) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
{
    check_time(t)?;
    let (lambda, mu) = (rates.lambda(), rates.mu());
    let a = rates.sum();
    let limit = mu / a;
    let free = limit + (initial_even(k) - limit) * (-2.0 * a * t).exp();
    let forced = integrate(
        |tau| Ok((-2.0 * a * (t - tau)).exp() * q_k0(tau)?),
        0.0,
        t,
        quad,
    )?;
    Ok(free + lambda * forced)
}

/// Mean and variance of `R(t)` given `R(0) = k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedMoments {
    pub mean: f64,
    pub variance: f64,
}

/// `E[R(t) | R(0) = k] = k + λ ∫₀ᵗ q_{k,0}`, for `k ∈ {0, 1}`.
pub fn r_mean(k: u64, t: f64, rates: &Rates, ctl: &SeriesControl) -> Result<f64> {
    check_closed_form_state(k)?;
    r_mean_with(
        k,
        t,
        rates,
        |tau| q_k0(k, tau, rates, ctl),
        &QuadControl::default(),
    )
}

/// `Var[R(t) | R(0) = k]`, for `k ∈ {0, 1}`.
pub fn r_variance(k: u64, t: f64, rates: &Rates, ctl: &SeriesControl) -> Result<f64> {
    check_closed_form_state(k)?;
    r_moments_with(
        k,
        t,
        rates,
        |tau| q_k0(k, tau, rates, ctl),
        &QuadControl::default(),
    )
    .map(|m| m.variance)
}

fn check_closed_form_state(k: u64) -> Result<()> {
    if k > 1 {
        return domain(format!("closed-form moments need k in {{0, 1}}, got {k}"));
    }
    Ok(())
}

/// Mean of `R(t)` for any initial state, given an evaluator of `q_{k,0}`.
pub fn r_mean_with<Q>(k: u64, t: f64, rates: &Rates, q_k0: Q, quad: &QuadControl) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
{
    check_time(t)?;
    let occupancy = integrate(&q_k0, 0.0, t, quad)?;
    Ok(k as f64 + rates.lambda() * occupancy)
}

/// Mean and variance of `R(t)` for any initial state, given an evaluator of
/// `q_{k,0}`.
pub fn r_moments_with<Q>(
    k: u64,
    t: f64,
    rates: &Rates,
    q_k0: Q,
    quad: &QuadControl,
) -> Result<ReflectedMoments>
where
    Q: Fn(f64) -> Result<f64>,
{
    check_time(t)?;
    let (lambda, mu) = (rates.lambda(), rates.mu());
    let a = rates.sum();
    let kf = k as f64;
    if t == 0.0 {
        return Ok(ReflectedMoments {
            mean: kf,
            variance: 0.0,
        });
    }
    let occupancy = integrate(&q_k0, 0.0, t, quad)?;
    // ∫₀ᵗ P_k with the inner convolution integrated in closed form
    let limit = mu / a;
    let relax = -(-2.0 * a * t).exp_m1() / (2.0 * a);
    let weighted = integrate(
        |u| Ok(q_k0(u)? * -(-2.0 * a * (t - u)).exp_m1() / (2.0 * a)),
        0.0,
        t,
        quad,
    )?;
    let even_time = limit * t + (initial_even(k) - limit) * relax + lambda * weighted;
    let variance = 2.0 * (lambda - mu) * even_time
        - lambda * (2.0 * kf + 1.0) * occupancy
        - lambda * lambda * occupancy * occupancy
        + 2.0 * mu * t;
    Ok(ReflectedMoments {
        mean: kf + lambda * occupancy,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn rates(l: f64, m: f64) -> Rates {
        Rates::new(l, m).unwrap()
    }

    #[test]
    fn roots_vieta_and_bounds() {
        for &(l, m) in &[(1.0, 2.0), (2.0, 2.0), (2.0, 1.0)] {
            for &s in &[0.1, 1.0, 10.0] {
                let r = laplace_roots(s, &rates(l, m)).unwrap();
                assert!(r.psi1_sq > 1.0);
                assert!(r.psi2_sq > 0.0 && r.psi2_sq < 1.0);
                assert_abs_diff_eq!(r.psi1_sq * r.psi2_sq, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn roots_solve_biquadratic() {
        let rt = rates(1.0, 2.0);
        for &s in &[0.1, 1.0, 10.0] {
            let r = laplace_roots(s, &rt).unwrap();
            let lm = rt.lambda() * rt.mu();
            let mid = (rt.sum() + s).powi(2) - rt.lambda().powi(2) - rt.mu().powi(2);
            for x2 in [r.psi1_sq, r.psi2_sq] {
                let res = lm * x2 * x2 - mid * x2 + lm;
                assert_abs_diff_eq!(res / (mid * x2), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn roots_with_equal_rates() {
        let r = laplace_roots(0.5, &rates(1.0, 1.0)).unwrap();
        // b = 0: B = a + s
        assert_relative_eq!(r.b_term, 2.5, max_relative = 1e-15);
        assert!(r.psi2_sq > 0.0 && r.psi2_sq < 1.0);
    }

    #[test]
    fn roots_domain() {
        assert!(laplace_roots(0.0, &rates(1.0, 1.0)).is_err());
        assert!(pi_1n(-1.0, 0, &rates(1.0, 1.0)).is_err());
    }

    #[test]
    fn even_transforms_decay_geometrically() {
        let rt = rates(1.0, 2.0);
        for &s in &[0.3, 2.0] {
            let psi = laplace_roots(s, &rt).unwrap().psi2_sq;
            for m in 1..5 {
                let ratio = pi_1n(s, 2 * m + 2, &rt).unwrap() / pi_1n(s, 2 * m, &rt).unwrap();
                assert_relative_eq!(ratio, psi, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn first_line_of_laplace_system() {
        let rt = rates(1.0, 2.0);
        for &s in &[0.1, 1.0, 10.0] {
            let lhs = (rt.lambda() + s) * pi_1n(s, 0, &rt).unwrap();
            let rhs = rt.mu() * pi_1n(s, 1, &rt).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn q00_initial_and_equal_rates() {
        let c = SeriesControl::default();
        assert_eq!(q00(0.0, &rates(1.0, 2.0), &c).unwrap(), 1.0);
        for &t in &[0.5, 2.0, 6.0] {
            let lam: f64 = 1.3;
            let x = 2.0 * lam * t;
            let want = (-x).exp() * (bessel_i(0, x, &c).unwrap() + bessel_i(1, x, &c).unwrap());
            assert_relative_eq!(
                q00(t, &rates(lam, lam), &c).unwrap(),
                want,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn q10_starts_at_zero() {
        let c = SeriesControl::default();
        assert_eq!(q10_series(0.0, &rates(1.0, 2.0), &c).unwrap(), 0.0);
        assert_eq!(q10_integral(0.0, &rates(1.0, 2.0), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn kernel_at_origin() {
        let rt = rates(1.7, 0.4);
        assert_relative_eq!(
            convolution_kernel(0.0, &rt).unwrap(),
            2.0 * 1.7,
            max_relative = 1e-15
        );
    }

    #[test]
    fn q10_series_equals_integral() {
        let c = SeriesControl::default();
        for &(l, m) in &[(1.0, 2.0), (2.0, 1.0), (0.5, 3.0)] {
            for &t in &[0.3, 1.0, 4.0] {
                let s = q10_series(t, &rates(l, m), &c).unwrap();
                let i = q10_integral(t, &rates(l, m), 1e-11).unwrap();
                assert_abs_diff_eq!(s, i, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn p_even_at_time_zero() {
        let rt = rates(1.0, 2.0);
        let quad = QuadControl::default();
        let c = SeriesControl::default();
        assert_abs_diff_eq!(
            p_even(0, 0.0, &rt, |t| q00(t, &rt, &c), &quad).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            p_even(1, 0.0, &rt, |t| q10_series(t, &rt, &c), &quad).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn moments_at_time_zero() {
        let rt = rates(2.0, 1.0);
        let c = SeriesControl::default();
        for k in 0..=1 {
            assert_eq!(r_mean(k, 0.0, &rt, &c).unwrap(), k as f64);
            assert_eq!(r_variance(k, 0.0, &rt, &c).unwrap(), 0.0);
        }
        assert!(r_mean(2, 1.0, &rt, &c).is_err());
        assert!(q_k0(3, 1.0, &rt, &c).is_err());
    }

    #[test]
    fn mean_is_nondecreasing() {
        let rt = rates(1.0, 2.0);
        let c = SeriesControl::default();
        let mut last = 0.0;
        for i in 0..=10 {
            let m = r_mean(0, 0.5 * i as f64, &rt, &c).unwrap();
            assert!(m >= last - 1e-12);
            last = m;
        }
    }
}
