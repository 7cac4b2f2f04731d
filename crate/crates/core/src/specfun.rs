//! Scalar special functions: modified Bessel functions of the first kind,
//! the generalized hypergeometric function ₁F₂ and log-space binomials.
//!
//! Every series here is summed with a running term-ratio recurrence and the
//! same stopping rule: the sum stops once two consecutive terms are below
//! `rel_tol` times the partial sum and the term ratio has dropped under 1/2,
//! so the remaining tail is bounded by twice the next term.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

/// Truncation policy shared by every infinite-series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return domain(format!(
                "rel_tol must be positive and finite, got {rel_tol}"
            ));
        }
        if max_terms == 0 {
            return domain("max_terms must be at least 1");
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}

/// Value of a truncated series together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub sum: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// Running accumulator implementing the two-consecutive-small-terms rule.
///
/// `ratio` passed to [`SeriesAccumulator::push`] is the magnitude of
/// `term_{m+1} / term_m`, which all callers know in closed form.
#[derive(Debug, Clone)]
pub(crate) struct SeriesAccumulator {
    rel_tol: f64,
    sum: f64,
    terms: usize,
    small_run: u8,
}

impl SeriesAccumulator {
    pub(crate) fn new(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            sum: 0.0,
            terms: 0,
            small_run: 0,
        }
    }

    /// Adds `term`; returns `true` when the series may stop.
    pub(crate) fn push(&mut self, term: f64, next_ratio: f64) -> bool {
        self.sum += term;
        self.terms += 1;
        if term.abs() <= self.rel_tol * self.sum.abs() {
            self.small_run = self.small_run.saturating_add(1);
        } else {
            self.small_run = 0;
        }
        self.small_run >= 2 && (next_ratio < 0.5 || term == 0.0)
    }

    pub(crate) fn sum(&self) -> f64 {
        self.sum
    }

    pub(crate) fn terms(&self) -> usize {
        self.terms
    }

    pub(crate) fn not_converged(&self) -> Error {
        Error::Convergence {
            partial: self.sum,
            terms: self.terms,
        }
    }
}

/// Modified Bessel function of the first kind `I_order(x)`.
///
/// Negative arguments are accepted through `I_n(-x) = (-1)^n I_n(x)`.
pub fn bessel_i(order: u32, x: f64, ctl: &SeriesControl) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("bessel_i argument must be finite, got {x}"));
    }
    let value = bessel_i_abs(order, x.abs(), ctl)?;
    Ok(if x < 0.0 && order % 2 == 1 {
        -value
    } else {
        value
    })
}

fn bessel_i_abs(order: u32, x: f64, ctl: &SeriesControl) -> Result<f64> {
    let half = 0.5 * x;
    let quarter_sq = half * half;
    let nu = f64::from(order);
    // (x/2)^n / n!, in log space so large orders neither overflow nor underflow early
    let mut term = if order == 0 {
        1.0
    } else if x == 0.0 {
        0.0
    } else {
        (nu * half.ln() - ln_gamma(nu + 1.0)).exp()
    };
    let mut acc = SeriesAccumulator::new(ctl.rel_tol);
    for m in 0..ctl.max_terms {
        let mf = m as f64;
        let ratio = quarter_sq / ((mf + 1.0) * (mf + 1.0 + nu));
        if acc.push(term, ratio) {
            return Ok(acc.sum());
        }
        term *= ratio;
    }
    Err(acc.not_converged())
}

fn check_lower_parameter(b: f64) -> Result<()> {
    if !b.is_finite() || (b <= 0.0 && b == b.floor()) {
        return domain(format!(
            "lower parameter of 1F2 must be finite and not a non-positive integer, got {b}"
        ));
    }
    Ok(())
}

/// Generalized hypergeometric function `₁F₂(a; b1, b2; x)`.
pub fn hyp1f2(a: f64, b1: f64, b2: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    hyp1f2_detailed(a, b1, b2, x, ctl).map(|v| v.sum)
}

/// Same as [`hyp1f2`] but also reports the term count and a bound on the
/// truncated tail.
pub fn hyp1f2_detailed(
    a: f64,
    b1: f64,
    b2: f64,
    x: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue> {
    check_lower_parameter(b1)?;
    check_lower_parameter(b2)?;
    if !a.is_finite() || !x.is_finite() {
        return domain(format!("1F2 needs finite a and x, got a={a}, x={x}"));
    }
    let mut term = 1.0;
    let mut acc = SeriesAccumulator::new(ctl.rel_tol);
    for m in 0..ctl.max_terms {
        let mf = m as f64;
        let ratio = (a + mf) * x / ((b1 + mf) * (b2 + mf) * (mf + 1.0));
        if acc.push(term, ratio.abs()) {
            let next = term * ratio;
            return Ok(SeriesValue {
                sum: acc.sum(),
                terms: acc.terms(),
                tail_bound: 2.0 * next.abs(),
            });
        }
        term *= ratio;
        if !term.is_finite() {
            return Err(acc.not_converged());
        }
    }
    Err(acc.not_converged())
}

/// `ln C(n, k)`, or `-inf` when `k` lies outside `0..=n`.
pub fn log_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    if k == 0 || k == n {
        return 0.0;
    }
    let nf = n as f64;
    let kf = k as f64;
    ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn bessel_at_origin() {
        assert_eq!(bessel_i(0, 0.0, &ctl()).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0, &ctl()).unwrap(), 0.0);
        assert_eq!(bessel_i(7, 0.0, &ctl()).unwrap(), 0.0);
    }

    #[test]
    fn bessel_i0_matches_fifty_term_partial_sum() {
        // brute force: sum (x/2)^{2m} / (m!)^2 with factorials recomputed each time
        let x: f64 = 2.0;
        let mut oracle = 0.0;
        for m in 0..50u32 {
            let fact: f64 = (1..=m).map(f64::from).product();
            oracle += (x / 2.0).powi(2 * m as i32) / (fact * fact);
        }
        assert_relative_eq!(
            bessel_i(0, x, &ctl()).unwrap(),
            oracle,
            max_relative = 1e-13
        );
        assert_relative_eq!(oracle, 2.279_585_302_336_067, max_relative = 1e-15);
    }

    #[test]
    fn bessel_negative_argument_parity() {
        let c = ctl();
        assert_relative_eq!(
            bessel_i(0, -1.5, &c).unwrap(),
            bessel_i(0, 1.5, &c).unwrap()
        );
        assert_relative_eq!(
            bessel_i(1, -1.5, &c).unwrap(),
            -bessel_i(1, 1.5, &c).unwrap()
        );
    }

    #[test]
    fn bessel_rejects_non_finite() {
        assert!(matches!(
            bessel_i(0, f64::NAN, &ctl()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            bessel_i(0, f64::INFINITY, &ctl()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bessel_term_cap_reports_partial_sum() {
        let tight = SeriesControl::new(1e-14, 3).unwrap();
        match bessel_i(0, 20.0, &tight) {
            Err(Error::Convergence { partial, terms }) => {
                assert_eq!(terms, 3);
                assert!(partial > 1.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn bessel_recurrence() {
        let c = ctl();
        for &x in &[0.01, 0.5, 1.0, 3.7, 10.0, 25.0, 50.0] {
            for n in 1..=20u32 {
                let lhs = bessel_i(n - 1, x, &c).unwrap() - bessel_i(n + 1, x, &c).unwrap();
                let rhs = 2.0 * f64::from(n) / x * bessel_i(n, x, &c).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn bessel_generating_identity() {
        let c = ctl();
        for &x in &[0.1, 1.0, 4.0, 10.0] {
            // I_n(x) <= (x/2)^n e^{x^2/4} / n!; pick N so that bound is far below 1e-12
            let mut total = bessel_i(0, x, &c).unwrap();
            let mut n = 1;
            loop {
                let term = bessel_i(n, x, &c).unwrap();
                total += 2.0 * term;
                if term < 1e-16 * total && n > 5 {
                    break;
                }
                n += 1;
            }
            assert_relative_eq!(total, x.exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn hyp1f2_at_zero_is_one() {
        for &(a, b1, b2) in &[(-0.5, 0.5, 1.0), (0.5, 1.5, 2.0), (3.0, 0.25, 7.0)] {
            assert_eq!(hyp1f2(a, b1, b2, 0.0, &ctl()).unwrap(), 1.0);
        }
    }

    #[test]
    fn hyp1f2_unit_parameters_is_bessel() {
        // 1F2(1; 1, 1; x) = sum x^m / (m!)^2 = I_0(2 sqrt(x))
        let c = ctl();
        for &x in &[0.0, 0.7, 5.0, 20.0, 100.0] {
            let want = bessel_i(0, 2.0 * f64::sqrt(x), &c).unwrap();
            assert_relative_eq!(
                hyp1f2(1.0, 1.0, 1.0, x, &c).unwrap(),
                want,
                max_relative = 1e-13
            );
        }
    }

    fn hyp0f1_oracle(b: f64, x: f64) -> f64 {
        // direct summation with explicitly rebuilt Pochhammer products
        let mut total = 0.0;
        for m in 0..200 {
            let mut poch = 1.0;
            let mut fact = 1.0;
            for j in 0..m {
                poch *= b + j as f64;
                fact *= (j + 1) as f64;
            }
            let term = x.powi(m) / (poch * fact);
            total += term;
            if m > 10 && term.abs() < 1e-18 * total.abs() {
                break;
            }
        }
        total
    }

    #[test]
    fn hyp1f2_with_cancelling_parameters_is_0f1() {
        for &(c, b2, x) in &[
            (0.5, 1.0, 2.0),
            (2.5, 0.75, 9.0),
            (-0.5, 1.5, 4.0),
            (3.0, 2.0, -6.0),
        ] {
            let got = hyp1f2(c, c, b2, x, &ctl()).unwrap();
            assert_relative_eq!(got, hyp0f1_oracle(b2, x), max_relative = 1e-12);
        }
    }

    #[test]
    fn hyp1f2_rejects_bad_lower_parameters() {
        assert!(matches!(
            hyp1f2(0.5, 0.0, 1.0, 1.0, &ctl()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            hyp1f2(0.5, 1.0, -2.0, 1.0, &ctl()),
            Err(Error::Domain(_))
        ));
        assert!(hyp1f2(0.5, -0.5, 1.0, 1.0, &ctl()).is_ok());
    }

    #[test]
    fn hyp1f2_tail_bound_within_tolerance() {
        let c = ctl();
        for &(a, b1, b2, x) in &[
            (-0.5, 0.5, 1.0, 6.25),
            (0.5, 1.0, 1.5, 100.0),
            (0.5, 3.5, 4.0, 400.0),
            (-0.5, 10.0, 10.5, 2500.0),
        ] {
            let v = hyp1f2_detailed(a, b1, b2, x, &c).unwrap();
            assert!(
                v.tail_bound <= c.rel_tol * v.sum.abs(),
                "{a} {b1} {b2} {x}: {v:?}"
            );
        }
    }

    #[test]
    fn log_binomial_small_and_out_of_range() {
        assert_relative_eq!(log_binomial(5, 2), 10f64.ln(), max_relative = 1e-14);
        assert_eq!(log_binomial(5, 6), f64::NEG_INFINITY);
        assert_eq!(log_binomial(5, -1), f64::NEG_INFINITY);
        assert_eq!(log_binomial(0, 0), 0.0);
    }

    #[test]
    fn log_binomial_matches_exact_integer_arithmetic() {
        use num_bigint::BigUint;
        let n = 200u32;
        let k = 100u32;
        let mut exact = BigUint::from(1u32);
        for i in 0..k {
            exact *= n - i;
        }
        for i in 1..=k {
            exact /= i;
        }
        // ln of a big integer: split into leading digits and decimal exponent
        let digits = exact.to_string();
        let lead: f64 = digits[..17].parse().unwrap();
        let log_exact = lead.ln() + (digits.len() - 17) as f64 * 10f64.ln();
        assert_relative_eq!(log_binomial(200, 100), log_exact, max_relative = 1e-12);
    }

    #[test]
    fn series_control_validation() {
        assert!(SeriesControl::new(0.0, 10).is_err());
        assert!(SeriesControl::new(1e-10, 0).is_err());
        assert!(SeriesControl::new(f64::NAN, 10).is_err());
        assert!(SeriesControl::new(1e-10, 1).is_ok());
    }
}
