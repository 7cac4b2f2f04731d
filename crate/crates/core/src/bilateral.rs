//! Closed-form transient analysis of the unrestricted chain `N(t)` on ℤ.
//!
//! From an even state the chain leaves at rate `2λ` and from an odd state at
//! rate `2μ`, jumping one step up or down with equal probability.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::specfun::{log_binomial, SeriesAccumulator, SeriesControl};

/// The pair of alternating rates: `lambda` out of even states, `mu` out of
/// odd states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    lambda: f64,
    mu: f64,
}

impl Rates {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        let valid = |r: f64| r > 0.0 && r.is_finite();
        if !valid(lambda) || !valid(mu) {
            return domain(format!(
                "rates must be positive and finite, got lambda={lambda}, mu={mu}"
            ));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `(μ, λ)`: the rates seen by the chain shifted by one state.
    pub fn swapped(&self) -> Self {
        Self {
            lambda: self.mu,
            mu: self.lambda,
        }
    }

    /// One-direction jump rate out of `state`.
    pub fn out_rate(&self, state: i64) -> f64 {
        if is_even(state) {
            self.lambda
        } else {
            self.mu
        }
    }

    pub fn max(&self) -> f64 {
        self.lambda.max(self.mu)
    }

    /// `λ + μ`.
    pub fn sum(&self) -> f64 {
        self.lambda + self.mu
    }

    /// `λ − μ`.
    pub fn diff(&self) -> f64 {
        self.lambda - self.mu
    }
}

#[inline]
pub(crate) fn is_even(n: i64) -> bool {
    n.rem_euclid(2) == 0
}

/// Address of a single transition probability `p_{from,to}(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionQuery {
    pub from: i64,
    pub to: i64,
    pub t: f64,
}

impl TransitionQuery {
    pub fn new(from: i64, to: i64, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return domain(format!("time must be finite and non-negative, got {t}"));
        }
        Ok(Self { from, to, t })
    }
}

/// Values of the even-state and odd-state generating functions `F_k(z,t)`
/// and `G_k(z,t)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgfPair {
    pub f: f64,
    pub g: f64,
}

impl PgfPair {
    /// `h(z) = sqrt((μz² + λ)(λz² + μ))`.
    pub fn h(z: f64, rates: &Rates) -> f64 {
        let z2 = z * z;
        ((rates.mu * z2 + rates.lambda) * (rates.lambda * z2 + rates.mu)).sqrt()
    }

    pub fn total(&self) -> f64 {
        self.f + self.g
    }
}

/// Generating functions of the even and odd states for initial state `k`.
pub fn pgf(k: i64, z: f64, t: f64, rates: &Rates) -> Result<PgfPair> {
    if !(z > 0.0 && z.is_finite()) {
        return domain(format!("pgf argument z must be positive, got {z}"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and non-negative, got {t}"));
    }
    let (lambda, mu) = (rates.lambda, rates.mu);
    let h = PgfPair::h(z, rates);
    let y = t * h / z;
    let damp = rates.sum() * t;
    // e^{-(λ+μ)t} cosh(y) and e^{-(λ+μ)t} sinh(y) without overflow
    let grow = (y - damp).exp();
    let shrink = (-y - damp).exp();
    let cosh = 0.5 * (grow + shrink);
    let sinh = 0.5 * (grow - shrink);
    let scale = z.powi(k as i32) / h;
    let spread = z * z + 1.0;
    let pair = if is_even(k) {
        PgfPair {
            f: scale * (h * cosh + z * (mu - lambda) * sinh),
            g: scale * lambda * spread * sinh,
        }
    } else {
        PgfPair {
            f: scale * mu * spread * sinh,
            g: scale * (h * cosh + z * (lambda - mu) * sinh),
        }
    };
    Ok(pair)
}

/// Which inner-sum offsets the series uses. `SwappedOffset` deliberately
/// miscopies one offset and exists only so verification can prove it is
/// sensitive to transcription errors.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transcription {
    #[default]
    Faithful,
    SwappedOffset,
}

/// Transition probability `p_{from,to}(t)` from the double series of the
/// four parity cases.
pub fn transition_prob(q: &TransitionQuery, rates: &Rates, ctl: &SeriesControl) -> Result<f64> {
    transition_prob_variant(q, rates, ctl, Transcription::Faithful)
}

#[doc(hidden)]
pub fn transition_prob_variant(
    q: &TransitionQuery,
    rates: &Rates,
    ctl: &SeriesControl,
    variant: Transcription,
) -> Result<f64> {
    let q = TransitionQuery::new(q.from, q.to, q.t)?;
    if q.t == 0.0 {
        return Ok(if q.from == q.to { 1.0 } else { 0.0 });
    }
    let (lambda, mu) = (rates.lambda, rates.mu);
    let t = q.t;
    let damp = rates.sum() * t;
    let l = q.from.div_euclid(2);
    let r = q.to.div_euclid(2);
    let dist = |shift: i64| (r - l + shift).unsigned_abs();
    let mut buf = Vec::new();
    let mut block = |offset: u64, base: f64, even_w: f64, odd_w: f64, ratio: f64| {
        outer_series(offset, base * t, even_w, odd_w, ratio, damp, ctl, &mut buf)
    };
    match (is_even(q.from), is_even(q.to)) {
        (true, true) => block(dist(0), lambda, 1.0, (mu - lambda) / lambda, mu / lambda),
        (true, false) => {
            let second = match variant {
                Transcription::Faithful => dist(1),
                Transcription::SwappedOffset => dist(-1),
            };
            Ok(block(dist(0), lambda, 0.0, 1.0, mu / lambda)?
                + block(second, lambda, 0.0, 1.0, mu / lambda)?)
        }
        (false, true) => Ok(block(dist(-1), mu, 0.0, 1.0, lambda / mu)?
            + block(dist(0), mu, 0.0, 1.0, lambda / mu)?),
        (false, false) => block(dist(0), mu, 1.0, (lambda - mu) / mu, lambda / mu),
    }
}

/// `e^{-damp} Σ_{n≥d} [w_e x^{2n}/(2n)! + w_o x^{2n+1}/(2n+1)!] S_n(d, ρ)`
/// with `S_n(d, ρ) = Σ_k C(n,k) C(n,k+d) ρ^{2k+d}`.
#[allow(clippy::too_many_arguments)]
fn outer_series(
    d: u64,
    x: f64,
    even_w: f64,
    odd_w: f64,
    rho: f64,
    damp: f64,
    ctl: &SeriesControl,
    buf: &mut Vec<f64>,
) -> Result<f64> {
    let ln_x = x.ln();
    let ln_rho = rho.ln();
    // (x·(1+ρ))² / ((2n+1)(2n+2)) bounds the growth of consecutive outer terms
    let envelope = (x * (1.0 + rho)).powi(2);
    let df = d as f64;
    let mut ln_even = 2.0 * df * ln_x - ln_gamma(2.0 * df + 1.0) - damp;
    let mut acc = SeriesAccumulator::new(ctl.rel_tol);
    for n in d..d.saturating_add(ctl.max_terms as u64) {
        let nf = n as f64;
        let ln_inner = ln_inner_sum(n, d, ln_rho, buf);
        let weight = even_w + odd_w * x / (2.0 * nf + 1.0);
        let term = weight * (ln_even + ln_inner).exp();
        let next_ratio = envelope / ((2.0 * nf + 2.0) * (2.0 * nf + 3.0));
        if acc.push(term, next_ratio) && n >= d + 5 {
            return Ok(acc.sum());
        }
        ln_even += 2.0 * ln_x - ((2.0 * nf + 1.0) * (2.0 * nf + 2.0)).ln();
    }
    Err(acc.not_converged())
}

/// `ln Σ_{k=0}^{n-d} C(n,k) C(n,k+d) ρ^{2k+d}` by log-sum-exp over a
/// term-ratio recurrence.
fn ln_inner_sum(n: u64, d: u64, ln_rho: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    let mut ln_term = log_binomial(n, d as i64) + d as f64 * ln_rho;
    for k in 0..=(n - d) {
        buf.push(ln_term);
        let (kf, nf, df) = (k as f64, n as f64, d as f64);
        ln_term +=
            ((nf - kf) * (nf - kf - df) / ((kf + 1.0) * (kf + df + 1.0))).ln() + 2.0 * ln_rho;
    }
    let peak = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    peak + buf.iter().map(|v| (v - peak).exp()).sum::<f64>().ln()
}

/// `E[N(t) | N(0) = k]`, which does not move.
pub fn mean(k: i64, _t: f64, _rates: &Rates) -> f64 {
    k as f64
}

/// `Var[N(t) | N(0) = k]`; depends on `k` only through its parity.
///
/// The transient term carries the exit rate of the initial state:
/// `λ(λ−μ)/(λ+μ)²` from even `k`, `μ(μ−λ)/(λ+μ)²` from odd `k`.
pub fn variance(k: i64, t: f64, rates: &Rates) -> f64 {
    let (lambda, mu) = (rates.lambda, rates.mu);
    let a = rates.sum();
    let (own, other) = if is_even(k) {
        (lambda, mu)
    } else {
        (mu, lambda)
    };
    4.0 * lambda * mu / a * t + own * (own - other) / (a * a) * -(-2.0 * a * t).exp_m1()
}
