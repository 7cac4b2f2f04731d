//! Ground-truth engines that share no code path with the closed forms:
//! uniformization of a truncated generator, Monte Carlo path simulation and
//! Euler-summation inversion of Laplace transforms.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bilateral::Rates;
use crate::error::{Error, Result};

/// Which of the two chains a solver or simulator works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    /// Unrestricted chain on ℤ.
    Bilateral,
    /// Chain on `{0, 1, …}`; state 0 jumps up at rate `λ` only.
    Reflected,
}

/// A chain restricted to the contiguous window `lo..=hi`. Mass that jumps
/// out of the window is lost, so boundary rows of the implied generator sum
/// to a negative number.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedChain {
    kind: ChainKind,
    rates: Rates,
    lo: i64,
    hi: i64,
}

impl TruncatedChain {
    pub fn new(kind: ChainKind, rates: Rates, lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Config(format!("empty window {lo}..={hi}")));
        }
        if kind == ChainKind::Reflected && lo != 0 {
            return Err(Error::Config(format!(
                "reflected chain window must start at 0, got {lo}"
            )));
        }
        Ok(Self {
            kind,
            rates,
            lo,
            hi,
        })
    }

    /// Window wide enough for start `k` and horizon `t`:
    /// `k ± ceil(Λt + 10√(Λt) + 20)` with `Λ = 2·max(λ, μ)`.
    pub fn with_default_window(kind: ChainKind, rates: Rates, k: i64, t: f64) -> Result<Self> {
        let reach = default_reach(&rates, t);
        match kind {
            ChainKind::Bilateral => Self::new(kind, rates, k - reach, k + reach),
            ChainKind::Reflected => Self::new(kind, rates, 0, k.max(0) + reach),
        }
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Jump rates `(down, up)` out of `state`, ignoring the window.
    pub fn jump_rates(&self, state: i64) -> (f64, f64) {
        if self.kind == ChainKind::Reflected && state == 0 {
            return (0.0, self.rates.lambda());
        }
        let r = self.rates.out_rate(state);
        (r, r)
    }

    /// Sum of the generator row of `state` inside the window (0 for interior
    /// states, negative where mass leaks out).
    pub fn row_sum(&self, state: i64) -> f64 {
        let (down, up) = self.jump_rates(state);
        let mut sum = 0.0;
        if state == self.lo {
            sum -= down;
        }
        if state == self.hi {
            sum -= up;
        }
        sum
    }

    fn widened(&self) -> Self {
        let half = (self.hi - self.lo) / 2 + 1;
        let lo = match self.kind {
            ChainKind::Bilateral => self.lo - half,
            ChainKind::Reflected => 0,
        };
        Self {
            lo,
            hi: self.hi + 2 * half,
            ..self.clone()
        }
    }
}

fn default_reach(rates: &Rates, t: f64) -> i64 {
    let lt = 2.0 * rates.max() * t;
    (lt + 10.0 * lt.sqrt() + 20.0).ceil() as i64
}

/// Smallest `N` such that `P{X > N} < tail` for `X ~ Poisson(mean)`.
pub fn poisson_right_cutoff(mean: f64, tail: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let ln_mean = mean.ln();
    let mut ln_w = -mean;
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        let ln_next = ln_w + ln_mean - (nf + 1.0).ln();
        // beyond the mode the tail after n is dominated by a geometric series
        if nf + 2.0 > mean {
            let q = mean / (nf + 2.0);
            let bound = ln_next.exp() / (1.0 - q);
            if bound < tail {
                return n;
            }
        }
        ln_w = ln_next;
        n += 1;
    }
}

/// Transient distribution over a contiguous window of states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub lo: i64,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn get(&self, state: i64) -> f64 {
        if state < self.lo {
            return 0.0;
        }
        self.probs
            .get((state - self.lo) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.lo + i as i64, p))
    }

    pub fn moment(&self, power: i32) -> f64 {
        self.iter().map(|(n, p)| p * (n as f64).powi(power)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.iter().map(|(n, p)| p * (n as f64 - m).powi(2)).sum()
    }
}

/// Transient distribution of `chain` at time `t` from state `k`, with total
/// truncation error at most `eps`.
///
/// Uses uniformization at rate `Λ = 2·max(λ, μ)`; the Poisson series is cut
/// where its tail drops below `eps/2`, and the window is rejected when more
/// than `eps/2` leaks across its edges.
pub fn uniformize(chain: &TruncatedChain, k: i64, t: f64, eps: f64) -> Result<Distribution> {
    if k < chain.lo || k > chain.hi {
        return Err(Error::Config(format!(
            "initial state {k} outside window {}..={}",
            chain.lo, chain.hi
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let len = chain.len();
    let mut current = vec![0.0; len];
    current[(k - chain.lo) as usize] = 1.0;
    if t == 0.0 {
        return Ok(Distribution {
            lo: chain.lo,
            probs: current,
        });
    }

    let uniform_rate = 2.0 * chain.rates.max();
    let mean = uniform_rate * t;
    let cutoff = poisson_right_cutoff(mean, 0.5 * eps);
    let (down, up): (Vec<f64>, Vec<f64>) = (chain.lo..=chain.hi)
        .map(|s| {
            let (d, u) = chain.jump_rates(s);
            (d / uniform_rate, u / uniform_rate)
        })
        .unzip();

    let mut result = vec![0.0; len];
    let mut next = vec![0.0; len];
    let ln_mean = mean.ln();
    let mut ln_w = -mean;
    let mut weight_total = 0.0;
    for step in 0..=cutoff {
        let w = ln_w.exp();
        weight_total += w;
        if w > 0.0 {
            for (r, c) in result.iter_mut().zip(&current) {
                *r += w * c;
            }
        }
        // one step of P = I + Q/Λ applied to a row vector
        for j in 0..len {
            let stay = 1.0 - down[j] - up[j];
            let mut v = current[j] * stay;
            if j > 0 {
                v += current[j - 1] * up[j - 1];
            }
            if j + 1 < len {
                v += current[j + 1] * down[j + 1];
            }
            next[j] = v;
        }
        std::mem::swap(&mut current, &mut next);
        ln_w += ln_mean - ((step + 1) as f64).ln();
    }

    let lost = weight_total - result.iter().sum::<f64>();
    if lost > 0.5 * eps {
        return Err(Error::WindowTooSmall {
            lost,
            budget: 0.5 * eps,
        });
    }
    Ok(Distribution {
        lo: chain.lo,
        probs: result,
    })
}

/// [`uniformize`] on the default window, doubling it until the leaked mass
/// fits the budget.
pub fn transient(kind: ChainKind, rates: &Rates, k: i64, t: f64, eps: f64) -> Result<Distribution> {
    let mut chain = TruncatedChain::with_default_window(kind, *rates, k, t)?;
    let mut last = None;
    for _ in 0..8 {
        match uniformize(&chain, k, t, eps) {
            Err(e @ Error::WindowTooSmall { .. }) => {
                last = Some(e);
                chain = chain.widened();
            }
            other => return other,
        }
    }
    Err(last.expect("loop ran at least once"))
}

/// Replicate count, time horizon and seed of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(paths: usize, horizon: f64, seed: u64) -> Result<Self> {
        if paths == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            paths,
            horizon,
            seed,
        })
    }
}

/// Empirical probability of one state, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    pub state: i64,
    pub p: f64,
    pub std_err: f64,
}

/// Empirical summary of the chain at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub pmf: Vec<StateEstimate>,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

impl Snapshot {
    pub fn p(&self, state: i64) -> Option<&StateEstimate> {
        self.pmf.iter().find(|e| e.state == state)
    }
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// States of one path at each (sorted) sample time.
fn simulate_path(
    kind: ChainKind,
    rates: &Rates,
    k: i64,
    times: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<i64> {
    let mut states = Vec::with_capacity(times.len());
    let mut state = k;
    let mut clock = 0.0;
    for &t in times {
        loop {
            let (total, always_up) = match kind {
                ChainKind::Reflected if state == 0 => (rates.lambda(), true),
                _ => (2.0 * rates.out_rate(state), false),
            };
            let u: f64 = rng.gen();
            let hold = -(1.0 - u).ln() / total;
            if clock + hold > t {
                // memorylessness lets the next sample restart the clock at t
                clock = t;
                break;
            }
            clock += hold;
            state += if always_up || rng.gen::<bool>() {
                1
            } else {
                -1
            };
        }
        states.push(state);
    }
    states
}

/// Simulates `cfg.paths` independent paths from `k` and summarizes them at
/// each sample time. Replicate `i` draws from ChaCha stream `i` of
/// `cfg.seed`, so results do not depend on the thread count.
pub fn simulate(
    kind: ChainKind,
    rates: &Rates,
    k: i64,
    cfg: &SimConfig,
    sample_times: &[f64],
) -> Result<Vec<Snapshot>> {
    if kind == ChainKind::Reflected && k < 0 {
        return Err(Error::Config(format!(
            "reflected chain cannot start at {k}"
        )));
    }
    let horizon = cfg.horizon;
    if let Some(bad) = sample_times.iter().find(|&&t| !(t >= 0.0 && t <= horizon)) {
        return Err(Error::Config(format!(
            "sample time {bad} outside [0, {horizon}]"
        )));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("sample times must be non-decreasing".into()));
    }
    let paths: Vec<Vec<i64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            simulate_path(
                kind,
                rates,
                k,
                sample_times,
                &mut replicate_rng(cfg.seed, i),
            )
        })
        .collect();

    let n = cfg.paths as f64;
    let snapshots = sample_times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
            for path in &paths {
                *counts.entry(path[j]).or_default() += 1;
            }
            let pmf = counts
                .iter()
                .map(|(&state, &c)| {
                    let p = c as f64 / n;
                    StateEstimate {
                        state,
                        p,
                        std_err: (p * (1.0 - p) / n).sqrt(),
                    }
                })
                .collect();
            let mean = paths.iter().map(|p| p[j] as f64).sum::<f64>() / n;
            let (m2, m4) = paths.iter().fold((0.0, 0.0), |(m2, m4), p| {
                let d = p[j] as f64 - mean;
                (m2 + d * d, m4 + d.powi(4))
            });
            let m2 = m2 / n;
            let m4 = m4 / n;
            let variance = if cfg.paths > 1 {
                m2 * n / (n - 1.0)
            } else {
                0.0
            };
            Snapshot {
                t,
                pmf,
                mean,
                mean_se: (variance / n).sqrt(),
                variance,
                variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
            }
        })
        .collect();
    Ok(snapshots)
}

/// Parameters of the Euler-summation Laplace inverter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerConfig {
    /// Contour shift `A`; discretization error is about `e^{-A}`.
    pub shift: f64,
    /// Number of plain partial-sum terms before Euler averaging.
    pub terms: usize,
    /// Binomial averaging depth.
    pub euler_depth: usize,
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self {
            shift: 25.0,
            terms: 40,
            euler_depth: 15,
        }
    }
}

/// Inverse Laplace transform of `transform` at time `t` using `terms`
/// partial sums and the default contour shift and averaging depth.
pub fn invert_laplace<F>(transform: F, t: f64, terms: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    invert_laplace_with(
        transform,
        t,
        &EulerConfig {
            terms,
            ..EulerConfig::default()
        },
    )
}

/// Abate–Whitt Euler algorithm: trapezoidal rule on the Bromwich line
/// `Re s = A/(2t)`, accelerated by binomial averaging of partial sums.
pub fn invert_laplace_with<F>(transform: F, t: f64, cfg: &EulerConfig) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let a = cfg.shift;
    let scale = (0.5 * a).exp() / t;
    let point = |k: usize| Complex64::new(a, 2.0 * std::f64::consts::PI * k as f64) / (2.0 * t);
    let mut partial = 0.5 * transform(point(0)).re;
    let mut sums = Vec::with_capacity(cfg.euler_depth + 1);
    let total = cfg.terms + cfg.euler_depth;
    for k in 1..=total {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        partial += sign * transform(point(k)).re;
        if k >= cfg.terms {
            sums.push(partial);
        }
    }
    let m = cfg.euler_depth;
    let mut binom = 1.0;
    let mut averaged = 0.0;
    for (j, s) in sums.iter().enumerate() {
        averaged += binom * s;
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    scale * averaged / 2f64.powi(m as i32)
}

/// `q_{k,n}(t)` of the reflected chain from the uniformization oracle.
pub fn reflected_probability(rates: &Rates, k: u64, n: u64, t: f64, eps: f64) -> Result<f64> {
    Ok(transient(ChainKind::Reflected, rates, k as i64, t, eps)?.get(n as i64))
}

/// `p_{k,n}(t)` of the bilateral chain from the uniformization oracle.
pub fn bilateral_probability(rates: &Rates, k: i64, n: i64, t: f64, eps: f64) -> Result<f64> {
    Ok(transient(ChainKind::Bilateral, rates, k, t, eps)?.get(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_i, SeriesControl};
    use approx::assert_abs_diff_eq;

    fn rates(l: f64, m: f64) -> Rates {
        Rates::new(l, m).unwrap()
    }

    #[test]
    fn zero_time_is_indicator() {
        let d = transient(ChainKind::Bilateral, &rates(1.0, 2.0), 3, 0.0, 1e-12).unwrap();
        assert_eq!(d.get(3), 1.0);
        assert_eq!(d.total(), 1.0);
    }

    #[test]
    fn output_is_stochastic() {
        for kind in [ChainKind::Bilateral, ChainKind::Reflected] {
            let d = transient(kind, &rates(1.0, 2.0), 1, 3.0, 1e-12).unwrap();
            assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn equal_rates_bessel_vector() {
        let d = transient(ChainKind::Bilateral, &rates(1.0, 1.0), 0, 1.0, 1e-13).unwrap();
        let c = SeriesControl::default();
        for n in -15..=15i64 {
            let want = (-2.0f64).exp() * bessel_i(n.unsigned_abs() as u32, 2.0, &c).unwrap();
            assert_abs_diff_eq!(d.get(n), want, epsilon = 1e-9);
        }
    }

    #[test]
    fn generator_rows() {
        let chain = TruncatedChain::new(ChainKind::Reflected, rates(1.0, 2.0), 0, 10).unwrap();
        assert_eq!(chain.jump_rates(0), (0.0, 1.0));
        assert_eq!(chain.jump_rates(1), (2.0, 2.0));
        assert_eq!(chain.row_sum(0), 0.0);
        assert_eq!(chain.row_sum(5), 0.0);
        assert!(chain.row_sum(10) < 0.0);
        let bil = TruncatedChain::new(ChainKind::Bilateral, rates(1.0, 2.0), -4, 4).unwrap();
        assert!(bil.row_sum(-4) < 0.0);
        assert!(TruncatedChain::new(ChainKind::Reflected, rates(1.0, 2.0), -1, 4).is_err());
    }

    #[test]
    fn narrow_window_is_rejected_and_widening_converges() {
        let r = rates(1.0, 2.0);
        let narrow = TruncatedChain::new(ChainKind::Bilateral, r, -3, 3).unwrap();
        assert!(matches!(
            uniformize(&narrow, 0, 2.0, 1e-10),
            Err(Error::WindowTooSmall { .. })
        ));
        let base = TruncatedChain::with_default_window(ChainKind::Bilateral, r, 0, 2.0).unwrap();
        let a = uniformize(&base, 0, 2.0, 1e-12).unwrap();
        let b = uniformize(&base.widened(), 0, 2.0, 1e-12).unwrap();
        for n in -10..=10 {
            assert_abs_diff_eq!(a.get(n), b.get(n), epsilon = 1e-12);
        }
    }

    #[test]
    fn poisson_cutoff_bounds_tail() {
        for &mean in &[0.5, 4.0, 30.0, 200.0] {
            let n = poisson_right_cutoff(mean, 1e-12);
            // brute force tail sum in log space
            let mut ln_w = -mean;
            let mut tail = 0.0;
            for j in 0..(n + 2000) {
                if j > n {
                    tail += ln_w.exp();
                }
                ln_w += mean.ln() - ((j + 1) as f64).ln();
            }
            assert!(tail < 1e-12, "mean {mean}: tail {tail}");
            assert!(n as f64 > mean);
        }
    }

    #[test]
    fn laplace_of_constant_and_exponential() {
        for &t in &[0.1, 1.0, 5.0, 20.0] {
            let one = invert_laplace(|s| 1.0 / s, t, 40);
            assert_abs_diff_eq!(one, 1.0, epsilon = 1e-9);
            let a = 1.7;
            let e = invert_laplace(|s| 1.0 / (s + a), t, 40);
            assert_abs_diff_eq!(e, (-a * t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn simulation_is_reproducible_and_respects_reflection() {
        let cfg = SimConfig::new(2000, 3.0, 7).unwrap();
        let r = rates(1.0, 2.0);
        let a = simulate(ChainKind::Reflected, &r, 0, &cfg, &[0.5, 1.0, 3.0]).unwrap();
        let b = simulate(ChainKind::Reflected, &r, 0, &cfg, &[0.5, 1.0, 3.0]).unwrap();
        assert_eq!(a, b);
        for snap in &a {
            assert!(snap.pmf.iter().all(|e| e.state >= 0));
            assert_abs_diff_eq!(
                snap.pmf.iter().map(|e| e.p).sum::<f64>(),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn simulation_config_validation() {
        assert!(SimConfig::new(0, 1.0, 1).is_err());
        assert!(SimConfig::new(10, 0.0, 1).is_err());
        let cfg = SimConfig::new(10, 1.0, 1).unwrap();
        assert!(simulate(ChainKind::Bilateral, &rates(1.0, 1.0), 0, &cfg, &[2.0]).is_err());
        assert!(simulate(ChainKind::Bilateral, &rates(1.0, 1.0), 0, &cfg, &[0.5, 0.2]).is_err());
    }
}
