//! Cross-checks of every closed form against the oracles and against the
//! symmetry relations of the bilateral chain.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bilateral::{self, transition_prob_variant, Rates, Transcription, TransitionQuery};
use crate::oracle::{self, invert_laplace, poisson_right_cutoff, ChainKind};
use crate::quad::QuadControl;
use crate::reflecting::{self, laplace_roots, pi_1n, pi_1n_complex};
use crate::specfun::{bessel_i, SeriesControl};
use crate::Result;

pub const DEFAULT_GRID: [(f64, f64); 3] = [(1.0, 2.0), (2.0, 2.0), (2.0, 1.0)];

const ORACLE_EPS: f64 = 1e-13;
const TIMES: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
const REFLECT_TIMES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 5.0];
const STATES: std::ops::RangeInclusive<i64> = -3..=3;

/// Outcome of one check: the largest residual seen and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub worst_at: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// Largest residual over a set of evaluation points; NaN counts as infinite.
#[derive(Debug, Clone, Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn absorb(mut self, other: Worst) -> Worst {
        let v = if other.value.is_nan() {
            f64::INFINITY
        } else {
            other.value
        };
        if v > self.value || self.at.is_empty() {
            self.value = v;
            self.at = other.at;
        }
        self
    }

    fn into_check(self, name: &'static str, tolerance: f64) -> CheckResult {
        CheckResult {
            name,
            max_residual: self.value,
            tolerance,
            worst_at: self.at,
        }
    }
}

fn point(value: f64, at: impl FnOnce() -> String) -> Worst {
    Worst { value, at: at() }
}

/// Evaluates `f` at every item in parallel and keeps the largest residual.
fn scan<T, F>(items: Vec<T>, f: F) -> Result<Worst>
where
    T: Send,
    F: Fn(T) -> Result<Worst> + Sync + Send,
{
    let all: Vec<Worst> = items.into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(all.into_iter().fold(Worst::default(), Worst::absorb))
}

/// Settings of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub grid: Vec<(f64, f64)>,
    pub series: SeriesControl,
    pub transcription: Transcription,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID.to_vec(),
            series: SeriesControl::default(),
            transcription: Transcription::Faithful,
        }
    }
}

struct Ctx {
    rates: Vec<Rates>,
    series: SeriesControl,
    transcription: Transcription,
}

impl Ctx {
    fn p(&self, k: i64, n: i64, t: f64, rates: &Rates) -> Result<f64> {
        transition_prob_variant(
            &TransitionQuery::new(k, n, t)?,
            rates,
            &self.series,
            self.transcription,
        )
    }

    fn window(&self, rates: &Rates, t: f64) -> i64 {
        poisson_right_cutoff(2.0 * rates.max() * t, 1e-12) as i64
    }

    fn rates_with_times(&self, times: &[f64]) -> Vec<(Rates, f64)> {
        self.rates
            .iter()
            .flat_map(|r| times.iter().map(move |&t| (*r, t)))
            .collect()
    }
}

fn tag(r: &Rates) -> String {
    format!("lambda={} mu={}", r.lambda(), r.mu())
}

/// Runs every check on the configured rate grid.
pub fn run(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let rates = cfg
        .grid
        .iter()
        .map(|&(l, m)| Rates::new(l, m))
        .collect::<Result<Vec<_>>>()?;
    let ctx = Ctx {
        rates,
        series: cfg.series,
        transcription: cfg.transcription,
    };
    let checks: [fn(&Ctx) -> Result<CheckResult>; 21] = [
        normalization,
        symmetry_even_shift_reflection,
        symmetry_odd_shift_reflection,
        transpose_opposite_parity,
        transpose_same_parity,
        translation_even,
        translation_odd,
        parity_reflection,
        chapman_kolmogorov,
        bessel_reduction,
        series_vs_uniformization,
        pgf_consistency,
        bilateral_moments,
        laplace_system,
        psi_bounds,
        psi_product,
        laplace_total_mass,
        laplace_inversion,
        reflected_vs_uniformization,
        q10_triple_agreement,
        reflected_moments,
    ];
    let mut results = checks.iter().map(|c| c(&ctx)).collect::<Result<Vec<_>>>()?;
    results.push(p_even_ode(&ctx)?);
    results.push(q10_rate_ordering(&ctx)?);
    results.push(decay(&ctx)?);
    Ok(results)
}

fn normalization(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates_with_times(&TIMES)
        .into_iter()
        .flat_map(|(r, t)| STATES.map(move |k| (r, t, k)))
        .collect();
    scan(items, |(r, t, k)| {
        let w = ctx.window(&r, t);
        let mut total = 0.0;
        for n in k - w..=k + w {
            total += ctx.p(k, n, t, &r)?;
        }
        Ok(point((total - 1.0).abs(), || {
            format!("{} k={k} t={t}", tag(&r))
        }))
    })
    .map(|w| w.into_check("normalization", 1e-9))
}

fn pair_grid(ctx: &Ctx, times: &[f64]) -> Vec<(Rates, f64, i64, i64)> {
    ctx.rates_with_times(times)
        .into_iter()
        .flat_map(|(r, t)| STATES.flat_map(move |k| STATES.map(move |n| (r, t, k, n))))
        .collect()
}

const SYM_TIMES: [f64; 3] = [0.5, 1.0, 2.0];

fn symmetry_even_shift_reflection(ctx: &Ctx) -> Result<CheckResult> {
    scan(pair_grid(ctx, &SYM_TIMES), |(r, t, k, n)| {
        let base = ctx.p(k, n, t, &r)?;
        let mut worst = Worst::default();
        for big_n in [-2, 0, 2, 4] {
            let d = (ctx.p(big_n - k, big_n - n, t, &r)? - base).abs();
            worst = worst.absorb(point(d, || {
                format!("{} k={k} n={n} N={big_n} t={t}", tag(&r))
            }));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("symmetry_even_reflection", 1e-12))
}

fn symmetry_odd_shift_reflection(ctx: &Ctx) -> Result<CheckResult> {
    scan(pair_grid(ctx, &SYM_TIMES), |(r, t, k, n)| {
        let base = ctx.p(k, n, t, &r)?;
        let swapped = r.swapped();
        let mut worst = Worst::default();
        for big_n in [-3, -1, 1, 3] {
            let d = (ctx.p(big_n - k, big_n - n, t, &swapped)? - base).abs();
            worst = worst.absorb(point(d, || {
                format!("{} k={k} n={n} N={big_n} t={t}", tag(&r))
            }));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("symmetry_odd_reflection", 1e-12))
}

fn transpose_opposite_parity(ctx: &Ctx) -> Result<CheckResult> {
    let items = pair_grid(ctx, &SYM_TIMES)
        .into_iter()
        .filter(|&(_, _, k, n)| (k - n).rem_euclid(2) == 1)
        .collect();
    scan(items, |(r, t, k, n)| {
        let d = (ctx.p(n, k, t, &r)? - ctx.p(k, n, t, &r.swapped())?).abs();
        Ok(point(d, || format!("{} k={k} n={n} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("transpose_rate_swap_opposite_parity", 1e-12))
}

fn transpose_same_parity(ctx: &Ctx) -> Result<CheckResult> {
    let items = pair_grid(ctx, &SYM_TIMES)
        .into_iter()
        .filter(|&(_, _, k, n)| (k - n).rem_euclid(2) == 0)
        .collect();
    scan(items, |(r, t, k, n)| {
        let d = (ctx.p(n, k, t, &r)? - ctx.p(k, n, t, &r)?).abs();
        Ok(point(d, || format!("{} k={k} n={n} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("transpose_same_parity", 1e-12))
}

fn translation_even(ctx: &Ctx) -> Result<CheckResult> {
    scan(pair_grid(ctx, &SYM_TIMES), |(r, t, k, n)| {
        let base = ctx.p(k, n, t, &r)?;
        let mut worst = Worst::default();
        for big_n in [-4, -2, 2, 6] {
            let d = (ctx.p(big_n + k, big_n + n, t, &r)? - base).abs();
            worst = worst.absorb(point(d, || {
                format!("{} k={k} n={n} N={big_n} t={t}", tag(&r))
            }));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("translation_even", 1e-12))
}

fn translation_odd(ctx: &Ctx) -> Result<CheckResult> {
    scan(pair_grid(ctx, &SYM_TIMES), |(r, t, k, n)| {
        let base = ctx.p(k, n, t, &r)?;
        let swapped = r.swapped();
        let mut worst = Worst::default();
        for big_n in [-3, -1, 1, 5] {
            let d = (ctx.p(big_n + k, big_n + n, t, &swapped)? - base).abs();
            worst = worst.absorb(point(d, || {
                format!("{} k={k} n={n} N={big_n} t={t}", tag(&r))
            }));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("translation_odd", 1e-12))
}

fn parity_reflection(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates_with_times(&SYM_TIMES)
        .into_iter()
        .flat_map(|(r, t)| STATES.flat_map(move |k| (1..=5).map(move |d| (r, t, k, d))))
        .collect();
    scan(items, |(r, t, k, d)| {
        let diff = (ctx.p(k, k + d, t, &r)? - ctx.p(k, k - d, t, &r)?).abs();
        Ok(point(diff, || format!("{} k={k} r={d} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("parity_reflection", 1e-12))
}

fn chapman_kolmogorov(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates
        .iter()
        .flat_map(|r| {
            [(0.3, 0.3), (0.3, 0.7), (0.7, 0.3), (0.7, 0.7)]
                .into_iter()
                .flat_map(move |(t, s)| {
                    (-1..=1).flat_map(move |k| (-2..=2).map(move |n| (*r, t, s, k, n)))
                })
        })
        .collect();
    scan(items, |(r, t, s, k, n)| {
        let direct = ctx.p(k, n, t + s, &r)?;
        let w = ctx.window(&r, t.max(s)) + 2;
        let mut composed = 0.0;
        for m in k - w..=k + w {
            composed += ctx.p(k, m, t, &r)? * ctx.p(m, n, s, &r)?;
        }
        Ok(point((direct - composed).abs(), || {
            format!("{} k={k} n={n} t={t} s={s}", tag(&r))
        }))
    })
    .map(|w| w.into_check("chapman_kolmogorov", 1e-8))
}

fn bessel_reduction(ctx: &Ctx) -> Result<CheckResult> {
    let mut rates: Vec<Rates> = ctx
        .rates
        .iter()
        .filter(|r| r.lambda() == r.mu())
        .copied()
        .collect();
    if rates.is_empty() {
        rates.push(Rates::new(1.0, 1.0)?);
    }
    let items: Vec<_> = rates
        .iter()
        .flat_map(|r| {
            TIMES
                .iter()
                .flat_map(move |&t| (-10i64..=10).map(move |n| (*r, t, n)))
        })
        .collect();
    scan(items, |(r, t, n)| {
        let x = 2.0 * r.lambda() * t;
        let reference = (-x).exp() * bessel_i(n.unsigned_abs() as u32, x, &ctx.series)?;
        let d = (ctx.p(0, n, t, &r)? - reference).abs();
        Ok(point(d, || format!("lambda=mu={} n={n} t={t}", r.lambda())))
    })
    .map(|w| w.into_check("bessel_reduction", 1e-10))
}

fn series_vs_uniformization(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates_with_times(&TIMES)
        .into_iter()
        .flat_map(|(r, t)| (-1..=1).map(move |k| (r, t, k)))
        .collect();
    scan(items, |(r, t, k)| {
        let dist = oracle::transient(ChainKind::Bilateral, &r, k, t, ORACLE_EPS)?;
        let mut worst = Worst::default();
        for (n, q) in dist.iter() {
            let d = (ctx.p(k, n, t, &r)? - q).abs();
            worst = worst.absorb(point(d, || format!("{} k={k} n={n} t={t}", tag(&r))));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("series_vs_uniformization", 1e-9))
}

fn pgf_consistency(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates_with_times(&[0.5, 1.0, 2.0])
        .into_iter()
        .flat_map(|(r, t)| (-1..=1).flat_map(move |k| [0.5, 1.0, 1.5].map(move |z| (r, t, k, z))))
        .collect();
    scan(items, |(r, t, k, z)| {
        let pair = bilateral::pgf(k, z, t, &r)?;
        // 1/z and z both weight the far tail, so widen until z^n p is negligible
        let w = ctx.window(&r, t) + 40;
        let mut total = 0.0;
        for n in k - w..=k + w {
            total += z.powi(n as i32) * ctx.p(k, n, t, &r)?;
        }
        let d = (total - pair.total()).abs() / pair.total().max(1.0);
        Ok(point(d, || format!("{} k={k} z={z} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("pgf_consistency", 1e-9))
}

fn bilateral_moments(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates_with_times(&TIMES)
        .into_iter()
        .flat_map(|(r, t)| (-1..=2).map(move |k| (r, t, k)))
        .collect();
    scan(items, |(r, t, k)| {
        let dist = oracle::transient(ChainKind::Bilateral, &r, k, t, ORACLE_EPS)?;
        let w = ctx.window(&r, t);
        let (mut m1, mut m2) = (0.0, 0.0);
        for n in k - w..=k + w {
            let p = ctx.p(k, n, t, &r)?;
            let d = (n - k) as f64;
            m1 += d * p;
            m2 += d * d * p;
        }
        let var = bilateral::variance(k, t, &r);
        let mean = bilateral::mean(k, t, &r);
        let series_var = m2 - m1 * m1;
        let d = (var - series_var)
            .abs()
            .max((var - dist.variance()).abs())
            .max((mean - dist.mean()).abs())
            .max((mean - k as f64 - m1).abs());
        Ok(point(d, || format!("{} k={k} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("bilateral_moments", 1e-8))
}

const S_GRID: [f64; 3] = [0.1, 1.0, 10.0];

fn rates_with_s(ctx: &Ctx) -> Vec<(Rates, f64)> {
    ctx.rates_with_times(&S_GRID)
}

fn laplace_system(ctx: &Ctx) -> Result<CheckResult> {
    scan(rates_with_s(ctx), |(r, s)| {
        let (l, m) = (r.lambda(), r.mu());
        let pi = (0..=12)
            .map(|n| pi_1n(s, n, &r))
            .collect::<Result<Vec<_>>>()?;
        let mut worst = point(((l + s) * pi[0] - m * pi[1]).abs(), || {
            format!("{} s={s} line=0", tag(&r))
        });
        let first = ((2.0 * m + s) * pi[1] - 1.0 - l * (pi[0] + pi[2])).abs();
        worst = worst.absorb(point(first, || format!("{} s={s} line=1", tag(&r))));
        for n in 2..12 {
            let out = if n % 2 == 0 { 2.0 * l } else { 2.0 * m };
            let inflow = if n % 2 == 0 { m } else { l };
            let res = ((out + s) * pi[n] - inflow * (pi[n - 1] + pi[n + 1])).abs();
            worst = worst.absorb(point(res, || format!("{} s={s} n={n}", tag(&r))));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("laplace_system_residual", 1e-10))
}

fn psi_bounds(ctx: &Ctx) -> Result<CheckResult> {
    scan(rates_with_s(ctx), |(r, s)| {
        let roots = laplace_roots(s, &r)?;
        // distance by which either root sits on the wrong side of 1 (or 0)
        let violation = (1.0 - roots.psi1_sq)
            .max(roots.psi2_sq - 1.0)
            .max(-roots.psi2_sq)
            .max(
                if roots.psi2_sq > 0.0 && roots.psi1_sq > 1.0 && roots.psi2_sq < 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                },
            );
        Ok(point(violation.max(0.0), || format!("{} s={s}", tag(&r))))
    })
    .map(|w| w.into_check("psi_bounds", 0.0))
}

fn psi_product(ctx: &Ctx) -> Result<CheckResult> {
    scan(rates_with_s(ctx), |(r, s)| {
        let roots = laplace_roots(s, &r)?;
        let (l, m) = (r.lambda(), r.mu());
        let x = roots.psi2_sq;
        let a = r.sum();
        let quartic = l * m * x * x - ((a + s).powi(2) - l * l - m * m) * x + l * m;
        let d = (roots.psi1_sq * roots.psi2_sq - 1.0)
            .abs()
            .max(quartic.abs() / (l * m));
        Ok(point(d, || format!("{} s={s}", tag(&r))))
    })
    .map(|w| w.into_check("psi_product", 1e-12))
}

fn laplace_total_mass(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates
        .iter()
        .flat_map(|r| [0.5, 1.0, 2.0].map(|s| (*r, s)))
        .collect();
    scan(items, |(r, s)| {
        let psi = laplace_roots(s, &r)?.psi2_sq;
        let mut total = 0.0;
        let mut n = 0u64;
        loop {
            let v = pi_1n(s, n, &r)?;
            total += v;
            // odd/even pairs shrink geometrically with ratio ψ₂²
            if n > 4 && n.is_multiple_of(2) && v / (1.0 - psi) < 1e-15 * total {
                break;
            }
            n += 1;
        }
        Ok(point((total - 1.0 / s).abs(), || {
            format!("{} s={s}", tag(&r))
        }))
    })
    .map(|w| w.into_check("laplace_total_mass", 1e-8))
}

fn laplace_inversion(ctx: &Ctx) -> Result<CheckResult> {
    let items = ctx.rates_with_times(&[0.5, 1.0, 2.0]);
    scan(items, |(r, t)| {
        let dist = oracle::transient(ChainKind::Reflected, &r, 1, t, ORACLE_EPS)?;
        let mut worst = Worst::default();
        for n in 0..=6u64 {
            let inv = invert_laplace(|s: Complex64| pi_1n_complex(s, n, &r), t, 40);
            let d = (inv - dist.get(n as i64)).abs();
            worst = worst.absorb(point(d, || format!("{} n={n} t={t}", tag(&r))));
        }
        Ok(worst)
    })
    .map(|w| w.into_check("laplace_inversion", 1e-6))
}

fn reflected_vs_uniformization(ctx: &Ctx) -> Result<CheckResult> {
    scan(ctx.rates_with_times(&REFLECT_TIMES), |(r, t)| {
        let q00 = reflecting::q00(t, &r, &ctx.series)?;
        let q10 = reflecting::q10_series(t, &r, &ctx.series)?;
        let o00 = oracle::reflected_probability(&r, 0, 0, t, ORACLE_EPS)?;
        let o10 = oracle::reflected_probability(&r, 1, 0, t, ORACLE_EPS)?;
        Ok(point((q00 - o00).abs().max((q10 - o10).abs()), || {
            format!("{} t={t}", tag(&r))
        }))
    })
    .map(|w| w.into_check("reflected_vs_uniformization", 1e-7))
}

fn q10_triple_agreement(ctx: &Ctx) -> Result<CheckResult> {
    scan(ctx.rates_with_times(&REFLECT_TIMES), |(r, t)| {
        let series = reflecting::q10_series(t, &r, &ctx.series)?;
        let integral = reflecting::q10_integral(t, &r, 1e-12)?;
        let inverted = invert_laplace(|s: Complex64| pi_1n_complex(s, 0, &r), t, 40);
        let d = (series - integral)
            .abs()
            .max((series - inverted).abs())
            .max((integral - inverted).abs());
        Ok(point(d, || format!("{} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("q10_triple_agreement", 1e-6))
}

/// `q_{k,0}` from uniformization, for initial states without a closed form.
fn oracle_q(rates: Rates, k: u64) -> impl Fn(f64) -> Result<f64> {
    move |tau| oracle::reflected_probability(&rates, k, 0, tau, ORACLE_EPS)
}

fn reflected_moments(ctx: &Ctx) -> Result<CheckResult> {
    let items: Vec<_> = ctx
        .rates_with_times(&[0.5, 1.0, 2.0, 5.0])
        .into_iter()
        .flat_map(|(r, t)| (0..=2u64).map(move |k| (r, t, k)))
        .collect();
    scan(items, |(r, t, k)| {
        let dist = oracle::transient(ChainKind::Reflected, &r, k as i64, t, ORACLE_EPS)?;
        let (mean, var) = if k <= 1 {
            (
                reflecting::r_mean(k, t, &r, &ctx.series)?,
                reflecting::r_variance(k, t, &r, &ctx.series)?,
            )
        } else {
            let m =
                reflecting::r_moments_with(k, t, &r, oracle_q(r, k), &QuadControl::with_tol(1e-9))?;
            (m.mean, m.variance)
        };
        let d = (mean - dist.mean())
            .abs()
            .max((var - dist.variance()).abs());
        Ok(point(d, || format!("{} k={k} t={t}", tag(&r))))
    })
    .map(|w| w.into_check("reflected_moments", 1e-6))
}

fn p_even_ode(ctx: &Ctx) -> Result<CheckResult> {
    const H: f64 = 1e-4;
    let items: Vec<_> = ctx
        .rates_with_times(&[0.5, 1.0, 2.0, 4.0])
        .into_iter()
        .flat_map(|(r, t)| (0..=1u64).map(move |k| (r, t, k)))
        .collect();
    let quad = QuadControl::with_tol(1e-13);
    scan(items, |(r, t, k)| {
        let q = |tau: f64| reflecting::q_k0(k, tau, &r, &ctx.series);
        let at = |tau: f64| reflecting::p_even(k, tau, &r, q, &quad);
        let p = at(t)?;
        let deriv = (at(t + H)? - at(t - H)?) / (2.0 * H);
        let residual = deriv + 2.0 * r.sum() * p - r.lambda() * q(t)? - 2.0 * r.mu();
        let out_of_range = (-p).max(p - 1.0).max(0.0);
        Ok(point(residual.abs().max(out_of_range), || {
            format!("{} k={k} t={t}", tag(&r))
        }))
    })
    .map(|w| w.into_check("p_even_ode", 1e-6))
}

/// The `q₁₀` curves for `(1,2)`, `(2,2)`, `(2,1)` must be ordered top to
/// bottom on `(0, 5]`. Residual is the largest inversion.
fn q10_rate_ordering(ctx: &Ctx) -> Result<CheckResult> {
    let top = Rates::new(1.0, 2.0)?;
    let mid = Rates::new(2.0, 2.0)?;
    let bottom = Rates::new(2.0, 1.0)?;
    let times: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    scan(times, |t| {
        let a = reflecting::q10_series(t, &top, &ctx.series)?;
        let b = reflecting::q10_series(t, &mid, &ctx.series)?;
        let c = reflecting::q10_series(t, &bottom, &ctx.series)?;
        Ok(point((b - a).max(c - b).max(0.0), || format!("t={t}")))
    })
    .map(|w| w.into_check("q10_rate_ordering", 0.0))
}

/// `q₀₀` falls below 0.1 by `t = 100` and decreases after its last local
/// maximum. Residual is the largest increase seen on that stretch, or the
/// excess of `q₀₀(100)` over 0.1.
fn decay(ctx: &Ctx) -> Result<CheckResult> {
    let times: Vec<f64> = (0..=200).map(|i| 0.5 * i as f64).collect();
    let items: Vec<_> = ctx.rates.iter().map(|r| (*r, times.clone())).collect();
    scan(items, |(r, times)| {
        let q = times
            .iter()
            .map(|&t| reflecting::q00(t, &r, &ctx.series))
            .collect::<Result<Vec<_>>>()?;
        let last_peak = (1..q.len() - 1)
            .rev()
            .find(|&i| q[i] >= q[i - 1] && q[i] >= q[i + 1])
            .unwrap_or(0);
        let rise = q[last_peak..]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max);
        let excess = (q[q.len() - 1] - 0.1).max(0.0);
        Ok(point(rise.max(excess), || tag(&r)))
    })
    .map(|w| w.into_check("decay_no_steady_state", 0.0))
}
