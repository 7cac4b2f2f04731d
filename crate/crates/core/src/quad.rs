//! Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadControl {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadControl {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod<F>(f: &mut F, lo: f64, hi: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx)? + f(center + dx)?;
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Segment {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    })
}

/// Integrates `f` over `[lo, hi]` until the summed error estimate is below
/// `ctl.abs_tol`.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, ctl: &QuadControl) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if lo == hi {
        return Ok(0.0);
    }
    let mut segments = vec![kronrod(&mut f, lo, hi)?];
    loop {
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= ctl.abs_tol {
            break;
        }
        if segments.len() >= ctl.max_intervals {
            return Err(Error::Quadrature {
                estimate: segments.iter().map(|s| s.value).sum(),
                error: total_err,
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        segments.push(kronrod(&mut f, seg.lo, mid)?);
        segments.push(kronrod(&mut f, mid, seg.hi)?);
    }
    // sum small to large for a slightly better rounding behavior
    let mut values: Vec<f64> = segments.iter().map(|s| s.value).collect();
    values.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    Ok(values.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(
            |x| Ok(x.powi(5) - 3.0 * x * x),
            0.0,
            2.0,
            &QuadControl::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 64.0 / 6.0 - 8.0, epsilon = 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate(|x| Ok((10.0 * x).sin()), 0.0, 3.0, &QuadControl::default()).unwrap();
        assert_abs_diff_eq!(v, (1.0 - (30.0f64).cos()) / 10.0, epsilon = 1e-10);
    }

    #[test]
    fn empty_range() {
        assert_eq!(
            integrate(|_| Ok(1.0), 2.0, 2.0, &QuadControl::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let ctl = QuadControl {
            abs_tol: 1e-14,
            max_intervals: 3,
        };
        let r = integrate(|x| Ok(x.abs().sqrt()), -1.0, 1.0, &ctl);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |_| Err(Error::Domain("boom".into())),
            0.0,
            1.0,
            &QuadControl::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
