//! Quadrature rules: adaptive Gauss–Kronrod for finite intervals and
//! composite Simpson weights for uniformly spaced samples.

use crate::error::{Error, Result};

// Kronrod 15-point abscissae; odd indices are the embedded 7-point Gauss nodes.
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration: value and estimated absolute error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive bisection with a 7/15 Gauss–Kronrod pair on `[a, b]`.
///
/// Converges when the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    const MAX_INTERVALS: usize = 4096;
    let first = kronrod15(&f, a, b);
    let mut pieces = vec![(a, b, first)];
    loop {
        let value: f64 = pieces.iter().map(|p| p.2.value).sum();
        let error: f64 = pieces.iter().map(|p| p.2.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numerical {
                context: "adaptive quadrature".into(),
                estimate: error,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        pieces.push((lo, mid, kronrod15(&f, lo, mid)));
        pieces.push((mid, hi, kronrod15(&f, mid, hi)));
    }
}

/// Composite Simpson weights for `n >= 4` uniformly spaced samples with
/// spacing `h`. An even sample count closes with the 3/8 rule on the last
/// three intervals.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 4, "simpson_weights needs at least 4 samples");
    let mut w = vec![0.0; n];
    let simpson_points = if n % 2 == 1 { n } else { n - 3 };
    for i in 0..simpson_points - 1 {
        if i % 2 == 0 {
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
        }
    }
    if n.is_multiple_of(2) {
        let s = n - 4;
        let c = 3.0 * h / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_polynomial_exact() {
        let e = integrate(|x| x.powi(6) - 2.0 * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((e.value - (128.0 / 7.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_gaussian() {
        let e = integrate(|r| (-r * r).exp() * r * r, 0.0, 12.0, 1e-12, 0.0).unwrap();
        let exact = std::f64::consts::PI.sqrt() / 4.0;
        assert!((e.value - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_weights_sum_to_length() {
        for n in [16, 17, 2000, 2001] {
            let h = 0.1;
            let w = simpson_weights(n, h);
            let total: f64 = w.iter().sum();
            assert!((total - h * (n - 1) as f64).abs() < 1e-12 * total, "n={n}");
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [16, 17] {
            let h = 1.0 / (n - 1) as f64;
            let w = simpson_weights(n, h);
            let s: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(3)).sum();
            assert!((s - 0.25).abs() < 1e-14, "n={n}");
        }
    }
}
