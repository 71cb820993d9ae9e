//! Riccati–Bessel functions `j_hat(x) = x j_l(x)` and `y_hat(x) = x y_l(x)`,
//! with `j_hat_0 = sin x` and `y_hat_0 = -cos x`.
//!
//! `y_hat` is generated by upward recurrence (its dominant direction).
//! `j_hat` uses upward recurrence only where `x > l`; below that it is
//! generated by Miller's downward recurrence and normalized against the
//! closed forms of orders 0 and 1.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiPair {
    pub ell: u32,
    pub x: f64,
    pub j_hat: f64,
    pub y_hat: f64,
    pub j_hat_prime: f64,
    pub y_hat_prime: f64,
}

impl RiccatiPair {
    /// `j_hat * y_hat' - j_hat' * y_hat`, identically 1 for this sign
    /// convention.
    pub fn wronskian(&self) -> f64 {
        self.j_hat * self.y_hat_prime - self.j_hat_prime * self.y_hat
    }
}

const RESCALE_AT: f64 = 1e250;

/// Fills `j[0..=lmax]` with `x j_l(x)`.
pub fn riccati_j_all(x: f64, j: &mut [f64]) {
    let lmax = j.len() - 1;
    let (s, c) = x.sin_cos();
    if x > lmax as f64 {
        j[0] = s;
        if lmax >= 1 {
            j[1] = s / x - c;
        }
        for n in 1..lmax {
            j[n + 1] = (2 * n + 1) as f64 / x * j[n] - j[n - 1];
        }
        return;
    }
    let start = lmax + 20 + (40.0 * (lmax as f64 + 1.0)).sqrt().ceil() as usize;
    let mut upper = 0.0f64;
    let mut current = 1e-300f64;
    for n in (1..=start).rev() {
        let lower = (2 * n + 1) as f64 / x * current - upper;
        upper = current;
        current = lower;
        // `current` now holds order n-1 and `upper` order n.
        if n <= lmax {
            j[n] = upper;
        }
        if current.abs() > RESCALE_AT {
            current /= RESCALE_AT;
            upper /= RESCALE_AT;
            for v in j.iter_mut().skip(n) {
                *v /= RESCALE_AT;
            }
        }
    }
    j[0] = current;
    if lmax >= 1 {
        j[1] = upper;
    }
    // Normalize against whichever closed form is better conditioned.
    let j1_exact = if x < 0.2 {
        // Series avoids cancellation in sin x / x - cos x.
        let x2 = x * x;
        x2 / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        s / x - c
    };
    let scale = if s.abs() >= j1_exact.abs() {
        s / current
    } else {
        j1_exact / upper
    };
    for v in j.iter_mut() {
        *v *= scale;
    }
}

/// Fills `y[0..=lmax]` with `x y_l(x)`. Orders that overflow saturate to
/// infinity with the sign of the last finite value.
pub fn riccati_y_all(x: f64, y: &mut [f64]) {
    let lmax = y.len() - 1;
    let (s, c) = x.sin_cos();
    y[0] = -c;
    if lmax >= 1 {
        y[1] = -c / x - s;
    }
    for n in 1..lmax {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        if !next.is_finite() || next.abs() > 1e300 {
            let sign = if y[n] < 0.0 { -1.0 } else { 1.0 };
            for v in y.iter_mut().skip(n + 1) {
                *v = sign * f64::INFINITY;
            }
            return;
        }
        y[n + 1] = next;
    }
}

/// Values and derivatives of the Riccati–Bessel pair of order `ell` at `x`.
pub fn riccati(ell: u32, x: f64) -> Result<RiccatiPair> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Range(format!("riccati argument must be finite and > 0, got {x}")));
    }
    let l = ell as usize;
    let mut j = vec![0.0; l + 1];
    let mut y = vec![0.0; l + 1];
    riccati_j_all(x, &mut j);
    riccati_y_all(x, &mut y);
    if !y[l].is_finite() {
        return Err(Error::Range(format!(
            "y_hat_{ell}({x:e}) overflows double precision"
        )));
    }
    let (jp, yp) = if l == 0 {
        (x.cos(), x.sin())
    } else {
        let lf = l as f64;
        (j[l - 1] - lf / x * j[l], y[l - 1] - lf / x * y[l])
    };
    if !yp.is_finite() {
        return Err(Error::Range(format!(
            "y_hat_{ell}'({x:e}) overflows double precision"
        )));
    }
    Ok(RiccatiPair {
        ell,
        x,
        j_hat: j[l],
        y_hat: y[l],
        j_hat_prime: jp,
        y_hat_prime: yp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Ascending series `x^(l+1)/(2l+1)!! * sum_k (-x^2/2)^k / (k! prod (2l+2i+1))`.
    fn j_series(ell: u32, x: f64) -> f64 {
        let mut lead = 1.0;
        for i in 0..=ell {
            lead *= x / (2 * i + 1) as f64;
        }
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= -x * x / 2.0 / k as f64 / (2 * ell + 2 * k + 1) as f64;
            sum += term;
        }
        lead * sum
    }

    /// Reference values `(l, x, x j_l(x), x y_l(x))` evaluated at 50 digits
    /// with mpmath's half-integer Bessel functions.
    #[allow(clippy::excessive_precision)]
    const REFERENCE: &[(u32, f64, f64, f64)] = &[
        (0, 0.01, 9.99983333416666489e-3, -9.99950000416665278e-1),
        (0, 0.5, 4.79425538604203e-1, -8.77582561890372716e-1),
        (0, 3.0, 1.41120008059867222e-1, 9.89992496600445457e-1),
        (0, 9.0, 4.1211848524175657e-1, 9.11130261884676988e-1),
        (0, 36.0, -9.91778853443115737e-1, 1.27963689627404681e-1),
        (0, 90.0, 8.93996663600557891e-1, 4.48073616129170152e-1),
        (0, 250.0, -9.70528019541805388e-1, -2.40988305285258643e-1),
        (0, 1234.5, 1.45395650522936421e-1, 9.89373592132422007e-1),
        (0, 10000.0, -3.05614388888252141e-1, 9.52155368259014851e-1),
        (1, 0.01, 3.33330000011904754e-5, -1.00004999875000692e+2),
        (1, 0.5, 8.12685153180332844e-2, -2.23459066238494843),
        (1, 3.0, 1.03703249928706786, 1.8887749080694793e-1),
        (1, 9.0, 9.56921204689316607e-1, -3.1088178947679246e-1),
        (1, 36.0, 1.00414277031762577e-1, 9.95333400377210311e-1),
        (1, 90.0, 4.58006912391398573e-1, -8.89018067865789333e-1),
        (1, 250.0, -2.44870417363425865e-1, 9.69564066320664353e-1),
        (1, 1234.5, 9.89491369087078092e-1, -1.44594213834291284e-1),
        (1, 10000.0, 9.52124806820126026e-1, 3.05709604425078043e-1),
        (2, 0.01, 6.66661904775132297e-8, -3.00005000124997904e+4),
        (2, 0.5, 8.18555330399670631e-3, -1.25299614124193179e+1),
        (2, 3.0, 8.95912491227200643e-1, -8.01115005793497527e-1),
        (2, 9.0, -9.31447503453177007e-2, -1.01475752504360781),
        (2, 36.0, 1.00014670986242928, -4.50192395959704884e-2),
        (2, 90.0, -8.78729766520844605e-1, -4.77707551724696463e-1),
        (2, 250.0, 9.67589574533444278e-1, 2.52623074081106615e-1),
        (2, 1234.5, -1.42991054243259439e-1, -9.89724975398118948e-1),
        (2, 10000.0, 3.05900026330298179e-1, -9.52063655377687328e-1),
        (5, 0.01, 9.61997262003428784e-17, -9.45005250018749964e+12),
        (5, 0.5, 1.48873343772872279e-6, -3.06637815834903181e+4),
        (5, 3.0, 4.91924428679973099e-2, -6.74106998539617027),
        (5, 9.0, 3.1729325883742728e-1, 1.07095138973316107),
        (5, 36.0, -2.86660381542596332e-1, 9.64152670582565354e-1),
        (5, 90.0, 5.90756235373223652e-1, -8.07999836135218243e-1),
        (5, 250.0, -2.98789097550773817e-1, 9.54444946474444628e-1),
        (5, 1234.5, 9.91072048456949085e-1, -1.33364303640928855e-1),
        (5, 10000.0, 9.5169594704099382e-1, 3.07042300645655966e-1),
        (17, 0.01, 4.51175186169803391e-57, -6.33266946570978437e+52),
        (17, 0.5, 1.71529385959098456e-26, -8.33184812225319261e+23),
        (17, 3.0, 1.54718677212871728e-12, -5.62355106905666913e+10),
        (17, 9.0, 2.19249825595171235e-4, -1.36917905000291125e+3),
        (17, 36.0, 9.37121407211394173e-1, -5.15388739822016246e-1),
        (17, 90.0, 8.33821960533065277e-1, 5.69366720692664925e-1),
        (17, 250.0, -7.55910557784343983e-1, 6.56548699490764709e-1),
        (17, 1234.5, 9.99808772435976885e-1, -2.19733457926995993e-2),
        (17, 10000.0, 9.47368931199546218e-1, 3.20146276257147608e-1),
        (40, 0.01, 1.54750439713402118e-143, -7.97779923066762365e+138),
        (40, 0.5, 7.02664902697564251e-74, -8.78556797485808302e+70),
        (40, 3.0, 5.34616633353382588e-42, -6.94687157093540598e+39),
        (40, 9.0, 1.26015847075415355e-22, -9.04351340148069165e+20),
        (40, 36.0, 1.51163571925645142e-1, -6.62250703221445469),
        (40, 90.0, -1.00637093986554278, -3.27018292052122947e-1),
        (40, 250.0, 9.31462532811986887e-1, 3.81786833580882163e-1),
        (40, 1234.5, -4.9560964773257464e-1, 8.68855323044385139e-1),
        (40, 10000.0, -3.82578432265711863e-1, 9.23927455629417093e-1),
        (100, 0.5, 2.94185686239447458e-220, -8.45586000587688978e+216),
        (100, 3.0, 1.12859206230143298e-141, -1.32306689859090287e+139),
        (100, 9.0, 1.46110853558819733e-93, -3.0768945057904411e+91),
        (100, 36.0, 4.47324378649377028e-34, -4.28852607255805196e+32),
        (100, 90.0, 2.414265538302674e-2, -4.19833390034252185e+1),
        (100, 250.0, 3.17889150913158416e-1, -9.95526525128212782e-1),
        (100, 1234.5, 7.22364354227201862e-1, -6.93916398425233824e-1),
        (100, 10000.0, -7.2814706186135591e-1, 6.85457774139015782e-1),
    ];

    #[test]
    fn order_zero_closed_form() {
        let p = riccati(0, PI / 2.0).unwrap();
        assert!((p.j_hat - 1.0).abs() < 1e-15);
        assert!(p.y_hat.abs() < 1e-15);
        for &x in &[1e-3, 0.7, 3.0, 50.0, 1e4] {
            let p = riccati(0, x).unwrap();
            assert_eq!(p.j_hat, x.sin());
            assert_eq!(p.y_hat, -x.cos());
        }
    }

    #[test]
    fn order_one_at_pi() {
        let p = riccati(1, PI).unwrap();
        assert!((p.j_hat - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_series_at_small_argument() {
        for ell in [0u32, 1, 2, 5, 10, 30, 100] {
            for &x in &[1e-4, 1e-2, 0.3, 1.0, 2.5] {
                let exact = j_series(ell, x);
                if exact.abs() < 1e-290 {
                    continue;
                }
                let mut j = vec![0.0; ell as usize + 1];
                riccati_j_all(x, &mut j);
                let got = j[ell as usize];
                let rel = ((got - exact) / exact).abs();
                assert!(rel < 1e-10, "l={ell} x={x} got {got} want {exact}");
            }
        }
    }

    #[test]
    fn matches_reference_table() {
        for &(ell, x, j, y) in REFERENCE {
            let p = riccati(ell, x).unwrap();
            assert!(((p.j_hat - j) / j).abs() < 1e-10, "j l={ell} x={x}: {} vs {j}", p.j_hat);
            assert!(((p.y_hat - y) / y).abs() < 1e-10, "y l={ell} x={x}: {} vs {y}", p.y_hat);
        }
    }

    #[test]
    fn wronskian_is_unity() {
        for ell in [0u32, 1, 2, 7, 20, 60, 100] {
            for &x in &[0.05, 0.5, 3.0, 40.0, 99.0, 500.0, 1e4] {
                match riccati(ell, x) {
                    Ok(p) => {
                        let scale = (p.j_hat * p.y_hat_prime).abs().max(1.0);
                        assert!((p.wronskian() - 1.0).abs() < 1e-12 * scale, "l={ell} x={x}: {}", p.wronskian());
                    }
                    Err(Error::Range(_)) => assert!(x < ell as f64),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn overflow_is_a_range_error() {
        assert!(matches!(riccati(100, 1e-4), Err(Error::Range(_))));
        assert!(matches!(riccati(3, 0.0), Err(Error::Range(_))));
    }
}
