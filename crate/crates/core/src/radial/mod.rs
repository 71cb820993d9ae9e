//! Radial Schrödinger equation: Riccati–Bessel kernel, Numerov propagation,
//! and phase shifts by matching and by the variable-phase equation.

mod numerov;
mod riccati;
mod variable_phase;

use std::f64::consts::FRAC_PI_2;

pub use numerov::{integrate_regular, RadialSolution, ORIGIN_OFFSET, STEP_LIMIT};
pub(crate) use numerov::{endpoint, Endpoint};
pub use riccati::{riccati, riccati_j_all, riccati_y_all, RiccatiPair};
pub use variable_phase::{
    phase_shift_variable, phase_shifts_for, phase_shifts_variable, OdeTolerance,
};

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;

/// Target `h * q` for matching runs, `q = sqrt(max|V| + lambda)`.
const MATCH_HQ: f64 = 0.004;
const MIN_MATCH_STEPS: usize = 400;

/// Number of Numerov steps used by [`phase_shift_matching`].
pub fn matching_steps(spec: &PotentialSpec, ell: u32, lambda: f64) -> usize {
    let q = (spec.max_abs() + lambda.abs()).sqrt().max(1.0 / spec.r_cut());
    let base = (spec.r_cut() * q / MATCH_HQ).ceil() as usize;
    // Leave room for the centrifugal seed offset.
    base.max(MIN_MATCH_STEPS) + 4 * ell as usize
}

/// Principal phase shift in `(-pi/2, pi/2]` by matching the Numerov
/// solution at `r_cut` to `cos(delta) j_hat - sin(delta) y_hat`.
pub fn phase_shift_matching(spec: &PotentialSpec, ell: u32, lambda: f64) -> Result<f64> {
    phase_shift_matching_with_steps(spec, ell, lambda, matching_steps(spec, ell, lambda))
}

pub fn phase_shift_matching_with_steps(
    spec: &PotentialSpec,
    ell: u32,
    lambda: f64,
    steps: usize,
) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Range(format!("lambda must be finite and > 0, got {lambda}")));
    }
    let a = spec.r_cut();
    let k = lambda.sqrt();
    let end = numerov::endpoint(spec, ell, lambda, a, steps)?;
    let p = riccati(ell, k * a)?;
    principal_from_matching(&p, k, end.u, end.du, ell, lambda)
}

pub(crate) fn principal_from_matching(p: &RiccatiPair, k: f64, u: f64, du: f64, ell: u32, lambda: f64) -> Result<f64> {
    let t1 = k * p.j_hat_prime * u;
    let t2 = p.j_hat * du;
    let t3 = k * p.y_hat_prime * u;
    let t4 = p.y_hat * du;
    let num = t1 - t2;
    let den = t3 - t4;
    let scale = t1.abs() + t2.abs() + t3.abs() + t4.abs();
    if !(scale.is_finite()) || (num.abs() <= 1e-13 * scale && den.abs() <= 1e-13 * scale) {
        return Err(Error::MatchingSingular { ell, lambda });
    }
    if den == 0.0 {
        return Ok(FRAC_PI_2);
    }
    let d = (num / den).atan();
    Ok(if d <= -FRAC_PI_2 { FRAC_PI_2 } else { d })
}

/// Wraps an angle onto `(-pi/2, pi/2]`, i.e. reduces modulo pi.
pub fn reduce_mod_pi(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut r = x - pi * (x / pi).round();
    if r <= -FRAC_PI_2 {
        r += pi;
    } else if r > FRAC_PI_2 {
        r -= pi;
    }
    r
}

/// Distance between two angles modulo pi.
pub fn distance_mod_pi(a: f64, b: f64) -> f64 {
    reduce_mod_pi(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Closed-form square-well phase: interior `j_hat(q r)` matched at `a`.
    pub(crate) fn square_well_phase(v0: f64, a: f64, ell: u32, lambda: f64) -> f64 {
        let k = lambda.sqrt();
        let q = (lambda + v0).sqrt();
        let inner = riccati(ell, q * a).unwrap();
        let p = riccati(ell, k * a).unwrap();
        principal_from_matching(&p, k, inner.j_hat, q * inner.j_hat_prime, ell, lambda).unwrap()
    }

    #[test]
    fn free_phases_vanish() {
        let free = PotentialSpec::free();
        for ell in [0, 1, 5] {
            for lambda in [1e-3, 1.0, 100.0] {
                assert_eq!(phase_shift_variable(&free, ell, lambda).unwrap(), 0.0);
                assert!(phase_shift_matching(&free, ell, lambda).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn square_well_s_wave_cross_check() {
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        let exact = square_well_phase(4.0, 1.0, 0, 1.0);
        let m = phase_shift_matching(&well, 0, 1.0).unwrap();
        let v = phase_shift_variable(&well, 0, 1.0).unwrap();
        assert!((m - exact).abs() < 1e-9, "{m} vs {exact}");
        assert!(distance_mod_pi(v, m) < 1e-6);
    }

    #[test]
    fn high_energy_follows_born_trend() {
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        let lambda: f64 = 400.0;
        let k = lambda.sqrt();
        let d = phase_shift_variable(&well, 0, lambda).unwrap();
        // Born: -(1/k) int V sin^2(kr) dr = (V0/k)(a/2 - sin(2ka)/(4k)).
        let born = 4.0 / k * (0.5 - (2.0 * k).sin() / (4.0 * k));
        assert!(d.abs() < 0.12);
        assert!((d - born).abs() < 0.01, "{d} vs {born}");
        assert!(distance_mod_pi(d, phase_shift_matching(&well, 0, lambda).unwrap()) < 1e-6);
    }

    #[test]
    fn threshold_branch_counts_bound_states() {
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        let d0 = phase_shift_variable(&well, 0, 1e-4).unwrap();
        assert!((d0 - PI).abs() < 0.05, "{d0}");
        let d1 = phase_shift_variable(&well, 1, 1e-4).unwrap();
        assert!(d1.abs() < 1e-4, "{d1}");
    }

    #[test]
    fn numerov_is_fourth_order() {
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        for (ell, lambda) in [(0u32, 1.0), (1, 2.5), (2, 9.0)] {
            let exact = square_well_phase(4.0, 1.0, ell, lambda);
            let e1 = (phase_shift_matching_with_steps(&well, ell, lambda, 100).unwrap() - exact).abs();
            let e2 = (phase_shift_matching_with_steps(&well, ell, lambda, 200).unwrap() - exact).abs();
            let ratio = e1 / e2;
            assert!((12.0..=20.0).contains(&ratio), "l={ell}: ratio {ratio} ({e1:e}, {e2:e})");
        }
    }

    #[test]
    fn reduce_mod_pi_range() {
        for x in [-7.0, -PI, -FRAC_PI_2, 0.0, FRAC_PI_2, 3.0, 10.0] {
            let r = reduce_mod_pi(x);
            assert!(r > -FRAC_PI_2 && r <= FRAC_PI_2 + 1e-15, "{x} -> {r}");
            assert!(distance_mod_pi(r, x) < 1e-12);
        }
    }
}
