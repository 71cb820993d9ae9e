//! Variable-phase (Calogero) integration of
//! `delta_l'(r) = -(1/k) V(r) [cos delta_l j_hat_l(kr) - sin delta_l y_hat_l(kr)]^2`
//! from `delta_l(0) = 0` out to `r_cut`, for all channels `0..=lmax` at once.
//!
//! The endpoint value is the continuous branch normalized by
//! `delta_l(lambda -> inf) = 0`, so no unwrapping is needed downstream.

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;

use super::numerov::ORIGIN_OFFSET;
use super::riccati::{riccati_j_all, riccati_y_all};

#[derive(Debug, Clone, Copy)]
pub struct OdeTolerance {
    pub rel: f64,
    pub abs: f64,
}

/// Grid tolerance. Near threshold the flow amplifies local errors by up to
/// about 1e4, so endpoints carry a global error of a few 1e-6 there.
impl Default for OdeTolerance {
    fn default() -> Self {
        OdeTolerance { rel: 1e-10, abs: 1e-12 }
    }
}

impl OdeTolerance {
    /// Tolerance for single-point evaluations, global error below 1e-7.
    pub fn point() -> Self {
        OdeTolerance { rel: 1e-13, abs: 1e-15 }
    }
}

const MAX_STEPS: usize = 200_000;
/// Smallest step, in units of the spacing of doubles near `r`.
const MIN_STEP_ULPS: f64 = 16.0;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Rhs<'a> {
    spec: &'a PotentialSpec,
    k: f64,
    ells: &'a [u32],
    j: Vec<f64>,
    y: Vec<f64>,
}

impl Rhs<'_> {
    fn eval(&mut self, r: f64, delta: &[f64], out: &mut [f64]) {
        let v = self.spec.evaluate(r);
        if v == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let x = self.k * r;
        riccati_j_all(x, &mut self.j);
        riccati_y_all(x, &mut self.y);
        let pref = -v / self.k;
        for ((o, &d), &l) in out.iter_mut().zip(delta.iter()).zip(self.ells.iter()) {
            let jl = self.j[l as usize];
            let s = if d == 0.0 {
                jl
            } else {
                let (sd, cd) = d.sin_cos();
                cd * jl - sd * self.y[l as usize]
            };
            *o = if s.is_finite() { pref * s * s } else { 0.0 };
        }
    }
}

/// Unwrapped phase shifts for the given channels at energy `lambda`.
pub fn phase_shifts_for(
    spec: &PotentialSpec,
    ells: &[u32],
    lambda: f64,
    tol: OdeTolerance,
) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Range(format!("lambda must be finite and > 0, got {lambda}")));
    }
    let n = ells.len();
    if n == 0 || spec.max_abs() == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let lmax = *ells.iter().max().unwrap_or(&0) as usize;
    let k = lambda.sqrt();
    let mut rhs = Rhs {
        spec,
        k,
        ells,
        j: vec![0.0; lmax + 1],
        y: vec![0.0; lmax + 1],
    };
    let r_end = spec.r_cut();
    let mut r = ORIGIN_OFFSET * r_end;
    let mut y = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    // Resolve both the potential scale and the local wavelength initially.
    let scale = (spec.max_abs() + lambda).sqrt();
    let mut h = (0.05 / scale).min(0.01 * r_end);
    rhs.eval(r, &y, &mut k1);
    let mut steps = 0usize;
    while r < r_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Resolution {
                context: "variable-phase integration".into(),
                message: format!("exceeded {MAX_STEPS} steps at r={r:e}, lambda={lambda:e}"),
            });
        }
        let last = r + h >= r_end;
        if last {
            h = r_end - r;
        }
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs.eval(r + C2 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs.eval(r + C3 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs.eval(r + C4 * h, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs.eval(r + C5 * h, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let r_next = if last { r_end } else { r + h };
        rhs.eval(r_next, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs.eval(r_next, &y_new, &mut k7);
        let mut err = 0.0f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            if h < MIN_STEP_ULPS * f64::EPSILON * r.max(r_end) {
                return Err(Error::Resolution {
                    context: "variable-phase integration".into(),
                    message: format!("non-finite derivative at r={r:e}, lambda={lambda:e}"),
                });
            }
            continue;
        }
        if err <= 1.0 {
            r = r_next;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                break;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < MIN_STEP_ULPS * f64::EPSILON * r.max(r_end) {
                return Err(Error::Resolution {
                    context: "variable-phase integration".into(),
                    message: format!("step underflow at r={r:e}, lambda={lambda:e}"),
                });
            }
        }
    }
    Ok(y)
}

/// Unwrapped phase shifts for channels `0..=lmax`.
pub fn phase_shifts_variable(
    spec: &PotentialSpec,
    lmax: u32,
    lambda: f64,
    tol: OdeTolerance,
) -> Result<Vec<f64>> {
    let ells: Vec<u32> = (0..=lmax).collect();
    phase_shifts_for(spec, &ells, lambda, tol)
}

/// Unwrapped phase shift of a single channel, on the branch with
/// `delta(lambda -> inf) = 0` (so `delta(0+) = pi N_l`).
pub fn phase_shift_variable(spec: &PotentialSpec, ell: u32, lambda: f64) -> Result<f64> {
    match phase_shifts_for(spec, &[ell], lambda, OdeTolerance::point()) {
        Err(Error::Resolution { .. }) => Ok(phase_shifts_for(spec, &[ell], lambda, OdeTolerance::default())?[0]),
        other => Ok(other?[0]),
    }
}
