//! Numerov propagation of the regular radial solution of
//! `u'' = [l(l+1)/r^2 + V(r) - E] u`.

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;

/// Fraction of `r_cut` where the grid starts.
pub const ORIGIN_OFFSET: f64 = 1e-6;
/// Step-size bound: `h^2 * max|V - E| < STEP_LIMIT`, and the seed point is
/// pushed out until `h^2 l(l+1) / r^2 <= STEP_LIMIT`.
pub const STEP_LIMIT: f64 = 0.5;

const RESCALE_AT: f64 = 1e200;

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub ell: u32,
    pub energy: f64,
    pub r_grid: Vec<f64>,
    /// Amplitudes on `r_grid`; only ratios are meaningful.
    pub u: Vec<f64>,
    pub node_count: usize,
    pub log_derivative: f64,
    pub r_match: f64,
}

/// Endpoint data of a propagation without the stored grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Endpoint {
    pub u: f64,
    pub du: f64,
    pub nodes: usize,
}

pub(crate) struct Layout {
    pub r0: f64,
    pub r_max: f64,
    pub h: f64,
    pub steps: usize,
    /// First grid index carrying a seed value.
    pub seed: usize,
}

pub(crate) fn layout(spec: &PotentialSpec, ell: u32, energy: f64, r_max: f64, steps: usize) -> Result<Layout> {
    if steps < 4 {
        return Err(Error::Resolution {
            context: "numerov".into(),
            message: format!("need at least 4 steps, got {steps}"),
        });
    }
    let r0 = ORIGIN_OFFSET * spec.r_cut();
    if r_max.partial_cmp(&r0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Resolution {
            context: "numerov".into(),
            message: format!("r_max={r_max} does not exceed the origin offset {r0}"),
        });
    }
    let h = (r_max - r0) / steps as f64;
    let stiffness = spec.max_abs() + energy.abs();
    if h * h * stiffness >= STEP_LIMIT {
        let suggested = ((r_max - r0) * (2.0 * stiffness / STEP_LIMIT).sqrt()).ceil() as usize;
        return Err(Error::Resolution {
            context: "numerov".into(),
            message: format!(
                "step {h:e} violates h^2 max|V-E| < {STEP_LIMIT}; use at least {suggested} steps"
            ),
        });
    }
    let l = ell as f64;
    let centrifugal = l * (l + 1.0);
    let r_seed = h * (centrifugal / STEP_LIMIT).sqrt();
    let seed = if r_seed <= r0 {
        0
    } else {
        ((r_seed - r0) / h).ceil() as usize
    };
    if seed + 2 > steps {
        return Err(Error::Resolution {
            context: "numerov".into(),
            message: format!("centrifugal seed for l={ell} lies beyond r_max; increase steps"),
        });
    }
    Ok(Layout {
        r0,
        r_max,
        h,
        steps,
        seed,
    })
}

/// Core Numerov loop. `visit` sees `(index, r, u, rescales)` for every grid
/// point from the seed on, where `u * RESCALE_AT^rescales` is consistent
/// across the grid; returns the endpoint value, 4th-order derivative and node
/// count on `(0, r_max)`.
pub(crate) fn propagate<F: FnMut(usize, f64, f64, i32)>(
    spec: &PotentialSpec,
    ell: u32,
    energy: f64,
    lay: &Layout,
    mut visit: F,
) -> Endpoint {
    let l = ell as f64;
    let centrifugal = l * (l + 1.0);
    let h = lay.h;
    let h2 = h * h;
    // The last node sits exactly on r_max so an edge there is seen from inside.
    let r_at = |n: usize| if n == lay.steps { lay.r_max } else { lay.r0 + n as f64 * h };
    let v_last = spec.evaluate(r_at(lay.steps));
    let f = |n: usize| {
        let r = r_at(n);
        let v = if n > lay.steps { v_last } else { spec.evaluate(r) };
        centrifugal / (r * r) + v - energy
    };

    // Two-term regular series u = r^(l+1) (1 + c r^2), c = (V(0) - E)/(4l + 6),
    // normalized so the second seed is O(1).
    let c = (spec.evaluate(0.0) - energy) / (4.0 * l + 6.0);
    let ra = r_at(lay.seed);
    let rb = r_at(lay.seed + 1);
    let mut u_prev = (ra / rb).powf(l + 1.0) * (1.0 + c * ra * ra);
    let mut u_curr = 1.0 + c * rb * rb;
    let mut f_prev = f(lay.seed);
    let mut f_curr = f(lay.seed + 1);
    let mut w_prev = (1.0 - h2 * f_prev / 12.0) * u_prev;
    let mut w_curr = (1.0 - h2 * f_curr / 12.0) * u_curr;
    let mut rescales = 0i32;
    visit(lay.seed, ra, u_prev, rescales);
    visit(lay.seed + 1, rb, u_curr, rescales);

    let mut nodes = 0usize;
    let mut last_sign = sign(u_prev);
    if last_sign == 0.0 {
        last_sign = sign(u_curr);
    }
    let track = |u: f64, nodes: &mut usize, last: &mut f64| {
        let s = sign(u);
        if s != 0.0 {
            if *last != 0.0 && s != *last {
                *nodes += 1;
            }
            *last = s;
        }
    };
    track(u_curr, &mut nodes, &mut last_sign);

    for n in (lay.seed + 1)..=lay.steps {
        let f_next = f(n + 1);
        let w_next = 2.0 * w_curr - w_prev + h2 * f_curr * u_curr;
        let u_next = w_next / (1.0 - h2 * f_next / 12.0);
        if n < lay.steps {
            visit(n + 1, r_at(n + 1), u_next, rescales);
            track(u_next, &mut nodes, &mut last_sign);
        } else {
            // One step past r_max with the potential frozen at its last
            // value, used only for the derivative at r_max.
            let du = ((1.0 - h2 * f_next / 6.0) * u_next - (1.0 - h2 * f_prev / 6.0) * u_prev) / (2.0 * h);
            return Endpoint {
                u: u_curr,
                du,
                nodes,
            };
        }
        u_prev = u_curr;
        u_curr = u_next;
        f_prev = f_curr;
        f_curr = f_next;
        w_prev = w_curr;
        w_curr = w_next;
        if u_curr.abs() > RESCALE_AT {
            u_prev /= RESCALE_AT;
            u_curr /= RESCALE_AT;
            w_prev /= RESCALE_AT;
            w_curr /= RESCALE_AT;
            rescales += 1;
        }
    }
    unreachable!("loop returns at the extra step")
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn endpoint(spec: &PotentialSpec, ell: u32, energy: f64, r_max: f64, steps: usize) -> Result<Endpoint> {
    let lay = layout(spec, ell, energy, r_max, steps)?;
    Ok(propagate(spec, ell, energy, &lay, |_, _, _, _| {}))
}

/// Regular solution on a uniform grid from `1e-6 r_cut` to `r_max`.
///
/// Points before the centrifugal seed carry the leading `r^(l+1)` law.
pub fn integrate_regular(
    spec: &PotentialSpec,
    ell: u32,
    energy: f64,
    r_max: f64,
    steps: usize,
) -> Result<RadialSolution> {
    let lay = layout(spec, ell, energy, r_max, steps)?;
    let mut r_grid = vec![0.0; steps + 1];
    let mut u = vec![0.0; steps + 1];
    let mut counts = vec![0i32; steps + 1];
    let end = propagate(spec, ell, energy, &lay, |i, r, val, k| {
        r_grid[i] = r;
        u[i] = val;
        counts[i] = k;
    });
    let final_count = counts[steps];
    for (v, &k) in u.iter_mut().zip(counts.iter()).skip(lay.seed) {
        if k != final_count {
            *v /= RESCALE_AT.powi(final_count - k);
        }
    }
    let l = ell as f64;
    let rs = r_grid[lay.seed];
    for i in 0..lay.seed {
        let r = lay.r0 + i as f64 * lay.h;
        r_grid[i] = r;
        u[i] = u[lay.seed] * (r / rs).powf(l + 1.0);
    }
    Ok(RadialSolution {
        ell,
        energy,
        r_grid,
        u,
        node_count: end.nodes,
        log_derivative: end.du / end.u,
        r_match: r_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::riccati::riccati;
    use std::f64::consts::PI;

    #[test]
    fn free_s_wave_is_sine() {
        let free = PotentialSpec::free();
        let sol = integrate_regular(&free, 0, 1.0, PI / 2.0, 4000).unwrap();
        assert!(sol.log_derivative.abs() < 1e-9, "{}", sol.log_derivative);
        let last = *sol.u.last().unwrap();
        for (r, u) in sol.r_grid.iter().zip(sol.u.iter()).step_by(97) {
            assert!((u / last - r.sin()).abs() < 1e-8, "r={r}");
        }
        assert_eq!(sol.node_count, 0);
    }

    #[test]
    fn free_p_wave_log_derivative_matches_riccati() {
        let free = PotentialSpec::free();
        for &r in &[0.8, 2.0, 3.7] {
            let sol = integrate_regular(&free, 1, 1.0, r, 6000).unwrap();
            let p = riccati(1, r).unwrap();
            let want = p.j_hat_prime / p.j_hat;
            assert!((sol.log_derivative - want).abs() < 1e-8, "r={r}: {} vs {want}", sol.log_derivative);
        }
    }

    #[test]
    fn zero_energy_square_well_has_one_node_and_linear_exterior() {
        // Interior sin(2r) on [0,1]; exterior u = A + B r.
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        let sol = integrate_regular(&well, 0, 0.0, 1.0, 4000).unwrap();
        let want = 2.0 * (2.0f64).cos() / (2.0f64).sin();
        assert!((sol.log_derivative - want).abs() < 1e-9);
        // Sturm count on (0, infinity): interior nodes plus the exterior line's zero.
        let exterior_zero = 1.0 - 1.0 / sol.log_derivative;
        let total = sol.node_count + usize::from(exterior_zero > 1.0);
        assert_eq!(total, 1);
    }

    #[test]
    fn node_count_matches_sign_changes() {
        let well = PotentialSpec::square_well(60.0, 1.0).unwrap();
        let sol = integrate_regular(&well, 0, 0.0, 1.0, 4000).unwrap();
        let mut changes = 0;
        for w in sol.u.windows(2) {
            if w[0] * w[1] < 0.0 {
                changes += 1;
            }
        }
        assert_eq!(changes, sol.node_count);
        // sqrt(60) = 7.746 -> two interior zeros of sin(7.746 r) on (0, 1).
        assert_eq!(sol.node_count, 2);
    }

    #[test]
    fn regular_behaviour_near_origin() {
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        for ell in 0..4u32 {
            let sol = integrate_regular(&well, ell, 1.0, 1.0, 2000).unwrap();
            let p = ell as f64 + 1.0;
            let a = sol.u[0] / sol.r_grid[0].powf(p);
            let b = sol.u[1] / sol.r_grid[1].powf(p);
            assert!(((a - b) / a).abs() < 1e-6, "l={ell}");
        }
    }

    #[test]
    fn step_precondition_is_enforced() {
        let deep = PotentialSpec::square_well(1e6, 1.0).unwrap();
        match integrate_regular(&deep, 0, 0.0, 1.0, 100) {
            Err(Error::Resolution { message, .. }) => assert!(message.contains("steps")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
