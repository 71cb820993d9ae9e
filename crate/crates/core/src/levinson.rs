//! Verdicts for the Levinson identities: the classical form with the Born
//! subtraction, the correction-free form `int tr[i(S-1)* S'] = 2 pi Tr P`,
//! the winding of `det S`, the pairing identity, threshold behavior, the
//! half-bound demonstration and the depth sweep.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::potentials::{born_nu, PotentialSpec, PotentialSummary};
use crate::radial::{phase_shift_matching, phase_shifts_variable, riccati_j_all, OdeTolerance};
use crate::smatrix::{
    build_phase_curves, det_phase, time_delay_integrand, topological_integrand, ChannelIntegrals, GridSpec,
    PhaseCurve, Quadrature,
};
use crate::spectrum::{count_bound_states, detect_half_bound_state, total_bound_report, BoundStateReport, ChannelStates, HalfBoundDiagnostic};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest distance to the nearest integer accepted for a winding number.
pub const WINDING_ROUNDING: f64 = 0.05;
/// Bound on the pairing residual relative to `1 + |B|`.
pub const PAIRING_TOL: f64 = 1e-12;
/// Orientation of the compactified energy axis used for the winding.
pub const ORIENTATION: &str = "lambda from 0+ to +inf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "hypothesis-violated")]
    HypothesisViolated,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::HypothesisViolated => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::HypothesisViolated => "hypothesis-violated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    HalfBoundDetected,
    ThresholdMismatch,
    TailDominant,
    NodeTheoremCaveat,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::HalfBoundDetected => "half_bound_detected",
            Flag::ThresholdMismatch => "threshold_mismatch",
            Flag::TailDominant => "tail_dominant",
            Flag::NodeTheoremCaveat => "node_theorem_caveat",
        }
    }
}

/// Which identity decides the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Topological,
    Classical,
    /// Both identities and the winding relation.
    All,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub phase_curves_ms: f64,
    pub bound_states_ms: f64,
    pub total_ms: f64,
}

/// Curves, spectrum and quadrature shared by every check on one config.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: RunConfig,
    /// Grid after continuity refinement.
    pub grid: GridSpec,
    pub lmax: u32,
    pub curves: Vec<PhaseCurve>,
    pub quadrature: Quadrature,
    pub bound: BoundStateReport,
    pub nu: f64,
    pub ode_tol: OdeTolerance,
    pub timings: Timings,
}

pub fn analyze(config: &RunConfig) -> Result<Analysis> {
    let start = Instant::now();
    let spec = &config.potential;
    let lmax = config.lmax();
    let ode_tol = OdeTolerance::default();
    let (grid, curves) = build_phase_curves(spec, &config.grid, lmax, ode_tol)?;
    let curves_done = Instant::now();
    let bound = total_bound_report(spec, config.lmax, config.tol.root, config.tol.resonance)?;
    let bound_done = Instant::now();
    let nu = born_nu(spec, config.tol.quadrature)?;
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(Analysis {
        config: config.clone(),
        quadrature: Quadrature::new(&grid),
        grid,
        lmax,
        curves,
        bound,
        nu,
        ode_tol,
        timings: Timings {
            phase_curves_ms: ms(start, curves_done),
            bound_states_ms: ms(curves_done, bound_done),
            total_ms: ms(start, Instant::now()),
        },
    })
}

fn weight(ell: u32) -> f64 {
    (2 * ell + 1) as f64
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub classical: f64,
    pub topological: f64,
    pub imaginary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    /// Node count after continuity refinement.
    pub points_used: usize,
    pub spacing: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialVerdicts {
    pub topological: Verdict,
    pub classical: Verdict,
    pub winding: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub born_nu: f64,
    /// Tail uncertainty of the classical per-channel value.
    pub tail_budget_classical: f64,
    /// Tail uncertainty of the imaginary part of the topological integral.
    pub tail_budget_imaginary: f64,
    /// Born estimate of the channels above `lmax` at `lambda_max`, used as
    /// the truncation correction of the literal classical value.
    pub literal_truncation_correction: f64,
    pub literal_budget: f64,
    pub winding_distance: f64,
    pub winding_orientation: &'static str,
    pub pairing_residual: f64,
    pub half_bound_magnitude: f64,
    pub max_threshold_mismatch: f64,
    pub verdicts: PartialVerdicts,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevinsonReport {
    pub potential: PotentialSummary,
    pub grid: GridReport,
    pub lmax: u32,
    #[serde(rename = "trace_P")]
    pub trace_p: u64,
    pub per_ell: Vec<ChannelStates>,
    pub lhs_classical: f64,
    pub lhs_classical_literal: f64,
    pub lhs_topological: ComplexValue,
    pub rhs: f64,
    pub winding: f64,
    pub winding_int: i64,
    pub residuals: Residuals,
    pub tail_budget: f64,
    pub flags: Vec<Flag>,
    pub verdict: Verdict,
    pub version: &'static str,
    pub timings: Option<Timings>,
    pub diagnostics: Diagnostics,
}

impl LevinsonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Integrals of the whole energy axis, per identity.
#[derive(Debug, Clone, Copy)]
struct AxisIntegrals {
    value: ChannelIntegrals,
    error: ChannelIntegrals,
}

fn axis_integrals(a: &Analysis) -> AxisIntegrals {
    let mut value = ChannelIntegrals::default();
    let mut error = ChannelIntegrals::default();
    for c in &a.curves {
        let w = weight(c.ell);
        let low = c.low_tail();
        let high = c.high_tail(a.ode_tol);
        value.add_weighted(&low.value, w);
        value.add_weighted(&high.value, w);
        error.add_weighted(&low.error, w);
        error.add_weighted(&high.error, w);
    }
    let n = a.quadrature.lambda.len();
    let z: Vec<Complex64> = (0..n).map(|i| topological_integrand(&a.curves, i)).collect();
    let grid_z = a.quadrature.integrate_complex(&z);
    let td: Vec<f64> = (0..n).map(|i| time_delay_integrand(&a.curves, i)).collect();
    value.classical += a.quadrature.integrate(&td);
    value.eq4_re += grid_z.re;
    value.eq4_im += grid_z.im;
    AxisIntegrals { value, error }
}

/// Born phase `-(1/k) int V j_hat_l(kr)^2 dr` summed with weights over
/// `l > lmax` until the terms are negligible.
fn born_truncation(spec: &PotentialSpec, lmax: u32, lambda: f64) -> f64 {
    if spec.max_abs() == 0.0 {
        return 0.0;
    }
    let k = lambda.sqrt();
    let r_cut = spec.r_cut();
    let top = lmax as usize + 200 + (k * r_cut).ceil() as usize;
    let n = 4001;
    let h = r_cut / (n - 1) as f64;
    let weights = crate::quadrature::simpson_weights(n, h);
    let mut sums = vec![0.0; top + 1];
    let mut j = vec![0.0; top + 1];
    for (i, w) in weights.iter().enumerate().skip(1) {
        let r = i as f64 * h;
        let v = spec.evaluate(r);
        if v == 0.0 {
            continue;
        }
        riccati_j_all(k * r, &mut j);
        for (s, jl) in sums.iter_mut().zip(j.iter()).skip(lmax as usize + 1) {
            *s += w * v * jl * jl;
        }
    }
    sums.iter()
        .enumerate()
        .skip(lmax as usize + 1)
        .map(|(l, s)| -weight(l as u32) * s / k)
        .sum()
}

struct Winding {
    value: f64,
    rounded: i64,
    distance: f64,
}

/// `(1/2 pi)` times the continuous variation of the determinant phase from
/// `0+` to `inf`: grid increments, the high-energy tail down to
/// `Theta(inf) = 0`, and the threshold gap to the extrapolated `Theta(0+)`.
fn winding_of(a: &Analysis) -> Winding {
    let n = a.quadrature.lambda.len();
    let mut variation = 0.0;
    let mut prev = det_phase(&a.curves, 0);
    for i in 1..n {
        let next = det_phase(&a.curves, i);
        variation += next - prev;
        prev = next;
    }
    let theta_min = det_phase(&a.curves, 0);
    let theta_zero: f64 = a.curves.iter().map(|c| 2.0 * weight(c.ell) * c.threshold_fit.delta_zero).sum();
    variation += -prev;
    variation += theta_min - theta_zero;
    let value = variation / (2.0 * PI);
    let rounded = value.round();
    Winding {
        value,
        rounded: rounded as i64,
        distance: (value - rounded).abs(),
    }
}

/// `A = int (d lambda / lambda) tr[i(S-1)* lambda S']` and
/// `B = int d lambda tr[i(S-1)* S']` on the same weights.
pub fn pairing_values(a: &Analysis) -> (Complex64, Complex64) {
    let q = &a.quadrature;
    let n = q.lambda.len();
    let mut big_a = Complex64::new(0.0, 0.0);
    let mut big_b = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let g = topological_integrand(&a.curves, i);
        big_a += q.w_log[i] * (q.lambda[i] * g);
        big_b += (q.w_log[i] * q.lambda[i]) * g;
    }
    (big_a, big_b)
}

/// `|A - B|` of the pairing identity.
pub fn pairing_residual(a: &Analysis) -> f64 {
    let (x, y) = pairing_values(a);
    (x - y).norm()
}

pub fn pairing_bound(a: &Analysis) -> f64 {
    let (_, b) = pairing_values(a);
    PAIRING_TOL * (1.0 + b.norm())
}

impl Analysis {
    pub fn report(&self, criterion: Criterion, with_timings: bool) -> LevinsonReport {
        let cfg = &self.config;
        let axis = axis_integrals(self);
        let trace_p = self.bound.trace_p;
        let rhs = 2.0 * PI * trace_p as f64;
        let scale = (2.0 * PI).max(rhs);

        let grid_max = self.grid.lambda_max;
        let grid_min = self.grid.lambda_min;
        let n = self.quadrature.lambda.len();
        let shift: Vec<f64> = self.quadrature.lambda.iter().map(|l| self.nu / l.sqrt()).collect();
        let truncated_sum: f64 = self.curves.iter().map(|c| weight(c.ell) * c.delta[n - 1]).sum();
        let dropped = born_truncation(&cfg.potential, self.lmax, grid_max);
        let mut low_classical = 0.0;
        for c in &self.curves {
            low_classical += weight(c.ell) * c.low_tail().value.classical;
        }
        let td: Vec<f64> = (0..n).map(|i| time_delay_integrand(&self.curves, i)).collect();
        let literal = self.quadrature.integrate(&td) - self.quadrature.integrate(&shift) + low_classical
            - 2.0 * self.nu * grid_min.sqrt()
            + 2.0 * (truncated_sum + dropped + self.nu * grid_max.sqrt());
        let literal_budget = 2.0 * dropped.abs() + axis.error.classical;

        let winding = winding_of(self);
        let residuals = Residuals {
            classical: (axis.value.classical - rhs).abs(),
            topological: (axis.value.eq4_re - rhs).abs(),
            imaginary: axis.value.eq4_im.abs(),
        };

        let mut flags = Vec::new();
        let hb = self.bound.half_bound;
        if hb.flag {
            flags.push(Flag::HalfBoundDetected);
        }
        let mut max_mismatch = 0.0f64;
        for c in &self.curves {
            let count = self
                .bound
                .per_ell
                .iter()
                .find(|s| s.ell == c.ell)
                .map_or(0, |s| s.count);
            max_mismatch = max_mismatch.max((c.threshold_value - PI * count as f64).abs());
        }
        if max_mismatch > cfg.tol.threshold {
            flags.push(Flag::ThresholdMismatch);
        }
        let tail_budget = axis.error.eq4_re;
        if tail_budget > cfg.tol.residual * scale || axis.error.eq4_im > cfg.tol.residual {
            flags.push(Flag::TailDominant);
        }
        if self.bound.node_theorem_caveat {
            flags.push(Flag::NodeTheoremCaveat);
        }

        let bound_ok = |ok: bool| {
            if hb.flag {
                Verdict::HypothesisViolated
            } else if ok {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        };
        let partial = PartialVerdicts {
            topological: bound_ok(
                residuals.topological <= cfg.tol.residual * scale && residuals.imaginary <= cfg.tol.residual,
            ),
            classical: bound_ok(residuals.classical <= cfg.tol.residual * scale),
            winding: bound_ok(winding.distance < WINDING_ROUNDING && winding.rounded == -(trace_p as i64)),
        };
        let verdict = match criterion {
            Criterion::Topological => partial.topological,
            Criterion::Classical => partial.classical,
            Criterion::All => {
                let all = [partial.topological, partial.classical, partial.winding];
                if all.contains(&Verdict::HypothesisViolated) {
                    Verdict::HypothesisViolated
                } else if all.iter().all(|v| *v == Verdict::Pass) {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };

        LevinsonReport {
            potential: cfg.potential.summary(),
            grid: GridReport {
                lambda_min: cfg.grid.lambda_min,
                lambda_max: cfg.grid.lambda_max,
                points: cfg.grid.points,
                points_used: self.grid.points,
                spacing: "log",
            },
            lmax: self.lmax,
            trace_p,
            per_ell: self.bound.per_ell.clone(),
            lhs_classical: axis.value.classical,
            lhs_classical_literal: literal,
            lhs_topological: ComplexValue {
                re: axis.value.eq4_re,
                im: axis.value.eq4_im,
            },
            rhs,
            winding: winding.value,
            winding_int: winding.rounded,
            residuals,
            tail_budget,
            flags,
            verdict,
            version: VERSION,
            timings: with_timings.then_some(self.timings),
            diagnostics: Diagnostics {
                born_nu: self.nu,
                tail_budget_classical: axis.error.classical,
                tail_budget_imaginary: axis.error.eq4_im,
                literal_truncation_correction: 2.0 * dropped,
                literal_budget,
                winding_distance: winding.distance,
                winding_orientation: ORIENTATION,
                pairing_residual: pairing_residual(self),
                half_bound_magnitude: hb.magnitude,
                max_threshold_mismatch: max_mismatch,
                verdicts: partial,
            },
        }
    }
}

/// Topological check: the verdict is the correction-free identity.
pub fn check_topological(config: &RunConfig) -> Result<LevinsonReport> {
    Ok(analyze(config)?.report(Criterion::Topological, false))
}

/// Classical check: the verdict is the per-channel value; the literal value
/// with the `nu / sqrt(lambda)` subtraction is reported alongside.
pub fn check_classical(config: &RunConfig) -> Result<LevinsonReport> {
    Ok(analyze(config)?.report(Criterion::Classical, false))
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingReport {
    pub winding: f64,
    pub winding_int: i64,
    pub distance: f64,
    #[serde(rename = "trace_P")]
    pub trace_p: u64,
    pub orientation: &'static str,
    pub consistent: bool,
}

/// Winding of `det S` over the compactified axis, rounded; fails with
/// [`Error::NonIntegerWinding`] when it is not within `WINDING_ROUNDING` of
/// an integer.
pub fn winding_index(config: &RunConfig) -> Result<WindingReport> {
    let a = analyze(config)?;
    winding_report(&a)
}

pub fn winding_report(a: &Analysis) -> Result<WindingReport> {
    let w = winding_of(a);
    if w.distance >= WINDING_ROUNDING {
        return Err(Error::NonIntegerWinding {
            winding: w.value,
            distance: w.distance,
        });
    }
    Ok(WindingReport {
        winding: w.value,
        winding_int: w.rounded,
        distance: w.distance,
        trace_p: a.bound.trace_p,
        orientation: ORIENTATION,
        consistent: w.rounded == -(a.bound.trace_p as i64),
    })
}

/// Pairing residual `|A - B|` for a config.
pub fn pairing_check(config: &RunConfig) -> Result<f64> {
    Ok(pairing_residual(&analyze(config)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub lambda: [f64; 3],
    /// `max_l |exp(2 i delta_l) - 1|` at each `lambda`.
    pub m: [f64; 3],
    pub confirmed: bool,
    pub half_bound: Option<HalfBoundDiagnostic>,
}

/// `S(0) = 1` diagnostic over `lambda_min`, `lambda_min/10`, `lambda_min/100`.
pub fn threshold_behavior(config: &RunConfig) -> Result<ThresholdReport> {
    let spec = &config.potential;
    let lmax = config.lmax();
    let l0 = config.grid.lambda_min;
    let lambda = [l0, l0 / 10.0, l0 / 100.0];
    let mut m = [0.0; 3];
    for (slot, &l) in m.iter_mut().zip(lambda.iter()) {
        let phases = match phase_shifts_variable(spec, lmax, l, OdeTolerance::default()) {
            Err(Error::Resolution { .. }) => (0..=lmax)
                .map(|ell| phase_shift_matching(spec, ell, l))
                .collect::<Result<Vec<_>>>()?,
            other => other?,
        };
        *slot = phases.iter().map(|d| 2.0 * d.sin().abs()).fold(0.0, f64::max);
    }
    let decreasing = m[1] <= m[0] && m[2] <= m[1];
    let confirmed = decreasing && m[2] < config.tol.threshold;
    let half_bound = if confirmed {
        None
    } else {
        Some(detect_half_bound_state(spec, config.tol.resonance)?)
    };
    Ok(ThresholdReport {
        lambda,
        m,
        confirmed,
        half_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfBoundDemo {
    pub report: LevinsonReport,
    /// `lhs_classical / 2 pi - Tr P`, expected near one half.
    pub classical_offset: f64,
    pub imaginary_integral: f64,
    pub message: &'static str,
}

/// Runs the full check on a potential with a zero-energy s-wave resonance.
pub fn half_bound_demo(config: &RunConfig) -> Result<HalfBoundDemo> {
    let d = detect_half_bound_state(&config.potential, config.tol.resonance)?;
    if !d.flag {
        return Err(Error::Usage(format!(
            "demo-resonance needs a zero-energy s-wave resonance; |u'R/u| = {:.3e} is not below tol.resonance = {:e}",
            d.magnitude, config.tol.resonance
        )));
    }
    let report = analyze(config)?.report(Criterion::All, false);
    Ok(HalfBoundDemo {
        classical_offset: report.lhs_classical / (2.0 * PI) - report.trace_p as f64,
        imaginary_integral: report.lhs_topological.im,
        message: "no-resonance hypothesis violated, as expected",
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "trace_P")]
    pub trace_p: u64,
    pub lhs_topological: f64,
    pub lhs_over_2pi: f64,
    pub winding: f64,
    pub winding_int: i64,
    pub half_bound: bool,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalDepth {
    pub lower: f64,
    pub upper: f64,
    /// Depth where the zero-energy count changes, bisected on the count.
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub critical_depths: Vec<CriticalDepth>,
}

/// Evaluates `steps` equally spaced depths in `[v0_min, v0_max]` with the
/// shape of `config.potential`, and brackets each depth where `Tr P` jumps.
pub fn sweep_depth(config: &RunConfig, v0_min: f64, v0_max: f64, steps: usize) -> Result<SweepReport> {
    if !(v0_min.is_finite() && v0_max.is_finite() && v0_min > 0.0 && v0_max > v0_min) {
        return Err(Error::Usage(format!("sweep range must be positive and increasing, got [{v0_min}, {v0_max}]")));
    }
    if steps < 2 {
        return Err(Error::Usage("sweep needs at least 2 steps".into()));
    }
    let depths: Vec<f64> = (0..steps)
        .map(|i| v0_min + (v0_max - v0_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let rows = depths
        .par_iter()
        .map(|&v0| {
            let mut cfg = config.clone();
            cfg.potential = config.potential.with_strength(v0)?;
            let rep = analyze(&cfg)?.report(Criterion::All, false);
            Ok(SweepRow {
                v0,
                trace_p: rep.trace_p,
                lhs_topological: rep.lhs_topological.re,
                lhs_over_2pi: rep.lhs_topological.re / (2.0 * PI),
                winding: rep.winding,
                winding_int: rep.winding_int,
                half_bound: rep.flags.contains(&Flag::HalfBoundDetected),
                flags: rep.flags,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut critical_depths = Vec::new();
    for w in rows.windows(2) {
        if w[0].trace_p != w[1].trace_p {
            critical_depths.push(bisect_critical_depth(config, w[0].v0, w[1].v0, config.tol.root)?);
        }
    }
    Ok(SweepReport { rows, critical_depths })
}

fn total_zero_energy_count(spec: &PotentialSpec, limit: u32) -> Result<u64> {
    let mut total = 0u64;
    for ell in 0..=limit {
        let n = count_bound_states(spec, ell)?.count as u64;
        if n == 0 {
            break;
        }
        total += (2 * ell as u64 + 1) * n;
    }
    Ok(total)
}

fn bisect_critical_depth(config: &RunConfig, lo: f64, hi: f64, tol: f64) -> Result<CriticalDepth> {
    let limit = config.lmax();
    let count = |v0: f64| -> Result<u64> { total_zero_energy_count(&config.potential.with_strength(v0)?, limit) };
    let c_lo = count(lo)?;
    let (mut a, mut b) = (lo, hi);
    while b - a > tol * (1.0 + b.abs()) {
        let mid = 0.5 * (a + b);
        if count(mid)? == c_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(CriticalDepth {
        lower: lo,
        upper: hi,
        estimate: 0.5 * (a + b),
    })
}
