//! Phase curves on a log-uniform energy grid, the fibered S-matrix built
//! from them, and the integrands of the classical and correction-free
//! Levinson identities.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_MIN, DEFAULT_POINTS};
use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::quadrature::simpson_weights;
use crate::radial::{phase_shift_matching, phase_shifts_variable, OdeTolerance};

/// Largest grid the continuity refinement may produce.
pub const MAX_NODES: usize = 1 << 20;
/// Ratio between the global error of a variable-phase endpoint and the
/// local tolerance of the integrator.
pub const GLOBAL_ERROR_FACTOR: f64 = 1e5;
/// Adjacent nodes of a curve must differ by less than this.
pub const CONTINUITY_LIMIT: f64 = PI / 2.0;

/// Log-uniform energy grid `lambda_i = lambda_min (lambda_max/lambda_min)^(i/(n-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lambda_min: DEFAULT_LAMBDA_MIN,
            lambda_max: DEFAULT_LAMBDA_MAX,
            points: DEFAULT_POINTS,
        }
    }
}

impl GridSpec {
    pub fn new(lambda_min: f64, lambda_max: f64, points: usize) -> Result<Self> {
        if !(lambda_min.is_finite() && lambda_min > 0.0) {
            return Err(Error::validation("grid.lambda_min", "λ_min must be > 0"));
        }
        if !(lambda_max.is_finite() && lambda_max > lambda_min) {
            return Err(Error::validation("grid.lambda_max", "λ_max must be > λ_min"));
        }
        if points < 16 {
            return Err(Error::validation("grid.points", "points must be >= 16"));
        }
        Ok(GridSpec {
            lambda_min,
            lambda_max,
            points,
        })
    }

    /// Spacing in `ln(lambda)`.
    pub fn log_step(&self) -> f64 {
        (self.lambda_max / self.lambda_min).ln() / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.log_step();
        let ln_min = self.lambda_min.ln();
        let mut v: Vec<f64> = (0..self.points).map(|i| (ln_min + i as f64 * h).exp()).collect();
        v[0] = self.lambda_min;
        v[self.points - 1] = self.lambda_max;
        v
    }

    /// The grid with every interval halved; old nodes keep even indices.
    pub fn refined(&self) -> Self {
        GridSpec {
            points: 2 * self.points - 1,
            ..*self
        }
    }

    /// Simpson weights for `int f(lambda) d lambda` written as
    /// `int f(lambda(t)) lambda dt`, `t = ln lambda`. The Jacobian is not
    /// included; see [`Quadrature`].
    pub fn log_weights(&self) -> Vec<f64> {
        simpson_weights(self.points, self.log_step())
    }
}

/// Shared weights for integrals over the grid.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub lambda: Vec<f64>,
    /// Weights in `t = ln lambda`.
    pub w_log: Vec<f64>,
}

impl Quadrature {
    pub fn new(grid: &GridSpec) -> Self {
        Quadrature {
            lambda: grid.nodes(),
            w_log: grid.log_weights(),
        }
    }

    /// `int f d lambda` from samples `f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.w_log
            .iter()
            .zip(self.lambda.iter())
            .zip(f.iter())
            .map(|((w, l), v)| (w * l) * v)
            .sum()
    }

    /// `int f d lambda / lambda` from samples `f_i`.
    pub fn integrate_log(&self, f: &[f64]) -> f64 {
        self.w_log.iter().zip(f.iter()).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_complex(&self, f: &[Complex64]) -> Complex64 {
        let re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let im: Vec<f64> = f.iter().map(|z| z.im).collect();
        Complex64::new(self.integrate(&re), self.integrate(&im))
    }
}

/// The three per-channel integrals: `-2 int delta'` (classical),
/// `int 2 delta' (cos 2 delta - 1)` and `int 2 delta' sin 2 delta` (real and
/// imaginary topological parts).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ChannelIntegrals {
    pub classical: f64,
    pub eq4_re: f64,
    pub eq4_im: f64,
}

impl ChannelIntegrals {
    /// Exact antiderivative differences between phase values `from` and `to`.
    pub fn between(from: f64, to: f64) -> Self {
        ChannelIntegrals {
            classical: -2.0 * (to - from),
            eq4_re: ((2.0 * to).sin() - 2.0 * to) - ((2.0 * from).sin() - 2.0 * from),
            eq4_im: (2.0 * from).cos() - (2.0 * to).cos(),
        }
    }

    pub fn add_weighted(&mut self, other: &ChannelIntegrals, weight: f64) {
        self.classical += weight * other.classical;
        self.eq4_re += weight * other.eq4_re;
        self.eq4_im += weight * other.eq4_im;
    }

    fn abs_diff(&self, other: &ChannelIntegrals) -> Self {
        ChannelIntegrals {
            classical: (self.classical - other.classical).abs(),
            eq4_re: (self.eq4_re - other.eq4_re).abs(),
            eq4_im: (self.eq4_im - other.eq4_im).abs(),
        }
    }

    fn max(&self, other: &ChannelIntegrals) -> Self {
        ChannelIntegrals {
            classical: self.classical.max(other.classical),
            eq4_re: self.eq4_re.max(other.eq4_re),
            eq4_im: self.eq4_im.max(other.eq4_im),
        }
    }
}

/// Integrals over an energy interval outside the grid with their
/// uncertainties.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tail {
    pub value: ChannelIntegrals,
    pub error: ChannelIntegrals,
}

impl Tail {
    /// Integrals from `from` to `to` where the phase `uncertain` (one of
    /// the two) is known only to within `err`.
    fn new(from: f64, to: f64, err: f64, uncertain_from: bool) -> Self {
        let value = ChannelIntegrals::between(from, to);
        let shifted = |e: f64| {
            if uncertain_from {
                ChannelIntegrals::between(from + e, to)
            } else {
                ChannelIntegrals::between(from, to + e)
            }
        };
        let error = shifted(err).abs_diff(&value).max(&shifted(-err).abs_diff(&value));
        Tail { value, error }
    }
}

/// Low-energy model `delta(lambda) = delta_0 + b lambda^(l + 1/2)` fit on the
/// lowest decade of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdFit {
    pub delta_zero: f64,
    pub slope: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub ell: u32,
    pub lambda_nodes: Vec<f64>,
    /// Unwrapped phase, branch with `delta(inf) = 0`.
    pub delta: Vec<f64>,
    pub ddelta_dlambda: Vec<f64>,
    /// `c` in `delta ~ c / sqrt(lambda)` beyond `lambda_max`.
    pub tail_coeff: f64,
    pub threshold_value: f64,
    pub threshold_fit: ThresholdFit,
}

impl PhaseCurve {
    fn from_samples(ell: u32, grid: &GridSpec, lambda: &[f64], delta: Vec<f64>) -> Self {
        let ddelta_dlambda = log_grid_derivative(&delta, lambda, grid.log_step());
        let tail_coeff = fit_high_tail(lambda, &delta);
        let threshold_fit = fit_threshold(ell, lambda, &delta);
        PhaseCurve {
            ell,
            lambda_nodes: lambda.to_vec(),
            threshold_value: delta[0],
            delta,
            ddelta_dlambda,
            tail_coeff,
            threshold_fit,
        }
    }

    /// Integrals over `[lambda_max, inf)`. The branch fixes `delta(inf) = 0`,
    /// so the antiderivatives are exact given `delta(lambda_max)`, whose
    /// global error is taken as `GLOBAL_ERROR_FACTOR` times the local ODE
    /// tolerance.
    pub fn high_tail(&self, tol: OdeTolerance) -> Tail {
        let last = self.delta[self.delta.len() - 1];
        let err = GLOBAL_ERROR_FACTOR * (tol.rel * last.abs() + tol.abs);
        Tail::new(last, 0.0, err, true)
    }

    /// `c / sqrt(lambda_max)` minus the computed `delta(lambda_max)`; small
    /// once the channel has reached its Born decay.
    pub fn tail_model_miss(&self) -> f64 {
        let n = self.delta.len();
        self.tail_coeff / self.lambda_nodes[n - 1].sqrt() - self.delta[n - 1]
    }

    /// Integrals over `(0, lambda_min]` from the threshold model. The
    /// uncertainty on the extrapolated `delta(0+)` is the fit residual plus a
    /// tenth of the extrapolated step.
    pub fn low_tail(&self) -> Tail {
        let f = &self.threshold_fit;
        let step = (self.delta[0] - f.delta_zero).abs();
        Tail::new(f.delta_zero, self.delta[0], f.max_residual + 0.1 * step, true)
    }

    /// `-2 int delta' d lambda` over the grid and the two complex topological
    /// components, integrated with the shared weights.
    pub fn grid_integrals(&self, q: &Quadrature) -> ChannelIntegrals {
        let n = self.delta.len();
        let mut classical = vec![0.0; n];
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for i in 0..n {
            let d = self.ddelta_dlambda[i];
            let (s, c) = (2.0 * self.delta[i]).sin_cos();
            classical[i] = -2.0 * d;
            re[i] = 2.0 * d * (c - 1.0);
            im[i] = 2.0 * d * s;
        }
        ChannelIntegrals {
            classical: q.integrate(&classical),
            eq4_re: q.integrate(&re),
            eq4_im: q.integrate(&im),
        }
    }

    /// The same integrals from the exact antiderivatives at the grid ends.
    pub fn endpoint_integrals(&self) -> ChannelIntegrals {
        ChannelIntegrals::between(self.delta[0], self.delta[self.delta.len() - 1])
    }
}

/// `d delta / d lambda` on a log grid: centered differences in
/// `t = ln lambda` with one Richardson level, second-order one-sided at the
/// ends.
pub fn log_grid_derivative(delta: &[f64], lambda: &[f64], h: f64) -> Vec<f64> {
    let n = delta.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let dt = if i == 0 {
            (-3.0 * delta[0] + 4.0 * delta[1] - delta[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * delta[n - 1] - 4.0 * delta[n - 2] + delta[n - 3]) / (2.0 * h)
        } else {
            let d1 = (delta[i + 1] - delta[i - 1]) / (2.0 * h);
            if i >= 2 && i + 2 < n {
                let d2 = (delta[i + 2] - delta[i - 2]) / (4.0 * h);
                (4.0 * d1 - d2) / 3.0
            } else {
                d1
            }
        };
        out[i] = dt / lambda[i];
    }
    out
}

/// Least-squares `c` in `delta = c lambda^(-1/2)` over the last decade.
fn fit_high_tail(lambda: &[f64], delta: &[f64]) -> f64 {
    let n = lambda.len();
    let cut = lambda[n - 1] / 10.0;
    let start = lambda.iter().position(|&l| l >= cut).unwrap_or(0).min(n - 4);
    let (mut num, mut den) = (0.0, 0.0);
    for i in start..n {
        let x = lambda[i].powf(-0.5);
        num += x * delta[i];
        den += x * x;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Least-squares `(delta_0, b)` in `delta = delta_0 + b lambda^(l+1/2)` over
/// the lowest decade (at least four nodes).
fn fit_threshold(ell: u32, lambda: &[f64], delta: &[f64]) -> ThresholdFit {
    let p = ell as f64 + 0.5;
    let cut = lambda[0] * 10.0;
    let end = lambda.iter().position(|&l| l > cut).unwrap_or(lambda.len()).max(4);
    // Scale the regressor so the normal equations stay well conditioned.
    let ln_top = lambda[end - 1].ln();
    let xs: Vec<f64> = lambda[..end].iter().map(|l| (p * (l.ln() - ln_top)).exp()).collect();
    let m = end as f64;
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sy: f64 = delta[..end].iter().sum();
    let sxy: f64 = xs.iter().zip(delta.iter()).map(|(x, y)| x * y).sum();
    let det = m * sxx - sx * sx;
    let (d0, b) = if det.abs() <= 1e-300 {
        (delta[0], 0.0)
    } else {
        ((sy * sxx - sx * sxy) / det, (m * sxy - sx * sy) / det)
    };
    let max_residual = xs
        .iter()
        .zip(delta.iter())
        .map(|(x, y)| (d0 + b * x - y).abs())
        .fold(0.0, f64::max);
    ThresholdFit {
        delta_zero: d0,
        slope: b * (-p * ln_top).exp(),
        max_residual,
    }
}

/// Phases at one node: unwrapped from the variable-phase ODE, or principal
/// values from matching where that ODE is too stiff to integrate.
#[derive(Debug, Clone)]
enum Sample {
    Unwrapped(Vec<f64>),
    Principal(Vec<f64>),
}

fn sample_node(spec: &PotentialSpec, lambda: f64, lmax: u32, tol: OdeTolerance) -> Result<Sample> {
    match phase_shifts_variable(spec, lmax, lambda, tol) {
        Ok(d) => Ok(Sample::Unwrapped(d)),
        Err(Error::Resolution { .. }) => (0..=lmax)
            .map(|ell| phase_shift_matching(spec, ell, lambda))
            .collect::<Result<Vec<_>>>()
            .map(Sample::Principal),
        Err(e) => Err(e),
    }
}

/// Phase shifts of channels `0..=lmax` at every node, in node order.
fn sample_nodes(spec: &PotentialSpec, lambda: &[f64], lmax: u32, tol: OdeTolerance) -> Result<Vec<Sample>> {
    lambda.par_iter().map(|&l| sample_node(spec, l, lmax, tol)).collect()
}

/// Puts principal-value nodes on the branch nearest the next node above.
fn resolve_branches(samples: &[Sample], lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); samples.len()];
    for i in (0..samples.len()).rev() {
        rows[i] = match &samples[i] {
            Sample::Unwrapped(d) => d.clone(),
            Sample::Principal(p) => {
                let Some(above) = rows.get(i + 1) else {
                    return Err(Error::Resolution {
                        context: "variable-phase integration".into(),
                        message: format!("no unwrapped phase at the top node lambda={:e}", lambda[i]),
                    });
                };
                p.iter()
                    .zip(above.iter())
                    .map(|(&p, &a)| p + PI * ((a - p) / PI).round())
                    .collect()
            }
        };
    }
    Ok(rows)
}

/// First adjacent pair `(i, ell)` violating the continuity bound.
fn continuity_violation(rows: &[Vec<f64>]) -> Option<(usize, usize)> {
    for i in 0..rows.len() - 1 {
        for (ell, (a, b)) in rows[i].iter().zip(rows[i + 1].iter()).enumerate() {
            if (b - a).abs() >= CONTINUITY_LIMIT {
                return Some((i, ell));
            }
        }
    }
    None
}

/// Continuous phase curves for `0..=lmax` on `grid`, doubling the grid until
/// adjacent nodes differ by less than pi/2 in every channel. Returns the
/// curves together with the grid actually used.
pub fn build_phase_curves(
    spec: &PotentialSpec,
    grid: &GridSpec,
    lmax: u32,
    tol: OdeTolerance,
) -> Result<(GridSpec, Vec<PhaseCurve>)> {
    let mut grid = *grid;
    let mut lambda = grid.nodes();
    let mut samples = sample_nodes(spec, &lambda, lmax, tol)?;
    let mut rows = resolve_branches(&samples, &lambda)?;
    while let Some((i, ell)) = continuity_violation(&rows) {
        let next = grid.refined();
        if next.points > MAX_NODES {
            return Err(Error::Resolution {
                context: "phase curve refinement".into(),
                message: format!(
                    "l={ell} still jumps by >= pi/2 in lambda window [{:e}, {:e}] at {} nodes",
                    lambda[i],
                    lambda[i + 1],
                    grid.points
                ),
            });
        }
        let new_lambda = next.nodes();
        let midpoints: Vec<f64> = new_lambda.iter().skip(1).step_by(2).copied().collect();
        let mid_rows = sample_nodes(spec, &midpoints, lmax, tol)?;
        let mut merged = Vec::with_capacity(next.points);
        let mut mids = mid_rows.into_iter();
        for (k, sample) in samples.into_iter().enumerate() {
            if k > 0 {
                merged.push(mids.next().expect("one midpoint per interval"));
            }
            merged.push(sample);
        }
        grid = next;
        lambda = new_lambda;
        samples = merged;
        rows = resolve_branches(&samples, &lambda)?;
    }
    let curves = (0..=lmax)
        .map(|ell| {
            let delta: Vec<f64> = rows.iter().map(|r| r[ell as usize]).collect();
            PhaseCurve::from_samples(ell, &grid, &lambda, delta)
        })
        .collect();
    Ok((grid, curves))
}

fn weight(ell: u32) -> f64 {
    (2 * ell + 1) as f64
}

/// `tr[i S* S'](lambda_i) = -2 sum (2l+1) delta_l'`.
pub fn time_delay_integrand(curves: &[PhaseCurve], index: usize) -> f64 {
    curves
        .iter()
        .map(|c| -2.0 * weight(c.ell) * c.ddelta_dlambda[index])
        .sum()
}

/// `tr[i (S-1)* S'](lambda_i) = sum (2l+1) [2 delta' (cos 2 delta - 1) + 2 i delta' sin 2 delta]`.
pub fn topological_integrand(curves: &[PhaseCurve], index: usize) -> Complex64 {
    let mut z = Complex64::new(0.0, 0.0);
    for c in curves {
        let d = c.ddelta_dlambda[index];
        let (s, co) = (2.0 * c.delta[index]).sin_cos();
        let w = weight(c.ell);
        z += Complex64::new(w * 2.0 * d * (co - 1.0), w * 2.0 * d * s);
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenphase {
    pub ell: u32,
    /// `2 delta_l`; the eigenvalue is `exp(i * two_delta)`.
    pub two_delta: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SMatrixSample {
    pub lambda: f64,
    pub eigenphases: Vec<Eigenphase>,
    /// `2 sum (2l+1) delta_l`, unfolded.
    pub det_phase: f64,
    pub lmax: u32,
}

impl SMatrixSample {
    pub fn eigenvalues(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.eigenphases.iter().map(|e| Complex64::from_polar(1.0, e.two_delta))
    }
}

pub fn det_phase(curves: &[PhaseCurve], index: usize) -> f64 {
    curves.iter().map(|c| 2.0 * weight(c.ell) * c.delta[index]).sum()
}

pub fn det_s_sample(curves: &[PhaseCurve], index: usize) -> SMatrixSample {
    SMatrixSample {
        lambda: curves[0].lambda_nodes[index],
        eigenphases: curves
            .iter()
            .map(|c| Eigenphase {
                ell: c.ell,
                two_delta: 2.0 * c.delta[index],
                multiplicity: 2 * c.ell + 1,
            })
            .collect(),
        det_phase: det_phase(curves, index),
        lmax: curves.last().map_or(0, |c| c.ell),
    }
}

/// Fixed 17-significant-digit float formatting used by every CSV column.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per `(node, l)`: `lambda,ell,delta,ddelta_dlambda`.
pub fn write_phase_csv<W: Write>(curves: &[PhaseCurve], mut out: W) -> std::io::Result<()> {
    out.write_all(b"lambda,ell,delta,ddelta_dlambda\n")?;
    let n = curves.first().map_or(0, |c| c.lambda_nodes.len());
    for i in 0..n {
        for c in curves {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_float(c.lambda_nodes[i]),
                c.ell,
                fmt_float(c.delta[i]),
                fmt_float(c.ddelta_dlambda[i])
            )?;
        }
    }
    Ok(())
}

/// One row per node: `lambda,integrand_classical,integrand_eq4_re,integrand_eq4_im,det_phase`.
pub fn write_aggregate_csv<W: Write>(curves: &[PhaseCurve], mut out: W) -> std::io::Result<()> {
    out.write_all(b"lambda,integrand_classical,integrand_eq4_re,integrand_eq4_im,det_phase\n")?;
    let n = curves.first().map_or(0, |c| c.lambda_nodes.len());
    for i in 0..n {
        let z = topological_integrand(curves, i);
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(curves[0].lambda_nodes[i]),
            fmt_float(time_delay_integrand(curves, i)),
            fmt_float(z.re),
            fmt_float(z.im),
            fmt_float(det_phase(curves, i))
        )?;
    }
    Ok(())
}
