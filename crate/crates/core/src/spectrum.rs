//! Bound states per partial wave: Sturm node counting at zero energy,
//! eigenvalues by bisection on the node count, and zero-energy resonance
//! detection.

use serde::Serialize;

use crate::config::LmaxPolicy;
use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::radial::{endpoint, Endpoint};

/// Target `h * sqrt(max|V - E|)` for spectral propagations.
const SPECTRAL_HQ: f64 = 0.005;
const MIN_SPECTRAL_STEPS: usize = 4000;
/// Zero-energy solutions with `|l u + R u'| / ((2l+1) |u|)` below this are
/// treated as threshold states (half-bound for `l = 0`) and get no
/// exterior node.
pub const THRESHOLD_AMBIGUITY: f64 = 1e-6;
/// Auto policy stops here even if every channel up to it is bound.
const MAX_AUTO_ELL: u32 = 10_000;

/// Numerov steps on `[0, r_cut]` for energy `energy`.
pub fn spectral_steps(spec: &PotentialSpec, ell: u32, energy: f64) -> usize {
    let q = (spec.max_abs() + energy.abs()).sqrt();
    let base = (spec.r_cut() * q / SPECTRAL_HQ).ceil() as usize;
    base.max(MIN_SPECTRAL_STEPS) + 4 * ell as usize
}

fn propagate_to_cut(spec: &PotentialSpec, ell: u32, energy: f64) -> Result<Endpoint> {
    endpoint(spec, ell, energy, spec.r_cut(), spectral_steps(spec, ell, energy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundCount {
    pub count: usize,
    /// Set for potentials that change sign: the Sturm count is reported
    /// but flagged for independent verification.
    pub node_theorem_caveat: bool,
}

/// `N_l` as the number of nodes of the zero-energy regular solution on
/// `(0, inf)`. Beyond `r_cut` the solution is `A r^(l+1) + B r^(-l)` with
/// `A ∝ l u + R u'`, which has one more zero iff `u(R)` and `A` differ in
/// sign. Solutions within `THRESHOLD_AMBIGUITY` of a threshold state get no
/// exterior node: a zero-energy resonance is not a bound state.
pub fn count_bound_states(spec: &PotentialSpec, ell: u32) -> Result<BoundCount> {
    let end = propagate_to_cut(spec, ell, 0.0)?;
    let r = spec.r_cut();
    let a = ell as f64 * end.u + r * end.du;
    let at_threshold = a.abs() <= THRESHOLD_AMBIGUITY * (2 * ell + 1) as f64 * end.u.abs();
    let exterior = usize::from(end.u * a < 0.0 && !at_threshold);
    Ok(BoundCount {
        count: end.nodes + exterior,
        node_theorem_caveat: !spec.is_sign_definite(),
    })
}

/// Log-derivative `d/dr ln[k_hat_l(kappa r)]` of the decaying exterior
/// solution at `r`, from the upward recurrence of `e^x k_hat_l(x)`.
pub fn decaying_log_derivative(ell: u32, kappa: f64, r: f64) -> f64 {
    let x = kappa * r;
    let mut prev = 1.0;
    if ell == 0 {
        return -kappa;
    }
    let mut curr = 1.0 + 1.0 / x;
    for n in 1..ell {
        let next = prev + (2 * n + 1) as f64 / x * curr;
        prev = curr;
        curr = next;
    }
    // k_hat_l' = -k_hat_{l-1} - (l/x) k_hat_l.
    kappa * (-prev / curr - ell as f64 / x)
}

/// Number of eigenvalues below `energy < 0`: interior nodes plus one if the
/// regular solution crosses zero again in the exterior.
fn states_below(spec: &PotentialSpec, ell: u32, energy: f64) -> Result<(usize, Endpoint)> {
    let end = propagate_to_cut(spec, ell, energy)?;
    let lk = decaying_log_derivative(ell, (-energy).sqrt(), spec.r_cut());
    // Exterior zero iff u' - Lk u has the opposite sign of u.
    let exterior = usize::from(end.u * (end.du - lk * end.u) < 0.0);
    Ok((end.nodes + exterior, end))
}

/// Normalized matching mismatch `(u' - Lk u) / (|u'| + |Lk u|)` at `r_cut`.
pub fn matching_mismatch(spec: &PotentialSpec, ell: u32, energy: f64) -> Result<f64> {
    let end = propagate_to_cut(spec, ell, energy)?;
    Ok(mismatch_of(&end, ell, energy, spec.r_cut()))
}

fn mismatch_of(end: &Endpoint, ell: u32, energy: f64, r: f64) -> f64 {
    let lk = decaying_log_derivative(ell, (-energy).sqrt(), r);
    let num = end.du - lk * end.u;
    let den = end.du.abs() + (lk * end.u).abs();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub energy: f64,
    /// Matching mismatch at `energy`.
    pub mismatch: f64,
}

/// Energy just below threshold used as the upper end of the search: states
/// outside the `THRESHOLD_AMBIGUITY` band have `kappa R` well above `1e-7`.
fn upper_energy(spec: &PotentialSpec) -> f64 {
    -(1e-7 / spec.r_cut()).powi(2)
}

/// All eigenvalues of channel `ell`, increasing. Each is bracketed by a
/// change of the node count, bisected to `root_tol` (absolute energy) and
/// polished on the matching mismatch.
pub fn find_eigenvalues(spec: &PotentialSpec, ell: u32, root_tol: f64) -> Result<Vec<Eigenvalue>> {
    let predicted = count_bound_states(spec, ell)?.count;
    if predicted == 0 || spec.max_abs() == 0.0 {
        return Ok(Vec::new());
    }
    let e_low = spec.min_value();
    let e_high = upper_energy(spec);
    if e_low.partial_cmp(&e_high) != Some(std::cmp::Ordering::Less) {
        return Err(Error::Inconsistency {
            ell,
            predicted,
            found: 0,
        });
    }
    let (n_high, _) = states_below(spec, ell, e_high)?;
    if n_high != predicted {
        return Err(Error::Inconsistency {
            ell,
            predicted,
            found: n_high,
        });
    }
    let mut out = Vec::with_capacity(predicted);
    let mut lo_bound = e_low;
    for n in 0..predicted {
        // Invariant: fewer than n+1 states below lo, at least n+1 below hi.
        let (mut lo, mut hi) = (lo_bound, e_high);
        while hi - lo > root_tol {
            let mid = 0.5 * (lo + hi);
            if states_below(spec, ell, mid)?.0 > n {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let energy = polish(spec, ell, lo, hi)?;
        let mismatch = matching_mismatch(spec, ell, energy)?;
        out.push(Eigenvalue { energy, mismatch });
        lo_bound = hi;
    }
    Ok(out)
}

/// Secant refinement of the mismatch inside a bisection bracket; falls back
/// to the midpoint if the mismatch does not change sign.
fn polish(spec: &PotentialSpec, ell: u32, lo: f64, hi: f64) -> Result<f64> {
    let r = spec.r_cut();
    let m_lo = mismatch_of(&propagate_to_cut(spec, ell, lo)?, ell, lo, r);
    let m_hi = mismatch_of(&propagate_to_cut(spec, ell, hi)?, ell, hi, r);
    if m_lo == 0.0 {
        return Ok(lo);
    }
    if m_hi == 0.0 {
        return Ok(hi);
    }
    if m_lo.signum() == m_hi.signum() {
        return Ok(0.5 * (lo + hi));
    }
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, m_lo, m_hi);
    for _ in 0..60 {
        let c = b - fb * (b - a) / (fb - fa);
        let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = mismatch_of(&propagate_to_cut(spec, ell, c)?, ell, c, r);
        if fc == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs() {
            return Ok(c);
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
        if fa.abs() < fb.abs() && fa.abs() < 1e-15 {
            return Ok(a);
        }
        if fb.abs() < 1e-15 {
            return Ok(b);
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceClass {
    Generic,
    HalfBound,
    /// `u(r_cut)` vanishes: a zero-energy node sits on the boundary.
    ThresholdNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfBoundDiagnostic {
    pub flag: bool,
    /// `|u'(R) R / u(R)|` for the s-wave zero-energy solution.
    pub magnitude: f64,
    pub class: ResonanceClass,
}

/// Zero-energy s-wave resonance test at `R = r_cut`.
pub fn detect_half_bound_state(spec: &PotentialSpec, resonance_tol: f64) -> Result<HalfBoundDiagnostic> {
    let end = propagate_to_cut(spec, 0, 0.0)?;
    let r = spec.r_cut();
    if end.u.abs() <= 1e-10 * r * end.du.abs() {
        return Ok(HalfBoundDiagnostic {
            flag: false,
            magnitude: f64::INFINITY,
            class: ResonanceClass::ThresholdNode,
        });
    }
    let magnitude = (end.du * r / end.u).abs();
    let flag = magnitude < resonance_tol;
    Ok(HalfBoundDiagnostic {
        flag,
        magnitude,
        class: if flag {
            ResonanceClass::HalfBound
        } else {
            ResonanceClass::Generic
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStates {
    pub ell: u32,
    #[serde(rename = "N")]
    pub count: usize,
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub mismatches: Vec<f64>,
    #[serde(skip)]
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateReport {
    pub per_ell: Vec<ChannelStates>,
    #[serde(rename = "trace_P")]
    pub trace_p: u64,
    pub half_bound: HalfBoundDiagnostic,
    /// Highest channel examined.
    pub lmax_used: u32,
    /// True when enumeration stopped at the first empty channel.
    pub stopped_at_empty: bool,
    pub node_theorem_caveat: bool,
}

/// Bound states channel by channel. The auto policy stops at the first
/// `N_l = 0` (counts are nonincreasing in `l`); a fixed policy examines
/// every `l <= L`.
pub fn total_bound_report(
    spec: &PotentialSpec,
    policy: LmaxPolicy,
    root_tol: f64,
    resonance_tol: f64,
) -> Result<BoundStateReport> {
    let limit = match policy {
        LmaxPolicy::Fixed(l) => l,
        LmaxPolicy::Auto { .. } => MAX_AUTO_ELL,
    };
    let mut per_ell = Vec::new();
    let mut trace_p = 0u64;
    let mut stopped_at_empty = false;
    let mut caveat = false;
    for ell in 0..=limit {
        let count = count_bound_states(spec, ell)?;
        caveat |= count.node_theorem_caveat;
        let eig = find_eigenvalues(spec, ell, root_tol)?;
        if eig.len() != count.count {
            return Err(Error::Inconsistency {
                ell,
                predicted: count.count,
                found: eig.len(),
            });
        }
        trace_p += (2 * ell as u64 + 1) * count.count as u64;
        per_ell.push(ChannelStates {
            ell,
            count: count.count,
            eigenvalues: eig.iter().map(|e| e.energy).collect(),
            mismatches: eig.iter().map(|e| e.mismatch).collect(),
            multiplicity: 2 * ell + 1,
        });
        if count.count == 0 && matches!(policy, LmaxPolicy::Auto { .. }) {
            stopped_at_empty = true;
            break;
        }
    }
    let lmax_used = per_ell.last().map_or(0, |c| c.ell);
    Ok(BoundStateReport {
        per_ell,
        trace_p,
        half_bound: detect_half_bound_state(spec, resonance_tol)?,
        lmax_used,
        stopped_at_empty,
        node_theorem_caveat: caveat,
    })
}
