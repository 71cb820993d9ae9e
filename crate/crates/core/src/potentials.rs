//! Spherically symmetric short-range potentials.
//!
//! Units throughout the crate: `hbar = 2m = 1`, so the free Hamiltonian is
//! `-Laplacian`, energies are `lambda = k^2` and lengths are dimensionless.
//! A positive strength `V0` denotes an attractive well of depth `V0`.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;

/// Smooth kinds are truncated where `|V(r)| <= CUTOFF_RELATIVE * |V0|`.
pub const CUTOFF_RELATIVE: f64 = 1e-12;

const DEFAULT_FREE_RANGE: f64 = 1.0;
/// Decay exponent certified for the analytic kinds (they are compactly
/// supported after truncation, so any exponent holds with a suitable `c`).
const CERTIFIED_BETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Free,
    SquareWell,
    Gaussian,
    Exponential,
    Tabulated,
}

impl PotentialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::SquareWell => "square_well",
            PotentialKind::Gaussian => "gaussian",
            PotentialKind::Exponential => "exponential",
            PotentialKind::Tabulated => "tabulated",
        }
    }
}

/// Samples of a tabulated potential with monotone cubic (Fritsch–Carlson)
/// slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    r: Vec<f64>,
    v: Vec<f64>,
    slopes: Vec<f64>,
    source: Option<PathBuf>,
}

impl Table {
    fn new(r: Vec<f64>, v: Vec<f64>, source: Option<PathBuf>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::validation(
                "potential.table_path",
                "radius and value columns differ in length",
            ));
        }
        if r.len() < 2 {
            return Err(Error::validation(
                "potential.table_path",
                "a table needs at least two samples",
            ));
        }
        if r.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation(
                "potential.table_path",
                "samples must be finite",
            ));
        }
        if r[0] < 0.0 {
            return Err(Error::validation(
                "potential.table_path",
                "radii must be >= 0",
            ));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "potential.table_path",
                "radii must be strictly increasing",
            ));
        }
        let slopes = monotone_slopes(&r, &v);
        Ok(Table {
            r,
            v,
            slopes,
            source,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn source(&self) -> Option<&std::path::Path> {
        self.source.as_deref()
    }

    fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.v[0];
        }
        if r > self.r[n - 1] {
            return 0.0;
        }
        let i = match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.v[i] + h10 * h * self.slopes[i] + h01 * self.v[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secants: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        m[i] = if secants[i - 1] * secants[i] <= 0.0 {
            0.0
        } else {
            0.5 * (secants[i - 1] + secants[i])
        };
    }
    for i in 0..n - 1 {
        let d = secants[i];
        if d == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d;
        let b = m[i + 1] / d;
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * d;
            m[i + 1] = tau * b * d;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Free { range: f64 },
    SquareWell { depth: f64, radius: f64 },
    Gaussian { depth: f64, sigma: f64 },
    Exponential { depth: f64, mu: f64 },
    Tabulated(Table),
}

/// A spherically symmetric short-range potential together with its cutoff
/// radius and decay certificate `|V(r)| <= c_env (1 + r)^(-beta_decay)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    shape: Shape,
    r_cut: f64,
    beta_decay: f64,
    c_env: f64,
}

fn check_positive(key: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(key, format!("must be finite and > 0, got {x}")))
    }
}

fn check_finite(key: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(key, format!("must be finite, got {x}")))
    }
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec {
            shape: Shape::Free {
                range: DEFAULT_FREE_RANGE,
            },
            r_cut: DEFAULT_FREE_RANGE,
            beta_decay: CERTIFIED_BETA,
            c_env: 0.0,
        }
    }

    /// `V(r) = -v0` for `r <= a`, zero outside.
    pub fn square_well(v0: f64, a: f64) -> Result<Self> {
        check_finite("potential.V0", v0)?;
        check_positive("potential.a", a)?;
        Ok(PotentialSpec {
            shape: Shape::SquareWell {
                depth: v0,
                radius: a,
            },
            r_cut: a,
            beta_decay: CERTIFIED_BETA,
            c_env: v0.abs() * (1.0 + a).powf(CERTIFIED_BETA),
        })
    }

    /// `V(r) = -v0 exp(-(r/sigma)^2)`, truncated at `CUTOFF_RELATIVE`.
    pub fn gaussian(v0: f64, sigma: f64) -> Result<Self> {
        check_finite("potential.V0", v0)?;
        check_positive("potential.sigma", sigma)?;
        let r_cut = sigma * (1.0 / CUTOFF_RELATIVE).ln().sqrt();
        let r_star = 0.5 * ((1.0 + 4.0 * sigma * sigma).sqrt() - 1.0);
        let c_env = v0.abs() * (-(r_star / sigma).powi(2)).exp() * (1.0 + r_star).powf(CERTIFIED_BETA);
        Ok(PotentialSpec {
            shape: Shape::Gaussian { depth: v0, sigma },
            r_cut,
            beta_decay: CERTIFIED_BETA,
            c_env,
        })
    }

    /// `V(r) = -v0 exp(-r/mu)`, truncated at `CUTOFF_RELATIVE`.
    pub fn exponential(v0: f64, mu: f64) -> Result<Self> {
        check_finite("potential.V0", v0)?;
        check_positive("potential.mu", mu)?;
        let r_cut = mu * (1.0 / CUTOFF_RELATIVE).ln();
        let r_star = (2.0 * mu - 1.0).max(0.0);
        let c_env = v0.abs() * (-r_star / mu).exp() * (1.0 + r_star).powf(CERTIFIED_BETA);
        Ok(PotentialSpec {
            shape: Shape::Exponential { depth: v0, mu },
            r_cut,
            beta_decay: CERTIFIED_BETA,
            c_env,
        })
    }

    /// Tabulated potential; the envelope `(c_env, beta)` is verified on
    /// every sample and must have `beta > 1`.
    pub fn tabulated(
        r: Vec<f64>,
        v: Vec<f64>,
        c_env: f64,
        beta: f64,
        source: Option<PathBuf>,
    ) -> Result<Self> {
        if !(beta.is_finite() && beta > 1.0) {
            return Err(Error::validation(
                "potential.beta",
                format!("decay exponent must be > 1, got {beta}"),
            ));
        }
        check_positive("potential.c_env", c_env)?;
        let table = Table::new(r, v, source)?;
        for (&ri, &vi) in table.r.iter().zip(table.v.iter()) {
            let bound = c_env * (1.0 + ri).powf(-beta);
            if vi.abs() > bound * (1.0 + 1e-12) {
                return Err(Error::validation(
                    "potential.c_env",
                    format!("envelope violated at r={ri}: |V|={} > {bound}", vi.abs()),
                ));
            }
        }
        let r_cut = *table.r.last().unwrap_or(&DEFAULT_FREE_RANGE);
        check_positive("potential.table_path", r_cut)?;
        Ok(PotentialSpec {
            shape: Shape::Tabulated(table),
            r_cut,
            beta_decay: beta,
            c_env,
        })
    }

    pub fn kind(&self) -> PotentialKind {
        match self.shape {
            Shape::Free { .. } => PotentialKind::Free,
            Shape::SquareWell { .. } => PotentialKind::SquareWell,
            Shape::Gaussian { .. } => PotentialKind::Gaussian,
            Shape::Exponential { .. } => PotentialKind::Exponential,
            Shape::Tabulated(_) => PotentialKind::Tabulated,
        }
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    pub fn beta_decay(&self) -> f64 {
        self.beta_decay
    }

    pub fn c_env(&self) -> f64 {
        self.c_env
    }

    /// Strength `V0` for the analytic kinds.
    pub fn strength(&self) -> Option<f64> {
        match self.shape {
            Shape::Free { .. } | Shape::Tabulated(_) => None,
            Shape::SquareWell { depth, .. }
            | Shape::Gaussian { depth, .. }
            | Shape::Exponential { depth, .. } => Some(depth),
        }
    }

    /// Range parameter (`a`, `sigma` or `mu`) for the analytic kinds.
    pub fn range(&self) -> Option<f64> {
        match self.shape {
            Shape::Free { .. } | Shape::Tabulated(_) => None,
            Shape::SquareWell { radius, .. } => Some(radius),
            Shape::Gaussian { sigma, .. } => Some(sigma),
            Shape::Exponential { mu, .. } => Some(mu),
        }
    }

    pub fn table(&self) -> Option<&Table> {
        match &self.shape {
            Shape::Tabulated(t) => Some(t),
            _ => None,
        }
    }

    /// Pointwise value `V(r)`; exactly zero for `r > r_cut`.
    #[inline]
    pub fn evaluate(&self, r: f64) -> f64 {
        if r > self.r_cut {
            return 0.0;
        }
        match &self.shape {
            Shape::Free { .. } => 0.0,
            Shape::SquareWell { depth, .. } => -depth,
            Shape::Gaussian { depth, sigma } => {
                let x = r / sigma;
                -depth * (-x * x).exp()
            }
            Shape::Exponential { depth, mu } => -depth * (-r / mu).exp(),
            Shape::Tabulated(t) => t.eval(r),
        }
    }

    /// Lower bound of `V` over `[0, r_cut]` (never above zero).
    pub fn min_value(&self) -> f64 {
        match &self.shape {
            Shape::Free { .. } => 0.0,
            Shape::SquareWell { depth, .. }
            | Shape::Gaussian { depth, .. }
            | Shape::Exponential { depth, .. } => (-depth).min(0.0),
            Shape::Tabulated(t) => t.v.iter().copied().fold(0.0, f64::min),
        }
    }

    /// Upper bound of `|V|` over `[0, r_cut]`.
    pub fn max_abs(&self) -> f64 {
        match &self.shape {
            Shape::Free { .. } => 0.0,
            Shape::SquareWell { depth, .. }
            | Shape::Gaussian { depth, .. }
            | Shape::Exponential { depth, .. } => depth.abs(),
            Shape::Tabulated(t) => t.v.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// True when `V` never changes sign, so the node theorem count is
    /// certified without further checks.
    pub fn is_sign_definite(&self) -> bool {
        match &self.shape {
            Shape::Tabulated(t) => {
                t.v.iter().all(|&v| v <= 0.0) || t.v.iter().all(|&v| v >= 0.0)
            }
            _ => true,
        }
    }

    /// Whether `V` jumps to zero at `r_cut` (interior limit differs from 0).
    pub fn has_edge(&self) -> bool {
        matches!(self.shape, Shape::SquareWell { .. } | Shape::Tabulated(_))
    }

    /// `V_s(r) = s^2 V(s r)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        check_positive("scale", s)?;
        match &self.shape {
            Shape::Free { range } => {
                let mut out = Self::free();
                out.shape = Shape::Free { range: range / s };
                out.r_cut = range / s;
                Ok(out)
            }
            Shape::SquareWell { depth, radius } => Self::square_well(depth * s * s, radius / s),
            Shape::Gaussian { depth, sigma } => Self::gaussian(depth * s * s, sigma / s),
            Shape::Exponential { depth, mu } => Self::exponential(depth * s * s, mu / s),
            Shape::Tabulated(t) => {
                let r = t.r.iter().map(|r| r / s).collect();
                let v = t.v.iter().map(|v| v * s * s).collect();
                let c = self.c_env * s * s * (1.0f64).max(1.0 / s).powf(self.beta_decay);
                Self::tabulated(r, v, c, self.beta_decay, t.source.clone())
            }
        }
    }

    /// Same shape with strength replaced; `None` for kinds without a strength.
    pub fn with_strength(&self, v0: f64) -> Result<Self> {
        match &self.shape {
            Shape::SquareWell { radius, .. } => Self::square_well(v0, *radius),
            Shape::Gaussian { sigma, .. } => Self::gaussian(v0, *sigma),
            Shape::Exponential { mu, .. } => Self::exponential(v0, *mu),
            Shape::Free { .. } | Shape::Tabulated(_) => Err(Error::Usage(format!(
                "potential kind `{}` has no strength parameter",
                self.kind().as_str()
            ))),
        }
    }

    /// Closed-form `int_0^inf V(r) r^2 dr` where one exists.
    pub fn born_nu_closed_form(&self) -> Option<f64> {
        match self.shape {
            Shape::Free { .. } => Some(0.0),
            Shape::SquareWell { depth, radius } => Some(-depth * radius.powi(3) / 3.0),
            Shape::Gaussian { depth, sigma } => {
                Some(-depth * sigma.powi(3) * std::f64::consts::PI.sqrt() / 4.0)
            }
            Shape::Exponential { depth, mu } => Some(-2.0 * depth * mu.powi(3)),
            Shape::Tabulated(_) => None,
        }
    }

    pub fn summary(&self) -> PotentialSummary {
        PotentialSummary {
            kind: self.kind().as_str(),
            v0: self.strength(),
            a: match self.shape {
                Shape::SquareWell { radius, .. } => Some(radius),
                _ => None,
            },
            sigma: match self.shape {
                Shape::Gaussian { sigma, .. } => Some(sigma),
                _ => None,
            },
            mu: match self.shape {
                Shape::Exponential { mu, .. } => Some(mu),
                _ => None,
            },
            table_path: self
                .table()
                .and_then(|t| t.source().map(|p| p.display().to_string())),
            r_cut: self.r_cut,
            beta: self.beta_decay,
            c_env: self.c_env,
            sign_definite: self.is_sign_definite(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialSummary {
    pub kind: &'static str,
    #[serde(rename = "V0", skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_path: Option<String>,
    pub r_cut: f64,
    pub beta: f64,
    pub c_env: f64,
    pub sign_definite: bool,
}

/// Born constant `nu = (4 pi)^-1 int V d^3x = int_0^inf V(r) r^2 dr`.
///
/// Integrated adaptively on `[0, r_cut]` (piecewise between samples for
/// tabulated kinds); when a closed form exists the two are cross-checked and
/// the closed form is returned.
pub fn born_nu(spec: &PotentialSpec, rel_tol: f64) -> Result<f64> {
    let integrand = |r: f64| spec.evaluate(r) * r * r;
    let abs_floor = 1e-300;
    let numeric = match spec.table() {
        Some(t) => {
            let mut total = quadrature::integrate(integrand, 0.0, t.r[0], rel_tol, abs_floor)?.value;
            for w in t.r.windows(2) {
                total += quadrature::integrate(integrand, w[0], w[1], rel_tol, abs_floor)?.value;
            }
            total
        }
        None => quadrature::integrate(integrand, 0.0, spec.r_cut, rel_tol, abs_floor)?.value,
    };
    match spec.born_nu_closed_form() {
        Some(exact) => {
            let tolerance = 10.0 * rel_tol * exact.abs() + spec.max_abs() * CUTOFF_RELATIVE * spec.r_cut.powi(3);
            let gap = (numeric - exact).abs();
            if gap > tolerance.max(1e-300) {
                return Err(Error::Numerical {
                    context: "born_nu cross-check".into(),
                    estimate: gap,
                });
            }
            Ok(exact)
        }
        None => Ok(numeric),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(PotentialSpec::free().evaluate(1.0), 0.0);
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        assert_eq!(well.evaluate(0.5), -4.0);
        assert_eq!(well.evaluate(1.5), 0.0);
        assert_eq!(well.evaluate(1.0), -4.0);
    }

    #[test]
    fn born_nu_examples() {
        assert_eq!(born_nu(&PotentialSpec::free(), 1e-8).unwrap(), 0.0);
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        assert!((born_nu(&well, 1e-8).unwrap() + 4.0 / 3.0).abs() < 1e-12);
        let g = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        assert!((born_nu(&g, 1e-8).unwrap() + std::f64::consts::PI.sqrt() / 4.0).abs() < 1e-10);
        let e = PotentialSpec::exponential(2.0, 0.5).unwrap();
        assert!((born_nu(&e, 1e-8).unwrap() + 0.5).abs() < 1e-10);
    }

    #[test]
    fn envelopes_hold_on_samples() {
        let specs = [
            PotentialSpec::square_well(4.0, 1.0).unwrap(),
            PotentialSpec::gaussian(10.0, 1.3).unwrap(),
            PotentialSpec::gaussian(3.0, 0.2).unwrap(),
            PotentialSpec::exponential(5.0, 0.7).unwrap(),
            PotentialSpec::exponential(5.0, 0.2).unwrap(),
        ];
        for s in &specs {
            assert!(s.beta_decay() > 1.0);
            for i in 0..=4000 {
                let r = s.r_cut() * 1.2 * i as f64 / 4000.0;
                let bound = s.c_env() * (1.0 + r).powf(-s.beta_decay());
                assert!(s.evaluate(r).abs() <= bound * (1.0 + 1e-12), "{s:?} r={r}");
            }
        }
    }

    #[test]
    fn tabulated_rejects_bad_envelope_and_beta() {
        let r = vec![0.0, 0.5, 1.0];
        let v = vec![-1.0, -0.5, -0.1];
        assert!(PotentialSpec::tabulated(r.clone(), v.clone(), 2.0, 1.0, None).is_err());
        assert!(PotentialSpec::tabulated(r.clone(), v.clone(), 0.5, 2.0, None).is_err());
        let t = PotentialSpec::tabulated(r, v, 2.0, 2.0, None).unwrap();
        assert_eq!(t.evaluate(0.5), -0.5);
        assert_eq!(t.evaluate(1.01), 0.0);
        assert!(t.is_sign_definite());
    }

    #[test]
    fn tabulated_interpolation_is_monotone_on_monotone_data() {
        let r: Vec<f64> = (0..12).map(|i| i as f64 * 0.25).collect();
        let v: Vec<f64> = r.iter().map(|&x| -3.0 * (-x * x).exp()).collect();
        let t = PotentialSpec::tabulated(r, v, 3.0 * 4.0, 2.0, None).unwrap();
        let mut prev = t.evaluate(0.0);
        for i in 1..=1100 {
            let x = i as f64 * 0.0025;
            let y = t.evaluate(x);
            assert!(y >= prev - 1e-15, "x={x}");
            prev = y;
        }
    }

    #[test]
    fn mixed_sign_table_is_flagged() {
        let t = PotentialSpec::tabulated(vec![0.0, 1.0, 2.0], vec![-1.0, 0.05, 0.0], 2.0, 1.5, None)
            .unwrap();
        assert!(!t.is_sign_definite());
    }

    #[test]
    fn scaling_of_born_nu() {
        let well = PotentialSpec::square_well(4.0, 1.0).unwrap();
        let s = 1.7;
        let scaled = well.scaled(s).unwrap();
        let a = born_nu(&well, 1e-10).unwrap();
        let b = born_nu(&scaled, 1e-10).unwrap();
        assert!((b - a / s).abs() < 1e-12);
    }
}
