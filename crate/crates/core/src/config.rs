//! Run configuration: TOML schema, defaults, validation and dotted-key
//! overrides.
//!
//! ```toml
//! [potential]
//! kind = "square_well"   # free | square_well | gaussian | exponential | tabulated
//! V0 = 4.0
//! a = 1.0                # sigma for gaussian, mu for exponential
//!
//! [grid]
//! lambda_min = 1e-4
//! lambda_max = 400.0
//! points = 2000
//!
//! [lmax]
//! mode = "auto"          # or "fixed" together with `fixed = L`
//! pad = 8
//!
//! [tol]
//! quadrature = 1e-8
//! root = 1e-10
//! residual = 1e-2
//!
//! [output]
//! csv = "phases.csv"
//! json = "report.json"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::smatrix::GridSpec;

pub const DEFAULT_LAMBDA_MIN: f64 = 1e-4;
pub const DEFAULT_LAMBDA_MAX: f64 = 400.0;
pub const DEFAULT_POINTS: usize = 2000;
pub const DEFAULT_PAD: u32 = 8;
pub const DEFAULT_RANGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmaxPolicy {
    Fixed(u32),
    Auto { pad: u32 },
}

impl LmaxPolicy {
    /// `ceil(sqrt(lambda_max) * r_cut) + pad` for the auto policy.
    pub fn resolve(&self, r_cut: f64, lambda_max: f64) -> u32 {
        match *self {
            LmaxPolicy::Fixed(l) => l,
            LmaxPolicy::Auto { pad } => (lambda_max.sqrt() * r_cut).ceil() as u32 + pad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub quadrature: f64,
    pub root: f64,
    pub residual: f64,
    /// Bound on `|delta(lambda_min) - pi N|` and on `|S(lambda_min) - 1|`.
    pub threshold: f64,
    /// Zero-energy resonance detection threshold (dimensionless).
    pub resonance: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            quadrature: 1e-8,
            root: 1e-10,
            residual: 1e-2,
            threshold: 0.05,
            resonance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub lmax: LmaxPolicy,
    pub tol: ToleranceConfig,
    pub output: OutputPaths,
}

impl RunConfig {
    /// Default grid, tolerances and lmax policy around `potential`.
    pub fn with_potential(potential: PotentialSpec) -> Self {
        RunConfig {
            potential,
            grid: GridSpec::default(),
            lmax: LmaxPolicy::Auto { pad: DEFAULT_PAD },
            tol: ToleranceConfig::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn lmax(&self) -> u32 {
        self.lmax.resolve(self.potential.r_cut(), self.grid.lambda_max)
    }

    /// Serializes back into the TOML schema.
    pub fn to_toml(&self) -> String {
        let doc = Document::from_config(self);
        toml::to_string(&doc).expect("config document always serializes")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    potential: PotentialDoc,
    #[serde(default)]
    grid: GridDoc,
    #[serde(default)]
    lmax: LmaxDoc,
    #[serde(default)]
    tol: TolDoc,
    #[serde(default)]
    output: OutputDoc,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialDoc {
    kind: String,
    #[serde(rename = "V0", skip_serializing_if = "Option::is_none")]
    v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_env: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<i64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LmaxDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pad: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed: Option<i64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resonance: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    json: Option<PathBuf>,
}

impl Document {
    fn from_config(cfg: &RunConfig) -> Self {
        let p = &cfg.potential;
        let kind = p.kind();
        let mut potential = PotentialDoc {
            kind: kind.as_str().to_string(),
            v0: p.strength(),
            ..Default::default()
        };
        match kind {
            PotentialKind::SquareWell => potential.a = p.range(),
            PotentialKind::Gaussian => potential.sigma = p.range(),
            PotentialKind::Exponential => potential.mu = p.range(),
            PotentialKind::Tabulated => {
                potential.table_path = p.table().and_then(|t| t.source().map(Path::to_path_buf));
                potential.beta = Some(p.beta_decay());
                potential.c_env = Some(p.c_env());
            }
            PotentialKind::Free => {}
        }
        let (mode, pad, fixed) = match cfg.lmax {
            LmaxPolicy::Auto { pad } => ("auto", Some(pad as i64), None),
            LmaxPolicy::Fixed(l) => ("fixed", None, Some(l as i64)),
        };
        Document {
            potential,
            grid: GridDoc {
                lambda_min: Some(cfg.grid.lambda_min),
                lambda_max: Some(cfg.grid.lambda_max),
                points: Some(cfg.grid.points as i64),
            },
            lmax: LmaxDoc {
                mode: Some(mode.into()),
                pad,
                fixed,
            },
            tol: TolDoc {
                quadrature: Some(cfg.tol.quadrature),
                root: Some(cfg.tol.root),
                residual: Some(cfg.tol.residual),
                threshold: Some(cfg.tol.threshold),
                resonance: Some(cfg.tol.resonance),
            },
            output: OutputDoc {
                csv: cfg.output.csv.clone(),
                json: cfg.output.json.clone(),
            },
        }
    }
}

fn positive(key: &str, value: Option<f64>, default: f64) -> Result<f64> {
    let x = value.unwrap_or(default);
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::validation(key, format!("must be > 0, got {x}")))
    }
}

fn required(key: &str, value: Option<f64>, kind: &str) -> Result<f64> {
    value.ok_or_else(|| Error::validation(key, format!("required for kind `{kind}`")))
}

/// Reads a two-column (`r`, `V`) table; `#` comments and a non-numeric
/// header row are skipped. Commas, tabs and spaces all separate columns.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = Vec::new();
    let mut v = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse().ok()).collect();
        match parsed {
            Some(vals) if vals.len() == 2 => {
                r.push(vals[0]);
                v.push(vals[1]);
            }
            None if r.is_empty() => continue,
            _ => {
                return Err(Error::Parse {
                    key: "potential.table_path".into(),
                    message: format!("{}:{}: expected two numeric columns", path.display(), lineno + 1),
                })
            }
        }
    }
    Ok((r, v))
}

fn build(doc: Document, base_dir: Option<&Path>) -> Result<RunConfig> {
    let pd = &doc.potential;
    let kind = pd.kind.as_str();
    let potential = match kind {
        "free" => PotentialSpec::free(),
        "square_well" => PotentialSpec::square_well(
            required("potential.V0", pd.v0, kind)?,
            positive("potential.a", pd.a, DEFAULT_RANGE)?,
        )?,
        "gaussian" => PotentialSpec::gaussian(
            required("potential.V0", pd.v0, kind)?,
            positive("potential.sigma", pd.sigma, DEFAULT_RANGE)?,
        )?,
        "exponential" => PotentialSpec::exponential(
            required("potential.V0", pd.v0, kind)?,
            positive("potential.mu", pd.mu, DEFAULT_RANGE)?,
        )?,
        "tabulated" => {
            let raw = pd.table_path.as_ref().ok_or_else(|| {
                Error::validation("potential.table_path", "required for kind `tabulated`")
            })?;
            let path = match base_dir {
                Some(base) if raw.is_relative() => base.join(raw),
                _ => raw.clone(),
            };
            let (r, v) = read_table(&path)?;
            let beta = required("potential.beta", pd.beta, kind)?;
            let c_env = required("potential.c_env", pd.c_env, kind)?;
            PotentialSpec::tabulated(r, v, c_env, beta, Some(path))?
        }
        other => {
            return Err(Error::validation(
                "potential.kind",
                format!("unknown kind `{other}` (expected free, square_well, gaussian, exponential, tabulated)"),
            ))
        }
    };

    let lambda_min = doc.grid.lambda_min.unwrap_or(DEFAULT_LAMBDA_MIN);
    if !(lambda_min.is_finite() && lambda_min > 0.0) {
        return Err(Error::validation("grid.lambda_min", "λ_min must be > 0"));
    }
    let lambda_max = doc.grid.lambda_max.unwrap_or(DEFAULT_LAMBDA_MAX);
    if !(lambda_max.is_finite() && lambda_max > lambda_min) {
        return Err(Error::validation("grid.lambda_max", "λ_max must be > λ_min"));
    }
    let points = doc.grid.points.unwrap_or(DEFAULT_POINTS as i64);
    if points < 16 {
        return Err(Error::validation("grid.points", "points must be >= 16"));
    }
    let grid = GridSpec::new(lambda_min, lambda_max, points as usize)?;

    let lmax = match doc.lmax.mode.as_deref().unwrap_or("auto") {
        "auto" => {
            if doc.lmax.fixed.is_some() {
                return Err(Error::validation("lmax.fixed", "only valid with lmax.mode = \"fixed\""));
            }
            let pad = doc.lmax.pad.unwrap_or(DEFAULT_PAD as i64);
            if !(0..=10_000).contains(&pad) {
                return Err(Error::validation("lmax.pad", "must be in 0..=10000"));
            }
            LmaxPolicy::Auto { pad: pad as u32 }
        }
        "fixed" => {
            let l = doc
                .lmax
                .fixed
                .ok_or_else(|| Error::validation("lmax.fixed", "required when lmax.mode = \"fixed\""))?;
            if !(0..=10_000).contains(&l) {
                return Err(Error::validation("lmax.fixed", "must be in 0..=10000"));
            }
            if doc.lmax.pad.is_some() {
                return Err(Error::validation("lmax.pad", "only valid with lmax.mode = \"auto\""));
            }
            LmaxPolicy::Fixed(l as u32)
        }
        other => {
            return Err(Error::validation(
                "lmax.mode",
                format!("expected \"auto\" or \"fixed\", got \"{other}\""),
            ))
        }
    };

    let d = ToleranceConfig::default();
    let tol = ToleranceConfig {
        quadrature: positive("tol.quadrature", doc.tol.quadrature, d.quadrature)?,
        root: positive("tol.root", doc.tol.root, d.root)?,
        residual: positive("tol.residual", doc.tol.residual, d.residual)?,
        threshold: positive("tol.threshold", doc.tol.threshold, d.threshold)?,
        resonance: positive("tol.resonance", doc.tol.resonance, d.resonance)?,
    };

    Ok(RunConfig {
        potential,
        grid,
        lmax,
        tol,
        output: OutputPaths {
            csv: doc.output.csv,
            json: doc.output.json,
        },
    })
}

/// Locates the dotted key a TOML error points at, for diagnostics.
fn key_at(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    let Some(span) = span else {
        return "document".into();
    };
    let start = span.start.min(text.len());
    let mut section = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        if offset + line.len() > start {
            break;
        }
        offset += line.len();
    }
    match (section.is_empty(), key.is_empty()) {
        (true, true) => "document".into(),
        (true, false) => key,
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| Error::Parse {
        key: key_at(text, e.span()),
        message: e.message().to_string(),
    })
}

fn deserialize(table: toml::Table) -> Result<Document> {
    let text = table.to_string();
    toml::from_str::<Document>(&text).map_err(|e| Error::Parse {
        key: key_at(&text, e.span()),
        message: e.message().to_string(),
    })
}

/// Parses and validates a configuration document. Relative table paths are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    parse_config_with_overrides(text, base_dir, &[])
}

/// Parses a document and applies `key=value` overrides with dotted keys
/// (`grid.points=4000`) before validation.
pub fn parse_config_with_overrides(
    text: &str,
    base_dir: Option<&Path>,
    overrides: &[String],
) -> Result<RunConfig> {
    let mut table = parse_table(text)?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    build(deserialize(table)?, base_dir)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item.split_once('=').ok_or_else(|| Error::Parse {
        key: item.to_string(),
        message: "override must have the form key=value".into(),
    })?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse {
            key: key.to_string(),
            message: "override keys are `section.key`".into(),
        });
    }
    let section = table
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match section {
        toml::Value::Table(t) => {
            t.insert(parts[1].to_string(), value);
            Ok(())
        }
        _ => Err(Error::Parse {
            key: parts[0].to_string(),
            message: "not a table".into(),
        }),
    }
}
