//! Command-line front end. Exit codes: 0 pass, 2 hypothesis violated
//! (zero-energy resonance), 1 numerical, validation or I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config_with_overrides, RunConfig};
use crate::error::{Error, Result};
use crate::levinson::{analyze, half_bound_demo, sweep_depth, threshold_behavior, winding_report, Criterion, Verdict};
use crate::smatrix::{fmt_float, write_aggregate_csv, write_phase_csv};
use crate::spectrum::total_bound_report;

#[derive(Debug, Parser)]
#[command(name = "levinson", version, about = "Numerical checks of Levinson's theorem for radial potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase curves per partial wave; CSV `lambda,ell,delta,ddelta_dlambda`.
    Phases(Common),
    /// Bound states per partial wave and Tr P.
    BoundStates(Common),
    /// Full report: classical and correction-free identities and winding.
    Levinson(Common),
    /// Winding of det S over the compactified energy axis.
    Winding(Common),
    /// Depth sweep of the configured potential shape.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Levinson check on a potential with a zero-energy s-wave resonance.
    DemoResonance(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set grid.points=4000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Same as `--set output.csv=PATH`.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Same as `--set output.json=PATH`.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Include wall-clock timings in the JSON report.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| Error::io(&self.config, e))?;
        let mut overrides = self.overrides.clone();
        if let Some(p) = &self.csv {
            overrides.push(format!("output.csv=\"{}\"", toml_escape(p)));
        }
        if let Some(p) = &self.json {
            overrides.push(format!("output.json=\"{}\"", toml_escape(p)));
        }
        parse_config_with_overrides(&text, self.config.parent(), &overrides)
    }
}

fn toml_escape(p: &Path) -> String {
    p.display().to_string().replace('\\', "\\\\").replace('"', "\\\"")
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn emit(path: Option<&PathBuf>, fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    if let Some(p) = path {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| Error::io(p, e))?;
        write_atomic(p, &buf)?;
    }
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("reports serialize");
    s.push(b'\n');
    s
}

/// Single-line diagnostic: `error: kind=<tag> message=<text>`.
pub fn diagnostic(err: &Error) -> String {
    let msg = err.to_string().replace(['\n', '\r'], " ");
    format!("error: kind={} message={}", err.kind(), msg)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let _ = writeln!(err, "error: kind=usage message={first}");
            return 1;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", diagnostic(&e));
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match command {
        Command::Phases(c) => {
            let cfg = c.load()?;
            let a = analyze(&cfg)?;
            emit(cfg.output.csv.as_ref(), |b| write_phase_csv(&a.curves, b))?;
            let report = a.report(Criterion::All, c.timings);
            emit(cfg.output.json.as_ref(), |b| {
                b.extend(json_bytes(&report));
                Ok(())
            })?;
            writeln!(out, "{:>5} {:>24} {:>24}", "ell", "delta(lambda_min)", "delta(lambda_max)").map_err(io)?;
            for curve in &a.curves {
                writeln!(
                    out,
                    "{:>5} {:>24} {:>24}",
                    curve.ell,
                    fmt_float(curve.threshold_value),
                    fmt_float(curve.delta[curve.delta.len() - 1])
                )
                .map_err(io)?;
            }
            writeln!(out, "nodes {}  lmax {}", a.grid.points, a.lmax).map_err(io)?;
            Ok(0)
        }
        Command::BoundStates(c) => {
            let cfg = c.load()?;
            let rep = total_bound_report(&cfg.potential, cfg.lmax, cfg.tol.root, cfg.tol.resonance)?;
            emit(cfg.output.json.as_ref(), |b| {
                b.extend(json_bytes(&rep));
                Ok(())
            })?;
            writeln!(out, "{:>5} {:>4} eigenvalues", "ell", "N").map_err(io)?;
            for ch in &rep.per_ell {
                let eig: Vec<String> = ch.eigenvalues.iter().map(|e| fmt_float(*e)).collect();
                writeln!(out, "{:>5} {:>4} {}", ch.ell, ch.count, eig.join(" ")).map_err(io)?;
            }
            writeln!(out, "trace_P {}", rep.trace_p).map_err(io)?;
            writeln!(
                out,
                "half_bound {} (|u'R/u| = {})",
                rep.half_bound.flag,
                fmt_float(rep.half_bound.magnitude)
            )
            .map_err(io)?;
            Ok(if rep.half_bound.flag { 2 } else { 0 })
        }
        Command::Levinson(c) => {
            let cfg = c.load()?;
            let a = analyze(&cfg)?;
            let report = a.report(Criterion::All, c.timings);
            emit(cfg.output.csv.as_ref(), |b| write_aggregate_csv(&a.curves, b))?;
            emit(cfg.output.json.as_ref(), |b| {
                b.extend(json_bytes(&report));
                Ok(())
            })?;
            let rows = [
                ("trace_P", report.trace_p.to_string()),
                ("rhs = 2 pi trace_P", fmt_float(report.rhs)),
                ("lhs_topological.re", fmt_float(report.lhs_topological.re)),
                ("lhs_topological.im", fmt_float(report.lhs_topological.im)),
                ("lhs_classical", fmt_float(report.lhs_classical)),
                ("lhs_classical_literal", fmt_float(report.lhs_classical_literal)),
                ("winding", fmt_float(report.winding)),
                ("winding_int", report.winding_int.to_string()),
                ("tail_budget", fmt_float(report.tail_budget)),
                ("flags", report.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")),
                ("verdict", report.verdict.as_str().to_string()),
            ];
            for (k, v) in rows {
                writeln!(out, "{k:<24} {v}").map_err(io)?;
            }
            Ok(report.verdict.exit_code())
        }
        Command::Winding(c) => {
            let cfg = c.load()?;
            let a = analyze(&cfg)?;
            if a.bound.half_bound.flag {
                let report = a.report(Criterion::All, c.timings);
                writeln!(out, "winding {} (half-bound state: no integer claim)", fmt_float(report.winding)).map_err(io)?;
                emit(cfg.output.json.as_ref(), |b| {
                    b.extend(json_bytes(&report));
                    Ok(())
                })?;
                return Ok(2);
            }
            let w = winding_report(&a)?;
            emit(cfg.output.json.as_ref(), |b| {
                b.extend(json_bytes(&w));
                Ok(())
            })?;
            writeln!(out, "winding     {}", fmt_float(w.winding)).map_err(io)?;
            writeln!(out, "winding_int {}", w.winding_int).map_err(io)?;
            writeln!(out, "trace_P     {}", w.trace_p).map_err(io)?;
            writeln!(out, "consistent  {}", w.consistent).map_err(io)?;
            Ok(if w.consistent { 0 } else { 1 })
        }
        Command::Sweep { common, from, to, steps } => {
            let cfg = common.load()?;
            let rep = sweep_depth(&cfg, from, to, steps)?;
            emit(cfg.output.csv.as_ref(), |b| {
                b.extend_from_slice(b"V0,trace_P,lhs_topological,lhs_over_2pi,winding,winding_int,half_bound\n");
                for r in &rep.rows {
                    writeln!(
                        b,
                        "{},{},{},{},{},{},{}",
                        fmt_float(r.v0),
                        r.trace_p,
                        fmt_float(r.lhs_topological),
                        fmt_float(r.lhs_over_2pi),
                        fmt_float(r.winding),
                        r.winding_int,
                        r.half_bound
                    )?;
                }
                Ok(())
            })?;
            emit(cfg.output.json.as_ref(), |b| {
                b.extend(json_bytes(&rep));
                Ok(())
            })?;
            writeln!(out, "{:>12} {:>7} {:>12} {:>11}", "V0", "trace_P", "lhs/2pi", "winding_int").map_err(io)?;
            for r in &rep.rows {
                writeln!(out, "{:>12.6} {:>7} {:>12.6} {:>11}", r.v0, r.trace_p, r.lhs_over_2pi, r.winding_int)
                    .map_err(io)?;
            }
            for c in &rep.critical_depths {
                writeln!(out, "critical depth {} in [{}, {}]", fmt_float(c.estimate), c.lower, c.upper).map_err(io)?;
            }
            Ok(0)
        }
        Command::DemoResonance(c) => {
            let cfg = c.load()?;
            let demo = half_bound_demo(&cfg)?;
            let threshold = threshold_behavior(&cfg)?;
            emit(cfg.output.json.as_ref(), |b| {
                b.extend(json_bytes(&demo));
                Ok(())
            })?;
            writeln!(out, "lhs_classical / 2 pi - trace_P  {}", fmt_float(demo.classical_offset)).map_err(io)?;
            writeln!(out, "winding                         {}", fmt_float(demo.report.winding)).map_err(io)?;
            writeln!(out, "imaginary topological integral  {}", fmt_float(demo.imaginary_integral)).map_err(io)?;
            writeln!(out, "max |S_l(lambda_min) - 1|       {}", fmt_float(threshold.m[0])).map_err(io)?;
            writeln!(out, "{}", demo.message).map_err(io)?;
            Ok(match demo.report.verdict {
                Verdict::HypothesisViolated => 2,
                v => v.exit_code(),
            })
        }
    }
}
