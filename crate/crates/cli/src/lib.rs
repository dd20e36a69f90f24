//! Command-line front end for `effcompat`.
//!
//! Everything except process exit lives here so the commands can be driven
//! from tests with in-memory writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use effcompat::models::{model_to_string, zoo_model, ZOO_NAMES};
use effcompat::oracle::cross_check;
use effcompat::{
    compute_lambda0, depolarizing_kernel, joint_observable, load_model, min_depolarizing_noise, min_scaling_noise,
    scaling_kernel, smear, CompatReport, Effect, MarkovKernel2x2, Model, Observable, StateSpace, Tolerances,
};
use serde::Serialize;

/// Version of the `--json` report layout.
pub const JSON_SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_INCOMPATIBLE: i32 = 3;

/// Significant digits of every float in reports and scan tables.
pub const REPORT_DIGITS: usize = 12;

const ZOO_PREFIX: &str = "zoo:";
const DEPOLARIZING_BISECTION_STEPS: usize = 48;

#[derive(Debug, Parser)]
#[command(
    name = "effcompat",
    version,
    about = "Joint measurability of effect pairs on polytope state spaces"
)]
pub struct Cli {
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Primal feasibility tolerance of the LP solver.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eps_feas: f64,
    /// Pairs with λ0 <= 1 + eps-compat are reported compatible.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub eps_compat: f64,
}

impl ToleranceArgs {
    pub fn tolerances(&self) -> anyhow::Result<Tolerances> {
        let tol = Tolerances {
            eps_feas: self.eps_feas,
            eps_compat: self.eps_compat,
            ..Tolerances::default()
        };
        tol.validate()?;
        Ok(tol)
    }
}

/// An effect pair on a model given as a file path or `zoo:<name>`.
#[derive(Debug, Args)]
pub struct PairArgs {
    /// Model file (JSON) or a built-in model written as `zoo:<name>`.
    pub model: String,
    /// Name of the first effect in the model.
    pub e: String,
    /// Name of the second effect in the model.
    pub f: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute λ0 and decide whether two effects are jointly measurable.
    Check {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        json: bool,
    },
    /// Build the four-outcome joint observable of a compatible pair.
    Joint {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        json: bool,
    },
    /// Tabulate λ0 of the smeared pair over a range of noise parameters.
    Scan {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum)]
        kernel: KernelKind,
        /// `a:b:steps`, evenly spaced and including both ends.
        #[arg(long, value_parser = parse_range)]
        param_range: ParamRange,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or dump the built-in models.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Cross-check the LP against the grid oracle.
    #[command(hide = true)]
    Oracle {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 51)]
        resolution: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum ZooAction {
    List,
    /// Write a built-in model as a model file.
    Dump {
        name: String,
        /// Destination file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    /// `e -> e/k` for `k >= 1`.
    Scaling,
    /// `e -> t e + (1 - t) u/2` for `t` in `[0, 1]`.
    Depolarizing,
}

impl KernelKind {
    fn name(self) -> &'static str {
        match self {
            KernelKind::Scaling => "scaling",
            KernelKind::Depolarizing => "depolarizing",
        }
    }

    fn kernel(self, param: f64) -> effcompat::Result<MarkovKernel2x2> {
        match self {
            KernelKind::Scaling => scaling_kernel(param),
            KernelKind::Depolarizing => depolarizing_kernel(param),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRange {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl ParamRange {
    /// The grid points; the last one is exactly `end`.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.end
                } else {
                    self.start + (self.end - self.start) * i as f64 / n
                }
            })
            .collect()
    }
}

pub fn parse_range(s: &str) -> Result<ParamRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected a:b:steps, got `{s}`"));
    };
    let num = |x: &str| -> Result<f64, String> {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{x}` is not a finite number"))
    };
    let (start, end) = (num(a)?, num(b)?);
    let steps: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a step count"))?;
    if steps == 0 {
        return Err("steps must be at least 1".into());
    }
    if start > end {
        return Err(format!("range start {start} exceeds end {end}"));
    }
    if steps == 1 && start != end {
        return Err("a single step needs a == b".into());
    }
    Ok(ParamRange { start, end, steps })
}

/// Rounds to [`REPORT_DIGITS`] significant digits; `-0` becomes `0`.
pub fn round_report(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{:.*e}", REPORT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest text that reads back as the rounded value, e.g. `2.0`, `0.1`.
pub fn fmt_report(x: f64) -> String {
    format!("{:?}", round_report(x))
}

fn rounded(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| round_report(x)).collect()
}

fn fmt_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| fmt_report(x)).collect();
    format!("[{}]", items.join(", "))
}

pub fn load(model: &str, tol: &Tolerances) -> anyhow::Result<Model> {
    match model.strip_prefix(ZOO_PREFIX) {
        Some(name) => Ok(zoo_model(name)?),
        None => load_model(model, tol).with_context(|| format!("loading model file {model}")),
    }
}

struct Pair {
    model: Model,
    e: Effect,
    f: Effect,
}

impl Pair {
    fn load(args: &PairArgs, tol: &Tolerances) -> anyhow::Result<Self> {
        let model = load(&args.model, tol)?;
        let e = model.effect(&args.e)?.clone();
        let f = model.effect(&args.f)?.clone();
        Ok(Pair { model, e, f })
    }

    fn space(&self) -> &StateSpace {
        &self.model.space
    }
}

#[derive(Serialize)]
struct FunctionalJson {
    coefficients: Vec<f64>,
    vertex_values: Vec<f64>,
}

impl FunctionalJson {
    fn new(space: &StateSpace, g: &Effect) -> anyhow::Result<Self> {
        Ok(Self {
            coefficients: rounded(g.coefficients()),
            vertex_values: rounded(&space.vertex_values(g)?),
        })
    }
}

#[derive(Serialize)]
struct TolerancesJson {
    eps_feas: f64,
    eps_compat: f64,
}

#[derive(Serialize)]
struct CheckJson<'a> {
    schema_version: u32,
    command: &'static str,
    model: &'a str,
    e: &'a str,
    f: &'a str,
    lambda0: f64,
    sigma0: f64,
    compatible: bool,
    witness: FunctionalJson,
    tolerances: TolerancesJson,
}

impl<'a> CheckJson<'a> {
    fn new(command: &'static str, args: &'a PairArgs, pair: &Pair, report: &CompatReport) -> anyhow::Result<Self> {
        Ok(Self {
            schema_version: JSON_SCHEMA_VERSION,
            command,
            model: &args.model,
            e: &args.e,
            f: &args.f,
            lambda0: round_report(report.lambda0),
            sigma0: round_report(report.sigma0),
            compatible: report.compatible,
            witness: FunctionalJson::new(pair.space(), &report.witness)?,
            tolerances: TolerancesJson {
                eps_feas: report.tolerances.eps_feas,
                eps_compat: report.tolerances.eps_compat,
            },
        })
    }
}

#[derive(Serialize)]
struct ComponentJson {
    outcome: String,
    coefficients: Vec<f64>,
    vertex_values: Vec<f64>,
}

#[derive(Serialize)]
struct MarginJson {
    /// Largest vertex deviation between the marginal and the original effect.
    max_deviation: f64,
    ok: bool,
}

#[derive(Serialize)]
struct JointJson<'a> {
    schema_version: u32,
    command: &'static str,
    model: &'a str,
    e: &'a str,
    f: &'a str,
    lambda0: f64,
    compatible: bool,
    components: Vec<ComponentJson>,
    margin_e: Option<MarginJson>,
    margin_f: Option<MarginJson>,
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Maps an error to the exit-code contract: solver trouble is 2, anything
/// else about the input is 1.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    let solver = err
        .chain()
        .filter_map(|e| e.downcast_ref::<effcompat::Error>())
        .any(effcompat::Error::is_solver_error);
    if solver {
        EXIT_SOLVER
    } else {
        EXIT_INPUT
    }
}

/// Runs a parsed command line and returns the process exit code.
/// Diagnostics go to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let tol = cli.tolerances.tolerances()?;
    match &cli.command {
        Command::Check { pair, json } => cmd_check(pair, *json, &tol, out),
        Command::Joint { pair, json } => cmd_joint(pair, *json, &tol, out, err),
        Command::Scan {
            pair,
            kernel,
            param_range,
            out: path,
        } => {
            let csv = cmd_scan(pair, *kernel, param_range, &tol)?;
            match path {
                Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(csv.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Zoo { action } => cmd_zoo(action, out),
        Command::Oracle { pair, resolution, json } => cmd_oracle(pair, *resolution, *json, &tol, out),
    }
}

fn verdict(compatible: bool) -> i32 {
    if compatible {
        EXIT_OK
    } else {
        EXIT_INCOMPATIBLE
    }
}

pub fn cmd_check(args: &PairArgs, json: bool, tol: &Tolerances, out: &mut dyn Write) -> anyhow::Result<i32> {
    let pair = Pair::load(args, tol)?;
    let report = compute_lambda0(pair.space(), &pair.e, &pair.f, tol)?;
    if json {
        write_json(out, &CheckJson::new("check", args, &pair, &report)?)?;
    } else {
        let values = pair.space().vertex_values(&report.witness)?;
        writeln!(out, "model: {}", args.model)?;
        writeln!(out, "effects: {}, {}", args.e, args.f)?;
        writeln!(out, "lambda0: {}", fmt_report(report.lambda0))?;
        writeln!(out, "sigma0: {}", fmt_report(report.sigma0))?;
        writeln!(out, "compatible: {}", report.compatible)?;
        writeln!(out, "witness coefficients: {}", fmt_list(report.witness.coefficients()))?;
        writeln!(out, "witness vertex values: {}", fmt_list(&values))?;
    }
    Ok(verdict(report.compatible))
}

fn margin(space: &StateSpace, a: &Effect, b: &Effect, target: &Effect, tol: &Tolerances) -> anyhow::Result<MarginJson> {
    let sum = space.vertex_values(&a.add(b))?;
    let want = space.vertex_values(target)?;
    let dev = sum.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(MarginJson {
        max_deviation: round_report(dev),
        ok: dev <= tol.eps_compat + tol.eps_feas,
    })
}

pub fn cmd_joint(
    args: &PairArgs,
    json: bool,
    tol: &Tolerances,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> anyhow::Result<i32> {
    let pair = Pair::load(args, tol)?;
    let (report, obs) = joint_observable(pair.space(), &pair.e, &pair.f, tol)?;
    let Some(obs) = obs else {
        writeln!(
            err,
            "incompatible: lambda0 = {} > 1, no joint observable exists",
            fmt_report(report.lambda0)
        )?;
        if json {
            write_json(out, &joint_json(args, &report, None)?)?;
        }
        return Ok(EXIT_INCOMPATIBLE);
    };
    let parts = joint_parts(&pair, &obs, tol)?;
    if json {
        write_json(out, &joint_json(args, &report, Some(parts))?)?;
    } else {
        let (components, me, mf) = parts;
        writeln!(out, "model: {}", args.model)?;
        writeln!(out, "effects: {}, {}", args.e, args.f)?;
        writeln!(out, "lambda0: {}", fmt_report(report.lambda0))?;
        for c in &components {
            writeln!(out, "component {}:", c.outcome)?;
            writeln!(out, "  coefficients: {}", fmt_list(&c.coefficients))?;
            writeln!(out, "  vertex values: {}", fmt_list(&c.vertex_values))?;
        }
        writeln!(out, "margins:")?;
        writeln!(
            out,
            "  (1,1) + (1,0) = {}: max deviation {} ({})",
            args.e,
            fmt_report(me.max_deviation),
            ok_word(me.ok)
        )?;
        writeln!(
            out,
            "  (1,1) + (0,1) = {}: max deviation {} ({})",
            args.f,
            fmt_report(mf.max_deviation),
            ok_word(mf.ok)
        )?;
    }
    Ok(EXIT_OK)
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

type JointParts = (Vec<ComponentJson>, MarginJson, MarginJson);

fn joint_parts(pair: &Pair, obs: &Observable, tol: &Tolerances) -> anyhow::Result<JointParts> {
    let space = pair.space();
    let components = obs
        .outcomes()
        .iter()
        .zip(obs.effects())
        .map(|(label, g)| {
            let f = FunctionalJson::new(space, g)?;
            Ok(ComponentJson {
                outcome: label.clone(),
                coefficients: f.coefficients,
                vertex_values: f.vertex_values,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let get = |label: &str| {
        obs.component(label)
            .ok_or_else(|| anyhow!("joint observable lacks outcome {label}"))
    };
    let me = margin(space, get("(1,1)")?, get("(1,0)")?, &pair.e, tol)?;
    let mf = margin(space, get("(1,1)")?, get("(0,1)")?, &pair.f, tol)?;
    Ok((components, me, mf))
}

fn joint_json<'a>(
    args: &'a PairArgs,
    report: &CompatReport,
    parts: Option<JointParts>,
) -> anyhow::Result<JointJson<'a>> {
    let (components, me, mf) = match parts {
        Some((c, me, mf)) => (c, Some(me), Some(mf)),
        None => (Vec::new(), None, None),
    };
    Ok(JointJson {
        schema_version: JSON_SCHEMA_VERSION,
        command: "joint",
        model: &args.model,
        e: &args.e,
        f: &args.f,
        lambda0: round_report(report.lambda0),
        compatible: report.compatible,
        components,
        margin_e: me,
        margin_f: mf,
    })
}

fn smeared(e: &Effect, kernel: &MarkovKernel2x2, tol: &Tolerances) -> effcompat::Result<Effect> {
    let obs = smear(&Observable::dichotomic(e.clone()), kernel, tol)?;
    Ok(obs.effects()[0].clone())
}

/// One row of a scan table.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub param: f64,
    pub lambda0: f64,
    pub sigma0: f64,
    pub compatible: bool,
}

/// Produces the scan CSV: header, one row per parameter, and a trailing
/// `#` comment describing where the verdict changes.
pub fn cmd_scan(args: &PairArgs, kind: KernelKind, range: &ParamRange, tol: &Tolerances) -> anyhow::Result<String> {
    match kind {
        KernelKind::Scaling if range.start < 1.0 => bail!("scaling scan needs parameters >= 1, got {}", range.start),
        KernelKind::Depolarizing if range.start < 0.0 || range.end > 1.0 => {
            bail!(
                "depolarizing scan needs parameters in [0, 1], got {}:{}",
                range.start,
                range.end
            )
        }
        _ => {}
    }
    let pair = Pair::load(args, tol)?;
    let rows = range
        .values()
        .into_iter()
        .map(|param| {
            let kernel = kind.kernel(param)?;
            let e = smeared(&pair.e, &kernel, tol)?;
            let f = smeared(&pair.f, &kernel, tol)?;
            let r = compute_lambda0(pair.space(), &e, &f, tol)?;
            Ok(ScanRow {
                param,
                lambda0: r.lambda0,
                sigma0: r.sigma0,
                compatible: r.compatible,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let threshold = match kind {
        KernelKind::Scaling => min_scaling_noise(pair.space(), &pair.e, &pair.f, tol)?,
        KernelKind::Depolarizing => {
            min_depolarizing_noise(pair.space(), &pair.e, &pair.f, tol, DEPOLARIZING_BISECTION_STEPS)?
        }
    };

    let mut csv = String::from("param,lambda0,sigma0,compatible\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            fmt_report(r.param),
            fmt_report(r.lambda0),
            fmt_report(r.sigma0),
            r.compatible
        )?;
    }
    csv.push_str(&boundary_comment(kind, &rows, threshold));
    csv.push('\n');
    Ok(csv)
}

fn boundary_comment(kind: KernelKind, rows: &[ScanRow], threshold: f64) -> String {
    let flips: Vec<usize> = (1..rows.len())
        .filter(|&i| rows[i].compatible != rows[i - 1].compatible)
        .collect();
    let verdict = match flips.as_slice() {
        [] => {
            let all = rows.first().is_none_or(|r| r.compatible);
            format!(
                "no change, all rows {}",
                if all { "compatible" } else { "incompatible" }
            )
        }
        [i] => format!(
            "compatible changes {}->{} at param {}",
            rows[i - 1].compatible,
            rows[*i].compatible,
            fmt_report(rows[*i].param)
        ),
        many => format!("non-monotone, {} changes", many.len()),
    };
    let name = match kind {
        KernelKind::Scaling => "k*",
        KernelKind::Depolarizing => "t*",
    };
    format!(
        "# boundary ({}): {verdict}; {name} = {}",
        kind.name(),
        fmt_report(threshold)
    )
}

pub fn cmd_zoo(action: &ZooAction, out: &mut dyn Write) -> anyhow::Result<i32> {
    match action {
        ZooAction::List => {
            for name in ZOO_NAMES {
                writeln!(out, "{name}")?;
            }
        }
        ZooAction::Dump { name, out: path } => {
            let text = model_to_string(&zoo_model::<f64>(name)?)?;
            match path {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_oracle(
    args: &PairArgs,
    resolution: usize,
    json: bool,
    tol: &Tolerances,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let pair = Pair::load(args, tol)?;
    let r = cross_check(pair.space(), &pair.e, &pair.f, resolution, tol)?;
    if json {
        write_json(out, &r)?;
    } else {
        writeln!(out, "lp lambda0: {}", fmt_report(r.lp_lambda0))?;
        writeln!(
            out,
            "grid value: {} (step {})",
            fmt_report(r.grid.value),
            fmt_report(r.grid.step)
        )?;
        writeln!(out, "lower bound: {}", fmt_report(r.grid.lower_bound))?;
        if let Some(cf) = r.closed_form {
            writeln!(out, "closed form: {}", fmt_report(cf))?;
        }
        writeln!(out, "grid gap in steps: {}", fmt_report(r.grid_gap_in_steps))?;
        for d in &r.discrepancies {
            writeln!(out, "discrepancy: {d}")?;
        }
    }
    Ok(if r.agrees() { EXIT_OK } else { EXIT_SOLVER })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        let r = parse_range("1:2:11").unwrap();
        let v = r.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[10], 2.0);
        assert!((v[5] - 1.5).abs() < 1e-15);
        assert_eq!(parse_range("0.5:0.5:1").unwrap().values(), vec![0.5]);
        for bad in ["1:2", "2:1:3", "1:2:0", "a:2:3", "1:2:x", "1:2:1", "1:inf:3"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn report_formatting() {
        assert_eq!(fmt_report(2.0), "2.0");
        assert_eq!(fmt_report(1.0000000000000002), "1.0");
        assert_eq!(fmt_report(-0.0), "0.0");
        assert_eq!(fmt_report(-1e-300 * 1e-300), "0.0");
        assert_eq!(fmt_report(0.1 + 0.2), "0.3");
        assert_eq!(fmt_report(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_report(1.9), "1.9");
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let solver = anyhow::Error::from(effcompat::Error::IterationLimit { limit: 3 });
        assert_eq!(exit_code_for(&solver), EXIT_SOLVER);
        assert_eq!(exit_code_for(&solver.context("while checking")), EXIT_SOLVER);
        let input = anyhow::Error::from(effcompat::Error::InvalidParameter("x".into()));
        assert_eq!(exit_code_for(&input), EXIT_INPUT);
        assert_eq!(exit_code_for(&anyhow!("plain")), EXIT_INPUT);
    }
}
