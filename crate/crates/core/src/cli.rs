//! Command-line front end.
//!
//! Exit codes: 0 when every verdict passes (or, for corpus runs, matches its
//! expectation), 1 on a verdict failure, 2 on usage or parse errors, 3 on
//! evaluation errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{self, CaseOutcome};
use crate::dsl::{parse_metric_file, MetricFile, MetricSpec};
use crate::error::{Error, Result};
use crate::extension::{lift_plan, signature_at, ExtensionMode, ExtensionSpec};
use crate::residual::{residual_scan, SystemId};
use crate::tensor::{bundle_at, cs_density_at, laplace_one_form_at, CurvatureBundle, Want};
use crate::verdict::{
    check_constant_curvature, check_flat, check_symmetric, map_points, Lambda, Report, DEFAULT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EVAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "curvlab", version, about = "Curvature checks for metrics given as formulas")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Constant curvature (given or estimated lambda), flatness or local symmetry.
    Check(CheckArgs),
    /// Residuals of one of the built-in PDE systems over the file's fields.
    Residual(ResidualArgs),
    /// Chern-Simons density over the sample plan.
    Cs(CsArgs),
    /// Six-dimensional Riemann extension of a 3D metric.
    Extend(ExtendArgs),
    /// Laplace-type operator on a one-form: g^ij ∇_i∇_j A_k − R^l_k A_l + λ A_k.
    Laplace1(LaplaceArgs),
    /// Built-in worked examples.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Debug, Subcommand)]
enum CorpusAction {
    /// Names and descriptions of the cases.
    List(OutputArgs),
    /// Runs one case, or all of them.
    Run {
        #[arg(default_value = "all")]
        name: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Writes every case as a metric file.
    Emit {
        #[arg(long, default_value = "cases")]
        dir: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Common {
    /// Metric file.
    file: PathBuf,
    /// Number of sample points (overrides the file's plan).
    #[arg(long)]
    points: Option<usize>,
    /// Sampling seed (overrides the file's plan).
    #[arg(long)]
    seed: Option<u64>,
    /// Residual tolerance.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param, allow_hyphen_values = true)]
    params: Vec<(String, f64)>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[group(id = "kind", multiple = false)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Check constant curvature with this lambda.
    #[arg(long, group = "kind", allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Estimate lambda from the data (the default).
    #[arg(long, group = "kind")]
    estimate: bool,
    /// Check that the curvature vanishes.
    #[arg(long, group = "kind")]
    flat: bool,
    /// Check that the covariant derivative of the curvature vanishes.
    #[arg(long, group = "kind")]
    symmetric: bool,
}

#[derive(Debug, Args)]
struct ResidualArgs {
    #[command(flatten)]
    common: Common,
    /// System id, e.g. `kdv`, `lame_full`, `sine_gordon`.
    #[arg(long)]
    system: String,
}

#[derive(Debug, Args)]
struct CsArgs {
    #[command(flatten)]
    common: Common,
    /// Divide by sqrt|det g|.
    #[arg(long)]
    normalized: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExtCheck {
    Flat,
    Symmetric,
    Bundle,
}

#[derive(Debug, Args)]
struct ExtendArgs {
    #[command(flatten)]
    common: Common,
    /// `lc`, `mod+` or `mod-`.
    #[arg(long, default_value = "lc")]
    mode: String,
    #[arg(long, value_enum, default_value = "symmetric")]
    check: ExtCheck,
    /// Use the cross term −2 dx^i dψ_i.
    #[arg(long)]
    literal: bool,
}

#[derive(Debug, Args)]
struct LaplaceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    /// One-form to use; may be omitted when the file defines exactly one.
    #[arg(long)]
    form: Option<String>,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command) {
        Ok(Output { body, dest, code }) => match emit_to(&body, dest.as_deref(), out) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_EVAL
            }
        }
    }
}

struct Output {
    body: String,
    dest: Option<PathBuf>,
    code: i32,
}

fn emit_to(body: &str, dest: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match dest {
        Some(path) => std::fs::write(path, body).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => out.write_all(body.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        }),
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn verdict_code(pass: bool) -> i32 {
    if pass {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

/// A loaded input file with command-line overrides applied.
struct Loaded {
    case: String,
    file: MetricFile,
    tol: f64,
}

impl Loaded {
    fn metric(&self) -> Result<&MetricSpec> {
        self.file
            .metric
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("{} has no [metric] section", self.case)))
    }
}

fn load(c: &Common) -> Result<Loaded> {
    let text = std::fs::read_to_string(&c.file).map_err(|e| Error::Io {
        path: c.file.display().to_string(),
        message: e.to_string(),
    })?;
    let mut file = parse_metric_file(&text)?;
    for (k, v) in &c.params {
        file = file.with_param(k, *v);
    }
    if let Some(n) = c.points {
        file.plan.n_points = n;
    }
    if let Some(s) = c.seed {
        file.plan.seed = s;
    }
    let tol = c.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    let case = c
        .file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Loaded { case, file, tol })
}

fn report_output(reports: Vec<Report>, o: &OutputArgs) -> Output {
    let pass = reports.iter().all(|r| r.verdict.passed());
    let body = if o.json {
        if reports.len() == 1 {
            to_json(&reports[0])
        } else {
            to_json(&reports)
        }
    } else {
        let mut s = String::new();
        for r in &reports {
            s.push_str(&r.summary());
            s.push('\n');
            for n in &r.notes {
                s.push_str(&format!("  {n}\n"));
            }
        }
        s
    };
    Output {
        body,
        dest: o.output.clone(),
        code: verdict_code(pass),
    }
}

fn execute(cmd: Command) -> Result<Output> {
    match cmd {
        Command::Check(a) => {
            let l = load(&a.common)?;
            let (m, plan) = (l.metric()?, &l.file.plan);
            let r = if a.flat {
                check_flat(&l.case, m, plan, l.tol)?
            } else if a.symmetric {
                check_symmetric(&l.case, m, plan, l.tol)?
            } else {
                let lambda = a.lambda.map(Lambda::Value).unwrap_or(Lambda::Estimate);
                check_constant_curvature(&l.case, m, lambda, plan, l.tol)?
            };
            Ok(report_output(vec![r], &a.common.output))
        }
        Command::Residual(a) => {
            let l = load(&a.common)?;
            let sys = SystemId::from_name(&a.system)?;
            let f = &l.file;
            let r = residual_scan(&l.case, sys, &f.fields, &f.params, &f.coords, &f.plan, l.tol)?;
            Ok(report_output(vec![r], &a.common.output))
        }
        Command::Cs(a) => {
            let l = load(&a.common)?;
            let r = cs_report(&l, a.normalized)?;
            Ok(report_output(vec![r], &a.common.output))
        }
        Command::Extend(a) => extend(a),
        Command::Laplace1(a) => {
            let l = load(&a.common)?;
            let r = laplace_report(&l, a.form.as_deref(), a.lambda)?;
            Ok(report_output(vec![r], &a.common.output))
        }
        Command::Corpus { action } => corpus_cmd(action),
    }
}

/// The density itself is reported per point; the verdict is whether it vanishes.
fn cs_report(l: &Loaded, normalized: bool) -> Result<Report> {
    let m = l.metric()?;
    let points = l.file.plan.points(m.coords(), m.params())?;
    let values = map_points(&points, |p| cs_density_at(m, p, normalized))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let check = if normalized { "cs_normalized" } else { "cs" };
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut r = Report::from_residuals(&l.case, check, points, abs, l.tol, &l.file.plan);
    if let Some(v) = values.first() {
        r.notes.push(format!("density at the first point: {v:.12e}"));
    }
    r.notes.push("verdict: density vanishes within tol".into());
    Ok(r)
}

fn laplace_report(l: &Loaded, form: Option<&str>, lambda: f64) -> Result<Report> {
    let m = l.metric()?;
    let forms = &l.file.forms;
    let (name, w) = match form {
        Some(name) => (name, forms.get(name).ok_or_else(|| Error::MissingField(name.to_string()))?),
        None if forms.len() == 1 => forms.iter().next().map(|(k, v)| (k.as_str(), v)).expect("one form"),
        None => return Err(Error::Invalid("pass --form to choose one of the file's one-forms".into())),
    };
    let points = l.file.plan.points(m.coords(), m.params())?;
    let per_point = map_points(&points, |p| {
        laplace_one_form_at(m, w, p, lambda).map(|v| v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut r = Report::from_residuals(&l.case, "laplace1", points, per_point, l.tol, &l.file.plan);
    r.lambda = Some(lambda);
    r.notes.push(format!("one-form `{name}`"));
    Ok(r)
}

#[derive(Serialize)]
struct BundleOutput {
    case: String,
    mode: String,
    literal_cross_term: bool,
    signature: String,
    point: Vec<f64>,
    bundle: CurvatureBundle,
    /// `R_ijkl` of the three-dimensional connection, for modified modes.
    #[serde(skip_serializing_if = "Option::is_none")]
    connection_riemann: Option<Vec<f64>>,
    notes: Vec<String>,
}

fn extend(a: ExtendArgs) -> Result<Output> {
    let l = load(&a.common)?;
    let mode = ExtensionMode::from_name(&a.mode)?;
    let mut spec = ExtensionSpec::new(l.metric()?, mode)?;
    if a.literal {
        spec = spec.literal_cross_term();
    }
    let mut notes = Vec::new();
    if mode.is_modified() {
        notes.push(format!(
            "interpretation: sigma = {} multiplies products of the added coefficients in the connection curvature",
            mode.sigma()
        ));
    }
    let ext = spec.clone().into_metric();
    let plan = lift_plan(&l.file.plan);
    let label = format!("{}[{}]", l.case, mode);
    match a.check {
        ExtCheck::Flat | ExtCheck::Symmetric => {
            let mut r = if matches!(a.check, ExtCheck::Flat) {
                check_flat(&label, &ext, &plan, l.tol)?
            } else {
                check_symmetric(&label, &ext, &plan, l.tol)?
            };
            r.notes.extend(notes);
            Ok(report_output(vec![r], &a.common.output))
        }
        ExtCheck::Bundle => {
            let points = plan.points(ext.coords(), ext.params())?;
            let p = points.first().ok_or(Error::EmptyPlan)?.clone();
            let bundle = bundle_at(
                &ext,
                &p,
                Want {
                    nabla_r: true,
                    cs: false,
                },
            )?;
            let connection_riemann = if mode.is_modified() {
                Some(spec.connection_riemann(&p[..3])?)
            } else {
                None
            };
            let out = BundleOutput {
                case: l.case.clone(),
                mode: mode.to_string(),
                literal_cross_term: a.literal,
                signature: signature_at(&ext, &p)?,
                point: p,
                bundle,
                connection_riemann,
                notes,
            };
            let body = if a.common.output.json {
                to_json(&out)
            } else {
                let b = &out.bundle;
                let max_nabla = b
                    .nabla_riemann
                    .as_ref()
                    .map(|v| v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
                    .unwrap_or(0.0);
                let mut s = format!(
                    "{} extension at {:?}\n  signature {}\n  det {:.6e}\n  max |R| {:.6e}\n  max |nabla R| {:.6e}\n  scalar {:.6e}\n",
                    label,
                    out.point,
                    out.signature,
                    b.det,
                    b.max_abs_riemann(),
                    max_nabla,
                    b.scalar
                );
                if let Some(c) = &out.connection_riemann {
                    let mx = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    s.push_str(&format!("  max |connection R| {mx:.6e}\n"));
                }
                for n in &out.notes {
                    s.push_str(&format!("  {n}\n"));
                }
                s
            };
            Ok(Output {
                body,
                dest: a.common.output.output.clone(),
                code: EXIT_OK,
            })
        }
    }
}

#[derive(Serialize)]
struct ListEntry {
    name: &'static str,
    anchor: &'static str,
    checks: usize,
}

fn corpus_cmd(action: CorpusAction) -> Result<Output> {
    match action {
        CorpusAction::List(o) => {
            let entries: Vec<ListEntry> = corpus::cases()
                .iter()
                .map(|c| ListEntry {
                    name: c.name,
                    anchor: c.anchor,
                    checks: c.checks.len(),
                })
                .collect();
            let body = if o.json {
                to_json(&entries)
            } else {
                entries.iter().map(|e| format!("{:<22} {}\n", e.name, e.anchor)).collect()
            };
            Ok(Output {
                body,
                dest: o.output,
                code: EXIT_OK,
            })
        }
        CorpusAction::Run { name, output } => {
            let outcomes = corpus::corpus_run(&name)?;
            let ok = outcomes.iter().all(|c| c.all_match);
            let body = if output.json {
                to_json(&outcomes)
            } else {
                outcomes.iter().map(outcome_text).collect()
            };
            Ok(Output {
                body,
                dest: output.output,
                code: verdict_code(ok),
            })
        }
        CorpusAction::Emit { dir, output } => {
            let written = corpus::emit(&dir)?;
            let names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
            let body = if output.json {
                to_json(&names)
            } else {
                names.iter().map(|n| format!("{n}\n")).collect()
            };
            Ok(Output {
                body,
                dest: output.output,
                code: EXIT_OK,
            })
        }
    }
}

fn outcome_text(c: &CaseOutcome) -> String {
    let mut s = format!(
        "{} [{}]: {}\n",
        c.case,
        if c.all_match { "ok" } else { "MISMATCH" },
        c.anchor
    );
    for k in &c.checks {
        s.push_str(&format!(
            "  {} {:<56} {} (expected {}, {}; max {:.3e})\n",
            if k.matches { "  " } else { "!!" },
            k.label,
            k.report.verdict,
            k.expected,
            k.provenance,
            k.report.max_abs_residual
        ));
    }
    s
}
