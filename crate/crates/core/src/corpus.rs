//! Registry of the worked examples: each case is a set of metric files plus
//! the checks to run on them and the outcome each check should have.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dsl::{parse_expr, parse_metric_file, Expr, MetricFile, MetricSpec};
use crate::error::{Error, Result};
use crate::extension::{lift_plan, signature_at, ExtensionMode, ExtensionSpec};
use crate::residual::{residual_scan, SystemId};
use crate::tensor::{bundle_at, cs_density_at, determinant, Want};
use crate::verdict::{
    check_constant_curvature, check_cs_vanishing, check_flat, check_symmetric, map_points, Lambda, Report, SamplePlan,
    Verdict, DEFAULT_TOL,
};

/// Where an expected outcome comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated by the source text.
    Paper,
    /// Follows immediately from definitions.
    Trivial,
    /// Established by an independent oracle and frozen.
    Derived,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Paper => "paper",
            Provenance::Trivial => "trivial",
            Provenance::Derived => "derived",
        })
    }
}

/// One metric file of a case; emitted as `<stem>.<ext>`.
#[derive(Clone, Debug)]
pub struct CaseFile {
    pub stem: &'static str,
    pub ext: &'static str,
    pub text: String,
}

impl CaseFile {
    pub fn file_name(&self) -> String {
        format!("{}.{}", self.stem, self.ext)
    }
}

#[derive(Clone, Debug)]
pub enum Check {
    ConstantCurvature(Lambda),
    Flat,
    Symmetric,
    Residual(SystemId),
    /// Raw Chern–Simons density vanishes.
    CsZero,
    /// `A_z B_x C_y − A_y B_z C_x` vanishes for the fields `A`, `B`, `C`.
    CsVanishing,
    /// The density matches `expr` in its raw or normalized form (relative error).
    CsClosedForm(&'static str),
    /// `R_ab = factor · g_ab`.
    RicciProportional(f64),
    /// `R_ab` equals the given expressions (0-based indices).
    RicciEntries(Vec<(usize, usize, &'static str)>),
    /// The determinant equals that of the named case's first file.
    SameDeterminantAs(&'static str),
    ExtensionFlat { mode: ExtensionMode, literal: bool },
    ExtensionSymmetric { mode: ExtensionMode, literal: bool },
    ExtensionSignature { mode: ExtensionMode, signature: &'static str },
}

impl Check {
    fn name(&self) -> String {
        let ext = |mode: ExtensionMode, literal: bool, what: &str| {
            let lit = if literal { ",literal" } else { "" };
            format!("extension[{mode}{lit}]:{what}")
        };
        match self {
            Check::ConstantCurvature(Lambda::Value(v)) => format!("constant_curvature[lambda={v}]"),
            Check::ConstantCurvature(Lambda::Estimate) => "constant_curvature[estimate]".into(),
            Check::Flat => "flat".into(),
            Check::Symmetric => "symmetric".into(),
            Check::Residual(s) => format!("residual:{s}"),
            Check::CsZero => "cs_zero".into(),
            Check::CsVanishing => "cs_vanishing".into(),
            Check::CsClosedForm(_) => "cs_closed_form".into(),
            Check::RicciProportional(_) => "ricci_proportional".into(),
            Check::RicciEntries(_) => "ricci_entries".into(),
            Check::SameDeterminantAs(c) => format!("determinant_matches[{c}]"),
            Check::ExtensionFlat { mode, literal } => ext(*mode, *literal, "flat"),
            Check::ExtensionSymmetric { mode, literal } => ext(*mode, *literal, "symmetric"),
            Check::ExtensionSignature { mode, .. } => ext(*mode, false, "signature"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckSpec {
    /// Index into the case's files.
    pub file: usize,
    pub check: Check,
    /// Parameter values overriding the file's.
    pub params: Vec<(&'static str, f64)>,
    /// Overrides the plan's point count.
    pub points: Option<usize>,
    pub tol: f64,
    pub expect: Verdict,
    pub provenance: Provenance,
    pub note: &'static str,
}

impl CheckSpec {
    fn new(check: Check, expect: bool, provenance: Provenance) -> Self {
        CheckSpec {
            file: 0,
            check,
            params: Vec::new(),
            points: None,
            tol: DEFAULT_TOL,
            expect: Verdict::from_bool(expect),
            provenance,
            note: "",
        }
    }

    fn file(mut self, k: usize) -> Self {
        self.file = k;
        self
    }

    fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn param(mut self, name: &'static str, value: f64) -> Self {
        self.params.push((name, value));
        self
    }

    fn points(mut self, n: usize) -> Self {
        self.points = Some(n);
        self
    }

    fn note(mut self, note: &'static str) -> Self {
        self.note = note;
        self
    }

    /// Check name plus the file stem when the case has several files.
    pub fn label(&self, case: &CaseSpec) -> String {
        let mut s = self.check.name();
        if case.files.len() > 1 {
            s.push_str(&format!(" @{}", case.files[self.file].stem));
        }
        for (k, v) in &self.params {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct CaseSpec {
    pub name: &'static str,
    /// Where the example sits in the source text.
    pub anchor: &'static str,
    pub files: Vec<CaseFile>,
    pub checks: Vec<CheckSpec>,
    pub notes: Vec<&'static str>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub label: String,
    pub expected: Verdict,
    pub provenance: Provenance,
    pub matches: bool,
    pub report: Report,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseOutcome {
    pub case: String,
    pub anchor: String,
    pub all_match: bool,
    pub checks: Vec<CheckOutcome>,
    pub notes: Vec<String>,
}

use Provenance::{Derived, Paper, Trivial};

fn file(stem: &'static str, ext: &'static str, text: impl Into<String>) -> CaseFile {
    CaseFile {
        stem,
        ext,
        text: text.into(),
    }
}

/// Flat metric built from a KdV solution `l`, its x-derivative `lx` and `m`.
fn kdv_metric(fields: &str, plan: &str) -> String {
    format!(
        "[space]\ncoords = x y z\n[fields]\n{fields}[metric]\ng 1 1 = y^2\ng 1 3 = l*y^2 + m\ng 2 3 = 1\n\
         g 3 3 = l^2*y^2 - 2*lx*y + 2*l*m + 2*l\n[plan]\n{plan}"
    )
}

fn fields_only(fields: &str, plan: &str) -> String {
    format!("[space]\ncoords = x y z\n[fields]\n{fields}[plan]\n{plan}")
}

/// Raw Chern-Simons density of the flat KdV metric.
const CS_GENERAL: &str = "lz - l*lx + (3*mz - 3*l*mx - 4*m*lx - 2*lx)/y^2";

const KDV1: &str = "l = -4*cosh(x - 4*z)^(-2)\nlx = 8*sinh(x - 4*z)*cosh(x - 4*z)^(-3)\n\
                    lz = -32*sinh(x - 4*z)*cosh(x - 4*z)^(-3)\nm = -1/2\nmx = 0\nmz = 0\n";
const KDV1_PLAN: &str = "box x = -3 3\nbox y = 0.5 2\nbox z = -0.5 0.5\n";

const KDV2: &str = "N = 4*cosh(2*x - 8*z) + cosh(4*x - 64*z) + 3\n\
                    D = 3*cosh(x - 28*z) + cosh(3*x - 36*z)\n\
                    Nx = 8*sinh(2*x - 8*z) + 4*sinh(4*x - 64*z)\n\
                    Dx = 3*sinh(x - 28*z) + 3*sinh(3*x - 36*z)\n\
                    l = -24*N/D^2\nlx = -24*(Nx*D - 2*N*Dx)/D^3\nm = -1/2\n";
// keeps |4x − 64z| and the other arguments below 20
const KDV2_PLAN: &str = "box x = -2 2\nbox y = 0.5 2\nbox z = -0.15 0.15\n";

fn kdv1_flat() -> CaseSpec {
    CaseSpec {
        name: "kdv1_flat",
        anchor: "zero curvature: flat non-diagonal metric from the KdV one-soliton",
        files: vec![
            file("kdv1_flat", "metric", kdv_metric(KDV1, KDV1_PLAN)),
            file("kdv1", "fields", fields_only(KDV1, KDV1_PLAN)),
        ],
        checks: vec![
            CheckSpec::new(Check::Flat, true, Paper),
            CheckSpec::new(Check::ConstantCurvature(Lambda::Estimate), true, Trivial),
            CheckSpec::new(Check::Residual(SystemId::Kdv), true, Paper).file(1).tol(1e-9),
            CheckSpec::new(Check::Residual(SystemId::KdvPair), true, Paper).file(1).tol(1e-9),
            CheckSpec::new(Check::SameDeterminantAs("kdv2_flat"), true, Paper)
                .note("the determinant does not depend on l"),
            CheckSpec::new(Check::CsClosedForm("160*cosh(x - 4*z)*sinh(x - 4*z)^3*sign(y)/y"), false, Derived)
                .points(16)
                .tol(1e-6)
                .note("printed closed form for the one-soliton density"),
            CheckSpec::new(
                Check::CsClosedForm(
                    "-(5*l*lx - 5*lz)/sqrt(y^2) - (-4*lx*m - 2*lx)/(y^2*sqrt(y^2))",
                ),
                false,
                Derived,
            )
            .points(16)
            .tol(1e-6)
            .note("general printed density formula with m constant; disagrees with symbolic computation"),
            CheckSpec::new(Check::CsClosedForm(CS_GENERAL), true, Derived)
                .points(16)
                .tol(1e-9)
                .note("density from symbolic computation"),
        ],
        notes: vec![
            "m = -1/2 makes 2lm + 2l = l, the reduced metric",
            "Chern-Simons closed forms as printed disagree with the computed density; recorded, not asserted",
        ],
    }
}

fn kdv2_flat() -> CaseSpec {
    CaseSpec {
        name: "kdv2_flat",
        anchor: "zero curvature: flat non-diagonal metric from the KdV two-soliton",
        files: vec![
            file("kdv2_flat", "metric", kdv_metric(KDV2, KDV2_PLAN)),
            file("kdv2", "fields", fields_only(KDV2, KDV2_PLAN)),
        ],
        checks: vec![
            CheckSpec::new(Check::Flat, true, Paper),
            CheckSpec::new(Check::Residual(SystemId::Kdv), true, Paper).file(1).tol(1e-9),
            CheckSpec::new(Check::Residual(SystemId::KdvPair), true, Paper).file(1).tol(1e-9),
        ],
        notes: vec!["plan keeps every hyperbolic argument below 20 in magnitude"],
    }
}

fn kdv_linear_example1() -> CaseSpec {
    let fields = "F1 = z/x^3\nl = -x/(3*z)\nlx = -1/(3*z)\nlz = x/(3*z^2)\nm = -1/2 + F1/x^2\n\
                  mx = -5*z/x^6\nmz = 1/x^5\n";
    let plan = "box x = 0.5 1.5\nbox y = 0.5 1.5\nbox z = 0.5 1.5\n";
    CaseSpec {
        name: "kdv_linear_example1",
        anchor: "zero curvature: first example, l = -x/(3z) with an arbitrary F1(z/x^3)",
        files: vec![
            file("kdv_linear_example1", "metric", kdv_metric(fields, plan)),
            file("kdv_linear_example1", "fields", fields_only(fields, plan)),
        ],
        checks: vec![
            CheckSpec::new(Check::Flat, true, Paper),
            CheckSpec::new(Check::Residual(SystemId::Kdv), true, Paper).file(1),
            CheckSpec::new(Check::Residual(SystemId::KdvPair), true, Paper).file(1),
            CheckSpec::new(
                Check::CsClosedForm("10/9*x*sign(y)/(z^2*y) - 10/3*F1*sign(y)/(z*x^2*y^3)"),
                false,
                Derived,
            )
            .points(16)
            .tol(1e-6)
            .note("printed closed form matches neither density variant"),
            CheckSpec::new(Check::CsClosedForm(CS_GENERAL), true, Derived)
                .points(16)
                .tol(1e-9)
                .note("density from symbolic computation"),
        ],
        notes: vec!["free function fixed as F1(s) = s"],
    }
}

fn sphere_l1() -> CaseSpec {
    let text = "[space]\ncoords = x y z\n[params]\nlambda = 1\n[fields]\nA = 1/(1 + (x^2 + y^2 + z^2)/4)\nB = A\nC = A\n\
                [metric]\ng 1 1 = A^2\ng 2 2 = A^2\ng 3 3 = A^2\n[plan]\nbox x = -1 1\nbox y = -1 1\nbox z = -1 1\n";
    CaseSpec {
        name: "sphere_l1",
        anchor: "nonzero curvature: conformally flat metric of positive curvature",
        files: vec![file("sphere_l1", "metric", text)],
        checks: vec![
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(1.0)), true, Paper).tol(1e-9),
            CheckSpec::new(Check::ConstantCurvature(Lambda::Estimate), true, Paper).tol(1e-9),
            CheckSpec::new(Check::Residual(SystemId::LameFull), true, Paper),
            CheckSpec::new(Check::Flat, false, Trivial),
            CheckSpec::new(Check::Symmetric, true, Paper),
        ],
        notes: vec![],
    }
}

const HYPERBOLIC: &str = "[space]\ncoords = x y z\n[params]\nlambda = -1\n[fields]\nA = 1/z\nB = 1/z\nC = 1/z\n\
                          [metric]\ng 1 1 = A^2\ng 2 2 = B^2\ng 3 3 = C^2\n[plan]\nbox x = -1 1\nbox y = -1 1\nbox z = 0.3 2\n";

fn hyperbolic_lm1() -> CaseSpec {
    CaseSpec {
        name: "hyperbolic_lm1",
        anchor: "nonzero curvature: half-space metric of negative curvature",
        files: vec![file("hyperbolic_lm1", "metric", HYPERBOLIC)],
        checks: vec![
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(-1.0)), true, Paper).tol(1e-9),
            CheckSpec::new(Check::ConstantCurvature(Lambda::Estimate), true, Paper).tol(1e-9),
            CheckSpec::new(Check::Residual(SystemId::LameFull), true, Paper),
            CheckSpec::new(Check::Flat, false, Trivial),
            CheckSpec::new(Check::Symmetric, true, Paper),
            CheckSpec::new(Check::CsZero, true, Paper).tol(1e-9),
            CheckSpec::new(Check::CsVanishing, true, Paper).tol(1e-9),
        ],
        notes: vec![],
    }
}

fn hyperbolic_uv() -> CaseSpec {
    let text = "[space]\ncoords = x y z\n[params]\nlambda = -1\n[fields]\nA = 1/z\nB = sqrt(z^(-2) - 1)\n\
                C = 1/(z*sqrt(1 - z^2))\n[metric]\ng 1 1 = A^2\ng 2 2 = B^2\ng 3 3 = C^2\n[plan]\n\
                box x = -1 1\nbox y = -1 1\nbox z = 0.1 0.9\n";
    CaseSpec {
        name: "hyperbolic_uv",
        anchor: "nonzero curvature: metric from A = 1/z, B = 1/z + v(z), C = 1/z + u(z)",
        files: vec![file("hyperbolic_uv", "metric", text)],
        checks: vec![
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(-1.0)), true, Paper),
            CheckSpec::new(Check::Residual(SystemId::LameFull), true, Derived)
                .note("equivalent to the curvature check for diagonal metrics"),
        ],
        notes: vec!["defined for 0 < z < 1"],
    }
}

fn sphere_axyz() -> CaseSpec {
    let text = "[space]\ncoords = x y z\n[params]\nlambda = -1\n[fields]\n\
                A = 4*sqrt(x^2*(x^2 - 4*lambda + 4))/((x^2 - 4*lambda + 4)*(4 + x^2 + y^2 + z^2))\n\
                B = 4/(4 + x^2 + y^2 + z^2)\nC = B\n[metric]\ng 1 1 = A^2\ng 2 2 = B^2\ng 3 3 = C^2\n[plan]\n\
                box x = 0.5 1.5\nbox y = -1 1\nbox z = -1 1\n";
    let cc = |lam: f64| {
        CheckSpec::new(Check::ConstantCurvature(Lambda::Value(lam)), true, Derived)
            .param("lambda", lam)
            .note("confirmed by the finite-difference curvature oracle before freezing")
    };
    let lame = |lam: f64| CheckSpec::new(Check::Residual(SystemId::LameFull), true, Derived).param("lambda", lam);
    CaseSpec {
        name: "sphere_Axyz",
        anchor: "nonzero curvature: A(x,y,z) deformation of the positive-curvature metric",
        files: vec![file("sphere_Axyz", "metric", text)],
        checks: vec![cc(-1.0), cc(0.5), lame(-1.0), lame(0.5)],
        notes: vec!["sampled where x^2 - 4 lambda + 4 > 0 and x > 0"],
    }
}

fn liouville_text(u: &str, sign: &str) -> String {
    format!(
        "[space]\ncoords = x y z\n[params]\nlambda = 1\n[fields]\na = x\nb = -y\nap = 1\nbp = -1\nU = {u}\nF = exp(U)\n\
         E = 1/4*(F*sin(sqrt(lambda)*z) {sign} F*cos(sqrt(lambda)*z))^2/lambda\n[metric]\ng 1 2 = E\ng 3 3 = 1\n[plan]\n\
         box x = 0.5 1.5\nbox y = -1.5 -0.5\nbox z = 1 2\n"
    )
}

fn liouville_metric() -> CaseSpec {
    let printed = "1/2*ln(-4*ap*bp/(a^2 + b^2)^2)";
    let corrected = "1/2*ln(-4*ap*bp/(a + b)^2)";
    let cc = |k: usize, pass: bool| {
        CheckSpec::new(Check::ConstantCurvature(Lambda::Value(1.0)), pass, Derived)
            .file(k)
            .note("confirmed by symbolic computation and the finite-difference oracle")
    };
    CaseSpec {
        name: "liouville_metric",
        anchor: "nonzero curvature: metrics 2E dx dy + dz^2 built from the Liouville equation",
        files: vec![
            file("liouville_metric", "metric", liouville_text(printed, "-")),
            file("liouville_metric_plus", "metric", liouville_text(printed, "+")),
            file("liouville_corrected", "metric", liouville_text(corrected, "-")),
            file("liouville_corrected_plus", "metric", liouville_text(corrected, "+")),
        ],
        checks: vec![
            CheckSpec::new(Check::Residual(SystemId::Liouville), false, Derived)
                .note("printed general solution leaves 4a'b'(4ab - 1)/(a^2 + b^2)^2"),
            CheckSpec::new(Check::Residual(SystemId::FEquation), false, Derived),
            CheckSpec::new(Check::Residual(SystemId::Liouville), true, Derived)
                .file(2)
                .note("(a + b)^2 in place of (a^2 + b^2)^2"),
            CheckSpec::new(Check::Residual(SystemId::FEquation), true, Derived).file(2),
            cc(0, false),
            cc(1, false),
            cc(2, true),
            cc(3, true),
            CheckSpec::new(Check::CsZero, true, Paper).file(2).tol(1e-9),
            CheckSpec::new(Check::CsZero, true, Paper).file(3).tol(1e-9),
        ],
        notes: vec![
            "free functions fixed as a = x, b = -y so that -4a'b' > 0",
            "the E display repeats F in both terms; minus (as printed) and plus variants are both run",
        ],
    }
}

fn sg_text(dy2: bool) -> String {
    let g22 = if dy2 { "g 2 2 = 1\n" } else { "" };
    format!(
        "[space]\ncoords = x y z\n[params]\nlambda = -1\n[fields]\nu = 4*atan(exp(x + y))\n\
         A = exp(x + y)/(1 + exp(2*x + 2*y))\n[metric]\ng 1 1 = 1\ng 1 2 = cos(u)\n{g22}g 3 3 = A^2\n[plan]\n\
         box x = 0.2 1\nbox y = 0.2 1\nbox z = -1 1\n"
    )
}

fn sg_chebyshev() -> CaseSpec {
    CaseSpec {
        name: "sg_chebyshev",
        anchor: "nonzero curvature: dx^2 + 2cos(u) dx dy + A^2 dz^2 over a sine-Gordon solution",
        files: vec![file("sg_chebyshev", "metric", sg_text(false)), file("sg_chebyshev_dy2", "metric", sg_text(true))],
        checks: vec![
            CheckSpec::new(Check::Residual(SystemId::SineGordon), true, Paper),
            CheckSpec::new(Check::Residual(SystemId::SgLinear), true, Paper),
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(-1.0)), false, Derived)
                .note("metric exactly as displayed, without dy^2"),
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(-1.0)), true, Derived)
                .file(1)
                .note("with the dy^2 term of a Chebyshev net"),
        ],
        notes: vec!["u_xy - sin u = 0 corresponds to lambda = -1 in u_xy + lambda sin u = 0"],
    }
}

fn sec4_text(g12: &str) -> String {
    format!(
        "[space]\ncoords = x y z\n[params]\nlambda = 1/4\nhyperbolic = 1\n[fields]\nf = 1\nh = 1\n\
         X = (z^4*f^2*h^2 + 1)/(z^2*f*h)\nu = X/2\nB = ln(u + sqrt(u^2 - 1))\n[metric]\ng 1 1 = 1\ng 1 2 = {g12}\n\
         g 2 2 = 1\ng 3 3 = -4/z^2\n[plan]\nbox x = -1 1\nbox y = -1 1\nbox z = 1.1 2.5\n"
    )
}

fn sec4_lambda_quarter() -> CaseSpec {
    CaseSpec {
        name: "sec4_lambda_quarter",
        anchor: "essentially three-dimensional metrics: integration at lambda = 1/4",
        files: vec![file("sec4_lambda_quarter", "metric", sec4_text("X/2")), file("sec4_quarter_reading", "metric", sec4_text("X/4"))],
        checks: vec![
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(0.25)), true, Paper)
                .note("dx dy coefficient of the display read as g_12"),
            CheckSpec::new(Check::RicciProportional(0.5), true, Paper).tol(1e-9),
            CheckSpec::new(Check::RicciEntries(vec![(0, 0, "1/2"), (1, 1, "1/2"), (2, 2, "-2/z^2")]), true, Paper)
                .tol(1e-9),
            CheckSpec::new(Check::RicciEntries(vec![(0, 1, "X/4")]), true, Paper)
                .tol(1e-9)
                .note("displayed R_12"),
            CheckSpec::new(Check::RicciEntries(vec![(0, 1, "2*lambda*X/2")]), true, Derived)
                .tol(1e-9)
                .note("2 lambda g_12; equal to the displayed entry under this reading"),
            CheckSpec::new(Check::CsZero, true, Paper).tol(1e-9),
            CheckSpec::new(Check::Residual(SystemId::BSystem), true, Derived)
                .note("cos B = u >= 1, so B = i*arccosh(u); run in the hyperbolic continuation"),
            CheckSpec::new(Check::ConstantCurvature(Lambda::Value(0.25)), false, Derived)
                .file(1)
                .note("reading the displayed coefficient as 2 g_12"),
        ],
        notes: vec![
            "f = h = 1",
            "z = 1 is degenerate (g_12 = 1), so the plan samples z in [1.1, 2.5]",
        ],
    }
}

fn ext_flat() -> CaseSpec {
    let text = "[space]\ncoords = x y z\n[params]\nlambda = 0\n[fields]\nA = exp(x)\nB = 1\nC = 1\n[metric]\n\
                g 1 1 = A^2\ng 2 2 = B^2\ng 3 3 = C^2\n[plan]\nbox x = -1 1\nbox y = -1 1\nbox z = -1 1\n";
    let lc = ExtensionMode::LeviCivita;
    CaseSpec {
        name: "ext_flat",
        anchor: "Riemann extensions: extension of a flat diagonal metric",
        files: vec![file("ext_flat", "metric", text)],
        checks: vec![
            CheckSpec::new(Check::Residual(SystemId::LameFull), true, Trivial),
            CheckSpec::new(Check::Flat, true, Trivial),
            CheckSpec::new(Check::ExtensionFlat { mode: lc, literal: false }, true, Paper),
            CheckSpec::new(Check::ExtensionSignature { mode: lc, signature: "+++---" }, true, Paper),
        ],
        notes: vec!["psi coordinates sampled in [-1, 1]"],
    }
}

fn ext_symmetric() -> CaseSpec {
    let lc = ExtensionMode::LeviCivita;
    CaseSpec {
        name: "ext_symmetric",
        anchor: "Riemann extensions: extension of a space of constant curvature is symmetric",
        files: vec![file("ext_symmetric", "metric", HYPERBOLIC)],
        checks: vec![
            CheckSpec::new(Check::ExtensionSymmetric { mode: lc, literal: false }, true, Paper),
            CheckSpec::new(Check::ExtensionFlat { mode: lc, literal: false }, false, Paper),
            CheckSpec::new(Check::ExtensionSymmetric { mode: lc, literal: true }, false, Derived)
                .points(8)
                .note("cross term -2 dx dpsi as printed; this is the extension of the connection -Gamma"),
        ],
        notes: vec!["extension cross term taken as +2 dx^i dpsi_i; the printed sign is run as a labelled variant"],
    }
}

fn gen_darboux_exp() -> CaseSpec {
    let text = "[space]\ncoords = x y z\n[fields]\nA = exp(z/4 - x)\nB = exp(y - z/4)\nC = exp(z/4)\n[plan]\n\
                box x = -1 1\nbox y = -1 1\nbox z = -1 1\n";
    CaseSpec {
        name: "gen_darboux_exp",
        anchor: "Riemann extensions: exponential solution of the generalized Darboux system",
        files: vec![file("gen_darboux_exp", "fields", text)],
        checks: vec![
            CheckSpec::new(Check::Residual(SystemId::GenDarboux), true, Paper),
            CheckSpec::new(Check::Residual(SystemId::Darboux), true, Trivial),
        ],
        notes: vec![],
    }
}

fn normal_abc() -> CaseSpec {
    let text = "[space]\ncoords = x y z\n[params]\nvariant = 0\n[fields]\na = x\nb = y\nc = z\nU = 1\nV = 1\nW = 1\n\
                A = U/(sqrt(a - b)*sqrt(a - c))\nB = V/((a - b)^(5/2)*sqrt(b - c))\nC = W/((a - c)^(5/2)*sqrt(b - c))\n\
                alpha = -5/2*a - b/2 - c/2\nphi1 = a\nphi2 = b\nphi3 = c\n\
                K1 = alpha + phi1\nK2 = alpha + phi2\nK3 = alpha + phi3\n[metric]\ng 1 1 = A^2\ng 2 2 = B^2\ng 3 3 = C^2\n\
                [plan]\nbox x = 2.5 3.5\nbox y = 1.5 2.2\nbox z = 0.2 1\n";
    let frozen = "frozen from symbolic computation and the finite-difference oracle";
    let r = |s: SystemId, pass: bool| CheckSpec::new(Check::Residual(s), pass, Derived).note(frozen);
    CaseSpec {
        name: "normal_abc",
        anchor: "normal Riemann spaces: Lame coefficients for given principal curvatures",
        files: vec![file("normal_abc", "metric", text)],
        checks: vec![
            r(SystemId::Darboux, true),
            r(SystemId::Theorem3Relations, true),
            r(SystemId::K1Linear, true),
            r(SystemId::K1AbcSystem, true),
            r(SystemId::PhiRelation, true),
            r(SystemId::K2Linear, false).note("as printed"),
            r(SystemId::K2Linear, true).param("variant", 1.0),
            r(SystemId::NormalK, false).note("as printed: coefficients 1,3,3 / 3,1,3 / 3,3,3"),
            r(SystemId::NormalK, false).param("variant", 1.0),
            r(SystemId::NormalK, false).param("variant", 2.0),
        ],
        notes: vec![
            "a = x, b = y, c = z, U = V = W = 1, sampled with x > y > z",
            "K_i = alpha + phi_i with alpha = -(5/2)a - b/2 - c/2 and phi = (a, b, c)",
        ],
    }
}

/// Every registered case, in a fixed order.
pub fn cases() -> Vec<CaseSpec> {
    vec![
        kdv1_flat(),
        kdv2_flat(),
        kdv_linear_example1(),
        sphere_l1(),
        hyperbolic_lm1(),
        hyperbolic_uv(),
        sphere_axyz(),
        liouville_metric(),
        sg_chebyshev(),
        sec4_lambda_quarter(),
        ext_flat(),
        ext_symmetric(),
        gen_darboux_exp(),
        normal_abc(),
    ]
}

pub fn corpus_list() -> Vec<&'static str> {
    cases().iter().map(|c| c.name).collect()
}

pub fn find_case(name: &str) -> Result<CaseSpec> {
    cases()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownCase(name.to_string()))
}

/// Runs `name`, or every case for `"all"`.
pub fn corpus_run(name: &str) -> Result<Vec<CaseOutcome>> {
    if name == "all" {
        cases().iter().map(run_case).collect()
    } else {
        Ok(vec![run_case(&find_case(name)?)?])
    }
}

/// Writes every case file into `dir`, returning the paths written.
pub fn emit(dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path, e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for case in cases() {
        for f in &case.files {
            let path = dir.join(f.file_name());
            if written.contains(&path) {
                continue;
            }
            std::fs::write(&path, &f.text).map_err(|e| io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn run_case(case: &CaseSpec) -> Result<CaseOutcome> {
    let parsed: Vec<MetricFile> = case
        .files
        .iter()
        .map(|f| parse_metric_file(&f.text))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for spec in &case.checks {
        let label = spec.label(case);
        let mut report = run_check(case.name, &parsed[spec.file], spec)?;
        report.check = label.clone();
        if !spec.note.is_empty() {
            report.notes.push(spec.note.to_string());
        }
        let matches = report.verdict == spec.expect;
        checks.push(CheckOutcome {
            label,
            expected: spec.expect,
            provenance: spec.provenance,
            matches,
            report,
        });
    }
    Ok(CaseOutcome {
        case: case.name.to_string(),
        anchor: case.anchor.to_string(),
        all_match: checks.iter().all(|c| c.matches),
        checks,
        notes: case.notes.iter().map(|s| s.to_string()).collect(),
    })
}

fn metric_of(f: &MetricFile) -> Result<&MetricSpec> {
    f.metric
        .as_ref()
        .ok_or_else(|| Error::Invalid("case check needs a [metric] section".into()))
}

fn field<'a>(f: &'a MetricFile, name: &str) -> Result<&'a Expr> {
    f.fields.get(name).ok_or_else(|| Error::MissingField(name.to_string()))
}

fn run_check(case: &str, file: &MetricFile, spec: &CheckSpec) -> Result<Report> {
    let mut file = file.clone();
    for (k, v) in &spec.params {
        file = file.with_param(k, *v);
    }
    if let Some(n) = spec.points {
        file.plan.n_points = n;
    }
    let plan = &file.plan;
    let tol = spec.tol;
    match &spec.check {
        Check::ConstantCurvature(l) => check_constant_curvature(case, metric_of(&file)?, *l, plan, tol),
        Check::Flat => check_flat(case, metric_of(&file)?, plan, tol),
        Check::Symmetric => check_symmetric(case, metric_of(&file)?, plan, tol),
        Check::Residual(sys) => residual_scan(case, *sys, &file.fields, &file.params, &file.coords, plan, tol),
        Check::CsZero => {
            let m = metric_of(&file)?;
            pointwise(case, "cs_zero", m, plan, tol, |p| Ok(cs_density_at(m, p, false)?.abs()))
        }
        Check::CsVanishing => {
            let abc = [field(&file, "A")?, field(&file, "B")?, field(&file, "C")?];
            check_cs_vanishing(case, abc, &file.coords, &file.params, plan, tol)
        }
        Check::CsClosedForm(text) => cs_closed_form(case, &file, text, plan, tol),
        Check::RicciProportional(factor) => {
            let m = metric_of(&file)?;
            pointwise(case, "ricci_proportional", m, plan, tol, |p| {
                let b = bundle_at(m, p, Want::default())?;
                Ok(b.ricci
                    .iter()
                    .zip(&b.g)
                    .fold(0.0f64, |acc, (r, g)| acc.max((r - factor * g).abs())))
            })
        }
        Check::RicciEntries(entries) => {
            let m = metric_of(&file)?;
            let exprs: Vec<(usize, usize, Expr)> = entries
                .iter()
                .map(|&(a, b, t)| Ok((a, b, parse_expr(t)?.substitute(&file.fields))))
                .collect::<Result<_>>()?;
            pointwise(case, "ricci_entries", m, plan, tol, |p| {
                let bundle = bundle_at(m, p, Want::default())?;
                let mut worst = 0.0f64;
                for (a, b, e) in &exprs {
                    let v = e.eval_f64(&file.coords, p, &file.params)?;
                    worst = worst.max((bundle.ricci(*a, *b) - v).abs());
                }
                Ok(worst)
            })
        }
        Check::SameDeterminantAs(other) => {
            let m = metric_of(&file)?;
            let other_case = find_case(other)?;
            let other_file = parse_metric_file(&other_case.files[0].text)?;
            let om = metric_of(&other_file)?;
            pointwise(case, "determinant_matches", m, plan, tol, |p| {
                let n = m.dim();
                let d1 = determinant(&m.values_at(p)?, n);
                let d2 = determinant(&om.values_at(p)?, n);
                Ok((d1 - d2).abs() / d1.abs().max(1.0))
            })
        }
        Check::ExtensionFlat { mode, literal } => {
            let e = extension(&file, *mode, *literal)?;
            check_flat(case, &e, &lift_plan(plan), tol)
        }
        Check::ExtensionSymmetric { mode, literal } => {
            let e = extension(&file, *mode, *literal)?;
            check_symmetric(case, &e, &lift_plan(plan), tol)
        }
        Check::ExtensionSignature { mode, signature } => {
            let e = extension(&file, *mode, false)?;
            let lifted = lift_plan(plan);
            let r = pointwise(case, "signature", &e, &lifted, 0.5, |p| {
                Ok(if signature_at(&e, p)? == *signature { 0.0 } else { 1.0 })
            })?;
            Ok(r.note(format!("expected eigenvalue signs {signature}")))
        }
    }
}

fn extension(file: &MetricFile, mode: ExtensionMode, literal: bool) -> Result<MetricSpec> {
    let spec = ExtensionSpec::new(metric_of(file)?, mode)?;
    Ok(if literal { spec.literal_cross_term() } else { spec }.into_metric())
}

/// Report over a plan from a per-point non-negative residual.
fn pointwise(
    case: &str,
    check: &str,
    m: &MetricSpec,
    plan: &SamplePlan,
    tol: f64,
    f: impl Fn(&[f64]) -> Result<f64> + Sync,
) -> Result<Report> {
    let points = plan.points(m.coords(), m.params())?;
    let per_point = map_points(&points, |p| f(p)).into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Report::from_residuals(case, check, points, per_point, tol, plan))
}

/// Relative agreement of the density with a closed form, for both the raw and
/// the `√|det g|`-normalized density; passes if either variant matches.
fn cs_closed_form(case: &str, file: &MetricFile, text: &str, plan: &SamplePlan, tol: f64) -> Result<Report> {
    let m = metric_of(file)?;
    let expected = parse_expr(text)?.substitute(&file.fields);
    let points = plan.points(m.coords(), m.params())?;
    let rows = map_points(&points, |p| -> Result<[f64; 3]> {
        let want = expected.eval_f64(&file.coords, p, &file.params)?;
        Ok([want, cs_density_at(m, p, false)?, cs_density_at(m, p, true)?])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rel = |k: usize| -> Vec<f64> {
        rows.iter()
            .map(|r| (r[k] - r[0]).abs() / r[0].abs().max(f64::MIN_POSITIVE))
            .collect()
    };
    let (raw, norm) = (rel(1), rel(2));
    let max = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b));
    let (raw_max, norm_max) = (max(&raw), max(&norm));
    let (variant, per_point) = if raw_max <= norm_max { ("raw", raw) } else { ("normalized", norm) };
    let mut r = Report::from_residuals(case, "cs_closed_form", points, per_point, tol, plan);
    r.notes.push(format!(
        "max relative error: raw {raw_max:.3e}, normalized {norm_max:.3e}; closer variant {variant}"
    ));
    let matched = match (raw_max <= tol, norm_max <= tol) {
        (true, _) => "raw density matches the closed form".to_string(),
        (false, true) => "normalized density matches the closed form".to_string(),
        _ => "neither variant matches the closed form".to_string(),
    };
    r.notes.push(matched);
    if let Some(first) = rows.first() {
        r.notes.push(format!(
            "at the first point: closed form {:.6e}, raw {:.6e}, normalized {:.6e}",
            first[0], first[1], first[2]
        ));
    }
    Ok(r)
}

/// Names of the expected-outcome mismatches across a run.
pub fn mismatches(outcomes: &[CaseOutcome]) -> Vec<String> {
    outcomes
        .iter()
        .flat_map(|c| {
            c.checks
                .iter()
                .filter(|k| !k.matches)
                .map(move |k| format!("{}: {}", c.case, k.label))
        })
        .collect()
}
