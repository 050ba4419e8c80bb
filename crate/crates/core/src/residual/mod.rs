//! Pointwise residuals of the PDE systems satisfied by the example solutions.
//!
//! Every system reads its fields by name and differentiates along positional
//! coordinates: the first coordinate plays the role of `x`, the second `y`,
//! the third `z`, whatever the file calls them. Each residual is the
//! left-hand side minus the right-hand side of its equation, so a solution
//! gives zeros.

use std::collections::BTreeMap;
use std::fmt;

use crate::dsl::{Env, Expr};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::verdict::{map_points, Report, SamplePlan};

/// Denominators smaller than this in magnitude make a point singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-14;

/// Order of the field jets; enough for every third derivative in the systems.
const FIELD_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    Darboux,
    LameFull,
    Kdv,
    KdvPair,
    Liouville,
    FEquation,
    SineGordon,
    SgLinear,
    BSystem,
    GenDarboux,
    NormalK,
    K1Linear,
    K2Linear,
    Theorem3Relations,
    PhiRelation,
    K1AbcSystem,
}

impl SystemId {
    pub const ALL: [SystemId; 16] = [
        SystemId::Darboux,
        SystemId::LameFull,
        SystemId::Kdv,
        SystemId::KdvPair,
        SystemId::Liouville,
        SystemId::FEquation,
        SystemId::SineGordon,
        SystemId::SgLinear,
        SystemId::BSystem,
        SystemId::GenDarboux,
        SystemId::NormalK,
        SystemId::K1Linear,
        SystemId::K2Linear,
        SystemId::Theorem3Relations,
        SystemId::PhiRelation,
        SystemId::K1AbcSystem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Darboux => "darboux",
            SystemId::LameFull => "lame_full",
            SystemId::Kdv => "kdv",
            SystemId::KdvPair => "kdv_pair",
            SystemId::Liouville => "liouville",
            SystemId::FEquation => "f_equation",
            SystemId::SineGordon => "sine_gordon",
            SystemId::SgLinear => "sg_linear",
            SystemId::BSystem => "b_system",
            SystemId::GenDarboux => "gen_darboux",
            SystemId::NormalK => "normal_k",
            SystemId::K1Linear => "k1_linear",
            SystemId::K2Linear => "k2_linear",
            SystemId::Theorem3Relations => "theorem3_relations",
            SystemId::PhiRelation => "phi_relation",
            SystemId::K1AbcSystem => "k1_abc_system",
        }
    }

    pub fn from_name(name: &str) -> Result<SystemId> {
        SystemId::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    /// Field names the system reads.
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            SystemId::Darboux | SystemId::LameFull | SystemId::GenDarboux => &["A", "B", "C"],
            SystemId::Kdv => &["l"],
            SystemId::KdvPair => &["l", "m"],
            SystemId::Liouville => &["U"],
            SystemId::FEquation => &["F"],
            SystemId::SineGordon => &["u"],
            SystemId::SgLinear => &["A", "u"],
            SystemId::BSystem => &["B"],
            SystemId::NormalK => &["K1", "K2", "K3"],
            SystemId::K1Linear => &["K1", "A", "B", "C"],
            SystemId::K2Linear => &["K2", "A", "B", "C"],
            SystemId::Theorem3Relations => &["K1", "K2", "K3", "A", "B", "C"],
            SystemId::PhiRelation => &["K1", "K2", "K3", "phi1", "phi2", "phi3"],
            SystemId::K1AbcSystem => &["K1", "a", "b", "c"],
        }
    }

    /// Required scalar parameters.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            SystemId::LameFull | SystemId::SineGordon | SystemId::SgLinear | SystemId::BSystem => &["lambda"],
            _ => &[],
        }
    }

    /// Optional scalar parameters and their defaults.
    pub fn options(self) -> &'static [(&'static str, f64)] {
        match self {
            SystemId::BSystem => &[("hyperbolic", 0.0)],
            SystemId::NormalK | SystemId::K2Linear => &[("variant", 0.0)],
            _ => &[],
        }
    }

    /// Number of coordinates the system differentiates along.
    pub fn axes(self) -> usize {
        match self {
            SystemId::Liouville | SystemId::FEquation | SystemId::SineGordon | SystemId::SgLinear => 2,
            _ => 3,
        }
    }

    /// Number of residual components.
    pub fn len(self) -> usize {
        match self {
            SystemId::LameFull | SystemId::Theorem3Relations => 6,
            SystemId::Kdv | SystemId::Liouville | SystemId::FEquation | SystemId::SineGordon | SystemId::PhiRelation => 1,
            SystemId::KdvPair => 2,
            _ => 3,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SystemId::Darboux => "Darboux system on Lame coefficients A, B, C",
            SystemId::LameFull => "Darboux system plus the three lambda-dependent Lame equations",
            SystemId::Kdv => "KdV equation l_xxx - 3 l l_x + l_z",
            SystemId::KdvPair => "KdV equation and its companion equation for m",
            SystemId::Liouville => "Liouville equation 4 U_xy + exp(2U)",
            SystemId::FEquation => "-4 F_y F_x + 4 F F_xy + F^4",
            SystemId::SineGordon => "sine-Gordon equation u_xy + lambda sin u",
            SystemId::SgLinear => "linear system for A(x, y) over a sine-Gordon solution",
            SystemId::BSystem => "system for B(x, y, z) of the dx^2 + 2 cos B dx dy + dy^2 family",
            SystemId::GenDarboux => "Darboux system with the 2 d(BC)/dx, 2 d(AC)/dy, 2 d(AB)/dz terms",
            SystemId::NormalK => "first-order system for principal curvatures K1, K2, K3",
            SystemId::K1Linear => "second-order linear system for K1",
            SystemId::K2Linear => "second-order linear system for K2",
            SystemId::Theorem3Relations => "first-order relations between K_i and A, B, C",
            SystemId::PhiRelation => "K1 (phi2 - phi3) + K2 (phi3 - phi1) + K3 (phi1 - phi2)",
            SystemId::K1AbcSystem => "K1 system with arbitrary a(x), b(y), c(z)",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Field jets at one point with named-derivative access.
struct Point<'a> {
    jets: BTreeMap<&'a str, Jet>,
    params: &'a BTreeMap<String, f64>,
    point: &'a [f64],
}

impl Point<'_> {
    fn v(&self, name: &str) -> f64 {
        self.jets[name].value()
    }

    /// Partial derivative, e.g. `d("A", "yz")`.
    fn d(&self, name: &str, axes: &str) -> f64 {
        let mut alpha = [0u8; 3];
        for c in axes.chars() {
            alpha[(c as u8 - b'x') as usize] += 1;
        }
        let nv = self.jets[name].nvars();
        self.jets[name]
            .extract(&alpha[..nv])
            .expect("field jets carry every derivative the systems use")
    }

    fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    fn option(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    fn div(&self, num: f64, den: f64, what: &str) -> Result<f64> {
        if den.abs() < SINGULAR_DENOMINATOR || !den.is_finite() {
            return Err(Error::SingularPoint {
                what: what.to_string(),
                point: self.point.to_vec(),
            });
        }
        Ok(num / den)
    }
}

/// Residual vector of `sys` at `point`.
pub fn residual_at(
    sys: SystemId,
    fields: &BTreeMap<String, Expr>,
    params: &BTreeMap<String, f64>,
    coords: &[String],
    point: &[f64],
) -> Result<Vec<f64>> {
    let n = coords.len();
    if n < sys.axes() || point.len() != n {
        return Err(Error::Dimension {
            expected: sys.axes(),
            actual: n.min(point.len()),
        });
    }
    for p in sys.params() {
        if !params.contains_key(*p) {
            return Err(Error::MissingParam(p.to_string()));
        }
    }
    let coord_jets: Vec<Jet> = (0..n)
        .map(|i| Jet::variable(point[i], i, n, FIELD_ORDER))
        .collect::<Result<_>>()?;
    let env = Env::new(coords, &coord_jets, params);
    let mut jets = BTreeMap::new();
    for name in sys.fields() {
        let e = fields
            .get(*name)
            .ok_or_else(|| Error::MissingField(name.to_string()))?;
        jets.insert(*name, e.eval(&env)?);
    }
    let p = Point { jets, params, point };
    evaluate(sys, &p)
}

fn darboux(p: &Point) -> Result<[f64; 3]> {
    let (a, b, c) = (p.v("A"), p.v("B"), p.v("C"));
    Ok([
        p.d("A", "yz") - p.div(p.d("B", "z") * p.d("A", "y"), b, "B")? - p.div(p.d("C", "y") * p.d("A", "z"), c, "C")?,
        p.d("B", "xz") - p.div(p.d("A", "z") * p.d("B", "x"), a, "A")? - p.div(p.d("C", "x") * p.d("B", "z"), c, "C")?,
        p.d("C", "xy") - p.div(p.d("A", "y") * p.d("C", "x"), a, "A")? - p.div(p.d("B", "x") * p.d("C", "y"), b, "B")?,
    ])
}

fn evaluate(sys: SystemId, p: &Point) -> Result<Vec<f64>> {
    Ok(match sys {
        SystemId::Darboux => darboux(p)?.to_vec(),

        SystemId::LameFull => {
            let lam = p.param("lambda");
            let (a, b, c) = (p.v("A"), p.v("B"), p.v("C"));
            let d = |f: &str, ax: &str| p.d(f, ax);
            let mut out = darboux(p)?.to_vec();
            out.push(
                lam * c * b + p.div(d("C", "x") * d("B", "x"), a * a, "A")? + p.div(d("B", "zz"), c, "C")?
                    - p.div(d("B", "z") * d("C", "z"), c * c, "C")?
                    + p.div(d("C", "yy"), b, "B")?
                    - p.div(d("B", "y") * d("C", "y"), b * b, "B")?,
            );
            out.push(
                lam * a * c - p.div(d("A", "z") * d("C", "z"), c * c, "C")? + p.div(d("A", "zz"), c, "C")?
                    + p.div(d("A", "y") * d("C", "y"), b * b, "B")?
                    + p.div(d("C", "xx"), a, "A")?
                    - p.div(d("A", "x") * d("C", "x"), a * a, "A")?,
            );
            out.push(
                lam * b * a - p.div(d("A", "x") * d("B", "x"), a * a, "A")? + p.div(d("B", "xx"), a, "A")?
                    + p.div(d("A", "z") * d("B", "z"), c * c, "C")?
                    + p.div(d("A", "yy"), b, "B")?
                    - p.div(d("A", "y") * d("B", "y"), b * b, "B")?,
            );
            out
        }

        SystemId::Kdv => vec![kdv(p)],

        SystemId::KdvPair => {
            let (l, m) = (p.v("l"), p.v("m"));
            vec![
                kdv(p),
                p.d("l", "x") - p.d("m", "z") + 2.0 * p.d("l", "x") * m + l * p.d("m", "x"),
            ]
        }

        SystemId::Liouville => vec![4.0 * p.d("U", "xy") + (2.0 * p.v("U")).exp()],

        SystemId::FEquation => {
            let f = p.v("F");
            vec![-4.0 * p.d("F", "y") * p.d("F", "x") + 4.0 * f * p.d("F", "xy") + f.powi(4)]
        }

        SystemId::SineGordon => vec![p.d("u", "xy") + p.param("lambda") * p.v("u").sin()],

        SystemId::SgLinear => {
            let lam = p.param("lambda");
            let (a, u) = (p.v("A"), p.v("u"));
            let (s, c) = u.sin_cos();
            vec![
                p.d("A", "xy") + lam * a * c,
                p.d("A", "xx") - p.div(c * p.d("u", "x") * p.d("A", "x"), s, "sin u")? + lam * a
                    + p.div(p.d("u", "x") * p.d("A", "y"), s, "sin u")?,
                p.d("A", "yy") - p.div(c * p.d("u", "y") * p.d("A", "y"), s, "sin u")? + lam * a
                    + p.div(p.d("A", "x") * p.d("u", "y"), s, "sin u")?,
            ]
        }

        SystemId::BSystem => {
            let lam = p.param("lambda");
            let b = p.v("B");
            let (s, c) = if p.option("hyperbolic", 0.0) != 0.0 {
                (b.sinh(), b.cosh())
            } else {
                (b.sin(), b.cos())
            };
            let d = |ax: &str| p.d("B", ax);
            vec![
                d("xy") + 0.25 * s * (-1.0 + 4.0 * lam),
                d("yyz") - p.div(c * d("y") * d("yz"), s, "sin B")? + p.div(d("xz") * d("y"), s, "sin B")?
                    - (0.25 - lam) * d("z"),
                d("xxz") - p.div(c * d("x") * d("xz"), s, "sin B")? + p.div(d("x") * d("yz"), s, "sin B")?
                    - (0.25 - lam) * d("z"),
            ]
        }

        SystemId::GenDarboux => {
            let base = darboux(p)?;
            let (a, b, c) = (p.v("A"), p.v("B"), p.v("C"));
            vec![
                base[0] - 2.0 * (p.d("B", "x") * c + b * p.d("C", "x")),
                base[1] - 2.0 * (p.d("A", "y") * c + a * p.d("C", "y")),
                base[2] - 2.0 * (p.d("A", "z") * b + a * p.d("B", "z")),
            ]
        }

        SystemId::NormalK => {
            // coefficients per line for (K2−K3)∂K1, (K3−K1)∂K2, (K1−K2)∂K3
            let coeffs: [[f64; 3]; 3] = match p.option("variant", 0.0) as i64 {
                1 => [[3.0; 3]; 3],
                2 => [[1.0, 3.0, 3.0], [3.0, 1.0, 3.0], [3.0, 3.0, 1.0]],
                _ => [[1.0, 3.0, 3.0], [3.0, 1.0, 3.0], [3.0, 3.0, 3.0]],
            };
            let (k1, k2, k3) = (p.v("K1"), p.v("K2"), p.v("K3"));
            ["x", "y", "z"]
                .iter()
                .zip(coeffs)
                .map(|(ax, c)| {
                    c[0] * (k2 - k3) * p.d("K1", ax) + c[1] * (k3 - k1) * p.d("K2", ax) + c[2] * (k1 - k2) * p.d("K3", ax)
                })
                .collect()
        }

        SystemId::K1Linear => {
            let (a, b, c) = (p.v("A"), p.v("B"), p.v("C"));
            let d = |f: &str, ax: &str| p.d(f, ax);
            vec![
                d("K1", "xy")
                    + p.div(d("A", "y") * d("K1", "x"), a, "A")?
                    + (p.div(d("A", "x"), a, "A")? + p.div(d("B", "x"), b, "B")? - p.div(d("A", "xy"), d("A", "y"), "A_y")?)
                        * d("K1", "y"),
                d("K1", "xz")
                    + p.div(d("A", "z") * d("K1", "x"), a, "A")?
                    + (p.div(d("C", "x"), c, "C")? + p.div(d("A", "x"), a, "A")? - p.div(d("A", "xz"), d("A", "z"), "A_z")?)
                        * d("K1", "z"),
                d("K1", "yz")
                    + (p.div(d("B", "z"), b, "B")? + p.div(d("A", "z"), a, "A")? - p.div(d("A", "yz"), d("A", "y"), "A_y")?)
                        * d("K1", "y")
                    + (-p.div(d("A", "y") * d("B", "z"), d("A", "z") * b, "A_z B")? + p.div(d("A", "y"), a, "A")?)
                        * d("K1", "z"),
            ]
        }

        SystemId::K2Linear => {
            let (a, b, c) = (p.v("A"), p.v("B"), p.v("C"));
            let d = |f: &str, ax: &str| p.d(f, ax);
            // variant 1: B_xy / B_x in the first line and B_z K2_y in the third,
            // as obtained by eliminating K1 and K3 from the first-order relations
            let eliminated = p.option("variant", 0.0) as i64 == 1;
            let first = if eliminated {
                p.div(d("B", "xy"), d("B", "x"), "B_x")?
            } else {
                p.div(d("B", "xy"), d("B", "y"), "B_y")?
            };
            let third = if eliminated { d("K2", "y") } else { d("K2", "z") };
            vec![
                d("K2", "xy")
                    + p.div(d("B", "x") * d("K2", "y"), b, "B")?
                    + (p.div(d("B", "y"), b, "B")? + p.div(d("A", "y"), a, "A")? - first) * d("K2", "x"),
                d("K2", "xz")
                    + (p.div(d("B", "z"), b, "B")? - p.div(d("C", "x") * d("B", "z"), c * d("B", "x"), "C B_x")?)
                        * d("K2", "x")
                    + (p.div(d("B", "x"), b, "B")? - p.div(d("B", "xz"), d("B", "z"), "B_z")? + p.div(d("C", "x"), c, "C")?)
                        * d("K2", "z"),
                d("K2", "yz")
                    + p.div(d("B", "z") * third, b, "B")?
                    + (p.div(d("C", "y"), c, "C")? + p.div(d("B", "y"), b, "B")? - p.div(d("B", "yz"), d("B", "z"), "B_z")?)
                        * d("K2", "z"),
            ]
        }

        SystemId::Theorem3Relations => {
            let (a, b, c) = (p.v("A"), p.v("B"), p.v("C"));
            let (k1, k2, k3) = (p.v("K1"), p.v("K2"), p.v("K3"));
            let d = |f: &str, ax: &str| p.d(f, ax);
            vec![
                d("K1", "y") - p.div(d("A", "y") * (k2 - k1), a, "A")?,
                d("K1", "z") + p.div(d("A", "z") * (k1 - k3), a, "A")?,
                d("K2", "x") + p.div(d("B", "x") * (k2 - k1), b, "B")?,
                d("K2", "z") + p.div(d("B", "z") * (k2 - k3), b, "B")?,
                d("K3", "x") - p.div(d("C", "x") * (k1 - k3), c, "C")?,
                d("K3", "y") - p.div(d("C", "y") * (k2 - k3), c, "C")?,
            ]
        }

        SystemId::PhiRelation => {
            let (k1, k2, k3) = (p.v("K1"), p.v("K2"), p.v("K3"));
            let (f1, f2, f3) = (p.v("phi1"), p.v("phi2"), p.v("phi3"));
            vec![k1 * (f2 - f3) + k2 * (f3 - f1) + k3 * (f1 - f2)]
        }

        SystemId::K1AbcSystem => {
            let (a, b, c) = (p.v("a"), p.v("b"), p.v("c"));
            let (da, db, dc) = (p.d("a", "x"), p.d("b", "y"), p.d("c", "z"));
            let d = |ax: &str| p.d("K1", ax);
            vec![
                d("xy") - 0.5 * p.div(-d("x") * db + 3.0 * da * d("y"), a - b, "a - b")?,
                d("xz") - 0.5 * p.div(3.0 * da * d("z") - dc * d("x"), a - c, "a - c")?,
                d("yz") - 0.5 * p.div(-d("y") * dc + d("z") * db, b - c, "b - c")?,
            ]
        }
    })
}

fn kdv(p: &Point) -> f64 {
    p.d("l", "xxx") - 3.0 * p.v("l") * p.d("l", "x") + p.d("l", "z")
}

/// Residual maxima over a plan, skipping singular points.
///
/// Passes when the largest residual is within `tol` and at least half of the
/// points were regular.
pub fn residual_scan(
    case: &str,
    sys: SystemId,
    fields: &BTreeMap<String, Expr>,
    params: &BTreeMap<String, f64>,
    coords: &[String],
    plan: &SamplePlan,
    tol: f64,
) -> Result<Report> {
    let points = plan.points(coords, params)?;
    let results = map_points(&points, |pt| residual_at(sys, fields, params, coords, pt));
    let mut kept = Vec::new();
    let mut per_point = Vec::new();
    let mut singular = 0usize;
    for (pt, r) in points.into_iter().zip(results) {
        match r {
            Ok(v) => {
                per_point.push(v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) }));
                kept.push(pt);
            }
            Err(Error::SingularPoint { .. }) => singular += 1,
            Err(e) => return Err(e),
        }
    }
    if per_point.is_empty() {
        return Err(Error::AllSingular);
    }
    let total = kept.len() + singular;
    let mut r = Report::from_residuals(case, sys.name(), kept, per_point, tol, plan);
    if singular > 0 {
        r.notes.push(format!("{singular} of {total} points singular and skipped"));
    }
    if 2 * singular > total {
        r.verdict = crate::verdict::Verdict::Fail;
        r.notes.push("fewer than half of the points were regular".into());
    }
    Ok(r)
}

#[cfg(test)]
mod tests;
