//! Pass/fail verdicts over deterministic point samples.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dsl::{Env, Expr, MetricSpec};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::{bundle_at, CurvatureBundle, Want};

pub const DEFAULT_POINTS: usize = 64;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Points closer than this to the zero set of an exclusion are rejected.
pub const EXCLUSION_RADIUS: f64 = 1e-3;

/// Deterministic uniform sampling of a box, minus neighbourhoods of excluded loci.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    /// Closed interval per coordinate.
    pub boxes: Vec<(f64, f64)>,
    pub n_points: usize,
    pub seed: u64,
    pub exclusions: Vec<Expr>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            boxes: Vec::new(),
            n_points: DEFAULT_POINTS,
            seed: DEFAULT_SEED,
            exclusions: Vec::new(),
        }
    }
}

impl SamplePlan {
    /// Interval used for coordinates without an explicit box.
    pub const DEFAULT_BOX: (f64, f64) = (0.5, 1.5);

    pub fn new(boxes: Vec<(f64, f64)>, n_points: usize, seed: u64) -> Self {
        SamplePlan {
            boxes,
            n_points,
            seed,
            exclusions: Vec::new(),
        }
    }

    pub fn exclude(mut self, e: Expr) -> Self {
        self.exclusions.push(e);
        self
    }

    fn admissible(&self, coords: &[String], params: &BTreeMap<String, f64>, p: &[f64]) -> bool {
        self.exclusions.iter().all(|e| match e.eval_f64(coords, p, params) {
            Ok(v) => v.is_finite() && v.abs() >= EXCLUSION_RADIUS,
            Err(_) => false,
        })
    }

    /// The sample points; identical for identical plans.
    pub fn points(&self, coords: &[String], params: &BTreeMap<String, f64>) -> Result<Vec<Vec<f64>>> {
        if self.boxes.len() != coords.len() {
            return Err(Error::Dimension {
                expected: coords.len(),
                actual: self.boxes.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.n_points);
        let budget = self.n_points.saturating_mul(1000);
        for _ in 0..budget {
            if out.len() == self.n_points {
                break;
            }
            let p: Vec<f64> = self
                .boxes
                .iter()
                .map(|&(lo, hi)| if lo < hi { rng.gen_range(lo..=hi) } else { lo })
                .collect();
            if self.admissible(coords, params, &p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyPlan);
        }
        Ok(out)
    }
}

fn thread_pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n: usize = std::env::var("CURVLAB_THREADS").ok()?.trim().parse().ok()?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
    })
    .as_ref()
}

fn sequential() -> bool {
    static SEQ: OnceLock<bool> = OnceLock::new();
    *SEQ.get_or_init(|| {
        std::env::var("CURVLAB_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            == Some(0)
    })
}

/// Applies `f` to every point, in parallel unless `CURVLAB_THREADS=0`; results keep point order.
pub fn map_points<T, F>(points: &[Vec<f64>], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    if sequential() {
        return points.iter().map(|p| f(p)).collect();
    }
    let run = || points.par_iter().map(|p| f(p)).collect();
    match thread_pool() {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// Outcome of one check over a sample plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub case: String,
    pub check: String,
    pub lambda: Option<f64>,
    pub lambda_spread: Option<f64>,
    pub n_points: usize,
    pub max_abs_residual: f64,
    pub mean_abs_residual: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    /// Largest residual at each evaluated point.
    #[serde(skip)]
    pub per_point: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<Vec<f64>>,
}

impl Report {
    /// Aggregates per-point residuals; the verdict is `max ≤ tol`.
    pub fn from_residuals(case: &str, check: &str, points: Vec<Vec<f64>>, per_point: Vec<f64>, tol: f64, plan: &SamplePlan) -> Report {
        let n = per_point.len();
        let max = per_point.iter().fold(0.0f64, |m, &v| if v.is_nan() { f64::NAN } else { m.max(v) });
        let mean = if n == 0 {
            0.0
        } else {
            per_point.iter().sum::<f64>() / n as f64
        };
        Report {
            case: case.to_string(),
            check: check.to_string(),
            lambda: None,
            lambda_spread: None,
            n_points: n,
            max_abs_residual: max,
            mean_abs_residual: mean,
            tol,
            verdict: Verdict::from_bool(max <= tol),
            notes: vec![format!("seed={} points={}", plan.seed, plan.n_points)],
            per_point,
            points,
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} {}: {} (max {:.3e}, mean {:.3e}, tol {:.1e}, {} points",
            self.case, self.check, self.verdict, self.max_abs_residual, self.mean_abs_residual, self.tol, self.n_points
        );
        if let Some(l) = self.lambda {
            s.push_str(&format!(", lambda {l}"));
        }
        if let Some(sp) = self.lambda_spread {
            s.push_str(&format!(", spread {sp:.1e}"));
        }
        s.push(')');
        s
    }
}

/// λ given outright or estimated from the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    Value(f64),
    Estimate,
}

fn bundles(m: &MetricSpec, points: &[Vec<f64>], want: Want) -> Result<Vec<CurvatureBundle>> {
    map_points(points, |p| bundle_at(m, p, want))
        .into_iter()
        .collect()
}

/// `⟨R, G⟩ / ⟨G, G⟩` with `G_ijkl = g_ik g_jl − g_il g_jk`.
pub fn estimate_lambda(b: &CurvatureBundle) -> f64 {
    let n = b.dim;
    let (mut rg, mut gg) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let g = b.unit_curvature(i, j, k, l);
                    rg += b.riemann(i, j, k, l) * g;
                    gg += g * g;
                }
            }
        }
    }
    rg / gg
}

/// Scaled residual of `R_ijkl = λ G_ijkl` at one point.
pub fn constant_curvature_residual(b: &CurvatureBundle, lambda: f64) -> f64 {
    let n = b.dim;
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let t = b.riemann(i, j, k, l) - lambda * b.unit_curvature(i, j, k, l);
                    max = max.max(t.abs());
                }
            }
        }
    }
    max / 1f64.max(b.max_abs_riemann()).max(b.max_abs_g().powi(2))
}

pub fn check_constant_curvature(case: &str, m: &MetricSpec, lambda: Lambda, plan: &SamplePlan, tol: f64) -> Result<Report> {
    let points = plan.points(m.coords(), m.params())?;
    let bs = bundles(m, &points, Want::default())?;
    let (lam, spread) = match lambda {
        Lambda::Value(v) => (v, None),
        Lambda::Estimate => {
            let est: Vec<f64> = bs.iter().map(estimate_lambda).collect();
            let mean = est.iter().sum::<f64>() / est.len() as f64;
            let lo = est.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = est.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (mean, Some(hi - lo))
        }
    };
    let per_point = bs.iter().map(|b| constant_curvature_residual(b, lam)).collect();
    let mut r = Report::from_residuals(case, "constant_curvature", points, per_point, tol, plan);
    r.lambda = Some(lam);
    r.lambda_spread = spread;
    if spread.is_some() {
        r.notes.push("lambda estimated by per-point least squares".into());
    }
    Ok(r)
}

pub fn check_flat(case: &str, m: &MetricSpec, plan: &SamplePlan, tol: f64) -> Result<Report> {
    let points = plan.points(m.coords(), m.params())?;
    let bs = bundles(m, &points, Want::default())?;
    let per_point = bs
        .iter()
        .map(|b| b.max_abs_riemann() / 1f64.max(b.max_abs_g().powi(2)))
        .collect();
    let mut r = Report::from_residuals(case, "flat", points, per_point, tol, plan);
    r.lambda = Some(0.0);
    Ok(r)
}

pub fn check_symmetric(case: &str, m: &MetricSpec, plan: &SamplePlan, tol: f64) -> Result<Report> {
    let points = plan.points(m.coords(), m.params())?;
    let bs = bundles(m, &points, Want { nabla_r: true, cs: false })?;
    let per_point = bs
        .iter()
        .map(|b| {
            let nab = b
                .nabla_riemann
                .as_ref()
                .expect("requested")
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            nab / 1f64.max(b.max_abs_g().powi(2)).max(b.max_abs_riemann())
        })
        .collect();
    let max_r = bs.iter().fold(0.0f64, |m, b| m.max(b.max_abs_riemann()));
    let r = Report::from_residuals(case, "symmetric", points, per_point, tol, plan);
    Ok(r.note(format!("max |R| = {max_r:.6e}")))
}

/// Partial derivatives of three scalar fields up to order 1, and their values.
struct Abc {
    v: [f64; 3],
    /// d[f][axis]
    d: [[f64; 3]; 3],
}

fn abc_at(fields: [&Expr; 3], coords: &[String], params: &BTreeMap<String, f64>, p: &[f64]) -> Result<Abc> {
    let jets: Vec<Jet> = (0..3).map(|i| Jet::variable(p[i], i, 3, 1)).collect::<Result<_>>()?;
    let env = Env::new(coords, &jets, params);
    let mut out = Abc {
        v: [0.0; 3],
        d: [[0.0; 3]; 3],
    };
    for (f, e) in fields.iter().enumerate() {
        let j = e.eval(&env)?;
        out.v[f] = j.value();
        for axis in 0..3 {
            let mut alpha = [0u8; 3];
            alpha[axis] = 1;
            out.d[f][axis] = j.coeff(&alpha)?;
        }
    }
    Ok(out)
}

/// `A_z B_x C_y − A_y B_z C_x`, the vanishing condition for the Chern–Simons
/// density of `diag(A², B², C²)` on solutions of the Darboux system.
pub fn cs_vanishing_residual(abc: [&Expr; 3], coords: &[String], params: &BTreeMap<String, f64>, p: &[f64]) -> Result<f64> {
    let f = abc_at(abc, coords, params, p)?;
    let (x, y, z) = (0, 1, 2);
    Ok(f.d[0][z] * f.d[1][x] * f.d[2][y] - f.d[0][y] * f.d[1][z] * f.d[2][x])
}

pub fn check_cs_vanishing(case: &str, abc: [&Expr; 3], coords: &[String], params: &BTreeMap<String, f64>, plan: &SamplePlan, tol: f64) -> Result<Report> {
    if coords.len() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: coords.len(),
        });
    }
    let points = plan.points(coords, params)?;
    let vals: Vec<f64> = map_points(&points, |p| cs_vanishing_residual(abc, coords, params, p))
        .into_iter()
        .collect::<Result<_>>()?;
    let per_point: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let mut r = Report::from_residuals(case, "cs_vanishing", points.clone(), per_point, tol, plan);

    // Cross-check against the density itself where the Darboux system holds.
    let fields: BTreeMap<String, Expr> = [("A", abc[0]), ("B", abc[1]), ("C", abc[2])]
        .into_iter()
        .map(|(k, e)| (k.to_string(), e.clone()))
        .collect();
    let darboux = map_points(&points, |p| {
        crate::residual::residual_at(crate::residual::SystemId::Darboux, &fields, params, coords, p)
    });
    let darboux_max = darboux
        .iter()
        .map(|d| match d {
            Ok(v) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0f64, f64::max);
    if darboux_max <= tol {
        let sq = |e: &Expr| Expr::bin(crate::dsl::BinOp::Pow, e.clone(), Expr::Num(2.0));
        let m = MetricSpec::diagonal(coords.to_vec(), params.clone(), abc.iter().map(|e| sq(e)).collect())?;
        let mut worst = 0.0f64;
        for (p, v) in points.iter().zip(&vals) {
            let f = abc_at(abc, coords, params, p)?;
            let predicted = 2.0 * v / (f.v[0] * f.v[1] * f.v[2]);
            let cs = crate::tensor::cs_density_at(&m, p, false)?;
            worst = worst.max((cs - predicted).abs() / predicted.abs().max(1.0));
        }
        r.notes.push(format!(
            "Darboux system holds (max {darboux_max:.1e}); density equals 2(A_z B_x C_y - A_y B_z C_x)/(ABC) to {worst:.1e}"
        ));
    } else {
        r.notes.push(format!(
            "Darboux system does not hold on the plan (max {darboux_max:.1e}); density cross-check skipped"
        ));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_expr, parse_metric_file};

    fn xyz() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    fn metric(text: &str) -> MetricSpec {
        parse_metric_file(text).unwrap().metric.unwrap()
    }

    fn hyperbolic() -> MetricSpec {
        metric("[space]\ncoords = x y z\n[metric]\ng 1 1 = 1/z^2\ng 2 2 = 1/z^2\ng 3 3 = 1/z^2\n")
    }

    fn plan(boxes: Vec<(f64, f64)>) -> SamplePlan {
        SamplePlan::new(boxes, 32, 42)
    }

    #[test]
    fn plans_are_deterministic_and_respect_exclusions() {
        let p = plan(vec![(-1.0, 1.0); 3]).exclude(parse_expr("x + y").unwrap());
        let params = BTreeMap::new();
        let a = p.points(&xyz(), &params).unwrap();
        let b = p.points(&xyz(), &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 32);
        assert!(a.iter().all(|q| (q[0] + q[1]).abs() >= EXCLUSION_RADIUS));
        assert!(a.iter().all(|q| q.iter().all(|c| (-1.0..=1.0).contains(c))));
    }

    #[test]
    fn impossible_plan_is_empty() {
        let p = plan(vec![(0.0, 0.0); 3]).exclude(parse_expr("x").unwrap());
        assert_eq!(p.points(&xyz(), &BTreeMap::new()), Err(Error::EmptyPlan));
    }

    #[test]
    fn hyperbolic_estimates_minus_one() {
        let r = check_constant_curvature(
            "h",
            &hyperbolic(),
            Lambda::Estimate,
            &plan(vec![(-1.0, 1.0), (-1.0, 1.0), (0.3, 2.0)]),
            1e-8,
        )
        .unwrap();
        assert!((r.lambda.unwrap() + 1.0).abs() < 1e-10);
        assert!(r.lambda_spread.unwrap() < 1e-10);
        assert!(r.verdict.passed());
    }

    #[test]
    fn hyperbolic_is_not_flat_but_symmetric() {
        let p = plan(vec![(-1.0, 1.0), (-1.0, 1.0), (0.3, 2.0)]);
        assert!(!check_flat("h", &hyperbolic(), &p, 1e-8).unwrap().verdict.passed());
        assert!(check_symmetric("h", &hyperbolic(), &p, 1e-8).unwrap().verdict.passed());
        let wrong = check_constant_curvature("h", &hyperbolic(), Lambda::Value(0.0), &p, 1e-8).unwrap();
        assert!(!wrong.verdict.passed());
    }

    #[test]
    fn strip_metric_of_negative_curvature() {
        let m = metric(
            "[space]\ncoords = x y z\n[metric]\ng 1 1 = 1/z^2\ng 2 2 = z^(-2) - 1\ng 3 3 = 1/(z^2*(1-z^2))\n",
        );
        let p = plan(vec![(-1.0, 1.0), (-1.0, 1.0), (0.1, 0.9)]);
        let r = check_constant_curvature("strip", &m, Lambda::Value(-1.0), &p, 1e-8).unwrap();
        assert!(r.verdict.passed(), "{}", r.summary());
    }

    #[test]
    fn cs_vanishing_examples() {
        let params = BTreeMap::new();
        let e = |s: &str| parse_expr(s).unwrap();
        let p = plan(vec![(0.5, 1.5); 3]);
        let (a, b, c) = (e("1/z"), e("1/z"), e("1/z"));
        let r = check_cs_vanishing("h", [&a, &b, &c], &xyz(), &params, &p, 1e-9).unwrap();
        assert!(r.verdict.passed());
        assert!(r.notes.iter().any(|n| n.contains("Darboux system holds")));
        let (a, b, c) = (e("exp(x)"), e("exp(y)"), e("exp(z)"));
        assert!(check_cs_vanishing("e", [&a, &b, &c], &xyz(), &params, &p, 1e-9)
            .unwrap()
            .verdict
            .passed());
        let (a, b, c) = (e("exp(y*z)"), e("exp(x*z)"), e("exp(x*y)"));
        // both products equal x*y*z*exp(yz+xz+xy), so the condition holds everywhere
        let at = |q: [f64; 3]| cs_vanishing_residual([&a, &b, &c], &xyz(), &params, &q).unwrap();
        assert!(at([1.0, 1.0, 1.0]).abs() < 1e-12);
        assert!(at([1.0, 2.0, 1.0]).abs() < 1e-10);
        let (a, b, c) = (e("exp(y+z)"), e("exp(2*x+z)"), e("exp(x+y)"));
        // A_z B_x C_y − A_y B_z C_x = (2 − 1)·ABC
        let at = |q: [f64; 3]| cs_vanishing_residual([&a, &b, &c], &xyz(), &params, &q).unwrap();
        let expected = 9.0f64.exp();
        assert!((at([1.0, 2.0, 1.0]) - expected).abs() < 1e-12 * expected);
        assert!(!check_cs_vanishing("x", [&a, &b, &c], &xyz(), &params, &p, 1e-9)
            .unwrap()
            .verdict
            .passed());
    }

    #[test]
    fn report_json_keys() {
        let r = Report::from_residuals("c", "k", vec![vec![0.0]], vec![1e-12], 1e-8, &SamplePlan::default());
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            vec!["case", "check", "lambda", "lambda_spread", "max_abs_residual", "mean_abs_residual", "n_points", "notes", "tol", "verdict"]
        );
        assert_eq!(v["verdict"], "pass");
    }
}
