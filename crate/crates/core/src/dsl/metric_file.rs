//! Line-oriented metric file format.
//!
//! ```text
//! [space]
//! coords = x y z
//! [params]
//! lambda = -1
//! [metric]
//! g 1 1 = 1/z^2          # 1-based indices; omitted entries are 0
//! [fields]
//! l = -4*cosh(x-4*z)^(-2)
//! w 1 = 0                # component 1 of the one-form `w`
//! [plan]
//! points = 64
//! seed = 42
//! tol = 1e-8
//! box z = 0.2 2
//! exclude = x + y        # reject points where |x + y| < 1e-3
//! ```
//!
//! Fields may use coordinates, parameters and previously defined fields;
//! metric components may use fields by name. References are inlined, so
//! every stored expression mentions only coordinates and parameters.

use std::collections::{BTreeMap, BTreeSet};

use super::expr::Expr;
use super::metric::MetricSpec;
use super::parser::parse_expr;
use crate::error::{Error, Result};
use crate::verdict::SamplePlan;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricFile {
    pub coords: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub metric: Option<MetricSpec>,
    /// Scalar fields with all references inlined.
    pub fields: BTreeMap<String, Expr>,
    /// One-forms by name; absent components are 0.
    pub forms: BTreeMap<String, Vec<Expr>>,
    pub plan: SamplePlan,
    pub tol: Option<f64>,
}

impl MetricFile {
    /// Returns a copy with parameter `name` bound to `value`, in the metric too.
    pub fn with_param(&self, name: &str, value: f64) -> Self {
        let mut out = self.clone();
        out.params.insert(name.to_string(), value);
        out.metric = out.metric.map(|m| m.with_param(name, value));
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Space,
    Params,
    Metric,
    Fields,
    Plan,
}

fn file_error(line: usize, message: impl Into<String>) -> Error {
    Error::MetricFile {
        line,
        message: message.into(),
    }
}

fn located(line: usize, e: Error) -> Error {
    match e {
        Error::MetricFile { .. } => e,
        other => file_error(line, other.to_string()),
    }
}

struct Builder {
    coords: Option<Vec<String>>,
    params: BTreeMap<String, f64>,
    entries: BTreeMap<(usize, usize), (Expr, usize)>,
    fields: BTreeMap<String, Expr>,
    forms: BTreeMap<String, BTreeMap<usize, Expr>>,
    plan: SamplePlan,
    boxes: BTreeMap<String, (f64, f64)>,
    tol: Option<f64>,
    seen_metric: bool,
}

impl Builder {
    fn coords(&self, line: usize) -> Result<&Vec<String>> {
        self.coords
            .as_ref()
            .ok_or_else(|| file_error(line, "coords must be declared before use"))
    }

    fn check_names(&self, line: usize, e: &Expr, allow_fields: bool) -> Result<()> {
        let coords = self.coords(line)?;
        for name in e.identifiers() {
            let known = coords.contains(&name)
                || self.params.contains_key(&name)
                || (allow_fields && self.fields.contains_key(&name));
            if !known {
                return Err(file_error(line, format!("unknown identifier `{name}`")));
            }
        }
        Ok(())
    }

    fn expr(&self, line: usize, text: &str, allow_fields: bool) -> Result<Expr> {
        let e = parse_expr(text).map_err(|e| located(line, e))?;
        self.check_names(line, &e, allow_fields)?;
        Ok(if allow_fields {
            e.substitute(&self.fields)
        } else {
            e
        })
    }

    fn constant(&self, line: usize, text: &str) -> Result<f64> {
        let e = parse_expr(text).map_err(|e| located(line, e))?;
        e.eval_f64(&[], &[], &self.params).map_err(|e| located(line, e))
    }

    fn index(&self, line: usize, text: &str) -> Result<usize> {
        let n = self.coords(line)?.len();
        let k: usize = text
            .parse()
            .map_err(|_| file_error(line, format!("`{text}` is not an index")))?;
        if k == 0 || k > n {
            return Err(file_error(line, format!("index {k} out of range 1..={n}")));
        }
        Ok(k - 1)
    }

    fn fresh_name(&self, line: usize, name: &str) -> Result<()> {
        if !is_identifier(name) {
            return Err(file_error(line, format!("`{name}` is not a valid name")));
        }
        let coords = self.coords.as_deref().unwrap_or(&[]);
        if coords.iter().any(|c| c == name)
            || self.params.contains_key(name)
            || self.fields.contains_key(name)
            || self.forms.contains_key(name)
        {
            return Err(file_error(line, format!("`{name}` is already defined")));
        }
        Ok(())
    }

    fn space(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        if key != "coords" {
            return Err(file_error(line, format!("unknown key `{key}` in [space]")));
        }
        if self.coords.is_some() {
            return Err(file_error(line, "coords declared twice"));
        }
        let names: Vec<String> = value.split_whitespace().map(str::to_string).collect();
        if names.is_empty() || names.len() > crate::jet::MAX_VARS {
            return Err(file_error(line, format!("expected 1..={} coordinates", crate::jet::MAX_VARS)));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() || !names.iter().all(|n| is_identifier(n)) {
            return Err(file_error(line, "coordinate names must be distinct identifiers"));
        }
        if crate::jet::Elementary::ALL.iter().any(|f| names.iter().any(|n| n == f.name())) {
            return Err(file_error(line, "coordinate names must not shadow functions"));
        }
        self.coords = Some(names);
        Ok(())
    }

    fn param(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        self.fresh_name(line, key)?;
        let v = self.constant(line, value)?;
        self.params.insert(key.to_string(), v);
        Ok(())
    }

    fn metric(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let parts: Vec<&str> = key.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "g" {
            return Err(file_error(line, "metric entries look like `g i j = expr`"));
        }
        let i = self.index(line, parts[1])?;
        let j = self.index(line, parts[2])?;
        let slot = (i.min(j), i.max(j));
        if let Some((_, previous)) = self.entries.get(&slot) {
            return Err(file_error(
                line,
                format!("entry g {} {} already given on line {previous}", i + 1, j + 1),
            ));
        }
        let e = self.expr(line, value, true)?;
        self.entries.insert(slot, (e, line));
        self.seen_metric = true;
        Ok(())
    }

    fn field(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let parts: Vec<&str> = key.split_whitespace().collect();
        match parts.as_slice() {
            [name] => {
                self.fresh_name(line, name)?;
                let e = self.expr(line, value, true)?;
                self.fields.insert(name.to_string(), e);
            }
            [name, idx] => {
                if !self.forms.contains_key(*name) {
                    self.fresh_name(line, name)?;
                }
                let k = self.index(line, idx)?;
                let e = self.expr(line, value, true)?;
                let form = self.forms.entry(name.to_string()).or_default();
                if form.insert(k, e).is_some() {
                    return Err(file_error(line, format!("component {name} {} given twice", k + 1)));
                }
            }
            _ => return Err(file_error(line, "field entries look like `name = expr` or `name k = expr`")),
        }
        Ok(())
    }

    fn plan(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let parts: Vec<&str> = key.split_whitespace().collect();
        match parts.as_slice() {
            ["points"] => {
                self.plan.n_points = value
                    .trim()
                    .parse()
                    .map_err(|_| file_error(line, "points must be a positive integer"))?;
                if self.plan.n_points == 0 {
                    return Err(file_error(line, "points must be a positive integer"));
                }
            }
            ["seed"] => {
                self.plan.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| file_error(line, "seed must be a non-negative integer"))?;
            }
            ["tol"] => self.tol = Some(self.constant(line, value)?),
            ["box", coord] => {
                if !self.coords(line)?.iter().any(|c| c == coord) {
                    return Err(file_error(line, format!("unknown coordinate `{coord}`")));
                }
                let bounds: Vec<&str> = value.split_whitespace().collect();
                if bounds.len() != 2 {
                    return Err(file_error(line, "box needs `lo hi`"));
                }
                let lo = self.constant(line, bounds[0])?;
                let hi = self.constant(line, bounds[1])?;
                if !(lo <= hi) {
                    return Err(file_error(line, "box lower bound exceeds upper bound"));
                }
                if self.boxes.insert(coord.to_string(), (lo, hi)).is_some() {
                    return Err(file_error(line, format!("box for `{coord}` given twice")));
                }
            }
            ["exclude"] => {
                let e = self.expr(line, value, true)?;
                self.plan.exclusions.push(e);
            }
            _ => return Err(file_error(line, format!("unknown key `{key}` in [plan]"))),
        }
        Ok(())
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a metric file.
pub fn parse_metric_file(text: &str) -> Result<MetricFile> {
    let mut b = Builder {
        coords: None,
        params: BTreeMap::new(),
        entries: BTreeMap::new(),
        fields: BTreeMap::new(),
        forms: BTreeMap::new(),
        plan: SamplePlan::default(),
        boxes: BTreeMap::new(),
        tol: None,
        seen_metric: false,
    };
    let mut section = Section::None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "space" => Section::Space,
                "params" => Section::Params,
                "metric" => Section::Metric,
                "fields" => Section::Fields,
                "plan" => Section::Plan,
                other => return Err(file_error(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| file_error(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match section {
            Section::None => return Err(file_error(line, "entry outside of any section")),
            Section::Space => b.space(line, key, value)?,
            Section::Params => b.param(line, key, value)?,
            Section::Metric => b.metric(line, key, value)?,
            Section::Fields => b.field(line, key, value)?,
            Section::Plan => b.plan(line, key, value)?,
        }
    }

    let coords = b
        .coords
        .clone()
        .ok_or_else(|| file_error(text.lines().count().max(1), "no coords line"))?;
    let n = coords.len();

    let metric = if b.seen_metric {
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(
                    b.entries
                        .get(&(i, j))
                        .map(|(e, _)| e.clone())
                        .unwrap_or(Expr::Num(0.0)),
                );
            }
        }
        Some(MetricSpec::from_upper(coords.clone(), b.params.clone(), upper)?)
    } else {
        None
    };

    let forms = b
        .forms
        .iter()
        .map(|(name, comps)| {
            let v = (0..n)
                .map(|k| comps.get(&k).cloned().unwrap_or(Expr::Num(0.0)))
                .collect();
            (name.clone(), v)
        })
        .collect();

    let mut plan = b.plan.clone();
    plan.boxes = coords
        .iter()
        .map(|c| b.boxes.get(c).copied().unwrap_or(SamplePlan::DEFAULT_BOX))
        .collect();

    Ok(MetricFile {
        coords,
        params: b.params,
        metric,
        fields: b.fields,
        forms,
        plan,
        tol: b.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HYPERBOLIC: &str = "\
[space]
coords = x y z
[params]
lambda = -1
[metric]
g 1 1 = 1/z^2
g 2 2 = 1/z^2   # same scale
g 3 3 = 1/z^2
";

    #[test]
    fn reads_hyperbolic_metric() {
        let f = parse_metric_file(HYPERBOLIC).unwrap();
        assert_eq!(f.coords, vec!["x", "y", "z"]);
        assert_eq!(f.params["lambda"], -1.0);
        let m = f.metric.unwrap();
        assert!(m.is_diagonal());
        let v = m.values_at(&[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(v[0], 4.0);
        assert_eq!(v[4], 4.0);
        assert_eq!(v[8], 4.0);
        assert_eq!(f.plan.n_points, 64);
        assert_eq!(f.plan.seed, 42);
    }

    #[test]
    fn omitted_entries_are_zero() {
        let f = parse_metric_file(HYPERBOLIC).unwrap();
        assert_eq!(f.metric.unwrap().component(0, 1), Some(&Expr::Num(0.0)));
    }

    #[test]
    fn conflicting_transposed_entries() {
        let text = "[space]\ncoords = x y z\n[metric]\ng 1 2 = x\ng 2 1 = y\n";
        match parse_metric_file(text) {
            Err(Error::MetricFile { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("already given on line 4"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn index_out_of_range_and_missing_coords() {
        let text = "[space]\ncoords = x y z\n[metric]\ng 1 4 = 1\n";
        assert!(matches!(parse_metric_file(text), Err(Error::MetricFile { line: 4, .. })));
        assert!(matches!(
            parse_metric_file("[metric]\ng 1 1 = 1\n"),
            Err(Error::MetricFile { line: 2, .. })
        ));
        assert!(matches!(parse_metric_file("# nothing\n"), Err(Error::MetricFile { .. })));
    }

    #[test]
    fn unknown_identifier_is_rejected() {
        let text = "[space]\ncoords = x y z\n[metric]\ng 1 1 = q*x\n";
        match parse_metric_file(text) {
            Err(Error::MetricFile { line: 4, message }) => assert!(message.contains("`q`")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fields_forms_and_plan() {
        let text = "\
[space]
coords = x y z
[fields]
l = -4*cosh(x-4*z)^(-2)
m = -1/2
w 1 = y
w 3 = l
[metric]
g 1 1 = m*y^2
g 1 3 = l
[plan]
points = 16
seed = 7
tol = 1e-9
box y = 0.5 2
exclude = x - z
";
        let f = parse_metric_file(text).unwrap();
        assert_eq!(f.fields.len(), 2);
        let w = &f.forms["w"];
        assert_eq!(w.len(), 3);
        assert_eq!(w[1], Expr::Num(0.0));
        assert_eq!(w[2], f.fields["l"]);
        let m = f.metric.unwrap();
        assert_eq!(m.component(2, 0), Some(&f.fields["l"]));
        assert_eq!(f.plan.n_points, 16);
        assert_eq!(f.plan.seed, 7);
        assert_eq!(f.tol, Some(1e-9));
        assert_eq!(f.plan.boxes[1], (0.5, 2.0));
        assert_eq!(f.plan.boxes[0], SamplePlan::DEFAULT_BOX);
        assert_eq!(f.plan.exclusions.len(), 1);
    }

    #[test]
    fn parameters_may_be_expressions() {
        let text = "[space]\ncoords = x y z\n[params]\na = 1/4\nb = 2*a\n";
        let f = parse_metric_file(text).unwrap();
        assert_eq!(f.params["b"], 0.5);
        assert!(f.metric.is_none());
    }

    #[test]
    fn syntax_errors_carry_line() {
        let text = "[space]\ncoords = x y z\n[metric]\ng 1 1 = x +\n";
        assert!(matches!(parse_metric_file(text), Err(Error::MetricFile { line: 4, .. })));
    }
}
