use std::collections::BTreeMap;

use super::expr::{Env, Expr};
use crate::error::{Error, Result};
use crate::extension::ExtensionSpec;
use crate::jet::Jet;

/// Where the components of a metric come from.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSource {
    /// Upper triangle, row-major: (0,0), (0,1), …, (0,n−1), (1,1), …
    Components(Vec<Expr>),
    /// Six-dimensional Riemann extension of a three-dimensional base.
    Extension(Box<ExtensionSpec>),
}

/// A symmetric metric tensor over named coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    coords: Vec<String>,
    params: BTreeMap<String, f64>,
    source: MetricSource,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MetricSpec {
    /// Builds a metric from its upper triangle (see [`MetricSource::Components`]).
    pub fn from_upper(coords: Vec<String>, params: BTreeMap<String, f64>, upper: Vec<Expr>) -> Result<Self> {
        let n = coords.len();
        if n == 0 || n > crate::jet::MAX_VARS {
            return Err(Error::Invalid(format!("unsupported dimension {n}")));
        }
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::Invalid(format!(
                "{} components given for a {n}-dimensional metric",
                upper.len()
            )));
        }
        Ok(MetricSpec {
            coords,
            params,
            source: MetricSource::Components(upper),
        })
    }

    /// Builds a metric from a full matrix, which must be symmetric entry by entry.
    pub fn from_matrix(coords: Vec<String>, params: BTreeMap<String, f64>, rows: Vec<Vec<Expr>>) -> Result<Self> {
        let n = coords.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("metric matrix is not square".into()));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Invalid(format!("metric entries ({}, {}) and ({}, {}) differ", i + 1, j + 1, j + 1, i + 1)));
                }
                upper.push(rows[i][j].clone());
            }
        }
        MetricSpec::from_upper(coords, params, upper)
    }

    /// Diagonal metric with the given entries.
    pub fn diagonal(coords: Vec<String>, params: BTreeMap<String, f64>, diag: Vec<Expr>) -> Result<Self> {
        let n = diag.len();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(if i == j { diag[i].clone() } else { Expr::Num(0.0) });
            }
        }
        MetricSpec::from_upper(coords, params, upper)
    }

    pub(crate) fn from_extension(spec: ExtensionSpec) -> Self {
        let coords = spec.coords();
        let params = spec.base().params().clone();
        MetricSpec {
            coords,
            params,
            source: MetricSource::Extension(Box::new(spec)),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn source(&self) -> &MetricSource {
        &self.source
    }

    /// Returns a copy with `name` bound to `value`.
    pub fn with_param(&self, name: &str, value: f64) -> Self {
        let mut out = self.clone();
        out.params.insert(name.to_string(), value);
        if let MetricSource::Extension(ext) = &mut out.source {
            **ext = ext.with_param(name, value);
        }
        out
    }

    /// The symbolic component g_ij, if the metric is given by components.
    pub fn component(&self, i: usize, j: usize) -> Option<&Expr> {
        match &self.source {
            MetricSource::Components(c) => Some(&c[upper_index(self.dim(), i, j)]),
            MetricSource::Extension(_) => None,
        }
    }

    /// True when every off-diagonal component is the literal 0.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            (i + 1..n).all(|j| matches!(self.component(i, j), Some(Expr::Num(v)) if *v == 0.0))
        })
    }

    /// Coordinate jets at `point`, one per coordinate.
    pub fn coordinate_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim();
        if point.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: point.len(),
            });
        }
        (0..n).map(|i| Jet::variable(point[i], i, n, order)).collect()
    }

    /// All n² component jets at `point`, row-major, symmetric by construction.
    pub fn component_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim();
        match &self.source {
            MetricSource::Components(upper) => {
                let jets = self.coordinate_jets(point, order)?;
                let env = Env::new(&self.coords, &jets, &self.params);
                let evaluated = upper.iter().map(|e| e.eval(&env)).collect::<Result<Vec<_>>>()?;
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        out.push(evaluated[upper_index(n, i, j)].clone());
                    }
                }
                Ok(out)
            }
            MetricSource::Extension(ext) => ext.component_jets(point, order),
        }
    }

    /// Component values at `point`, row-major.
    pub fn values_at(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .component_jets(point, 0)?
            .iter()
            .map(Jet::value)
            .collect())
    }

    /// Renames coordinates (and their occurrences in the components).
    pub fn rename_coords(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: names.len(),
            });
        }
        let map: BTreeMap<String, String> = self
            .coords
            .iter()
            .zip(names)
            .map(|(a, b)| (a.clone(), b.to_string()))
            .collect();
        let coords = names.iter().map(|s| s.to_string()).collect();
        let source = match &self.source {
            MetricSource::Components(c) => MetricSource::Components(c.iter().map(|e| e.rename(&map)).collect()),
            MetricSource::Extension(ext) => MetricSource::Extension(Box::new(ext.rename_coords(names)?)),
        };
        Ok(MetricSpec {
            coords,
            params: self.params.clone(),
            source,
        })
    }
}
