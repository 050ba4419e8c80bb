//! Six-dimensional Riemann extensions of three-dimensional metrics.
//!
//! For base connection coefficients `Γ^i_jk` the extension on
//! `(x¹, x², x³, ψ₁, ψ₂, ψ₃)` is
//! `−2 Γ^i_jk ψ_i dx^j dx^k + 2 dx^i dψ_i`, so `g_jk = −2 Γ^i_jk ψ_i`,
//! `g_{j, 3+i} = δ_ij` and the ψψ block vanishes.
//!
//! With a minus sign on the cross term instead (see
//! [`ExtensionSpec::literal_cross_term`]) the metric is the extension of the
//! connection `−Γ`, which is in general neither flat nor symmetric when the
//! base is.
//!
//! The modified modes add `Γ²₁₃ = CA/B`, `Γ³₁₂ = AB/C`, `Γ¹₂₃ = BC/A` (with
//! `A = √g₁₁` etc.) to the Levi-Civita coefficients of a diagonal base. The
//! imaginary-coefficient variant is realised with a sign `σ = −1` on products
//! of two added coefficients in the connection curvature; the six-dimensional
//! metric itself uses the real coefficients in both modified modes.

use std::fmt;

use crate::dsl::MetricSpec;
use crate::error::{Error, Result};
use crate::jet::{Elementary, Jet, MAX_ORDER};
use crate::tensor::{lower_riemann, riemann_up, Deformation, Geometry};
use crate::verdict::SamplePlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtensionMode {
    LeviCivita,
    /// Added coefficients with `σ = +1`.
    ModifiedPlus,
    /// Added coefficients with `σ = −1`.
    ModifiedMinus,
}

impl ExtensionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExtensionMode::LeviCivita => "lc",
            ExtensionMode::ModifiedPlus => "mod+",
            ExtensionMode::ModifiedMinus => "mod-",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "lc" | "levi_civita" => Ok(ExtensionMode::LeviCivita),
            "mod+" | "modified+" => Ok(ExtensionMode::ModifiedPlus),
            "mod-" | "modified-" => Ok(ExtensionMode::ModifiedMinus),
            other => Err(Error::Invalid(format!("unknown extension mode `{other}`"))),
        }
    }

    pub fn sigma(self) -> f64 {
        match self {
            ExtensionMode::ModifiedMinus => -1.0,
            _ => 1.0,
        }
    }

    pub fn is_modified(self) -> bool {
        self != ExtensionMode::LeviCivita
    }
}

impl fmt::Display for ExtensionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionSpec {
    base: MetricSpec,
    mode: ExtensionMode,
    psi: [String; 3],
    cross: f64,
}

/// Sampling interval for each ψ coordinate when a base plan is lifted.
pub const PSI_BOX: (f64, f64) = (-1.0, 1.0);

/// A base-space plan extended by [`PSI_BOX`] in the three fibre coordinates.
pub fn lift_plan(plan: &SamplePlan) -> SamplePlan {
    let mut lifted = plan.clone();
    lifted.boxes.extend([PSI_BOX; 3]);
    lifted
}

/// The six-dimensional extension of `base` as a metric.
pub fn extend(base: &MetricSpec, mode: ExtensionMode) -> Result<MetricSpec> {
    Ok(MetricSpec::from_extension(ExtensionSpec::new(base, mode)?))
}

impl ExtensionSpec {
    pub fn new(base: &MetricSpec, mode: ExtensionMode) -> Result<Self> {
        if base.dim() != 3 {
            return Err(Error::Dimension {
                expected: 3,
                actual: base.dim(),
            });
        }
        if mode.is_modified() && !base.is_diagonal() {
            return Err(Error::Invalid("modified extensions need a diagonal base metric".into()));
        }
        let mut psi = ["psi1".to_string(), "psi2".to_string(), "psi3".to_string()];
        for (k, p) in psi.iter_mut().enumerate() {
            while base.coords().contains(p) || base.params().contains_key(p.as_str()) {
                p.push('_');
            }
            debug_assert!(k < 3);
        }
        Ok(ExtensionSpec {
            base: base.clone(),
            mode,
            psi,
            cross: 1.0,
        })
    }

    /// Uses `−2 dx^i dψ_i` for the cross term.
    pub fn literal_cross_term(mut self) -> Self {
        self.cross = -1.0;
        self
    }

    pub fn has_literal_cross_term(&self) -> bool {
        self.cross < 0.0
    }

    pub fn into_metric(self) -> MetricSpec {
        MetricSpec::from_extension(self)
    }

    pub fn base(&self) -> &MetricSpec {
        &self.base
    }

    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    pub fn coords(&self) -> Vec<String> {
        let mut c = self.base.coords().to_vec();
        c.extend(self.psi.iter().cloned());
        c
    }

    pub(crate) fn with_param(&self, name: &str, value: f64) -> Self {
        ExtensionSpec {
            base: self.base.with_param(name, value),
            ..self.clone()
        }
    }

    pub(crate) fn rename_coords(&self, names: &[&str]) -> Result<Self> {
        if names.len() != 6 {
            return Err(Error::Dimension {
                expected: 6,
                actual: names.len(),
            });
        }
        Ok(ExtensionSpec {
            base: self.base.rename_coords(&names[..3])?,
            mode: self.mode,
            psi: [names[3].to_string(), names[4].to_string(), names[5].to_string()],
            cross: self.cross,
        })
    }

    /// Base connection (plus added terms in modified modes) at order `order`,
    /// from base metric jets one order higher.
    fn connection(&self, base_point: &[f64], order: usize) -> Result<(Geometry, Option<Vec<Jet>>)> {
        if order + 1 > MAX_ORDER {
            return Err(Error::OrderExceeded {
                requested: order + 1,
                order: MAX_ORDER,
            });
        }
        let geo = Geometry::new(&self.base, base_point, order + 1)?;
        let extra = if self.mode.is_modified() {
            Some(added_coefficients(&geo.g, order)?)
        } else {
            None
        };
        Ok((geo, extra))
    }

    /// All 36 component jets at a six-dimensional point, row-major.
    pub fn component_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        if point.len() != 6 {
            return Err(Error::Dimension {
                expected: 6,
                actual: point.len(),
            });
        }
        let (geo, extra) = self.connection(&point[..3], order)?;
        let gamma: Vec<Jet> = match &extra {
            Some(e) => geo.gamma.iter().zip(e).map(|(a, b)| a + b).collect(),
            None => geo.gamma.clone(),
        };
        let lifted: Vec<Jet> = gamma.iter().map(|j| j.embed(6)).collect();
        let psi: Vec<Jet> = (0..3)
            .map(|i| Jet::variable(point[3 + i], 3 + i, 6, order))
            .collect::<Result<_>>()?;
        let mut out = vec![Jet::constant(0.0, 6, order); 36];
        for j in 0..3 {
            for k in j..3 {
                let mut acc = Jet::constant(0.0, 6, order);
                for (i, p) in psi.iter().enumerate() {
                    acc = acc + &lifted[(i * 3 + j) * 3 + k] * p;
                }
                let acc = acc.scale(-2.0);
                out[j * 6 + k] = acc.clone();
                out[k * 6 + j] = acc;
            }
            out[j * 6 + 3 + j] = Jet::constant(self.cross, 6, order);
            out[(3 + j) * 6 + j] = Jet::constant(self.cross, 6, order);
        }
        Ok(out)
    }

    /// `R_ijkl` of the three-dimensional connection behind the extension, at a base point.
    ///
    /// In modified modes the connection includes the added coefficients and
    /// their mutual products carry the mode's `σ`.
    pub fn connection_riemann(&self, base_point: &[f64]) -> Result<Vec<f64>> {
        let (geo, extra) = self.connection(base_point, 1)?;
        let deformation = extra.as_ref().map(|e| Deformation {
            extra: e,
            sigma: self.mode.sigma(),
        });
        let up = riemann_up(&geo.gamma, 3, deformation.as_ref());
        Ok(lower_riemann(&geo.g, &up, 3).iter().map(Jet::value).collect())
    }
}

/// `Γ²₁₃ = CA/B`, `Γ³₁₂ = AB/C`, `Γ¹₂₃ = BC/A` (and their symmetric partners) at `order`.
fn added_coefficients(g: &[Jet], order: usize) -> Result<Vec<Jet>> {
    let diag: Vec<Jet> = (0..3)
        .map(|i| g[i * 3 + i].truncate(order).apply(Elementary::Sqrt))
        .collect::<Result<_>>()?;
    let (a, b, c) = (&diag[0], &diag[1], &diag[2]);
    let nv = g[0].nvars();
    let mut e = vec![Jet::constant(0.0, nv, order); 27];
    let mut set = |i: usize, j: usize, k: usize, v: Jet| {
        e[(i * 3 + k) * 3 + j] = v.clone();
        e[(i * 3 + j) * 3 + k] = v;
    };
    set(1, 0, 2, (c * a).checked_div(b)?);
    set(2, 0, 1, (a * b).checked_div(c)?);
    set(0, 1, 2, (b * c).checked_div(a)?);
    Ok(e)
}

/// Eigenvalues of a symmetric matrix given row-major.
pub fn symmetric_eigenvalues(values: &[f64], n: usize) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, values);
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Signs of the metric eigenvalues at `point`, largest first, as `+`/`-`/`0`.
pub fn signature_at(m: &MetricSpec, point: &[f64]) -> Result<String> {
    let v = m.values_at(point)?;
    Ok(symmetric_eigenvalues(&v, m.dim())
        .iter()
        .map(|&e| if e > 0.0 { '+' } else if e < 0.0 { '-' } else { '0' })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_metric_file, MetricSource};
    use crate::tensor::{bundle_at, Want};

    fn metric(text: &str) -> MetricSpec {
        parse_metric_file(text).unwrap().metric.unwrap()
    }

    fn euclidean() -> MetricSpec {
        metric("[space]\ncoords = x y z\n[metric]\ng 1 1 = 1\ng 2 2 = 1\ng 3 3 = 1\n")
    }

    fn flat_darboux() -> MetricSpec {
        metric("[space]\ncoords = x y z\n[metric]\ng 1 1 = exp(2*x)\ng 2 2 = 1\ng 3 3 = 1\n")
    }

    fn hyperbolic() -> MetricSpec {
        metric("[space]\ncoords = x y z\n[metric]\ng 1 1 = 1/z^2\ng 2 2 = 1/z^2\ng 3 3 = 1/z^2\n")
    }

    #[test]
    fn euclidean_extension_is_flat_and_constant() {
        let e = extend(&euclidean(), ExtensionMode::LeviCivita).unwrap();
        assert_eq!(e.dim(), 6);
        let p = [0.1, 0.2, 0.3, 0.4, -0.5, 0.6];
        let v = e.values_at(&p).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if (i < 3 && j == i + 3) || (j < 3 && i == j + 3) { 1.0 } else { 0.0 };
                assert_eq!(v[i * 6 + j], expected);
            }
        }
        let b = bundle_at(&e, &p, Want::default()).unwrap();
        assert!(b.riemann_low.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn flat_base_gives_flat_split_extension() {
        let e = extend(&flat_darboux(), ExtensionMode::LeviCivita).unwrap();
        for p in [[0.3, 0.1, -0.2, 0.5, -0.7, 0.2], [-0.4, 1.0, 0.0, -1.0, 0.3, 0.9]] {
            let b = bundle_at(&e, &p, Want::default()).unwrap();
            assert!(b.max_abs_riemann() < 1e-10, "{}", b.max_abs_riemann());
            assert_eq!(signature_at(&e, &p).unwrap(), "+++---");
        }
    }

    #[test]
    fn hyperbolic_extension_is_symmetric_not_flat() {
        let e = extend(&hyperbolic(), ExtensionMode::LeviCivita).unwrap();
        let p = [0.2, -0.3, 0.8, 0.4, 0.1, -0.6];
        let b = bundle_at(&e, &p, Want { nabla_r: true, cs: false }).unwrap();
        let nab = b.nabla_riemann.as_ref().unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(nab < 1e-8, "{nab}");
        assert!(b.max_abs_riemann() > 0.1);
    }

    #[test]
    fn literal_cross_term_breaks_symmetry() {
        let e = ExtensionSpec::new(&hyperbolic(), ExtensionMode::LeviCivita)
            .unwrap()
            .literal_cross_term()
            .into_metric();
        let p = [0.2, -0.3, 0.8, 0.4, 0.1, -0.6];
        assert_eq!(e.values_at(&p).unwrap()[3], -1.0);
        let b = bundle_at(&e, &p, Want { nabla_r: true, cs: false }).unwrap();
        let nab = b.nabla_riemann.as_ref().unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(nab > 1.0, "{nab}");
    }

    #[test]
    fn psi_block_is_linear_in_psi() {
        let e = extend(&hyperbolic(), ExtensionMode::LeviCivita).unwrap();
        let p = [0.2, -0.3, 0.8, 0.4, 0.1, -0.6];
        let q = [0.2, -0.3, 0.8, 0.8, 0.2, -1.2];
        let a = e.values_at(&p).unwrap();
        let b = e.values_at(&q).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert!((b[j * 6 + k] - 2.0 * a[j * 6 + k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn renaming_commutes_with_extension() {
        let base = hyperbolic();
        let e1 = extend(&base, ExtensionMode::LeviCivita).unwrap();
        let e2 = extend(&base.rename_coords(&["u", "v", "w"]).unwrap(), ExtensionMode::LeviCivita).unwrap();
        let p = [0.2, -0.3, 0.8, 0.4, 0.1, -0.6];
        assert_eq!(e1.values_at(&p).unwrap(), e2.values_at(&p).unwrap());
        assert_eq!(e2.coords()[..3], ["u", "v", "w"]);
        assert!(matches!(e1.source(), MetricSource::Extension(_)));
    }

    #[test]
    fn modified_modes_need_diagonal_three_dimensional_base() {
        let nd = metric("[space]\ncoords = x y z\n[metric]\ng 1 1 = 1\ng 1 2 = 0.1\ng 2 2 = 1\ng 3 3 = 1\n");
        assert!(extend(&nd, ExtensionMode::ModifiedPlus).is_err());
        assert!(extend(&nd, ExtensionMode::LeviCivita).is_ok());
        let two = metric("[space]\ncoords = x y\n[metric]\ng 1 1 = 1\ng 2 2 = 1\n");
        assert!(matches!(extend(&two, ExtensionMode::LeviCivita), Err(Error::Dimension { .. })));
    }

    #[test]
    fn modified_coefficients_enter_the_metric() {
        // Euclidean base: Γ = 0, added terms are all 1
        let e = extend(&euclidean(), ExtensionMode::ModifiedPlus).unwrap();
        let p = [0.0, 0.0, 0.0, 1.0, 2.0, 3.0];
        let v = e.values_at(&p).unwrap();
        // g_12 = −2 Γ³₁₂ ψ₃ = −6, g_13 = −2 Γ²₁₃ ψ₂ = −4, g_23 = −2 Γ¹₂₃ ψ₁ = −2
        assert_eq!(v[1], -6.0);
        assert_eq!(v[2], -4.0);
        assert_eq!(v[6 + 2], -2.0);
        let minus = extend(&euclidean(), ExtensionMode::ModifiedMinus).unwrap();
        assert_eq!(minus.values_at(&p).unwrap(), v);
    }

    #[test]
    fn sigma_changes_connection_curvature() {
        // for constant added terms only the quadratic part survives, so σ flips the sign
        let plus = ExtensionSpec::new(&euclidean(), ExtensionMode::ModifiedPlus).unwrap();
        let minus = ExtensionSpec::new(&euclidean(), ExtensionMode::ModifiedMinus).unwrap();
        let rp = plus.connection_riemann(&[0.1, 0.2, 0.3]).unwrap();
        let rm = minus.connection_riemann(&[0.1, 0.2, 0.3]).unwrap();
        assert!(rp.iter().any(|v| v.abs() > 0.5));
        for (a, b) in rp.iter().zip(&rm) {
            assert!((a + b).abs() < 1e-14);
        }
    }
}
