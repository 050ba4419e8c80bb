//! Connection and curvature at a point.
//!
//! Conventions:
//! `Γ^i_jk = ½ g^im (∂_j g_mk + ∂_k g_mj − ∂_m g_jk)`,
//! `R^i_jkl = ∂_k Γ^i_jl − ∂_l Γ^i_jk + Γ^i_km Γ^m_jl − Γ^i_lm Γ^m_jk`,
//! `R_ijkl = g_im R^m_jkl`, `R_ab = R^m_amb`.
//! With these, the space `dx² + dy² + dz²` over `z²` has
//! `R_ijkl = −(g_ik g_jl − g_il g_jk)`, i.e. curvature −1, with no extra sign flip.
//!
//! Everything is computed from metric jets: order 2 suffices for Γ, R and the
//! Chern–Simons density; order 3 adds `∇R`.

use serde::Serialize;

use crate::dsl::{Env, Expr, MetricSpec};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Which optional quantities [`bundle_at`] should compute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Want {
    pub nabla_r: bool,
    pub cs: bool,
}

/// Curvature data at one point. Tensors are flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureBundle {
    pub dim: usize,
    pub point: Vec<f64>,
    /// `g_ij` at `[i*n + j]`.
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    pub det: f64,
    /// `Γ^i_jk` at `[(i*n + j)*n + k]`.
    pub gamma: Vec<f64>,
    /// `R_ijkl`.
    pub riemann_low: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
    /// `∇_m R_ijkl` with `m` outermost.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nabla_riemann: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cs: Option<f64>,
}

impl CurvatureBundle {
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim + j]
    }

    pub fn g_inv(&self, i: usize, j: usize) -> f64 {
        self.g_inv[i * self.dim + j]
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.gamma[(i * n + j) * n + k]
    }

    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.riemann_low[((i * n + j) * n + k) * n + l]
    }

    pub fn ricci(&self, a: usize, b: usize) -> f64 {
        self.ricci[a * self.dim + b]
    }

    pub fn nabla_riemann(&self, m: usize, i: usize, j: usize, k: usize, l: usize) -> Option<f64> {
        let n = self.dim;
        self.nabla_riemann
            .as_ref()
            .map(|v| v[(((m * n + i) * n + j) * n + k) * n + l])
    }

    /// `G_ijkl = g_ik g_jl − g_il g_jk`.
    pub fn unit_curvature(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.g(i, k) * self.g(j, l) - self.g(i, l) * self.g(j, k)
    }

    pub fn max_abs_g(&self) -> f64 {
        self.g.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_riemann(&self) -> f64 {
        self.riemann_low.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&r, &s| m[r * n + c].abs().total_cmp(&m[s * n + c].abs()))
            .unwrap();
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
            }
            det = -det;
        }
        let piv = m[c * n + c];
        det *= piv;
        for r in c + 1..n {
            let f = m[r * n + c] / piv;
            for k in c..n {
                m[r * n + k] -= f * m[c * n + k];
            }
        }
    }
    det
}

/// Threshold on `|det| / Π‖row‖` below which a metric is treated as singular.
const SINGULAR_EPS: f64 = 1e-12;

fn check_nonsingular(values: &[f64], n: usize, point: &[f64]) -> Result<f64> {
    let det = determinant(values, n);
    // Hadamard's bound; unlike max|g|^n it is not fooled by a few large rows
    let scale: f64 = values
        .chunks(n)
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product();
    if !det.is_finite() || det.abs() <= SINGULAR_EPS * scale || scale == 0.0 {
        return Err(Error::SingularMetric {
            point: point.to_vec(),
        });
    }
    Ok(det)
}

/// Inverse of a matrix of jets by Gauss–Jordan elimination, pivoting on constant terms.
pub fn invert_jets(a: &[Jet], n: usize) -> Result<Vec<Jet>> {
    let nv = a[0].nvars();
    let order = a[0].order();
    let mut m: Vec<Vec<Jet>> = (0..n).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, nv, order))
                .collect()
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&r, &s| m[r][c].value().abs().total_cmp(&m[s][c].value().abs()))
            .unwrap();
        m.swap(p, c);
        inv.swap(p, c);
        let piv = m[c][c].recip()?;
        for k in 0..n {
            m[c][k] = &m[c][k] * &piv;
            inv[c][k] = &inv[c][k] * &piv;
        }
        for r in 0..n {
            if r == c || m[r][c].coeffs().iter().all(|&v| v == 0.0) {
                continue;
            }
            let f = m[r][c].clone();
            for k in 0..n {
                let dm = &f * &m[c][k];
                m[r][k] = &m[r][k] - &dm;
                let di = &f * &inv[c][k];
                inv[r][k] = &inv[r][k] - &di;
            }
        }
    }
    Ok(inv.into_iter().flatten().collect())
}

/// Metric jets at one point together with the derived connection.
pub(crate) struct Geometry {
    pub n: usize,
    pub point: Vec<f64>,
    pub det: f64,
    /// Metric at the full order `K`.
    pub g: Vec<Jet>,
    /// Inverse metric at order `K`.
    pub g_inv: Vec<Jet>,
    /// `Γ^i_jk` at order `K − 1`.
    pub gamma: Vec<Jet>,
}

impl Geometry {
    pub fn from_jets(g: Vec<Jet>, n: usize, point: &[f64]) -> Result<Geometry> {
        let values: Vec<f64> = g.iter().map(Jet::value).collect();
        let det = check_nonsingular(&values, n, point)?;
        let g_inv = invert_jets(&g, n)?;
        let gamma = christoffel(&g, &g_inv, n);
        Ok(Geometry {
            n,
            point: point.to_vec(),
            det,
            g,
            g_inv,
            gamma,
        })
    }

    pub fn new(m: &MetricSpec, point: &[f64], order: usize) -> Result<Geometry> {
        let g = m.component_jets(point, order)?;
        Geometry::from_jets(g, m.dim(), point)
    }
}

/// `Γ^i_jk` one order below the metric jets.
pub(crate) fn christoffel(g: &[Jet], g_inv: &[Jet], n: usize) -> Vec<Jet> {
    let out_order = g[0].order() - 1;
    // dg[(d*n + a)*n + b] = ∂_d g_ab
    let mut dg = Vec::with_capacity(n * n * n);
    for d in 0..n {
        for ab in 0..n * n {
            dg.push(g[ab].derivative(d));
        }
    }
    let at = |d: usize, a: usize, b: usize| &dg[(d * n + a) * n + b];
    let zero = Jet::constant(0.0, g[0].nvars(), out_order);
    let mut lower = vec![zero.clone(); n * n * n];
    for m in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut s = at(j, m, k) + at(k, m, j);
                s.add_scaled(at(m, j, k), -1.0);
                let s = s.scale(0.5);
                lower[(m * n + j) * n + k] = s.clone();
                lower[(m * n + k) * n + j] = s;
            }
        }
    }
    let inv: Vec<Jet> = g_inv.iter().map(|j| j.truncate(out_order)).collect();
    let mut gamma = vec![zero.clone(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = zero.clone();
                for m in 0..n {
                    acc = acc + &inv[i * n + m] * &lower[(m * n + j) * n + k];
                }
                gamma[(i * n + k) * n + j] = acc.clone();
                gamma[(i * n + j) * n + k] = acc;
            }
        }
    }
    gamma
}

/// Extra connection terms with a weight on their mutual products.
pub(crate) struct Deformation<'a> {
    pub extra: &'a [Jet],
    pub sigma: f64,
}

/// `R^i_jkl` at one order below the connection jets, at `[((i*n + j)*n + k)*n + l]`.
///
/// With a deformation `E`, the connection is `Γ + E` and every product of two
/// `E` components is weighted by `sigma`.
pub(crate) fn riemann_up(gamma: &[Jet], n: usize, deformation: Option<&Deformation>) -> Vec<Jet> {
    let out_order = gamma[0].order() - 1;
    let full: Vec<Jet> = match deformation {
        Some(d) => gamma.iter().zip(d.extra).map(|(a, b)| a + b).collect(),
        None => gamma.to_vec(),
    };
    let g3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    // dgam[d][g3] = ∂_d Γ
    let dgam: Vec<Vec<Jet>> = (0..n)
        .map(|d| full.iter().map(|j| j.derivative(d)).collect())
        .collect();
    let prod = |a: usize, b: usize| -> Jet {
        let mut p = full[a].mul_truncated(&full[b], out_order);
        if let Some(d) = deformation {
            if d.sigma != 1.0 {
                let ee = d.extra[a].mul_truncated(&d.extra[b], out_order);
                p.add_scaled(&ee, d.sigma - 1.0);
            }
        }
        p
    };
    let zero = Jet::constant(0.0, gamma[0].nvars(), out_order);
    let mut r = vec![zero.clone(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in k + 1..n {
                    let mut acc = &dgam[k][g3(i, j, l)] - &dgam[l][g3(i, j, k)];
                    for m in 0..n {
                        acc = acc + prod(g3(i, k, m), g3(m, j, l));
                        acc = acc - prod(g3(i, l, m), g3(m, j, k));
                    }
                    r[((i * n + j) * n + l) * n + k] = -&acc;
                    r[((i * n + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    r
}

/// `R_ijkl = g_im R^m_jkl`.
pub(crate) fn lower_riemann(g: &[Jet], r_up: &[Jet], n: usize) -> Vec<Jet> {
    let order = r_up[0].order();
    let gt: Vec<Jet> = g.iter().map(|j| j.truncate(order)).collect();
    let zero = Jet::constant(0.0, g[0].nvars(), order);
    let mut out = vec![zero; n * n * n * n];
    let n3 = n * n * n;
    for i in 0..n {
        for jkl in 0..n3 {
            let mut acc = out[i * n3 + jkl].clone();
            for m in 0..n {
                if gt[i * n + m].coeffs().iter().all(|&v| v == 0.0) {
                    continue;
                }
                acc = acc + &gt[i * n + m] * &r_up[m * n3 + jkl];
            }
            out[i * n3 + jkl] = acc;
        }
    }
    out
}

fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

/// Levi-Civita symbol in three indices.
pub fn epsilon3(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `ε^ijk (Γ^p_iq ∂_j Γ^q_kp + ⅔ Γ^p_iq Γ^q_jr Γ^r_kp)` from connection jets of order ≥ 1.
pub(crate) fn cs_from_connection(gamma: &[Jet]) -> f64 {
    let n = 3;
    let g3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let v = |i, j, k| gamma[g3(i, j, k)].value();
    let d = |dir: usize, i, j, k| gamma[g3(i, j, k)].coeff(&unit(dir)).unwrap();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let e = epsilon3(i, j, k);
                if e == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        s += v(p, i, q) * d(j, q, k, p);
                        for r in 0..n {
                            s += 2.0 / 3.0 * v(p, i, q) * v(q, j, r) * v(r, k, p);
                        }
                    }
                }
                total += e * s;
            }
        }
    }
    total
}

fn unit(dir: usize) -> Vec<u8> {
    let mut a = vec![0u8; dir + 1];
    a[dir] = 1;
    a
}

/// Connection, curvature and optionally `∇R` and the Chern–Simons density at `point`.
pub fn bundle_at(m: &MetricSpec, point: &[f64], want: Want) -> Result<CurvatureBundle> {
    if want.cs && m.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: m.dim(),
        });
    }
    let order = if want.nabla_r { 3 } else { 2 };
    let geo = Geometry::new(m, point, order)?;
    Ok(bundle_from_geometry(&geo, want))
}

pub(crate) fn bundle_from_geometry(geo: &Geometry, want: Want) -> CurvatureBundle {
    let n = geo.n;
    let r_up = riemann_up(&geo.gamma, n, None);
    let r_low = lower_riemann(&geo.g, &r_up, n);

    let mut ricci = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            ricci[a * n + b] = (0..n)
                .map(|m| r_up[((m * n + a) * n + m) * n + b].value())
                .sum();
        }
    }
    let g_inv = values(&geo.g_inv);
    let scalar = (0..n * n).map(|ab| g_inv[ab] * ricci[ab]).sum();
    let gamma = values(&geo.gamma);
    let riemann_low = values(&r_low);

    let nabla_riemann = want.nabla_r.then(|| {
        let n4 = n * n * n * n;
        let ri = |i: usize, j: usize, k: usize, l: usize| riemann_low[((i * n + j) * n + k) * n + l];
        let ga = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
        let mut out = vec![0.0; n * n4];
        for mm in 0..n {
            let du = unit(mm);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let idx = ((i * n + j) * n + k) * n + l;
                            let mut s = r_low[idx].coeff(&du).unwrap();
                            for p in 0..n {
                                s -= ga(p, mm, i) * ri(p, j, k, l)
                                    + ga(p, mm, j) * ri(i, p, k, l)
                                    + ga(p, mm, k) * ri(i, j, p, l)
                                    + ga(p, mm, l) * ri(i, j, k, p);
                            }
                            out[mm * n4 + idx] = s;
                        }
                    }
                }
            }
        }
        out
    });

    let cs = (want.cs && n == 3).then(|| cs_from_connection(&geo.gamma));

    CurvatureBundle {
        dim: n,
        point: geo.point.clone(),
        g: values(&geo.g),
        g_inv,
        det: geo.det,
        gamma,
        riemann_low,
        ricci,
        scalar,
        nabla_riemann,
        cs,
    }
}

/// Chern–Simons density of a three-dimensional metric; `normalized` divides by `√|det g|`.
pub fn cs_density_at(m: &MetricSpec, point: &[f64], normalized: bool) -> Result<f64> {
    if m.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: m.dim(),
        });
    }
    let geo = Geometry::new(m, point, 2)?;
    let cs = cs_from_connection(&geo.gamma);
    Ok(if normalized {
        cs / geo.det.abs().sqrt()
    } else {
        cs
    })
}

/// `g^ij ∇_i ∇_j A_k − R^l_k A_l + λ A_k` for the one-form `A` with components `w`.
pub fn laplace_one_form_at(m: &MetricSpec, w: &[Expr], point: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = m.dim();
    if w.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: w.len(),
        });
    }
    let geo = Geometry::new(m, point, 2)?;
    let bundle = bundle_from_geometry(&geo, Want::default());
    let coord_jets = m.coordinate_jets(point, 2)?;
    let env = Env::new(m.coords(), &coord_jets, m.params());
    let a: Vec<Jet> = w.iter().map(|e| e.eval(&env)).collect::<Result<_>>()?;

    // T_jk = ∂_j A_k − Γ^m_jk A_m, order 1
    let a1: Vec<Jet> = a.iter().map(|j| j.truncate(1)).collect();
    let mut t = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut s = a[k].derivative(j);
            for mm in 0..n {
                let prod = &geo.gamma[(mm * n + j) * n + k] * &a1[mm];
                s = s - prod;
            }
            t.push(s);
        }
    }
    let ga = |i: usize, j: usize, k: usize| bundle.gamma(i, j, k);
    let tv = |j: usize, k: usize| t[j * n + k].value();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut lap = 0.0;
        for i in 0..n {
            let du = unit(i);
            for j in 0..n {
                // ∇_i T_jk
                let mut d = t[j * n + k].coeff(&du)?;
                for mm in 0..n {
                    d -= ga(mm, i, j) * tv(mm, k) + ga(mm, i, k) * tv(j, mm);
                }
                lap += bundle.g_inv(i, j) * d;
            }
        }
        let mut ric = 0.0;
        for l in 0..n {
            let r_lk: f64 = (0..n).map(|b| bundle.g_inv(l, b) * bundle.ricci(b, k)).sum();
            ric += r_lk * a[l].value();
        }
        out[k] = lap - ric + lambda * a[k].value();
    }
    Ok(out)
}
