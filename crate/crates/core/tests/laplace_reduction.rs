//! The one-form operator on the flat metric with l = 0, m = −1/2 against its
//! closed-form reduction for A = (h(y), q(y), f(y)).

use curvlab::dsl::parse_metric_file;
use curvlab::tensor::laplace_one_form_at;

const FILE: &str = "\
[space]
coords = x y z
[metric]
g 1 1 = y^2
g 1 3 = -1/2
g 2 3 = 1
[fields]
w 1 = y^2 + sin(y)
w 2 = cos(2*y)
w 3 = y^3 - y
";

/// Reduced expressions with eigenvalue `mu`; the operator with `+λ A`
/// corresponds to `mu = −λ`.
fn reduced(y: f64, mu: f64) -> [f64; 3] {
    let (h, dh, ddh) = (y * y + y.sin(), 2.0 * y + y.cos(), 2.0 - y.sin());
    let (q, dq, ddq) = ((2.0 * y).cos(), -2.0 * (2.0 * y).sin(), -4.0 * (2.0 * y).cos());
    let (f, df, ddf) = (y.powi(3) - y, 3.0 * y * y - 1.0, 6.0 * y);
    [
        -0.25 * (dh - 4.0 * df * y * y - ddh * y + 4.0 * mu * h * y.powi(3)) / y.powi(3),
        -0.25 * (-6.0 * h - 3.0 * q + 3.0 * dq * y + 4.0 * dh * y - ddq * y * y + 4.0 * f * y * y + 4.0 * mu * q * y.powi(4))
            / y.powi(4),
        -0.25 * (df - ddf * y + 4.0 * mu * f * y.powi(3)) / y.powi(3),
    ]
}

#[test]
fn operator_matches_reduced_system() {
    let file = parse_metric_file(FILE).unwrap();
    let m = file.metric.as_ref().unwrap();
    let w = &file.forms["w"];
    for &lambda in &[0.0, 0.7, -1.3] {
        for &(x, y, z) in &[(0.1, 0.6, 0.2), (-0.4, 1.3, 0.9), (1.0, 2.1, -0.5)] {
            let got = laplace_one_form_at(m, w, &[x, y, z], lambda).unwrap();
            let want = reduced(y, -lambda);
            for k in 0..3 {
                assert!(
                    (got[k] - want[k]).abs() < 1e-12 * want[k].abs().max(1.0),
                    "lambda {lambda} y {y} k {k}: {} vs {}",
                    got[k],
                    want[k]
                );
            }
        }
    }
}
