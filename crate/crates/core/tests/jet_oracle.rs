//! Jet derivatives against a Richardson-extrapolated finite-difference oracle,
//! plus algebraic identities of truncated products.

use curvlab::jet::{Elementary, Jet};
use proptest::prelude::*;

/// Central difference of order `k` (≤ 3) along one axis with step `h`.
fn central(f: &dyn Fn(f64) -> f64, x: f64, k: u8, h: f64) -> f64 {
    match k {
        0 => f(x),
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        _ => unreachable!(),
    }
}

/// Mixed partial `∂^a_x ∂^b_y f` by nested central differences with a common step.
fn stencil(f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, a: u8, b: u8, h: f64) -> f64 {
    let along_y = |xx: f64| central(&|yy| f(xx, yy), y, b, h);
    central(&along_y, x, a, h)
}

/// Fully extrapolated Richardson estimate from `levels` halvings of `h0`.
fn richardson(d: impl Fn(f64) -> f64, h0: f64, levels: usize) -> f64 {
    let mut prev: Vec<f64> = Vec::new();
    for k in 0..levels {
        let mut row = vec![d(h0 / 2f64.powi(k as i32))];
        for j in 1..=k {
            let p = 4f64.powi(j as i32);
            row.push((p * row[j - 1] - prev[j - 1]) / (p - 1.0));
        }
        prev = row;
    }
    prev[levels - 1]
}

/// Sweeps the starting step from 1e-1 to 1e-3 and keeps the estimate that
/// agrees best with its neighbour in the sweep.
fn fd_partial(f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, a: u8, b: u8) -> f64 {
    let est: Vec<f64> = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3]
        .iter()
        .map(|&h0| richardson(|h| stencil(f, x, y, a, b, h), h0, 4))
        .collect();
    (0..est.len() - 1)
        .min_by(|&i, &k| (est[i] - est[i + 1]).abs().total_cmp(&(est[k] - est[k + 1]).abs()))
        .map(|i| est[i])
        .unwrap()
}

/// Inner argument `u(x, y) = c + 0.5 x + 0.3 y + 0.2 x y`.
fn inner(c: f64, x: f64, y: f64) -> f64 {
    c + 0.5 * x + 0.3 * y + 0.2 * x * y
}

fn inner_jet(c: f64, x: f64, y: f64, order: usize) -> Jet {
    let jx = Jet::variable(x, 0, 2, order).unwrap();
    let jy = Jet::variable(y, 1, 2, order).unwrap();
    (&jx * &jy).scale(0.2) + jx.scale(0.5) + jy.scale(0.3).add_scalar(c)
}

/// Offset keeping the inner argument inside the function's domain for |x|, |y| ≤ 1.
fn offset(f: Elementary) -> f64 {
    match f {
        Elementary::Ln | Elementary::Sqrt | Elementary::Sign => 1.5,
        Elementary::Tan => 0.1,
        _ => 0.2,
    }
}

const ORDER3: [(u8, u8); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

fn close(jet: f64, fd: f64) -> bool {
    (jet - fd).abs() <= 1e-6 * fd.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn elementary_partials_match_finite_differences(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        for f in Elementary::ALL {
            let c = offset(f);
            let jet = inner_jet(c, x, y, 3).apply(f).unwrap();
            let plain = |a: f64, b: f64| f.apply_f64(inner(c, a, b)).unwrap();
            for (a, b) in ORDER3 {
                let fd = fd_partial(&plain, x, y, a, b);
                let j = jet.extract(&[a, b]).unwrap();
                prop_assert!(close(j, fd), "{} ∂({a},{b}) at ({x},{y}): jet {j} fd {fd}", f.name());
            }
        }
    }

    #[test]
    fn powers_match_finite_differences(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let base = inner_jet(1.5, x, y, 3);
        let exponent = Jet::constant(1.7, 2, 3);
        let real = base.pow(&exponent).unwrap();
        let varying = base.pow(&inner_jet(0.2, x, y, 3)).unwrap();
        let inverse_cube = base.powi(-3).unwrap();
        for (a, b) in ORDER3 {
            let fd = fd_partial(&|p, q| inner(1.5, p, q).powf(1.7), x, y, a, b);
            prop_assert!(close(real.extract(&[a, b]).unwrap(), fd));
            let fd = fd_partial(&|p, q| inner(1.5, p, q).powf(inner(0.2, p, q)), x, y, a, b);
            prop_assert!(close(varying.extract(&[a, b]).unwrap(), fd));
            let fd = fd_partial(&|p, q| inner(1.5, p, q).powi(-3), x, y, a, b);
            prop_assert!(close(inverse_cube.extract(&[a, b]).unwrap(), fd));
        }
    }

    #[test]
    fn product_rule_holds_coefficientwise(
        a in prop::collection::vec(-2.0f64..2.0, 35),
        b in prop::collection::vec(-2.0f64..2.0, 35),
    ) {
        // three variables, order 4: 35 coefficients
        let ja = Jet::from_coeffs(3, 4, a);
        let jb = Jet::from_coeffs(3, 4, b);
        let prod = &ja * &jb;
        for alpha in prod.multi_indices() {
            let alpha = &alpha[..3];
            let mut expected = 0.0;
            let mut scale = 0.0f64;
            for beta in ja.multi_indices() {
                let beta = &beta[..3];
                if beta.iter().zip(alpha).all(|(b, a)| b <= a) {
                    let rest: Vec<u8> = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
                    let binom: f64 = alpha
                        .iter()
                        .zip(beta)
                        .map(|(&a, &b)| binomial(a, b))
                        .product();
                    let term = binom * ja.extract(beta).unwrap() * jb.extract(&rest).unwrap();
                    expected += term;
                    scale = scale.max(term.abs());
                }
            }
            let got = prod.extract(alpha).unwrap();
            prop_assert!((got - expected).abs() <= 1e-13 * scale.max(1.0), "{alpha:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn reciprocal_times_self_is_one(
        c0 in prop_oneof![0.5f64..3.0, -3.0f64..-0.5],
        rest in prop::collection::vec(-1.0f64..1.0, 27),
    ) {
        // six variables at order 2: 28 coefficients
        let mut coeffs = vec![c0];
        coeffs.extend(rest);
        let a = Jet::from_coeffs(6, 2, coeffs);
        let one = &a * &a.recip().unwrap();
        prop_assert!((one.value() - 1.0).abs() <= 1e-13);
        for c in &one.coeffs()[1..] {
            prop_assert!(c.abs() <= 1e-13, "{c}");
        }
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

#[test]
fn tanh_third_derivative_at_point_three() {
    let x = Jet::variable(0.3, 0, 1, 3).unwrap();
    let jet = x.apply(Elementary::Tanh).unwrap().extract(&[3]).unwrap();
    let fd = fd_partial(&|p, _| p.tanh(), 0.3, 0.0, 3, 0);
    assert!((jet - fd).abs() <= 1e-6 * fd.abs(), "{jet} vs {fd}");
    // tanh''' = −2 (1 − t²)(1 − 3t²) with t = tanh
    let t = 0.3f64.tanh();
    let exact = -2.0 * (1.0 - t * t) * (1.0 - 3.0 * t * t);
    assert!((jet - exact).abs() < 1e-13);
}
