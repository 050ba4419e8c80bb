use super::*;
use crate::dsl::parse_expr;

// Reference values below come from an independent CAS transcription of each
// system, evaluated exactly on these polynomial fields at (1/2, 1/4, 3/4)
// with lambda = 3/10.
const POINT: [f64; 3] = [0.5, 0.25, 0.75];

fn poly_fields() -> BTreeMap<String, Expr> {
    [
        ("A", "2 + x*y + y*z^2 + x^2*z"),
        ("B", "1 + x^2*y + z + x*y*z"),
        ("C", "3 + x*z + y^2 + x*y^2*z"),
        ("l", "x^3*z + 2*x*z^2 + x^2"),
        ("m", "x^2*z + z^3 - x"),
        ("U", "x*y + x^2 - y^3"),
        ("F", "1 + x*y + x^2*y"),
        ("u", "x + 2*y + x*y"),
        ("K1", "x*y + z^2 + x*y*z"),
        ("K2", "x + y^2*z + x*z"),
        ("K3", "y*z + x^2 + x*y*z"),
        ("phi1", "x^2"),
        ("phi2", "y^3 + y"),
        ("phi3", "2*z"),
        ("a", "x^2 + 1"),
        ("b", "y^3"),
        ("c", "z^2 - 2"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), parse_expr(v).unwrap()))
    .collect()
}

fn params(extra: &[(&str, f64)]) -> BTreeMap<String, f64> {
    let mut p: BTreeMap<String, f64> = [("lambda".to_string(), 0.3)].into_iter().collect();
    for (k, v) in extra {
        p.insert(k.to_string(), *v);
    }
    p
}

fn xyz() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

fn check(sys: SystemId, fields: &BTreeMap<String, Expr>, extra: &[(&str, f64)], expected: &[f64]) {
    let r = residual_at(sys, fields, &params(extra), &xyz(), &POINT).unwrap();
    assert_eq!(r.len(), expected.len(), "{sys}");
    assert_eq!(r.len(), sys.len(), "{sys}");
    for (k, (got, want)) in r.iter().zip(expected).enumerate() {
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{sys}[{k}]: {got} vs {want}");
    }
}

#[test]
fn darboux() {
    check(SystemId::Darboux, &poly_fields(), &[], &[7.48797320800799304e-01, -1.20494313525326732e-01, -1.27930197347812469e-01]);
}

#[test]
fn lame_full() {
    check(
        SystemId::LameFull,
        &poly_fields(),
        &[],
        &[
            7.48797320800799304e-01,
            -1.20494313525326732e-01,
            -1.27930197347812469e-01,
            3.31163638985222386e+00,
            2.73238539666908942e+00,
            1.40995615989806433e+00,
        ],
    );
}

#[test]
fn kdv() {
    check(SystemId::Kdv, &poly_fields(), &[], &[-1.181640625]);
}

#[test]
fn kdv_pair() {
    check(SystemId::KdvPair, &poly_fields(), &[], &[-1.181640625, 1.111328125]);
}

#[test]
fn liouville() {
    check(SystemId::Liouville, &poly_fields(), &[], &[6.05186677348797719e+00]);
}

#[test]
fn f_equation() {
    check(SystemId::FEquation, &poly_fields(), &[], &[9.98854064941406250e+00]);
}

#[test]
fn sine_gordon() {
    check(SystemId::SineGordon, &poly_fields(), &[], &[1.27068027822972862e+00]);
}

#[test]
fn sg_linear() {
    check(SystemId::SgLinear, &poly_fields(), &[], &[1.31731896783151847e+00, 3.11057198666759405e+00, 2.23736278238109243e+00]);
}

#[test]
fn b_system() {
    let mut f = poly_fields();
    f.insert("B".into(), parse_expr("1 + x*y*z + x^2*z^2 + y^2*z").unwrap());
    check(SystemId::BSystem, &f, &[], &[7.97918675287906942e-01, 3.17419372352909512e+00, 3.41968249137465063e+00]);
    check(
        SystemId::BSystem,
        &f,
        &[("hyperbolic", 1.0)],
        &[8.33086209132959610e-01, 1.94263511142992273e+00, 1.94763216288920993e+00],
    );
}

#[test]
fn gen_darboux() {
    check(SystemId::GenDarboux, &poly_fields(), &[], &[-5.31760892919920103e+00, -1.08480333760253274e+01, -8.03027394734781197e+00]);
}

#[test]
fn normal_k_variants() {
    let f = poly_fields();
    check(SystemId::NormalK, &f, &[], &[-1.642578125, 0.45703125, 1.32421875]);
    check(SystemId::NormalK, &f, &[("variant", 1.0)], &[-1.30078125, 0.26953125, 1.32421875]);
    check(SystemId::NormalK, &f, &[("variant", 2.0)], &[-1.642578125, 0.45703125, 1.4296875]);
}

#[test]
fn k1_linear() {
    check(SystemId::K1Linear, &poly_fields(), &[], &[1.67346860431548627e+00, -1.20196115081019683e+00, -9.22476951519879074e-01]);
}

#[test]
fn k2_linear() {
    check(SystemId::K2Linear, &poly_fields(), &[], &[-3.48220215098673913e+00, 1.13028253709802762e+00, 8.78131591607149486e-01]);
    check(
        SystemId::K2Linear,
        &poly_fields(),
        &[("variant", 1.0)],
        &[-5.58220215098673922e+00, 1.13028253709802762e+00, 7.67475853902231386e-01],
    );
}

#[test]
fn theorem3_relations() {
    check(
        SystemId::Theorem3Relations,
        &poly_fields(),
        &[],
        &[
            8.14092356687898144e-01,
            1.68869426751592355e+00,
            1.78227459016393452e+00,
            7.93032786885245922e-01,
            1.12993792325056441e+00,
            1.04740406320541757e+00,
        ],
    );
}

#[test]
fn phi_relation() {
    check(SystemId::PhiRelation, &poly_fields(), &[], &[0.1796875]);
    let mut f = poly_fields();
    for k in ["K2", "K3"] {
        f.insert(k.into(), f["K1"].clone());
    }
    check(SystemId::PhiRelation, &f, &[], &[0.0]);
}

#[test]
fn k1_abc_system() {
    check(SystemId::K1AbcSystem, &poly_fields(), &[], &[7.19936708860759444e-01, -5.34883720930232509e-01, 8.46774193548387122e-01]);
}

#[test]
fn two_coordinate_systems_accept_planar_files() {
    let coords = vec!["x".to_string(), "y".to_string()];
    let r = residual_at(SystemId::Liouville, &poly_fields(), &params(&[]), &coords, &POINT[..2]).unwrap();
    assert!((r[0] - 6.05186677348797719).abs() < 1e-12);
    assert!(matches!(
        residual_at(SystemId::Kdv, &poly_fields(), &params(&[]), &coords, &POINT[..2]),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn names_round_trip_and_unknown_rejected() {
    for s in SystemId::ALL {
        assert_eq!(SystemId::from_name(s.name()).unwrap(), s);
    }
    assert!(matches!(SystemId::from_name("lame"), Err(Error::UnknownSystem(_))));
}

#[test]
fn missing_field_and_param() {
    let f: BTreeMap<String, Expr> = BTreeMap::new();
    assert_eq!(
        residual_at(SystemId::Kdv, &f, &params(&[]), &xyz(), &POINT),
        Err(Error::MissingField("l".into()))
    );
    assert_eq!(
        residual_at(SystemId::SineGordon, &poly_fields(), &BTreeMap::new(), &xyz(), &POINT),
        Err(Error::MissingParam("lambda".into()))
    );
}

#[test]
fn zero_denominator_is_a_singular_point() {
    let mut f = poly_fields();
    f.insert("u".into(), parse_expr("x + y").unwrap());
    let r = residual_at(SystemId::SgLinear, &f, &params(&[]), &xyz(), &[0.5, -0.5, 0.0]);
    assert!(matches!(r, Err(Error::SingularPoint { .. })), "{r:?}");
}

#[test]
fn one_soliton_solves_kdv() {
    let mut f = BTreeMap::new();
    f.insert("l".to_string(), parse_expr("-4*cosh(x-4*z)^(-2)").unwrap());
    let r = residual_at(SystemId::Kdv, &f, &params(&[]), &xyz(), &[0.7, 1.0, 0.1]).unwrap();
    assert!(r[0].abs() < 1e-10, "{r:?}");
}

#[test]
fn highest_derivatives_enter_linearly() {
    // adding eps*x^3 to l shifts l_xxx by 6 eps; the change in the KdV residual
    // is 6 eps - 3 (l + eps x^3)(l_x + 3 eps x^2) + 3 l l_x, whose eps-linear part doubles with eps
    let base = poly_fields();
    let at = |eps: f64| {
        let mut f = base.clone();
        let text = format!("x^3*z + 2*x*z^2 + x^2 + {eps:?}*x^3");
        f.insert("l".into(), parse_expr(&text).unwrap());
        residual_at(SystemId::Kdv, &f, &params(&[]), &xyz(), &POINT).unwrap()[0]
    };
    let r0 = at(0.0);
    let d1 = at(1e-6) - r0;
    let d2 = at(2e-6) - r0;
    assert!((d2 - 2.0 * d1).abs() < 1e-4 * d1.abs());
}

#[test]
fn scan_counts_singular_points() {
    let mut f = BTreeMap::new();
    f.insert("u".to_string(), parse_expr("4*atan(exp(x+y))").unwrap());
    f.insert("A".to_string(), parse_expr("exp(x+y)/(1+exp(2*x+2*y))").unwrap());
    let mut p = BTreeMap::new();
    p.insert("lambda".to_string(), -1.0);
    let coords = vec!["x".to_string(), "y".to_string()];
    let plan = SamplePlan::new(vec![(-1.0, 1.0), (-1.0, 1.0)], 32, 42);
    let r = residual_scan("sg", SystemId::SgLinear, &f, &p, &coords, &plan, 1e-8).unwrap();
    assert!(r.verdict.passed(), "{}", r.summary());
}
