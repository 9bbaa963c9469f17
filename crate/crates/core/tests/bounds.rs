use std::collections::BTreeMap;

use asymbound::classic::{tvz_bound, IharaProfile};
use asymbound::numerics::{entropy_q, Real};
use asymbound::psi::{class_number_target, i_value, psi_value, Method, PsiProblem};
use asymbound::rate::{compare_table, optimize_x, r_general, r_lin, BoundProblem, XChoice};
use asymbound::reference::CASES;
use asymbound::surface::{check_conditions, SurfaceParams};
use asymbound::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

const P: u32 = 256;

fn r(s: &str) -> Real {
    Real::parse(s, P).unwrap()
}

fn r_at(s: &str, p: u32) -> Real {
    Real::parse(s, p).unwrap()
}

fn lin_problem(q: u64, gamma: &str, delta: &Real, p: u32) -> PsiProblem {
    let prof = IharaProfile::new(q, r_at(gamma, p)).unwrap();
    PsiProblem::new(&prof, &(Real::one(p) - delta), &[Real::zero(p)], p).unwrap()
}

#[test]
fn class_number_target_values() {
    let p = 768;
    let prof = IharaProfile::new(64, r_at("7", p)).unwrap();
    let t = class_number_target(&prof);
    // 1/7 + log_64(64/63), mpmath at 800 bits.
    let want = r_at("0.1466438222738234454179492753358988861161", p);
    assert!((&t - &want).abs() < r_at("1e-39", p));

    let mut gl = BTreeMap::new();
    gl.insert(1, Real::zero(p));
    let empty = IharaProfile::with_gamma_l(64, r_at("7", p), gl).unwrap();
    assert!(class_number_target(&empty).approx_eq_ulps(&(Real::one(p) / 7), 4));

    let prof = IharaProfile::new(5, r_at("3/2", p)).unwrap();
    let ln = |x: f64| x.ln();
    let want = 1.0 / 1.5 + ln(5.0 / 4.0) / ln(5.0);
    assert!((class_number_target(&prof).to_f64() - want).abs() < 1e-15);
}

#[test]
fn larger_gamma_l_raises_target_and_psi() {
    let delta = CASES[0].delta(P);
    let y = Real::one(P) - &delta;
    let mut gl = BTreeMap::new();
    gl.insert(2, r("0.1"));
    let base = IharaProfile::new(64, r("7")).unwrap();
    let more = IharaProfile::with_gamma_l(64, r("7"), gl).unwrap();
    assert!(class_number_target(&more) > class_number_target(&base));
    let zero = [Real::zero(P)];
    let a = psi_value(&PsiProblem::new(&base, &y, &zero, P).unwrap()).unwrap();
    let b = psi_value(&PsiProblem::new(&more, &y, &zero, P).unwrap()).unwrap();
    assert!(a.psi.is_positive());
    assert!(b.psi > a.psi);
}

#[test]
fn i_at_sigma_zero_is_entropy_of_y() {
    for (q, y) in [(2u64, "0.3"), (64, "0.7"), (49, "0.01")] {
        let prof = IharaProfile::new(q, r("3")).unwrap();
        let pr = PsiProblem::new(&prof, &r(y), &[Real::zero(P)], P).unwrap();
        let v = i_value(&pr, &Real::zero(P)).unwrap();
        let e = entropy_q(&r(y), q).unwrap();
        assert!(v.value.approx_eq_ulps(&e, 4), "q={q} y={y}");
    }
}

#[test]
fn i_brackets_target_near_psi() {
    let pr = lin_problem(64, "7", &CASES[0].delta(P), P);
    let t = class_number_target(pr.profile());
    let v = i_value(&pr, &r("1.95e-5")).unwrap();
    assert!((&v.value - &t).abs() <= r("1e-6"));
}

#[test]
fn psi_zero_branch_for_tiny_gamma() {
    let prof = IharaProfile::new(64, r("1e-6")).unwrap();
    let pr = PsiProblem::new(&prof, &r("0.5"), &[Real::zero(P)], P).unwrap();
    let v = psi_value(&pr).unwrap();
    assert!(v.psi.is_zero());
    assert!(v.diagnostics.zero_branch);
    assert!(v.diagnostics.limit_proxy <= v.diagnostics.target);
}

#[test]
fn psi_clamps_when_i_at_zero_exceeds_target() {
    let pr = lin_problem(64, "7", &r("0.5"), P);
    let v = psi_value(&pr).unwrap();
    assert!(v.psi.is_zero());
    assert!(v.diagnostics.clamped);
    assert!(v.diagnostics.i_at_zero >= v.diagnostics.target);
}

#[test]
fn psi_agrees_with_printed_linear_bound() {
    let p = 768;
    let case = &CASES[0];
    let delta = case.delta(p);
    let pr = lin_problem(64, "7", &delta, p);
    let psi = psi_value(&pr).unwrap().psi;
    let tvz = tvz_bound(&delta, &r_at("7", p)).unwrap();
    let printed = r_at(case.r_lin, p);
    // The printed value is truncated after 20 decimals.
    let lo = (&printed - &tvz) * 7;
    let hi = (&(&printed + &r_at("1e-20", p)) - &tvz) * 7;
    assert!(psi >= lo && psi <= hi, "psi = {}", psi.to_sci(25));
    assert!((psi.to_f64() - 1.95e-5).abs() < 1e-7);
}

#[test]
fn psi_is_stable_under_precision_doubling() {
    let case = &CASES[0];
    let a = psi_value(&lin_problem(64, "7", &case.delta(512), 512))
        .unwrap()
        .psi;
    let b = psi_value(&lin_problem(64, "7", &case.delta(1024), 1024))
        .unwrap()
        .psi;
    let rel = (&a.at_prec(1024) - &b).abs() / &b;
    assert!(rel < Real::pow2(-400, 1024));
}

#[test]
fn psi_bisection_certificate_and_method_honesty() {
    for case in &CASES[..4] {
        let prof = case.profile(P).unwrap();
        let bp = BoundProblem::new(&prof, &case.delta(P), &case.xs(P), P).unwrap();
        let pr = PsiProblem::new(&prof, &bp.y(), bp.xs(), P).unwrap();
        let res = psi_value(&pr).unwrap();
        let d = &res.diagnostics;
        assert!(res.psi.is_positive(), "{}", case.id);
        let w = &d.width * 2;
        let below = i_value(&pr, &(&res.psi - &w)).unwrap();
        let above = i_value(&pr, &(&res.psi + &w)).unwrap();
        assert!(
            below.value < d.target && d.target < above.value,
            "{}",
            case.id
        );
        if d.closed_form_throughout {
            assert_eq!(d.method, Method::ClosedForm);
            assert!(d.conditions_hold_at_bracket);
            let sp = SurfaceParams::new(
                prof.q(),
                prof.gamma().clone(),
                bp.y(),
                bp.xs().to_vec(),
                res.psi.clone(),
            )
            .unwrap();
            assert!(check_conditions(&sp).all_hold(), "{}", case.id);
        }
    }
}

// R^lin jumps up where the limit of I first exceeds T (Psi leaves the zero
// branch close to theta); elsewhere on the grid it is strictly decreasing.
#[test]
fn r_lin_dominates_tvz_and_decreases_between_branch_switches() {
    let prof = IharaProfile::new(64, r("7")).unwrap();
    let mut prev: Option<(Real, bool)> = None;
    let mut jumps = Vec::new();
    for k in 1..=100 {
        let delta = Real::from_rational(&Rational::from((k, 101)), P);
        let res = r_lin(&prof, &delta, P).unwrap();
        let tvz = tvz_bound(&delta, prof.gamma()).unwrap();
        if res.psi.is_positive() {
            assert!(res.value > tvz, "k={k}");
        } else {
            assert!(res.value.approx_eq_ulps(&tvz, 4), "k={k}");
        }
        assert!(res.value.approx_eq_ulps(&res.components.total(), 4));
        let zb = res.psi_diagnostics.zero_branch;
        if let Some((p, pzb)) = &prev {
            if *pzb && !zb {
                assert!(res.value > *p, "k={k}");
                jumps.push(k);
            } else {
                assert!(res.value < *p, "k={k}");
            }
        }
        prev = Some((res.value, zb));
    }
    assert_eq!(jumps, vec![8]);
}

#[test]
fn r_general_with_zero_xs_is_r_lin() {
    let p = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let qs = [2u64, 3, 4, 5, 7, 8, 9, 16, 49, 64];
    for _ in 0..50 {
        let q = qs[rng.gen_range(0..qs.len())];
        let gamma = Real::with_val(p, rng.gen_range(0.2..10.0));
        let delta = Real::with_val(p, rng.gen_range(0.01..0.99));
        let prof = IharaProfile::new(q, gamma).unwrap();
        let lin = r_lin(&prof, &delta, p).unwrap();
        let bp = BoundProblem::new(&prof, &delta, &[Real::zero(p)], p).unwrap();
        let gen = r_general(&bp).unwrap();
        assert!(gen.value.approx_eq_ulps(&lin.value, 4), "q={q}");
    }
}

#[test]
fn r_general_components_sum_to_total() {
    let case = &CASES[2];
    let prof = case.profile(P).unwrap();
    let bp = BoundProblem::new(&prof, &case.delta(P), &case.xs(P), P).unwrap();
    let res = r_general(&bp).unwrap();
    assert!(res.value.approx_eq_ulps(&res.components.total(), 4));
}

#[test]
fn r_general_rejects_large_x() {
    let prof = IharaProfile::new(64, r("7")).unwrap();
    for l in 0..3 {
        let mut xs = vec![Real::zero(P); 3];
        xs[l] = r("0.3");
        let err = BoundProblem::new(&prof, &r("0.2"), &xs, P).and_then(|b| r_general(&b));
        assert!(matches!(err, Err(Error::Domain(_))), "l={l}");
    }
}

#[test]
fn optimizer_seed_only_and_fallback() {
    let prof = IharaProfile::new(2, r("0.5")).unwrap();
    let delta = r("0.4");
    let lin = r_lin(&prof, &delta, P).unwrap().value;
    let seed_only = optimize_x(&prof, &delta, 1, 1, P).unwrap();
    assert_eq!(seed_only.evaluations, 1);
    assert!(seed_only.xs[0].is_zero());
    assert!(seed_only.result.value.approx_eq_ulps(&lin, 4));
    let searched = optimize_x(&prof, &delta, 1, 100, P).unwrap();
    assert!(searched.result.value >= lin);
}

#[test]
fn optimizer_reaches_published_gain() {
    let case = &CASES[0];
    let prof = case.profile(P).unwrap();
    let delta = case.delta(P);
    let lin = r_lin(&prof, &delta, P).unwrap().value;
    let opt = optimize_x(&prof, &delta, 3, 500, P).unwrap();
    assert!(&opt.result.value - &lin >= r(case.min_gain));
}

#[test]
fn compare_table_rows() {
    let prof = IharaProfile::new(64, r("7")).unwrap();
    assert!(compare_table(&prof, &[], &XChoice::Fixed(vec![Real::zero(P)]), P).is_empty());

    let case = &CASES[0];
    let rows = compare_table(
        &prof,
        &[case.delta_exact(), Rational::from((63, 64))],
        &XChoice::Fixed(case.xs(P)),
        P,
    );
    assert_eq!(rows.len(), 2);
    let lin = rows[0].r_lin.value().unwrap();
    assert_eq!(&lin.to_decimal_truncated(18), &case.r_lin[..20]);
    assert_eq!(rows[0].best, Some("r_general"));
    for row in &rows[1..] {
        assert!(row.gv.value().is_none());
        assert!(row.tvz.value().is_some() && row.r_lin.value().is_some());
    }
}
