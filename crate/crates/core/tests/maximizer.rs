//! Numerical maximization of `S` checked against external optimizers.

use asymbound::classic::IharaProfile;
use asymbound::numerics::Real;
use asymbound::psi::{i_value, Method, PsiProblem};

const P: u32 = 256;

fn r(s: &str) -> Real {
    Real::parse(s, P).unwrap()
}

fn problem(q: u64, gamma: &str, y: &str, xs: &[&str]) -> PsiProblem {
    let prof = IharaProfile::new(q, r(gamma)).unwrap();
    let xs: Vec<Real> = xs.iter().map(|s| r(s)).collect();
    PsiProblem::new(&prof, &r(y), &xs, P).unwrap()
}

fn feasible(pr: &PsiProblem, x: &Real, ts: &[Real], s: &Real) -> bool {
    let budget = pr
        .xs()
        .iter()
        .enumerate()
        .fold(Real::zero(P), |acc, (l, v)| {
            acc + &(v * (2 * (l as i64 + 2)))
        });
    let used = ts
        .iter()
        .enumerate()
        .fold(Real::zero(P), |acc, (l, v)| acc + &(v * (l as i64 + 2)));
    let slack = Real::pow2(-200, P);
    !x.is_negative() && *x <= *s && ts.iter().all(|t| !t.is_negative()) && used <= &budget + &slack
}

// (q, gamma, y, xs, sigma/theta, oracle value). The oracle solves the
// stationarity equation on the active face in 40-digit arithmetic and checks
// the remaining KKT signs.
type Case = (
    u64,
    &'static str,
    &'static str,
    &'static [&'static str],
    &'static str,
    &'static str,
);

const CASES: &[Case] = &[
    (
        2,
        "1.5",
        "0.3",
        &["0.02", "0.01"],
        "0.001",
        "1.304846199227161750666659",
    ),
    (
        2,
        "1.5",
        "0.3",
        &["0.02", "0.01"],
        "0.05",
        "1.445776753125400408235473",
    ),
    (
        2,
        "1.5",
        "0.3",
        &["0.02", "0.01"],
        "0.3",
        "1.785209250576291876281936",
    ),
    (
        64,
        "7",
        "0.4",
        &["0.01", "0.005", "0.002"],
        "0.001",
        "0.205388453829030355403860004215",
    ),
    (
        64,
        "7",
        "0.4",
        &["0.01", "0.005", "0.002"],
        "0.05",
        "0.231828061494680047046001678265",
    ),
    (
        64,
        "7",
        "0.4",
        &["0.01", "0.005", "0.002"],
        "0.3",
        "0.360328061494680047046001678265",
    ),
    (
        64,
        "7",
        "0.4",
        &["0.01", "0.005", "0.002"],
        "0.9",
        "0.668728061494680047046001678265",
    ),
];

#[test]
fn numerical_i_matches_face_oracle() {
    let tol = r("1e-24");
    for &(q, g, y, xs, frac, want) in CASES {
        let pr = problem(q, g, y, xs);
        let sigma = &pr.theta() * &r(frac);
        let v = i_value(&pr, &sigma).unwrap();
        assert_ne!(v.method, Method::ClosedForm, "q={q} frac={frac}");
        let err = (&v.value - &r(want)).abs();
        assert!(
            err <= tol,
            "q={q} frac={frac}: {} vs {want}",
            v.value.to_sci(30)
        );
        let s = &sigma / &r(g);
        assert!(
            feasible(&pr, &v.point.x, &v.point.ts, &s),
            "q={q} frac={frac}"
        );
    }
}

// Interior optimum in x; value from a double-precision optimizer.
#[test]
fn numerical_i_moves_off_the_x_boundary() {
    let pr = problem(2, "1.5", "0.3", &["0.02", "0.01"]);
    let v = i_value(&pr, &(&pr.theta() * &r("0.9"))).unwrap();
    assert_eq!(v.method, Method::Numerical);
    assert!((v.value.to_f64() - 2.205550417986303).abs() < 1e-12);
    assert!((v.point.x.to_f64() - 0.0760173516).abs() < 1e-8);
}
