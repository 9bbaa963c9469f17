//! Oracle suites: exhaustive and seeded-random cross-checks of the divisor
//! counts, the vector lemmas and the surface analytics. Each suite returns a
//! serializable report with per-check counts and the first counterexample.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use serde::Serialize;

use crate::divisors::{
    c_ab_formula, count_exact_support, count_u_formula, count_vm, degree_identity_check,
    divisors_of_degree, enumerate_places, necklace_count, truncated_divisor, u_histogram,
    u_nonempty_predicted, FunctionFieldModel,
};
use crate::error::Error;
use crate::error::Result;
use crate::numerics::{Real, MIN_PRECISION};
use crate::psi::{i_value, PsiProblem};
use crate::rate::BoundProblem;
use crate::reference::CASES;
use crate::surface::{
    check_conditions, corner_data, s_gradient, s_value, s_value_m1_expanded, SPoint, SurfaceParams,
};
use crate::vectors::{
    build_toy_code, check_containments, check_subadditivity, check_weight_inequality,
    check_zero_divisor_profile, covering_translate, index_sets, m_set_count, m_set_lower_bound,
    IndexedVector,
};

/// One named check: how many cases ran, how many passed, and the first failure.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: u64,
    pub passed: u64,
    pub counterexample: Option<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            cases: 0,
            passed: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if ok {
            self.passed += 1;
        } else if self.counterexample.is_none() {
            self.counterexample = Some(describe());
        }
    }

    pub fn ok(&self) -> bool {
        self.cases > 0 && self.passed == self.cases
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok())
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The first failing check with its counterexample.
    pub fn first_failure(&self) -> Option<&CheckReport> {
        self.checks.iter().find(|c| !c.ok())
    }
}

pub const SUITES: [&str; 3] = ["combinatorics", "vectors", "surface"];

/// Runs a suite by name.
pub fn run_suite(name: &str, seed: u64, prec: u32) -> Result<SuiteReport> {
    match name {
        "combinatorics" => combinatorics_suite(seed),
        "vectors" => vectors_suite(seed),
        "surface" => surface_suite(seed, prec),
        _ => Err(crate::error::input(format!(
            "unknown suite {name:?}; expected one of {SUITES:?}"
        ))),
    }
}

/// All j-tuples with entries in `0..=max`.
fn tuples(m: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=max).map(move |j| {
                    let mut w = v.clone();
                    w.push(j);
                    w
                })
            })
            .collect();
    }
    out
}

/// Counts of `U(r, t; j)`, emptiness and `V_m` decompositions on one grid.
fn divisor_grid(
    model: &FunctionFieldModel,
    m: u32,
    r_max: u32,
    x_max: u32,
    u: &mut CheckReport,
    empty: &mut CheckReport,
    vm: &mut CheckReport,
) -> Result<()> {
    let q = model.q();
    for r in 0..=r_max {
        let hist = u_histogram(r, m, model)?;
        for t in 0..=r {
            for js in tuples(m as usize, 3) {
                let brute = hist.get(&(t, js.clone())).copied().unwrap_or(0);
                let formula = count_u_formula(r, t, &js, model)?;
                u.record(formula == brute, || {
                    format!("q={q} m={m} r={r} t={t} js={js:?}: formula {formula}, brute {brute}")
                });
                let pred = u_nonempty_predicted(r, t, &js, model.n());
                empty.record(pred == (brute > 0), || {
                    format!("q={q} m={m} r={r} t={t} js={js:?}: predicted {pred}, brute {brute}")
                });
            }
        }
        for s in 0..=r + 1 {
            for xs in tuples(m as usize, x_max) {
                let c = count_vm(r, s, &xs, model)?;
                vm.record(c.sum_formula == c.brute && c.disjoint_union, || {
                    format!("q={q} m={m} r={r} s={s} X={xs:?}: {c:?}")
                });
            }
        }
    }
    Ok(())
}

/// Place inventory, the degree identity, `C_{a,b}`, `U` and `V_m` counts.
pub fn combinatorics_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut places = CheckReport::new("place_counts_vs_necklace");
    for (q, cap) in [(2u64, 8u32), (3, 6), (5, 5)] {
        let model = enumerate_places(q, cap)?;
        places.record(model.places_of_degree(1) == q as usize + 1, || {
            format!("q={q}: {} rational places", model.places_of_degree(1))
        });
        for d in 2..=cap {
            let got = model.places_of_degree(d) as u64;
            let want = necklace_count(q, d);
            places.record(got == want, || {
                format!("q={q} d={d}: {got} places, expected {want}")
            });
        }
    }
    checks.push(places);

    let mut identity = CheckReport::new("degree_identity");
    let mut bar_bound = CheckReport::new("truncated_degree_bound");
    for q in [2u64, 3] {
        let model = enumerate_places(q, 6)?;
        let by_degree: Vec<_> = (0..=6)
            .map(|d| divisors_of_degree(&model, d))
            .collect::<Result<_>>()?;
        for _ in 0..250 {
            let d = rng.gen_range(0..=6usize);
            let dv = &by_degree[d][rng.gen_range(0..by_degree[d].len())];
            let m = rng.gen_range(1..=3u32);
            identity.record(degree_identity_check(dv, m, &model), || {
                format!("q={q} m={m} D={}", dv.display(&model))
            });
            let bar = truncated_divisor(dv, m, &model).degree(&model);
            bar_bound.record(bar <= (d as u32).min((m + 1) * model.n() as u32), || {
                format!("q={q} m={m} D={}: deg D_bar = {bar}", dv.display(&model))
            });
        }
    }
    checks.push(identity);
    checks.push(bar_bound);

    let mut cab = CheckReport::new("exact_support_count");
    for (q, a_max) in [(2u64, 6u32), (3, 4)] {
        let model = enumerate_places(q, a_max)?;
        for a in 0..=a_max {
            for b in 0..=a.min(model.n() as u32) {
                let brute = count_exact_support(a, b, &model, rng.gen())?;
                let formula = c_ab_formula(a as i64, b as i64, &model)?;
                cab.record(brute == formula, || {
                    format!("q={q} C_{{{a},{b}}}: brute {brute}, formula {formula}")
                });
            }
        }
    }
    checks.push(cab);

    let mut u = CheckReport::new("count_u_formula_vs_brute");
    let mut empty = CheckReport::new("u_emptiness_predicate");
    let mut vm = CheckReport::new("count_vm_sum_vs_brute");
    for (q, r_max) in [(2u64, 5u32), (3, 4)] {
        let model = enumerate_places(q, r_max)?;
        for m in 1..=2 {
            divisor_grid(&model, m, r_max, 2, &mut u, &mut empty, &mut vm)?;
        }
    }
    checks.extend([u, empty, vm]);

    let mut u3 = CheckReport::new("count_u_m3_reduced");
    let mut empty3 = CheckReport::new("u_emptiness_m3_reduced");
    let mut vm3 = CheckReport::new("count_vm_m3_reduced");
    let model = enumerate_places(2, 4)?;
    divisor_grid(&model, 3, 4, 1, &mut u3, &mut empty3, &mut vm3)?;
    checks.extend([u3, empty3, vm3]);

    Ok(SuiteReport {
        suite: "combinatorics".into(),
        seed,
        checks,
        notes: vec![
            "model: rational function field F_q(x), genus 0, class number 1".into(),
            "grids: q=2 r<=5, q=3 r<=4, m in {1,2}, j_l<=3, X_l<=2; m=3 on q=2 r<=4, X_l<=1".into(),
        ],
    })
}

fn all_vectors(q: u64, m: usize, n: usize) -> Vec<IndexedVector> {
    (0..q.pow((m * n) as u32))
        .map(|i| IndexedVector::from_index(q, m, n, i))
        .collect()
}

/// Index-set lemmas, the toy code and the M-set counts.
pub fn vectors_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let space = all_vectors(2, 2, 3);
    let mut sub_ex = CheckReport::new("subadditivity_exhaustive_q2_m2_n3");
    let mut con_ex = CheckReport::new("containments_exhaustive_q2_m2_n3");
    for a in &space {
        for b in &space {
            sub_ex.record(check_subadditivity(a, b)?, || format!("a={a:?} b={b:?}"));
            con_ex.record(check_containments(a, b)?, || format!("a={a:?} b={b:?}"));
        }
    }
    checks.extend([sub_ex, con_ex]);

    let mut sub_rand = CheckReport::new("subadditivity_random_q3_m3_n4");
    let mut con_rand = CheckReport::new("containments_random_q3_m3_n4");
    let mut partition = CheckReport::new("index_sets_partition_support");
    for _ in 0..100_000 {
        let a = IndexedVector::random(3, 3, 4, &mut rng);
        let b = IndexedVector::random(3, 3, 4, &mut rng);
        sub_rand.record(check_subadditivity(&a, &b)?, || format!("a={a:?} b={b:?}"));
        con_rand.record(check_containments(&a, &b)?, || format!("a={a:?} b={b:?}"));
        let sets = index_sets(&a);
        let union: Vec<usize> = sets.iter().flatten().copied().collect();
        let mut sorted = union.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let nonzero: Vec<usize> = a
            .blocks()
            .iter()
            .enumerate()
            .filter(|(_, b)| b.iter().any(|&s| s != 0))
            .map(|(i, _)| i + 1)
            .collect();
        partition.record(sorted.len() == union.len() && sorted == nonzero, || {
            format!("v={a:?}")
        });
    }
    checks.extend([sub_rand, con_rand, partition]);

    let mut profile = CheckReport::new("zero_divisor_profile");
    let mut weight = CheckReport::new("weight_inequality");
    let mut linear = CheckReport::new("expansion_linearity");
    let code = build_toy_code(2, &[0, 1], 2, 4)?;
    for w in code.words().iter().skip(1) {
        profile.record(check_zero_divisor_profile(&code, &w.f)?, || {
            format!("q=2 m=2 n=2 f={:?}", w.f)
        });
    }
    let code = build_toy_code(2, &[0, 1], 1, 3)?;
    for w in code.words().iter().skip(1) {
        weight.record(check_weight_inequality(&code, &w.f)?, || {
            format!("q=2 m=1 n=2 f={:?}", w.f)
        });
    }
    let code = build_toy_code(5, &[0, 1, 2, 3, 4], 2, 6)?;
    let mut drawn = 0;
    while drawn < 10_000 {
        let f = code.random_poly(&mut rng);
        if f.iter().all(|&c| c == 0) {
            continue;
        }
        drawn += 1;
        profile.record(check_zero_divisor_profile(&code, &f)?, || {
            format!("q=5 m=2 n=5 f={f:?}")
        });
        weight.record(check_weight_inequality(&code, &f)?, || {
            format!("q=5 m=2 n=5 f={f:?}")
        });
    }
    for s in 0..4 {
        let ok = code.check_linearity(100, seed.wrapping_add(s)).is_ok();
        linear.record(ok, || format!("q=5 m=2 n=5 seed={}", seed.wrapping_add(s)));
    }
    checks.extend([profile, weight, linear]);

    let xs = [Rational::from((1, 3)), Rational::from((1, 3))];
    let zero = IndexedVector::zero(2, 2, 3);
    let base = m_set_count(&xs, &zero)?;
    let mut invariance = CheckReport::new("m_set_translation_invariance");
    for _ in 0..20 {
        let c = IndexedVector::random(2, 2, 3, &mut rng);
        let got = m_set_count(&xs, &c)?;
        invariance.record(got == base, || format!("c={c:?}: {got} vs {base}"));
    }
    let mut lower = CheckReport::new("m_set_lower_bound");
    let lb = m_set_lower_bound(&xs, 2, 3)?;
    lower.record(lb <= base, || format!("|M| = {base} < lower bound {lb}"));
    checks.extend([invariance, lower]);

    let mut covering = CheckReport::new("covering_translate_averaging");
    let code = build_toy_code(3, &[0, 1, 2], 1, 2)?;
    let image: Vec<IndexedVector> = code.words().iter().map(|w| w.phi.clone()).collect();
    let res = covering_translate(3, 1, 3, &[Rational::from((1, 3))], &image);
    let msg = format!("{res:?}");
    covering.record(res.is_ok(), || msg);
    checks.push(covering);

    Ok(SuiteReport {
        suite: "vectors".into(),
        seed,
        checks,
        notes: vec![
            "toy code: L(r inf) = polynomials of degree <= r, evaluated at finite places x - a only (n <= q)".into(),
            "covering example uses q=3, m=1, n=3, r=2".into(),
        ],
    })
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64, prec: u32) -> Real {
    Real::with_val(prec, rng.gen_range(lo..hi))
}

/// Random surface parameters with `y + 2W + s < 1` and a random point
/// strictly inside the region.
fn random_surface<R: Rng>(rng: &mut R, m: usize, prec: u32) -> Result<(SurfaceParams, SPoint)> {
    let (q, gamma) =
        [(2u64, "1.5"), (49, "6"), (64, "7"), (1 << 21, "32766/130")][rng.gen_range(0..4)];
    let gamma = Real::parse(gamma, prec)?;
    loop {
        let y = uniform(rng, 0.05, 0.6, prec);
        let xs: Vec<Real> = (0..m)
            .map(|l| uniform(rng, 1e-4, 0.02, prec) / (l as i64 + 1))
            .collect();
        let w: Real = xs.iter().enumerate().map(|(l, x)| x * (l as i64 + 2)).sum();
        let room = Real::one(prec) - &y - w * 2;
        if !room.is_positive() {
            continue;
        }
        let s = room * &uniform(rng, 0.05, 0.95, prec);
        let sigma = &s * &gamma;
        let params = SurfaceParams::new(q, gamma.clone(), y, xs.clone(), sigma)?;
        let cd = corner_data(&xs)?;
        let mut ts: Vec<Real> = cd
            .t_bar_real(prec)
            .iter()
            .map(|tb| tb * &uniform(rng, 0.05, 0.95, prec))
            .collect();
        let weighted: Real = ts.iter().enumerate().map(|(l, t)| t * (l as i64 + 2)).sum();
        let budget: Real = xs
            .iter()
            .enumerate()
            .map(|(l, x)| x * (2 * l as i64 + 4))
            .sum();
        if weighted >= budget {
            let scale = &budget / &weighted * &uniform(rng, 0.5, 0.95, prec);
            ts = ts.iter().map(|t| t * &scale).collect();
        }
        let x = params.s() * &uniform(rng, 0.05, 0.95, prec);
        let point = SPoint::new(x, ts);
        if s_value(&params, &point).is_ok() {
            return Ok((params, point));
        }
    }
}

/// Gradient, I-monotonicity, corner dominance and the m = 1 expanded form.
pub fn surface_suite(seed: u64, prec: u32) -> Result<SuiteReport> {
    if prec < MIN_PRECISION.max(128) {
        return Err(crate::error::input("surface suite needs at least 128 bits"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let mut grad = CheckReport::new("gradient_vs_finite_difference");
    let h = Real::pow2(-(prec as i32 / 3), prec);
    let tol = Real::pow2(-(prec as i32 / 4), prec);
    let mut seam_skips = 0;
    while grad.cases < 200 {
        let m = rng.gen_range(1..=3);
        let (params, point) = random_surface(&mut rng, m, prec)?;
        let g = match s_gradient(&params, &point) {
            Ok(g) => g,
            Err(Error::NonDifferentiable(_)) => {
                seam_skips += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut worst = Real::zero(prec);
        for (i, gi) in g.iter().enumerate() {
            let shifted = |sign: i64| {
                let mut p = point.clone();
                let step = &h * sign;
                if i == 0 {
                    p.x = &p.x + &step;
                } else {
                    p.ts[i - 1] = &p.ts[i - 1] + &step;
                }
                s_value(&params, &p)
            };
            let fd = (shifted(1)? - shifted(-1)?) / (&h * 2);
            let diff = (&fd - gi).abs();
            let err = if gi.is_zero() { diff } else { diff / gi.abs() };
            if err > worst {
                worst = err;
            }
        }
        grad.record(worst < tol, || {
            format!(
                "q={} point={point:?}: relative error {}",
                params.q(),
                worst.to_sci(6)
            )
        });
    }
    notes.push(format!(
        "finite differences: step 2^-{}, relative tolerance 2^-{}; {seam_skips} seam points redrawn",
        prec / 3,
        prec / 4
    ));
    checks.push(grad);

    let mut mono = CheckReport::new("i_strictly_increasing");
    for (k, case) in CASES.iter().take(4).enumerate() {
        let profile = case.profile(prec)?;
        let bp = BoundProblem::new(&profile, &case.delta(prec), &case.xs(prec), prec)?;
        let problem = PsiProblem::new(&profile, &bp.y(), bp.xs(), prec)?;
        let theta = problem.theta();
        for _ in 0..50 {
            let a = &theta * &uniform(&mut rng, 0.0, 0.999, prec);
            let b = &theta * &uniform(&mut rng, 0.0, 0.999, prec);
            if a == b {
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let ilo = i_value(&problem, &lo)?.value;
            let ihi = i_value(&problem, &hi)?.value;
            mono.record(ilo < ihi, || {
                format!("case {k}: I({lo}) = {ilo} >= I({hi}) = {ihi}")
            });
        }
    }
    checks.push(mono);

    let mut corner = CheckReport::new("corner_dominates_feasible_points");
    let case = &CASES[0];
    let profile = case.profile(prec)?;
    let bp = BoundProblem::new(&profile, &case.delta(prec), &case.xs(prec), prec)?;
    let problem = PsiProblem::new(&profile, &bp.y(), bp.xs(), prec)?;
    let theta = problem.theta();
    let xs = bp.xs().to_vec();
    let cd = corner_data(&xs)?;
    let budget: Real = xs
        .iter()
        .enumerate()
        .map(|(l, x)| x * (2 * l as i64 + 4))
        .sum();
    let at = |sigma: Real| {
        SurfaceParams::new(
            profile.q(),
            profile.gamma().clone(),
            bp.y(),
            xs.clone(),
            sigma,
        )
    };
    // C1-C4 hold on an initial sigma-interval; locate its end.
    let (mut lo, mut hi) = (Real::zero(prec), &theta * &Real::parse("0.999", prec)?);
    if check_conditions(&at(hi.clone())?).all_hold() {
        lo = hi.clone();
    } else {
        for _ in 0..96 {
            let mid = (&lo + &hi) / 2;
            if check_conditions(&at(mid.clone())?).all_hold() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let edge = lo;
    let mut redrawn = 0;
    while corner.cases < 500 {
        let params = at(&edge * &uniform(&mut rng, 0.0, 1.0, prec))?;
        if !check_conditions(&params).all_hold() {
            redrawn += 1;
            continue;
        }
        let a1 = SPoint::new(Real::zero(prec), cd.a1_point(prec));
        let top = s_value(&params, &a1)?;
        let mut ts: Vec<Real> = cd
            .t_bar_real(prec)
            .iter()
            .map(|tb| tb * &uniform(&mut rng, 0.0, 1.0, prec))
            .collect();
        let weighted: Real = ts.iter().enumerate().map(|(l, t)| t * (l as i64 + 2)).sum();
        if weighted > budget {
            let scale = &budget / &weighted * &uniform(&mut rng, 0.5, 1.0, prec);
            ts = ts.iter().map(|t| t * &scale).collect();
        }
        let x = params.s() * &uniform(&mut rng, 0.0, 1.0, prec);
        let pt = SPoint::new(x, ts);
        let v = match s_value(&params, &pt) {
            Ok(v) => v,
            Err(Error::Domain(_)) => {
                redrawn += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        corner.record(v <= top, || {
            format!("sigma={} point={pt:?}: {v} > {top}", params.sigma())
        });
    }
    notes.push(format!(
        "corner dominance at the first reference case for sigma in [0, {}) where C1-C4 hold; {redrawn} draws redrawn",
        edge.to_sci(6)
    ));
    checks.push(corner);

    let mut expanded = CheckReport::new("m1_expanded_form");
    while expanded.cases < 1000 {
        let (params, point) = random_surface(&mut rng, 1, prec)?;
        let a = s_value(&params, &point)?;
        let b = s_value_m1_expanded(&params, &point.x, &point.ts[0])?;
        expanded.record(a.approx_eq_ulps(&b, 4), || {
            format!("q={} point={point:?}: {a} vs {b}", params.q())
        });
    }
    checks.push(expanded);

    Ok(SuiteReport {
        suite: "surface".into(),
        seed,
        checks,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_grid() {
        assert_eq!(
            tuples(2, 1),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(tuples(3, 3).len(), 64);
    }

    #[test]
    fn first_counterexample_is_kept() {
        let mut c = CheckReport::new("demo");
        c.record(true, || "a".into());
        c.record(false, || "b".into());
        c.record(false, || "c".into());
        assert_eq!((c.cases, c.passed), (3, 1));
        assert_eq!(c.counterexample.as_deref(), Some("b"));
        let rep = SuiteReport {
            suite: "demo".into(),
            seed: 0,
            checks: vec![CheckReport::new("empty"), c],
            notes: vec![],
        };
        assert!(!rep.passed());
        // a check that ran no cases counts as failed
        assert_eq!(rep.first_failure().unwrap().name, "empty");
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 0, 256).is_err());
    }
}
