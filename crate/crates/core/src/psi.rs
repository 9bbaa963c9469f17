//! The I-function `I(sigma) = max S` and its inverse `Psi` at the class-number
//! growth target.

use rug::Rational;
use serde::Serialize;

use crate::classic::IharaProfile;
use crate::error::{domain, input, Error, Result};
use crate::maximize::{face_start, Ascent, Polytope};
use crate::numerics::{QaryLog, Real, MIN_PRECISION};
use crate::surface::{
    check_conditions, corner_data_exact, round_down, ConditionReport, Evaluator, SPoint,
    SurfaceParams,
};

/// Inputs of `Psi(y, x_1..x_m)` for one tower profile.
#[derive(Clone, Debug)]
pub struct PsiProblem {
    profile: IharaProfile,
    y: Real,
    xs: Vec<Real>,
    prec: u32,
}

impl PsiProblem {
    /// All inputs are re-rounded to `prec` bits.
    pub fn new(profile: &IharaProfile, y: &Real, xs: &[Real], prec: u32) -> Result<Self> {
        if prec < MIN_PRECISION {
            return Err(input(format!(
                "precision must be at least {MIN_PRECISION} bits"
            )));
        }
        if xs.is_empty() {
            return Err(input("the x-vector must have length m >= 1"));
        }
        if !y.is_positive() {
            return Err(domain(format!("y must be > 0, got {y}")));
        }
        if let Some((l, x)) = xs.iter().enumerate().find(|(_, x)| x.is_negative()) {
            return Err(domain(format!("x_{} must be >= 0, got {x}", l + 1)));
        }
        let y = y.at_prec(prec);
        let xs: Vec<Real> = xs.iter().map(|x| x.at_prec(prec)).collect();
        if y.to_rational() + Rational::from(2) * weighted_x(&xs) >= 1 {
            return Err(domain("y + 2(2x_1 + 3x_2 + ... + (m+1)x_m) < 1 violated"));
        }
        Ok(PsiProblem {
            profile: profile.at_prec(prec),
            y,
            xs,
            prec,
        })
    }

    pub fn profile(&self) -> &IharaProfile {
        &self.profile
    }
    pub fn y(&self) -> &Real {
        &self.y
    }
    pub fn xs(&self) -> &[Real] {
        &self.xs
    }
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// `theta = gamma (1 - y - 2 sum (l+1) x_l)`, the right end of the sigma-domain.
    pub fn theta(&self) -> Real {
        let w = Real::from_rational(&weighted_x(&self.xs), self.prec);
        self.profile.gamma() * &(Real::one(self.prec) - &self.y - w * 2)
    }

    fn surface(&self, sigma: &Real) -> Result<SurfaceParams> {
        SurfaceParams::new(
            self.profile.q(),
            self.profile.gamma().clone(),
            self.y.clone(),
            self.xs.clone(),
            sigma.at_prec(self.prec),
        )
    }
}

fn weighted_x(xs: &[Real]) -> Rational {
    xs.iter()
        .enumerate()
        .map(|(l, x)| Rational::from(l as u32 + 2) * x.to_rational())
        .sum()
}

/// `T = (1/gamma) [1 + sum_l gamma_l log_q(q^l / (q^l - 1))]`, `gamma_1`
/// defaulting to `gamma`.
pub fn class_number_target(profile: &IharaProfile) -> Real {
    let p = profile.prec();
    let lg = QaryLog::new(profile.q(), p).expect("profile q >= 2");
    let term = |l: u32| -> Real {
        // log_q(q^l/(q^l - 1)) = -ln(1 - q^-l)/ln q
        let ql = Real::with_val(p, profile.q()).powi(l as i32);
        -(-ql.recip()).ln_1p() / lg.ln_q()
    };
    let gamma = profile.gamma();
    let gamma_1 = profile.gamma_l().get(&1).unwrap_or(gamma);
    let mut acc = Real::one(p);
    if !gamma_1.is_zero() {
        acc = acc + &(gamma_1 * &term(1));
    }
    for (l, g) in profile.gamma_l().range(2..) {
        if !g.is_zero() {
            acc = acc + &(g * &term(*l));
        }
    }
    acc / gamma
}

/// How a value of `I` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// C1–C4 hold; the corner `(x, t) = (0, A_1)` is the maximizer.
    ClosedForm,
    /// C1–C3 hold but C4 fails: `x = 0` and the maximum lies on the face
    /// where the weighted constraint is tight; found by exchange ascent.
    FaceSearch,
    /// Exchange ascent over the whole region.
    Numerical,
}

/// One evaluation of `I(sigma)`.
#[derive(Clone, Debug)]
pub struct IValue {
    pub value: Real,
    pub method: Method,
    /// A maximizing point (the corner for [`Method::ClosedForm`]).
    pub point: SPoint,
    pub conditions: ConditionReport,
}

/// `I(sigma)`: closed form under C1–C4, numerical maximization otherwise.
///
/// The numerical paths never return less than the corner value when the
/// corner is feasible.
pub fn i_value(problem: &PsiProblem, sigma: &Real) -> Result<IValue> {
    let params = problem.surface(sigma)?;
    let conditions = check_conditions(&params);
    let prec = problem.prec;
    let ev = Evaluator::new(&params)?;
    let xr: Vec<Rational> = problem.xs.iter().map(|x| x.to_rational()).collect();
    let cd = corner_data_exact(&xr);
    let zero = Real::zero(prec);

    let corner = if cd.t_star[0] >= 0 {
        let t = cd.a1_point(prec);
        let v = ev.value(&zero, &t)?;
        Some((v, t))
    } else {
        None
    };

    if conditions.all_hold() {
        let (value, t) = corner
            .ok_or_else(|| Error::Internal("C1-C4 hold but the corner A_1 is infeasible".into()))?;
        return Ok(IValue {
            value,
            method: Method::ClosedForm,
            point: SPoint::new(zero, t),
            conditions,
        });
    }

    let budget = Rational::from(2) * weighted_x(&problem.xs);
    let start_t: Vec<Real> = face_start(&cd, &budget)
        .iter()
        .map(|r| round_down(r, prec))
        .collect();
    let ascent = Ascent::new(&ev, Polytope::new(params.s(), &cd, &budget, prec));
    let (method, found) = if conditions.c123_hold() {
        (Method::FaceSearch, ascent.face(start_t))
    } else {
        let mut start = vec![zero.clone()];
        start.extend(start_t);
        (Method::Numerical, ascent.full(start))
    };
    let mut value = found.value;
    let mut point = SPoint::new(found.point[0].clone(), found.point[1..].to_vec());
    if let Some((cv, ct)) = corner {
        if cv > value {
            value = cv;
            point = SPoint::new(zero, ct);
        }
    }
    Ok(IValue {
        value,
        method,
        point,
        conditions,
    })
}

/// Diagnostics of one `Psi` computation.
#[derive(Clone, Debug, Serialize)]
pub struct PsiDiagnostics {
    pub theta: Real,
    pub target: Real,
    pub i_at_zero: Real,
    /// `I` at `theta (1 - 2^{-prec/2})`, standing in for the limit at `theta`.
    pub limit_proxy: Real,
    pub iterations: u32,
    /// Final bracket width.
    pub width: Real,
    /// Method used at the returned `sigma*` (or at the deciding evaluation
    /// when `Psi = 0`).
    pub method: Method,
    /// `Psi = 0` because the limit proxy does not exceed the target.
    pub zero_branch: bool,
    /// `Psi = 0` because `I(0) >= T` (no admissible `sigma` reaches `T`).
    pub clamped: bool,
    /// Every evaluation in the computation used the closed form.
    pub closed_form_throughout: bool,
    /// C1–C4 hold at both ends of the final bracket.
    pub conditions_hold_at_bracket: bool,
    pub conditions: Option<ConditionReport>,
}

#[derive(Clone, Debug)]
pub struct PsiResult {
    pub psi: Real,
    /// Upper end of the final bracket (`I(upper) >= T`).
    pub upper: Real,
    pub diagnostics: PsiDiagnostics,
}

/// `Psi(y, x)`: the `sigma` in `[0, theta)` with `I(sigma) = T`, or 0.
///
/// The returned value is the lower end of a bracket of width at most
/// `2^{-(prec-16)} theta`, so `I(psi) < T <= I(psi + width)`. The bracket is
/// shrunk by Illinois steps on `I - T` with a bisection fallback.
pub fn psi_value(problem: &PsiProblem) -> Result<PsiResult> {
    let p = problem.prec;
    let theta = problem.theta();
    let target = class_number_target(problem.profile());
    let edge = &theta * &(Real::one(p) - Real::pow2(-(p as i32 / 2), p));

    let at_edge = i_value(problem, &edge)?;
    let at_zero = i_value(problem, &Real::zero(p))?;
    let i_at_zero = at_zero.value.clone();
    let limit_proxy = at_edge.value.clone();
    let mut closed = at_edge.method == Method::ClosedForm && at_zero.method == Method::ClosedForm;
    let zero_result = |method, zero_branch, clamped, closed, conditions| PsiResult {
        psi: Real::zero(p),
        upper: Real::zero(p),
        diagnostics: PsiDiagnostics {
            theta: theta.clone(),
            target: target.clone(),
            i_at_zero: i_at_zero.clone(),
            limit_proxy: limit_proxy.clone(),
            iterations: 0,
            width: Real::zero(p),
            method,
            zero_branch,
            clamped,
            closed_form_throughout: closed,
            conditions_hold_at_bracket: false,
            conditions: Some(conditions),
        },
    };
    if at_edge.value <= target {
        return Ok(zero_result(
            at_edge.method,
            true,
            false,
            closed,
            at_edge.conditions.clone(),
        ));
    }
    if at_zero.value >= target {
        return Ok(zero_result(
            at_zero.method,
            false,
            true,
            closed,
            at_zero.conditions.clone(),
        ));
    }

    let tol = &theta * &Real::pow2(-(p as i32 - 16), p);
    let nudge = &tol / 4;
    let mut lo = Real::zero(p);
    let mut hi = edge;
    let mut g_lo = &at_zero.value - &target;
    let mut g_hi = &at_edge.value - &target;
    let mut lo_eval = at_zero;
    let mut hi_eval = at_edge;
    let mut iterations = 0u32;
    let mut side = 0i8;
    let mut slow = 0u32;
    while &hi - &lo > tol {
        if iterations >= 4 * p {
            return Err(Error::Internal(format!(
                "root search did not reach width {tol} within {} iterations",
                4 * p
            )));
        }
        iterations += 1;
        let width = &hi - &lo;
        let mid = if slow >= 3 {
            slow = 0;
            (&lo + &hi) / 2
        } else {
            // Illinois step on I - T, kept a quarter tolerance inside the bracket.
            let t = &lo - &(&g_lo * &width / &(&g_hi - &g_lo));
            let inner_lo = &lo + &nudge;
            let inner_hi = &hi - &nudge;
            t.max_of(&inner_lo).min_of(&inner_hi).clone()
        };
        let ev = i_value(problem, &mid)?;
        closed &= ev.method == Method::ClosedForm;
        let g = &ev.value - &target;
        if g.is_negative() {
            lo = mid;
            g_lo = g;
            lo_eval = ev;
            if side == -1 {
                g_hi = g_hi / 2;
            }
            side = -1;
        } else {
            hi = mid;
            g_hi = g;
            hi_eval = ev;
            if side == 1 {
                g_lo = g_lo / 2;
            }
            side = 1;
        }
        if &hi - &lo > &width / 2 {
            slow += 1;
        } else {
            slow = 0;
        }
    }
    let bracket_ok = lo_eval.conditions.all_hold() && hi_eval.conditions.all_hold();
    Ok(PsiResult {
        psi: lo.clone(),
        upper: hi.clone(),
        diagnostics: PsiDiagnostics {
            theta,
            target,
            i_at_zero,
            limit_proxy,
            iterations,
            width: &hi - &lo,
            method: lo_eval.method,
            zero_branch: false,
            clamped: false,
            closed_form_throughout: closed,
            conditions_hold_at_bracket: bracket_ok,
            conditions: Some(lo_eval.conditions),
        },
    })
}
