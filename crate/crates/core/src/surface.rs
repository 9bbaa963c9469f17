//! The surface `S(sigma, y, x, t_1..t_m)`, its feasible region, the corner
//! data `(t_bar, t_star, u)` and the sufficient conditions C1–C4 under which
//! the corner `A_1 = (t*_1, t_bar_2, ..., t_bar_m)` with `x = 0` is the maximizer.
//!
//! Region and condition checks run in exact rational arithmetic: every
//! [`Real`] is a dyadic rational, so converting is lossless.

use rug::float::Round;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{domain, input, Error, Result};
use crate::numerics::{QaryLog, Real};

/// Fixed parameters of one surface: `q`, `gamma`, `y`, the x-vector and `sigma`.
#[derive(Clone, Debug)]
pub struct SurfaceParams {
    q: u64,
    gamma: Real,
    y: Real,
    xs: Vec<Real>,
    sigma: Real,
    s: Real,
}

impl SurfaceParams {
    pub fn new(q: u64, gamma: Real, y: Real, xs: Vec<Real>, sigma: Real) -> Result<Self> {
        if q < 2 {
            return Err(input(format!("q = {q} must be at least 2")));
        }
        if xs.is_empty() {
            return Err(input("the x-vector must have length m >= 1"));
        }
        if !gamma.is_positive() {
            return Err(domain(format!("gamma must be > 0, got {gamma}")));
        }
        if !y.is_positive() {
            return Err(domain(format!("y must be > 0, got {y}")));
        }
        if let Some((l, x)) = xs.iter().enumerate().find(|(_, x)| x.is_negative()) {
            return Err(domain(format!("x_{} must be >= 0, got {x}", l + 1)));
        }
        if sigma.is_negative() {
            return Err(domain(format!("sigma must be >= 0, got {sigma}")));
        }
        let lhs = y.to_rational()
            + Rational::from(2) * weighted_x_exact(&xs)
            + sigma.to_rational() / gamma.to_rational();
        if lhs >= 1 {
            return Err(domain(
                "y + 2(2x_1 + ... + (m+1)x_m) + sigma/gamma < 1 violated",
            ));
        }
        let s = &sigma / &gamma;
        Ok(SurfaceParams {
            q,
            gamma,
            y,
            xs,
            sigma,
            s,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn gamma(&self) -> &Real {
        &self.gamma
    }
    pub fn y(&self) -> &Real {
        &self.y
    }
    pub fn xs(&self) -> &[Real] {
        &self.xs
    }
    pub fn sigma(&self) -> &Real {
        &self.sigma
    }
    /// `sigma / gamma`.
    pub fn s(&self) -> &Real {
        &self.s
    }
    pub fn m(&self) -> usize {
        self.xs.len()
    }
    pub fn prec(&self) -> u32 {
        [&self.gamma, &self.y, &self.sigma]
            .iter()
            .map(|r| r.prec())
            .chain(self.xs.iter().map(|x| x.prec()))
            .min()
            .unwrap()
    }

    /// Same parameters at another `sigma`.
    pub fn with_sigma(&self, sigma: Real) -> Result<Self> {
        SurfaceParams::new(
            self.q,
            self.gamma.clone(),
            self.y.clone(),
            self.xs.clone(),
            sigma,
        )
    }

    /// Copy with every field re-rounded to `prec` (exact when raising precision).
    pub(crate) fn lifted(&self, prec: u32) -> SurfaceParams {
        SurfaceParams {
            q: self.q,
            gamma: self.gamma.at_prec(prec),
            y: self.y.at_prec(prec),
            xs: self.xs.iter().map(|x| x.at_prec(prec)).collect(),
            sigma: self.sigma.at_prec(prec),
            s: &self.sigma.at_prec(prec) / &self.gamma.at_prec(prec),
        }
    }

    fn s_exact(&self) -> Rational {
        self.sigma.to_rational() / self.gamma.to_rational()
    }
}

/// A point `(x, t_1..t_m)` of the maximization domain.
#[derive(Clone, Debug)]
pub struct SPoint {
    pub x: Real,
    pub ts: Vec<Real>,
}

impl SPoint {
    pub fn new(x: Real, ts: Vec<Real>) -> Self {
        SPoint { x, ts }
    }
}

/// `sum (l+1) x_l`, exactly.
fn weighted_x_exact(xs: &[Real]) -> Rational {
    xs.iter()
        .enumerate()
        .map(|(l, x)| Rational::from(l as u32 + 2) * x.to_rational())
        .sum()
}

/// Corner data of the t-region.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerData {
    /// `t_bar_m = 2x_m`, `t_bar_l = 2x_l + sum_{nu>l} x_nu`.
    pub t_bar: Vec<Rational>,
    /// Smallest value of each `t_l` on the face `t <= t_bar`, weighted sum tight.
    pub t_star: Vec<Rational>,
    /// `t*_1 + sum_{l>=2} l t_bar_l`.
    pub u: Rational,
}

impl CornerData {
    /// The corner `A_l`: `t_l = t*_l`, all other coordinates at `t_bar`.
    pub fn a_point_exact(&self, l: usize) -> Vec<Rational> {
        let mut p = self.t_bar.clone();
        p[l - 1] = self.t_star[l - 1].clone();
        p
    }

    /// `A_1` as reals, rounded down so the point stays in the region.
    pub fn a1_point(&self, prec: u32) -> Vec<Real> {
        self.a_point_exact(1)
            .iter()
            .map(|r| round_down(r, prec))
            .collect()
    }

    pub fn t_bar_real(&self, prec: u32) -> Vec<Real> {
        self.t_bar.iter().map(|r| round_down(r, prec)).collect()
    }
}

pub(crate) fn round_down(r: &Rational, prec: u32) -> Real {
    Real::from_float(Float::with_val_round(prec, r, Round::Down).0).expect("finite")
}

/// Solves the triangular corner system exactly.
pub fn corner_data(xs: &[Real]) -> Result<CornerData> {
    if xs.is_empty() {
        return Err(input("corner_data needs m >= 1"));
    }
    if xs.iter().any(|x| x.is_negative()) {
        return Err(domain("corner_data needs x_l >= 0"));
    }
    let xr: Vec<Rational> = xs.iter().map(|x| x.to_rational()).collect();
    Ok(corner_data_exact(&xr))
}

pub(crate) fn corner_data_exact(xr: &[Rational]) -> CornerData {
    let m = xr.len();
    let t_bar: Vec<Rational> = (0..m)
        .map(|l| {
            let tail: Rational = xr[l + 1..].iter().sum();
            Rational::from(2) * &xr[l] + tail
        })
        .collect();
    let budget: Rational = Rational::from(2)
        * xr.iter()
            .enumerate()
            .map(|(l, x)| Rational::from(l as u32 + 2) * x)
            .sum::<Rational>();
    let rest: Rational = (1..m)
        .map(|l| Rational::from(l as u32 + 2) * &t_bar[l])
        .sum();
    let t1 = (budget - rest) / 2u32;
    let mut t_star = vec![t1];
    for l in 2..=m {
        // (l+1)(t*_l - t_bar_l) = l (t*_{l-1} - t_bar_{l-1})
        let prev = Rational::from(&t_star[l - 2] - &t_bar[l - 2]);
        let d = prev * l as u32 / (l as u32 + 1);
        t_star.push(d + &t_bar[l - 1]);
    }
    let u = t_star[0].clone()
        + (1..m)
            .map(|l| Rational::from(l as u32 + 1) * &t_bar[l])
            .sum::<Rational>();
    CornerData { t_bar, t_star, u }
}

/// True iff `ts` lies in the t-region determined by `xs`.
pub fn region_contains(xs: &[Real], ts: &[Real]) -> bool {
    if xs.len() != ts.len() || xs.is_empty() {
        return false;
    }
    let xr: Vec<Rational> = xs.iter().map(|x| x.to_rational()).collect();
    let tr: Vec<Rational> = ts.iter().map(|t| t.to_rational()).collect();
    region_contains_exact(&xr, &tr)
}

pub(crate) fn region_contains_exact(xr: &[Rational], tr: &[Rational]) -> bool {
    region_violation(xr, tr).is_none()
}

fn region_violation(xr: &[Rational], tr: &[Rational]) -> Option<String> {
    let cd = corner_data_exact(xr);
    for (l, (t, tb)) in tr.iter().zip(&cd.t_bar).enumerate() {
        if *t < 0 {
            return Some(format!("t_{} >= 0 violated", l + 1));
        }
        if t > tb {
            return Some(format!("t_{} <= t_bar_{} violated", l + 1, l + 1));
        }
    }
    let lhs: Rational = tr
        .iter()
        .enumerate()
        .map(|(l, t)| Rational::from(l as u32 + 2) * t)
        .sum();
    let rhs: Rational = Rational::from(2)
        * xr.iter()
            .enumerate()
            .map(|(l, x)| Rational::from(l as u32 + 2) * x)
            .sum::<Rational>();
    if lhs > rhs {
        return Some("2t_1 + 3t_2 + ... <= 2(2x_1 + 3x_2 + ...) violated".into());
    }
    None
}

/// Outcome of checking C1–C4 with signed slacks (`rhs - lhs`; nonnegative
/// means the inequality holds, and strict ones also need a nonzero slack).
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub c1: bool,
    pub c2: Vec<bool>,
    pub c3: bool,
    pub c4: Vec<bool>,
    pub slack_c1: Real,
    pub slack_c2: Vec<Real>,
    pub slack_c3: Real,
    pub slack_c4: Vec<Real>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.c1 && self.c3 && self.c2.iter().all(|&b| b) && self.c4.iter().all(|&b| b)
    }

    /// C1–C3 only; these are what make `x = 0` optimal and push `t` onto the face.
    pub fn c123_hold(&self) -> bool {
        self.c1 && self.c3 && self.c2.iter().all(|&b| b)
    }
}

/// Evaluates C1–C4 exactly as rational inequalities.
pub fn check_conditions(params: &SurfaceParams) -> ConditionReport {
    let prec = params.prec();
    let q = params.q;
    let y = params.y.to_rational();
    let s = params.s_exact();
    let xr: Vec<Rational> = params.xs.iter().map(|x| x.to_rational()).collect();
    let cd = corner_data_exact(&xr);
    let m = xr.len();
    let w2 = Rational::from(2) * weighted_x_exact(&params.xs);
    let real = |r: Rational| Real::from_rational(&r, prec);

    let slack1 = (&y / Rational::from(q - 1)) - &s;
    let ys = Rational::from(&y + &s);
    let ysu = Rational::from(&ys + &cd.u);
    let free = Rational::from(1) - &y - &s - &w2;
    let mut c2 = Vec::with_capacity(m);
    let mut slack_c2 = Vec::with_capacity(m);
    for l in 1..=m {
        let lhs = &cd.t_bar[l - 1] * pow(&ysu, 2 * l as u32);
        let rhs = pow(&free, l as u32 + 1) * pow(&ys, l as u32);
        let d = rhs - lhs;
        c2.push(d > 0);
        slack_c2.push(real(d));
    }
    let slack3 = y.clone().square() - (&s * (Rational::from(1) - &y));
    let mut c4 = Vec::new();
    let mut slack_c4 = Vec::new();
    for l in 1..m {
        let lhs = pow(&cd.t_bar[l], l as u32 + 1) * &ysu;
        let rhs = pow(&cd.t_star[l - 1], l as u32 + 2);
        let d = rhs - lhs;
        c4.push(d >= 0);
        slack_c4.push(real(d));
    }
    ConditionReport {
        c1: slack1 >= 0,
        c2,
        c3: slack3 > 0,
        c4,
        slack_c1: real(slack1),
        slack_c2,
        slack_c3: real(slack3),
        slack_c4,
    }
}

fn pow(r: &Rational, k: u32) -> Rational {
    use rug::ops::Pow;
    Rational::from(r.pow(k))
}

/// Which closed form of the tail term applies at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Entropy,
    Linear,
}

/// Value of the surface at a point, checking every constraint first.
///
/// Evaluated with 32 guard bits and rounded to the parameters' precision.
pub fn s_value(params: &SurfaceParams, point: &SPoint) -> Result<Real> {
    validate_point(params, point)?;
    let p = params.prec();
    let hp = p + GUARD;
    let ev = Evaluator::new(&params.lifted(hp))?;
    let ts: Vec<Real> = point.ts.iter().map(|t| t.at_prec(hp)).collect();
    Ok(ev.value(&point.x.at_prec(hp), &ts)?.at_prec(p))
}

const GUARD: u32 = 32;

/// Gradient `(dS/dx, dS/dt_1, ..., dS/dt_m)` at a strictly interior point
/// that is off the branch seam.
pub fn s_gradient(params: &SurfaceParams, point: &SPoint) -> Result<Vec<Real>> {
    validate_point(params, point)?;
    let ev = Evaluator::new(params)?;
    ev.require_differentiable(&point.x, &point.ts)?;
    Ok(ev.gradient(&point.x, &point.ts))
}

/// `dS/dsigma` under the same interiority requirement as [`s_gradient`].
pub fn s_partial_sigma(params: &SurfaceParams, point: &SPoint) -> Result<Real> {
    validate_point(params, point)?;
    let ev = Evaluator::new(params)?;
    ev.require_differentiable(&point.x, &point.ts)?;
    Ok(ev.partial_sigma(&point.x, &point.ts))
}

/// The m = 1 surface in its expanded form
/// `-t log t - 2 b log b - D log D + (tail)` with `b = y+x+t`, `D = 1-y-x-2t`.
pub fn s_value_m1_expanded(params: &SurfaceParams, x: &Real, t1: &Real) -> Result<Real> {
    if params.m() != 1 {
        return Err(input("the expanded form is for m = 1"));
    }
    validate_point(params, &SPoint::new(x.clone(), vec![t1.clone()]))?;
    let p = params.prec();
    let hp = p + GUARD;
    let lifted = params.lifted(hp);
    let (x, t1) = (&x.at_prec(hp), &t1.at_prec(hp));
    let params = &lifted;
    let lg = QaryLog::new(params.q, hp)?;
    let y = &params.y;
    let b = y + x + t1;
    let d = Real::one(hp) - y - x - t1 * 2;
    let a = y + &params.s + t1;
    let head = -(lg.xlog_unchecked(t1) + lg.xlog_unchecked(&b) + lg.xlog_unchecked(&d));
    let thr_lhs = &b * params.q as i64;
    let thr_rhs = &a * (params.q as i64 - 1);
    let tail = if thr_lhs >= thr_rhs {
        -lg.xlog_unchecked(&b) - lg.xlog_unchecked(&(&params.s - x)) + lg.xlog_unchecked(&a)
    } else {
        &a - &(&b * lg.log_q_minus_1())
    };
    Ok((head + tail).at_prec(p))
}

fn validate_point(params: &SurfaceParams, point: &SPoint) -> Result<()> {
    if point.ts.len() != params.m() {
        return Err(input(format!(
            "point has {} t-coordinates, expected m = {}",
            point.ts.len(),
            params.m()
        )));
    }
    if point.x.is_negative() {
        return Err(domain("0 <= x violated"));
    }
    if point.x.to_rational() > params.s_exact() {
        return Err(domain("x <= sigma/gamma violated"));
    }
    let xr: Vec<Rational> = params.xs.iter().map(|x| x.to_rational()).collect();
    let tr: Vec<Rational> = point.ts.iter().map(|t| t.to_rational()).collect();
    match region_violation(&xr, &tr) {
        Some(msg) => Err(domain(msg)),
        None => Ok(()),
    }
}

/// Unchecked evaluator shared by the public functions and the maximizers.
#[derive(Clone, Debug)]
pub(crate) struct Evaluator {
    lg: QaryLog,
    q: u64,
    y: Real,
    s: Real,
    gamma: Real,
    prec: u32,
}

pub(crate) struct Sums {
    /// `sum t_l`
    pub total: Real,
    /// `sum l t_l`
    pub lin: Real,
    /// `sum (l+1) t_l`
    pub weighted: Real,
}

impl Evaluator {
    pub fn new(params: &SurfaceParams) -> Result<Self> {
        let prec = params.prec();
        Ok(Evaluator {
            lg: QaryLog::new(params.q, prec)?,
            q: params.q,
            y: params.y.clone(),
            s: params.s.clone(),
            gamma: params.gamma.clone(),
            prec,
        })
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn s(&self) -> &Real {
        &self.s
    }

    pub fn sums(&self, ts: &[Real]) -> Sums {
        let mut total = Real::zero(self.prec);
        let mut lin = Real::zero(self.prec);
        for (l, t) in ts.iter().enumerate() {
            total = total + t;
            lin = lin + &(t * (l as i64 + 1));
        }
        let weighted = &lin + &total;
        Sums {
            total,
            lin,
            weighted,
        }
    }

    /// `(a, b) = (y + s + sum l t_l, y + x + sum l t_l)`.
    fn tail_args(&self, x: &Real, lin: &Real) -> (Real, Real) {
        let a = &(&self.y + &self.s) + lin;
        let b = &(&self.y + x) + lin;
        (a, b)
    }

    /// Branch at `(a, b)` plus the signed distance `q b - (q-1) a`.
    fn branch(&self, a: &Real, b: &Real) -> (Branch, Real) {
        let d = b * self.q as i64 - &(a * (self.q as i64 - 1));
        let br = if d.is_negative() {
            Branch::Linear
        } else {
            Branch::Entropy
        };
        (br, d)
    }

    fn near_seam(&self, a: &Real, d: &Real) -> bool {
        let scale = a * self.q as i64;
        d.abs() <= scale * Real::pow2(-(self.prec as i32 - 64), self.prec)
    }

    #[cfg(test)]
    pub fn branch_at(&self, x: &Real, ts: &[Real]) -> Branch {
        let sums = self.sums(ts);
        let (a, b) = self.tail_args(x, &sums.lin);
        self.branch(&a, &b).0
    }

    /// Literal telescoped definition.
    pub fn value(&self, x: &Real, ts: &[Real]) -> Result<Real> {
        let lg = &self.lg;
        let p = self.prec;
        let one = Real::one(p);
        let mut val = Real::zero(p);
        let mut acc = Real::zero(p);
        for t in ts.iter().rev() {
            let c = &one - &acc;
            val = val + &c * &lg.entropy_unchecked(&(t / &c));
            acc = acc + t;
        }
        let sums = self.sums(ts);
        let (a, b) = self.tail_args(x, &sums.lin);
        let c = &one - &sums.total;
        let inner = &b / &c;
        if inner > one {
            return Err(domain("y + x + sum (l+1) t_l <= 1 violated"));
        }
        val = val + &c * &lg.entropy_unchecked(&inner);
        Ok(val + self.tail(&a, &b)?)
    }

    fn tail(&self, a: &Real, b: &Real) -> Result<Real> {
        let (br, d) = self.branch(a, b);
        if self.near_seam(a, &d) {
            let hp = self.prec + 32;
            let lg = QaryLog::new(self.q, hp)?;
            let (ah, bh) = (a.at_prec(hp), b.at_prec(hp));
            let ent = tail_entropy(&lg, &ah, &bh);
            let lin = tail_linear(&lg, &ah, &bh);
            let (ent, lin) = (ent.at_prec(self.prec), lin.at_prec(self.prec));
            if !ent.approx_eq_ulps(&lin, 4) {
                return Err(Error::Internal(format!(
                    "branch formulas disagree at the seam: {ent} vs {lin}"
                )));
            }
            return Ok(ent);
        }
        Ok(match br {
            Branch::Entropy => tail_entropy(&self.lg, a, b),
            Branch::Linear => tail_linear(&self.lg, a, b),
        })
    }

    pub fn require_differentiable(&self, x: &Real, ts: &[Real]) -> Result<()> {
        if !x.is_positive() || x >= &self.s {
            return Err(Error::NonDifferentiable(
                "x must satisfy 0 < x < sigma/gamma".into(),
            ));
        }
        if let Some(l) = ts.iter().position(|t| !t.is_positive()) {
            return Err(Error::NonDifferentiable(format!(
                "t_{} is on the boundary 0",
                l + 1
            )));
        }
        let sums = self.sums(ts);
        let (a, b) = self.tail_args(x, &sums.lin);
        let (_, d) = self.branch(&a, &b);
        if self.near_seam(&a, &d) {
            return Err(Error::NonDifferentiable(
                "point lies on the branch seam".into(),
            ));
        }
        Ok(())
    }

    /// Closed-form gradient; finite wherever every logarithm argument is
    /// positive. Callers guarantee interiority.
    pub fn gradient(&self, x: &Real, ts: &[Real]) -> Vec<Real> {
        let all: Vec<usize> = (0..=ts.len()).collect();
        self.gradient_parts(x, ts, &all)
    }

    /// Selected gradient components; index 0 is `x`, index `l` is `t_l`.
    /// Only the logarithms those components need are evaluated.
    pub fn gradient_parts(&self, x: &Real, ts: &[Real], idx: &[usize]) -> Vec<Real> {
        let sums = self.sums(ts);
        let (a, b) = self.tail_args(x, &sums.lin);
        let (br, _) = self.branch(&a, &b);
        let free = &(&(Real::one(self.prec) - &self.y) - x) - &sums.weighted;
        let ln_free = free.ln();
        let ln_b = b.ln();
        let lnq = self.lg.ln_q();
        let lqm1 = self.lg.log_q_minus_1();
        let ln_a = match br {
            Branch::Entropy => Some(a.ln()),
            Branch::Linear => None,
        };
        idx.iter()
            .map(|&i| match (&ln_a, i) {
                (Some(_), 0) => {
                    let sx = &self.s - x;
                    (&ln_free + &sx.ln() - &ln_b * 2) / lnq
                }
                (None, 0) => (&ln_free - &ln_b) / lnq - lqm1,
                (Some(ln_a), l) => {
                    let l = l as i64;
                    let num = &ln_free * (l + 1) + &(ln_a * l)
                        - &(&ln_b * (2 * l))
                        - ts[l as usize - 1].ln();
                    num / lnq
                }
                (None, l) => {
                    let l = l as i64;
                    let num = &ln_free * (l + 1) - &(&ln_b * l) - ts[l as usize - 1].ln();
                    num / lnq + &((Real::one(self.prec) - lqm1) * l)
                }
            })
            .collect()
    }

    pub fn partial_sigma(&self, x: &Real, ts: &[Real]) -> Real {
        let sums = self.sums(ts);
        let (a, b) = self.tail_args(x, &sums.lin);
        match self.branch(&a, &b).0 {
            Branch::Entropy => {
                let lq = self.lg.log_unchecked(&(a / (&self.s - x)));
                lq / &self.gamma
            }
            Branch::Linear => self.gamma.recip(),
        }
    }
}

fn tail_entropy(lg: &QaryLog, a: &Real, b: &Real) -> Real {
    let r = b / a;
    a * &lg.entropy_unchecked(&r)
}

fn tail_linear(lg: &QaryLog, a: &Real, b: &Real) -> Real {
    a - &(b * lg.log_q_minus_1())
}
