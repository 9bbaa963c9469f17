//! The improved rate bound `R_{x_1..x_m}(delta)`, its linear specialization
//! `R^lin(delta)`, a heuristic x-vector search and bound comparison tables.

use rug::Rational;
use serde::Serialize;

use crate::classic::{gv_bound, no1_bound, tvz_bound, IharaProfile};
use crate::error::{domain, input, Error, Result};
use crate::numerics::{QaryLog, Real, MIN_PRECISION};
use crate::psi::{psi_value, PsiDiagnostics, PsiProblem};
use crate::reference::CASES;

/// Full input of one rate-bound evaluation.
#[derive(Clone, Debug)]
pub struct BoundProblem {
    profile: IharaProfile,
    delta: Real,
    xs: Vec<Real>,
    prec: u32,
}

impl BoundProblem {
    /// Inputs are re-rounded to `prec` bits; requires
    /// `0 < delta < 1 - 2(2x_1 + ... + (m+1)x_m)`.
    pub fn new(profile: &IharaProfile, delta: &Real, xs: &[Real], prec: u32) -> Result<Self> {
        if prec < MIN_PRECISION {
            return Err(input(format!(
                "precision must be at least {MIN_PRECISION} bits"
            )));
        }
        if xs.is_empty() {
            return Err(input("the x-vector must have length m >= 1"));
        }
        if let Some((l, x)) = xs.iter().enumerate().find(|(_, x)| x.is_negative()) {
            return Err(domain(format!("x_{} must be >= 0, got {x}", l + 1)));
        }
        let delta = delta.at_prec(prec);
        let xs: Vec<Real> = xs.iter().map(|x| x.at_prec(prec)).collect();
        let upper = Rational::from(1) - Rational::from(2) * weighted_x(&xs);
        if !delta.is_positive() || delta.to_rational() >= upper {
            return Err(domain(
                "0 < delta < 1 - 2(2x_1 + 3x_2 + ... + (m+1)x_m) violated",
            ));
        }
        Ok(BoundProblem {
            profile: profile.at_prec(prec),
            delta,
            xs,
            prec,
        })
    }

    pub fn profile(&self) -> &IharaProfile {
        &self.profile
    }
    pub fn delta(&self) -> &Real {
        &self.delta
    }
    pub fn xs(&self) -> &[Real] {
        &self.xs
    }
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// `y = 1 - delta - 2 sum (l+1) x_l`.
    pub fn y(&self) -> Real {
        let w = Real::from_rational(&weighted_x(&self.xs), self.prec);
        Real::one(self.prec) - &self.delta - w * 2
    }
}

fn weighted_x(xs: &[Real]) -> Rational {
    xs.iter()
        .enumerate()
        .map(|(l, x)| Rational::from(l as u32 + 2) * x.to_rational())
        .sum()
}

/// Additive breakdown of a bound value.
#[derive(Clone, Debug, Serialize)]
pub struct Components {
    /// `1 - delta - 1/gamma`.
    pub tvz: Real,
    /// `X log_q(q-1) - sum x_l log_q x_l - (1-X) log_q(1-X)`, `X = sum x_l`.
    pub x_entropy: Real,
    /// `-sum (l+3) x_l`.
    pub linear_penalty: Real,
    /// `Psi / gamma`.
    pub psi_term: Real,
}

impl Components {
    pub fn total(&self) -> Real {
        &(&self.tvz + &self.x_entropy) + &(&self.linear_penalty + &self.psi_term)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundResult {
    pub value: Real,
    pub components: Components,
    pub psi: Real,
    pub psi_diagnostics: PsiDiagnostics,
}

/// `R_{x_1..x_m}(delta)` with `y = 1 - delta - 2 sum (l+1) x_l`.
pub fn r_general(problem: &BoundProblem) -> Result<BoundResult> {
    let p = problem.prec;
    let profile = &problem.profile;
    let lg = QaryLog::new(profile.q(), p)?;
    let tvz = tvz_bound(&problem.delta, profile.gamma())?;

    let total_x = problem.xs.iter().fold(Real::zero(p), |a, x| a + x);
    let x_entropy = if total_x.is_zero() {
        Real::zero(p)
    } else {
        if total_x >= Real::one(p) {
            return Err(domain("x_1 + ... + x_m < 1 violated"));
        }
        let mut acc = &total_x * lg.log_q_minus_1();
        for x in &problem.xs {
            acc = acc - lg.xlog_unchecked(x);
        }
        // (1-X) log_q(1-X) through ln(1+(-X)) so tiny X keeps full accuracy.
        let tail = (Real::one(p) - &total_x) * (-&total_x).ln_1p() / lg.ln_q();
        acc - tail
    };
    let linear_penalty = -problem
        .xs
        .iter()
        .enumerate()
        .fold(Real::zero(p), |a, (l, x)| a + &(x * (l as i64 + 4)));

    let psi_problem = PsiProblem::new(profile, &problem.y(), &problem.xs, p)?;
    let psi = psi_value(&psi_problem)?;
    let psi_term = &psi.psi / profile.gamma();
    let components = Components {
        tvz,
        x_entropy,
        linear_penalty,
        psi_term,
    };
    Ok(BoundResult {
        value: components.total(),
        components,
        psi: psi.psi,
        psi_diagnostics: psi.diagnostics,
    })
}

/// `R^lin(delta) = 1 - delta - 1/gamma + Psi(1 - delta, 0)/gamma`.
pub fn r_lin(profile: &IharaProfile, delta: &Real, prec: u32) -> Result<BoundResult> {
    if !delta.is_positive() || *delta >= Real::one(delta.prec()) {
        return Err(domain(format!("0 < delta < 1 violated, got {delta}")));
    }
    let zero = [Real::zero(prec)];
    let problem = BoundProblem::new(profile, delta, &zero, prec)?;
    let tvz = tvz_bound(&problem.delta, problem.profile.gamma())?;
    let psi_problem = PsiProblem::new(&problem.profile, &problem.y(), &zero, prec)?;
    let psi = psi_value(&psi_problem)?;
    let psi_term = &psi.psi / problem.profile.gamma();
    let components = Components {
        tvz,
        x_entropy: Real::zero(prec),
        linear_penalty: Real::zero(prec),
        psi_term,
    };
    Ok(BoundResult {
        value: components.total(),
        components,
        psi: psi.psi,
        psi_diagnostics: psi.diagnostics,
    })
}

/// Outcome of [`optimize_x`].
#[derive(Clone, Debug)]
pub struct Optimized {
    pub xs: Vec<Real>,
    pub result: BoundResult,
    pub evaluations: usize,
}

/// Heuristic search for an x-vector maximizing `r_general`.
///
/// Candidates: the zero vector, then every published x-vector for the same
/// `q` and `m`, then golden-section passes over `log10 x_l` in `[-130, -5]`
/// one coordinate at a time until `budget` evaluations are spent. Points
/// outside the domain are skipped. No optimality claim is made.
pub fn optimize_x(
    profile: &IharaProfile,
    delta: &Real,
    m: usize,
    budget: usize,
    prec: u32,
) -> Result<Optimized> {
    if m == 0 {
        return Err(input("m must be at least 1"));
    }
    let mut search = Search {
        profile,
        delta,
        prec,
        budget: budget.max(1),
        used: 0,
    };
    let zero = vec![Real::zero(prec); m];
    let mut best_xs = zero.clone();
    let mut best = search
        .eval(&zero)
        .ok_or_else(|| domain("delta is outside the domain even for x = 0"))?;

    for case in CASES
        .iter()
        .filter(|c| c.q == profile.q() && c.xs.len() == m)
    {
        let xs = case.xs(prec);
        if let Some(r) = search.eval(&xs) {
            if r.value > best.value {
                best = r;
                best_xs = xs;
            }
        }
    }

    let (lo_bound, hi_bound) = (-130.0f64, -5.0f64);
    let mut width = hi_bound - lo_bound;
    while search.left() > 0 {
        let before = best.value.clone();
        for l in 0..m {
            if search.left() == 0 {
                break;
            }
            let center = if best_xs[l].is_zero() {
                (lo_bound + hi_bound) / 2.0
            } else {
                best_xs[l].to_f64().log10()
            };
            let a = (center - width / 2.0).max(lo_bound);
            let b = (center + width / 2.0).min(hi_bound);
            if let Some((xs, r)) = search.golden(&best_xs, l, a, b) {
                if r.value > best.value {
                    best = r;
                    best_xs = xs;
                }
            }
        }
        width /= 4.0;
        if best.value == before && width < 1e-6 {
            break;
        }
    }
    Ok(Optimized {
        xs: best_xs,
        result: best,
        evaluations: search.used,
    })
}

struct Search<'a> {
    profile: &'a IharaProfile,
    delta: &'a Real,
    prec: u32,
    budget: usize,
    used: usize,
}

impl Search<'_> {
    fn left(&self) -> usize {
        self.budget - self.used
    }

    fn eval(&mut self, xs: &[Real]) -> Option<BoundResult> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let problem = BoundProblem::new(self.profile, self.delta, xs, self.prec).ok()?;
        r_general(&problem).ok()
    }

    fn at(&self, base: &[Real], l: usize, log10x: f64) -> Vec<Real> {
        let mut xs = base.to_vec();
        let ten = Real::with_val(self.prec, 10);
        let e = Real::with_val(self.prec, log10x);
        xs[l] = (e * ten.ln()).exp();
        xs
    }

    /// Golden-section maximization of one coordinate in log space.
    fn golden(
        &mut self,
        base: &[Real],
        l: usize,
        a: f64,
        b: f64,
    ) -> Option<(Vec<Real>, BoundResult)> {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (a, b);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let score = |r: &Option<BoundResult>| {
            r.as_ref()
                .map(|r| r.value.to_f64())
                .unwrap_or(f64::NEG_INFINITY)
        };
        let xc = self.at(base, l, c);
        let mut rc = self.eval(&xc);
        let xd = self.at(base, l, d);
        let mut rd = self.eval(&xd);
        let mut best: Option<(Vec<Real>, BoundResult)> = None;
        let keep = |xs: Vec<Real>,
                    r: &Option<BoundResult>,
                    best: &mut Option<(Vec<Real>, BoundResult)>| {
            if let Some(r) = r {
                if best.as_ref().is_none_or(|(_, b)| r.value > b.value) {
                    *best = Some((xs, r.clone()));
                }
            }
        };
        keep(xc, &rc, &mut best);
        keep(xd, &rd, &mut best);
        while self.left() > 0 && (b - a) > 1e-9 {
            let better_c = match (&rc, &rd) {
                (Some(x), Some(y)) => x.value > y.value,
                _ => score(&rc) > score(&rd),
            };
            if better_c {
                b = d;
                d = c;
                rd = rc;
                c = b - phi * (b - a);
                let xs = self.at(base, l, c);
                rc = self.eval(&xs);
                keep(xs, &rc, &mut best);
            } else {
                a = c;
                c = d;
                rc = rd;
                d = a + phi * (b - a);
                let xs = self.at(base, l, d);
                rd = self.eval(&xs);
                keep(xs, &rd, &mut best);
            }
        }
        best
    }
}

/// One cell of a comparison table.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Value(Real),
    OutOfDomain(String),
}

impl Cell {
    fn from_result(r: Result<Real>) -> Cell {
        match r {
            Ok(v) => Cell::Value(v),
            Err(Error::Domain(m)) | Err(Error::Input(m)) => Cell::OutOfDomain(m),
            Err(e) => Cell::OutOfDomain(e.to_string()),
        }
    }

    pub fn value(&self) -> Option<&Real> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::OutOfDomain(_) => None,
        }
    }
}

/// x-vector choice for [`compare_table`].
#[derive(Clone, Debug)]
pub enum XChoice {
    Fixed(Vec<Real>),
    Optimize { m: usize, budget: usize },
}

/// One row: all bounds at one `delta`.
#[derive(Clone, Debug)]
pub struct Row {
    pub delta: Rational,
    pub gv: Cell,
    pub tvz: Cell,
    pub no1: Cell,
    pub r_lin: Cell,
    pub r_general: Cell,
    /// Column name of the largest value.
    pub best: Option<&'static str>,
    pub xs: Option<Vec<Real>>,
}

pub const COLUMNS: [&str; 5] = ["gv", "tvz", "no1", "r_lin", "r_general"];

/// Evaluates every bound at each `delta`. Domain problems are recorded in
/// the row's cells and never abort the table.
pub fn compare_table(
    profile: &IharaProfile,
    deltas: &[Rational],
    xs: &XChoice,
    prec: u32,
) -> Vec<Row> {
    deltas
        .iter()
        .map(|d| {
            let delta = Real::from_rational(d, prec);
            let gamma = profile.gamma();
            let gv = Cell::from_result(gv_bound(profile.q(), &delta));
            let tvz = Cell::from_result(tvz_bound(&delta, gamma));
            let no1 = Cell::from_result(no1_bound(profile.q(), &delta, gamma));
            let lin = Cell::from_result(r_lin(profile, &delta, prec).map(|r| r.value));
            let (general, used_xs) = match xs {
                XChoice::Fixed(v) => {
                    let r = BoundProblem::new(profile, &delta, v, prec)
                        .and_then(|p| r_general(&p))
                        .map(|r| r.value);
                    (Cell::from_result(r), Some(v.clone()))
                }
                XChoice::Optimize { m, budget } => {
                    match optimize_x(profile, &delta, *m, *budget, prec) {
                        Ok(o) => (Cell::Value(o.result.value), Some(o.xs)),
                        Err(e) => (Cell::from_result(Err(e)), None),
                    }
                }
            };
            let cells = [&gv, &tvz, &no1, &lin, &general];
            let best = cells
                .iter()
                .zip(COLUMNS)
                .filter_map(|(c, name)| c.value().map(|v| (v, name)))
                .fold(None::<(&Real, &'static str)>, |acc, (v, name)| match acc {
                    Some((b, _)) if b >= v => acc,
                    _ => Some((v, name)),
                })
                .map(|(_, name)| name);
            Row {
                delta: d.clone(),
                gv,
                tvz,
                no1,
                r_lin: lin,
                r_general: general,
                best,
                xs: used_xs,
            }
        })
        .collect()
}
