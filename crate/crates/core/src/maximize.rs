//! Maximization of the (jointly concave) surface over the feasible polytope
//! when the corner certificate does not apply.
//!
//! Both searches are exchange-direction ascents with exact one-dimensional
//! line searches. The directions are the circuits of the constraint system
//! (single coordinates and pairwise exchanges that keep the weighted sum
//! fixed), which is enough for ascent to reach the maximum of a smooth
//! concave function over the region.

use rug::Rational;

use crate::numerics::Real;
use crate::surface::{round_down, CornerData, Evaluator};

/// Index 0 is `x`; index `l` (1-based) is `t_l`.
type Direction = Vec<(usize, i64)>;

pub(crate) struct Polytope {
    /// Upper bounds for `(x, t_1, ..., t_m)`.
    upper: Vec<Real>,
    /// Right side of `sum (l+1) t_l <= budget`.
    budget: Real,
}

impl Polytope {
    pub fn new(s: &Real, cd: &CornerData, budget: &Rational, prec: u32) -> Self {
        let mut upper = vec![s.clone()];
        upper.extend(cd.t_bar_real(prec));
        Polytope {
            upper,
            budget: round_down(budget, prec),
        }
    }

    fn weighted(&self, v: &[Real]) -> Real {
        let p = v[0].prec();
        v.iter()
            .enumerate()
            .skip(1)
            .fold(Real::zero(p), |acc, (l, t)| acc + &(t * (l as i64 + 1)))
    }

    /// Feasible step interval `[lo, hi]` (containing 0) along `d`.
    fn step_range(&self, v: &[Real], d: &Direction) -> (Real, Real) {
        let p = v[0].prec();
        let mut lo: Option<Real> = None;
        let mut hi: Option<Real> = None;
        let mut tighten = |bound: Real, upper: bool| {
            let slot = if upper { &mut hi } else { &mut lo };
            *slot = Some(match slot.take() {
                None => bound,
                Some(b) => {
                    if upper {
                        b.min_of(&bound).clone()
                    } else {
                        b.max_of(&bound).clone()
                    }
                }
            });
        };
        let mut wd = 0i64;
        for &(i, c) in d {
            let cr = Real::with_val(p, c);
            let to_upper = (&self.upper[i] - &v[i]) / &cr;
            let to_lower = (-&v[i]) / &cr;
            if c > 0 {
                tighten(to_upper, true);
                tighten(to_lower, false);
            } else {
                tighten(to_upper, false);
                tighten(to_lower, true);
            }
            if i > 0 {
                wd += (i as i64 + 1) * c;
            }
        }
        if wd != 0 {
            let room = (&self.budget - &self.weighted(v)) / wd;
            tighten(room, wd > 0);
        }
        let zero = Real::zero(p);
        let lo = lo.unwrap_or_else(|| zero.clone()).min_of(&zero).clone();
        let hi = hi.unwrap_or_else(|| zero.clone()).max_of(&zero).clone();
        (lo, hi)
    }
}

/// Greedy feasible point on the tight face: start from `t_bar` and lower
/// `t_1, t_2, ...` in turn until the weighted sum meets the budget. Equals
/// `A_1` whenever `t*_1 >= 0`.
pub(crate) fn face_start(cd: &CornerData, budget: &Rational) -> Vec<Rational> {
    let mut t = cd.t_bar.clone();
    let mut excess: Rational = t
        .iter()
        .enumerate()
        .map(|(l, v)| Rational::from(l as u32 + 2) * v)
        .sum::<Rational>()
        - budget;
    for (l, tl) in t.iter_mut().enumerate() {
        if excess <= 0 {
            break;
        }
        let w = Rational::from(l as u32 + 2);
        let cut = Rational::from(&excess / &w).min(tl.clone());
        excess -= Rational::from(&cut * &w);
        *tl -= cut;
    }
    t
}

fn directions(m: usize, with_free: bool) -> Vec<Direction> {
    let mut dirs = Vec::new();
    if with_free {
        dirs.push(vec![(0, 1)]);
        for l in 1..=m {
            dirs.push(vec![(l, 1)]);
        }
    }
    for i in 1..=m {
        for j in i + 1..=m {
            dirs.push(vec![(i, j as i64 + 1), (j, -(i as i64 + 1))]);
        }
    }
    dirs
}

pub(crate) struct Ascent<'a> {
    ev: &'a Evaluator,
    poly: Polytope,
    prec: u32,
    max_sweeps: usize,
}

pub(crate) struct AscentResult {
    pub value: Real,
    pub point: Vec<Real>,
}

impl<'a> Ascent<'a> {
    pub fn new(ev: &'a Evaluator, poly: Polytope) -> Self {
        let prec = ev.prec();
        Ascent {
            ev,
            poly,
            prec,
            max_sweeps: 400,
        }
    }

    fn value(&self, v: &[Real]) -> Option<Real> {
        self.ev.value(&v[0], &v[1..]).ok()
    }

    /// Sign-relevant directional derivative at `v`; `None` means the
    /// derivative is infinite, positive when the returned flag is true.
    fn dir_derivative(&self, v: &[Real], d: &Direction) -> Result<Real, bool> {
        for &(i, c) in d {
            if i > 0 && !v[i].is_positive() {
                return Err(c > 0);
            }
        }
        if d.iter().any(|&(i, _)| i == 0) && v[0] >= *self.ev.s() {
            return Err(false);
        }
        let g = self.ev.gradient_parts(
            &v[0],
            &v[1..],
            &d.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
        );
        let mut acc = Real::zero(self.prec);
        for (gi, &(_, c)) in g.iter().zip(d) {
            acc = acc + &(gi * c);
        }
        Ok(acc)
    }

    fn point_at(&self, v: &[Real], d: &Direction, lambda: &Real) -> Vec<Real> {
        let mut w = v.to_vec();
        for &(i, c) in d {
            let moved = &w[i] + &(lambda * c);
            w[i] = if moved.is_negative() {
                Real::zero(self.prec)
            } else if moved > self.poly.upper[i] {
                self.poly.upper[i].clone()
            } else {
                moved
            };
        }
        w
    }

    /// Exact line search on the concave slope: Illinois steps while both
    /// bracket slopes are finite, bisection otherwise, until the bracket is
    /// `2^{-(prec/2+16)}` of the range or the step stalls. Returns the best of
    /// the last iterate, the bracket ends and the range ends.
    fn line_search(&self, v: &[Real], fv: &Real, d: &Direction) -> Option<(Vec<Real>, Real)> {
        let (lo0, hi0) = self.poly.step_range(v, d);
        let range = &hi0 - &lo0;
        if range.is_zero() {
            return None;
        }
        let slope = |lam: &Real| self.dir_derivative(&self.point_at(v, d, lam), d);
        let iters = self.prec / 2 + 16;
        let tol = &range * &Real::pow2(-(iters as i32), self.prec);
        let mut lo = lo0.clone();
        let mut hi = hi0.clone();
        let slope_lo = slope(&lo);
        let slope_hi = slope(&hi);
        // Concave along the line: a sign that does not change means the
        // maximum sits at an end of the range.
        let rising = |g: &std::result::Result<Real, bool>| match g {
            Ok(g) => !g.is_negative(),
            Err(pos) => *pos,
        };
        let end = if rising(&slope_hi) {
            Some(&hi0)
        } else if !rising(&slope_lo) {
            Some(&lo0)
        } else {
            None
        };
        if let Some(lam) = end {
            let w = self.point_at(v, d, lam);
            return self.value(&w).filter(|f| f > fv).map(|f| (w, f));
        }
        let mut glo = slope_lo.ok();
        let mut ghi = slope_hi.ok();
        let mut last: Option<Real> = None;
        let mut side = 0i8;
        for _ in 0..iters {
            if &hi - &lo <= tol {
                break;
            }
            let mid = match (&glo, &ghi) {
                (Some(gl), Some(gh)) if gl.is_positive() && gh.is_negative() => {
                    let t = &hi - &(gh * &(&hi - &lo) / (gh - gl));
                    if t > lo && t < hi {
                        t
                    } else {
                        (&lo + &hi) / 2
                    }
                }
                _ => (&lo + &hi) / 2,
            };
            let stalled = last.as_ref().is_some_and(|l| (&mid - l).abs() <= tol);
            last = Some(mid.clone());
            let g = slope(&mid);
            let up = match &g {
                Ok(g) if g.is_zero() => break,
                Ok(g) => g.is_positive(),
                Err(pos) => *pos,
            };
            if up {
                lo = mid;
                glo = g.ok();
                if side == 1 {
                    ghi = ghi.map(|x| x / 2);
                }
                side = 1;
            } else {
                hi = mid;
                ghi = g.ok();
                if side == -1 {
                    glo = glo.map(|x| x / 2);
                }
                side = -1;
            }
            if stalled {
                break;
            }
        }
        let mut best: Option<(Vec<Real>, Real)> = None;
        for lam in last.into_iter().chain([lo, hi, lo0, hi0]) {
            let w = self.point_at(v, d, &lam);
            if let Some(f) = self.value(&w) {
                if best.as_ref().is_none_or(|(_, b)| f > *b) {
                    best = Some((w, f));
                }
            }
        }
        best.filter(|(_, f)| f > fv)
    }

    fn run(&self, start: Vec<Real>, dirs: &[Direction]) -> AscentResult {
        let mut v = start;
        let mut f = self.value(&v).expect("start point is evaluable");
        let mut sweeps = 0;
        while sweeps < self.max_sweeps {
            sweeps += 1;
            let before = f.clone();
            for d in dirs {
                if let Some((w, fw)) = self.line_search(&v, &f, d) {
                    v = w;
                    f = fw;
                }
            }
            let gain = &f - &before;
            let tol = f.abs().max_of(&Real::one(self.prec)).ulp() * 8;
            if gain <= tol {
                break;
            }
        }
        AscentResult { value: f, point: v }
    }

    /// Maximum over the tight face at `x = 0`.
    pub fn face(&self, start_t: Vec<Real>) -> AscentResult {
        let m = start_t.len();
        let mut v = vec![Real::zero(self.prec)];
        v.extend(start_t);
        self.run(v, &directions(m, false))
    }

    /// Maximum over the whole region.
    pub fn full(&self, start: Vec<Real>) -> AscentResult {
        let m = start.len() - 1;
        self.run(start, &directions(m, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::corner_data;

    fn q(s: &str) -> Rational {
        crate::numerics::parse_rational(s).unwrap()
    }

    #[test]
    fn face_start_is_a1_when_t_star_nonnegative() {
        let xs: Vec<Real> = ["0.01", "0.002", "0.0003"]
            .iter()
            .map(|s| Real::parse(s, 128).unwrap())
            .collect();
        let cd = corner_data(&xs).unwrap();
        let w: Rational = xs
            .iter()
            .enumerate()
            .map(|(l, x)| Rational::from(l as u32 + 2) * x.to_rational())
            .sum();
        let budget = Rational::from(2) * w;
        assert_eq!(face_start(&cd, &budget), cd.a_point_exact(1));
    }

    #[test]
    fn face_start_stays_feasible_when_t_star_negative() {
        // x_1 = 0 makes t*_1 negative for m = 3.
        let xs: Vec<Real> = ["0", "0", "1/8"]
            .iter()
            .map(|s| Real::parse(s, 128).unwrap())
            .collect();
        let cd = corner_data(&xs).unwrap();
        assert!(cd.t_star[0] < 0);
        let budget = Rational::from(2) * q("4/8");
        let t = face_start(&cd, &budget);
        assert!(t.iter().all(|v| *v >= 0));
        let w: Rational = t
            .iter()
            .enumerate()
            .map(|(l, v)| Rational::from(l as u32 + 2) * v)
            .sum();
        assert_eq!(w, budget);
    }
}
