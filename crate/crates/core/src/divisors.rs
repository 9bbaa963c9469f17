//! Places and positive divisors of the rational function field `F_q(x)` over
//! a small prime field, with brute-force and closed-form counts of the divisor
//! families used in the existence argument.
//!
//! The model has genus 0 and class number 1. Rational places are listed
//! first, as `x, x+1, ..., x+(q-1), inf`; places of higher degree follow in
//! increasing degree.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{input, Error, Result};

pub const SUPPORTED_Q: [u64; 3] = [2, 3, 5];
pub const DEGREE_CAP: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceKind {
    /// Monic irreducible polynomial, coefficients from the constant term up
    /// (the leading 1 included).
    Finite(Vec<u8>),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Place {
    pub kind: PlaceKind,
    pub degree: u32,
}

impl Place {
    pub fn is_rational(&self) -> bool {
        self.degree == 1
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs = match &self.kind {
            PlaceKind::Infinite => return write!(f, "inf"),
            PlaceKind::Finite(c) => c,
        };
        let mut terms = Vec::new();
        for (e, &c) in coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mono = match e {
                0 => String::new(),
                1 => "x".to_string(),
                _ => format!("x^{e}"),
            };
            terms.push(match (c, e) {
                (_, 0) => c.to_string(),
                (1, _) => mono,
                _ => format!("{c}{mono}"),
            });
        }
        write!(f, "{}", terms.join("+"))
    }
}

/// All places of `F_q(x)` up to a degree cap.
#[derive(Clone, Debug)]
pub struct FunctionFieldModel {
    q: u64,
    max_degree: u32,
    places: Vec<Place>,
    n: usize,
}

impl FunctionFieldModel {
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }
    pub fn places(&self) -> &[Place] {
        &self.places
    }
    /// Number of rational places, `q + 1`.
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn rational_places(&self) -> &[Place] {
        &self.places[..self.n]
    }
    pub fn genus(&self) -> u32 {
        0
    }
    pub fn class_number(&self) -> u64 {
        1
    }

    pub fn places_of_degree(&self, d: u32) -> usize {
        self.places.iter().filter(|p| p.degree == d).count()
    }

    fn check_cap(&self, degree: i64) -> Result<()> {
        if degree > self.max_degree as i64 {
            return Err(input(format!(
                "degree {degree} exceeds the model's place cap {}",
                self.max_degree
            )));
        }
        Ok(())
    }

    /// `N_k` for `k = 0..=upto`: positive divisors of degree `k` supported
    /// off the rational places.
    pub fn off_rational_counts(&self, upto: u32) -> Result<Vec<u64>> {
        self.check_cap(upto as i64)?;
        let mut counts = vec![0u64; upto as usize + 1];
        counts[0] = 1;
        for p in &self.places[self.n..] {
            let d = p.degree as usize;
            for k in d..=upto as usize {
                counts[k] += counts[k - d];
            }
        }
        Ok(counts)
    }
}

/// `(1/d) sum_{e | d} mu(e) q^{d/e}`: the number of monic irreducibles of
/// degree `d` over `F_q`.
pub fn necklace_count(q: u64, d: u32) -> u64 {
    let mut acc: i64 = 0;
    for e in 1..=d {
        if d.is_multiple_of(e) {
            acc += mobius(e) * (q as i64).pow(d / e);
        }
    }
    (acc / d as i64) as u64
}

fn mobius(mut n: u32) -> i64 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Coefficients of the monic polynomial of degree `d` with index `idx`
/// (base-`q` digits of `idx` are the lower coefficients).
fn monic_from_index(q: u64, d: u32, mut idx: u64) -> Vec<u8> {
    let mut c = Vec::with_capacity(d as usize + 1);
    for _ in 0..d {
        c.push((idx % q) as u8);
        idx /= q;
    }
    c.push(1);
    c
}

fn monic_index(q: u64, c: &[u8]) -> u64 {
    c[..c.len() - 1]
        .iter()
        .rev()
        .fold(0u64, |acc, &v| acc * q + v as u64)
}

fn poly_mul(q: u64, a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x as u64 * y as u64;
        }
    }
    out.into_iter().map(|v| (v % q) as u8).collect()
}

/// Every place of degree `<= max_degree`. Finite places come from a sieve
/// that marks each product of a low-degree irreducible with a monic cofactor.
pub fn enumerate_places(q: u64, max_degree: u32) -> Result<FunctionFieldModel> {
    if !SUPPORTED_Q.contains(&q) {
        return Err(input(format!("q = {q} is not supported (use 2, 3 or 5)")));
    }
    if max_degree == 0 || max_degree > DEGREE_CAP {
        return Err(input(format!(
            "max_degree must lie in 1..={DEGREE_CAP}, got {max_degree}"
        )));
    }
    let mut places: Vec<Place> = (0..q)
        .map(|a| Place {
            kind: PlaceKind::Finite(vec![a as u8, 1]),
            degree: 1,
        })
        .collect();
    places.push(Place {
        kind: PlaceKind::Infinite,
        degree: 1,
    });
    let n = places.len();

    let mut irreducible: Vec<Vec<Vec<u8>>> = vec![Vec::new(); max_degree as usize + 1];
    irreducible[1] = (0..q).map(|a| vec![a as u8, 1]).collect();
    for d in 2..=max_degree {
        let total = q.pow(d) as usize;
        let mut reducible = vec![false; total];
        for e in 1..=d / 2 {
            for f in &irreducible[e as usize] {
                for g in 0..q.pow(d - e) {
                    let prod = poly_mul(q, f, &monic_from_index(q, d - e, g));
                    reducible[monic_index(q, &prod) as usize] = true;
                }
            }
        }
        irreducible[d as usize] = (0..total as u64)
            .filter(|&i| !reducible[i as usize])
            .map(|i| monic_from_index(q, d, i))
            .collect();
        for c in &irreducible[d as usize] {
            places.push(Place {
                kind: PlaceKind::Finite(c.clone()),
                degree: d,
            });
        }
    }
    Ok(FunctionFieldModel {
        q,
        max_degree,
        places,
        n,
    })
}

/// A positive divisor: place index (into [`FunctionFieldModel::places`]) to
/// multiplicity `v_P(D) >= 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Divisor {
    support: BTreeMap<usize, u32>,
}

impl Divisor {
    pub fn zero() -> Self {
        Divisor::default()
    }

    /// Zero multiplicities are dropped; repeated places add up.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut d = Divisor::zero();
        for (p, k) in pairs {
            d.add(p, k);
        }
        d
    }

    pub fn add(&mut self, place: usize, k: u32) {
        if k > 0 {
            *self.support.entry(place).or_insert(0) += k;
        }
    }

    pub fn v(&self, place: usize) -> u32 {
        self.support.get(&place).copied().unwrap_or(0)
    }

    pub fn support(&self) -> &BTreeMap<usize, u32> {
        &self.support
    }

    pub fn degree(&self, model: &FunctionFieldModel) -> u32 {
        self.support
            .iter()
            .map(|(&p, &k)| k * model.places[p].degree)
            .sum()
    }

    pub fn display(&self, model: &FunctionFieldModel) -> String {
        if self.support.is_empty() {
            return "0".into();
        }
        self.support
            .iter()
            .map(|(&p, &k)| {
                if k == 1 {
                    format!("({})", model.places[p])
                } else {
                    format!("{k}({})", model.places[p])
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// All positive divisors of degree `d`.
pub fn divisors_of_degree(model: &FunctionFieldModel, d: u32) -> Result<Vec<Divisor>> {
    model.check_cap(d as i64)?;
    let mut out = Vec::new();
    let mut cur = Vec::new();
    compose(model, 0, d, &mut cur, &mut out);
    Ok(out)
}

fn compose(
    model: &FunctionFieldModel,
    idx: usize,
    remaining: u32,
    cur: &mut Vec<(usize, u32)>,
    out: &mut Vec<Divisor>,
) {
    if remaining == 0 {
        out.push(Divisor::from_pairs(cur.iter().copied()));
        return;
    }
    let Some(place) = model.places.get(idx) else {
        return;
    };
    if place.degree > remaining {
        return;
    }
    compose(model, idx + 1, remaining, cur, out);
    for k in 1..=remaining / place.degree {
        cur.push((idx, k));
        compose(model, idx + 1, remaining - k * place.degree, cur, out);
        cur.pop();
    }
}

/// `D_bar = sum min(m+1, v_{P_i}(D)) P_i` over the rational places.
pub fn truncated_divisor(d: &Divisor, m: u32, model: &FunctionFieldModel) -> Divisor {
    Divisor::from_pairs((0..model.n).map(|i| (i, d.v(i).min(m + 1))))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct JProfile {
    /// `j[l] = #{i : v_{P_i}(D) = m - l}` for `l = 0..=m`.
    pub j: Vec<u32>,
    /// `J_m = sum_{l>=1} (l+1) j_l`.
    pub big_j: u32,
}

pub fn j_profile(d: &Divisor, m: u32, model: &FunctionFieldModel) -> JProfile {
    let mut j = vec![0u32; m as usize + 1];
    for i in 0..model.n {
        let v = d.v(i);
        if v <= m {
            j[(m - v) as usize] += 1;
        }
    }
    let big_j = j
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, c)| (l as u32 + 1) * c)
        .sum();
    JProfile { j, big_j }
}

/// `deg(D_bar) + sum_{l=0}^m (l+1) j_l = (m+1) n`.
pub fn degree_identity_check(d: &Divisor, m: u32, model: &FunctionFieldModel) -> bool {
    let bar = truncated_divisor(d, m, model).degree(model);
    let jp = j_profile(d, m, model);
    let weighted: u32 =
        jp.j.iter()
            .enumerate()
            .map(|(l, c)| (l as u32 + 1) * c)
            .sum();
    bar + weighted == (m + 1) * model.n as u32
}

/// Right sides of the cascading bounds `j_l <= 2X_l + sum_{nu>l} X_nu`,
/// indexed `l - 1`.
fn cascade_bounds(xs: &[u32]) -> Vec<u32> {
    (0..xs.len())
        .map(|l| 2 * xs[l] + xs[l + 1..].iter().sum::<u32>())
        .collect()
}

fn weighted_budget(xs: &[u32]) -> u32 {
    2 * xs
        .iter()
        .enumerate()
        .map(|(l, x)| (l as u32 + 2) * x)
        .sum::<u32>()
}

/// Membership in `V_m(r, s; X_1..X_m)`. Panics if `xs.len() != m`.
pub fn vm_member(
    d: &Divisor,
    r: u32,
    s: u32,
    xs: &[u32],
    m: u32,
    model: &FunctionFieldModel,
) -> bool {
    assert_eq!(xs.len(), m as usize, "one X per level");
    if d.degree(model) != r || truncated_divisor(d, m, model).degree(model) < s {
        return false;
    }
    let jp = j_profile(d, m, model);
    let cascade = cascade_bounds(xs)
        .iter()
        .enumerate()
        .all(|(l, b)| jp.j[l + 1] <= *b);
    cascade && jp.big_j <= weighted_budget(xs)
}

/// `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// `C_{a,b}` from the off-rational divisor counts: a divisor with rational
/// support exactly a fixed `b`-set splits into a composition of its rational
/// degree into `b` positive parts and an off-rational divisor.
/// Zero when `a < b` or `b < 0`.
pub fn c_ab_formula(a: i64, b: i64, model: &FunctionFieldModel) -> Result<u64> {
    if b < 0 || a < b || b > model.n as i64 {
        return Ok(0);
    }
    model.check_cap(a)?;
    let off = model.off_rational_counts(a as u32)?;
    let compositions = |s: i64| -> u64 {
        if b == 0 {
            u64::from(s == 0)
        } else {
            binomial(s - 1, b - 1)
        }
    };
    Ok((0..=a).map(|k| off[k as usize] * compositions(a - k)).sum())
}

/// `C_{a,b}` by enumeration of all degree-`a` divisors, for three random
/// `b`-subsets of the rational places (seeded), which must agree.
pub fn count_exact_support(a: u32, b: u32, model: &FunctionFieldModel, seed: u64) -> Result<u64> {
    if b > a || b as usize > model.n {
        return Err(input(format!(
            "need a >= b >= 0 and b <= n = {}, got a = {a}, b = {b}",
            model.n
        )));
    }
    let all = divisors_of_degree(model, a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::new();
    for _ in 0..3 {
        let chosen: HashSet<usize> = sample(&mut rng, model.n, b as usize).into_iter().collect();
        let c = all
            .iter()
            .filter(|d| (0..model.n).all(|i| (d.v(i) > 0) == chosen.contains(&i)))
            .count() as u64;
        counts.push(c);
    }
    if counts.iter().any(|c| *c != counts[0]) {
        return Err(Error::Internal(format!(
            "C_{{{a},{b}}} depends on the chosen support: {counts:?}"
        )));
    }
    Ok(counts[0])
}

/// `(t, j_1..j_m)` of a divisor: `t = deg(D_bar)`.
pub type UTag = (u32, Vec<u32>);

pub fn u_tag(d: &Divisor, m: u32, model: &FunctionFieldModel) -> UTag {
    let t = truncated_divisor(d, m, model).degree(model);
    let jp = j_profile(d, m, model);
    (t, jp.j[1..].to_vec())
}

/// Counts of degree-`r` divisors by [`UTag`].
pub fn u_histogram(r: u32, m: u32, model: &FunctionFieldModel) -> Result<HashMap<UTag, u64>> {
    let mut hist = HashMap::new();
    for d in divisors_of_degree(model, r)? {
        *hist.entry(u_tag(&d, m, model)).or_insert(0) += 1;
    }
    Ok(hist)
}

fn u_sums(js: &[u32]) -> (i64, i64) {
    let w: i64 = js
        .iter()
        .enumerate()
        .map(|(l, j)| (l as i64 + 1) * *j as i64)
        .sum();
    let w1: i64 = js
        .iter()
        .enumerate()
        .map(|(l, j)| (l as i64 + 2) * *j as i64)
        .sum();
    (w, w1)
}

/// Product of binomials times `C_{r-mn+w, t-mn+w}` with `w = sum l j_l`.
pub fn count_u_formula(r: u32, t: u32, js: &[u32], model: &FunctionFieldModel) -> Result<u64> {
    let m = js.len() as i64;
    let n = model.n as i64;
    let (w, _) = u_sums(js);
    let mut acc: u64 = 1;
    let mut used = 0i64;
    for j in js.iter().rev() {
        acc *= binomial(n - used, *j as i64);
        used += *j as i64;
    }
    let e = t as i64 - m * n + w;
    acc *= binomial(n - used, e);
    if acc == 0 {
        return Ok(0);
    }
    Ok(acc * c_ab_formula(r as i64 - m * n + w, e, model)?)
}

/// `U(r, t; j)` is nonempty iff `mn - sum l j_l <= t <= (m+1)n - sum (l+1) j_l`
/// and, when the lower bound is tight (no rational place can absorb extra
/// degree), a positive divisor of degree `r - t` exists off the rational
/// places; in genus 0 that means `r - t != 1`.
pub fn u_nonempty_predicted(r: u32, t: u32, js: &[u32], n: usize) -> bool {
    let m = js.len() as i64;
    let n = n as i64;
    let (w, w1) = u_sums(js);
    let (r, t) = (r as i64, t as i64);
    let lo = m * n - w;
    let hi = (m + 1) * n - w1;
    r >= t && lo <= t && t <= hi && (t > lo || r - t != 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UCount {
    pub formula: u64,
    pub brute: u64,
    pub nonempty_predicted: bool,
}

/// `|U(r, t; j_1..j_m)|` by formula and by enumeration, with the predicted
/// emptiness.
pub fn count_u(r: u32, t: u32, js: &[u32], model: &FunctionFieldModel) -> Result<UCount> {
    if t > r {
        return Err(input(format!("need r >= t, got r = {r}, t = {t}")));
    }
    if js.is_empty() {
        return Err(input("j-vector must have length m >= 1"));
    }
    let m = js.len() as u32;
    let formula = count_u_formula(r, t, js, model)?;
    let brute = divisors_of_degree(model, r)?
        .iter()
        .filter(|d| u_tag(d, m, model) == (t, js.to_vec()))
        .count() as u64;
    Ok(UCount {
        formula,
        brute,
        nonempty_predicted: u_nonempty_predicted(r, t, js, model.n),
    })
}

/// Index set of the disjoint decomposition of `V_m(r, s; X)`: the admissible
/// j-tuples and, for each, the range of `t`.
pub fn vm_decomposition(r: u32, s: u32, xs: &[u32], n: usize) -> Vec<UTag> {
    let m = xs.len() as i64;
    let n = n as i64;
    let bounds = cascade_bounds(xs);
    let budget = weighted_budget(xs) as i64;
    let mut out = Vec::new();
    let mut js = vec![0u32; xs.len()];
    loop {
        let (w, w1) = u_sums(&js);
        if w1 <= budget {
            let lo = (s as i64).max(m * n - w);
            let hi = (r as i64).min((m + 1) * n - w1);
            for t in lo.max(0)..=hi {
                out.push((t as u32, js.clone()));
            }
        }
        // odometer over 0..=bounds
        let mut k = 0;
        loop {
            if k == js.len() {
                return out;
            }
            if js[k] < bounds[k] {
                js[k] += 1;
                break;
            }
            js[k] = 0;
            k += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VmCount {
    pub sum_formula: u64,
    pub brute: u64,
    /// Every index of the decomposition is listed once, and a degree-`r`
    /// divisor is a member iff its tag is one of the indices.
    pub disjoint_union: bool,
}

/// `|V_m(r, s; X)|` as a sum of [`count_u_formula`] over the decomposition,
/// and by enumeration.
pub fn count_vm(r: u32, s: u32, xs: &[u32], model: &FunctionFieldModel) -> Result<VmCount> {
    if xs.is_empty() {
        return Err(input("X-vector must have length m >= 1"));
    }
    let m = xs.len() as u32;
    let index = vm_decomposition(r, s, xs, model.n);
    let mut sum_formula = 0;
    for (t, js) in &index {
        sum_formula += count_u_formula(r, *t, js, model)?;
    }
    let tags: HashSet<&UTag> = index.iter().collect();
    let mut disjoint_union = tags.len() == index.len();
    let mut brute = 0;
    for d in divisors_of_degree(model, r)? {
        let member = vm_member(&d, r, s, xs, m, model);
        brute += u64::from(member);
        disjoint_union &= member == tags.contains(&u_tag(&d, m, model));
    }
    Ok(VmCount {
        sum_formula,
        brute,
        disjoint_union,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(q: u64, d: u32) -> FunctionFieldModel {
        enumerate_places(q, d).unwrap()
    }

    #[test]
    fn rational_places_and_small_degrees() {
        let m2 = model(2, 2);
        let names: Vec<String> = m2.rational_places().iter().map(|p| p.to_string()).collect();
        assert_eq!(names, ["x", "x+1", "inf"]);
        assert_eq!(m2.n(), 3);
        assert_eq!(m2.places_of_degree(2), 1);
        assert_eq!(m2.places[3].to_string(), "x^2+x+1");
        assert_eq!(model(3, 2).places_of_degree(2), 3);
    }

    #[test]
    fn place_counts_follow_necklaces() {
        for (q, cap) in [(2, 8), (3, 6), (5, 4)] {
            let md = model(q, cap);
            assert_eq!(md.places_of_degree(1), q as usize + 1);
            for d in 2..=cap {
                assert_eq!(
                    md.places_of_degree(d) as u64,
                    necklace_count(q, d),
                    "q={q} d={d}"
                );
            }
        }
        assert_eq!(necklace_count(2, 8), 30);
        assert_eq!(necklace_count(5, 4), 150);
    }

    #[test]
    fn unsupported_inputs() {
        assert!(matches!(enumerate_places(4, 2), Err(Error::Input(_))));
        assert!(matches!(enumerate_places(2, 9), Err(Error::Input(_))));
        let md = model(2, 3);
        assert!(matches!(divisors_of_degree(&md, 4), Err(Error::Input(_))));
    }

    #[test]
    fn divisor_counts_match_zeta() {
        // genus 0: (q^{d+1} - 1)/(q - 1) positive divisors of degree d
        for (q, cap) in [(2u64, 6u32), (3, 4)] {
            let md = model(q, cap);
            for d in 0..=cap {
                let got = divisors_of_degree(&md, d).unwrap().len() as u64;
                assert_eq!(got, (q.pow(d + 1) - 1) / (q - 1));
            }
        }
    }

    #[test]
    fn truncation_and_profiles() {
        let md = model(2, 3);
        let m = 2;
        let zero = Divisor::zero();
        assert_eq!(truncated_divisor(&zero, m, &md), zero);
        let d = Divisor::from_pairs([(0, m + 2)]);
        assert_eq!(
            truncated_divisor(&d, m, &md),
            Divisor::from_pairs([(0, m + 1)])
        );
        let off = Divisor::from_pairs([(3, 2)]);
        assert_eq!(truncated_divisor(&off, m, &md), zero);

        let jp = j_profile(&zero, m, &md);
        assert_eq!(jp.j, vec![0, 0, 3]);
        assert_eq!(jp.big_j, 9);
        let all = Divisor::from_pairs([(0, 1), (1, 1), (2, 1)]);
        let jp = j_profile(&all, 1, &md);
        assert_eq!((jp.j, jp.big_j), (vec![3, 0], 0));
        // 2 inf + x
        let d = Divisor::from_pairs([(2, 2), (0, 1)]);
        let jp = j_profile(&d, 2, &md);
        assert_eq!((jp.j, jp.big_j), (vec![1, 1, 1], 5));
        assert!(degree_identity_check(&d, 2, &md));
        let high = Divisor::from_pairs([(0, 3), (1, 4), (2, 3)]);
        assert!(degree_identity_check(&high, 2, &md));
        assert_eq!(j_profile(&high, 2, &md).j, vec![0, 0, 0]);
    }

    #[test]
    fn identity_on_all_small_divisors() {
        for (q, cap) in [(2, 6), (3, 5)] {
            let md = model(q, cap);
            for d in 0..=cap {
                for dv in divisors_of_degree(&md, d).unwrap() {
                    for m in 1..=3 {
                        assert!(degree_identity_check(&dv, m, &md));
                        let bar = truncated_divisor(&dv, m, &md).degree(&md);
                        assert!(bar <= d.min((m + 1) * md.n() as u32));
                    }
                }
            }
        }
    }

    #[test]
    fn membership_examples() {
        let md = model(2, 6);
        // Xs = 0 forces every rational v >= m
        for dv in divisors_of_degree(&md, 5).unwrap() {
            if vm_member(&dv, 5, 0, &[0, 0], 2, &md) {
                assert!(j_profile(&dv, 2, &md).j[1..].iter().all(|j| *j == 0));
            }
        }
        let m = 1;
        let d = Divisor::from_pairs([(0, 4)]);
        assert!(vm_member(&d, 4, 2, &[5], m, &md));
        assert!(!vm_member(&d, 4, 3, &[5], m, &md));
        assert!(!vm_member(&d, 5, 0, &[5], m, &md));
    }

    #[test]
    fn exact_support_counts() {
        let md = model(2, 6);
        assert_eq!(count_exact_support(1, 1, &md, 0).unwrap(), 1);
        assert_eq!(count_exact_support(3, 1, &md, 0).unwrap(), 2);
        assert_eq!(count_exact_support(2, 2, &md, 0).unwrap(), 1);
        for a in 0..=6u32 {
            for b in 0..=a.min(3) {
                let brute = count_exact_support(a, b, &md, a as u64).unwrap();
                assert_eq!(
                    brute,
                    c_ab_formula(a as i64, b as i64, &md).unwrap(),
                    "a={a} b={b}"
                );
            }
        }
        assert!(count_exact_support(7, 1, &md, 0).is_err());
    }

    #[test]
    fn u_counts_small() {
        let md = model(2, 5);
        let c = count_u(3, 3, &[0], &md).unwrap();
        assert_eq!((c.formula, c.brute), (1, 1));
        assert!(c.nonempty_predicted);
        // sum (l+1) j_l > (m+1)n - t
        let c = count_u(4, 4, &[2], &md).unwrap();
        assert_eq!((c.formula, c.brute, c.nonempty_predicted), (0, 0, false));
        // r - t = 1 with the lower bound tight: nothing off the rational places
        let c = count_u(4, 3, &[0], &md).unwrap();
        assert_eq!((c.formula, c.brute, c.nonempty_predicted), (0, 0, false));
    }

    #[test]
    fn u_formula_matches_enumeration() {
        for (q, rmax) in [(2u64, 5u32), (3, 4)] {
            let md = model(q, rmax);
            for m in 1..=2u32 {
                for r in 0..=rmax {
                    let hist = u_histogram(r, m, &md).unwrap();
                    for t in 0..=r {
                        for code in 0..4u32.pow(m) {
                            let js: Vec<u32> = (0..m).map(|l| code / 4u32.pow(l) % 4).collect();
                            let brute = hist.get(&(t, js.clone())).copied().unwrap_or(0);
                            let f = count_u_formula(r, t, &js, &md).unwrap();
                            assert_eq!(f, brute, "q={q} m={m} r={r} t={t} js={js:?}");
                            assert_eq!(u_nonempty_predicted(r, t, &js, md.n()), brute > 0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vm_counts() {
        let md = model(2, 6);
        let c = count_vm(4, 3, &[1], &md).unwrap();
        assert_eq!(c.sum_formula, c.brute);
        assert!(c.disjoint_union);
        assert_eq!(c.brute, 12);
        // Xs = 0 and r < mn
        let c = count_vm(5, 0, &[0, 0], &md).unwrap();
        assert_eq!((c.sum_formula, c.brute), (0, 0));
        let c = count_vm(2, 3, &[1], &md).unwrap();
        assert_eq!((c.sum_formula, c.brute), (0, 0));
    }
}
