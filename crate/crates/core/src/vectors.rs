//! Index sets of block vectors in `F_q^{mn}`, the `M`-sets built from them,
//! and a toy genus-0 realization of the local-expansion maps `Phi` and `psi`.
//!
//! A block is `(alpha_1, ..., alpha_m)`; position `l - 1` holds `alpha_l`.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{input, Error, Result};

/// Exhaustive searches are refused above this many vectors.
pub const EXHAUSTIVE_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IndexedVector {
    q: u64,
    m: usize,
    blocks: Vec<Vec<u8>>,
}

impl IndexedVector {
    pub fn new(q: u64, m: usize, blocks: Vec<Vec<u8>>) -> Result<Self> {
        if m == 0 || blocks.is_empty() {
            return Err(input("need m >= 1 and n >= 1"));
        }
        for b in &blocks {
            if b.len() != m {
                return Err(input(format!("every block must have length m = {m}")));
            }
            if b.iter().any(|&s| s as u64 >= q) {
                return Err(input(format!("symbols must lie in [0, {q})")));
            }
        }
        Ok(IndexedVector { q, m, blocks })
    }

    pub fn zero(q: u64, m: usize, n: usize) -> Self {
        IndexedVector {
            q,
            m,
            blocks: vec![vec![0; m]; n],
        }
    }

    /// The vector whose symbols (block by block, `alpha_1` first) are the
    /// base-`q` digits of `idx`.
    pub fn from_index(q: u64, m: usize, n: usize, mut idx: u64) -> Self {
        let mut v = IndexedVector::zero(q, m, n);
        for b in v.blocks.iter_mut() {
            for s in b.iter_mut() {
                *s = (idx % q) as u8;
                idx /= q;
            }
        }
        v
    }

    pub fn random<R: Rng>(q: u64, m: usize, n: usize, rng: &mut R) -> Self {
        let blocks = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0..q) as u8).collect())
            .collect();
        IndexedVector { q, m, blocks }
    }

    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.blocks.len()
    }
    pub fn blocks(&self) -> &[Vec<u8>] {
        &self.blocks
    }

    fn same_shape(&self, other: &IndexedVector) -> Result<()> {
        if self.q != other.q || self.m != other.m || self.n() != other.n() {
            return Err(input(format!(
                "shape mismatch: (q, m, n) = ({}, {}, {}) vs ({}, {}, {})",
                self.q,
                self.m,
                self.n(),
                other.q,
                other.m,
                other.n()
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &IndexedVector, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.same_shape(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| (op(x as u64, y as u64) % self.q) as u8)
                    .collect()
            })
            .collect();
        Ok(IndexedVector {
            q: self.q,
            m: self.m,
            blocks,
        })
    }

    pub fn add(&self, other: &IndexedVector) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &IndexedVector) -> Result<Self> {
        let q = self.q;
        self.zip_with(other, move |x, y| x + q - y)
    }
}

/// `[I_1, ..., I_m]` with 1-based positions: block `i` lies in `I_l` when
/// `alpha_l` is its last nonzero symbol.
pub fn index_sets(v: &IndexedVector) -> Vec<BTreeSet<usize>> {
    let mut sets = vec![BTreeSet::new(); v.m];
    for (i, b) in v.blocks.iter().enumerate() {
        if let Some(l) = b.iter().rposition(|&s| s != 0) {
            sets[l].insert(i + 1);
        }
    }
    sets
}

/// `sum_l (l+1) |I_l(v)|`.
pub fn weighted_index_sum(v: &IndexedVector) -> usize {
    index_sets(v)
        .iter()
        .enumerate()
        .map(|(l, s)| (l + 2) * s.len())
        .sum()
}

/// `floor(x_l n)` for each `l`.
pub fn floors(xs: &[Rational], n: usize) -> Vec<u64> {
    xs.iter()
        .map(|x| {
            let v = Rational::from(x * n as u32).floor();
            v.numer().to_u64().unwrap_or(0)
        })
        .collect()
}

fn check_xs(xs: &[Rational]) -> Result<()> {
    if xs.iter().any(|x| *x < 0) {
        return Err(input("x_l must be >= 0"));
    }
    if xs.iter().sum::<Rational>() > 1 {
        return Err(input("x_1 + ... + x_m must be <= 1"));
    }
    Ok(())
}

/// Number of vectors with `|I_l| = floor(x_l n)` for every `l`, a lower bound
/// on `|M(x; 0)|`. Zero when the floors add up to more than `n`.
pub fn m_set_lower_bound(xs: &[Rational], q: u64, n: usize) -> Result<Integer> {
    check_xs(xs)?;
    let k = floors(xs, n);
    if k.iter().sum::<u64>() > n as u64 {
        return Ok(Integer::new());
    }
    let mut acc = Integer::from(1);
    let mut left = n as u64;
    for (l, &kl) in k.iter().enumerate().rev() {
        let choose = Integer::from(left).binomial(kl as u32);
        acc *= choose
            * Integer::from(q - 1).pow(kl as u32)
            * Integer::from(q).pow((l as u64 * kl) as u32);
        left -= kl;
    }
    Ok(acc)
}

/// `|I_l(v - c)| <= bound_l` for every `l`.
pub fn in_m_set(v: &IndexedVector, c: &IndexedVector, bounds: &[u64]) -> Result<bool> {
    let d = v.sub(c)?;
    Ok(index_sets(&d)
        .iter()
        .zip(bounds)
        .all(|(s, b)| s.len() as u64 <= *b))
}

fn space_size(q: u64, m: usize, n: usize) -> Result<u64> {
    let size = (q as u128).pow((m * n) as u32);
    if size > EXHAUSTIVE_LIMIT as u128 {
        return Err(input(format!(
            "q^(mn) = {size} exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}"
        )));
    }
    Ok(size as u64)
}

/// `|M(x; c)|` by enumeration of `F_q^{mn}`.
pub fn m_set_count(xs: &[Rational], c: &IndexedVector) -> Result<u64> {
    check_xs(xs)?;
    if xs.len() != c.m {
        return Err(input("one x per level"));
    }
    let (q, m, n) = (c.q, c.m, c.n());
    let bounds = floors(xs, n);
    let mut count = 0;
    for idx in 0..space_size(q, m, n)? {
        count += u64::from(in_m_set(
            &IndexedVector::from_index(q, m, n, idx),
            c,
            &bounds,
        )?);
    }
    Ok(count)
}

/// Weighted index sum of `a - b` is at most the sum for `a` plus the sum for `b`.
pub fn check_subadditivity(a: &IndexedVector, b: &IndexedVector) -> Result<bool> {
    let d = a.sub(b)?;
    Ok(weighted_index_sum(&d) <= weighted_index_sum(a) + weighted_index_sum(b))
}

/// `I_l(a - b)` lies in `I_l(a) ∪ I_l(b) ∪ ⋃_{nu > l} (I_nu(a) ∩ I_nu(b))`.
pub fn check_containments(a: &IndexedVector, b: &IndexedVector) -> Result<bool> {
    let d = index_sets(&a.sub(b)?);
    let ia = index_sets(a);
    let ib = index_sets(b);
    for l in 0..a.m {
        let mut allowed: BTreeSet<usize> = ia[l].union(&ib[l]).copied().collect();
        for nu in l + 1..a.m {
            allowed.extend(ia[nu].intersection(&ib[nu]));
        }
        if !d[l].is_subset(&allowed) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn is_small_prime(q: u64) -> bool {
    matches!(q, 2 | 3 | 5 | 7)
}

/// Hasse derivatives `f^{(0)}(a), ..., f^{(count-1)}(a)`: the coefficients of
/// `f(a + t)` in powers of `t`.
pub fn hasse_coeffs(q: u64, f: &[u8], a: u8, count: usize) -> Vec<u8> {
    let mut out = vec![0u8; count];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = 0u64;
        let mut apow = 1u64;
        for (j, &c) in f.iter().enumerate().skip(k) {
            acc += binom_mod(j as u64, k as u64, q) * c as u64 % q * apow;
            acc %= q;
            apow = apow * a as u64 % q;
        }
        *slot = acc as u8;
    }
    out
}

/// `C(n, k) mod p` via Lucas.
fn binom_mod(mut n: u64, mut k: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while n > 0 || k > 0 {
        let (ni, ki) = (n % p, k % p);
        if ki > ni {
            return 0;
        }
        let mut c = 1u64;
        for i in 0..ki {
            c = c * (ni - i) / (i + 1);
        }
        acc = acc * (c % p) % p;
        n /= p;
        k /= p;
    }
    acc
}

/// One codeword of the toy construction.
#[derive(Clone, Debug, Serialize)]
pub struct ToyWord {
    /// Coefficients from the constant term up, padded to `r + 1`.
    pub f: Vec<u8>,
    pub phi: IndexedVector,
    pub psi: Vec<u8>,
}

/// `L(r inf)` = polynomials of degree `<= r`, evaluated at finite places
/// `x - a_i`: block `i` of `Phi(f)` is `(f^{(m-1)}, ..., f^{(0)})` at `a_i` and
/// `psi(f)_i = f^{(m)}(a_i)`.
#[derive(Clone, Debug)]
pub struct ToyCode {
    q: u64,
    eval_points: Vec<u8>,
    m: usize,
    r: usize,
    words: Vec<ToyWord>,
}

pub fn build_toy_code(q: u64, eval_points: &[u8], m: usize, r: usize) -> Result<ToyCode> {
    if !is_small_prime(q) {
        return Err(input(format!("q must be a prime <= 7, got {q}")));
    }
    let distinct: BTreeSet<u8> = eval_points.iter().copied().collect();
    if eval_points.is_empty()
        || distinct.len() != eval_points.len()
        || eval_points.iter().any(|&a| a as u64 >= q)
    {
        return Err(input("evaluation points must be distinct elements of F_q"));
    }
    if m == 0 || r > 12 {
        return Err(input("need m >= 1 and r <= 12"));
    }
    let total = (q as u128).pow(r as u32 + 1);
    if total > EXHAUSTIVE_LIMIT as u128 {
        return Err(input(format!(
            "q^(r+1) = {total} exceeds the limit {EXHAUSTIVE_LIMIT}"
        )));
    }
    let mut code = ToyCode {
        q,
        eval_points: eval_points.to_vec(),
        m,
        r,
        words: Vec::new(),
    };
    code.words = (0..total as u64)
        .map(|idx| {
            let f = code.poly_from_index(idx);
            let (phi, psi) = code.expand(&f);
            ToyWord { f, phi, psi }
        })
        .collect();
    code.check_linearity(100, 0)?;
    Ok(code)
}

impl ToyCode {
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn n(&self) -> usize {
        self.eval_points.len()
    }
    pub fn eval_points(&self) -> &[u8] {
        &self.eval_points
    }
    pub fn words(&self) -> &[ToyWord] {
        &self.words
    }

    pub fn poly_from_index(&self, mut idx: u64) -> Vec<u8> {
        (0..=self.r)
            .map(|_| {
                let c = (idx % self.q) as u8;
                idx /= self.q;
                c
            })
            .collect()
    }

    pub fn random_poly<R: Rng>(&self, rng: &mut R) -> Vec<u8> {
        (0..=self.r)
            .map(|_| rng.gen_range(0..self.q) as u8)
            .collect()
    }

    /// `(Phi(f), psi(f))`.
    pub fn expand(&self, f: &[u8]) -> (IndexedVector, Vec<u8>) {
        let mut blocks = Vec::with_capacity(self.n());
        let mut psi = Vec::with_capacity(self.n());
        for &a in &self.eval_points {
            let h = hasse_coeffs(self.q, f, a, self.m + 1);
            blocks.push(h[..self.m].iter().rev().copied().collect());
            psi.push(h[self.m]);
        }
        let phi = IndexedVector {
            q: self.q,
            m: self.m,
            blocks,
        };
        (phi, psi)
    }

    /// Additivity of `Phi` and `psi` on random pairs.
    pub fn check_linearity(&self, pairs: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pairs {
            let f = self.random_poly(&mut rng);
            let g = self.random_poly(&mut rng);
            let sum: Vec<u8> = f
                .iter()
                .zip(&g)
                .map(|(a, b)| ((*a as u64 + *b as u64) % self.q) as u8)
                .collect();
            let (pf, sf) = self.expand(&f);
            let (pg, sg) = self.expand(&g);
            let (ps, ss) = self.expand(&sum);
            let psi_sum: Vec<u8> = sf
                .iter()
                .zip(&sg)
                .map(|(a, b)| ((*a as u64 + *b as u64) % self.q) as u8)
                .collect();
            if ps != pf.add(&pg)? || ss != psi_sum {
                return Err(Error::Internal(format!(
                    "local expansion is not additive at f = {f:?}, g = {g:?}"
                )));
            }
        }
        Ok(())
    }

    fn check_poly(&self, f: &[u8]) -> Result<()> {
        if f.len() > self.r + 1 && f[self.r + 1..].iter().any(|&c| c != 0) {
            return Err(input(format!("deg f exceeds r = {}", self.r)));
        }
        if f.iter().all(|&c| c == 0) {
            return Err(input("f must be nonzero"));
        }
        Ok(())
    }

    /// `v_{x - a}(f)` by repeated synthetic division.
    pub fn root_multiplicity(&self, f: &[u8], a: u8) -> u32 {
        let q = self.q;
        let mut g: Vec<u64> = f.iter().map(|&c| c as u64).collect();
        while g.last() == Some(&0) {
            g.pop();
        }
        let mut v = 0;
        while !g.is_empty() {
            // divide by (x - a): quotient coefficients from the top down
            let mut quo = vec![0u64; g.len() - 1];
            let mut carry = 0u64;
            for k in (0..g.len()).rev() {
                let c = (g[k] + carry) % q;
                if k == 0 {
                    if c != 0 {
                        return v;
                    }
                } else {
                    quo[k - 1] = c;
                    carry = c * a as u64 % q;
                }
            }
            v += 1;
            g = quo;
        }
        v
    }

    fn multiplicities(&self, f: &[u8]) -> Vec<u32> {
        self.eval_points
            .iter()
            .map(|&a| self.root_multiplicity(f, a))
            .collect()
    }
}

/// `j_l(E) = |I_l(Phi(f))|` for `l = 1..m` and `J_m(E)` equals the weighted
/// index sum, where `E` is the zero divisor of `f` at the evaluation places.
pub fn check_zero_divisor_profile(code: &ToyCode, f: &[u8]) -> Result<bool> {
    code.check_poly(f)?;
    let m = code.m as u32;
    let v = code.multiplicities(f);
    let (phi, _) = code.expand(f);
    let sets = index_sets(&phi);
    let mut big_j = 0usize;
    for l in 1..=m {
        let j = v.iter().filter(|&&vi| vi == m - l).count();
        if j != sets[l as usize - 1].len() {
            return Ok(false);
        }
        big_j += (l as usize + 1) * j;
    }
    Ok(big_j == weighted_index_sum(&phi))
}

/// `(m+1) n - deg(E_bar) <= wt(psi(f)) + J_m(E)`.
pub fn check_weight_inequality(code: &ToyCode, f: &[u8]) -> Result<bool> {
    code.check_poly(f)?;
    let m = code.m as u32;
    let v = code.multiplicities(f);
    let (_, psi) = code.expand(f);
    let lhs: u32 = v.iter().map(|&vi| m + 1 - vi.min(m + 1)).sum();
    let big_j: u32 = v.iter().filter(|&&vi| vi < m).map(|&vi| m - vi + 1).sum();
    let weight = psi.iter().filter(|&&s| s != 0).count() as u32;
    Ok(lhs <= weight + big_j)
}

#[derive(Clone, Debug, Serialize)]
pub struct Covering {
    pub c: IndexedVector,
    /// `|N_c|`.
    pub size: u64,
    /// `|M(x; 0)|`.
    pub m_size: u64,
    /// `ceil(|subset| |M(x; 0)| / q^{mn})`.
    pub averaging_bound: u64,
}

/// A translate `c` maximizing `|{v in subset : v in M(x; c)}|`, by exhaustive
/// search. Errors if the maximum falls below the averaging bound.
pub fn covering_translate(
    q: u64,
    m: usize,
    n: usize,
    xs: &[Rational],
    subset: &[IndexedVector],
) -> Result<Covering> {
    check_xs(xs)?;
    if xs.len() != m {
        return Err(input("one x per level"));
    }
    let total = space_size(q, m, n)?;
    let cost = total as u128 * subset.len().max(1) as u128;
    if cost > 50 * EXHAUSTIVE_LIMIT as u128 {
        return Err(input(format!(
            "search over {total} translates is too large"
        )));
    }
    let bounds = floors(xs, n);
    let zero = IndexedVector::zero(q, m, n);
    let m_size = m_set_count(xs, &zero)?;
    let mut best: Option<(IndexedVector, u64)> = None;
    for idx in 0..total {
        let c = IndexedVector::from_index(q, m, n, idx);
        let mut count = 0;
        for v in subset {
            count += u64::from(in_m_set(v, &c, &bounds)?);
        }
        if best.as_ref().is_none_or(|(_, b)| count > *b) {
            best = Some((c, count));
        }
    }
    let (c, size) = best.expect("nonempty space");
    let num = subset.len() as u128 * m_size as u128;
    let averaging_bound = num.div_ceil(total as u128) as u64;
    if size < averaging_bound {
        return Err(Error::Internal(format!(
            "best translate covers {size} < averaging bound {averaging_bound}"
        )));
    }
    Ok(Covering {
        c,
        size,
        m_size,
        averaging_bound,
    })
}
