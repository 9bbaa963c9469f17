//! Arbitrary-precision reals and the q-ary logarithm / entropy primitives.
//!
//! [`Real`] wraps an MPFR float with an explicit bit precision. Binary
//! operations produce a value at the smaller of the two operand precisions,
//! so a computation never silently claims more accuracy than its inputs.
//! Exact inputs (fractions, decimal literals, integer powers) are parsed into
//! [`Rational`] first and rounded once.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::Pow;
use rug::{Assign, Float, Integer, Rational};

use crate::error::{domain, input, Error, Result};

/// Working precision used when the caller does not choose one.
pub const DEFAULT_PRECISION: u32 = 768;
/// Smallest precision accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 64;

/// A finite real number carried at an explicit binary precision.
///
/// Values are never NaN or infinite: every constructor and every fallible
/// operation in the crate rejects inputs that would produce one, which is
/// what makes the ordering total.
#[derive(Clone)]
pub struct Real(Float);

impl Real {
    pub fn with_val<T>(prec: u32, val: T) -> Self
    where
        Float: Assign<T>,
    {
        Real(Float::with_val(prec.max(MIN_PRECISION), val))
    }

    pub fn zero(prec: u32) -> Self {
        Real::with_val(prec, 0)
    }

    pub fn one(prec: u32) -> Self {
        Real::with_val(prec, 1)
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        Real::with_val(prec, r)
    }

    pub fn from_float(f: Float) -> Result<Self> {
        if !f.is_finite() {
            return Err(Error::Internal(format!("non-finite value {f}")));
        }
        if f.prec() < MIN_PRECISION {
            let p = MIN_PRECISION;
            return Ok(Real(Float::with_val(p, f)));
        }
        Ok(Real(f))
    }

    /// `2^exp` at the given precision.
    pub fn pow2(exp: i32, prec: u32) -> Self {
        Real::with_val(prec, Float::u_exp(1, exp))
    }

    /// Parses any literal accepted by [`parse_rational`] and rounds it once.
    pub fn parse(s: &str, prec: u32) -> Result<Self> {
        Ok(Real::from_rational(&parse_rational(s)?, prec))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    /// Same value rounded to a different precision.
    pub fn at_prec(&self, prec: u32) -> Real {
        Real::with_val(prec, &self.0)
    }

    /// The exact dyadic rational this value represents.
    pub fn to_rational(&self) -> Rational {
        self.0
            .to_rational()
            .expect("Real values are finite by construction")
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_sign_positive() && !self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn abs(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.abs_ref()))
    }

    pub fn ln(&self) -> Real {
        debug_assert!(self.is_positive(), "ln of non-positive value");
        Real(Float::with_val(self.prec(), self.0.ln_ref()))
    }

    /// `ln(1 + self)`, accurate for tiny arguments.
    pub fn ln_1p(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.ln_1p_ref()))
    }

    pub fn exp(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.exp_ref()))
    }

    pub fn sqrt(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.sqrt_ref()))
    }

    pub fn powi(&self, n: i32) -> Real {
        Real(Float::with_val(self.prec(), (&self.0).pow(n)))
    }

    pub fn recip(&self) -> Real {
        Real(Float::with_val(self.prec(), self.0.recip_ref()))
    }

    pub fn min_of<'a>(&'a self, other: &'a Real) -> &'a Real {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max_of<'a>(&'a self, other: &'a Real) -> &'a Real {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Unit in the last place of `|self|` at this value's precision.
    /// Zero has no exponent; its ulp is taken as `2^-prec`.
    pub fn ulp(&self) -> Real {
        match self.0.get_exp() {
            Some(e) => Real::pow2(e - self.prec() as i32, self.prec()),
            None => Real::pow2(-(self.prec() as i32), self.prec()),
        }
    }

    /// `|self - other| <= n` ulps of the larger magnitude.
    pub fn approx_eq_ulps(&self, other: &Real, n: u32) -> bool {
        let diff = (self - other).abs();
        if diff.is_zero() {
            return true;
        }
        let scale = self.abs().max_of(&other.abs()).clone();
        let tol = scale.ulp() * Real::with_val(scale.prec(), n);
        diff <= tol
    }

    /// Fixed-point decimal with `digits` fractional digits, truncated toward zero.
    pub fn to_decimal_truncated(&self, digits: usize) -> String {
        let guard = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64;
        let work = self.prec() + guard;
        let scale = Float::with_val(work, Integer::from(10).pow(digits as u32));
        let scaled = Float::with_val(work, self.0.abs_ref()) * scale;
        let (int, _) = scaled.to_integer_round(Round::Zero).expect("finite value");
        let mut s = int.to_string();
        if s.len() <= digits {
            s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
        }
        let split = s.len() - digits;
        let (whole, frac) = s.split_at(split);
        let sign = if self.is_negative() { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{whole}")
        } else {
            format!("{sign}{whole}.{frac}")
        }
    }

    /// Scientific notation with `digits` significant digits (round to nearest).
    pub fn to_sci(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let s = self.0.to_string_radix(10, Some(digits.max(1)));
        normalize_sci(&s)
    }
}

fn normalize_sci(s: &str) -> String {
    // MPFR prints e.g. "2.7110297000e-17" or "5.0e0"; keep the mantissa, tidy the exponent.
    match s.split_once('e') {
        Some((mant, exp)) => {
            let e: i64 = exp.parse().unwrap_or(0);
            if e == 0 {
                mant.to_string()
            } else {
                format!("{mant}e{e}")
            }
        }
        None => s.to_string(),
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({}, prec={})", self.to_sci(24), self.prec())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(d) => f.write_str(&self.to_sci(d)),
            None => f.write_str(&self.to_sci(20)),
        }
    }
}

impl serde::Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_sci(30))
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .partial_cmp(&other.0)
            .expect("Real values are finite by construction")
    }
}

macro_rules! real_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<'a> $tr<&'a Real> for &'a Real {
            type Output = Real;
            fn $method(self, rhs: &'a Real) -> Real {
                let p = self.prec().min(rhs.prec());
                Real(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &'a Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl<'a> $tr<Real> for &'a Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
        impl $tr<i64> for &Real {
            type Output = Real;
            fn $method(self, rhs: i64) -> Real {
                Real(Float::with_val(self.prec(), &self.0 $op rhs))
            }
        }
        impl $tr<i64> for Real {
            type Output = Real;
            fn $method(self, rhs: i64) -> Real {
                (&self).$method(rhs)
            }
        }
    };
}

real_binop!(Add, add, +);
real_binop!(Sub, sub, -);
real_binop!(Mul, mul, *);
real_binop!(Div, div, /);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(Float::with_val(self.prec(), -&self.0))
    }
}

impl std::iter::Sum for Real {
    fn sum<I: Iterator<Item = Real>>(iter: I) -> Real {
        let mut iter = iter;
        let first = iter.next().unwrap_or_else(|| Real::zero(MIN_PRECISION));
        iter.fold(first, |acc, x| acc + x)
    }
}

/// Parses a numeric literal into an exact rational.
///
/// Accepted forms: integers and decimals with optional exponent
/// (`"0.29879"`, `"3.41e-16"`), fractions (`"p/q"`), and integer powers
/// (`"2^21"`).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(input("empty numeric literal"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let num = parse_rational(n)?;
        let den = parse_rational(d)?;
        if den == 0 {
            return Err(input(format!("zero denominator in {t:?}")));
        }
        return Ok(num / den);
    }
    if let Some((b, e)) = t.split_once('^') {
        let base: Integer = b
            .trim()
            .parse()
            .map_err(|_| input(format!("bad base in {t:?}")))?;
        let exp: u32 = e
            .trim()
            .parse()
            .map_err(|_| input(format!("bad exponent in {t:?}")))?;
        return Ok(Rational::from(base.pow(exp)));
    }
    parse_decimal(t)
}

fn parse_decimal(t: &str) -> Result<Rational> {
    let bad = || input(format!("not a number: {t:?}"));
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| bad())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (whole, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let mut value = Rational::from(digits.parse::<Integer>().map_err(|_| bad())?);
    let shift = exp - frac.len() as i32;
    let ten = Integer::from(10);
    if shift >= 0 {
        value *= Integer::from((&ten).pow(shift as u32));
    } else {
        value /= Integer::from((&ten).pow((-shift) as u32));
    }
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Formats an exact rational as a terminating decimal when it has one,
/// otherwise as `p/q`. Parsing the result with [`parse_rational`] returns
/// the same value.
pub fn format_rational_exact(r: &Rational) -> String {
    let den = r.denom().clone();
    let mut d = den.clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d.is_divisible_u(2) {
        d /= 2;
        twos += 1;
    }
    while d.is_divisible_u(5) {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let k = twos.max(fives);
    if k == 0 {
        return r.numer().to_string();
    }
    let scaled = (r.numer() * Integer::from(Integer::u_pow_u(10, k))) / den;
    let neg = scaled < 0;
    let mut s = Integer::from(scaled.abs_ref()).to_string();
    let k = k as usize;
    if s.len() <= k {
        s = format!("{}{}", "0".repeat(k + 1 - s.len()), s);
    }
    let (w, f) = s.split_at(s.len() - k);
    let f = f.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if f.is_empty() {
        format!("{sign}{w}")
    } else {
        format!("{sign}{w}.{f}")
    }
}

/// A logarithm base `q` together with its natural log, so hot loops do not
/// recompute `ln q`.
#[derive(Clone, Debug)]
pub struct QaryLog {
    q: u64,
    ln_q: Real,
    log_q_minus_1: Real,
}

impl QaryLog {
    pub fn new(q: u64, prec: u32) -> Result<Self> {
        if q < 2 {
            return Err(domain(format!("logarithm base q = {q} must be at least 2")));
        }
        let ln_q = Real::with_val(prec, q).ln();
        let log_q_minus_1 = if q == 2 {
            Real::zero(prec)
        } else {
            Real::with_val(prec, q - 1).ln() / &ln_q
        };
        Ok(QaryLog {
            q,
            ln_q,
            log_q_minus_1,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn prec(&self) -> u32 {
        self.ln_q.prec()
    }

    pub fn ln_q(&self) -> &Real {
        &self.ln_q
    }

    /// `log_q(q - 1)`.
    pub fn log_q_minus_1(&self) -> &Real {
        &self.log_q_minus_1
    }

    /// `(q-1)/q`, correctly rounded.
    pub fn threshold(&self) -> Real {
        Real::from_rational(&Rational::from((self.q - 1, self.q)), self.prec())
    }

    /// `log_q(x)` for `x > 0`, exact on integer powers of `q`.
    pub fn log(&self, x: &Real) -> Result<Real> {
        if !x.is_positive() {
            return Err(domain(format!("log_q needs x > 0, got {x}")));
        }
        if let Some(k) = self.exact_power(x) {
            return Ok(Real::with_val(x.prec().min(self.prec()), k));
        }
        Ok(self.log_unchecked(x))
    }

    pub(crate) fn log_unchecked(&self, x: &Real) -> Real {
        x.ln() / &self.ln_q
    }

    fn exact_power(&self, x: &Real) -> Option<i64> {
        let r = x.to_rational();
        let (num, den) = (r.numer(), r.denom());
        let power_of_q = |v: &Integer| -> Option<i64> {
            let mut v = v.clone();
            let mut k = 0i64;
            while v > 1 {
                if !v.is_divisible_u(self.q as u32) {
                    return None;
                }
                v /= self.q as u32;
                k += 1;
            }
            Some(k)
        };
        if self.q > u32::MAX as u64 {
            return None;
        }
        if *den == 1 {
            power_of_q(num)
        } else if *num == 1 {
            power_of_q(den).map(|k| -k)
        } else {
            None
        }
    }

    /// `x log_q x` with the `0 log 0 = 0` convention; requires `0 <= x <= 1`.
    pub fn xlog(&self, x: &Real) -> Result<Real> {
        if x.is_negative() || *x > Real::one(x.prec()) {
            return Err(domain(format!("x log_q x needs 0 <= x <= 1, got {x}")));
        }
        Ok(self.xlog_unchecked(x))
    }

    /// `x log_q x` for any `x >= 0` (0 at 0); no range check.
    pub(crate) fn xlog_unchecked(&self, x: &Real) -> Real {
        if x.is_zero() {
            return Real::zero(x.prec().min(self.prec()));
        }
        x * self.log_unchecked(x)
    }

    /// q-ary entropy `E(x) = -x log_q x - (1-x) log_q(1-x)`, `E(0) = E(1) = 0`.
    pub fn entropy(&self, x: &Real) -> Result<Real> {
        if x.is_negative() || *x > Real::one(x.prec()) {
            return Err(domain(format!("entropy needs 0 <= x <= 1, got {x}")));
        }
        Ok(self.entropy_unchecked(x))
    }

    pub(crate) fn entropy_unchecked(&self, x: &Real) -> Real {
        let comp = Real::one(x.prec()) - x;
        -(self.xlog_unchecked(x) + self.xlog_unchecked(&comp))
    }
}

/// `log_q(x)` for `x > 0`; exact when `x` is an integer power of `q`.
pub fn log_q(x: &Real, q: u64) -> Result<Real> {
    QaryLog::new(q, x.prec())?.log(x)
}

/// `x log_q x` on `[0, 1]` with the continuity convention at 0.
pub fn xlog_q(x: &Real, q: u64) -> Result<Real> {
    QaryLog::new(q, x.prec())?.xlog(x)
}

/// q-ary entropy on `[0, 1]`.
pub fn entropy_q(x: &Real, q: u64) -> Result<Real> {
    QaryLog::new(q, x.prec())?.entropy(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn r(s: &str) -> Real {
        Real::parse(s, P).unwrap()
    }

    #[test]
    fn log_exact_powers() {
        assert_eq!(log_q(&r("8"), 2).unwrap(), r("3"));
        assert_eq!(log_q(&r("64"), 64).unwrap(), r("1"));
        assert_eq!(log_q(&r("1/64"), 2).unwrap(), r("-6"));
        assert_eq!(log_q(&r("1"), 7).unwrap(), r("0"));
        assert!(matches!(log_q(&r("0"), 2), Err(Error::Domain(_))));
        assert!(matches!(log_q(&r("-1"), 2), Err(Error::Domain(_))));
        assert!(log_q(&r("2"), 1).is_err());
    }

    #[test]
    fn log_and_entropy_against_frozen_values() {
        let v = log_q(&r("3"), 2).unwrap();
        assert!((v - r("1.58496250072115618145373894394781650876")).abs() < r("1e-38"));
        let v = entropy_q(&r("1/4"), 2).unwrap();
        assert!((v - r("0.8112781244591328639096957920391376184301")).abs() < r("1e-39"));
    }

    #[test]
    fn xlog_conventions() {
        assert!(xlog_q(&r("0"), 2).unwrap().is_zero());
        assert!(xlog_q(&r("1"), 7).unwrap().is_zero());
        assert_eq!(xlog_q(&r("1/2"), 2).unwrap(), r("-1/2"));
        assert!(xlog_q(&r("1.5"), 2).is_err());
        assert!(xlog_q(&r("-0.1"), 2).is_err());
    }

    #[test]
    fn entropy_endpoints_and_max() {
        assert!(entropy_q(&r("0"), 64).unwrap().is_zero());
        assert!(entropy_q(&r("1"), 64).unwrap().is_zero());
        assert_eq!(entropy_q(&r("1/2"), 2).unwrap(), r("1"));
        assert!(entropy_q(&r("1.01"), 2).is_err());
    }

    #[test]
    fn parse_literals() {
        assert_eq!(parse_rational("2^21").unwrap(), Rational::from(2_097_152));
        assert_eq!(
            parse_rational("3.41e-16").unwrap(),
            Rational::from((341, Integer::from(10).pow(18)))
        );
        assert_eq!(parse_rational("6/4").unwrap(), Rational::from((3, 2)));
        assert_eq!(parse_rational("-0.25").unwrap(), Rational::from((-1, 4)));
        assert_eq!(parse_rational(".5").unwrap(), Rational::from((1, 2)));
        assert_eq!(parse_rational("1E3").unwrap(), Rational::from(1000));
        for bad in ["", "abc", "1/0", "1.2.3", "2^x", "e5"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn exact_format_round_trips() {
        for s in ["0.1", "13/7", "-2.5", "7", "1/3", "0.0625", "3.41e-16"] {
            let v = parse_rational(s).unwrap();
            let f = format_rational_exact(&v);
            assert_eq!(parse_rational(&f).unwrap(), v, "{s} -> {f}");
        }
        assert_eq!(format_rational_exact(&Rational::from((1, 8))), "0.125");
        assert_eq!(format_rational_exact(&Rational::from((1, 3))), "1/3");
    }

    #[test]
    fn truncated_decimal_rounds_toward_zero() {
        assert_eq!(r("2/3").to_decimal_truncated(5), "0.66666");
        assert_eq!(r("-2/3").to_decimal_truncated(3), "-0.666");
        assert_eq!(r("12.5").to_decimal_truncated(0), "12");
        assert_eq!(r("0.001").to_decimal_truncated(2), "0.00");
    }

    #[test]
    fn precision_is_minimum_of_operands() {
        let a = Real::one(128);
        let b = Real::one(512);
        assert_eq!((&a + &b).prec(), 128);
        assert_eq!((&b * &a).prec(), 128);
        assert_eq!(Real::one(8).prec(), MIN_PRECISION);
    }

    #[test]
    fn ulp_comparison() {
        let a = r("1");
        let b = &a + &a.ulp();
        assert!(a.approx_eq_ulps(&b, 1));
        let c = &a + &(a.ulp() * 8);
        assert!(!a.approx_eq_ulps(&c, 4));
        assert!(Real::zero(P).approx_eq_ulps(&Real::zero(P), 0));
    }
}
