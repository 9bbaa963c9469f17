//! Classical asymptotic bounds: Gilbert–Varshamov, Tsfasman–Vlăduţ–Zink and
//! its log-correction, plus the known lower values of the Ihara constant.

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{domain, input, Result};
use crate::numerics::{QaryLog, Real};

/// The asymptotic profile of a tower of function fields over `F_q`:
/// `gamma = lim n_i/g_i` and `gamma_l = liminf B_{i,l}/g_i`. Only the
/// class-number target reads `gamma_l`; `gamma_1` defaults to `gamma`.
#[derive(Clone, Debug)]
pub struct IharaProfile {
    q: u64,
    gamma: Real,
    gamma_l: BTreeMap<u32, Real>,
}

impl IharaProfile {
    /// A profile with `gamma_1 = gamma` and every other `gamma_l` zero.
    pub fn new(q: u64, gamma: Real) -> Result<Self> {
        IharaProfile::with_gamma_l(q, gamma, BTreeMap::new())
    }

    /// An entry for `l = 1` overrides the default `gamma_1 = gamma`.
    pub fn with_gamma_l(q: u64, gamma: Real, gamma_l: BTreeMap<u32, Real>) -> Result<Self> {
        if !is_prime_power(q) {
            return Err(input(format!("q = {q} is not a prime power")));
        }
        if !gamma.is_positive() {
            return Err(domain(format!("gamma must be > 0, got {gamma}")));
        }
        for (l, g) in &gamma_l {
            if *l < 1 {
                return Err(input("gamma_l is indexed from l = 1"));
            }
            if g.is_negative() {
                return Err(domain(format!("gamma_{l} must be >= 0, got {g}")));
            }
        }
        Ok(IharaProfile { q, gamma, gamma_l })
    }

    /// Profile with `gamma` taken from [`ihara_lower`].
    pub fn from_ihara(q: u64, prec: u32) -> Result<Self> {
        match ihara_lower(q)?.value() {
            Some(g) => IharaProfile::new(q, Real::from_rational(g, prec)),
            None => Err(input(format!(
                "no built-in gamma for q = {q} (neither a square nor a cube); supply gamma"
            ))),
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn gamma(&self) -> &Real {
        &self.gamma
    }

    pub fn gamma_l(&self) -> &BTreeMap<u32, Real> {
        &self.gamma_l
    }

    pub fn prec(&self) -> u32 {
        self.gamma.prec()
    }

    /// Same profile with every value re-rounded to `prec`.
    pub fn at_prec(&self, prec: u32) -> IharaProfile {
        IharaProfile {
            q: self.q,
            gamma: self.gamma.at_prec(prec),
            gamma_l: self
                .gamma_l
                .iter()
                .map(|(l, g)| (*l, g.at_prec(prec)))
                .collect(),
        }
    }
}

/// Which closed form produced a lower value of `A(q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IharaLower {
    /// `sqrt(q) - 1`.
    Square {
        #[serde(serialize_with = "ser_rational")]
        value: Rational,
    },
    /// `2(q^{2/3} - 1)/(q^{1/3} + 2)`.
    Cube {
        #[serde(serialize_with = "ser_rational")]
        value: Rational,
    },
    /// `q` is neither a square nor a cube.
    Unknown,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl IharaLower {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            IharaLower::Square { value } | IharaLower::Cube { value } => Some(value),
            IharaLower::Unknown => None,
        }
    }
}

/// Exact lower value of the Ihara constant `A(q)`.
///
/// Squares take precedence over cubes (`q = 64` gives 7, not 18/6).
pub fn ihara_lower(q: u64) -> Result<IharaLower> {
    if !is_prime_power(q) {
        return Err(input(format!("q = {q} is not a prime power")));
    }
    let qi = Integer::from(q);
    let (root, rem) = qi.clone().sqrt_rem(Integer::new());
    if rem == 0 {
        return Ok(IharaLower::Square {
            value: Rational::from(root - 1u32),
        });
    }
    let c = qi.clone().root(3);
    if c.clone().pow(3) == qi {
        let num = Integer::from(2) * (c.clone().square() - 1u32);
        let den = c + 2u32;
        return Ok(IharaLower::Cube {
            value: Rational::from((num, den)),
        });
    }
    Ok(IharaLower::Unknown)
}

/// True when `q = p^k` for a prime `p` and `k >= 1`.
pub fn is_prime_power(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut v = q;
            while v.is_multiple_of(p) {
                v /= p;
            }
            return v == 1;
        }
        p += 1;
    }
    true
}

/// Asymptotic Gilbert–Varshamov bound on the open interval `0 < delta < (q-1)/q`.
pub fn gv_bound(q: u64, delta: &Real) -> Result<Real> {
    let lg = QaryLog::new(q, delta.prec())?;
    if !delta.is_positive() || *delta >= lg.threshold() {
        return Err(domain(format!(
            "gv_bound needs 0 < delta < (q-1)/q = {}, got {delta}",
            lg.threshold()
        )));
    }
    Ok(gv_formula(&lg, delta))
}

/// The same expression extended continuously to `[0, (q-1)/q]`
/// (1 at `delta = 0`, 0 at the Plotkin point).
pub fn gv_bound_closed(q: u64, delta: &Real) -> Result<Real> {
    let lg = QaryLog::new(q, delta.prec())?;
    if delta.is_negative() || *delta > lg.threshold() {
        return Err(domain(format!(
            "gv_bound_closed needs 0 <= delta <= (q-1)/q, got {delta}"
        )));
    }
    Ok(gv_formula(&lg, delta))
}

fn gv_formula(lg: &QaryLog, delta: &Real) -> Real {
    let p = delta.prec();
    let one = Real::one(p);
    one - delta * lg.log_q_minus_1()
        + lg.xlog_unchecked(delta)
        + lg.xlog_unchecked(&(Real::one(p) - delta))
}

/// `1 - delta - 1/gamma`; may be negative.
pub fn tvz_bound(delta: &Real, gamma: &Real) -> Result<Real> {
    check_tvz_domain(delta, gamma)?;
    Ok(Real::one(delta.prec()) - delta - gamma.recip())
}

/// TVZ plus `log_q(1 + q^-3)`.
pub fn no1_bound(q: u64, delta: &Real, gamma: &Real) -> Result<Real> {
    let tvz = tvz_bound(delta, gamma)?;
    let p = tvz.prec();
    let lg = QaryLog::new(q, p)?;
    let q3 = Real::with_val(p, q).powi(3);
    let corr = lg.log(&(Real::one(p) + q3.recip()))?;
    Ok(tvz + corr)
}

fn check_tvz_domain(delta: &Real, gamma: &Real) -> Result<()> {
    if !gamma.is_positive() {
        return Err(domain(format!("gamma must be > 0, got {gamma}")));
    }
    if delta.is_negative() || *delta > Real::one(delta.prec()) {
        return Err(domain(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const P: u32 = 256;

    fn r(s: &str) -> Real {
        Real::parse(s, P).unwrap()
    }

    #[test]
    fn ihara_values() {
        assert_eq!(
            ihara_lower(64).unwrap().value().unwrap(),
            &Rational::from(7)
        );
        assert_eq!(
            ihara_lower(49).unwrap().value().unwrap(),
            &Rational::from(6)
        );
        let cube = ihara_lower(1 << 21).unwrap();
        assert!(matches!(cube, IharaLower::Cube { .. }));
        assert_eq!(cube.value().unwrap(), &Rational::from((32766, 130)));
        assert_eq!(
            Real::from_rational(cube.value().unwrap(), P).to_decimal_truncated(10),
            "252.0461538461"
        );
        assert_eq!(
            ihara_lower(8).unwrap().value().unwrap(),
            &Rational::from((6, 4))
        );
        assert_eq!(ihara_lower(2).unwrap(), IharaLower::Unknown);
        assert!(matches!(ihara_lower(12), Err(Error::Input(_))));
    }

    #[test]
    fn ihara_prime_squares() {
        for p in (2u64..=97).filter(|&p| is_prime_power(p) && (2..p).all(|d| p % d != 0)) {
            assert_eq!(
                ihara_lower(p * p).unwrap().value().unwrap(),
                &Rational::from(p - 1)
            );
        }
    }

    #[test]
    fn prime_powers() {
        let pp: Vec<u64> = (0..30).filter(|&q| is_prime_power(q)).collect();
        assert_eq!(
            pp,
            vec![2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29]
        );
    }

    #[test]
    fn gv_domain_and_endpoints() {
        assert!(matches!(gv_bound(2, &r("0.5")), Err(Error::Domain(_))));
        assert!(matches!(gv_bound(2, &r("0")), Err(Error::Domain(_))));
        assert_eq!(gv_bound_closed(2, &r("0")).unwrap(), r("1"));
        let z = gv_bound_closed(64, &r("63/64")).unwrap();
        assert!(z.abs() <= r("1e-70"), "{z}");
        // 1 - h_2(1/4) with h_2(1/4) = 2 - (3/4) log2 3.
        let v = gv_bound(2, &r("0.25")).unwrap();
        let expect = r("0.1887218755408671360903042079608623815699");
        assert!((v - expect).abs() < r("1e-39"));
        let v = gv_bound(2, &r("0.11")).unwrap();
        assert_eq!(
            v.to_decimal_truncated(30),
            "0.500084041835472004359500405869"
        );
    }

    #[test]
    fn tvz_and_no1() {
        assert_eq!(tvz_bound(&r("0"), &r("7")).unwrap(), r("6/7"));
        assert_eq!(tvz_bound(&r("1"), &r("2")).unwrap(), r("-0.5"));
        assert_eq!(tvz_bound(&r("0"), &r("6")).unwrap(), r("5/6"));
        assert!(tvz_bound(&r("0.1"), &r("0")).is_err());
        assert!(tvz_bound(&r("1.1"), &r("2")).is_err());
        // 1 - 1 - 1 + log_2(9/8)
        let v = no1_bound(2, &r("1"), &r("1")).unwrap();
        let expect = r("-0.8300749985576876370925221121043669824804");
        assert!((v - expect).abs() < r("1e-39"));
        let v = no1_bound(64, &r("0"), &r("7")).unwrap();
        let expect = r("0.8571437743819122509577633678148747899643");
        assert!((v - expect).abs() < r("1e-39"));
        let d = r("13763868443250238929521503984833381597731412559044/46065097831342932365531985486767649347321318605709");
        let v = tvz_bound(&d, &r("7")).unwrap();
        assert_eq!(
            v.to_decimal_truncated(30),
            "0.558351166877841984457497559816"
        );
    }
}
