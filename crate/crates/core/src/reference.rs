//! Published reproduction targets: three tower profiles, two relative
//! distances each, with exact `delta` fractions, x-vectors, the printed
//! linear-bound digits, the minimum gains, and a prior bound with the margin
//! by which the linear bound must exceed it.

use rug::Rational;

use crate::classic::IharaProfile;
use crate::error::Result;
use crate::numerics::{parse_rational, Real};

/// One reproduction case.
#[derive(Clone, Debug)]
pub struct ReferenceCase {
    /// `"7.1a"`, `"7.1b"`, ..., `"7.3b"`.
    pub id: &'static str,
    pub q: u64,
    /// Exact `gamma` (`gamma_1 = gamma`, `gamma_l = 0` for `l >= 2`).
    pub gamma: &'static str,
    pub delta_num: &'static str,
    pub delta_den: &'static str,
    pub xs: &'static [&'static str],
    /// Printed linear bound (truncated decimal).
    pub r_lin: &'static str,
    /// Required lower bound on `r_general - r_lin`.
    pub min_gain: &'static str,
    /// Printed prior bound (truncated decimal).
    pub prior: &'static str,
    /// Required lower bound on `r_lin - prior`.
    pub prior_margin: &'static str,
}

impl ReferenceCase {
    pub fn profile(&self, prec: u32) -> Result<IharaProfile> {
        IharaProfile::new(self.q, Real::parse(self.gamma, prec)?)
    }

    pub fn delta_exact(&self) -> Rational {
        let num = parse_rational(self.delta_num).expect("valid literal");
        let den = parse_rational(self.delta_den).expect("valid literal");
        num / den
    }

    pub fn delta(&self, prec: u32) -> Real {
        Real::from_rational(&self.delta_exact(), prec)
    }

    pub fn xs(&self, prec: u32) -> Vec<Real> {
        self.xs
            .iter()
            .map(|s| Real::parse(s, prec).expect("valid literal"))
            .collect()
    }

    /// `delta` as `"num/den"`.
    pub fn delta_literal(&self) -> String {
        format!("{}/{}", self.delta_num, self.delta_den)
    }

    /// The example group, e.g. `"7.2"`.
    pub fn group(&self) -> &'static str {
        &self.id[..3]
    }
}

const DEN_64: &str = "46065097831342932365531985486767649347321318605709";
const DEN_49: &str = "18755194537338788993696079784908084949457099261873";
const DEN_2_21: &str = "99621193732964014413326435515634059733734238550355";

pub const CASES: [ReferenceCase; 6] = [
    ReferenceCase {
        id: "7.1a",
        q: 64,
        gamma: "7",
        delta_num: "13763868443250238929521503984833381597731412559044",
        delta_den: DEN_64,
        xs: &["3.41e-16", "1.0634e-23", "1.93e-31"],
        r_lin: "0.55835395724081743804",
        min_gain: "2.711029e-17",
        prior: "0.55835371587781529071",
        prior_margin: "2.4136300214732e-7",
    },
    ReferenceCase {
        id: "7.1b",
        q: 64,
        gamma: "7",
        delta_num: "32301229388092693436010481501934267749589906046665",
        delta_den: DEN_64,
        xs: &["3.89e-18", "1.98e-26", "5.87e-35"],
        r_lin: "0.15593754394482448829",
        min_gain: "2.592642e-19",
        prior: "0.15593709640785805503",
        prior_margin: "4.4753696643325e-7",
    },
    ReferenceCase {
        id: "7.2a",
        q: 49,
        gamma: "6",
        delta_num: "7334559589562321721169749749908497945081695123431",
        delta_den: DEN_49,
        xs: &["1.93e-13", "1.53e-19", "7.08e-26"],
        r_lin: "0.44226758374884970747",
        min_gain: "1.857062e-14",
        prior: "0.44226734872224546020",
        prior_margin: "2.3502660424726e-7",
    },
    ReferenceCase {
        id: "7.2b",
        q: 49,
        gamma: "6",
        delta_num: "11420634947776467272526330034999587004375404138442",
        delta_den: DEN_49,
        xs: &["5.86e-14", "3.207e-20", "1.02e-26"],
        r_lin: "0.22440401150099750683",
        min_gain: "5.258306e-15",
        prior: "0.22440368700019503856",
        prior_margin: "3.2450080246826e-7",
    },
    ReferenceCase {
        id: "7.3a",
        q: 1 << 21,
        gamma: "32766/130",
        delta_num: "1034323484865452473463726110309814032498446010098",
        delta_den: DEN_2_21,
        xs: &["6.29e-65", "7.09e-97"],
        r_lin: "0.98564990803085654673",
        min_gain: "1.261672e-66",
        prior: "0.98564990803085654665",
        prior_margin: "7e-20",
    },
    ReferenceCase {
        id: "7.3b",
        q: 1 << 21,
        gamma: "32766/130",
        delta_num: "98586870248098561939862709405324245701235792540257",
        delta_den: DEN_2_21,
        xs: &["6.5e-86", "2.4e-127"],
        r_lin: "0.00641503733934427410",
        min_gain: "9.103449e-88",
        prior: "0.00641503733934427385",
        prior_margin: "2.4e-19",
    },
];

/// Cases whose id starts with `group` (`"7.1"` etc.).
pub fn cases_in(group: &str) -> Vec<&'static ReferenceCase> {
    CASES.iter().filter(|c| c.group() == group).collect()
}
