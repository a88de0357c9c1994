//! Zone-dependent chained estimates and the two-sided bound on the best
//! constant assembled from functional values.

use serde::Serialize;

use super::constants::{alpha_raw, bold_beta_raw, ConstantSet};
use super::FunctionalValue;
use crate::weights::{Exponents, SubZone, Zone};

pub const SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / max(|lhs|, |rhs|)`.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRecord {
    pub zone: &'static str,
    pub checks: Vec<ChainCheck>,
    pub passed: bool,
}

/// Relative margin of `lhs <= rhs`; 0 when both vanish.
pub fn relative_margin(lhs: f64, rhs: f64) -> f64 {
    if rhs == f64::INFINITY {
        return 1.0;
    }
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}

impl ChainCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = relative_margin(lhs, rhs);
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            passed: margin >= -SLACK,
        }
    }
}

pub(crate) fn lookup(values: &[FunctionalValue], name: &str) -> Option<f64> {
    values.iter().find(|v| v.name == name).map(|v| v.value)
}

/// The chains `A_2 <= alpha^{1/q} A_1`, `A_3 <= alpha'^{1/p'} A_1` for
/// `p < q`, and `B_2 <= bold_beta B_1` (when `r/p >= 1`),
/// `B_3 <= bold_beta' B_1` (when `r/q' >= 1`) for `q < p`. Missing values
/// skip their check.
pub fn zone_chain(e: &Exponents, values: &[FunctionalValue]) -> ChainRecord {
    let mut checks = Vec::new();
    match e.zone {
        Zone::PBelowQ => {
            if let Some(a1) = lookup(values, "A1") {
                let a = alpha_raw(e.p, e.q).powf(1.0 / e.q);
                let ad = alpha_raw(e.q_conj, e.p_conj).powf(1.0 / e.p_conj);
                if let Some(a2) = lookup(values, "A2") {
                    checks.push(ChainCheck::new("A2 <= alpha^(1/q) A1", a2, a * a1));
                }
                if let Some(a3) = lookup(values, "A3") {
                    checks.push(ChainCheck::new("A3 <= alpha'^(1/p') A1", a3, ad * a1));
                }
            }
        }
        Zone::Diagonal => {}
        Zone::QBelowP(z) => {
            let r = e.r.unwrap_or(f64::INFINITY);
            let rp = matches!(z, SubZone::Both | SubZone::OnlyRp);
            let rq = matches!(z, SubZone::Both | SubZone::OnlyRq);
            if let Some(b1) = lookup(values, "B1") {
                if rp {
                    if let Some(b2) = lookup(values, "B2") {
                        let bb = bold_beta_raw(e.p, e.q, r);
                        checks.push(ChainCheck::new("B2 <= bold_beta(p,q) B1", b2, bb * b1));
                    }
                }
                if rq {
                    if let Some(b3) = lookup(values, "B3") {
                        let bb = bold_beta_raw(e.q_conj, e.p_conj, r);
                        checks.push(ChainCheck::new("B3 <= bold_beta(q',p') B1", b3, bb * b1));
                    }
                }
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    ChainRecord {
        zone: e.zone.tag(),
        checks,
        passed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub source: String,
    pub value: f64,
}

/// Proven lower and upper bounds on the best constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: Bound,
    pub uppers: Vec<Bound>,
    pub upper: f64,
}

fn bound(source: &str, value: f64) -> Bound {
    Bound {
        source: source.to_string(),
        value,
    }
}

/// Bounds available from the computed functionals. Returns `None` when the
/// zone's leading functional (`A_1`, or `B_1` for `q < p`) is missing.
pub fn sandwich(e: &Exponents, c: &ConstantSet, values: &[FunctionalValue]) -> Option<Sandwich> {
    let get = |n: &str| lookup(values, n);
    let mut uppers = Vec::new();
    let lower = match e.zone {
        Zone::PBelowQ => {
            let a1 = get("A1")?;
            uppers.push(bound("C(alpha,alpha') A1", c.c_upper * a1));
            if let (Some(a2), Some(a3), Some(cs)) = (get("A2"), get("A3"), c.c_upper_sum) {
                uppers.push(bound("C(1,1) (A1+A2+A3)", cs * (a1 + a2 + a3)));
            }
            if let (Some(cs), Some(k)) = (c.c_upper_sum, c.chain_factor) {
                uppers.push(bound("C(1,1) [1+alpha^(1/q)+alpha'^(1/p')] A1", cs * k * a1));
            }
            bound("A1", a1)
        }
        Zone::Diagonal => {
            let a1 = get("A1")?;
            if let (Some(a2), Some(a3)) = (get("A2"), get("A3")) {
                uppers.push(bound("C(1,1) (A1+A2+A3)", c.c_upper * (a1 + a2 + a3)));
            }
            bound("A1", a1)
        }
        Zone::QBelowP(z) => {
            let b1 = get("B1")?;
            uppers.push(bound("C(beta,beta') B1", c.c_upper * b1));
            let sum = match z {
                SubZone::Both => get("B2").zip(get("B3")).map(|(b2, b3)| b1 + b2 + b3),
                SubZone::OnlyRp => get("B2").map(|b2| b1 + b2),
                SubZone::OnlyRq => get("B3").map(|b3| b1 + b3),
                SubZone::Neither => None,
            };
            if let (Some(s), Some(cs)) = (sum, c.c_upper_sum) {
                uppers.push(bound("zone constant x sum of B", cs * s));
            }
            if let (Some(cs), Some(k)) = (c.c_upper_sum, c.chain_factor) {
                uppers.push(bound("zone constant x chain factor x B1", cs * k * b1));
            }
            bound("c_lower B1", c.c_lower * b1)
        }
    };
    let upper = uppers
        .iter()
        .map(|b| b.value)
        .fold(f64::INFINITY, f64::min);
    Some(Sandwich {
        lower,
        uppers,
        upper,
    })
}
