//! Explicit constants of the two-sided estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::{Exponents, SubZone, Zone};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantSet {
    pub alpha: Option<f64>,
    pub alpha_dual: Option<f64>,
    pub beta: Option<f64>,
    pub beta_dual: Option<f64>,
    pub bold_beta: Option<f64>,
    pub bold_beta_dual: Option<f64>,
    /// Multiplies `A_1` (`p < q`), `B_1` (`q < p`) or `A_1+A_2+A_3` (`p = q`).
    pub c_upper: f64,
    /// Multiplies the zone's sum of functionals, when the zone has one.
    pub c_upper_sum: Option<f64>,
    /// `1 + ...` factor turning the sum bound into a bound in `A_1` or `B_1`.
    pub chain_factor: Option<f64>,
    pub c_lower: f64,
}

/// `p^2 (q-1) / (q-p)` for `p < q`.
pub fn alpha_raw(p: f64, q: f64) -> f64 {
    p * p * (q - 1.0) / (q - p)
}

/// `2^{q+1} / (2^{q/r} - 1)`, times `2^{q/p - q/r}` when `r/p >= 1`.
pub fn beta_raw(p: f64, q: f64, r: f64, r_over_p_ge_1: bool) -> f64 {
    let base = 2f64.powf(q + 1.0) / (2f64.powf(q / r) - 1.0);
    if r_over_p_ge_1 {
        base * 2f64.powf(q / p - q / r)
    } else {
        base
    }
}

/// `2^{1/q+1} / ((2^{(r-q)/p} - 1)^{1/r} (2^{q/r} - 1)^{1/p})`.
pub fn bold_beta_raw(p: f64, q: f64, r: f64) -> f64 {
    2f64.powf(1.0 / q + 1.0)
        / ((2f64.powf((r - q) / p) - 1.0).powf(1.0 / r) * (2f64.powf(q / r) - 1.0).powf(1.0 / p))
}

fn sub_zone(e: &Exponents, what: &str) -> Result<(f64, SubZone)> {
    match e.zone {
        Zone::QBelowP(z) => Ok((e.r.unwrap_or(f64::INFINITY), z)),
        _ => Err(Error::WrongZone {
            what: what.to_string(),
            zone: "q < p",
        }),
    }
}

fn flags(z: SubZone) -> (bool, bool) {
    match z {
        SubZone::Both => (true, true),
        SubZone::OnlyRp => (true, false),
        SubZone::OnlyRq => (false, true),
        SubZone::Neither => (false, false),
    }
}

pub fn alpha(e: &Exponents) -> Result<f64> {
    if e.zone != Zone::PBelowQ {
        return Err(Error::WrongZone {
            what: "alpha".into(),
            zone: "p < q",
        });
    }
    Ok(alpha_raw(e.p, e.q))
}

/// `alpha(q', p')`.
pub fn alpha_dual(e: &Exponents) -> Result<f64> {
    alpha(e)?;
    Ok(alpha_raw(e.q_conj, e.p_conj))
}

pub fn beta(e: &Exponents) -> Result<f64> {
    let (r, z) = sub_zone(e, "beta")?;
    Ok(beta_raw(e.p, e.q, r, flags(z).0))
}

/// `beta(q', p')`; the dual pair has the same `r` and its `r/p` flag is
/// the original `r/q'` flag.
pub fn beta_dual(e: &Exponents) -> Result<f64> {
    let (r, z) = sub_zone(e, "beta'")?;
    Ok(beta_raw(e.q_conj, e.p_conj, r, flags(z).1))
}

pub fn bold_beta(e: &Exponents) -> Result<f64> {
    let (r, _) = sub_zone(e, "bold beta")?;
    Ok(bold_beta_raw(e.p, e.q, r))
}

pub fn bold_beta_dual(e: &Exponents) -> Result<f64> {
    let (r, _) = sub_zone(e, "bold beta'")?;
    Ok(bold_beta_raw(e.q_conj, e.p_conj, r))
}

/// Lower constant in front of `B_1` for `q < p`, and 1 otherwise.
pub fn c_lower(e: &Exponents) -> f64 {
    match (e.zone, e.r) {
        (Zone::QBelowP(_), Some(r)) => {
            2f64.powf(-1.0 / e.p_conj)
                * (e.q / r).powf(1.0 / e.q)
                * (e.p_conj / r).powf(1.0 / e.p_conj)
        }
        _ => 1.0,
    }
}

fn geometric(base: f64, k: f64) -> f64 {
    let t = base.powf(k);
    t / (t - 1.0)
}

/// Upper constant of the `p < q` estimate with the given `alpha`, `alpha'`.
pub fn frak_c(e: &Exponents, a: f64, a_dual: f64) -> f64 {
    let (p, q, pc, qc) = (e.p, e.q, e.p_conj, e.q_conj);
    let first = (2.0f64 / 3.0).powf(q)
        * a.max(2.0 * q * qc.powf(q / pc))
        * geometric(2.0, p - 1.0).powf(q / p);
    let second = 3f64.powf(1.0 / p) * a_dual.powf(1.0 / pc) * geometric(3.0, q - 1.0).powf(1.0 / qc);
    3f64.powf(3.0 * q) * (first + second)
}

/// Upper constant of the `q <= p` estimate with the given `beta`, `beta'`.
/// On the diagonal `(q/r)^{q/r}` is replaced by its limit 1.
pub fn bold_c(e: &Exponents, b: f64, b_dual: f64) -> f64 {
    let (p, q, pc, qc) = (e.p, e.q, e.p_conj, e.q_conj);
    let qr = match (e.zone, e.r) {
        (Zone::QBelowP(_), Some(r)) => (q / r).powf(q / r),
        _ => 1.0,
    };
    let first = (2.0f64 / 3.0).powf(q)
        * b.max(2.0 * q * pc.powf(q - 1.0) * qr)
        * geometric(2.0, p - 1.0).powf(q / p);
    let second = 3.0 * b_dual.powf(1.0 / pc) * geometric(3.0, q - 1.0).powf(1.0 / qc);
    3f64.powf(3.0 * q) * (first + second)
}

/// Every constant defined in the zone of `e`.
pub fn constants(e: &Exponents) -> ConstantSet {
    match e.zone {
        Zone::PBelowQ => {
            let a = alpha_raw(e.p, e.q);
            let ad = alpha_raw(e.q_conj, e.p_conj);
            ConstantSet {
                alpha: Some(a),
                alpha_dual: Some(ad),
                beta: None,
                beta_dual: None,
                bold_beta: None,
                bold_beta_dual: None,
                c_upper: frak_c(e, a, ad),
                c_upper_sum: Some(frak_c(e, 1.0, 1.0)),
                chain_factor: Some(1.0 + a.powf(1.0 / e.q) + ad.powf(1.0 / e.p_conj)),
                c_lower: 1.0,
            }
        }
        Zone::Diagonal => {
            let c = bold_c(e, 1.0, 1.0);
            ConstantSet {
                alpha: None,
                alpha_dual: None,
                beta: None,
                beta_dual: None,
                bold_beta: None,
                bold_beta_dual: None,
                c_upper: c,
                c_upper_sum: Some(c),
                chain_factor: None,
                c_lower: 1.0,
            }
        }
        Zone::QBelowP(z) => {
            let b = beta(e).expect("zone checked");
            let bd = beta_dual(e).expect("zone checked");
            let bb = bold_beta(e).expect("zone checked");
            let bbd = bold_beta_dual(e).expect("zone checked");
            let (c_sum, chain) = match z {
                SubZone::Both => (Some(bold_c(e, 1.0, 1.0)), Some(1.0 + bb + bbd)),
                SubZone::OnlyRp => (Some(bold_c(e, 1.0, bd)), Some(1.0 + bb)),
                SubZone::OnlyRq => (Some(bold_c(e, b, 1.0)), Some(1.0 + bbd)),
                SubZone::Neither => (None, None),
            };
            ConstantSet {
                alpha: None,
                alpha_dual: None,
                beta: Some(b),
                beta_dual: Some(bd),
                bold_beta: Some(bb),
                bold_beta_dual: Some(bbd),
                c_upper: bold_c(e, b, bd),
                c_upper_sum: c_sum,
                chain_factor: chain,
                c_lower: c_lower(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn arithmetic_examples() {
        let e = Exponents::new(2.0, 3.0).unwrap();
        assert_eq!(alpha(&e).unwrap(), 8.0);
        let e = Exponents::new(4.0, 2.0).unwrap();
        assert_relative_eq!(beta(&e).unwrap(), 8.0 / (2f64.sqrt() - 1.0), epsilon = 1e-12);
        assert_relative_eq!(c_lower(&e), 0.18452, epsilon = 1e-4);
        let direct = 2f64.powf(-0.75) * 0.5f64.sqrt() * (1.0f64 / 3.0).powf(0.75);
        assert_relative_eq!(c_lower(&e), direct, epsilon = 1e-15);
    }

    #[test]
    fn wrong_zone_requests_fail() {
        let lo = Exponents::new(2.0, 3.0).unwrap();
        let hi = Exponents::new(3.0, 2.0).unwrap();
        assert!(beta(&lo).is_err());
        assert!(bold_beta(&lo).is_err());
        assert!(alpha(&hi).is_err());
        assert!(alpha_dual(&Exponents::new(2.0, 2.0).unwrap()).is_err());
    }

    #[test]
    fn constant_sets_are_finite_and_positive() {
        for (p, q) in [(2.0, 3.0), (3.0, 2.0), (2.0, 2.0), (6.0, 1.5), (1.2, 1.1), (5.0, 1.3)] {
            let c = constants(&Exponents::new(p, q).unwrap());
            for x in [Some(c.c_upper), c.c_upper_sum, c.chain_factor, Some(c.c_lower)]
                .into_iter()
                .flatten()
            {
                assert!(x.is_finite() && x > 0.0, "({p},{q}) {c:?}");
            }
        }
    }

    #[test]
    fn lower_constant_matches_halved_form() {
        // 2^{-1/p'} (p'/r)^{1/p'} = (p'/(2r))^{1/p'}
        let e = Exponents::new(3.0, 2.0).unwrap();
        let r = e.r.unwrap();
        let alt = (e.q / r).powf(1.0 / e.q) * (e.p_conj / (2.0 * r)).powf(1.0 / e.p_conj);
        assert_relative_eq!(c_lower(&e), alt, epsilon = 1e-14);
    }
}
