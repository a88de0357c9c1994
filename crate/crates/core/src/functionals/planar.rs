//! The A-, B- and B_v-families on a two-dimensional (or, for A and B_v,
//! any-dimensional) grid.
//!
//! Cell-level uses of the cumulative tables follow one rule throughout:
//! `I sigma` is read at the upper corner of a cell and `I^* w` at its lower
//! corner, which is exactly how the discrete operator and its adjoint see
//! them.

use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use super::{guarded_map2, sup_value, FunctionalValue, Problem};
use crate::error::Result;
use crate::grid::{
    prefix_cumulate, stieltjes_box_integral, stieltjes_form2, stieltjes_form3, stieltjes_log,
    suffix_cumulate, CumField, NodeField,
};
use crate::numeric::{ln_pow, pow, signed_log_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AKind {
    A1,
    A2,
    A3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BKind {
    B1,
    B2,
    B3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BvKind {
    Bv,
    Bw,
}

/// Cell field `(I sigma at upper corner)^q * w`.
fn a2_density(pb: &Problem, power: f64) -> ArrayD<f64> {
    let mut out = pb.w.values().clone();
    Zip::from(&mut out)
        .and(pb.s.cell_values())
        .par_for_each(|o, &s| *o = if *o == 0.0 { 0.0 } else { *o * pow(s, power) });
    out
}

/// Cell field `(I^* w at lower corner)^{p'} * sigma`.
fn a3_density(pb: &Problem, power: f64) -> ArrayD<f64> {
    let mut out = pb.sigma.values().clone();
    Zip::from(&mut out)
        .and(pb.wstar.cell_values())
        .par_for_each(|o, &w| *o = if *o == 0.0 { 0.0 } else { *o * pow(w, power) });
    out
}

/// `I_n` of the A2 density: `∫_0^t (I sigma)^q w` at every node.
pub(crate) fn a2_inner(pb: &Problem) -> Result<CumField> {
    Ok(prefix_cumulate(&pb.cell_field(a2_density(pb, pb.e.q))?))
}

/// `I_n^*` of the A3 density: `∫_t^∞ (I^* w)^{p'} sigma` at every node.
pub(crate) fn a3_inner(pb: &Problem) -> Result<CumField> {
    Ok(suffix_cumulate(&pb.cell_field(a3_density(pb, pb.e.p_conj))?))
}

/// Supremum over grid nodes of the A-type expression.
pub fn a_functional(which: AKind, pb: &Problem) -> Result<FunctionalValue> {
    let e = &pb.e;
    let grid = pb.grid();
    let nodes = match which {
        AKind::A1 => guarded_map2(
            pb.wstar.values().view(),
            1.0 / e.q,
            pb.s.values().view(),
            1.0 / e.p_conj,
        ),
        AKind::A2 => {
            let inner = a2_inner(pb)?;
            guarded_map2(inner.values().view(), 1.0 / e.q, pb.s.values().view(), -1.0 / e.p)
        }
        AKind::A3 => {
            let inner = a3_inner(pb)?;
            guarded_map2(
                inner.values().view(),
                1.0 / e.p_conj,
                pb.wstar.values().view(),
                -1.0 / e.q_conj,
            )
        }
    };
    Ok(sup_value(&format!("{which:?}"), grid, &nodes))
}

fn b1_fields(pb: &Problem, r: f64) -> (NodeField, NodeField) {
    let e = &pb.e;
    let phi = pb.s.map(|x| pow(x, r / e.p_conj));
    let psi = pb.wstar.map(|x| pow(x, r / e.q));
    (phi, psi)
}

/// `B_1^r` evaluated by the corner form and the two summation-by-parts
/// rearrangements, in that order.
pub fn b1_forms(pb: &Problem) -> Result<[f64; 3]> {
    pb.require_2d("B1")?;
    let r = pb.e.r_q_below_p("B1")?;
    let (phi, psi) = b1_fields(pb, r);
    Ok([
        stieltjes_box_integral(&phi, &psi)?,
        stieltjes_form2(&phi, &psi)?,
        stieltjes_form3(&phi, &psi)?,
    ])
}

/// `B_i` for `q < p` on a 2-d grid. The sums are formed in log scale since
/// `B_i^r` leaves the floating range long before `B_i` does.
pub fn b_functional(which: BKind, pb: &Problem) -> Result<FunctionalValue> {
    pb.require_2d(&format!("{which:?}"))?;
    let r = pb.e.r_q_below_p(&format!("{which:?}"))?;
    let e = &pb.e;
    let (integrand, psi) = match which {
        BKind::B1 => (
            pb.s.node_field().lower_corners().mapv(|x| ln_pow(x, r / e.p_conj)),
            pb.wstar.values().mapv(|x| ln_pow(x, r / e.q)),
        ),
        BKind::B2 => (
            pb.s.cell_values().mapv(|x| ln_pow(x, -r / e.p)),
            a2_inner(pb)?.values().mapv(|x| ln_pow(x, r / e.q)),
        ),
        BKind::B3 => (
            pb.wstar.cell_values().mapv(|x| ln_pow(x, -r / e.q_conj)),
            a3_inner(pb)?.values().mapv(|x| ln_pow(x, r / e.p_conj)),
        ),
    };
    let (ln_sum, neg) = stieltjes_log(
        &integrand.view().into_dimensionality()?,
        &psi.view().into_dimensionality()?,
    )?;
    let mut fv = FunctionalValue::plain(&format!("{which:?}"), (ln_sum / r).exp());
    fv.negative_mass_fraction = Some(neg);
    Ok(fv)
}

/// `B_v` and its dual `B_w` for `q < p`, any dimension.
pub fn bv_functional(which: BvKind, pb: &Problem) -> Result<FunctionalValue> {
    let r = pb.e.r_q_below_p(&format!("{which:?}"))?;
    let e = &pb.e;
    let (outer_weight, inner, power) = match which {
        BvKind::Bv => {
            let dens = a2_density(pb, e.q - 1.0);
            let inner = suffix_cumulate(&pb.cell_field(dens)?);
            (&pb.sigma, inner, r / e.q)
        }
        BvKind::Bw => {
            let dens = a3_density(pb, e.p_conj - 1.0);
            let inner = prefix_cumulate(&pb.cell_field(dens)?);
            (&pb.w, inner, r / e.p_conj)
        }
    };
    let mut terms = outer_weight.values().clone();
    Zip::from(&mut terms)
        .and(inner.cell_values())
        .and(&pb.volumes)
        .par_for_each(|t, &x, &dv| {
            *t = ln_pow(*t * dv, 1.0) + ln_pow(x, power);
        });
    let (ln_sum, _) = signed_log_sum(terms.iter().map(|&l| (l, false)));
    Ok(FunctionalValue::plain(&format!("{which:?}"), (ln_sum / r).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridN;
    use crate::weights::{Exponents, Weight};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn unit(p: f64, q: f64, nodes: usize, w: f64) -> Problem {
        let g = Arc::new(GridN::linear(2, 0.0, 1.0, nodes).unwrap());
        Problem::new(
            &Weight::constant(2, 1.0),
            &Weight::constant(2, w),
            Exponents::new(p, q).unwrap(),
            g,
        )
        .unwrap()
    }

    #[test]
    fn a1_of_unit_square_is_one_quarter() {
        let pb = unit(2.0, 2.0, 65, 1.0);
        let a1 = a_functional(AKind::A1, &pb).unwrap();
        assert_relative_eq!(a1.value, 0.25, epsilon = 1e-14);
        assert_eq!(a1.witness.unwrap().point, vec![0.5, 0.5]);
    }

    #[test]
    fn log_scale_b1_matches_linear_forms() {
        let g = Arc::new(GridN::log(2, 1e-2, 1e2, 33).unwrap());
        let pb = Problem::new(
            &Weight::power(1.0, vec![0.3, -0.2]),
            &Weight::power(2.0, vec![-0.5, 0.4]),
            Exponents::new(3.0, 2.0).unwrap(),
            g,
        )
        .unwrap();
        let r = pb.e.r.unwrap();
        let forms = b1_forms(&pb).unwrap();
        let b1 = b_functional(BKind::B1, &pb).unwrap().value;
        assert_relative_eq!(b1.powf(r), forms[0], max_relative = 1e-10);
    }

    #[test]
    fn zero_w_kills_everything() {
        let pb = unit(3.0, 2.0, 9, 0.0);
        for k in [AKind::A1, AKind::A2, AKind::A3] {
            assert_eq!(a_functional(k, &pb).unwrap().value, 0.0);
        }
        for k in [BKind::B1, BKind::B2, BKind::B3] {
            assert_eq!(b_functional(k, &pb).unwrap().value, 0.0);
        }
        assert_eq!(bv_functional(BvKind::Bv, &pb).unwrap().value, 0.0);
        assert_eq!(bv_functional(BvKind::Bw, &pb).unwrap().value, 0.0);
    }

    #[test]
    fn b_family_refuses_p_below_q() {
        let pb = unit(2.0, 3.0, 9, 1.0);
        assert!(b_functional(BKind::B1, &pb).is_err());
        assert!(bv_functional(BvKind::Bv, &pb).is_err());
    }

    #[test]
    fn b1_forms_agree() {
        let pb = unit(3.0, 2.0, 33, 1.0);
        let [a, b, c] = b1_forms(&pb).unwrap();
        assert!(crate::numeric::rel_diff(a, b) < 1e-12);
        assert!(crate::numeric::rel_diff(a, c) < 1e-12);
    }
}
