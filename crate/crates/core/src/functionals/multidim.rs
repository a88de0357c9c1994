//! Functionals for weights that factor into one-variable pieces. Each one
//! needs only 1-d cumulations of the factors plus one n-d reduction.

use ndarray::{ArrayD, Axis, Slice, Zip};
use serde::{Deserialize, Serialize};

use super::{guarded_map2, sup_value, FunctionalValue, Problem};
use crate::error::{Error, Result};
use crate::grid::{outer_product, prefix_cumulate, suffix_cumulate, GridN};
use crate::numeric::{ln_pow, pow, signed_log_sum};
use crate::weights::{dual_weight, Factor, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultidimKind {
    #[serde(rename = "AMn")]
    AMn,
    #[serde(rename = "ATn")]
    ATn,
    #[serde(rename = "AMn*")]
    AMnStar,
    #[serde(rename = "ATn*")]
    ATnStar,
    #[serde(rename = "BMRn")]
    BMRn,
    #[serde(rename = "BPSn")]
    BPSn,
    #[serde(rename = "BMRn*")]
    BMRnStar,
    #[serde(rename = "BPSn*")]
    BPSnStar,
    #[serde(rename = "AW")]
    AW,
}

impl MultidimKind {
    pub const ALL: [MultidimKind; 9] = [
        MultidimKind::AMn,
        MultidimKind::ATn,
        MultidimKind::AMnStar,
        MultidimKind::ATnStar,
        MultidimKind::BMRn,
        MultidimKind::BPSn,
        MultidimKind::BMRnStar,
        MultidimKind::BPSnStar,
        MultidimKind::AW,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MultidimKind::AMn => "AMn",
            MultidimKind::ATn => "ATn",
            MultidimKind::AMnStar => "AMn*",
            MultidimKind::ATnStar => "ATn*",
            MultidimKind::BMRn => "BMRn",
            MultidimKind::BPSn => "BPSn",
            MultidimKind::BMRnStar => "BMRn*",
            MultidimKind::BPSnStar => "BPSn*",
            MultidimKind::AW => "AW",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Starred functionals need a factorized `w`, the others a factorized `v`.
    pub fn needs_factorized_w(&self) -> bool {
        matches!(
            self,
            MultidimKind::AMnStar
                | MultidimKind::ATnStar
                | MultidimKind::BMRnStar
                | MultidimKind::BPSnStar
        )
    }

    pub fn is_q_below_p(&self) -> bool {
        matches!(
            self,
            MultidimKind::BMRn | MultidimKind::BPSn | MultidimKind::BMRnStar | MultidimKind::BPSnStar
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultidimParams {
    pub s1: Option<f64>,
    pub s2: Option<f64>,
}

/// Per-axis samples and their 1-d cumulations.
struct Factors {
    samples: Vec<Vec<f64>>,
    widths: Vec<Vec<f64>>,
    /// Node values of the 1-d cumulation (prefix or suffix).
    nodes: Vec<Vec<f64>>,
}

impl Factors {
    fn build(samples: Vec<Vec<f64>>, grid: &GridN, prefix: bool) -> Self {
        let widths: Vec<Vec<f64>> = (0..grid.dim()).map(|d| grid.widths(d)).collect();
        let nodes = samples
            .iter()
            .zip(&widths)
            .map(|(s, h)| if prefix { prefix_1d(s, h) } else { suffix_1d(s, h) })
            .collect();
        Self {
            samples,
            widths,
            nodes,
        }
    }

    fn node_map(&self, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|a| a.iter().map(|&x| f(x)).collect()).collect()
    }

    fn upper(&self, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|a| a[1..].iter().map(|&x| f(x)).collect()).collect()
    }

    fn lower(&self, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
        self.nodes
            .iter()
            .map(|a| a[..a.len() - 1].iter().map(|&x| f(x)).collect())
            .collect()
    }

    fn mid(&self) -> Vec<Vec<f64>> {
        self.nodes
            .iter()
            .map(|a| a.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
            .collect()
    }

    /// `ln(mid cumulation^k * sample * width)` per axis.
    fn ln_mid_density(&self, k: f64) -> Vec<Vec<f64>> {
        self.mid()
            .iter()
            .zip(&self.samples)
            .zip(&self.widths)
            .map(|((m, s), h)| {
                m.iter()
                    .zip(s)
                    .zip(h)
                    .map(|((&m, &s), &h)| ln_pow(s * h, 1.0) + ln_pow(m, k))
                    .collect()
            })
            .collect()
    }
}

/// Tensor sum `a_1[i_1] + ... + a_n[i_n]`.
fn outer_sum(factors: &[Vec<f64>]) -> ArrayD<f64> {
    let shape: Vec<usize> = factors.iter().map(Vec::len).collect();
    ArrayD::from_shape_fn(ndarray::IxDyn(&shape), |idx| {
        (0..factors.len()).map(|d| factors[d][idx[d]]).sum()
    })
}

fn prefix_1d(s: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for (x, dx) in s.iter().zip(h) {
        acc += x * dx;
        out.push(acc);
    }
    out
}

fn suffix_1d(s: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.len() + 1];
    let mut acc = 0.0;
    for k in (0..s.len()).rev() {
        acc += s[k] * h[k];
        out[k] = acc;
    }
    out
}

/// Average of the `2^n` corner values of every cell.
fn corner_mean(nodes: &ArrayD<f64>) -> ArrayD<f64> {
    let mut a = nodes.clone();
    for ax in 0..a.ndim() {
        let lo = a.slice_axis(Axis(ax), Slice::from(..-1)).to_owned();
        let hi = a.slice_axis(Axis(ax), Slice::from(1..));
        a = (lo + hi) * 0.5;
    }
    a
}

fn sigma_factors(pb: &Problem, what: &str) -> Result<(Weight, Factors)> {
    let v = pb
        .v_weight
        .as_ref()
        .filter(|v| v.is_factorized())
        .ok_or_else(|| Error::NotFactorized(format!("{what} (weight v)")))?;
    let sigma = dual_weight(v, &pb.e)?;
    let samples = sigma
        .sample_factors(pb.grid())
        .ok_or_else(|| Error::NotFactorized(format!("{what} (weight v)")))?;
    Ok((sigma, Factors::build(samples, pb.grid(), true)))
}

fn w_factors(pb: &Problem, what: &str) -> Result<(Weight, Factors)> {
    let w = pb
        .w_weight
        .as_ref()
        .filter(|w| w.is_factorized())
        .ok_or_else(|| Error::NotFactorized(format!("{what} (weight w)")))?;
    let samples = w
        .sample_factors(pb.grid())
        .ok_or_else(|| Error::NotFactorized(format!("{what} (weight w)")))?;
    Ok((w.clone(), Factors::build(samples, pb.grid(), false)))
}

/// Whether the 1-d integrals of every factor keep growing when the
/// truncation is widened three times by a factor of 2 towards `∞`
/// (`towards_infinity`) or towards 0.
fn divergence_note(weight: &Weight, grid: &GridN, towards_infinity: bool, label: &str) -> String {
    let Some((c, factors)) = weight.as_factors() else {
        return format!("{label}: not applicable");
    };
    if c == 0.0 {
        return format!("{label}: not observed (weight vanishes)");
    }
    let mut failing = Vec::new();
    for (d, f) in factors.iter().enumerate() {
        let (a, b) = (grid.axis(d)[0], *grid.axis(d).last().unwrap());
        if !grows(f, a, b, towards_infinity) {
            failing.push(d);
        }
    }
    if failing.is_empty() {
        format!("{label}: asymptotically checked")
    } else {
        format!("{label}: not observed on axes {failing:?}")
    }
}

fn grows(f: &Factor, a: f64, b: f64, towards_infinity: bool) -> bool {
    let integral = |k: i32| {
        let s = 2f64.powi(k);
        if towards_infinity {
            f.integral(a, b * s)
        } else {
            f.integral(a / s, b)
        }
    };
    let vals: Vec<f64> = (0..=3).map(integral).collect();
    if vals.iter().any(|v| v.is_infinite()) {
        return true;
    }
    vals.windows(2).all(|w| w[0] > 0.0 && w[1] / w[0] - 1.0 >= 0.01)
}

fn check_zone(kind: MultidimKind, pb: &Problem) -> Result<()> {
    let e = &pb.e;
    if kind.is_q_below_p() {
        e.r_q_below_p(kind.name())?;
    } else if e.zone.is_q_below_p() {
        return Err(Error::WrongZone {
            what: kind.name().to_string(),
            zone: "p <= q",
        });
    }
    Ok(())
}

pub fn multidim_functional(
    kind: MultidimKind,
    pb: &Problem,
    params: &MultidimParams,
) -> Result<FunctionalValue> {
    check_zone(kind, pb)?;
    let e = pb.e;
    let grid = pb.grid().clone();
    let name = kind.name();
    let note;
    let value = match kind {
        MultidimKind::AMn => {
            let (_, s) = sigma_factors(pb, name)?;
            let prod = outer_product(&s.node_map(|x| pow(x, 1.0 / e.p_conj)));
            let nodes = guarded_map2(pb.wstar.values().view(), 1.0 / e.q, prod.view(), 1.0);
            return Ok(sup_value(name, &grid, &nodes));
        }
        MultidimKind::ATn => {
            let (_, s) = sigma_factors(pb, name)?;
            let dens = outer_product(&s.upper(|x| pow(x, e.q))) * pb.w.values();
            let inner = prefix_cumulate(&pb.cell_field(dens)?);
            let prod = outer_product(&s.nodes);
            let nodes = guarded_map2(inner.values().view(), 1.0 / e.q, prod.view(), -1.0 / e.p);
            return Ok(sup_value(name, &grid, &nodes));
        }
        MultidimKind::AMnStar => {
            let (_, wf) = w_factors(pb, name)?;
            let prod = outer_product(&wf.node_map(|x| pow(x, 1.0 / e.q)));
            let nodes = guarded_map2(pb.s.values().view(), 1.0 / e.p_conj, prod.view(), 1.0);
            return Ok(sup_value(name, &grid, &nodes));
        }
        MultidimKind::ATnStar => {
            let (_, wf) = w_factors(pb, name)?;
            let dens = outer_product(&wf.lower(|x| pow(x, e.p_conj))) * pb.sigma.values();
            let inner = suffix_cumulate(&pb.cell_field(dens)?);
            let prod = outer_product(&wf.nodes);
            let nodes = guarded_map2(
                inner.values().view(),
                1.0 / e.p_conj,
                prod.view(),
                -1.0 / e.q_conj,
            );
            return Ok(sup_value(name, &grid, &nodes));
        }
        MultidimKind::AW => {
            if grid.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: grid.dim(),
                });
            }
            let (s1, s2) = match (params.s1, params.s2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::config("s1/s2", "AW needs both s1 and s2")),
            };
            for (nm, s) in [("s1", s1), ("s2", s2)] {
                if !(s > 1.0 && s < e.p) {
                    return Err(Error::out_of_range(nm, format!("{s} not in (1, {})", e.p)));
                }
            }
            let (_, s) = sigma_factors(pb, name)?;
            let mid = s.mid();
            let inner_exp = [e.q * (e.p - s1) / e.p, e.q * (e.p - s2) / e.p];
            let outer_exp = [(s1 - 1.0) / e.p, (s2 - 1.0) / e.p];
            let dens_f: Vec<Vec<f64>> = mid
                .iter()
                .zip(inner_exp)
                .map(|(m, k)| m.iter().map(|&x| pow(x, k)).collect())
                .collect();
            let dens = outer_product(&dens_f) * pb.w.values();
            let inner = suffix_cumulate(&pb.cell_field(dens)?);
            let node_f: Vec<Vec<f64>> = s
                .nodes
                .iter()
                .zip(outer_exp)
                .map(|(n, k)| n.iter().map(|&x| pow(x, k)).collect())
                .collect();
            let prod = outer_product(&node_f);
            let nodes = guarded_map2(inner.values().view(), 1.0 / e.q, prod.view(), 1.0);
            return Ok(sup_value(name, &grid, &nodes));
        }
        MultidimKind::BMRn => {
            let r = e.r_q_below_p(name)?;
            let (sigma, s) = sigma_factors(pb, name)?;
            note = Some(divergence_note(&sigma, &grid, true, "I_1 sigma_i(inf) = inf"));
            let outer = outer_sum(&s.ln_mid_density(r / e.q_conj));
            let wmid = corner_mean(pb.wstar.values());
            reduce(&outer, &wmid, r / e.q, r)
        }
        MultidimKind::BPSn => {
            let r = e.r_q_below_p(name)?;
            let (sigma, s) = sigma_factors(pb, name)?;
            note = Some(divergence_note(&sigma, &grid, true, "I_1 sigma_i(inf) = inf"));
            let dens = outer_product(
                &s.mid()
                    .iter()
                    .map(|m| m.iter().map(|&x| pow(x, e.q)).collect())
                    .collect::<Vec<_>>(),
            ) * pb.w.values();
            let inner = corner_mean(prefix_cumulate(&pb.cell_field(dens)?).values());
            let outer = outer_sum(&s.ln_mid_density(-r / e.q));
            reduce(&outer, &inner, r / e.q, r)
        }
        MultidimKind::BMRnStar => {
            let r = e.r_q_below_p(name)?;
            let (w, wf) = w_factors(pb, name)?;
            note = Some(divergence_note(&w, &grid, false, "I_1^* w_i(0) = inf"));
            let outer = outer_sum(&wf.ln_mid_density(r / e.p));
            let smid = corner_mean(pb.s.values());
            reduce(&outer, &smid, r / e.p_conj, r)
        }
        MultidimKind::BPSnStar => {
            let r = e.r_q_below_p(name)?;
            let (w, wf) = w_factors(pb, name)?;
            note = Some(divergence_note(&w, &grid, false, "I_1^* w_i(0) = inf"));
            let dens = outer_product(
                &wf.mid()
                    .iter()
                    .map(|m| m.iter().map(|&x| pow(x, e.p_conj)).collect())
                    .collect::<Vec<_>>(),
            ) * pb.sigma.values();
            let inner = corner_mean(suffix_cumulate(&pb.cell_field(dens)?).values());
            let outer = outer_sum(&wf.ln_mid_density(-r / e.p_conj));
            reduce(&outer, &inner, r / e.p_conj, r)
        }
    };
    let mut fv = FunctionalValue::plain(name, value);
    fv.note = note;
    Ok(fv)
}

/// `(sum exp(ln_outer) * inner^k)^{1/r}` in log scale; a vanishing factor
/// zeroes its term whatever the sign of its exponent.
fn reduce(ln_outer: &ArrayD<f64>, inner: &ArrayD<f64>, k: f64, r: f64) -> f64 {
    let mut terms = ArrayD::zeros(ln_outer.raw_dim());
    Zip::from(&mut terms)
        .and(ln_outer)
        .and(inner)
        .par_for_each(|t, &o, &i| {
            let li = ln_pow(i, k);
            *t = if o == f64::NEG_INFINITY || li == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                o + li
            };
        });
    let (ln_sum, _) = signed_log_sum(terms.iter().map(|&l| (l, false)));
    (ln_sum / r).exp()
}
