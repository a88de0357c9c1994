//! Assembly of the bounds report shared by the `functionals`, `norm` and
//! `sweep` commands.

use std::sync::Arc;

use serde::Serialize;

use super::config::{RunConfig, SpacingKind};
use crate::error::{Error, Result};
use crate::functionals::{
    a_functional, b_functional, bv_functional, constants, multidim_functional, sandwich,
    zone_chain, AKind, BKind, BvKind, ChainRecord, ConstantSet, FunctionalValue, MultidimKind,
    MultidimParams, Problem, Sandwich,
};
use crate::grid::GridN;
use crate::normest::{ascend, probe_b, probe_rectangles, ProbeB, ProbeResult, StartTrace};
use crate::numeric::rel_diff;
use crate::weights::{Exponents, Weight};

/// Relative change above which a functional is flagged as depending on the
/// truncation.
pub const TRUNCATION_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub dims: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub nodes_per_axis: usize,
    pub spacing: SpacingKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormSummary {
    pub estimate: f64,
    pub probe_lower: f64,
    pub converged: bool,
    pub rectangle_probes: Vec<ProbeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_b: Option<ProbeB>,
    pub traces: Vec<StartTrace>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub lower_source: String,
    /// Absent when no theorem bound applies (dimension other than 2).
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_source: Option<String>,
}

impl Interval {
    pub fn is_consistent(&self) -> bool {
        self.upper
            .is_none_or(|u| self.lower <= u * (1.0 + crate::functionals::chain::SLACK))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub command: String,
    pub exponents: Exponents,
    pub zone: &'static str,
    pub grid: GridSummary,
    pub functionals: Vec<FunctionalValue>,
    pub constants: ConstantSet,
    pub chain: ChainRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_bounds: Option<Sandwich>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_interval: Option<Interval>,
    pub warnings: Vec<String>,
}

impl BoundsReport {
    /// Chains hold and the interval is not inverted.
    pub fn passed(&self) -> bool {
        self.chain.passed && self.certified_interval.as_ref().is_none_or(Interval::is_consistent)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.functionals.iter().find(|v| v.name == name).map(|v| v.value)
    }
}

const PLANAR_A: [&str; 3] = ["A1", "A2", "A3"];
const PLANAR_B: [&str; 5] = ["B1", "B2", "B3", "Bv", "Bw"];

fn default_names(cfg: &RunConfig, e: &Exponents) -> Vec<String> {
    let mut names: Vec<&str> = Vec::new();
    let q_below = e.zone.is_q_below_p();
    if cfg.dims == 2 {
        if q_below {
            names.extend(PLANAR_B);
        } else {
            names.extend(PLANAR_A);
        }
    } else if q_below {
        names.extend(["Bv", "Bw"]);
    }
    for k in MultidimKind::ALL {
        let weight = if k.needs_factorized_w() { &cfg.weight_w } else { &cfg.weight_v };
        let zone_ok = k.is_q_below_p() == q_below;
        let aw_ok = k != MultidimKind::AW || (cfg.dims == 2 && cfg.s1.is_some() && cfg.s2.is_some());
        if weight.is_factorized() && zone_ok && aw_ok {
            names.push(k.name());
        }
    }
    names.into_iter().map(String::from).collect()
}

/// Functionals that cannot be evaluated for this configuration are dropped
/// with a warning; unknown names are a configuration error.
fn evaluate_named(name: &str, pb: &Problem, params: &MultidimParams) -> Result<FunctionalValue> {
    match name {
        "A1" => a_functional(AKind::A1, pb),
        "A2" => a_functional(AKind::A2, pb),
        "A3" => a_functional(AKind::A3, pb),
        "B1" => b_functional(BKind::B1, pb),
        "B2" => b_functional(BKind::B2, pb),
        "B3" => b_functional(BKind::B3, pb),
        "Bv" => bv_functional(BvKind::Bv, pb),
        "Bw" => bv_functional(BvKind::Bw, pb),
        other => match MultidimKind::parse(other) {
            Some(k) => multidim_functional(k, pb, params),
            None => Err(Error::config("functionals", format!("unknown functional {other:?}"))),
        },
    }
}

fn is_inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::WrongZone { .. }
            | Error::NotFactorized(..)
            | Error::DimensionMismatch { .. }
            | Error::InvalidGrid(..)
    )
}

fn evaluate_all(
    names: &[String],
    pb: &Problem,
    params: &MultidimParams,
    warnings: &mut Vec<String>,
) -> Result<Vec<FunctionalValue>> {
    let mut out = Vec::new();
    for n in names {
        match evaluate_named(n, pb, params) {
            Ok(v) => out.push(v),
            Err(e) if is_inapplicable(&e) => warnings.push(format!("{n} omitted: {e}")),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// What to compute besides the functionals.
#[derive(Clone, Copy, Debug)]
pub struct Scope {
    pub norm: bool,
    pub truncation_check: bool,
}

pub fn evaluate(
    command: &str,
    cfg: &RunConfig,
    e: Exponents,
    grid: &Arc<GridN>,
    scope: Scope,
) -> Result<BoundsReport> {
    let pb = Problem::new(&cfg.weight_v, &cfg.weight_w, e, grid.clone())?;
    let params = MultidimParams {
        s1: cfg.s1,
        s2: cfg.s2,
    };
    let mut warnings = Vec::new();
    let names = cfg.functionals.clone().unwrap_or_else(|| default_names(cfg, &e));
    let values = evaluate_all(&names, &pb, &params, &mut warnings)?;

    for v in &values {
        if let Some(f) = v.negative_mass_fraction {
            if f > 0.0 {
                warnings.push(format!("{}: signed mass, negative share {f:e}", v.name));
            }
        }
        if !v.value.is_finite() {
            warnings.push(format!("{} is not finite on this grid", v.name));
        }
        if let Some(n) = &v.note {
            warnings.push(format!("{}: {n}", v.name));
        }
    }
    if scope.truncation_check && !values.is_empty() {
        truncation_warnings(cfg, e, &names, &params, &values, &mut warnings)?;
    }

    let c = constants(&e);
    let chain = zone_chain(&e, &values);
    let theorem = sandwich(&e, &c, &values);

    let norm = if scope.norm {
        let est = ascend(&pb, &cfg.ascent())?;
        let rects = probe_rectangles(&pb)?;
        let pbb = if e.zone.is_q_below_p() && cfg.dims == 2 {
            match probe_b(&pb) {
                Ok(b) => Some(b),
                Err(err) => {
                    warnings.push(format!("probe_B skipped: {err}"));
                    None
                }
            }
        } else {
            None
        };
        Some(NormSummary {
            estimate: est.value,
            probe_lower: est.probe_lower,
            converged: est.converged,
            rectangle_probes: rects.to_vec(),
            probe_b: pbb,
            traces: est.traces,
        })
    } else {
        None
    };

    let interval = certified_interval(theorem.as_ref(), norm.as_ref());
    if let (Some(n), Some(iv)) = (&norm, &interval) {
        if let Some(u) = iv.upper {
            if n.estimate > u {
                warnings.push(format!("estimate {} exceeds the theorem upper bound {u}", n.estimate));
            }
        }
    }
    if !chain.passed {
        warnings.push("a chained estimate between functionals failed".into());
    }

    Ok(BoundsReport {
        command: command.to_string(),
        exponents: e,
        zone: e.zone.tag(),
        grid: GridSummary {
            dims: cfg.dims,
            x_min: grid.axis(0)[0],
            x_max: *grid.axis(0).last().expect("nonempty axis"),
            nodes_per_axis: grid.axis(0).len(),
            spacing: cfg.spacing(),
        },
        functionals: values,
        constants: c,
        chain,
        theorem_bounds: theorem,
        norm,
        certified_interval: interval,
        warnings,
    })
}

fn certified_interval(theorem: Option<&Sandwich>, norm: Option<&NormSummary>) -> Option<Interval> {
    let mut lower: Option<(f64, String)> = theorem.map(|s| (s.lower.value, s.lower.source.clone()));
    if let Some(n) = norm {
        if lower.as_ref().is_none_or(|(l, _)| n.probe_lower > *l) {
            lower = Some((n.probe_lower, "test-function probe".into()));
        }
    }
    let (lower, lower_source) = lower?;
    let (upper, upper_source) = match theorem {
        Some(s) if s.upper.is_finite() => {
            let src = s
                .uppers
                .iter()
                .find(|b| b.value == s.upper)
                .map(|b| b.source.clone());
            (Some(s.upper), src)
        }
        _ => (None, None),
    };
    Some(Interval {
        lower,
        lower_source,
        upper,
        upper_source,
    })
}

fn truncation_warnings(
    cfg: &RunConfig,
    e: Exponents,
    names: &[String],
    params: &MultidimParams,
    values: &[FunctionalValue],
    warnings: &mut Vec<String>,
) -> Result<()> {
    let tabulated = |w: &Weight| matches!(w, Weight::Table { .. });
    if tabulated(&cfg.weight_v) || tabulated(&cfg.weight_w) {
        warnings.push("truncation sensitivity not assessed for tabulated weights".into());
        return Ok(());
    }
    let wide = cfg.grid_with_max(2.0 * cfg.x_max())?;
    let pb = Problem::new(&cfg.weight_v, &cfg.weight_w, e, wide)?;
    let mut ignored = Vec::new();
    let wide_values = evaluate_all(names, &pb, params, &mut ignored)?;
    for v in values {
        if let Some(w) = wide_values.iter().find(|w| w.name == v.name) {
            let change = rel_diff(v.value, w.value);
            if change > TRUNCATION_TOLERANCE || (v.value.is_finite() != w.value.is_finite()) {
                warnings.push(format!(
                    "{} changes by {:.1}% when x_max doubles ({} -> {})",
                    v.name,
                    100.0 * change,
                    v.value,
                    w.value
                ));
            }
        }
    }
    Ok(())
}
