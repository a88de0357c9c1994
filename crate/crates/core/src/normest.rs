//! Direct estimation of the best constant
//! `C = sup ||I_n f||_{L^q_w} / ||f||_{L^p_v}` over nonnegative `f`.
//!
//! Lower bounds come from explicit test functions (rectangle indicators and
//! the `sigma * J` probe); the estimate itself comes from iterating the
//! Euler-Lagrange fixed point
//! `f <- sigma * [I^*((I f)^{q-1} w)]^{1/(p-1)}`, which keeps `f >= 0`.

use ndarray::{Array2, ArrayD, Axis, Slice, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{b_functional, BKind, Problem, Witness};
use crate::grid::{apply_lower, apply_upper, cumulate_axes, CellField, Direction};
use crate::numeric::{compensated_sum, pow, rel_diff};

/// `(∫ (I f)^q w, ∫ f^p v, I f)` for a cell array `f`.
fn ratio_parts(pb: &Problem, f: &ArrayD<f64>) -> (f64, f64, ArrayD<f64>) {
    let e = &pb.e;
    let tf = apply_lower(f, &pb.volumes);
    let mut num = ArrayD::zeros(f.raw_dim());
    Zip::from(&mut num)
        .and(&tf)
        .and(pb.w.values())
        .and(&pb.volumes)
        .par_for_each(|o, &t, &w, &dv| *o = if w == 0.0 { 0.0 } else { pow(t, e.q) * w * dv });
    let mut den = ArrayD::zeros(f.raw_dim());
    Zip::from(&mut den)
        .and(f)
        .and(pb.v.values())
        .and(&pb.volumes)
        .par_for_each(|o, &x, &v, &dv| *o = if x == 0.0 { 0.0 } else { pow(x, e.p) * v * dv });
    (
        compensated_sum(num.iter().copied()),
        compensated_sum(den.iter().copied()),
        tf,
    )
}

/// `||I_n f||_{L^q_w} / ||f||_{L^p_v}` on the grid.
pub fn rayleigh_ratio(f: &CellField, pb: &Problem) -> Result<f64> {
    f.ensure_same_grid(&pb.v)?;
    if !f.is_nonnegative() {
        return Err(Error::InvalidWeight("test function must be nonnegative".into()));
    }
    let (num, den, _) = ratio_parts(pb, f.values());
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator("∫ f^p v vanishes".into()));
    }
    Ok(num.max(0.0).powf(1.0 / pb.e.q) / den.powf(1.0 / pb.e.p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// `f = sigma * 1_{(0,t)}`.
    SigmaWeighted,
    /// `f = 1_{(0,t)}`.
    Indicator,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub ratio: f64,
    /// Upper corner `t` of the best box `(0, t)`.
    pub witness: Witness,
    #[serde(skip)]
    pub function: CellField,
}

/// `∫ (I_n f_t)^q w` for `f_t = g * 1_{(0,t)}` at every node `t`, where
/// `big_g = I_n g` at the nodes.
///
/// For a cell `c`, `I_n f_t` at its upper corner is `big_g` at the
/// coordinatewise minimum of that corner and `t`. Splitting the cells by
/// which axes have the cell at or beyond `t` turns the sum into one suffix
/// and one prefix cumulation per subset of axes.
fn box_numerators(pb: &Problem, big_g: &ArrayD<f64>) -> ArrayD<f64> {
    let n = pb.dim();
    let q = pb.e.q;
    let wv = pb.w.values() * &pb.volumes;
    let mut total = ArrayD::<f64>::zeros(big_g.raw_dim());
    for mask in 0..(1usize << n) {
        let upper: Vec<usize> = (0..n).filter(|d| mask >> d & 1 == 1).collect();
        let lower: Vec<usize> = (0..n).filter(|d| mask >> d & 1 == 0).collect();
        let wsuf = cumulate_axes(&wv, &upper, Direction::Upper);
        let g = big_g.slice_each_axis(|ax| {
            if mask >> ax.axis.index() & 1 == 1 {
                Slice::from(..)
            } else {
                Slice::from(1..)
            }
        });
        let mut h = wsuf;
        Zip::from(&mut h)
            .and(&g)
            .par_for_each(|h, &g| *h = if *h == 0.0 { 0.0 } else { *h * pow(g, q) });
        let part = cumulate_axes(&h, &lower, Direction::Lower);
        total += &part;
    }
    total
}

fn best_box(pb: &Problem, kind: ProbeKind) -> Result<ProbeResult> {
    let e = &pb.e;
    let (g_nodes, den_nodes, density) = match kind {
        ProbeKind::SigmaWeighted => (
            pb.s.values().clone(),
            pb.s.values().clone(),
            pb.sigma.values().clone(),
        ),
        ProbeKind::Indicator => {
            let ones = ArrayD::from_elem(pb.volumes.raw_dim(), 1.0);
            let all: Vec<usize> = (0..pb.dim()).collect();
            (
                cumulate_axes(&pb.volumes, &all, Direction::Lower),
                cumulate_axes(&(pb.v.values() * &pb.volumes), &all, Direction::Lower),
                ones,
            )
        }
    };
    let num = box_numerators(pb, &g_nodes);
    let mut ratio = ArrayD::zeros(num.raw_dim());
    Zip::from(&mut ratio)
        .and(&num)
        .and(&den_nodes)
        .par_for_each(|r, &n, &d| {
            *r = if d > 0.0 && n > 0.0 {
                n.powf(1.0 / e.q) / d.powf(1.0 / e.p)
            } else {
                0.0
            };
        });
    let (best, witness) = crate::functionals::sup_nodes(pb.grid(), &ratio);
    let t = witness.index.clone();
    let f = ArrayD::from_shape_fn(density.raw_dim(), |idx| {
        if (0..t.len()).all(|d| idx[d] < t[d]) {
            density[&idx]
        } else {
            0.0
        }
    });
    Ok(ProbeResult {
        kind,
        ratio: best,
        witness,
        function: pb.cell_field(f)?,
    })
}

/// Best `sigma`-weighted and raw rectangle probes over all grid nodes, in
/// that order.
pub fn probe_rectangles(pb: &Problem) -> Result<[ProbeResult; 2]> {
    Ok([
        best_box(pb, ProbeKind::SigmaWeighted)?,
        best_box(pb, ProbeKind::Indicator)?,
    ])
}

/// The test function `f = sigma * J` built from `B_1`'s integrand.
#[derive(Clone, Debug)]
pub struct TestFunctionB {
    pub f: CellField,
    /// `J` per cell (the `p`-th root of the x-suffix integral).
    pub j_field: CellField,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeB {
    #[serde(skip)]
    pub test: TestFunctionB,
    pub ratio: f64,
    /// `ln ∫ f^p v`.
    pub ln_lhs: f64,
    /// `ln((p' q / r^2) B_1^r)`.
    pub ln_rhs: f64,
    /// `|lhs - rhs| / max(lhs, rhs)`.
    pub relative_deviation: f64,
}

impl ProbeB {
    pub fn lhs(&self) -> f64 {
        self.ln_lhs.exp()
    }

    pub fn rhs(&self) -> f64 {
        self.ln_rhs.exp()
    }
}

/// Builds `J^p(s, y) = ∫_s^∞ (I sigma)^{r/q'} (I^* w)^{r/p} (∫_y^∞ w(x,t) dt) dx`
/// column by column and evaluates the probe. The tags mirror the cell terms
/// of the discrete mixed form of `B_1`: `I sigma` on the left edge of a
/// cell, `I^* w` and the column tail of `w` on its top edge.
///
/// When `J^p` would leave the floating range it is divided by a constant,
/// which leaves the ratio unchanged; the identity is compared in log scale.
pub fn probe_b(pb: &Problem) -> Result<ProbeB> {
    pb.require_2d("probe_B")?;
    let r = pb.e.r_q_below_p("probe_B")?;
    let e = pb.e;
    let grid = pb.grid();
    let s = pb.s.node_field().as_2d()?;
    let ws = pb.wstar.node_field().as_2d()?;
    let w: ndarray::ArrayView2<f64> = pb.w.values().view().into_dimensionality()?;
    let sigma: ndarray::ArrayView2<f64> = pb.sigma.values().view().into_dimensionality()?;
    let h = grid.widths(0);
    let k = grid.widths(1);
    let (m, n) = (h.len(), k.len());

    let (ex_s, ex_w) = (r / e.q_conj, r / e.p);
    let mut ln_x = Array2::<f64>::from_elem((m, n), f64::NEG_INFINITY);
    ln_x.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let mut tail = 0.0;
            for j in (0..n).rev() {
                let s_tag = 0.5 * (s[[i, j]] + s[[i, j + 1]]);
                let w_tag = 0.5 * (ws[[i, j + 1]] + ws[[i + 1, j + 1]]);
                if tail > 0.0 && s_tag > 0.0 && w_tag > 0.0 {
                    row[j] = ex_s * s_tag.ln() + ex_w * w_tag.ln() + (tail * h[i]).ln();
                }
                tail += w[[i, j]] * k[j];
            }
        });
    let top = ln_x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shift = if top.is_finite() && top.abs() > 600.0 { top } else { 0.0 };
    let mut jp = Array2::<f64>::zeros((m, n));
    for j in 0..n {
        let mut acc = 0.0;
        for i in (0..m).rev() {
            if i + 1 < m {
                acc += (ln_x[[i + 1, j]] - shift).exp();
            }
            jp[[i, j]] = acc;
        }
    }
    let j_field = jp.mapv(|t| t.powf(1.0 / e.p)).into_dyn();
    let mut f = j_field.clone();
    Zip::from(&mut f).and(&sigma.into_dyn()).for_each(|f, &sg| *f *= sg);

    let (num, lhs, _) = ratio_parts(pb, &f);
    let ln_lhs = lhs.ln() + shift;
    let ln_rhs = (e.p_conj * e.q / (r * r)).ln() + r * b_functional(BKind::B1, pb)?.value.ln();
    let ratio = if lhs > 0.0 {
        num.max(0.0).powf(1.0 / e.q) / lhs.powf(1.0 / e.p)
    } else {
        0.0
    };
    let relative_deviation = if ln_lhs == f64::NEG_INFINITY && ln_rhs == f64::NEG_INFINITY {
        0.0
    } else {
        -(-(ln_lhs - ln_rhs).abs()).exp_m1()
    };
    Ok(ProbeB {
        test: TestFunctionB {
            f: pb.cell_field(f)?,
            j_field: pb.cell_field(j_field)?,
        },
        ratio,
        ln_lhs,
        ln_rhs,
        relative_deviation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AscentOptions {
    pub starts: usize,
    pub iters: usize,
    /// Stop a start once the relative change of the ratio drops below this.
    pub tol: f64,
    /// Seeds the perturbed starts used beyond the four structured ones.
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            starts: 4,
            iters: 500,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StartTrace {
    pub start: String,
    pub ratios: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub probe_lower: f64,
    pub traces: Vec<StartTrace>,
    pub converged: bool,
    #[serde(skip)]
    pub argmax_function: CellField,
}

struct StartOutcome {
    trace: StartTrace,
    best: f64,
    best_f: ArrayD<f64>,
}

fn normalise(pb: &Problem, f: &mut ArrayD<f64>) -> Option<(f64, ArrayD<f64>)> {
    let (num, den, tf) = ratio_parts(pb, f);
    if !(den > 0.0) || !den.is_finite() {
        return None;
    }
    let scale = den.powf(-1.0 / pb.e.p);
    f.mapv_inplace(|x| x * scale);
    let tf = tf * scale;
    Some((num.max(0.0).powf(1.0 / pb.e.q) * scale, tf))
}

fn run_start(pb: &Problem, label: &str, f0: ArrayD<f64>, opts: &AscentOptions) -> Option<StartOutcome> {
    let e = pb.e;
    let mut f = f0;
    let (mut ratio, mut tf) = normalise(pb, &mut f)?;
    let mut ratios = vec![ratio];
    let mut best = ratio;
    let mut best_f = f.clone();
    let mut converged = false;
    let inv = 1.0 / (e.p - 1.0);
    for _ in 0..opts.iters {
        let mut g = tf;
        Zip::from(&mut g)
            .and(pb.w.values())
            .par_for_each(|g, &w| *g = if w == 0.0 { 0.0 } else { pow(*g, e.q - 1.0) * w });
        let u = apply_upper(&g, &pb.volumes);
        let mut next = pb.sigma.values().clone();
        Zip::from(&mut next)
            .and(&u)
            .par_for_each(|x, &u| *x = if *x == 0.0 { 0.0 } else { *x * pow(u, inv) });
        let Some((r_next, tf_next)) = normalise(pb, &mut next) else {
            break;
        };
        ratios.push(r_next);
        if r_next > best {
            best = r_next;
            best_f = next.clone();
        }
        let change = rel_diff(r_next, ratio);
        f = next;
        tf = tf_next;
        ratio = r_next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let _ = f;
    Some(StartOutcome {
        trace: StartTrace {
            start: label.to_string(),
            ratios,
            converged,
        },
        best,
        best_f,
    })
}

/// Runs the fixed-point iteration from several starts and returns the best
/// ratio seen on any trace.
pub fn ascend(pb: &Problem, opts: &AscentOptions) -> Result<NormEstimate> {
    if opts.starts == 0 {
        return Err(Error::out_of_range("starts", "need at least one start"));
    }
    let rects = probe_rectangles(pb)?;
    let pbb = if pb.e.zone.is_q_below_p() && pb.dim() == 2 {
        // a probe that cannot be built falls back to the indicator start
        probe_b(pb).ok().filter(|b| b.ratio.is_finite())
    } else {
        None
    };
    let mut probe_lower = rects[0].ratio.max(rects[1].ratio);
    if let Some(b) = &pbb {
        probe_lower = probe_lower.max(b.ratio);
    }

    let mut starts: Vec<(String, ArrayD<f64>)> = vec![
        ("constant".into(), ArrayD::from_elem(pb.volumes.raw_dim(), 1.0)),
        ("sigma".into(), pb.sigma.values().clone()),
        ("sigma_rectangle".into(), rects[0].function.values().clone()),
    ];
    match &pbb {
        Some(b) => starts.push(("sigma_j".into(), b.test.f.values().clone())),
        None => starts.push(("indicator_rectangle".into(), rects[1].function.values().clone())),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.starts {
        let noise = pb
            .sigma
            .values()
            .mapv(|s| s * rng.gen_range(0.5..1.5));
        starts.push((format!("perturbed_{}", starts.len()), noise));
    }
    starts.truncate(opts.starts);

    let outcomes: Vec<Option<StartOutcome>> = starts
        .par_iter()
        .map(|(label, f0)| run_start(pb, label, f0.clone(), opts))
        .collect();

    let mut best: Option<(f64, usize)> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if let Some(o) = o {
            if best.is_none_or(|(b, _)| o.best > b) {
                best = Some((o.best, k));
            }
        }
    }
    let Some((value, k)) = best else {
        return Err(Error::ZeroDenominator("every start function vanishes".into()));
    };
    let converged = outcomes[k].as_ref().is_some_and(|o| o.trace.converged);
    let mut argmax = outcomes[k].as_ref().map(|o| o.best_f.clone()).unwrap_or_default();
    let mut value = value;
    if probe_lower > value {
        value = probe_lower;
        argmax = rects[0].function.values().clone();
    }
    let traces = outcomes.into_iter().flatten().map(|o| o.trace).collect();
    Ok(NormEstimate {
        value,
        probe_lower,
        traces,
        converged,
        argmax_function: pb.cell_field(argmax)?,
    })
}
