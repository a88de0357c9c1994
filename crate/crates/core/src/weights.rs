//! Weight descriptors, exponent bookkeeping and the dual weight.

use std::sync::Arc;

use ndarray::{ArrayD, Dimension, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellField, GridN};

/// Which side of the diagonal `(p, q)` lies on, with the two flags that
/// select the chained estimates when `q < p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    PBelowQ,
    Diagonal,
    QBelowP(SubZone),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubZone {
    /// `r/p >= 1` and `r/q' >= 1`.
    Both,
    /// `r/p >= 1`, `r/q' < 1`.
    OnlyRp,
    /// `r/p < 1`, `r/q' >= 1`.
    OnlyRq,
    /// `r/p < 1`, `r/q' < 1`.
    Neither,
}

impl Zone {
    pub fn tag(&self) -> &'static str {
        match self {
            Zone::PBelowQ => "p<q",
            Zone::Diagonal => "p=q",
            Zone::QBelowP(SubZone::Both) => "q<p:r/p>=1&r/q'>=1",
            Zone::QBelowP(SubZone::OnlyRp) => "q<p:r/p>=1&r/q'<1",
            Zone::QBelowP(SubZone::OnlyRq) => "q<p:r/p<1&r/q'>=1",
            Zone::QBelowP(SubZone::Neither) => "q<p:r/p<1&r/q'<1",
        }
    }

    pub fn is_q_below_p(&self) -> bool {
        matches!(self, Zone::QBelowP(_))
    }
}

/// The pair `(p, q)` and everything derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub p_conj: f64,
    pub q_conj: f64,
    /// `1/r = 1/q - 1/p`; negative when `p < q`, absent on the diagonal.
    pub r: Option<f64>,
    pub zone: Zone,
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

impl Exponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponents(format!("p = {p} must be a finite number > 1")));
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::InvalidExponents(format!("q = {q} must be a finite number > 1")));
        }
        let r = if p == q {
            None
        } else {
            Some(1.0 / (1.0 / q - 1.0 / p))
        };
        let zone = if p < q {
            Zone::PBelowQ
        } else if p == q {
            Zone::Diagonal
        } else {
            // r/p >= 1  <=>  p <= 2q;  r/q' >= 1  <=>  2p <= q(p+1). Both
            // boundaries are inclusive, so rounding is resolved towards them.
            let tol = 1.0 + 1e-12;
            let rp = p <= 2.0 * q * tol;
            let rq = 2.0 * p <= q * (p + 1.0) * tol;
            Zone::QBelowP(match (rp, rq) {
                (true, true) => SubZone::Both,
                (true, false) => SubZone::OnlyRp,
                (false, true) => SubZone::OnlyRq,
                (false, false) => SubZone::Neither,
            })
        };
        Ok(Self {
            p,
            q,
            p_conj: conjugate(p),
            q_conj: conjugate(q),
            r,
            zone,
        })
    }

    /// `r` for `q < p`, or a zone error naming `what`.
    pub fn r_q_below_p(&self, what: &str) -> Result<f64> {
        match (self.zone, self.r) {
            (Zone::QBelowP(_), Some(r)) => Ok(r),
            _ => Err(Error::WrongZone {
                what: what.to_string(),
                zone: "q < p",
            }),
        }
    }

    /// Exponent `1 - p'` of the dual weight.
    pub fn dual_power(&self) -> f64 {
        1.0 - self.p_conj
    }

    /// The dual pair `(q', p')`, which shares `r` with `(p, q)`.
    pub fn dual(&self) -> Result<Self> {
        Self::new(self.q_conj, self.p_conj)
    }
}

/// One piece `coef * x^exp` of a 1-d piecewise power function, valid from
/// `from` up to the next piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: f64,
    pub coef: f64,
    pub exp: f64,
}

/// Nonnegative piecewise power function of one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Piece>", into = "Vec<Piece>")]
pub struct Factor {
    pieces: Vec<Piece>,
}

impl TryFrom<Vec<Piece>> for Factor {
    type Error = Error;

    fn try_from(pieces: Vec<Piece>) -> Result<Self> {
        Factor::new(pieces)
    }
}

impl From<Factor> for Vec<Piece> {
    fn from(f: Factor) -> Self {
        f.pieces
    }
}

impl Factor {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidWeight("factor without pieces".into()));
        }
        if pieces[0].from != 0.0 {
            return Err(Error::InvalidWeight("first piece must start at 0".into()));
        }
        if pieces.windows(2).any(|w| w[1].from <= w[0].from) {
            return Err(Error::InvalidWeight("piece breakpoints must increase".into()));
        }
        for pc in &pieces {
            if !(pc.coef.is_finite() && pc.coef >= 0.0) || !pc.exp.is_finite() || !pc.from.is_finite() {
                return Err(Error::InvalidWeight(format!("bad piece {pc:?}")));
            }
        }
        Ok(Self { pieces })
    }

    pub fn power(exp: f64) -> Self {
        Self {
            pieces: vec![Piece {
                from: 0.0,
                coef: 1.0,
                exp,
            }],
        }
    }

    /// `x^a` below `x0` and `x0^{a-b} x^b` above it (continuous at `x0`).
    pub fn broken_power(a: f64, b: f64, x0: f64) -> Result<Self> {
        Self::new(vec![
            Piece {
                from: 0.0,
                coef: 1.0,
                exp: a,
            },
            Piece {
                from: x0,
                coef: x0.powf(a - b),
                exp: b,
            },
        ])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let k = self.pieces.partition_point(|pc| pc.from <= x);
        &self.pieces[k.saturating_sub(1)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pc = self.piece_at(x);
        if pc.coef == 0.0 {
            0.0
        } else {
            pc.coef * x.powf(pc.exp)
        }
    }

    /// `factor^t`, piecewise.
    pub fn powered(&self, t: f64) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .map(|pc| {
                if pc.coef == 0.0 && t < 0.0 {
                    return Err(Error::InvalidWeight(format!(
                        "factor vanishes on [{}, ...); negative power undefined",
                        pc.from
                    )));
                }
                Ok(Piece {
                    from: pc.from,
                    coef: pc.coef.powf(t),
                    exp: pc.exp * t,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces)
    }

    /// Exact `∫_a^b factor(x) dx`; `+∞` when the integral diverges.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let mut total = 0.0;
        for (k, pc) in self.pieces.iter().enumerate() {
            let lo = pc.from.max(a);
            let hi = self.pieces.get(k + 1).map_or(b, |n| n.from.min(b));
            if hi <= lo || pc.coef == 0.0 {
                continue;
            }
            let e1 = pc.exp + 1.0;
            let part = if e1 == 0.0 {
                if lo == 0.0 {
                    f64::INFINITY
                } else {
                    (hi / lo).ln()
                }
            } else if lo == 0.0 && e1 < 0.0 {
                f64::INFINITY
            } else {
                (hi.powf(e1) - lo.powf(e1)) / e1
            };
            total += pc.coef * part;
        }
        total
    }
}

/// A weight on `R_+^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `c * x_1^{a_1} * ... * x_n^{a_n}`.
    Power { c: f64, exponents: Vec<f64> },
    /// `c * f_1(x_1) * ... * f_n(x_n)`.
    Factorized {
        #[serde(default = "one")]
        c: f64,
        factors: Vec<Factor>,
    },
    /// Piecewise constant on the cells of its own grid.
    Table {
        axes: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl Weight {
    pub fn constant(dim: usize, c: f64) -> Self {
        Weight::Power {
            c,
            exponents: vec![0.0; dim],
        }
    }

    pub fn power(c: f64, exponents: Vec<f64>) -> Self {
        Weight::Power { c, exponents }
    }

    pub fn table(field: &CellField) -> Self {
        Weight::Table {
            axes: field.grid().axes().to_vec(),
            values: field.values().iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Weight::Power { exponents, .. } => exponents.len(),
            Weight::Factorized { factors, .. } => factors.len(),
            Weight::Table { axes, .. } => axes.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Weight::Power { c, exponents } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::InvalidWeight(format!("coefficient {c} must be >= 0")));
                }
                if exponents.is_empty() || exponents.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidWeight("exponents must be finite and nonempty".into()));
                }
            }
            Weight::Factorized { c, factors } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::InvalidWeight(format!("coefficient {c} must be >= 0")));
                }
                if factors.is_empty() {
                    return Err(Error::InvalidWeight("no factors".into()));
                }
                for f in factors {
                    Factor::new(f.pieces.clone())?;
                }
            }
            Weight::Table { axes, values } => {
                let grid = GridN::new(axes.clone(), crate::grid::Spacing::Custom)?;
                if values.len() != grid.n_cells() {
                    return Err(Error::InvalidWeight(format!(
                        "table has {} values for {} cells",
                        values.len(),
                        grid.n_cells()
                    )));
                }
                if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidWeight(format!("table entry {k} is negative or non-finite")));
                }
            }
        }
        Ok(())
    }

    /// `(c, factors)` when the weight is a product of 1-d functions; power
    /// weights count as factorized.
    pub fn as_factors(&self) -> Option<(f64, Vec<Factor>)> {
        match self {
            Weight::Power { c, exponents } => {
                Some((*c, exponents.iter().map(|&a| Factor::power(a)).collect()))
            }
            Weight::Factorized { c, factors } => Some((*c, factors.clone())),
            Weight::Table { .. } => None,
        }
    }

    pub fn is_factorized(&self) -> bool {
        self.as_factors().is_some()
    }

    /// `lambda * weight`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            Weight::Power { c, exponents } => Weight::Power {
                c: c * lambda,
                exponents: exponents.clone(),
            },
            Weight::Factorized { c, factors } => Weight::Factorized {
                c: c * lambda,
                factors: factors.clone(),
            },
            Weight::Table { axes, values } => Weight::Table {
                axes: axes.clone(),
                values: values.iter().map(|v| v * lambda).collect(),
            },
        }
    }

    /// `weight^t`; zero values are rejected for negative `t`.
    pub fn powered(&self, t: f64) -> Result<Self> {
        self.validate()?;
        match self {
            Weight::Power { c, exponents } => {
                if *c == 0.0 && t < 0.0 {
                    return Err(Error::ZeroWeight { index: vec![] });
                }
                Ok(Weight::Power {
                    c: c.powf(t),
                    exponents: exponents.iter().map(|a| a * t).collect(),
                })
            }
            Weight::Factorized { c, factors } => {
                if *c == 0.0 && t < 0.0 {
                    return Err(Error::ZeroWeight { index: vec![] });
                }
                Ok(Weight::Factorized {
                    c: c.powf(t),
                    factors: factors
                        .iter()
                        .map(|f| f.powered(t))
                        .collect::<Result<_>>()?,
                })
            }
            Weight::Table { axes, values } => {
                let grid = GridN::new(axes.clone(), crate::grid::Spacing::Custom)?;
                let shape = grid.cells_shape();
                let mut out = Vec::with_capacity(values.len());
                for (k, &v) in values.iter().enumerate() {
                    if v == 0.0 && t < 0.0 {
                        return Err(Error::ZeroWeight {
                            index: unravel(k, &shape),
                        });
                    }
                    out.push(v.powf(t));
                }
                Ok(Weight::Table {
                    axes: axes.clone(),
                    values: out,
                })
            }
        }
    }

    /// Midpoint samples on `grid`. Tables are looked up in the cell of
    /// their own grid that contains each midpoint.
    pub fn sample(&self, grid: &Arc<GridN>) -> Result<CellField> {
        self.validate()?;
        if self.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: self.dim(),
            });
        }
        match self {
            Weight::Power { c, exponents } => {
                let factors: Vec<Vec<f64>> = exponents
                    .iter()
                    .enumerate()
                    .map(|(d, &a)| grid.midpoints(d).iter().map(|&x| x.powf(a)).collect())
                    .collect();
                product_field(grid, *c, &factors)
            }
            Weight::Factorized { c, factors } => {
                let f1: Vec<Vec<f64>> = factors
                    .iter()
                    .enumerate()
                    .map(|(d, f)| grid.midpoints(d).iter().map(|&x| f.eval(x)).collect())
                    .collect();
                product_field(grid, *c, &f1)
            }
            Weight::Table { axes, values } => {
                let own = GridN::new(axes.clone(), crate::grid::Spacing::Custom)?;
                let shape = own.cells_shape();
                let table = ArrayD::from_shape_vec(IxDyn(&shape), values.clone())
                    .map_err(|e| Error::InvalidWeight(e.to_string()))?;
                let lookup: Vec<Vec<usize>> = (0..grid.dim())
                    .map(|d| {
                        grid.midpoints(d)
                            .iter()
                            .map(|&x| locate(own.axis(d), x))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?;
                let vals = ArrayD::from_shape_fn(IxDyn(&grid.cells_shape()), |idx| {
                    let src: Vec<usize> = (0..idx.ndim()).map(|d| lookup[d][idx[d]]).collect();
                    table[IxDyn(&src)]
                });
                CellField::nonnegative(grid.clone(), vals)
            }
        }
    }

    /// Samples of each 1-d factor at the midpoints of the matching axis; the
    /// coefficient is folded into the first factor.
    pub fn sample_factors(&self, grid: &GridN) -> Option<Vec<Vec<f64>>> {
        let (c, factors) = self.as_factors()?;
        if factors.len() != grid.dim() {
            return None;
        }
        Some(
            factors
                .iter()
                .enumerate()
                .map(|(d, f)| {
                    let scale = if d == 0 { c } else { 1.0 };
                    grid.midpoints(d).iter().map(|&x| scale * f.eval(x)).collect()
                })
                .collect(),
        )
    }
}

fn product_field(grid: &Arc<GridN>, c: f64, factors: &[Vec<f64>]) -> Result<CellField> {
    let mut vals = crate::grid::outer_product(factors);
    vals.mapv_inplace(|x| c * x);
    CellField::nonnegative(grid.clone(), vals)
}

fn locate(axis: &[f64], x: f64) -> Result<usize> {
    let m = axis.len() - 1;
    if x < axis[0] || x > axis[m] {
        return Err(Error::out_of_range(
            "table",
            format!("point {x} outside [{}, {}]", axis[0], axis[m]),
        ));
    }
    Ok(axis.partition_point(|&a| a <= x).saturating_sub(1).min(m - 1))
}

fn unravel(mut k: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = k % shape[d];
        k /= shape[d];
    }
    idx
}

/// `sigma = v^{1 - p'}`, analytic for power and factorized weights.
pub fn dual_weight(v: &Weight, e: &Exponents) -> Result<Weight> {
    v.powered(e.dual_power())
}

/// Entrywise `v^{1 - p'}` of sampled values; zero entries are refused.
pub fn dual_field(v: &CellField, e: &Exponents) -> Result<CellField> {
    let t = e.dual_power();
    if let Some((idx, _)) = v.values().indexed_iter().find(|(_, &x)| x <= 0.0) {
        return Err(Error::ZeroWeight {
            index: idx.slice().to_vec(),
        });
    }
    CellField::nonnegative(v.grid().clone(), v.values().mapv(|x| x.powf(t)))
}
