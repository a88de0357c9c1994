//! Scalar functionals of a weight pair and the explicit constants that
//! relate them to the best constant.

pub mod chain;
pub mod constants;
pub mod multidim;
pub mod planar;

use std::sync::Arc;

use ndarray::{ArrayD, ArrayViewD, Dimension, IxDyn, Zip};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{prefix_cumulate, suffix_cumulate, CellField, CumField, GridN};
use crate::weights::{dual_field, dual_weight, Exponents, Weight};

pub use chain::{sandwich, zone_chain, ChainCheck, ChainRecord, Sandwich};
pub use constants::{constants, ConstantSet};
pub use multidim::{multidim_functional, MultidimKind, MultidimParams};
pub use planar::{a_functional, b_functional, b1_forms, bv_functional, AKind, BKind, BvKind};

/// Grid node at which a supremum is attained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub index: Vec<usize>,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Share of absolute Stieltjes mass carried by negative cell terms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_mass_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FunctionalValue {
    pub(crate) fn plain(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            witness: None,
            negative_mass_fraction: None,
            note: None,
        }
    }
}

/// Sampled weights with their cumulative tables, shared by all functionals.
#[derive(Clone, Debug)]
pub struct Problem {
    pub e: Exponents,
    pub v: CellField,
    pub w: CellField,
    pub sigma: CellField,
    pub volumes: ArrayD<f64>,
    /// `I_n sigma` at the nodes.
    pub s: CumField,
    /// `I_n^* w` at the nodes.
    pub wstar: CumField,
    pub v_weight: Option<Weight>,
    pub w_weight: Option<Weight>,
}

impl Problem {
    /// Samples `v`, `w` and the analytic dual weight on `grid`.
    pub fn new(v: &Weight, w: &Weight, e: Exponents, grid: Arc<GridN>) -> Result<Self> {
        let sigma = dual_weight(v, &e)?.sample(&grid)?;
        let vf = v.sample(&grid)?;
        if let Some((idx, _)) = vf.values().indexed_iter().find(|(_, &x)| x <= 0.0) {
            return Err(Error::ZeroWeight {
                index: idx.slice().to_vec(),
            });
        }
        let wf = w.sample(&grid)?;
        let mut pb = Self::assemble(vf, wf, sigma, e)?;
        pb.v_weight = Some(v.clone());
        pb.w_weight = Some(w.clone());
        Ok(pb)
    }

    /// Uses already sampled fields; the dual weight is taken entrywise.
    pub fn from_fields(v: CellField, w: CellField, e: Exponents) -> Result<Self> {
        v.ensure_same_grid(&w)?;
        let sigma = dual_field(&v, &e)?;
        Self::assemble(v, w, sigma, e)
    }

    fn assemble(v: CellField, w: CellField, sigma: CellField, e: Exponents) -> Result<Self> {
        if !w.is_nonnegative() {
            return Err(Error::InvalidWeight("w has negative samples".into()));
        }
        let volumes = v.grid().cell_volumes();
        let s = prefix_cumulate(&sigma);
        let wstar = suffix_cumulate(&w);
        Ok(Self {
            e,
            v,
            w,
            sigma,
            volumes,
            s,
            wstar,
            v_weight: None,
            w_weight: None,
        })
    }

    /// Same weights, different exponents.
    pub fn with_exponents(&self, e: Exponents) -> Result<Self> {
        match (&self.v_weight, &self.w_weight) {
            (Some(v), Some(w)) => Problem::new(v, w, e, self.grid().clone()),
            _ => Problem::from_fields(self.v.clone(), self.w.clone(), e),
        }
    }

    pub fn grid(&self) -> &Arc<GridN> {
        self.v.grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn require_2d(&self, what: &str) -> Result<()> {
        if self.dim() == 2 {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!(
                "{what} is a two-dimensional functional, grid has dimension {}",
                self.dim()
            )))
        }
    }

    pub(crate) fn cell_field(&self, values: ArrayD<f64>) -> Result<CellField> {
        CellField::new(self.grid().clone(), values)
    }
}

/// Largest entry of a node array, lowest row-major index on ties.
pub(crate) fn sup_nodes(grid: &GridN, values: &ArrayD<f64>) -> (f64, Witness) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0; grid.dim()];
    for (idx, &x) in values.indexed_iter() {
        if x > best {
            best = x;
            arg = idx.slice().to_vec();
        }
    }
    let point = grid.node(&arg);
    (best.max(0.0), Witness { index: arg, point })
}

pub(crate) fn sup_value(name: &str, grid: &GridN, values: &ArrayD<f64>) -> FunctionalValue {
    let (value, witness) = sup_nodes(grid, values);
    FunctionalValue {
        name: name.to_string(),
        value,
        witness: Some(witness),
        negative_mass_fraction: None,
        note: None,
    }
}

/// `prod_i base_i^{e_i}` per entry with the zero-base rule.
pub(crate) fn guarded_map2(
    a: ArrayViewD<'_, f64>,
    ea: f64,
    b: ArrayViewD<'_, f64>,
    eb: f64,
) -> ArrayD<f64> {
    let mut out = ArrayD::zeros(IxDyn(a.shape()));
    Zip::from(&mut out)
        .and(&a)
        .and(&b)
        .par_for_each(|o, &x, &y| *o = crate::numeric::guarded_product(&[(x, ea), (y, eb)]));
    out
}
