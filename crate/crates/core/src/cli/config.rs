//! Run configuration read from JSON.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridN;
use crate::normest::AscentOptions;
use crate::weights::{Exponents, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingKind {
    Log,
    Linear,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub nodes_per_axis: Option<usize>,
    pub spacing: Option<SpacingKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub weight_v: Weight,
    pub weight_w: Weight,
    pub p: f64,
    pub q: f64,
    #[serde(default = "default_dims")]
    pub dims: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    /// Names of the functionals to evaluate; all applicable ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionals: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_range: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_range: Option<String>,
}

fn default_dims() -> usize {
    2
}
fn default_iters() -> usize {
    500
}
fn default_starts() -> usize {
    4
}
fn default_tol() -> f64 {
    1e-9
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_nodes: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub p_range: Option<String>,
    pub q_range: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(json_field(&e), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.grid_nodes {
            self.grid.nodes_per_axis = Some(n);
        }
        if let Some(x) = o.x_min {
            self.grid.x_min = Some(x);
        }
        if let Some(x) = o.x_max {
            self.grid.x_max = Some(x);
        }
        if let Some(r) = &o.p_range {
            self.p_range = Some(r.clone());
        }
        if let Some(r) = &o.q_range {
            self.q_range = Some(r.clone());
        }
    }

    pub fn spacing(&self) -> SpacingKind {
        self.grid.spacing.unwrap_or(SpacingKind::Log)
    }

    pub fn x_min(&self) -> f64 {
        self.grid.x_min.unwrap_or(match self.spacing() {
            SpacingKind::Log => 1e-4,
            SpacingKind::Linear => 0.0,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max.unwrap_or(match self.spacing() {
            SpacingKind::Log => 1e4,
            SpacingKind::Linear => 1.0,
        })
    }

    pub fn nodes(&self) -> usize {
        self.grid
            .nodes_per_axis
            .unwrap_or(if self.dims <= 2 { 256 } else { 64 })
    }

    /// Checks every field and names the first offending one.
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("p", self.p), ("q", self.q)] {
            if !(x.is_finite() && x > 1.0) {
                return Err(Error::config(name, format!("{x} must be a finite number > 1")));
            }
        }
        if !(1..=4).contains(&self.dims) {
            return Err(Error::config("dims", format!("{} not in 1..=4", self.dims)));
        }
        for (name, w) in [("weight_v", &self.weight_v), ("weight_w", &self.weight_w)] {
            if w.dim() != self.dims {
                return Err(Error::config(
                    name,
                    format!("weight has dimension {}, dims is {}", w.dim(), self.dims),
                ));
            }
            w.validate().map_err(|e| Error::config(name, e.to_string()))?;
        }
        let (lo, hi) = (self.x_min(), self.x_max());
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config("grid.x_min", format!("need x_min < x_max, got {lo} and {hi}")));
        }
        if self.spacing() == SpacingKind::Log && !(lo > 0.0) {
            return Err(Error::config("grid.x_min", "log spacing needs x_min > 0"));
        }
        if lo < 0.0 {
            return Err(Error::config("grid.x_min", "x_min must be nonnegative"));
        }
        if self.nodes() < 8 {
            return Err(Error::config(
                "grid.nodes_per_axis",
                format!("{} < 8", self.nodes()),
            ));
        }
        if self.starts == 0 {
            return Err(Error::config("starts", "need at least one start"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::config("tol", format!("{} must be nonnegative", self.tol)));
        }
        for (name, s) in [("s1", self.s1), ("s2", self.s2)] {
            if let Some(s) = s {
                if !(s > 1.0 && s < self.p) {
                    return Err(Error::config(name, format!("{s} not in (1, p)")));
                }
            }
        }
        if let Some(d) = &self.deltas {
            if d.iter().any(|&x| !(x > 0.0 && x < self.p - 1.0)) {
                return Err(Error::config("deltas", "each delta must lie in (0, p - 1)"));
            }
        }
        Ok(())
    }

    pub fn exponents(&self) -> Result<Exponents> {
        Exponents::new(self.p, self.q)
    }

    pub fn build_grid(&self) -> Result<Arc<GridN>> {
        self.grid_with_max(self.x_max())
    }

    pub fn grid_with_max(&self, x_max: f64) -> Result<Arc<GridN>> {
        let g = match self.spacing() {
            SpacingKind::Log => GridN::log(self.dims, self.x_min(), x_max, self.nodes())?,
            SpacingKind::Linear => GridN::linear(self.dims, self.x_min(), x_max, self.nodes())?,
        };
        Ok(Arc::new(g))
    }

    pub fn ascent(&self) -> AscentOptions {
        AscentOptions {
            starts: self.starts,
            iters: self.iters,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

/// Best guess at the offending field of a JSON error.
fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(i) = msg.find(marker) {
            let rest = &msg[i + marker.len()..];
            if let Some(j) = rest.find('`') {
                return rest[..j].to_string();
            }
        }
    }
    "config".to_string()
}

/// Parses `start:stop:step` into the points `start, start+step, ...` up to
/// `stop` inclusive.
pub fn parse_range(field: &str, s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::config(field, format!("{s:?} is not start:stop:step")))?;
    let (start, stop, step) = match nums.as_slice() {
        [a] => (*a, *a, 1.0),
        [a, b, c] => (*a, *b, *c),
        _ => return Err(Error::config(field, format!("{s:?} is not start:stop:step"))),
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0) {
        return Err(Error::config(field, format!("{s:?} needs finite bounds and step > 0")));
    }
    if stop < start {
        return Err(Error::config(field, format!("{s:?} is empty")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(Error::config(field, "too many points"));
    }
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}
