//! Small numerical helpers shared by the field reductions.

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// `x.powf(e)` with the common exponents short-circuited.
#[inline]
pub fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 0.5 {
        x.sqrt()
    } else if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// Product of `base_i^exp_i` where any zero base makes the product zero,
/// whatever the sign of its exponent. Degenerate corners (0·∞, 0/0) thus
/// contribute nothing.
#[inline]
pub fn guarded_product(terms: &[(f64, f64)]) -> f64 {
    let mut acc = 1.0;
    for &(base, e) in terms {
        if base == 0.0 {
            return 0.0;
        }
        acc *= pow(base, e);
    }
    if acc.is_nan() {
        0.0
    } else {
        acc
    }
}

/// `ln(x^e)` under the zero-base rule of [`guarded_product`]: a zero base
/// gives `-inf` whatever the sign of `e`.
#[inline]
pub fn ln_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        e * x.ln()
    }
}

/// Sum of signed terms `±exp(l)` given as `(l, negative)`. Returns the log
/// of the total (`-inf` when it is not positive) and the share of the
/// absolute mass carried by negative terms.
pub fn signed_log_sum<I: IntoIterator<Item = (f64, bool)>>(terms: I) -> (f64, f64) {
    let terms: Vec<(f64, bool)> = terms.into_iter().filter(|(l, _)| *l > f64::NEG_INFINITY).collect();
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return (top, 0.0);
    }
    let mut pos = CompensatedSum::new();
    let mut neg = CompensatedSum::new();
    for (l, negative) in terms {
        let x = (l - top).exp();
        if negative {
            neg.add(x);
        } else {
            pos.add(x);
        }
    }
    let (pos, neg) = (pos.value(), neg.value());
    let total = pos - neg;
    let ln = if total > 0.0 { top + total.ln() } else { f64::NEG_INFINITY };
    (ln, if pos + neg > 0.0 { neg / (pos + neg) } else { 0.0 })
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
