//! Model orders, parameter vectors, link functions and the linear predictor
//! recursion
//!
//! ```text
//! Φ(B^S) φ(B) g(y_t) = β + Θ(B^S) θ(B) r_t,    r_t = g(y_t) - η_t
//! ```
//!
//! Flat parameter vectors use the layout `(β, φ_1..φ_p, Φ_1..Φ_P, θ_1..θ_q,
//! Θ_1..Θ_Q, precision)` everywhere in the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BsarmaError, Result};

/// Polynomial degrees and seasonal period of a βSARMA(p, q)×(P, Q)_S model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelOrder {
    pub p: usize,
    pub q: usize,
    #[serde(rename = "P")]
    pub sp: usize,
    #[serde(rename = "Q")]
    pub sq: usize,
    #[serde(rename = "S")]
    pub period: usize,
}

impl ModelOrder {
    pub fn new(p: usize, q: usize, sp: usize, sq: usize, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(BsarmaError::InvalidOrder(
                "seasonal period must be at least 1".into(),
            ));
        }
        Ok(Self {
            p,
            q,
            sp,
            sq,
            period,
        })
    }

    /// Non-seasonal βARMA(p, q).
    pub fn arma(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            sp: 0,
            sq: 0,
            period: 1,
        }
    }

    /// Number of parameters `k = p + q + P + Q + 2`.
    pub fn n_params(&self) -> usize {
        self.p + self.q + self.sp + self.sq + 2
    }

    /// Number of mean-equation coefficients (everything but the precision).
    pub fn n_coefficients(&self) -> usize {
        self.n_params() - 1
    }

    pub fn is_seasonal(&self) -> bool {
        self.sp + self.sq > 0
    }

    pub fn has_moving_average(&self) -> bool {
        self.q + self.sq > 0
    }

    /// Offsets of each coefficient block inside a flat parameter vector.
    pub(crate) fn layout(&self) -> Layout {
        let ar = 1;
        let sar = ar + self.p;
        let ma = sar + self.sp;
        let sma = ma + self.q;
        let precision = sma + self.sq;
        Layout {
            ar,
            sar,
            ma,
            sma,
            precision,
        }
    }

    /// Row labels for the flat layout, e.g. `beta`, `phi1`, `Phi1`, `theta1`, `Theta1`, `varphi`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        names.push("beta".to_string());
        names.extend((1..=self.p).map(|i| format!("phi{i}")));
        names.extend((1..=self.sp).map(|i| format!("Phi{i}")));
        names.extend((1..=self.q).map(|i| format!("theta{i}")));
        names.extend((1..=self.sq).map(|i| format!("Theta{i}")));
        names.push("varphi".to_string());
        names
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "βSARMA({},{})×({},{})_{}",
            self.p, self.q, self.sp, self.sq, self.period
        )
    }
}

impl FromStr for ModelOrder {
    type Err = BsarmaError;

    /// Parses `"p,q,P,Q,S"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(BsarmaError::InvalidOrder(format!(
                "expected five comma-separated integers p,q,P,Q,S, got {s:?}"
            )));
        }
        let mut vals = [0usize; 5];
        for (slot, part) in vals.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| {
                BsarmaError::InvalidOrder(format!("{part:?} is not a nonnegative integer"))
            })?;
        }
        ModelOrder::new(vals[0], vals[1], vals[2], vals[3], vals[4])
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub ar: usize,
    pub sar: usize,
    pub ma: usize,
    pub sma: usize,
    pub precision: usize,
}

/// `m = max(P S + p, Q S + q)`: observations conditioned on.
pub fn burn_in(order: &ModelOrder) -> usize {
    (order.sp * order.period + order.p).max(order.sq * order.period + order.q)
}

/// Parameter vector γ of a βSARMA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub beta: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    pub precision: f64,
}

impl ParamVector {
    /// All coefficients zero, given intercept and precision.
    pub fn zeros(order: &ModelOrder, beta: f64, precision: f64) -> Self {
        Self {
            beta,
            ar: vec![0.0; order.p],
            ma: vec![0.0; order.q],
            sar: vec![0.0; order.sp],
            sma: vec![0.0; order.sq],
            precision,
        }
    }

    pub fn validate(&self, order: &ModelOrder) -> Result<()> {
        let checks = [
            ("ar", self.ar.len(), order.p),
            ("ma", self.ma.len(), order.q),
            ("sar", self.sar.len(), order.sp),
            ("sma", self.sma.len(), order.sq),
        ];
        for (name, got, expected) in checks {
            if got != expected {
                return Err(BsarmaError::InvalidParams(format!(
                    "{name} has {got} coefficients, order {order} needs {expected}"
                )));
            }
        }
        if !(self.precision.is_finite() && self.precision > 0.0) {
            return Err(BsarmaError::InvalidParams(format!(
                "precision must be finite and positive, got {}",
                self.precision
            )));
        }
        let finite = std::iter::once(self.beta)
            .chain(self.ar.iter().copied())
            .chain(self.ma.iter().copied())
            .chain(self.sar.iter().copied())
            .chain(self.sma.iter().copied())
            .all(f64::is_finite);
        if !finite {
            return Err(BsarmaError::InvalidParams("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Flat layout `(β, φ, Φ, θ, Θ, precision)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.ar.len() + self.ma.len() + self.sar.len() + self.sma.len() + 2);
        v.push(self.beta);
        v.extend_from_slice(&self.ar);
        v.extend_from_slice(&self.sar);
        v.extend_from_slice(&self.ma);
        v.extend_from_slice(&self.sma);
        v.push(self.precision);
        v
    }

    /// Inverse of [`ParamVector::to_vec`]. Does not validate the precision.
    pub fn from_slice(order: &ModelOrder, v: &[f64]) -> Result<Self> {
        if v.len() != order.n_params() {
            return Err(BsarmaError::DimensionMismatch {
                expected: order.n_params(),
                got: v.len(),
            });
        }
        let l = order.layout();
        Ok(Self {
            beta: v[0],
            ar: v[l.ar..l.sar].to_vec(),
            sar: v[l.sar..l.ma].to_vec(),
            ma: v[l.ma..l.sma].to_vec(),
            sma: v[l.sma..l.precision].to_vec(),
            precision: v[l.precision],
        })
    }
}

/// A strictly monotone, twice differentiable map `(0, 1) -> R`.
///
/// `logit` is the only shipped instance; other links can be built with
/// [`Link::custom`].
#[derive(Clone, Copy)]
pub struct Link {
    name: &'static str,
    forward: fn(f64) -> f64,
    inverse: fn(f64) -> f64,
    derivative: fn(f64) -> f64,
}

impl fmt::Debug for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Link").field(&self.name).finish()
    }
}

impl PartialEq for Link {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Default for Link {
    fn default() -> Self {
        Link::logit()
    }
}

// Smallest distance from the boundary the inverse link returns; logistic
// saturates to exactly 0 or 1 in f64 once |η| > ~37.
const MU_FLOOR: f64 = f64::EPSILON;

fn logit(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln()
}

fn logistic(eta: f64) -> f64 {
    let mu = if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    };
    mu.clamp(MU_FLOOR, 1.0 - MU_FLOOR)
}

fn logit_derivative(mu: f64) -> f64 {
    1.0 / (mu * (1.0 - mu))
}

impl Link {
    pub fn logit() -> Self {
        Self {
            name: "logit",
            forward: logit,
            inverse: logistic,
            derivative: logit_derivative,
        }
    }

    pub fn custom(
        name: &'static str,
        forward: fn(f64) -> f64,
        inverse: fn(f64) -> f64,
        derivative: fn(f64) -> f64,
    ) -> Self {
        Self {
            name,
            forward,
            inverse,
            derivative,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "logit" => Ok(Self::logit()),
            other => Err(BsarmaError::Input(format!("unknown link function {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// g(μ)
    pub fn link(&self, mu: f64) -> Result<f64> {
        crate::special::check_unit_open("link", mu)?;
        Ok((self.forward)(mu))
    }

    /// g⁻¹(η), always strictly inside (0, 1).
    pub fn link_inv(&self, eta: f64) -> f64 {
        (self.inverse)(eta)
    }

    /// g'(μ)
    pub fn link_deriv(&self, mu: f64) -> Result<f64> {
        crate::special::check_unit_open("link_deriv", mu)?;
        Ok((self.derivative)(mu))
    }

    #[inline]
    pub(crate) fn forward_unchecked(&self, mu: f64) -> f64 {
        (self.forward)(mu)
    }

    #[inline]
    pub(crate) fn derivative_unchecked(&self, mu: f64) -> f64 {
        (self.derivative)(mu)
    }
}

/// Observed series with every value strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesData {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl SeriesData {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (row, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(BsarmaError::BoundaryValue { row: row + 1, value });
            }
        }
        Ok(Self {
            values,
            labels: None,
        })
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(BsarmaError::DimensionMismatch {
                expected: values.len(),
                got: labels.len(),
            });
        }
        let mut s = Self::new(values)?;
        s.labels = Some(labels);
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Splits off the last `holdout` observations.
    pub fn split_tail(&self, holdout: usize) -> Result<(SeriesData, SeriesData)> {
        if holdout >= self.len() {
            return Err(BsarmaError::InsufficientData {
                n: self.len(),
                required: holdout,
            });
        }
        let cut = self.len() - holdout;
        let head_labels = self.labels.as_ref().map(|l| l[..cut].to_vec());
        let tail_labels = self.labels.as_ref().map(|l| l[cut..].to_vec());
        Ok((
            SeriesData {
                values: self.values[..cut].to_vec(),
                labels: head_labels,
            },
            SeriesData {
                values: self.values[cut..].to_vec(),
                labels: tail_labels,
            },
        ))
    }
}

/// Linear predictor, mean and error paths over the whole series.
///
/// Index `t` here is zero-based; the first `m` entries are the
/// initialisation segment with `eta = g(y)` and `err = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorPath {
    pub eta: Vec<f64>,
    pub mu: Vec<f64>,
    pub err: Vec<f64>,
}

/// Lag coefficients of the expanded polynomials:
/// `η_t = β + Σ_L ar[L] g(y_{t-L}) + Σ_L ma[L] r_{t-L}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LagCoefficients {
    pub ar: BTreeMap<usize, f64>,
    pub ma: BTreeMap<usize, f64>,
}

/// Product of two polynomials in `B` given as lag → coefficient maps,
/// each including its lag-0 term.
pub fn poly_mul(a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for (&la, &ca) in a {
        for (&lb, &cb) in b {
            *out.entry(la + lb).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// `1 - c_1 B^{step} - c_2 B^{2 step} - ...`
pub(crate) fn lag_polynomial(coefs: &[f64], step: usize) -> BTreeMap<usize, f64> {
    let mut poly = BTreeMap::new();
    poly.insert(0, 1.0);
    for (i, &c) in coefs.iter().enumerate() {
        *poly.entry((i + 1) * step).or_insert(0.0) -= c;
    }
    poly
}

/// Expands `Φ(B^S)φ(B)` and `Θ(B^S)θ(B)` into the lag coefficients that enter
/// the linear predictor. Terms at coinciding lags are summed.
pub fn expand_polynomials(order: &ModelOrder, params: &ParamVector) -> LagCoefficients {
    let s = order.period;
    let ar_poly = poly_mul(&lag_polynomial(&params.ar, 1), &lag_polynomial(&params.sar, s));
    let ma_poly = poly_mul(&lag_polynomial(&params.ma, 1), &lag_polynomial(&params.sma, s));
    // Move the AR side to the right-hand side; the MA side keeps its sign
    // except that r_t itself cancels against g(y_t) - η_t.
    let ar = ar_poly
        .into_iter()
        .filter(|&(lag, c)| lag > 0 && c != 0.0)
        .map(|(lag, c)| (lag, -c))
        .collect();
    let ma = ma_poly
        .into_iter()
        .filter(|&(lag, c)| lag > 0 && c != 0.0)
        .collect();
    LagCoefficients { ar, ma }
}

/// Flattened lag lists used by the recursions.
#[derive(Debug, Clone)]
pub(crate) struct LagLists {
    pub ar: Vec<(usize, f64)>,
    pub ma: Vec<(usize, f64)>,
}

impl LagLists {
    pub fn new(order: &ModelOrder, params: &ParamVector) -> Self {
        let lc = expand_polynomials(order, params);
        Self {
            ar: lc.ar.into_iter().collect(),
            ma: lc.ma.into_iter().collect(),
        }
    }
}

pub(crate) fn check_length(order: &ModelOrder, n: usize) -> Result<usize> {
    let m = burn_in(order);
    if n <= m {
        return Err(BsarmaError::InsufficientData { n, required: m });
    }
    Ok(m)
}

/// Runs the linear predictor recursion over the series.
pub fn predictor_path(
    order: &ModelOrder,
    params: &ParamVector,
    series: &SeriesData,
    link: &Link,
) -> Result<PredictorPath> {
    params.validate(order)?;
    let m = check_length(order, series.len())?;
    let gy: Vec<f64> = series.values().iter().map(|&y| link.forward_unchecked(y)).collect();
    Ok(path_from_link_values(order, params, &gy, m, link))
}

pub(crate) fn path_from_link_values(
    order: &ModelOrder,
    params: &ParamVector,
    gy: &[f64],
    m: usize,
    link: &Link,
) -> PredictorPath {
    let n = gy.len();
    let lags = LagLists::new(order, params);
    let mut eta = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut err = Vec::with_capacity(n);
    for t in 0..n {
        let e = if t < m {
            gy[t]
        } else {
            let mut e = params.beta;
            for &(lag, c) in &lags.ar {
                e += c * gy[t - lag];
            }
            for &(lag, c) in &lags.ma {
                e += c * err[t - lag];
            }
            e
        };
        eta.push(e);
        mu.push(link.link_inv(e));
        err.push(if t < m { 0.0 } else { gy[t] - e });
    }
    PredictorPath { eta, mu, err }
}
