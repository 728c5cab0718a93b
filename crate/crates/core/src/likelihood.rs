//! Conditional log-likelihood, score vector and conditional Fisher information.
//!
//! Every quantity is a sum over `t = m+1..n` of per-observation terms that
//! depend on the mean path `μ_t` and on the derivatives `∂η_t/∂λ`, which are
//! obtained by differentiating the predictor recursion. The derivatives are
//! zero over the initialisation segment.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{check_length, path_from_link_values, LagLists, Link, ModelOrder, ParamVector, PredictorPath, SeriesData};
use crate::special::{digamma_unchecked, log_gamma, trigamma_unchecked};

/// Derivatives of `η_t` with respect to the mean-equation coefficients.
///
/// Row `i` corresponds to observation `m + 1 + i` (one-based), i.e. the rows
/// cover the likelihood range only.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaJacobian {
    pub d_beta: Vec<f64>,
    pub d_ar: DMatrix<f64>,
    pub d_sar: DMatrix<f64>,
    pub d_ma: DMatrix<f64>,
    pub d_sma: DMatrix<f64>,
}

impl EtaJacobian {
    /// All columns side by side in flat layout order `(β, φ, Φ, θ, Θ)`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let rows = self.d_beta.len();
        let cols = 1 + self.d_ar.ncols() + self.d_sar.ncols() + self.d_ma.ncols() + self.d_sma.ncols();
        let mut out = DMatrix::zeros(rows, cols);
        out.column_mut(0).copy_from_slice(&self.d_beta);
        let mut c = 1;
        for block in [&self.d_ar, &self.d_sar, &self.d_ma, &self.d_sma] {
            for j in 0..block.ncols() {
                out.set_column(c, &block.column(j));
                c += 1;
            }
        }
        out
    }
}

/// Conditional Fisher information, ordered `(β, φ, Φ, θ, Θ, precision)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationMatrix(pub DMatrix<f64>);

impl InformationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Inverse via Cholesky, falling back to LU. `None` when singular.
    pub fn inverse(&self) -> Option<DMatrix<f64>> {
        if let Some(ch) = self.0.clone().cholesky() {
            let inv = ch.inverse();
            return Some(symmetrize(inv));
        }
        let inv = self.0.clone().try_inverse()?;
        if inv.iter().all(|v| v.is_finite()) {
            Some(symmetrize(inv))
        } else {
            None
        }
    }
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Per-series quantities that do not depend on the parameters.
#[derive(Debug, Clone)]
pub struct PreparedSeries {
    order: ModelOrder,
    link: Link,
    m: usize,
    y: Vec<f64>,
    gy: Vec<f64>,
    ystar: Vec<f64>,
    log_1m_y: Vec<f64>,
    log_y: Vec<f64>,
}

impl PreparedSeries {
    pub fn new(order: &ModelOrder, series: &SeriesData, link: &Link) -> Result<Self> {
        let m = check_length(order, series.len())?;
        let y = series.values().to_vec();
        let gy = y.iter().map(|&v| link.forward_unchecked(v)).collect();
        let log_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let log_1m_y: Vec<f64> = y.iter().map(|v| (-v).ln_1p()).collect();
        let ystar = log_y.iter().zip(&log_1m_y).map(|(a, b)| a - b).collect();
        Ok(Self {
            order: *order,
            link: *link,
            m,
            y,
            gy,
            ystar,
            log_1m_y,
            log_y,
        })
    }

    pub fn order(&self) -> &ModelOrder {
        &self.order
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub fn burn_in(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_effective(&self) -> usize {
        self.y.len() - self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn link_values(&self) -> &[f64] {
        &self.gy
    }

    pub fn ystar(&self) -> &[f64] {
        &self.ystar
    }

    pub fn path(&self, params: &ParamVector) -> Result<PredictorPath> {
        params.validate(&self.order)?;
        Ok(path_from_link_values(&self.order, params, &self.gy, self.m, &self.link))
    }

    /// `ℓ_t(μ, φ)` at observation `t` (zero-based).
    pub(crate) fn term(&self, t: usize, mu: f64, precision: f64) -> Result<f64> {
        let a = mu * precision;
        let b = (1.0 - mu) * precision;
        Ok(log_gamma(precision)? - log_gamma(a)? - log_gamma(b)?
            + (a - 1.0) * self.log_y[t]
            + (b - 1.0) * self.log_1m_y[t])
    }

    pub fn loglik(&self, params: &ParamVector) -> Result<f64> {
        let path = self.path(params)?;
        self.loglik_from_path(&path, params.precision)
    }

    pub(crate) fn loglik_from_path(&self, path: &PredictorPath, precision: f64) -> Result<f64> {
        let mut total = 0.0;
        for t in self.m..self.len() {
            total += self.term(t, path.mu[t], precision)?;
        }
        Ok(total)
    }

    /// Full-length derivative columns in flat order; rows `t < m` are zero.
    fn derivative_columns(&self, params: &ParamVector, path: &PredictorPath) -> Vec<Vec<f64>> {
        let o = &self.order;
        let s = o.period;
        let n = self.len();
        let m = self.m;
        let gy = &self.gy;
        let err = &path.err;
        let ma_lags = LagLists::new(o, params).ma;
        let ncol = o.n_coefficients();
        let l = o.layout();
        let mut cols = vec![vec![0.0; n]; ncol];
        for t in m..n {
            cols[0][t] = 1.0;
            for i in 1..=o.p {
                let mut v = gy[t - i];
                for (ii, &sar) in params.sar.iter().enumerate() {
                    v -= sar * gy[t - i - (ii + 1) * s];
                }
                cols[l.ar + i - 1][t] = v;
            }
            for si in 1..=o.sp {
                let mut v = gy[t - si * s];
                for (i, &ar) in params.ar.iter().enumerate() {
                    v -= ar * gy[t - (i + 1) - si * s];
                }
                cols[l.sar + si - 1][t] = v;
            }
            for j in 1..=o.q {
                let mut v = -err[t - j];
                for (jj, &sma) in params.sma.iter().enumerate() {
                    v += sma * err[t - j - (jj + 1) * s];
                }
                cols[l.ma + j - 1][t] = v;
            }
            for sj in 1..=o.sq {
                let mut v = -err[t - sj * s];
                for (j, &ma) in params.ma.iter().enumerate() {
                    v += ma * err[t - (j + 1) - sj * s];
                }
                cols[l.sma + sj - 1][t] = v;
            }
            // r_{t-L} = g(y_{t-L}) - η_{t-L}, so the MA feedback enters with a flipped sign.
            if !ma_lags.is_empty() {
                for col in cols.iter_mut() {
                    let mut v = col[t];
                    for &(lag, c) in &ma_lags {
                        v -= c * col[t - lag];
                    }
                    col[t] = v;
                }
            }
        }
        cols
    }

    pub fn eta_jacobian(&self, params: &ParamVector) -> Result<EtaJacobian> {
        let path = self.path(params)?;
        Ok(self.jacobian_from_columns(&self.derivative_columns(params, &path)))
    }

    fn jacobian_from_columns(&self, cols: &[Vec<f64>]) -> EtaJacobian {
        let o = &self.order;
        let l = o.layout();
        let rows = self.n_effective();
        let m = self.m;
        let block = |start: usize, width: usize| {
            DMatrix::from_fn(rows, width, |i, j| cols[start + j][m + i])
        };
        EtaJacobian {
            d_beta: cols[0][m..].to_vec(),
            d_ar: block(l.ar, o.p),
            d_sar: block(l.sar, o.sp),
            d_ma: block(l.ma, o.q),
            d_sma: block(l.sma, o.sq),
        }
    }

    /// Log-likelihood and score, sharing one pass over the path.
    pub fn loglik_and_score(&self, params: &ParamVector) -> Result<(f64, Vec<f64>)> {
        let path = self.path(params)?;
        let phi = params.precision;
        let loglik = self.loglik_from_path(&path, phi)?;
        let cols = self.derivative_columns(params, &path);
        let k = self.order.n_params();
        let mut grad = vec![0.0; k];
        let psi_phi = digamma_unchecked(phi);
        for t in self.m..self.len() {
            let mu = path.mu[t];
            let mustar = digamma_unchecked(mu * phi) - digamma_unchecked((1.0 - mu) * phi);
            let resid = self.ystar[t] - mustar;
            let weight = phi * resid / self.link.derivative_unchecked(mu);
            for (g, col) in grad.iter_mut().zip(&cols) {
                *g += weight * col[t];
            }
            grad[k - 1] += mu * resid + self.log_1m_y[t] - digamma_unchecked((1.0 - mu) * phi) + psi_phi;
        }
        Ok((loglik, grad))
    }

    pub fn score(&self, params: &ParamVector) -> Result<Vec<f64>> {
        Ok(self.loglik_and_score(params)?.1)
    }

    pub fn fisher_information(&self, params: &ParamVector) -> Result<InformationMatrix> {
        let path = self.path(params)?;
        let cols = self.derivative_columns(params, &path);
        let phi = params.precision;
        let k = self.order.n_params();
        let nc = k - 1;
        let mut info = DMatrix::zeros(k, k);
        let tri_phi = trigamma_unchecked(phi);
        for t in self.m..self.len() {
            let mu = path.mu[t];
            let ta = trigamma_unchecked(mu * phi);
            let tb = trigamma_unchecked((1.0 - mu) * phi);
            let w = phi * phi * (ta + tb);
            let c = phi * (ta * mu - tb * (1.0 - mu));
            let d = ta * mu * mu + tb * (1.0 - mu) * (1.0 - mu) - tri_phi;
            let tt = 1.0 / self.link.derivative_unchecked(mu);
            let wtt = w * tt * tt;
            for i in 0..nc {
                let di = cols[i][t];
                if di == 0.0 {
                    continue;
                }
                for j in i..nc {
                    info[(i, j)] += wtt * di * cols[j][t];
                }
                info[(i, nc)] += c * tt * di;
            }
            info[(nc, nc)] += d;
        }
        for i in 0..k {
            for j in 0..i {
                info[(i, j)] = info[(j, i)];
            }
        }
        Ok(InformationMatrix(info))
    }
}

fn prepare(order: &ModelOrder, params: &ParamVector, series: &SeriesData, link: &Link) -> Result<PreparedSeries> {
    params.validate(order)?;
    PreparedSeries::new(order, series, link)
}

/// Conditional log-likelihood `Σ_{t=m+1}^n ℓ_t(μ_t, φ)`.
pub fn conditional_loglik(order: &ModelOrder, params: &ParamVector, series: &SeriesData, link: &Link) -> Result<f64> {
    prepare(order, params, series, link)?.loglik(params)
}

pub fn eta_jacobian(order: &ModelOrder, params: &ParamVector, series: &SeriesData, link: &Link) -> Result<EtaJacobian> {
    prepare(order, params, series, link)?.eta_jacobian(params)
}

/// Analytic score in flat layout `(β, φ, Φ, θ, Θ, precision)`.
pub fn score(order: &ModelOrder, params: &ParamVector, series: &SeriesData, link: &Link) -> Result<Vec<f64>> {
    prepare(order, params, series, link)?.score(params)
}

pub fn fisher_information(
    order: &ModelOrder,
    params: &ParamVector,
    series: &SeriesData,
    link: &Link,
) -> Result<InformationMatrix> {
    prepare(order, params, series, link)?.fisher_information(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::burn_in;
    use crate::special::{beta_log_density, digamma, BetaParams};

    fn series(n: usize, seed: u64) -> SeriesData {
        // Deterministic values spread over (0.1, 0.9).
        let mut x = seed;
        let v = (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.1 + 0.8 * ((x >> 11) as f64 / (1u64 << 53) as f64)
            })
            .collect();
        SeriesData::new(v).unwrap()
    }

    #[test]
    fn single_point_loglik_is_density() {
        let o = ModelOrder::new(1, 0, 1, 0, 4).unwrap();
        let p = ParamVector {
            beta: 0.2,
            ar: vec![0.3],
            ma: vec![],
            sar: vec![-0.2],
            sma: vec![],
            precision: 7.0,
        };
        let m = burn_in(&o);
        let s = series(m + 1, 5);
        let g = Link::logit();
        let path = crate::model::predictor_path(&o, &p, &s, &g).unwrap();
        let expected = beta_log_density(s.values()[m], BetaParams::new(path.mu[m], 7.0).unwrap()).unwrap();
        assert!((conditional_loglik(&o, &p, &s, &g).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_loglik_is_zero() {
        let o = ModelOrder::new(1, 1, 1, 1, 4).unwrap();
        let p = ParamVector::zeros(&o, 0.0, 2.0);
        let s = series(40, 9);
        assert!(conditional_loglik(&o, &p, &s, &Link::logit()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pure_ar_jacobian_has_closed_form() {
        let o = ModelOrder::new(1, 0, 1, 0, 4).unwrap();
        let p = ParamVector {
            beta: 0.1,
            ar: vec![0.4],
            ma: vec![],
            sar: vec![0.25],
            sma: vec![],
            precision: 10.0,
        };
        let s = series(30, 2);
        let g = Link::logit();
        let jac = eta_jacobian(&o, &p, &s, &g).unwrap();
        let gy: Vec<f64> = s.values().iter().map(|&y| g.link(y).unwrap()).collect();
        let m = burn_in(&o);
        for (i, t) in (m..s.len()).enumerate() {
            assert_eq!(jac.d_beta[i], 1.0);
            assert!((jac.d_ar[(i, 0)] - (gy[t - 1] - 0.25 * gy[t - 5])).abs() < 1e-15);
            assert!((jac.d_sar[(i, 0)] - (gy[t - 4] - 0.4 * gy[t - 5])).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_ma_in_full_model_collapses_recursion() {
        let o = ModelOrder::new(1, 1, 1, 1, 12).unwrap();
        let p = ParamVector {
            beta: -0.5,
            ar: vec![0.3],
            ma: vec![0.0],
            sar: vec![0.2],
            sma: vec![0.0],
            precision: 50.0,
        };
        let s = series(60, 4);
        let g = Link::logit();
        let jac = eta_jacobian(&o, &p, &s, &g).unwrap();
        let gy: Vec<f64> = s.values().iter().map(|&y| g.link(y).unwrap()).collect();
        let m = burn_in(&o);
        for (i, t) in (m..s.len()).enumerate() {
            assert_eq!(jac.d_beta[i], 1.0);
            assert!((jac.d_sar[(i, 0)] - (gy[t - 12] - 0.3 * gy[t - 13])).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_mean_score_and_information() {
        // β = 0 and zero coefficients give μ_t = 0.5 everywhere.
        let o = ModelOrder::new(1, 1, 0, 0, 1).unwrap();
        let p = ParamVector::zeros(&o, 0.0, 6.0);
        let s = series(30, 3);
        let g = Link::logit();
        let u = score(&o, &p, &s, &g).unwrap();
        let m = burn_in(&o);
        let expected: f64 = s.values()[m..]
            .iter()
            .map(|&y| 0.5 * (y / (1.0 - y)).ln() + (1.0 - y).ln() - digamma(3.0).unwrap() + digamma(6.0).unwrap())
            .sum();
        assert!((u[3] - expected).abs() < 1e-10);

        let k = fisher_information(&o, &p, &s, &g).unwrap();
        for i in 0..3 {
            assert!(k.0[(i, 3)].abs() < 1e-12);
            assert!(k.0[(3, i)].abs() < 1e-12);
        }
    }

    #[test]
    fn information_symmetric_and_not_orthogonal() {
        let o = ModelOrder::new(1, 1, 1, 1, 4).unwrap();
        let p = ParamVector {
            beta: -0.8,
            ar: vec![0.2],
            ma: vec![0.3],
            sar: vec![0.25],
            sma: vec![-0.2],
            precision: 30.0,
        };
        let s = series(80, 8);
        let k = fisher_information(&o, &p, &s, &Link::logit()).unwrap();
        assert_eq!(k.0, k.0.transpose());
        let last = k.dim() - 1;
        assert!((0..last).any(|i| k.0[(i, last)].abs() > 0.0));
        assert!(k.inverse().is_some());
    }

    #[test]
    fn rejects_nonpositive_precision() {
        let o = ModelOrder::arma(1, 0);
        let mut p = ParamVector::zeros(&o, 0.0, 2.0);
        p.precision = -1.0;
        assert!(conditional_loglik(&o, &p, &series(10, 1), &Link::logit()).is_err());
    }
}
