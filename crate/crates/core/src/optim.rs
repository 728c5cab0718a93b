//! BFGS minimiser with a strong-Wolfe line search.
//!
//! The objective returns `None` where it is undefined (for instance a
//! proposal with non-positive precision); the line search treats such points
//! as `+∞` and shrinks the step.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when `max |∇f| <= gradient_tolerance`.
    pub gradient_tolerance: f64,
    /// Stop when `max |Δx| / max(1, max |x|) <= step_tolerance`.
    pub step_tolerance: f64,
    /// Seed inverse Hessian is `initial_inverse_scale * I`.
    pub initial_inverse_scale: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
            initial_inverse_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    /// The line search could not improve on a point where the predicted
    /// decrease is below the rounding level of the objective.
    Stationary,
    MaxIterations,
    LineSearchFailed,
    InvalidStart,
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl BfgsResult {
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::Gradient | Termination::Step | Termination::Stationary
        )
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 60;
/// Relative size of a directional derivative treated as numerically zero.
const NOISE_FLOOR: f64 = 1e-10;

struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
    x: DVector<f64>,
    grad: DVector<f64>,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Minimises `objective`, which returns value and gradient.
pub fn minimize<F>(mut objective: F, x0: &[f64], options: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut eval = |x: &DVector<f64>| -> Option<(f64, DVector<f64>)> {
        let (f, g) = objective(x.as_slice())?;
        if f.is_finite() && g.iter().all(|v| v.is_finite()) {
            Some((f, DVector::from_vec(g)))
        } else {
            None
        }
    };

    let mut x = DVector::from_column_slice(x0);
    let Some((mut f, mut g)) = eval(&x) else {
        return BfgsResult {
            x: x0.to_vec(),
            value: f64::INFINITY,
            gradient: vec![f64::NAN; n],
            iterations: 0,
            termination: Termination::InvalidStart,
        };
    };

    let seed = DMatrix::identity(n, n) * options.initial_inverse_scale;
    let mut h = seed.clone();
    let mut iterations = 0;
    let mut fresh = true;

    let termination = loop {
        if max_abs(&g) <= options.gradient_tolerance {
            break Termination::Gradient;
        }
        if iterations >= options.max_iterations {
            break Termination::MaxIterations;
        }

        let mut dir = -(&h * &g);
        let mut slope = dir.dot(&g);
        if !(slope < 0.0) {
            h = seed.clone();
            fresh = true;
            dir = -(&h * &g);
            slope = dir.dot(&g);
        }

        let point = match line_search(&mut eval, &x, f, slope, &dir) {
            Some(p) => p,
            None if slope.abs() <= NOISE_FLOOR * f.abs().max(1.0) => break Termination::Stationary,
            None if !fresh => {
                // Stale curvature information; retry along the seed direction.
                h = seed.clone();
                fresh = true;
                continue;
            }
            None => break Termination::LineSearchFailed,
        };
        iterations += 1;

        let s = &point.x - &x;
        let y = &point.grad - &g;
        let step_rel = max_abs(&s) / max_abs(&x).max(1.0);
        x = point.x;
        f = point.value;
        g = point.grad;

        if step_rel <= options.step_tolerance {
            break Termination::Step;
        }

        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                // Rescale the seed to the observed curvature before the first update.
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - ρ (H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
            h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }
    };

    BfgsResult {
        x: x.as_slice().to_vec(),
        value: f,
        gradient: g.as_slice().to_vec(),
        iterations,
        termination,
    }
}

fn line_search<E>(eval: &mut E, x: &DVector<f64>, f0: f64, d0: f64, dir: &DVector<f64>) -> Option<Point>
where
    E: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let mut probe = |alpha: f64| -> Option<Point> {
        let xa = x + dir * alpha;
        let (value, grad) = eval(&xa)?;
        let slope = grad.dot(dir);
        Some(Point {
            alpha,
            value,
            slope,
            x: xa,
            grad,
        })
    };

    let mut evals = 0;
    let mut prev = Point {
        alpha: 0.0,
        value: f0,
        slope: d0,
        x: x.clone(),
        grad: DVector::zeros(x.len()),
    };
    let mut alpha = 1.0;
    let mut first = true;
    loop {
        if evals >= MAX_LINE_EVALS {
            return None;
        }
        evals += 1;
        let cur = probe(alpha);
        match cur {
            None => return zoom(&mut probe, prev, None, alpha, f0, d0, &mut evals),
            Some(p) => {
                if p.value > f0 + C1 * alpha * d0 || (!first && p.value >= prev.value) {
                    let hi_alpha = p.alpha;
                    return zoom(&mut probe, prev, Some(p), hi_alpha, f0, d0, &mut evals);
                }
                if p.slope.abs() <= -C2 * d0 {
                    return Some(p);
                }
                if p.slope >= 0.0 {
                    let hi_alpha = prev.alpha;
                    return zoom(&mut probe, p, Some(prev), hi_alpha, f0, d0, &mut evals);
                }
                prev = p;
                alpha *= 2.0;
                first = false;
            }
        }
    }
}

/// Shrinks the bracket `[lo, hi]`. `hi` is `None` when the objective is
/// undefined there.
#[allow(clippy::too_many_arguments)]
fn zoom<P>(
    probe: &mut P,
    mut lo: Point,
    mut hi: Option<Point>,
    mut hi_alpha: f64,
    f0: f64,
    d0: f64,
    evals: &mut usize,
) -> Option<Point>
where
    P: FnMut(f64) -> Option<Point>,
{
    let accept_lo = |lo: Point| if lo.alpha > 0.0 { Some(lo) } else { None };
    loop {
        if *evals >= MAX_LINE_EVALS || (hi_alpha - lo.alpha).abs() <= 1e-16 * hi_alpha.abs().max(1e-300) {
            return accept_lo(lo);
        }
        *evals += 1;
        let width = hi_alpha - lo.alpha;
        let mut trial = match &hi {
            Some(h) => {
                // Minimiser of the quadratic through (lo, f_lo, slope_lo) and (hi, f_hi).
                let denom = 2.0 * (h.value - lo.value - lo.slope * width);
                if denom.abs() > 0.0 {
                    lo.alpha - lo.slope * width * width / denom
                } else {
                    lo.alpha + 0.5 * width
                }
            }
            None => lo.alpha + 0.5 * width,
        };
        let (a, b) = if lo.alpha < hi_alpha {
            (lo.alpha + 0.1 * width, hi_alpha - 0.1 * width)
        } else {
            (hi_alpha - 0.1 * width, lo.alpha + 0.1 * width)
        };
        let (a, b) = (a.min(b), a.max(b));
        if !trial.is_finite() || trial < a || trial > b {
            trial = lo.alpha + 0.5 * width;
        }
        match probe(trial) {
            None => {
                hi_alpha = trial;
                hi = None;
            }
            Some(p) => {
                if p.value > f0 + C1 * p.alpha * d0 || p.value >= lo.value {
                    hi_alpha = p.alpha;
                    hi = Some(p);
                } else {
                    if p.slope.abs() <= -C2 * d0 {
                        return Some(p);
                    }
                    if p.slope * (hi_alpha - lo.alpha) >= 0.0 {
                        hi_alpha = lo.alpha;
                        hi = Some(lo);
                    }
                    lo = p;
                }
            }
        }
    }
}
