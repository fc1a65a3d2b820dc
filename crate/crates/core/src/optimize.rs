//! Bound-constrained derivative-free minimization.
//!
//! A model-based trust-region method in the style of BOBYQA. It keeps `2d + 1`
//! interpolation points, fits a quadratic model whose Hessian changes as little
//! as possible (in Frobenius norm) between iterations, and minimizes the model
//! over the intersection of the trust region and the box. Geometry is kept in
//! check through the Lagrange functions of the interpolation set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_evals: usize,
    /// Initial trust-region radius. `None` uses a tenth of the smallest bound span.
    pub rho_begin: Option<f64>,
    /// Final radius; the run stops once the radius cannot be reduced further.
    pub rho_end: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: 300,
            rho_begin: None,
            rho_end: 1e-4,
            lower: 0.0,
            upper: std::f64::consts::TAU,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidParams("nothing to optimize".into()));
        }
        if self.max_evals < 2 * dim + 1 {
            return Err(Error::InvalidParams(format!(
                "max_evals {} is below 2 * {dim} + 1 interpolation points",
                self.max_evals
            )));
        }
        if !self.lower.is_finite() || !self.upper.is_finite() || self.upper <= self.lower {
            return Err(Error::InvalidParams(
                "bounds must be finite with lower < upper".into(),
            ));
        }
        let rho_begin = self.rho_begin(dim);
        if !(self.rho_end > 0.0 && self.rho_end <= rho_begin) {
            return Err(Error::InvalidParams("need 0 < rho_end <= rho_begin".into()));
        }
        if 2.0 * rho_begin > self.upper - self.lower {
            return Err(Error::InvalidParams(
                "rho_begin exceeds half the bound span".into(),
            ));
        }
        Ok(())
    }

    fn rho_begin(&self, _dim: usize) -> f64 {
        self.rho_begin.unwrap_or(0.1 * (self.upper - self.lower))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub start_f: f64,
    pub evals: usize,
    /// Best value after each evaluation.
    pub trace: Vec<f64>,
    /// False when no evaluated point improved on the start.
    pub improved: bool,
}

struct Problem<F> {
    f: F,
    max_evals: usize,
    evals: usize,
    trace: Vec<f64>,
    best: f64,
}

impl<F: FnMut(&[f64]) -> f64> Problem<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        self.evals += 1;
        if v < self.best {
            self.best = v;
        }
        self.trace.push(self.best);
        v
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }
}

/// Interpolation set and quadratic model around `points[k_opt]`.
struct Model {
    dim: usize,
    points: Vec<DVector<f64>>,
    values: Vec<f64>,
    k_opt: usize,
    /// Model gradient and Hessian at `points[k_opt]`.
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    /// Inverse of the scaled KKT matrix, used for Lagrange functions.
    kkt_inv: Option<DMatrix<f64>>,
    scale: f64,
}

impl Model {
    fn npt(&self) -> usize {
        self.points.len()
    }

    fn x_opt(&self) -> &DVector<f64> {
        &self.points[self.k_opt]
    }

    fn f_opt(&self) -> f64 {
        self.values[self.k_opt]
    }

    fn update_opt(&mut self) {
        self.k_opt = (0..self.npt())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap();
    }

    /// Refits the model. The Hessian update has minimal Frobenius norm
    /// relative to the previous Hessian.
    fn refit(&mut self) -> bool {
        let (npt, d) = (self.npt(), self.dim);
        let xo = self.x_opt().clone();
        let disp: Vec<DVector<f64>> = self.points.iter().map(|p| p - &xo).collect();
        let scale = disp
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        let ys: Vec<DVector<f64>> = disp.iter().map(|v| v / scale).collect();
        // Previous Hessian moved to the current base point is unchanged
        // (quadratic), but the gradient term is re-solved anyway.
        let h_prev = &self.hess * (scale * scale);

        let size = npt + 1 + d;
        let mut w = DMatrix::zeros(size, size);
        for s in 0..npt {
            for t in 0..npt {
                w[(s, t)] = 0.5 * ys[s].dot(&ys[t]).powi(2);
            }
            w[(s, npt)] = 1.0;
            w[(npt, s)] = 1.0;
            for i in 0..d {
                w[(s, npt + 1 + i)] = ys[s][i];
                w[(npt + 1 + i, s)] = ys[s][i];
            }
        }
        let Some(inv) = w.try_inverse() else {
            return false;
        };
        let mut rhs = DVector::zeros(size);
        for s in 0..npt {
            rhs[s] = self.values[s] - self.f_opt() - 0.5 * ys[s].dot(&(&h_prev * &ys[s]));
        }
        let sol = &inv * rhs;
        if sol.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let mut h = h_prev;
        for t in 0..npt {
            h += sol[t] * &ys[t] * ys[t].transpose();
        }
        let g = sol.rows(npt + 1, d).into_owned();
        self.grad = g / scale;
        self.hess = h / (scale * scale);
        self.kkt_inv = Some(inv);
        self.scale = scale;
        true
    }

    fn predicted(&self, s: &DVector<f64>) -> f64 {
        self.grad.dot(s) + 0.5 * s.dot(&(&self.hess * s))
    }

    /// Gradient at `x_opt` of the Lagrange function belonging to point `t`.
    fn lagrange_gradient(&self, t: usize) -> DVector<f64> {
        let inv = self.kkt_inv.as_ref().expect("model fitted");
        let npt = self.npt();
        inv.column(t).rows(npt + 1, self.dim).into_owned() / self.scale
    }

    /// Value at `x` of the Lagrange function belonging to point `t`.
    fn lagrange(&self, t: usize, x: &DVector<f64>) -> f64 {
        let inv = self.kkt_inv.as_ref().expect("model fitted");
        let npt = self.npt();
        let xo = self.x_opt();
        let y = (x - xo) / self.scale;
        let col = inv.column(t);
        let mut v = col[npt];
        for i in 0..self.dim {
            v += col[npt + 1 + i] * y[i];
        }
        for s in 0..npt {
            let ys = (&self.points[s] - xo) / self.scale;
            v += col[s] * 0.5 * ys.dot(&y).powi(2);
        }
        v
    }
}

/// Minimizes `(g.s + s'Hs/2)` over `|s| <= delta`, `lo <= s <= hi` with a
/// truncated conjugate-gradient method that freezes variables as they hit
/// their bounds.
fn trust_region_step(
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    delta: f64,
) -> DVector<f64> {
    let d = g.len();
    let mut s = DVector::zeros(d);
    let mut free = vec![true; d];
    for i in 0..d {
        if (g[i] >= 0.0 && lo[i] >= 0.0) || (g[i] <= 0.0 && hi[i] <= 0.0) {
            free[i] = false;
        }
    }
    let mask = |v: &DVector<f64>, free: &[bool]| {
        DVector::from_iterator(
            d,
            v.iter().zip(free).map(|(&x, &f)| if f { x } else { 0.0 }),
        )
    };
    let mut restarts = 0;
    'outer: loop {
        let mut r = mask(&-(g + h * &s), &free);
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        for _ in 0..d {
            if rr.sqrt() < 1e-12 * (1.0 + g.norm()) {
                break 'outer;
            }
            let hp = h * &p;
            let curv = p.dot(&hp);
            // Largest step along p keeping |s + a p| <= delta.
            let (sp, pp, ss) = (s.dot(&p), p.dot(&p), s.dot(&s));
            let disc = (sp * sp + pp * (delta * delta - ss)).max(0.0);
            let a_ball = (-sp + disc.sqrt()) / pp;
            // And inside the box.
            let mut a_box = f64::INFINITY;
            let mut hit = None;
            for i in 0..d {
                if !free[i] || p[i] == 0.0 {
                    continue;
                }
                let lim = if p[i] > 0.0 {
                    (hi[i] - s[i]) / p[i]
                } else {
                    (lo[i] - s[i]) / p[i]
                };
                if lim < a_box {
                    a_box = lim.max(0.0);
                    hit = Some(i);
                }
            }
            let a_cg = if curv > 0.0 { rr / curv } else { f64::INFINITY };
            let a = a_cg.min(a_ball).min(a_box);
            s += a * &p;
            if a == a_ball && a <= a_box {
                break 'outer;
            }
            if a == a_box && a < a_cg {
                let i = hit.unwrap();
                s[i] = if p[i] > 0.0 { hi[i] } else { lo[i] };
                free[i] = false;
                restarts += 1;
                if restarts > d {
                    break 'outer;
                }
                continue 'outer;
            }
            r -= a * &hp;
            r = mask(&r, &free);
            let rr_new = r.dot(&r);
            p = &r + (rr_new / rr) * &p;
            rr = rr_new;
        }
        break;
    }
    s
}

fn clamp_vec(x: &DVector<f64>, lower: f64, upper: f64) -> DVector<f64> {
    x.map(|v| v.clamp(lower, upper))
}

/// Minimizes `f` over the box `[lower, upper]^d` starting from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    cfg.validate(d)?;
    let (lower, upper) = (cfg.lower, cfg.upper);
    let rho_begin = cfg.rho_begin(d);
    let mut prob = Problem {
        f,
        max_evals: cfg.max_evals,
        evals: 0,
        trace: Vec::with_capacity(cfg.max_evals),
        best: f64::INFINITY,
    };

    let start = clamp_vec(&DVector::from_column_slice(x0), lower, upper);
    let start_f = prob.eval(start.as_slice());

    // Initial set: x0 and x0 +/- rho along each axis, stepping further inward
    // instead of across a bound.
    let mut points = vec![start.clone()];
    let mut values = vec![start_f];
    for i in 0..d {
        let (a, b) = if start[i] + rho_begin > upper {
            (-rho_begin, -2.0 * rho_begin)
        } else if start[i] - rho_begin < lower {
            (rho_begin, 2.0 * rho_begin)
        } else {
            (rho_begin, -rho_begin)
        };
        for step in [a, b] {
            let mut p = start.clone();
            p[i] = (p[i] + step).clamp(lower, upper);
            values.push(prob.eval(p.as_slice()));
            points.push(p);
        }
    }

    let mut model = Model {
        dim: d,
        points,
        values,
        k_opt: 0,
        grad: DVector::zeros(d),
        hess: DMatrix::zeros(d, d),
        kkt_inv: None,
        scale: 1.0,
    };
    model.update_opt();

    let mut rho = rho_begin;
    let mut delta = rho_begin;

    while !prob.exhausted() {
        if !model.refit() {
            break;
        }
        let xo = model.x_opt().clone();
        let lo = xo.map(|v| lower - v);
        let hi = xo.map(|v| upper - v);
        let step = trust_region_step(&model.grad, &model.hess, &lo, &hi, delta);
        let step_norm = step.norm();
        let far = far_point(&model, delta, rho);

        if step_norm < 0.5 * rho {
            // The model thinks we are converged at this resolution.
            delta = (0.5 * delta).max(rho);
            if let Some(t) = far {
                geometry_step(&mut model, &mut prob, t, delta, lower, upper);
            } else if !reduce_rho(&mut rho, &mut delta, cfg.rho_end) {
                break;
            }
            continue;
        }

        let x_new = clamp_vec(&(&xo + &step), lower, upper);
        let predicted = -model.predicted(&step);
        let f_old = model.f_opt();
        let f_new = prob.eval(x_new.as_slice());
        let ratio = if predicted > 0.0 {
            (f_old - f_new) / predicted
        } else {
            -1.0
        };

        delta = if ratio <= 0.1 {
            (0.5 * delta).min(step_norm)
        } else if ratio <= 0.7 {
            (0.5 * delta).max(step_norm)
        } else {
            (0.5 * delta).max(2.0 * step_norm)
        };
        if delta <= 1.5 * rho {
            delta = rho;
        }

        let t = replacement_index(&model, &x_new, f_new < f_old, delta);
        model.points[t] = x_new;
        model.values[t] = f_new;
        model.update_opt();

        if ratio > 0.1 {
            continue;
        }
        if let Some(t) = far_point(&model, delta, rho) {
            if !prob.exhausted() && model.refit() {
                geometry_step(&mut model, &mut prob, t, delta, lower, upper);
            }
            continue;
        }
        if ratio > 0.0 || delta.max(step_norm) > rho {
            continue;
        }
        if !reduce_rho(&mut rho, &mut delta, cfg.rho_end) {
            break;
        }
    }

    let x = model.x_opt().iter().copied().collect();
    let f = model.f_opt();
    Ok(OptimResult {
        x,
        f,
        start_f,
        evals: prob.evals,
        trace: prob.trace,
        improved: f < start_f,
    })
}

fn far_point(model: &Model, delta: f64, rho: f64) -> Option<usize> {
    let limit = (2.0 * delta).max(10.0 * rho);
    let xo = model.x_opt();
    (0..model.npt())
        .map(|t| (t, (&model.points[t] - xo).norm()))
        .filter(|&(_, dist)| dist > limit)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
}

fn replacement_index(model: &Model, x_new: &DVector<f64>, success: bool, delta: f64) -> usize {
    let xo = model.x_opt();
    let base = if success { x_new } else { xo };
    (0..model.npt())
        .filter(|&t| success || t != model.k_opt)
        .map(|t| {
            let dist = (&model.points[t] - base).norm();
            let weight = (dist / delta).max(1.0).powi(4);
            (t, model.lagrange(t, x_new).abs() * weight)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
        .unwrap()
}

/// Replaces point `t` by a point in the trust region where its Lagrange
/// function is large.
fn geometry_step<F: FnMut(&[f64]) -> f64>(
    model: &mut Model,
    prob: &mut Problem<F>,
    t: usize,
    delta: f64,
    lower: f64,
    upper: f64,
) {
    let xo = model.x_opt().clone();
    let d = model.dim;
    let mut candidates = Vec::with_capacity(2 * d + 2);
    let toward = &model.points[t] - &xo;
    let lagrange_grad = model.lagrange_gradient(t);
    for dir in [toward, lagrange_grad] {
        if dir.norm() > 0.0 {
            let u = dir.normalize() * delta;
            candidates.push(&xo + &u);
            candidates.push(&xo - &u);
        }
    }
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut c = xo.clone();
            c[i] += sign * delta;
            candidates.push(c);
        }
    }
    let best = candidates
        .into_iter()
        .map(|c| clamp_vec(&c, lower, upper))
        .filter(|c| (c - &xo).norm() > 0.0)
        .map(|c| {
            let v = model.lagrange(t, &c).abs();
            (c, v)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((c, _)) = best {
        let fc = prob.eval(c.as_slice());
        model.points[t] = c;
        model.values[t] = fc;
        model.update_opt();
    }
}

fn reduce_rho(rho: &mut f64, delta: &mut f64, rho_end: f64) -> bool {
    if *rho <= rho_end {
        return false;
    }
    let old = *rho;
    let ratio = old / rho_end;
    *rho = if ratio > 250.0 {
        0.1 * old
    } else if ratio > 16.0 {
        (old * rho_end).sqrt()
    } else {
        rho_end
    };
    *delta = (0.5 * old).max(*rho);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_cfg() -> OptimizerConfig {
        OptimizerConfig {
            max_evals: 500,
            rho_begin: Some(0.5),
            rho_end: 1e-6,
            lower: -5.0,
            upper: 5.0,
        }
    }

    #[test]
    fn finds_interior_minimum_of_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5 * x[0] * x[1];
        let r = minimize(f, &[4.0, 4.0], &quad_cfg()).unwrap();
        // Stationary point of the quadratic: solve [2 0.5; 0.5 6] x = [2, -12].
        let det = 2.0 * 6.0 - 0.25;
        let xs = [
            (2.0 * 6.0 - 0.5 * -12.0) / det,
            (2.0 * -12.0 - 0.5 * 2.0) / det,
        ];
        assert!((r.x[0] - xs[0]).abs() < 1e-4, "{:?}", r.x);
        assert!((r.x[1] - xs[1]).abs() < 1e-4, "{:?}", r.x);
        assert!(r.improved);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 10.0).powi(2) + (x[1] + 10.0).powi(2);
        let r = minimize(f, &[0.0, 0.0], &quad_cfg()).unwrap();
        assert!((r.x[0] - 5.0).abs() < 1e-6);
        assert!((r.x[1] + 5.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let cfg = OptimizerConfig {
            max_evals: 2000,
            ..quad_cfg()
        };
        let r = minimize(f, &[-1.2, 1.0], &cfg).unwrap();
        assert!(r.f < 1e-6, "f = {} after {} evals", r.f, r.evals);
    }

    #[test]
    fn higher_dimension_trig() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (1.0 + i as f64) * (1.0 - (v - 0.3 * i as f64).cos()))
                .sum::<f64>()
        };
        let cfg = OptimizerConfig::default();
        let x0 = vec![0.9, 0.2, 1.4, 0.5, 1.0, 1.6];
        let r = minimize(f, &x0, &cfg).unwrap();
        assert!(r.f < 1e-6, "f = {} after {} evals", r.f, r.evals);
        assert!(r.evals <= cfg.max_evals);
    }

    #[test]
    fn trace_is_monotone_and_bounded_by_start() {
        let f = |x: &[f64]| x[0].sin() + x[1].cos();
        let r = minimize(f, &[1.0, 1.0], &OptimizerConfig::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.trace.len(), r.evals);
        assert!(r.f <= r.start_f);
    }

    #[test]
    fn constant_function_does_not_improve() {
        let r = minimize(|_| 2.5, &[1.0, 2.0], &OptimizerConfig::default()).unwrap();
        assert_eq!(r.f, 2.5);
        assert!(!r.improved);
        assert_eq!(r.x, vec![1.0, 2.0]);
    }

    #[test]
    fn budget_validation() {
        let cfg = OptimizerConfig {
            max_evals: 4,
            ..Default::default()
        };
        assert!(minimize(|x| x[0] * x[0], &[1.0, 1.0], &cfg).is_err());
    }
}
