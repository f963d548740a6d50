//! Limited-memory BFGS with a strong-Wolfe line search (bracketing and
//! safeguarded cubic zoom).

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsParams {
    pub memory: usize,
    pub max_iterations: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search_evals: usize,
    /// Stop once `‖g‖_∞` drops below this.
    pub gradient_tolerance: f64,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 10_000,
            c1: 1e-4,
            c2: 0.9,
            max_line_search_evals: 40,
            gradient_tolerance: 1e-14,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The caller's stopping predicate accepted the current value.
    Target,
    GradientVanished,
    MaxIterations,
    LineSearchFailed,
    /// The objective could not be evaluated at the starting point.
    BadStart,
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Trial {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

// Minimiser of the cubic through (a, fa, da), (b, fb, db), clamped into the
// inner 80% of the interval.
fn cubic_step(a: &Trial, b: &Trial) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let width = hi - lo;
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let rad = d1 * d1 - a.slope * b.slope;
    let candidate = if rad >= 0.0 {
        let d2 = (b.alpha - a.alpha).signum() * rad.sqrt();
        b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2)
    } else {
        f64::NAN
    };
    if candidate.is_finite() {
        candidate.clamp(lo + 0.1 * width, hi - 0.1 * width)
    } else {
        0.5 * (lo + hi)
    }
}

/// Minimise `objective` from `x0`.
///
/// `objective` returns `None` where the function cannot be evaluated; the
/// line search treats such points as infinitely bad. `stop` is consulted on
/// every accepted iterate and `observe` sees each accepted point.
pub fn minimize<F, S, O>(
    mut objective: F,
    x0: Vec<f64>,
    params: &LbfgsParams,
    mut stop: S,
    mut observe: O,
) -> LbfgsOutcome
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    S: FnMut(&[f64], f64) -> bool,
    O: FnMut(&[f64], f64),
{
    let n = x0.len();
    let mut evaluations = 1;
    let Some((mut value, mut grad)) = objective(&x0) else {
        return LbfgsOutcome {
            x: x0,
            value: f64::INFINITY,
            iterations: 0,
            evaluations,
            termination: Termination::BadStart,
        };
    };
    let mut x = x0;
    observe(&x, value);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(params.memory);
    let finish = |x, value, iterations, evaluations, termination| LbfgsOutcome {
        x,
        value,
        iterations,
        evaluations,
        termination,
    };

    for iteration in 0..params.max_iterations {
        if stop(&x, value) {
            return finish(x, value, iteration, evaluations, Termination::Target);
        }
        if inf_norm(&grad) < params.gradient_tolerance {
            return finish(x, value, iteration, evaluations, Termination::GradientVanished);
        }

        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &dir);
            for (di, yi) in dir.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &dir);
            for (di, si) in dir.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope0 = dot(&grad, &dir);
        if !(slope0 < 0.0) {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope0 = dot(&grad, &dir);
        }

        let initial = if history.is_empty() {
            (1.0 / inf_norm(&grad).max(1e-300)).min(1.0)
        } else {
            1.0
        };

        let mut eval_at = |alpha: f64| -> Trial {
            evaluations += 1;
            let point: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
            match objective(&point) {
                Some((v, g)) if v.is_finite() => {
                    let slope = dot(&g, &dir);
                    Trial { alpha, value: v, grad: g, slope }
                }
                _ => Trial {
                    alpha,
                    value: f64::INFINITY,
                    grad: vec![0.0; n],
                    slope: f64::NAN,
                },
            }
        };

        let origin = Trial { alpha: 0.0, value, grad: grad.clone(), slope: slope0 };
        let accepted = strong_wolfe(&mut eval_at, &origin, initial, params);
        let Some(step) = accepted else {
            return finish(x, value, iteration, evaluations, Termination::LineSearchFailed);
        };

        let s: Vec<f64> = dir.iter().map(|d| d * step.alpha).collect();
        let y: Vec<f64> = step.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        value = step.value;
        grad = step.grad;
        observe(&x, value);
    }
    let termination = if stop(&x, value) {
        Termination::Target
    } else {
        Termination::MaxIterations
    };
    finish(x, value, params.max_iterations, evaluations, termination)
}

fn strong_wolfe(
    eval: &mut impl FnMut(f64) -> Trial,
    origin: &Trial,
    initial: f64,
    params: &LbfgsParams,
) -> Option<Trial> {
    let armijo = |t: &Trial| t.value <= origin.value + params.c1 * t.alpha * origin.slope;
    let curvature = |t: &Trial| t.slope.abs() <= -params.c2 * origin.slope;

    let mut prev = Trial {
        alpha: 0.0,
        value: origin.value,
        grad: origin.grad.clone(),
        slope: origin.slope,
    };
    let mut alpha = initial;
    let mut evals = 0;
    let mut best: Option<Trial> = None;
    let remember = |t: &Trial, best: &mut Option<Trial>| {
        if t.value < origin.value && best.as_ref().is_none_or(|b| t.value < b.value) {
            *best = Some(Trial { alpha: t.alpha, value: t.value, grad: t.grad.clone(), slope: t.slope });
        }
    };

    let (mut lo, mut hi) = loop {
        if evals >= params.max_line_search_evals {
            return best;
        }
        let trial = eval(alpha);
        evals += 1;
        if !trial.value.is_finite() {
            // step left the domain; shrink
            alpha *= 0.1;
            if alpha < 1e-20 {
                return best;
            }
            continue;
        }
        remember(&trial, &mut best);
        if !armijo(&trial) || (prev.alpha > 0.0 && trial.value >= prev.value) {
            break (prev, trial);
        }
        if curvature(&trial) {
            return Some(trial);
        }
        if trial.slope >= 0.0 {
            break (trial, prev);
        }
        alpha = 2.0 * trial.alpha;
        prev = trial;
    };

    // zoom: lo satisfies Armijo with the lowest value seen so far
    while evals < params.max_line_search_evals {
        if (hi.alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            break;
        }
        let alpha = if hi.slope.is_finite() && hi.value.is_finite() {
            cubic_step(&lo, &hi)
        } else {
            0.5 * (lo.alpha + hi.alpha)
        };
        let trial = eval(alpha);
        evals += 1;
        remember(&trial, &mut best);
        if !trial.value.is_finite() || !armijo(&trial) || trial.value >= lo.value {
            hi = trial;
        } else {
            if curvature(&trial) {
                return Some(trial);
            }
            if trial.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = trial;
        }
    }
    best
}
