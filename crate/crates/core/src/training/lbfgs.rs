//! Limited-memory BFGS minimizer with a strong-Wolfe line search
//! (bracketing followed by safeguarded cubic zoom).

use std::collections::VecDeque;
use std::time::Instant;

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct LbfgsParams {
    pub history: usize,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub gradient_tolerance: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self {
            history: 7,
            max_iterations: 500,
            relative_tolerance: 1e-6,
            gradient_tolerance: 1e-8,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    RelativeTolerance,
    GradientNorm,
    MaxIterations,
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::RelativeTolerance => "relative-tolerance",
            Termination::GradientNorm => "gradient-norm",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailed => "line-search-failed",
        }
    }
}

/// State after an accepted step.
#[derive(Clone, Debug)]
pub struct Step {
    pub iteration: usize,
    pub value: f64,
    pub gradient_norm: f64,
    pub gradient_max_norm: f64,
    pub evaluations: usize,
    pub seconds: f64,
}

pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
    gradient: Vec<f64>,
}

/// Minimizer of the cubic interpolating two points (values and slopes),
/// or `None` when it does not exist.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Minimizes `eval`, which returns the value and gradient at a point.
/// `on_step` sees every accepted iteration.
pub fn minimize<F, C>(x0: Vec<f64>, params: &LbfgsParams, mut eval: F, mut on_step: C) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(&Step),
{
    let mut x = x0;
    let (mut value, mut gradient) = eval(&x)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(params.history);

    if max_norm(&gradient) < params.gradient_tolerance {
        return Ok(Minimum {
            x,
            value,
            gradient,
            termination: Termination::GradientNorm,
        });
    }

    let mut termination = Termination::MaxIterations;
    for iteration in 1..=params.max_iterations {
        let started = Instant::now();

        // two-loop recursion
        let mut direction: Vec<f64> = gradient.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &direction);
            for (d, yi) in direction.iter_mut().zip(y) {
                *d -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            direction.iter_mut().for_each(|d| *d *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &direction);
            for (d, si) in direction.iter_mut().zip(s) {
                *d += (a - b) * si;
            }
        }
        let mut slope = dot(&direction, &gradient);
        if slope >= 0.0 {
            history.clear();
            direction = gradient.iter().map(|g| -g).collect();
            slope = dot(&direction, &gradient);
        }
        let initial = if history.is_empty() {
            (1.0 / dot(&gradient, &gradient).sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut evaluations = 0;
        let mut probe = |alpha: f64| -> Result<Point> {
            let trial: Vec<f64> = x.iter().zip(&direction).map(|(xi, di)| xi + alpha * di).collect();
            let (value, gradient) = eval(&trial)?;
            evaluations += 1;
            Ok(Point {
                alpha,
                value,
                slope: dot(&gradient, &direction),
                gradient,
            })
        };
        let origin = Point {
            alpha: 0.0,
            value,
            slope,
            gradient: Vec::new(),
        };
        let accepted = strong_wolfe(&origin, initial, params, &mut probe)?;
        let Some(point) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };

        let s: Vec<f64> = direction.iter().map(|d| point.alpha * d).collect();
        let y: Vec<f64> = point.gradient.iter().zip(&gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == params.history {
                history.pop_front();
            }
            history.push_back((s.clone(), y, 1.0 / sy));
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let previous = value;
        value = point.value;
        gradient = point.gradient;

        let gmax = max_norm(&gradient);
        on_step(&Step {
            iteration,
            value,
            gradient_norm: dot(&gradient, &gradient).sqrt(),
            gradient_max_norm: gmax,
            evaluations,
            seconds: started.elapsed().as_secs_f64(),
        });

        if gmax < params.gradient_tolerance {
            termination = Termination::GradientNorm;
            break;
        }
        if (previous - value).abs() / value.abs().max(1.0) < params.relative_tolerance {
            termination = Termination::RelativeTolerance;
            break;
        }
    }
    Ok(Minimum {
        x,
        value,
        gradient,
        termination,
    })
}

/// Returns a point satisfying the strong Wolfe conditions, falling back to
/// the best sufficient-decrease point found, or `None`.
fn strong_wolfe<P>(origin: &Point, initial: f64, params: &LbfgsParams, probe: &mut P) -> Result<Option<Point>>
where
    P: FnMut(f64) -> Result<Point>,
{
    let armijo = |p: &Point| p.value <= origin.value + params.c1 * p.alpha * origin.slope;
    let curvature = |p: &Point| p.slope.abs() <= -params.c2 * origin.slope;

    let mut prev = Point {
        alpha: 0.0,
        value: origin.value,
        slope: origin.slope,
        gradient: Vec::new(),
    };
    let mut alpha = initial;
    let mut budget = params.max_line_search;
    let (mut lo, mut hi);
    loop {
        if budget == 0 {
            return Ok(None);
        }
        budget -= 1;
        let cur = probe(alpha)?;
        if !cur.value.is_finite() || !armijo(&cur) || (prev.alpha > 0.0 && cur.value >= prev.value) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Ok(Some(cur));
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        alpha = cubic_min(&prev, &cur)
            .filter(|a| *a > cur.alpha * 1.1 && *a < cur.alpha * 4.0)
            .unwrap_or(cur.alpha * 2.0);
        prev = cur;
    }

    // zoom: `lo` satisfies sufficient decrease and has the lowest value so far
    while budget > 0 {
        budget -= 1;
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        let alpha = if hi.value.is_finite() {
            cubic_min(&lo, &hi)
                .filter(|t| *t > a + 0.1 * width && *t < b - 0.1 * width)
                .unwrap_or(0.5 * (a + b))
        } else {
            0.5 * (a + b)
        };
        let cur = probe(alpha)?;
        if !cur.value.is_finite() || !armijo(&cur) || cur.value >= lo.value {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        if width < 1e-16 * b.max(1.0) {
            break;
        }
    }
    Ok((lo.alpha > 0.0).then_some(lo))
}
