//! Dense BFGS with a strong-Wolfe line search (bracketing + zoom with cubic
//! interpolation).

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Converged once `max |∇f| <` this.
    pub gradient_tolerance: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search_evals: usize,
    /// Optional early stop once `f ≤ target_value`.
    pub target_value: Option<f64>,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            c1: 1e-4,
            c2: 0.9,
            max_line_search_evals: 40,
            target_value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientConverged,
    TargetReached,
    MaxIterations,
    /// Line search could not satisfy the Wolfe conditions.
    LineSearchFailed,
    /// No further decrease possible in floating point.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_max_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

struct Point {
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
}

/// Minimizes `objective`, which returns `(f(x), ∇f(x))`.
///
/// The returned point is always the best iterate seen.
pub fn minimize<F>(mut objective: F, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &DVector<f64>, evals: &mut usize| -> Point {
        *evals += 1;
        let (f, g) = objective(x.as_slice());
        Point {
            x: x.clone(),
            f,
            g: DVector::from_vec(g),
        }
    };

    let mut cur = eval(&DVector::from_column_slice(x0), &mut evals);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut first_step = true;
    let mut iterations = 0;

    let termination = loop {
        let gnorm = cur.g.amax();
        if opts.target_value.is_some_and(|t| cur.f <= t) {
            break Termination::TargetReached;
        }
        if gnorm < opts.gradient_tolerance {
            break Termination::GradientConverged;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }

        let mut dir = -(&h_inv * &cur.g);
        let mut slope = dir.dot(&cur.g);
        if !(slope < 0.0) {
            // Lost positive definiteness; fall back to steepest descent.
            h_inv = DMatrix::identity(n, n);
            dir = -cur.g.clone();
            slope = dir.dot(&cur.g);
        }
        // Unit steps on the first iteration can be wildly off-scale.
        let alpha0 = if first_step { (1.0 / gnorm).min(1.0) } else { 1.0 };

        let next = match line_search(&mut eval, &mut evals, &cur, &dir, slope, alpha0, opts) {
            LineSearch::Found(p) => p,
            LineSearch::Failed(best) => {
                if let Some(p) = best {
                    if p.f < cur.f {
                        cur = p;
                    }
                }
                break Termination::LineSearchFailed;
            }
        };
        iterations += 1;

        let s = &next.x - &cur.x;
        let y = &next.g - &cur.g;
        let sy = s.dot(&y);
        if !(next.f < cur.f) {
            break Termination::Stalled;
        }
        if sy > 1e-12 * s.norm() * y.norm() {
            if first_step {
                // Scale the initial inverse Hessian (Nocedal & Wright 6.20).
                h_inv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            // H+ = H − ρ(s yᵀH + H y sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            h_inv -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho);
            first_step = false;
        }
        cur = next;
    };

    BfgsOutcome {
        gradient_max_norm: cur.g.amax(),
        x: cur.x.as_slice().to_vec(),
        value: cur.f,
        iterations,
        evaluations: evals,
        termination,
    }
}

enum LineSearch {
    Found(Point),
    Failed(Option<Point>),
}

fn line_search<E>(
    eval: &mut E,
    evals: &mut usize,
    start: &Point,
    dir: &DVector<f64>,
    slope0: f64,
    alpha0: f64,
    opts: &BfgsOptions,
) -> LineSearch
where
    E: FnMut(&DVector<f64>, &mut usize) -> Point,
{
    let f0 = start.f;
    let at = |alpha: f64| &start.x + dir * alpha;
    let mut best: Option<Point> = None;
    let remember = |p: &Point, best: &mut Option<Point>| {
        if best.as_ref().is_none_or(|b| p.f < b.f) {
            *best = Some(Point {
                x: p.x.clone(),
                f: p.f,
                g: p.g.clone(),
            });
        }
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut slope_prev = slope0;
    let mut alpha = alpha0;
    let mut used = 0;

    while used < opts.max_line_search_evals {
        let p = eval(&at(alpha), evals);
        used += 1;
        remember(&p, &mut best);
        let slope = p.g.dot(dir);
        if !p.f.is_finite() {
            alpha = 0.5 * (alpha_prev + alpha);
            continue;
        }
        if p.f > f0 + opts.c1 * alpha * slope0 || (used > 1 && p.f >= f_prev) {
            return zoom(
                eval, evals, start, dir, slope0, opts, alpha_prev, f_prev, slope_prev, alpha, p.f, slope, used, best,
            );
        }
        if slope.abs() <= -opts.c2 * slope0 {
            return LineSearch::Found(p);
        }
        if slope >= 0.0 {
            return zoom(
                eval, evals, start, dir, slope0, opts, alpha, p.f, slope, alpha_prev, f_prev, slope_prev, used, best,
            );
        }
        alpha_prev = alpha;
        f_prev = p.f;
        slope_prev = slope;
        alpha *= 2.0;
    }
    LineSearch::Failed(best)
}

#[allow(clippy::too_many_arguments)]
fn zoom<E>(
    eval: &mut E,
    evals: &mut usize,
    start: &Point,
    dir: &DVector<f64>,
    slope0: f64,
    opts: &BfgsOptions,
    mut lo: f64,
    mut f_lo: f64,
    mut d_lo: f64,
    mut hi: f64,
    mut f_hi: f64,
    mut d_hi: f64,
    mut used: usize,
    mut best: Option<Point>,
) -> LineSearch
where
    E: FnMut(&DVector<f64>, &mut usize) -> Point,
{
    let f0 = start.f;
    while used < opts.max_line_search_evals {
        if (hi - lo).abs() < 1e-16 * lo.abs().max(1.0) {
            break;
        }
        let alpha = interpolate(lo, f_lo, d_lo, hi, f_hi, d_hi);
        let p = eval(&(&start.x + dir * alpha), evals);
        used += 1;
        if best.as_ref().is_none_or(|b| p.f < b.f) {
            best = Some(Point {
                x: p.x.clone(),
                f: p.f,
                g: p.g.clone(),
            });
        }
        let slope = p.g.dot(dir);
        if !p.f.is_finite() || p.f > f0 + opts.c1 * alpha * slope0 || p.f >= f_lo {
            hi = alpha;
            f_hi = p.f;
            d_hi = slope;
        } else {
            if slope.abs() <= -opts.c2 * slope0 {
                return LineSearch::Found(p);
            }
            if slope * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                d_hi = d_lo;
            }
            lo = alpha;
            f_lo = p.f;
            d_lo = slope;
        }
    }
    LineSearch::Failed(best)
}

/// Cubic interpolation minimizer between two bracketing points, safeguarded
/// to stay well inside the interval.
fn interpolate(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    let fallback = 0.5 * (a + b);
    if !(fa.is_finite() && fb.is_finite() && da.is_finite() && db.is_finite()) {
        return fallback;
    }
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return fallback;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let x = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    if x.is_finite() && x > left + margin && x < right - margin {
        x
    } else {
        fallback
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(rosenbrock, &[-1.2, 1.0], &BfgsOptions::default());
        assert_eq!(out.termination, Termination::GradientConverged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn quadratic_converges_quickly() {
        let diag = [1.0, 10.0, 100.0, 0.5];
        let f = |x: &[f64]| {
            let v: f64 = x.iter().zip(diag).map(|(xi, d)| 0.5 * d * xi * xi).sum();
            (v, x.iter().zip(diag).map(|(xi, d)| d * xi).collect())
        };
        let out = minimize(f, &[1.0, 1.0, 1.0, 1.0], &BfgsOptions::default());
        assert_eq!(out.termination, Termination::GradientConverged);
        assert!(out.iterations < 30);
    }

    #[test]
    fn respects_iteration_cap_and_target() {
        let opts = BfgsOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let out = minimize(rosenbrock, &[-1.2, 1.0], &opts);
        assert_eq!(out.termination, Termination::MaxIterations);
        assert_eq!(out.iterations, 3);

        let opts = BfgsOptions {
            target_value: Some(1.0),
            ..Default::default()
        };
        let out = minimize(rosenbrock, &[-1.2, 1.0], &opts);
        assert_eq!(out.termination, Termination::TargetReached);
        assert!(out.value <= 1.0);
    }

    #[test]
    fn never_returns_worse_than_start() {
        // Non-smooth objective the line search cannot satisfy.
        let f = |x: &[f64]| (x[0].abs(), vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]);
        let out = minimize(f, &[0.3], &BfgsOptions::default());
        assert!(out.value <= 0.3);
    }

    #[test]
    fn cubic_interpolation_stays_inside() {
        let x = interpolate(0.0, 1.0, -1.0, 1.0, 1.5, 2.0);
        assert!(x > 0.1 && x < 0.9);
    }
}
