//! Adaptive composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 12;
const MAX_PANELS: usize = 20_000;
const MIN_WIDTH: f64 = 1e-12;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

/// Legendre roots and weights by Newton iteration on `P_ORDER`.
fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Rule { nodes, weights }
    })
}

fn gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is accepted when the one-panel and two-half-panel estimates
/// agree to within the panel's share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::SolverFailure(format!("non-finite limits [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let total_width = hi - lo;
    let mut stack = vec![(lo, hi, gauss(f, lo, hi))];
    let mut sum = 0.0;
    let mut panels = 0usize;
    while let Some((a, b, whole)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::SolverFailure(format!(
                "quadrature on [{lo}, {hi}] did not converge within {MAX_PANELS} panels"
            )));
        }
        let m = 0.5 * (a + b);
        let left = gauss(f, a, m);
        let right = gauss(f, m, b);
        let refined = left + right;
        if !refined.is_finite() {
            return Err(Error::SolverFailure(format!("non-finite integrand on [{a}, {b}]")));
        }
        let share = tol * (b - a) / total_width;
        if (refined - whole).abs() <= share.max(f64::EPSILON * refined.abs()) || b - a < MIN_WIDTH {
            sum += refined;
        } else {
            stack.push((a, m, left));
            stack.push((m, b, right));
        }
    }
    Ok(sign * sum)
}

/// Integrate over `[a, b]`, splitting at the interior `breaks` so that kinks of
/// the integrand fall on panel boundaries.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| *p > a && *p < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(a);
    edges.extend(points);
    edges.push(b);
    let pieces = (edges.len() - 1) as f64;
    edges
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol / pieces))
        .sum()
}
