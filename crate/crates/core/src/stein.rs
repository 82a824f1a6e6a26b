//! Stein equation solver and distances to the standard normal.
//!
//! For a bounded test function `g` the canonical solution of
//! `f'(x) - x f(x) = g(x) - E g(Z)` is
//!
//! ```text
//! f(x) =  e^{x^2/2} ∫_{-∞}^{x} e^{-t^2/2} (g(t) - E g(Z)) dt      (x <= 0)
//!      = -e^{x^2/2} ∫_{x}^{∞}  e^{-t^2/2} (g(t) - E g(Z)) dt      (x >  0)
//! ```
//!
//! Both tails are evaluated after the substitution `t = x ∓ s`, which folds the
//! `e^{x^2/2}` prefactor into the integrand and keeps it bounded by
//! `e^{-s^2/2}`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::normal::{normal_cdf, normal_pdf};
use crate::quadrature::integrate_with_breaks;

/// Truncation point of the `s` integrals; `e^{-50}` is below double precision.
const TAIL_CUTOFF: f64 = 10.0;
/// Half-width of the window used for `E g(Z)`.
const NORMAL_WINDOW: f64 = 12.0;
const SOLUTION_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-12;

/// A test function `g` for the Stein equation.
pub trait TestFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// Derivative of `g`, where it exists. Returning `None` makes the solver
    /// derive `f'` from the equation itself instead of by quadrature.
    fn derivative(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Points where `g` or `g'` is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Closure-backed test function.
pub struct FnTest<F, D = fn(f64) -> f64> {
    value: F,
    derivative: Option<D>,
    breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64> FnTest<F> {
    pub fn new(value: F) -> Self {
        Self {
            value,
            derivative: None,
            breaks: Vec::new(),
        }
    }
}

impl<F: Fn(f64) -> f64, D> FnTest<F, D> {
    pub fn with_derivative<D2: Fn(f64) -> f64>(self, derivative: D2) -> FnTest<F, D2> {
        FnTest {
            value: self.value,
            derivative: Some(derivative),
            breaks: self.breaks,
        }
    }

    pub fn with_breakpoints(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl<F, D> TestFunction for FnTest<F, D>
where
    F: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(x))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Which side of the threshold the linear ramp sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// 1 on `(-∞, t]`, 0 on `[t + ε, ∞)`.
    Upper,
    /// 1 on `(-∞, t - ε]`, 0 on `[t, ∞)`.
    Lower,
}

/// Piecewise-linear approximation of the indicator of `(-∞, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedIndicator {
    threshold: f64,
    width: f64,
    direction: Interpolation,
}

impl SmoothedIndicator {
    pub fn new(threshold: f64, width: f64, direction: Interpolation) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(invalid("smoothed indicator threshold must be finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!("smoothing width must be positive, got {width}")));
        }
        Ok(Self {
            threshold,
            width,
            direction,
        })
    }

    pub fn upper(threshold: f64, width: f64) -> Result<Self> {
        Self::new(threshold, width, Interpolation::Upper)
    }

    pub fn lower(threshold: f64, width: f64) -> Result<Self> {
        Self::new(threshold, width, Interpolation::Lower)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn direction(&self) -> Interpolation {
        self.direction
    }

    /// `(start, end)` of the linear ramp.
    pub fn ramp(&self) -> (f64, f64) {
        match self.direction {
            Interpolation::Upper => (self.threshold, self.threshold + self.width),
            Interpolation::Lower => (self.threshold - self.width, self.threshold),
        }
    }

    /// `E g(Z)` in closed form.
    pub fn normal_mean(&self) -> f64 {
        let (a, b) = self.ramp();
        // Φ(a) + (1/ε) ∫_a^b (b - z) φ(z) dz
        let ramp = b * (normal_cdf(b) - normal_cdf(a)) - (normal_pdf(a) - normal_pdf(b));
        normal_cdf(a) + ramp / self.width
    }
}

impl TestFunction for SmoothedIndicator {
    fn value(&self, x: f64) -> f64 {
        let (a, b) = self.ramp();
        if x <= a {
            1.0
        } else if x >= b {
            0.0
        } else {
            (b - x) / self.width
        }
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        let (a, b) = self.ramp();
        Some(if x > a && x < b { -1.0 / self.width } else { 0.0 })
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.ramp();
        vec![a, b]
    }
}

/// `E g(Z)` by quadrature against the normal density.
pub fn normal_expectation(g: &dyn TestFunction) -> Result<f64> {
    let integrand = |z: f64| g.value(z) * normal_pdf(z);
    integrate_with_breaks(
        &integrand,
        -NORMAL_WINDOW,
        NORMAL_WINDOW,
        &g.breakpoints(),
        MEAN_TOL,
    )
}

/// How `f'` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeRoute {
    /// Separate quadrature of the differentiated integral (uses `g'`).
    Quadrature,
    /// `f' = x f + g - E g(Z)`.
    Identity,
}

/// One grid point of a solved Stein equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridValue {
    pub x: f64,
    pub f: f64,
    pub df: f64,
}

impl GridValue {
    /// Residual of the Stein equation at this point, given `g(x) - E g(Z)`.
    pub fn residual(&self, centered_g: f64) -> f64 {
        (self.df - self.x * self.f - centered_g).abs()
    }
}

/// Solution of the Stein equation for one test function.
#[derive(Clone)]
pub struct SteinSolution {
    g: Arc<dyn TestFunction>,
    mean: f64,
    route: DerivativeRoute,
    grid: Vec<GridValue>,
}

impl std::fmt::Debug for SteinSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SteinSolution")
            .field("mean", &self.mean)
            .field("route", &self.route)
            .field("grid_points", &self.grid.len())
            .finish()
    }
}

impl SteinSolution {
    /// `E g(Z)`.
    pub fn normal_mean(&self) -> f64 {
        self.mean
    }

    pub fn test_function(&self) -> &dyn TestFunction {
        self.g.as_ref()
    }

    pub fn derivative_route(&self) -> DerivativeRoute {
        self.route
    }

    /// Values on the grid passed to [`solve_stein_equation`].
    pub fn grid(&self) -> &[GridValue] {
        &self.grid
    }

    /// `g(x) - E g(Z)`.
    pub fn centered_g(&self, x: f64) -> f64 {
        self.g.value(x) - self.mean
    }

    fn breaks_in_s(&self, x: f64) -> Vec<f64> {
        self.g
            .breakpoints()
            .into_iter()
            .map(|b| if x <= 0.0 { x - b } else { b - x })
            .filter(|s| *s > 0.0)
            .collect()
    }

    pub fn f(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        let breaks = self.breaks_in_s(x);
        if x <= 0.0 {
            let k = |s: f64| (x * s - 0.5 * s * s).exp() * self.centered_g(x - s);
            integrate_with_breaks(&k, 0.0, TAIL_CUTOFF, &breaks, SOLUTION_TOL)
        } else {
            let k = |s: f64| (-x * s - 0.5 * s * s).exp() * self.centered_g(x + s);
            integrate_with_breaks(&k, 0.0, TAIL_CUTOFF, &breaks, SOLUTION_TOL).map(|v| -v)
        }
    }

    pub fn df(&self, x: f64) -> Result<f64> {
        match self.route {
            DerivativeRoute::Identity => Ok(x * self.f(x)? + self.centered_g(x)),
            DerivativeRoute::Quadrature => {
                check_point(x)?;
                let breaks = self.breaks_in_s(x);
                let gp = |t: f64| self.g.derivative(t).unwrap_or(0.0);
                if x <= 0.0 {
                    let k = |s: f64| {
                        (x * s - 0.5 * s * s).exp() * (s * self.centered_g(x - s) + gp(x - s))
                    };
                    integrate_with_breaks(&k, 0.0, TAIL_CUTOFF, &breaks, SOLUTION_TOL)
                } else {
                    let k = |s: f64| {
                        (-x * s - 0.5 * s * s).exp() * (s * self.centered_g(x + s) - gp(x + s))
                    };
                    integrate_with_breaks(&k, 0.0, TAIL_CUTOFF, &breaks, SOLUTION_TOL)
                }
            }
        }
    }

    /// `|f'(x) - x f(x) - (g(x) - E g(Z))|`.
    pub fn residual(&self, x: f64) -> Result<f64> {
        let v = GridValue {
            x,
            f: self.f(x)?,
            df: self.df(x)?,
        };
        Ok(v.residual(self.centered_g(x)))
    }
}

fn check_point(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("evaluation point {x} is not finite")))
    }
}

/// Solve the Stein equation for `g` and evaluate the solution on `grid`.
///
/// The grid must be finite and sorted; `g` must be finite on it.
pub fn solve_stein_equation(g: Arc<dyn TestFunction>, grid: &[f64]) -> Result<SteinSolution> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid("grid contains non-finite points"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("grid must be sorted"));
    }
    for &x in grid {
        let v = g.value(x);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                value: v,
                context: format!("test function at x = {x}"),
            });
        }
    }
    let mean = normal_expectation(g.as_ref())?;
    let route = if g.derivative(0.0).is_some() {
        DerivativeRoute::Quadrature
    } else {
        DerivativeRoute::Identity
    };
    let mut solution = SteinSolution {
        g,
        mean,
        route,
        grid: Vec::with_capacity(grid.len()),
    };
    let values = grid
        .iter()
        .map(|&x| {
            Ok(GridValue {
                x,
                f: solution.f(x)?,
                df: solution.df(x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    solution.grid = values;
    Ok(solution)
}

/// Evenly spaced grid of `points` values over `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Samples of a real random variable, tagged with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("sample set is empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("sample set contains non-finite value {v}")));
        }
        Ok(Self { values, seed: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Empirical `P(W <= t)`.
    pub fn empirical_cdf(&self, t: f64) -> f64 {
        self.values.iter().filter(|v| **v <= t).count() as f64 / self.len() as f64
    }
}

/// `sup_t |F_m(t) - Φ(t)|` for the empirical distribution of `samples`.
///
/// Exact: both one-sided gaps are checked at every jump of `F_m`.
pub fn kolmogorov_distance(samples: &SampleSet) -> f64 {
    sorted_kolmogorov_distance(&samples.sorted())
}

/// [`kolmogorov_distance`] on values that are already sorted.
pub fn sorted_kolmogorov_distance(sorted: &[f64]) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal_cdf(x);
            let above = (i + 1) as f64 / m - phi;
            let below = phi - i as f64 / m;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov distance of an unsorted slice.
pub fn kolmogorov_distance_of(values: &[f64]) -> Result<f64> {
    let set = SampleSet::new(values.to_vec())?;
    Ok(kolmogorov_distance(&set))
}

/// Cubic Hermite table of `f` and `f'` for bulk evaluation.
#[derive(Debug, Clone)]
struct HermiteTable {
    lo: f64,
    step: f64,
    f: Vec<f64>,
    df: Vec<f64>,
    ddf: Vec<f64>,
}

impl HermiteTable {
    fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let pos = (x - self.lo) / self.step;
        if !(pos >= 0.0) || pos > (self.f.len() - 1) as f64 {
            return None;
        }
        let k = (pos.floor() as usize).min(self.f.len() - 2);
        let t = pos - k as f64;
        let h = self.step;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * h * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * h * d1
        };
        Some((
            hermite(self.f[k], self.f[k + 1], self.df[k], self.df[k + 1]),
            hermite(self.df[k], self.df[k + 1], self.ddf[k], self.ddf[k + 1]),
        ))
    }
}

const TABLE_HALF_WIDTH: f64 = 10.0;
const TABLE_STEP: f64 = 0.005;

/// A Stein solution scaled into the smooth class `|f|, |f'|, |f''| <= 1`.
///
/// Evaluation inside `[-10, 10]` uses a cubic Hermite table built from the
/// quadrature solution; points outside fall back to direct quadrature.
#[derive(Debug, Clone)]
pub struct DictionaryElement {
    scale: f64,
    solution: SteinSolution,
    table: HermiteTable,
}

impl DictionaryElement {
    pub fn new(solution: SteinSolution, scale: f64) -> Result<Self> {
        if !scale.is_finite() {
            return Err(invalid("dictionary scale must be finite"));
        }
        let nodes = uniform_grid(
            -TABLE_HALF_WIDTH,
            TABLE_HALF_WIDTH,
            (2.0 * TABLE_HALF_WIDTH / TABLE_STEP).round() as usize + 1,
        );
        let mut f = Vec::with_capacity(nodes.len());
        let mut df = Vec::with_capacity(nodes.len());
        let mut ddf = Vec::with_capacity(nodes.len());
        for &x in &nodes {
            let fx = solution.f(x)?;
            let dfx = solution.df(x)?;
            // Differentiating the equation: f'' = f + x f' + g'.
            let gp = solution.test_function().derivative(x).unwrap_or(0.0);
            f.push(fx);
            df.push(dfx);
            ddf.push(fx + x * dfx + gp);
        }
        let table = HermiteTable {
            lo: -TABLE_HALF_WIDTH,
            step: nodes[1] - nodes[0],
            f,
            df,
            ddf,
        };
        Ok(Self {
            scale,
            solution,
            table,
        })
    }

    /// `(ε/2) f` for the upper smoothed indicator at `threshold`.
    pub fn scaled_indicator(threshold: f64, epsilon: f64) -> Result<Self> {
        let g = SmoothedIndicator::upper(threshold, epsilon)?;
        let solution = solve_stein_equation(Arc::new(g), &[])?;
        Self::new(solution, epsilon / 2.0)
    }

    /// The element `f ≡ 0`.
    pub fn zero() -> Result<Self> {
        let solution = solve_stein_equation(Arc::new(FnTest::new(|_| 0.0)), &[])?;
        Self::new(solution, 1.0)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn solution(&self) -> &SteinSolution {
        &self.solution
    }

    /// Scaled `(f(x), f'(x))`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let (f, df) = match self.table.eval(x) {
            Some(v) => v,
            None => (self.solution.f(x)?, self.solution.df(x)?),
        };
        Ok((self.scale * f, self.scale * df))
    }

    /// `f'(w) - w f(w)` for the scaled function.
    pub fn stein_term(&self, w: f64) -> Result<f64> {
        let (f, df) = self.eval(w)?;
        Ok(df - w * f)
    }
}

/// Thresholds `-4, -3.8, ..., 4` with width 0.2.
pub const DEFAULT_DICTIONARY_WIDTH: f64 = 0.2;

pub fn default_dictionary() -> Result<Vec<DictionaryElement>> {
    (0..41)
        .map(|k| DictionaryElement::scaled_indicator(-4.0 + 0.2 * k as f64, DEFAULT_DICTIONARY_WIDTH))
        .collect()
}

/// `2 (max_k |mean f_k'(W) - W f_k(W)|)^{1/2}` over a finite dictionary.
///
/// A finite dictionary only sees part of the smooth class, so this is a
/// lower approximation of the supremum and serves as a diagnostic, not as a
/// certified bound on the Kolmogorov distance.
pub fn stein_discrepancy(samples: &SampleSet, dictionary: &[DictionaryElement]) -> Result<f64> {
    if dictionary.is_empty() {
        return Err(invalid("stein discrepancy needs a non-empty dictionary"));
    }
    let m = samples.len() as f64;
    let mut worst: f64 = 0.0;
    for element in dictionary {
        let mut acc = 0.0;
        for &w in samples.values() {
            acc += element.stein_term(w)?;
        }
        worst = worst.max((acc / m).abs());
    }
    Ok(2.0 * worst.sqrt())
}
