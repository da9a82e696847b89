//! Solvers derived from the core stepping: the sweeping process, the
//! Skorohod decomposition by Picard iteration (Lebesgue- and
//! Stieltjes-driven), second-order coupled systems, and state-dependent
//! operator families through an outer fixed point.

use crate::catching_up::{self, BvrcTrajectory, SolveReport, SolverConfig, TimeForcing};
use crate::convex::{ConvexBody, Point};
use crate::error::{Error, Result};
use crate::measure::{MixedMeasure, VariationFunction};
use crate::monotone::{MonotoneFamily, StateDependentFamily};
use crate::path::SampledPath;
use crate::perturbation::{solve_lipschitz, LipschitzForcing};
use nalgebra::DMatrix;
use std::sync::Arc;

pub type BodyRule = Arc<dyn Fn(f64) -> ConvexBody + Send + Sync>;
pub type CoupledRule = Arc<dyn Fn(f64, &Point, &Point) -> Point + Send + Sync>;
pub type DriftRule = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;
pub type OperatorDrift = Arc<dyn Fn(f64, &Point) -> DMatrix<f64> + Send + Sync>;

const FEASIBILITY_TOL: f64 = 1e-9;

/// Sweeping process `-du/dnu in N_{C(t)}(u) - f dlambda/dnu`: the normal
/// cone family of the moving set, plus a feasibility sweep over the nodes.
pub fn solve_sweeping(
    moving_set: BodyRule,
    modulus: &VariationFunction,
    forcing: Option<&LipschitzForcing>,
    u0: &Point,
    config: &SolverConfig,
) -> Result<SolveReport> {
    if moving_set(0.0).distance(u0)? > FEASIBILITY_TOL {
        return Err(Error::Domain("initial state is not in C(0)".into()));
    }
    let measure = MixedMeasure::new(modulus.clone());
    let family = MonotoneFamily::normal_cone(moving_set.clone());
    let report = match forcing {
        Some(f) => solve_lipschitz(&family, &measure, f, u0, config)?,
        None => catching_up::solve(&family, &measure, None, u0, config)?,
    };
    for (t, u) in report
        .trajectory
        .nodes()
        .iter()
        .zip(report.trajectory.right_values())
    {
        let d = moving_set(*t).distance(u)?;
        if d > FEASIBILITY_TOL {
            return Err(Error::Consistency(format!(
                "node at t={t} leaves the moving set by {d}"
            )));
        }
    }
    Ok(report)
}

/// Result of a Skorohod-type decomposition `X = h + Y` with `Y` driven by
/// the monotone inclusion.
#[derive(Debug, Clone)]
pub struct SkorohodResult {
    pub x: BvrcTrajectory,
    pub y: BvrcTrajectory,
    pub iterations: usize,
    /// Recomputed decomposition gap `sup_t || X - int b - Y ||` using an
    /// independent quadrature of the drift along `X`.
    pub residual: f64,
    pub distance_history: Vec<f64>,
}

/// Cumulative integral of `s -> g(s)` over the grid: trapezoid inside
/// ordinary cells, right-value rectangle across atom cells.
fn cumulative_integral(
    times: &[f64],
    measure: &MixedMeasure,
    g: &dyn Fn(f64) -> Point,
) -> SampledPath {
    let dim = g(times[0]).len();
    let mut acc = Point::zeros(dim);
    let mut values = vec![acc.clone()];
    let mut right = g(times[0]);
    for w in times.windows(2) {
        let eta = w[1] - w[0];
        let next = g(w[1]);
        acc += if measure.atom_mass(w[1]) > 0.0 {
            &next * eta
        } else {
            (&right + &next) * (0.5 * eta)
        };
        right = next;
        values.push(acc.clone());
    }
    SampledPath::new(times.to_vec(), values).expect("grid times are increasing")
}

/// Cumulative two-point Gauss integral of `g` on the same grid; used to
/// recheck decompositions with a rule independent of the builder above.
fn cumulative_gauss(times: &[f64], g: &dyn Fn(f64) -> Point) -> Vec<Point> {
    let dim = g(times[0]).len();
    let mut acc = Point::zeros(dim);
    let mut values = vec![acc.clone()];
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    for w in times.windows(2) {
        let h = 0.5 * (w[1] - w[0]);
        let c = 0.5 * (w[0] + w[1]);
        acc += (g(c - h * inv_sqrt3) + g(c + h * inv_sqrt3)) * h;
        values.push(acc.clone());
    }
    values
}

fn initial_grid(measure: &MixedMeasure) -> Vec<f64> {
    let horizon = measure.horizon();
    let n = 512usize;
    let mut times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    for &(loc, _) in measure.variation().atoms() {
        if times
            .binary_search_by(|t| t.partial_cmp(&loc).unwrap())
            .is_err()
        {
            times.push(loc);
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    times
}

type PathEval<'a> = &'a dyn Fn(f64) -> Point;

/// Picard iteration for the decomposition `X = int_0^t b(s, X(s)) ds + Y`
/// with `-dY/dnu in A(t) Y + h dlambda/dnu` for `h(t) = int_0^t b(s, X(s)) ds`.
pub fn skorohod_solve(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    drift: DriftRule,
    y0: &Point,
    config: &SolverConfig,
    max_iters: usize,
) -> Result<SkorohodResult> {
    let h_for = |x_eval: PathEval<'_>, times: &[f64]| {
        cumulative_integral(times, measure, &|s| drift(s, &x_eval(s)))
    };
    let assemble = |h: &SampledPath, y: &BvrcTrajectory| -> Result<(BvrcTrajectory, f64)> {
        let x = shift_trajectory(y, h, measure)?;
        // Independent recheck of the decomposition on the final grid.
        let nodes = y.nodes();
        let ints = cumulative_gauss(nodes, &|s| drift(s, &x_eval_parts(h, y, s)));
        let mut residual: f64 = 0.0;
        for ((t, int_b), yv) in nodes.iter().zip(&ints).zip(y.right_values()) {
            let xv = x_eval_parts(h, y, *t);
            residual = residual.max((&xv - int_b - yv).norm());
        }
        Ok((x, residual))
    };

    let mut prev: Option<(SampledPath, BvrcTrajectory)> = None;
    let mut history = Vec::new();
    for iter in 1..=max_iters {
        let h: SampledPath = match &prev {
            None => {
                let grid = initial_grid(measure);
                let y0c = y0.clone();
                h_for(&move |_| y0c.clone(), &grid)
            }
            Some((h_prev, y_prev)) => h_for(&|s| x_eval_parts(h_prev, y_prev, s), y_prev.nodes()),
        };
        // The inner inclusion carries +h as its forcing, i.e. drift -h.
        let h_inner = h.clone();
        let inner: TimeForcing = Arc::new(move |t| -h_inner.evaluate(t));
        let report = catching_up::solve(family, measure, Some(&inner), y0, config)?;
        let y = report.trajectory;
        let d = {
            let mut sup: f64 = 0.0;
            for t in y.nodes() {
                let x_new = h.evaluate(*t) + y.evaluate(*t)?;
                let x_old = match &prev {
                    None => y0.clone(),
                    Some((hp, yp)) => x_eval_parts(hp, yp, *t),
                };
                sup = sup.max((x_new - x_old).norm());
            }
            sup
        };
        history.push(d);
        if d <= config.tol {
            let (x, residual) = assemble(&h, &y)?;
            return Ok(SkorohodResult {
                x,
                y,
                iterations: iter,
                residual,
                distance_history: history,
            });
        }
        prev = Some((h, y));
    }
    Err(Error::NonConvergence {
        message: format!("Picard cap {max_iters} reached"),
        history,
    })
}

fn x_eval_parts(h: &SampledPath, y: &BvrcTrajectory, t: f64) -> Point {
    h.evaluate(t) + y.evaluate(t).expect("t inside the horizon")
}

/// Builds `X = h + Y` as a trajectory on Y's partition; `h` is continuous,
/// so left limits shift by the same amount and densities pick up the
/// drift's Lebesgue part.
fn shift_trajectory(
    y: &BvrcTrajectory,
    h: &SampledPath,
    measure: &MixedMeasure,
) -> Result<BvrcTrajectory> {
    let nodes = y.nodes();
    let values: Vec<Point> = nodes
        .iter()
        .zip(y.right_values())
        .map(|(t, v)| h.evaluate(*t) + v)
        .collect();
    let mut left_limits = vec![None; nodes.len()];
    let mut densities = Vec::with_capacity(nodes.len() - 1);
    let mut drift_sup: f64 = 0.0;
    for (i, w) in nodes.windows(2).enumerate() {
        let mid = 0.5 * (w[0] + w[1]);
        let slope = (h.evaluate(w[1]) - h.evaluate(w[0])) / (w[1] - w[0]);
        drift_sup = drift_sup.max(slope.norm());
        let lambda_density = measure.lambda_density(mid)?;
        densities.push(y.density(mid)? + slope * lambda_density);
        if measure.atom_mass(w[1]) > 0.0 {
            left_limits[i + 1] = Some(h.evaluate(w[1]) + y.left_limit(w[1])?);
        }
    }
    BvrcTrajectory::from_parts(
        y.partition().clone(),
        values,
        left_limits,
        densities,
        y.velocity_bound() + drift_sup,
    )
}

/// A continuous bounded-variation driver given by knots, interpolated
/// affinely.
#[derive(Debug, Clone)]
pub struct BvDriver {
    knots: Vec<(f64, Point)>,
}

impl BvDriver {
    pub fn new(knots: Vec<(f64, Point)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain("driver needs at least two knots".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain(
                "driver knot times must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots })
    }

    /// The scalar driver `z(t) = t` on `[0, horizon]`.
    pub fn time(horizon: f64) -> Self {
        Self::new(vec![
            (0.0, Point::from_vec(vec![0.0])),
            (horizon, Point::from_vec(vec![horizon])),
        ])
        .expect("valid time driver")
    }

    pub fn knots(&self) -> &[(f64, Point)] {
        &self.knots
    }

    pub fn dim(&self) -> usize {
        self.knots[0].1.len()
    }

    pub fn value(&self, t: f64) -> Point {
        let n = self.knots.len();
        if t <= self.knots[0].0 {
            return self.knots[0].1.clone();
        }
        if t >= self.knots[n - 1].0 {
            return self.knots[n - 1].1.clone();
        }
        let i = self.knots.partition_point(|k| k.0 < t);
        let (t0, ref v0) = self.knots[i - 1];
        let (t1, ref v1) = self.knots[i];
        let w = (t - t0) / (t1 - t0);
        v0 * (1.0 - w) + v1 * w
    }

    /// Total variation over `[a, b]`; equals the sum of knot increments
    /// when `[a, b]` covers the whole driver.
    pub fn one_variation(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for w in self.knots.windows(2) {
            let (t0, t1) = (w[0].0, w[1].0);
            let lo = t0.max(a);
            let hi = t1.min(b);
            if hi > lo {
                total += (&w[1].1 - &w[0].1).norm() * (hi - lo) / (t1 - t0);
            }
        }
        total
    }
}

const RS_TOL: f64 = 1e-10;

/// Riemann-Stieltjes integral `int_a^b phi(s) dz(s)` of a matrix-valued
/// integrand against the driver, by midpoint-tagged sums with per-segment
/// doubling until two successive refinements agree to `1e-10`.
pub fn rs_increment(
    integrand: &dyn Fn(f64) -> DMatrix<f64>,
    driver: &BvDriver,
    a: f64,
    b: f64,
) -> Result<Point> {
    let mut total = Point::zeros(integrand(a).nrows());
    for w in driver.knots.windows(2) {
        let lo = w[0].0.max(a);
        let hi = w[1].0.min(b);
        if hi <= lo {
            continue;
        }
        let mut m = 1usize;
        let mut prev = rs_sum(integrand, driver, lo, hi, m);
        loop {
            m *= 2;
            let next = rs_sum(integrand, driver, lo, hi, m);
            let gap = (&next - &prev).norm();
            if gap <= RS_TOL * (1.0 + next.norm()) {
                total += next;
                break;
            }
            if m >= 1 << 17 {
                return Err(Error::Quadrature(format!(
                    "Riemann-Stieltjes refinement stalled on [{lo}, {hi}]"
                )));
            }
            prev = next;
        }
    }
    Ok(total)
}

fn rs_sum(
    integrand: &dyn Fn(f64) -> DMatrix<f64>,
    driver: &BvDriver,
    lo: f64,
    hi: f64,
    m: usize,
) -> Point {
    let mut sum = Point::zeros(integrand(lo).nrows());
    let h = (hi - lo) / m as f64;
    for j in 0..m {
        let s0 = lo + j as f64 * h;
        let s1 = lo + (j + 1) as f64 * h;
        let mid = 0.5 * (s0 + s1);
        sum += integrand(mid) * (driver.value(s1) - driver.value(s0));
    }
    sum
}

/// `int_0^t phi dz`.
pub fn rs_integral(
    integrand: &dyn Fn(f64) -> DMatrix<f64>,
    driver: &BvDriver,
    t: f64,
) -> Result<Point> {
    if !(0.0..=driver.knots.last().unwrap().0).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside the driver's span")));
    }
    rs_increment(integrand, driver, 0.0, t)
}

/// Stieltjes-driven Skorohod decomposition: the drift integral is the
/// Riemann-Stieltjes integral of the operator-valued `b` along the driver.
pub fn skorohod_stieltjes_solve(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    b: OperatorDrift,
    driver: &BvDriver,
    start: &Point,
    config: &SolverConfig,
    max_iters: usize,
) -> Result<SkorohodResult> {
    let cumulative_rs = |x_eval: PathEval<'_>, times: &[f64]| -> Result<SampledPath> {
        let integrand = |s: f64| b(s, &x_eval(s));
        let mut acc = Point::zeros(start.len());
        let mut values = vec![acc.clone()];
        for w in times.windows(2) {
            acc += rs_increment(&integrand, driver, w[0], w[1])?;
            values.push(acc.clone());
        }
        SampledPath::new(times.to_vec(), values)
    };

    let mut prev: Option<(SampledPath, BvrcTrajectory)> = None;
    let mut history = Vec::new();
    for iter in 1..=max_iters {
        let h = match &prev {
            None => {
                let grid = initial_grid(measure);
                let s0 = start.clone();
                cumulative_rs(&move |_| s0.clone(), &grid)?
            }
            Some((hp, yp)) => cumulative_rs(&|s| x_eval_parts(hp, yp, s), yp.nodes())?,
        };
        let h_inner = h.clone();
        let inner: TimeForcing = Arc::new(move |t| -h_inner.evaluate(t));
        let report = catching_up::solve(family, measure, Some(&inner), start, config)?;
        let y = report.trajectory;
        let mut d: f64 = 0.0;
        for t in y.nodes() {
            let x_new = h.evaluate(*t) + y.evaluate(*t)?;
            let x_old = match &prev {
                None => start.clone(),
                Some((hp, yp)) => x_eval_parts(hp, yp, *t),
            };
            d = d.max((x_new - x_old).norm());
        }
        history.push(d);
        if d <= config.tol {
            let x = shift_trajectory(&y, &h, measure)?;
            // Recheck against a fresh Riemann-Stieltjes pass.
            let fresh = cumulative_rs(&|s| x_eval_parts(&h, &y, s), y.nodes())?;
            let mut residual: f64 = 0.0;
            for (t, yv) in y.nodes().iter().zip(y.right_values()) {
                let xv = x_eval_parts(&h, &y, *t);
                residual = residual.max((&xv - fresh.evaluate(*t) - yv).norm());
            }
            return Ok(SkorohodResult {
                x,
                y,
                iterations: iter,
                residual,
                distance_history: history,
            });
        }
        prev = Some((h, y));
    }
    Err(Error::NonConvergence {
        message: format!("Picard cap {max_iters} reached"),
        history,
    })
}

/// Drift `f(t, x, u)` coupling a trajectory `x` to the inclusion in `u`,
/// bounded by `bound` and Lipschitz in `u` with the same constant.
#[derive(Clone)]
pub struct CoupledForcing {
    pub rule: CoupledRule,
    pub bound: f64,
}

impl CoupledForcing {
    pub fn new(rule: CoupledRule, bound: f64) -> Self {
        Self { rule, bound }
    }
}

/// Second-order pair: the integrated trajectory and the inclusion state.
#[derive(Debug, Clone)]
pub struct CoupledResult {
    /// `x(t) = x0 + int_0^t u(s) ds` on the final grid.
    pub x: SampledPath,
    pub u: BvrcTrajectory,
    pub iterations: usize,
    /// Final fixed-point gap `sup_t || x_{k+1} - x_k ||`.
    pub residual: f64,
    pub distance_history: Vec<f64>,
}

/// Second-order system: outer Picard on the integrated path `h`, inner
/// Lipschitz solve with the drift frozen along `h`.
pub fn solve_second_order(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    forcing: &CoupledForcing,
    x0: &Point,
    u0: &Point,
    config: &SolverConfig,
    max_iters: usize,
) -> Result<CoupledResult> {
    let span = vec![0.0, measure.horizon()];
    let mut h = SampledPath::constant(span, x0.clone())?;
    let mut history = Vec::new();
    for iter in 1..=max_iters {
        let frozen = h.clone();
        let rule = forcing.rule.clone();
        let inner = LipschitzForcing::new(
            Arc::new(move |t, u: &Point| rule(t, &frozen.evaluate(t), u)),
            forcing.bound,
        )?;
        let report = solve_lipschitz(family, measure, &inner, u0, config)?;
        let integral = report.trajectory.lebesgue_integral();
        let values: Vec<Point> = integral.values().iter().map(|v| x0 + v).collect();
        let h_next = SampledPath::new(integral.times().to_vec(), values)?;
        let d = h_next.sup_distance(&h, h_next.times());
        history.push(d);
        h = h_next;
        if d <= config.tol {
            return Ok(CoupledResult {
                x: h,
                u: report.trajectory,
                iterations: iter,
                residual: d,
                distance_history: history,
            });
        }
    }
    Err(Error::NonConvergence {
        message: format!("outer fixed point cap {max_iters} reached"),
        history,
    })
}

/// Coupled solve with a state-dependent operator family: the driving
/// measure is bumped to `mu = lambda + d(r + gamma t)`, and each outer
/// iteration freezes the family along the current integrated path.
#[allow(clippy::too_many_arguments)]
pub fn solve_state_dependent(
    state_family: &StateDependentFamily,
    modulus: &VariationFunction,
    gamma: f64,
    forcing: &CoupledForcing,
    x0: &Point,
    u0: &Point,
    config: &SolverConfig,
    max_iters: usize,
) -> Result<CoupledResult> {
    if gamma < 0.0 {
        return Err(Error::Domain("gamma must be nonnegative".into()));
    }
    let measure = MixedMeasure::new(modulus.add_linear(gamma)?);
    let span = vec![0.0, measure.horizon()];
    let mut h = SampledPath::constant(span, x0.clone())?;
    let mut history = Vec::new();
    for iter in 1..=max_iters {
        let frozen = Arc::new(h.clone());
        let family = state_family.frozen_along({
            let frozen = frozen.clone();
            Arc::new(move |t| frozen.evaluate(t))
        });
        let rule = forcing.rule.clone();
        let inner = LipschitzForcing::new(
            Arc::new(move |t, u: &Point| rule(t, &frozen.evaluate(t), u)),
            forcing.bound,
        )?;
        let report = solve_lipschitz(&family, &measure, &inner, u0, config)?;
        let integral = report.trajectory.lebesgue_integral();
        let values: Vec<Point> = integral.values().iter().map(|v| x0 + v).collect();
        let h_next = SampledPath::new(integral.times().to_vec(), values)?;
        let d = h_next.sup_distance(&h, h_next.times());
        history.push(d);
        h = h_next;
        if d <= config.tol {
            return Ok(CoupledResult {
                x: h,
                u: report.trajectory,
                iterations: iter,
                residual: d,
                distance_history: history,
            });
        }
    }
    Err(Error::NonConvergence {
        message: format!("outer fixed point cap {max_iters} reached"),
        history,
    })
}
