//! Fractional-order machinery: Riemann-Liouville integrals of paths, the
//! Green kernel of the two-point boundary-value operator
//! `D^alpha + kappa D^{alpha-1}` on `[0, 1]`, the linear solver it induces,
//! and the coupled fractional/monotone fixed point.
//!
//! The weakly singular kernels are integrated by the substitution
//! `w = (t - s)^order`, which removes the singularity, followed by
//! composite 32-point Gauss panels graded toward both endpoints and
//! refined until two successive depths agree.

use crate::applications::CoupledForcing;
use crate::catching_up::BvrcTrajectory;
use crate::catching_up::SolverConfig;
use crate::convex::Point;
use crate::error::{Error, Result};
use crate::measure::MixedMeasure;
use crate::monotone::MonotoneFamily;
use crate::path::SampledPath;
use crate::perturbation::{solve_lipschitz, LipschitzForcing};
use crate::quad::{gamma, gauss32};
use std::sync::Arc;

/// Parameters of the boundary-value operator. `kappa` is the coefficient
/// of the `D^{alpha-1}` term; `beta_bc` and `gamma_bc` shape the boundary
/// conditions `I^beta u(0) = 0` and `u(1) = I^gamma u(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalParams {
    pub alpha: f64,
    pub beta_bc: f64,
    pub gamma_bc: f64,
    pub kappa: f64,
}

impl FractionalParams {
    pub fn new(alpha: f64, beta_bc: f64, gamma_bc: f64, kappa: f64) -> Result<Self> {
        if !(1.0 < alpha && alpha <= 2.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (1, 2], got {alpha}"
            )));
        }
        if !(0.0 <= beta_bc && beta_bc <= 2.0 - alpha) {
            return Err(Error::Domain(format!(
                "beta must lie in [0, 2 - alpha] = [0, {}], got {beta_bc}",
                2.0 - alpha
            )));
        }
        if !(gamma_bc > 0.0) {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {gamma_bc}"
            )));
        }
        if kappa < 0.0 {
            return Err(Error::Domain(format!(
                "kappa must be nonnegative, got {kappa}"
            )));
        }
        Ok(Self {
            alpha,
            beta_bc,
            gamma_bc,
            kappa,
        })
    }
}

const FRAC_TOL: f64 = 1e-10;
const MAX_LEVEL: usize = 13;

/// `int_a^t (t-s)^{order-1} phi(s) ds` for scalar `phi`, singularity
/// removed by `w = (t-s)^order`; zero when `t <= a`.
fn kernel_integral(phi: &dyn Fn(f64) -> f64, a: f64, order: f64, t: f64) -> Result<f64> {
    if t <= a {
        return Ok(0.0);
    }
    let width = (t - a).powf(order);
    let g = |w: f64| phi(t - w.powf(1.0 / order)) / order;
    let mut level = 3usize;
    let mut prev = graded_panels(&g, width, level);
    loop {
        level += 1;
        let next = graded_panels(&g, width, level);
        if (next - prev).abs() <= FRAC_TOL * (1.0 + next.abs()) {
            return Ok(next);
        }
        if level >= MAX_LEVEL {
            return Err(Error::Quadrature(format!(
                "fractional kernel quadrature stalled (order {order}, span [{a}, {t}])"
            )));
        }
        prev = next;
    }
}

/// Composite Gauss over `[0, width]` on `2^level` uniform panels merged
/// with panels geometrically graded toward both endpoints, where the
/// substituted integrand may have mildly singular derivatives.
fn graded_panels(g: &dyn Fn(f64) -> f64, width: f64, level: usize) -> f64 {
    let uniform = 1usize << level;
    let mut cuts: Vec<f64> = (1..uniform)
        .map(|k| width * k as f64 / uniform as f64)
        .collect();
    for k in (level + 1)..=(level + GRADE_DEPTH) {
        cuts.push(width * 0.5f64.powi(k as i32));
        cuts.push(width * (1.0 - 0.5f64.powi(k as i32)));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = gauss32(g, 0.0, cuts[0]);
    for w in cuts.windows(2) {
        total += gauss32(g, w[0], w[1]);
    }
    total += gauss32(g, *cuts.last().unwrap(), width);
    total
}

const GRADE_DEPTH: usize = 28;

/// Fractional Bochner integral
/// `(I_a^order phi)(t) = int_a^t ((t-s)^{order-1} / Gamma(order)) phi(s) ds`.
pub fn fractional_integral(
    phi: &dyn Fn(f64) -> Point,
    a: f64,
    order: f64,
    t: f64,
) -> Result<Point> {
    if !(order > 0.0) {
        return Err(Error::Domain(format!(
            "order must be positive, got {order}"
        )));
    }
    if t <= a {
        return Err(Error::Domain(format!("need t > a, got t={t}, a={a}")));
    }
    let dim = phi(a).len();
    let mut out = Point::zeros(dim);
    for k in 0..dim {
        out[k] = kernel_integral(&|s| phi(s)[k], a, order, t)? / gamma(order);
    }
    Ok(out)
}

/// Scalar convenience form of [`fractional_integral`].
pub fn fractional_integral_scalar(
    phi: &dyn Fn(f64) -> f64,
    a: f64,
    order: f64,
    t: f64,
) -> Result<f64> {
    if !(order > 0.0) {
        return Err(Error::Domain(format!(
            "order must be positive, got {order}"
        )));
    }
    if t <= a {
        return Err(Error::Domain(format!("need t > a, got t={t}, a={a}")));
    }
    Ok(kernel_integral(phi, a, order, t)? / gamma(order))
}

/// Exact fractional integral of an affinely interpolated path: the kernel
/// against each affine segment has a closed-form antiderivative.
pub fn fractional_integral_of_path(path: &SampledPath, order: f64, t: f64) -> Result<Point> {
    if !(order > 0.0) {
        return Err(Error::Domain(format!(
            "order must be positive, got {order}"
        )));
    }
    let dim = path.dim();
    let mut acc = Point::zeros(dim);
    let times = path.times();
    let values = path.values();
    for i in 0..times.len() - 1 {
        let (s0, s1) = (times[i], times[i + 1].min(t));
        if s1 <= s0 {
            break;
        }
        let a = &values[i];
        let b = (&values[i + 1] - a) / (times[i + 1] - times[i]);
        // int_{s0}^{s1} (t-s)^{g-1} (a + b (s - s0)) ds with v = t - s:
        // [(a + b (t - s0)) v^g / g - b v^{g+1} / (g+1)] from v1 to v0.
        let c = a + &b * (t - s0);
        let (v0, v1) = (t - s0, t - s1);
        let g = order;
        let term = |v: f64| &c * (v.powf(g) / g) - &b * (v.powf(g + 1.0) / (g + 1.0));
        acc += term(v0) - term(v1);
    }
    Ok(acc / gamma(order))
}

/// `E_p(x) = (I_{0+}^p e^{-kappa .})(x)`, the single profile every Green
/// kernel entry reduces to: by translation invariance of the convolution,
/// `(I_{s+}^p e^{-kappa .})(t) = e^{-kappa s} E_p(t - s)`.
fn exp_profile(kappa: f64, order: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(kernel_integral(&|s| (-kappa * s).exp(), 0.0, order, x)? / gamma(order))
}

/// `mu0 = (I^{alpha-1} e^{-kappa .})(1) - (I^{alpha-1+gamma} e^{-kappa .})(1)`;
/// errors out when it degenerates.
pub fn green_mu0(params: &FractionalParams) -> Result<f64> {
    let p = params.alpha - 1.0;
    let mu0 =
        exp_profile(params.kappa, p, 1.0)? - exp_profile(params.kappa, p + params.gamma_bc, 1.0)?;
    if mu0.abs() < 1e-12 {
        return Err(Error::DegenerateParameters(format!(
            "mu0 = {mu0} vanishes for alpha={}, gamma={}, kappa={}",
            params.alpha, params.gamma_bc, params.kappa
        )));
    }
    Ok(mu0)
}

/// Direct (cache-free) evaluation of the Green function.
pub fn green_function(params: &FractionalParams, t: f64, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "(t, s) = ({t}, {s}) outside the unit square"
        )));
    }
    let mu0 = green_mu0(params)?;
    let p = params.alpha - 1.0;
    let kappa = params.kappa;
    let phi =
        (exp_profile(kappa, p + params.gamma_bc, 1.0 - s)? - exp_profile(kappa, p, 1.0 - s)?) / mu0;
    let tail = if s <= t {
        exp_profile(kappa, p, t - s)?
    } else {
        0.0
    };
    Ok(phi * exp_profile(kappa, p, t)? + tail)
}

/// Number of grid points per axis of the kernel cache.
pub const GREEN_GRID: usize = 201;

/// The Green kernel with its uniform bound and a tensor-grid cache used by
/// the coupled solver (bilinear off-grid).
#[derive(Debug, Clone)]
pub struct GreenKernel {
    params: FractionalParams,
    mu0: f64,
    bound: f64,
    /// Row-major `G(t_i, s_j)`.
    values: Vec<f64>,
}

impl GreenKernel {
    pub fn new(params: FractionalParams) -> Result<Self> {
        let mu0 = green_mu0(&params)?;
        let p = params.alpha - 1.0;
        let n = GREEN_GRID;
        let mut profile = Vec::with_capacity(n);
        let mut shifted = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64 / (n - 1) as f64;
            profile.push(exp_profile(params.kappa, p, x)?);
            shifted.push(exp_profile(params.kappa, p + params.gamma_bc, x)?);
        }
        let phi: Vec<f64> = (0..n)
            .map(|j| (shifted[n - 1 - j] - profile[n - 1 - j]) / mu0)
            .collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut g = phi[j] * profile[i];
                if j <= i {
                    g += profile[i - j];
                }
                values[i * n + j] = g;
            }
        }
        let ga = gamma(params.alpha);
        let gg = gamma(params.gamma_bc + 1.0);
        let bound = (1.0 / ga) * ((1.0 + gg) / (mu0.abs() * ga * gg) + 1.0);
        Ok(Self {
            params,
            mu0,
            bound,
            values,
        })
    }

    pub fn params(&self) -> &FractionalParams {
        &self.params
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    /// The uniform bound `M_G` on `|G|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn grid_points(&self) -> Vec<f64> {
        (0..GREEN_GRID)
            .map(|i| i as f64 / (GREEN_GRID - 1) as f64)
            .collect()
    }

    pub fn value_at_grid(&self, i: usize, j: usize) -> f64 {
        self.values[i * GREEN_GRID + j]
    }

    /// Bilinear interpolation of the cached kernel.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!(
                "(t, s) = ({t}, {s}) outside the unit square"
            )));
        }
        let n = GREEN_GRID;
        let h = 1.0 / (n - 1) as f64;
        let (ri, rj) = (t / h, s / h);
        let i = (ri.floor() as usize).min(n - 2);
        let j = (rj.floor() as usize).min(n - 2);
        let (wt, ws) = (ri - i as f64, rj - j as f64);
        let v = |i: usize, j: usize| self.values[i * n + j];
        Ok(v(i, j) * (1.0 - wt) * (1.0 - ws)
            + v(i + 1, j) * wt * (1.0 - ws)
            + v(i, j + 1) * (1.0 - wt) * ws
            + v(i + 1, j + 1) * wt * ws)
    }

    /// Fresh quadrature evaluation, bypassing the cache.
    pub fn eval_direct(&self, t: f64, s: f64) -> Result<f64> {
        green_function(&self.params, t, s)
    }

    /// `int_0^1 G(t_i, s) u(s) ds` on the cache grid. The kernel kinks at
    /// `s = t_i`, so the quadrature splits there and integrates each smooth
    /// side by composite Simpson (with a 3/8 tail on odd interval counts).
    fn apply_row(&self, i: usize, samples: &[Point]) -> Point {
        let n = GREEN_GRID;
        let h = 1.0 / (n - 1) as f64;
        let dim = samples[0].len();
        let weighted: Vec<Point> = (0..n)
            .map(|j| &samples[j] * self.values[i * n + j])
            .collect();
        let mut acc = Point::zeros(dim);
        acc += simpson_slice(&weighted[..=i], h, dim);
        acc += simpson_slice(&weighted[i..], h, dim);
        acc
    }
}

/// Composite Simpson over uniformly spaced values, falling back to a 3/8
/// block (or a single trapezoid) when the interval count is odd.
fn simpson_slice(values: &[Point], h: f64, dim: usize) -> Point {
    let mut acc = Point::zeros(dim);
    let intervals = values.len().saturating_sub(1);
    if intervals == 0 {
        return acc;
    }
    let mut end = values.len();
    if intervals % 2 == 1 {
        if intervals >= 3 {
            let k = values.len() - 4;
            acc += (&values[k] + &values[k + 1] * 3.0 + &values[k + 2] * 3.0 + &values[k + 3])
                * (3.0 * h / 8.0);
            end = k + 1;
        } else {
            return (&values[0] + &values[1]) * (0.5 * h);
        }
    }
    for j in (0..end - 1).step_by(2) {
        acc += (&values[j] + &values[j + 1] * 4.0 + &values[j + 2]) * (h / 3.0);
    }
    acc
}

/// Solves the linear boundary-value problem with right-hand side `zeta`:
/// `u(t) = int_0^1 G(t, s) zeta(s) ds`, sampled on the cache grid.
pub fn solve_fractional_bvp(
    zeta: &dyn Fn(f64) -> Point,
    kernel: &GreenKernel,
) -> Result<SampledPath> {
    let grid = kernel.grid_points();
    let samples: Vec<Point> = grid.iter().map(|&s| zeta(s)).collect();
    let values: Vec<Point> = (0..GREEN_GRID)
        .map(|i| kernel.apply_row(i, &samples))
        .collect();
    SampledPath::new(grid, values)
}

/// Outcome of the coupled fractional/monotone fixed point.
#[derive(Debug, Clone)]
pub struct FractionalCoupled {
    /// The boundary-value profile `h(t) = int_0^1 G(t, s) u(s) ds`.
    pub h: SampledPath,
    pub u: BvrcTrajectory,
    pub iterations: usize,
    pub residual: f64,
    pub distance_history: Vec<f64>,
}

/// Picard iteration coupling the inclusion state `u` back through the
/// Green kernel: solve the inclusion with drift `f(t, h_k(t), u)`, then
/// set `h_{k+1}(t) = int_0^1 G(t, s) u(s) ds`.
pub fn solve_fractional_coupled(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    forcing: &CoupledForcing,
    u0: &Point,
    kernel: &GreenKernel,
    config: &SolverConfig,
    max_iters: usize,
) -> Result<FractionalCoupled> {
    if (measure.horizon() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(
            "the fractional coupling is posed on the unit interval".into(),
        ));
    }
    let grid = kernel.grid_points();
    let mut h = SampledPath::constant(vec![0.0, 1.0], Point::zeros(u0.len()))?;
    let mut history = Vec::new();
    for iter in 1..=max_iters {
        let frozen = h.clone();
        let rule = forcing.rule.clone();
        let inner = LipschitzForcing::new(
            Arc::new(move |t, u: &Point| rule(t, &frozen.evaluate(t), u)),
            forcing.bound,
        )?;
        let report = solve_lipschitz(family, measure, &inner, u0, config)?;
        let samples: Vec<Point> = grid
            .iter()
            .map(|&s| report.trajectory.evaluate(s))
            .collect::<Result<_>>()?;
        let values: Vec<Point> = (0..GREEN_GRID)
            .map(|i| kernel.apply_row(i, &samples))
            .collect();
        let h_next = SampledPath::new(grid.clone(), values)?;
        let d = h_next.sup_distance(&h, &grid);
        history.push(d);
        h = h_next;
        if d <= config.tol {
            return Ok(FractionalCoupled {
                h,
                u: report.trajectory,
                iterations: iter,
                residual: d,
                distance_history: history,
            });
        }
    }
    Err(Error::NonConvergence {
        message: format!("coupled fixed point cap {max_iters} reached"),
        history,
    })
}
