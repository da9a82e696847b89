//! Gronwall-type bounds used as oracles by the test suites.
//!
//! Three variants: a discrete sequence bound, a measure-driven bound with
//! an atom condition, and a square-root bound for quadratic inequalities.

use crate::error::{Error, Result};
use crate::measure::MixedMeasure;
use crate::quad;

/// Bound for sequences with
/// `a_{i+1} <= alpha_i + beta_i (a_0 + ... + a_{i-1}) + (1 + gamma_i) a_i`:
/// returns `(a_0 + sum_{k<j} alpha_k) * exp(sum_{k<j} (k beta_k + gamma_k))`.
pub fn discrete_bound(
    a0: f64,
    alphas: &[f64],
    betas: &[f64],
    gammas: &[f64],
    j: usize,
) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("index j must be at least 1".into()));
    }
    if j > alphas.len() || j > betas.len() || j > gammas.len() {
        return Err(Error::Domain(
            "sequences shorter than the requested index".into(),
        ));
    }
    let all = alphas[..j].iter().chain(&betas[..j]).chain(&gammas[..j]);
    if a0 < 0.0 || all.clone().any(|&v| v < 0.0) {
        return Err(Error::Domain("all inputs must be nonnegative".into()));
    }
    let head: f64 = a0 + alphas[..j].iter().sum::<f64>();
    let exponent: f64 = (0..j).map(|k| k as f64 * betas[k] + gammas[k]).sum();
    Ok(head * exponent.exp())
}

/// Bound for `phi(t) <= alpha + int_{]0,t]} g phi dmu` under the atom
/// condition `mu({s}) g(s) <= beta < 1`: returns
/// `alpha * exp(int_{]0,t]} g dmu / (1 - beta))`.
pub fn measure_bound(
    alpha: f64,
    g: &dyn Fn(f64) -> f64,
    measure: &MixedMeasure,
    beta: f64,
    t: f64,
) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::Domain("alpha must be nonnegative".into()));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Hypothesis(format!(
            "beta must lie in [0, 1), got {beta}"
        )));
    }
    for &(loc, jump) in measure.variation().atoms() {
        if loc <= t {
            let prod = jump * g(loc);
            if !(0.0..=beta + 1e-12).contains(&prod) {
                return Err(Error::Hypothesis(format!(
                    "atom condition mu({{{loc}}}) g = {prod} falls outside [0, {beta}]"
                )));
            }
        }
    }
    let integral = integrate_against(g, measure, t)?;
    Ok(alpha * (integral / (1.0 - beta)).exp())
}

/// `int_{]0,t]} g dmu` for our mixed measure: Lebesgue part plus the
/// slope-weighted continuous variation plus the atoms. Integrates segment
/// by segment so the slope's knot kinks never cross a panel.
fn integrate_against(g: &dyn Fn(f64) -> f64, measure: &MixedMeasure, t: f64) -> Result<f64> {
    let vf = measure.variation();
    let weighted = |s: f64| g(s) * (1.0 + vf.continuous_slope(s));
    let mut breaks = vec![0.0];
    for &(kt, _) in vf.knots() {
        if kt > 0.0 && kt < t {
            breaks.push(kt);
        }
    }
    breaks.push(t);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += quad::adaptive(weighted, w[0], w[1], 1e-11)?;
    }
    for &(loc, jump) in vf.atoms() {
        if loc <= t {
            total += g(loc) * jump;
        }
    }
    Ok(total)
}

/// Bound for right-continuous BV paths with
/// `x(t)^2 / 2 <= a^2 / 2 + int_{]0,t]} m x ds`: returns
/// `a + int_{]0,t]} m ds`.
pub fn sqrt_bound(a: f64, m: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::Domain("a must be nonnegative".into()));
    }
    Ok(a + quad::adaptive(m, 0.0, t, 1e-12)?)
}
