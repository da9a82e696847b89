//! State-dependent drifts: single-valued Lipschitz forcing with a unique
//! solution, set-valued forcing realized through a selection rule, and the
//! mixed single-plus-set form.
//!
//! The state enters explicitly (`f(t_i, u_i)` over the cell) while the
//! operator stays implicit, so each step remains a single resolvent
//! evaluation.

use crate::catching_up::{refine_until, run_cells, CellDrift, SolveReport, SolverConfig};
use crate::convex::{ConvexBody, Point};
use crate::error::{Error, Result};
use crate::measure::MixedMeasure;
use crate::monotone::MonotoneFamily;
use std::sync::Arc;

pub type StateDrift = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;
pub type SetRule = Arc<dyn Fn(f64, &Point) -> ConvexBody + Send + Sync>;
pub type SelectionRule = Arc<dyn Fn(f64, &Point, &ConvexBody) -> Point + Send + Sync>;

/// Single-valued drift `f(t, x)` with `||f(t, x)|| <= M (1 + ||x||)` and
/// Lipschitz modulus `M` in the state.
#[derive(Clone)]
pub struct LipschitzForcing {
    pub rule: StateDrift,
    pub bound: f64,
}

impl LipschitzForcing {
    pub fn new(rule: StateDrift, bound: f64) -> Result<Self> {
        if bound < 0.0 {
            return Err(Error::Domain("forcing bound must be nonnegative".into()));
        }
        Ok(Self { rule, bound })
    }

    pub fn constant(value: Point) -> Self {
        let bound = value.norm();
        Self {
            rule: Arc::new(move |_, _| value.clone()),
            bound,
        }
    }

    /// `f(t, x) = a x + b`.
    pub fn linear(a: f64, b: Point) -> Self {
        let bound = a.abs().max(b.norm());
        Self {
            rule: Arc::new(move |_, x: &Point| x * a + &b),
            bound,
        }
    }

    pub fn eval(&self, t: f64, x: &Point) -> Point {
        (self.rule)(t, x)
    }

    /// Spot-checks the growth bound and the Lipschitz modulus on sample
    /// pairs.
    pub fn spot_check(&self, samples: &[(f64, Point, Point)]) -> Result<()> {
        for (t, x, y) in samples {
            let fx = self.eval(*t, x);
            if fx.norm() > self.bound * (1.0 + x.norm()) + 1e-9 {
                return Err(Error::Hypothesis(format!("growth bound fails at t={t}")));
            }
            let fy = self.eval(*t, y);
            if (fx - fy).norm() > self.bound * (x - y).norm() + 1e-9 {
                return Err(Error::Hypothesis(format!(
                    "Lipschitz modulus fails at t={t}"
                )));
            }
        }
        Ok(())
    }
}

/// How a set-valued forcing picks the value it feeds the stepper.
#[derive(Clone)]
pub enum Selection {
    /// The least-norm element, i.e. the projection of the origin.
    MinimalNorm,
    Custom(SelectionRule),
}

/// Set-valued forcing `F(t, x)` described by a convex body per `(t, x)`,
/// together with the selection rule that realizes one drift out of it.
#[derive(Clone)]
pub struct SetValuedForcing {
    pub set: SetRule,
    pub selection: Selection,
    /// Growth constant with `F(t, x)` inside the ball of radius
    /// `M (1 + ||x||)`.
    pub bound: f64,
}

impl SetValuedForcing {
    pub fn new(set: SetRule, selection: Selection, bound: f64) -> Self {
        Self {
            set,
            selection,
            bound,
        }
    }

    pub fn constant_box(lower: Point, upper: Point) -> Result<Self> {
        let bound = lower.norm().max(upper.norm());
        let body = ConvexBody::boxed(lower, upper)?;
        Ok(Self::new(
            Arc::new(move |_, _| body.clone()),
            Selection::MinimalNorm,
            bound,
        ))
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        let body = ConvexBody::ball(Point::zeros(dim), radius)?;
        Ok(Self::new(
            Arc::new(move |_, _| body.clone()),
            Selection::MinimalNorm,
            radius,
        ))
    }

    /// The realized single-valued drift.
    pub fn select(&self, t: f64, x: &Point) -> Result<Point> {
        let body = (self.set)(t, x);
        let value = match &self.selection {
            Selection::MinimalNorm => body.project(&Point::zeros(x.len()))?,
            Selection::Custom(rule) => rule(t, x, &body),
        };
        if !body.contains(&value, 1e-9)? {
            return Err(Error::Selection(
                "selected value lies outside the admissible set".into(),
            ));
        }
        Ok(value)
    }

    pub fn selection_label(&self) -> &'static str {
        match self.selection {
            Selection::MinimalNorm => "minimal-norm",
            Selection::Custom(_) => "custom",
        }
    }
}

/// Asserts the atom condition `2 M (dlambda/dnu)(t) nu({t}) <= beta < 1`.
/// With this crate's measure model the density vanishes at atoms, so the
/// product is identically zero; the returned note records that.
fn atom_condition_note(measure: &MixedMeasure, bound: f64) -> Result<String> {
    let mut worst: f64 = 0.0;
    for &(loc, _) in measure.variation().atoms() {
        let product = 2.0 * bound * measure.lambda_density(loc)? * measure.atom_mass(loc);
        worst = worst.max(product);
    }
    if worst >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "atom condition 2 M (dlambda/dnu) nu({{t}}) = {worst} is not below 1"
        )));
    }
    Ok(format!(
        "atom condition: max 2M (dlambda/dnu) nu({{t}}) = {worst} < 1 over {} atoms",
        measure.variation().atoms().len()
    ))
}

fn solve_with_drift(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    drift: &(dyn Fn(f64, &Point) -> Result<Point> + Sync),
    u0: &Point,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let (trajectory, epsilon_sequence, sup_distances) = refine_until(measure, config, |p| {
        run_cells(family, &CellDrift::State(drift), u0, p)
    })?;
    let velocity_bound = trajectory.velocity_bound();
    Ok(SolveReport {
        trajectory,
        epsilon_sequence,
        sup_distances,
        velocity_bound,
        notes: Vec::new(),
    })
}

/// Single-partition run with a state-explicit Lipschitz drift; the
/// refinement loop of [`solve_lipschitz`] calls this per level.
pub fn run_grid_lipschitz(
    family: &MonotoneFamily,
    forcing: &LipschitzForcing,
    u0: &Point,
    partition: &crate::measure::AdaptedPartition,
) -> Result<crate::catching_up::BvrcTrajectory> {
    let rule = forcing.rule.clone();
    let drift = move |t: f64, x: &Point| Ok(rule(t, x));
    run_cells(family, &CellDrift::State(&drift), u0, partition)
}

/// Unique-solution solve for a Lipschitz drift: the state is explicit per
/// cell, the operator implicit.
pub fn solve_lipschitz(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    forcing: &LipschitzForcing,
    u0: &Point,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let note = atom_condition_note(measure, forcing.bound)?;
    let rule = forcing.rule.clone();
    let mut report = solve_with_drift(
        family,
        measure,
        &move |t, x: &Point| Ok(rule(t, x)),
        u0,
        config,
    )?;
    report.notes.push(note);
    Ok(report)
}

/// Solves for the drift realized by the forcing's selection rule and
/// asserts membership of the realized values along the final trajectory.
pub fn solve_set_valued(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    forcing: &SetValuedForcing,
    u0: &Point,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let note = atom_condition_note(measure, forcing.bound)?;
    let sel = forcing.clone();
    let drift = move |t: f64, x: &Point| sel.select(t, x);
    let mut report = solve_with_drift(family, measure, &drift, u0, config)?;
    for (t, u) in report
        .trajectory
        .nodes()
        .iter()
        .zip(report.trajectory.right_values())
    {
        let value = forcing.select(*t, u)?;
        let body = (forcing.set)(*t, u);
        if !body.contains(&value, 1e-9)? {
            return Err(Error::Selection(format!(
                "realized forcing leaves F at t={t}"
            )));
        }
    }
    report.notes.push(note);
    report
        .notes
        .push(format!("selection rule: {}", forcing.selection_label()));
    Ok(report)
}

/// Mixed drift `f(t, x) + (selection of F)(t, x)`.
pub fn solve_mixed(
    family: &MonotoneFamily,
    measure: &MixedMeasure,
    single: &LipschitzForcing,
    set_valued: &SetValuedForcing,
    u0: &Point,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let note = atom_condition_note(measure, single.bound.max(set_valued.bound))?;
    let f = single.rule.clone();
    let sel = set_valued.clone();
    let drift = move |t: f64, x: &Point| Ok(f(t, x) + sel.select(t, x)?);
    let mut report = solve_with_drift(family, measure, &drift, u0, config)?;
    report.notes.push(note);
    Ok(report)
}
