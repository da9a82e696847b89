//! Builds solver inputs from parsed scenarios, executes them, and writes
//! the CSV/summary artifacts.

use crate::scenario::{
    CouplingSpec, ForcingSpec, FractionalSpec, ProblemKind, Scenario, SetForcingSpec, SetSpec,
    ZetaSpec,
};
use catchup::applications::{
    skorohod_solve, skorohod_stieltjes_solve, solve_second_order, solve_state_dependent,
    solve_sweeping, BodyRule, BvDriver, CoupledForcing, CoupledResult, DriftRule, OperatorDrift,
    SkorohodResult,
};
use catchup::catching_up::{fmt17, run_grid, SolveReport, SolverConfig};
use catchup::error::{Error, Result};
use catchup::fractional::{
    solve_fractional_bvp, solve_fractional_coupled, FractionalCoupled, FractionalParams,
    GreenKernel, GREEN_GRID,
};
use catchup::measure::{MixedMeasure, VariationFunction};
use catchup::monotone::{MonotoneFamily, MonotoneOperator, StateDependentFamily};
use catchup::path::SampledPath;
use catchup::perturbation::{
    run_grid_lipschitz, solve_lipschitz, solve_mixed, solve_set_valued, LipschitzForcing,
    SetValuedForcing,
};
use catchup::{ConvexBody, Point};
use nalgebra::DMatrix;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

fn point(v: &[f64]) -> Point {
    Point::from_vec(v.to_vec())
}

fn build_variation(sc: &Scenario) -> Result<VariationFunction> {
    let knots = if sc.knots.is_empty() {
        vec![(0.0, 0.0), (sc.horizon, 0.0)]
    } else {
        sc.knots.clone()
    };
    VariationFunction::new(sc.horizon, knots, sc.atoms.clone())
}

fn body_rule(spec: &SetSpec) -> Result<BodyRule> {
    Ok(match spec.clone() {
        SetSpec::Box { lower, upper } => {
            let body = ConvexBody::boxed(point(&lower), point(&upper))?;
            Arc::new(move |_| body.clone())
        }
        SetSpec::Ball { center, radius } => {
            let body = ConvexBody::ball(point(&center), radius)?;
            Arc::new(move |_| body.clone())
        }
        SetSpec::MovingBox {
            lower,
            upper,
            velocity,
        } => {
            let (lo, hi, vel) = (point(&lower), point(&upper), point(&velocity));
            ConvexBody::boxed(lo.clone(), hi.clone())?;
            Arc::new(move |t: f64| {
                ConvexBody::boxed(&lo + &vel * t, &hi + &vel * t).expect("translated box")
            })
        }
        SetSpec::JumpBox {
            at,
            lower1,
            upper1,
            lower2,
            upper2,
        } => {
            let first = ConvexBody::boxed(point(&lower1), point(&upper1))?;
            let second = ConvexBody::boxed(point(&lower2), point(&upper2))?;
            Arc::new(move |t: f64| {
                if t < at {
                    first.clone()
                } else {
                    second.clone()
                }
            })
        }
        SetSpec::StateInterval { .. } | SetSpec::Psd { .. } => {
            return Err(Error::Domain(
                "this operator variant has no moving-set form".into(),
            ))
        }
    })
}

fn build_family(spec: &SetSpec) -> Result<MonotoneFamily> {
    if let SetSpec::Psd { dim, entries } = spec {
        let m = DMatrix::from_row_slice(*dim, *dim, entries);
        if (&m - m.transpose()).norm() > 1e-12 {
            return Err(Error::Domain(
                "psd operator matrix must be symmetric".into(),
            ));
        }
        let growth = m.norm();
        return Ok(MonotoneFamily::psd_linear(Arc::new(move |_| m.clone())).with_growth(growth));
    }
    Ok(MonotoneFamily::normal_cone(body_rule(spec)?))
}

fn build_forcing(sc: &Scenario) -> Result<LipschitzForcing> {
    let spec = sc
        .forcing
        .as_ref()
        .ok_or_else(|| Error::Domain("scenario has no single-valued forcing".into()))?;
    Ok(match spec {
        ForcingSpec::Constant(v) => {
            let f = LipschitzForcing::constant(point(v));
            match sc.bound {
                Some(b) => LipschitzForcing::new(f.rule, b)?,
                None => f,
            }
        }
        ForcingSpec::Linear { a, b } => {
            let f = LipschitzForcing::linear(*a, point(b));
            match sc.bound {
                Some(bd) => LipschitzForcing::new(f.rule, bd)?,
                None => f,
            }
        }
    })
}

fn build_set_forcing(sc: &Scenario, dim: usize) -> Result<SetValuedForcing> {
    let spec = sc
        .set_forcing
        .as_ref()
        .ok_or_else(|| Error::Domain("scenario has no set-valued forcing".into()))?;
    match spec {
        SetForcingSpec::BallMinNorm { radius } => SetValuedForcing::centered_ball(dim, *radius),
        SetForcingSpec::BoxMinNorm { lower, upper } => {
            SetValuedForcing::constant_box(point(lower), point(upper))
        }
    }
}

fn build_coupling(sc: &Scenario) -> Result<CoupledForcing> {
    let spec = sc
        .coupling
        .as_ref()
        .ok_or_else(|| Error::Domain("scenario has no coupling".into()))?;
    Ok(match spec {
        CouplingSpec::Constant(v) => {
            let value = point(v);
            let bound = sc.bound.unwrap_or_else(|| value.norm());
            CoupledForcing::new(
                Arc::new(move |_, _: &Point, _: &Point| value.clone()),
                bound,
            )
        }
        CouplingSpec::LinearX(a) => {
            let a = *a;
            let bound = sc.bound.unwrap_or_else(|| a.abs().max(1.0) * 10.0);
            CoupledForcing::new(Arc::new(move |_, x: &Point, _: &Point| x * a), bound)
        }
        CouplingSpec::LinearU(a) => {
            let a = *a;
            let bound = sc.bound.unwrap_or_else(|| a.abs().max(1.0) * 10.0);
            CoupledForcing::new(Arc::new(move |_, _: &Point, u: &Point| u * a), bound)
        }
    })
}

fn build_fractional(spec: &FractionalSpec) -> Result<FractionalParams> {
    FractionalParams::new(spec.alpha, spec.beta, spec.gamma, spec.kappa)
}

fn config(sc: &Scenario) -> SolverConfig {
    SolverConfig {
        tol: sc.tol,
        eps0: sc.eps0,
        factor: sc.factor,
        max_levels: 20,
    }
}

/// What a scenario run produced, before artifacts hit the disk.
pub enum Execution {
    Report(SolveReport),
    Skorohod(SkorohodResult),
    Coupled(CoupledResult),
    Fractional(FractionalCoupled),
    BvpProfile(SampledPath, Box<GreenKernel>),
}

/// Runs the scenario's solver. Non-convergence is reported through the
/// error; everything needed for artifacts is in the `Execution`.
pub fn execute(sc: &Scenario) -> Result<Execution> {
    let cfg = config(sc);
    match sc.kind {
        ProblemKind::Sweeping => {
            let spec = sc.set.as_ref().unwrap();
            let modulus = build_variation(sc)?;
            let u0 = point(sc.u0.as_ref().unwrap());
            let forcing = match sc.forcing {
                Some(_) => Some(build_forcing(sc)?),
                None => None,
            };
            let report = solve_sweeping(body_rule(spec)?, &modulus, forcing.as_ref(), &u0, &cfg)?;
            Ok(Execution::Report(report))
        }
        ProblemKind::Lipschitz => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let u0 = point(sc.u0.as_ref().unwrap());
            let forcing = build_forcing(sc)?;
            Ok(Execution::Report(solve_lipschitz(
                &family, &measure, &forcing, &u0, &cfg,
            )?))
        }
        ProblemKind::SetValued => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let u0 = point(sc.u0.as_ref().unwrap());
            let forcing = build_set_forcing(sc, u0.len())?;
            Ok(Execution::Report(solve_set_valued(
                &family, &measure, &forcing, &u0, &cfg,
            )?))
        }
        ProblemKind::Mixed => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let u0 = point(sc.u0.as_ref().unwrap());
            let single = build_forcing(sc)?;
            let set_part = build_set_forcing(sc, u0.len())?;
            Ok(Execution::Report(solve_mixed(
                &family, &measure, &single, &set_part, &u0, &cfg,
            )?))
        }
        ProblemKind::Skorohod => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let y0 = point(sc.y0.as_ref().unwrap());
            let forcing = build_forcing(sc)?;
            let rule = forcing.rule.clone();
            let drift: DriftRule = Arc::new(move |t, x: &Point| rule(t, x));
            Ok(Execution::Skorohod(skorohod_solve(
                &family,
                &measure,
                drift,
                &y0,
                &cfg,
                sc.max_iters,
            )?))
        }
        ProblemKind::SkorohodStieltjes => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let y0 = point(sc.y0.as_ref().unwrap());
            let driver_knots: Vec<(f64, Point)> =
                sc.driver.iter().map(|(t, v)| (*t, point(v))).collect();
            if driver_knots.iter().any(|(_, v)| v.len() != 1) {
                return Err(Error::Domain(
                    "the scenario presets support scalar drivers only".into(),
                ));
            }
            let driver = BvDriver::new(driver_knots)?;
            let forcing = build_forcing(sc)?;
            let rule = forcing.rule.clone();
            let b: OperatorDrift = Arc::new(move |t, x: &Point| {
                let v = rule(t, x);
                DMatrix::from_column_slice(v.len(), 1, v.as_slice())
            });
            Ok(Execution::Skorohod(skorohod_stieltjes_solve(
                &family,
                &measure,
                b,
                &driver,
                &y0,
                &cfg,
                sc.max_iters,
            )?))
        }
        ProblemKind::SecondOrder => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let x0 = point(sc.x0.as_ref().unwrap());
            let u0 = point(sc.u0.as_ref().unwrap());
            let coupling = build_coupling(sc)?;
            Ok(Execution::Coupled(solve_second_order(
                &family,
                &measure,
                &coupling,
                &x0,
                &u0,
                &cfg,
                sc.max_iters,
            )?))
        }
        ProblemKind::StateDependent => {
            let halfwidth = match sc.set {
                Some(SetSpec::StateInterval { halfwidth }) => halfwidth,
                _ => unreachable!("validated at parse time"),
            };
            let x0 = point(sc.x0.as_ref().unwrap());
            let u0 = point(sc.u0.as_ref().unwrap());
            if x0.len() != 1 || u0.len() != 1 {
                return Err(Error::Domain(
                    "state-interval coupling is one-dimensional".into(),
                ));
            }
            let family = StateDependentFamily::new(
                Arc::new(move |_, x: &Point| {
                    MonotoneOperator::NormalCone(ConvexBody::interval(
                        x[0] - halfwidth,
                        x[0] + halfwidth,
                    ))
                }),
                1.0,
            );
            let modulus = build_variation(sc)?;
            let coupling = build_coupling(sc)?;
            Ok(Execution::Coupled(solve_state_dependent(
                &family,
                &modulus,
                sc.gamma_bump.unwrap(),
                &coupling,
                &x0,
                &u0,
                &cfg,
                sc.max_iters,
            )?))
        }
        ProblemKind::FractionalBvp => {
            let params = build_fractional(sc.fractional.as_ref().unwrap())?;
            let kernel = GreenKernel::new(params)?;
            let zeta = sc.zeta.as_ref().unwrap().clone();
            let profile = solve_fractional_bvp(
                &move |s| match zeta {
                    ZetaSpec::Constant(c) => point(&[c]),
                    ZetaSpec::Linear { a, b } => point(&[a + b * s]),
                },
                &kernel,
            )?;
            Ok(Execution::BvpProfile(profile, Box::new(kernel)))
        }
        ProblemKind::FractionalCoupled => {
            let family = build_family(sc.set.as_ref().unwrap())?;
            let measure = MixedMeasure::new(build_variation(sc)?);
            let u0 = point(sc.u0.as_ref().unwrap());
            let params = build_fractional(sc.fractional.as_ref().unwrap())?;
            let kernel = GreenKernel::new(params)?;
            let coupling = build_coupling(sc)?;
            Ok(Execution::Fractional(solve_fractional_coupled(
                &family,
                &measure,
                &coupling,
                &u0,
                &kernel,
                &cfg,
                sc.max_iters,
            )?))
        }
    }
}

/// Outcome of a `run` call: artifacts are on disk either way.
pub struct RunOutcome {
    pub converged: bool,
    pub summary: String,
}

fn write_pair_csv(
    path: &Path,
    times: &[f64],
    left_name: &str,
    left: impl Fn(f64) -> Point,
    right_name: &str,
    right: impl Fn(f64) -> Point,
) -> std::io::Result<()> {
    let dim_l = left(times[0]).len();
    let dim_r = right(times[0]).len();
    let mut out = String::from("t");
    for k in 0..dim_l {
        out.push_str(&format!(",{left_name}{k}"));
    }
    for k in 0..dim_r {
        out.push_str(&format!(",{right_name}{k}"));
    }
    out.push('\n');
    for &t in times {
        out.push_str(&fmt17(t));
        for v in left(t).iter() {
            out.push(',');
            out.push_str(&fmt17(*v));
        }
        for v in right(t).iter() {
            out.push(',');
            out.push_str(&fmt17(*v));
        }
        out.push('\n');
    }
    fs::write(path, out)
}

fn write_history_csv(path: &Path, history: &[f64]) -> std::io::Result<()> {
    let mut out = String::from("iteration,sup_distance\n");
    for (i, d) in history.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, fmt17(*d)));
    }
    fs::write(path, out)
}

/// Executes and writes artifacts under `out_dir`: `trajectory.csv` (or
/// `pair.csv`), `summary.txt`, and `history.csv` for iterative solvers.
/// A non-convergent run still writes its artifacts and comes back with
/// `converged: false`.
pub fn run(sc: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Domain(format!("cannot create {}: {e}", out_dir.display())))?;
    let started = Instant::now();
    let io_err = |e: std::io::Error| Error::Domain(format!("write failed: {e}"));

    let execution = match execute(sc) {
        Ok(ex) => ex,
        Err(Error::NonConvergence { message, history }) => {
            let mut summary = String::new();
            summary.push_str(&format!(
                "problem {}\nstatus FAILED non-convergence\n",
                sc.kind.name()
            ));
            summary.push_str(&format!("detail {message}\n"));
            for (i, d) in history.iter().enumerate() {
                summary.push_str(&format!("distance {} {}\n", i + 1, fmt17(*d)));
            }
            fs::write(out_dir.join("summary.txt"), &summary).map_err(io_err)?;
            write_history_csv(&out_dir.join("history.csv"), &history).map_err(io_err)?;
            return Ok(RunOutcome {
                converged: false,
                summary,
            });
        }
        Err(other) => return Err(other),
    };

    let mut summary = format!("problem {}\nstatus converged\n", sc.kind.name());
    match &execution {
        Execution::Report(report) => {
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(io_err)?;
            fs::write(out_dir.join("trajectory.csv"), csv).map_err(io_err)?;
            let mut block = Vec::new();
            report.write_summary(&mut block).map_err(io_err)?;
            summary.push_str(std::str::from_utf8(&block).unwrap());
        }
        Execution::Skorohod(res) => {
            let times = res.y.nodes().to_vec();
            write_pair_csv(
                &out_dir.join("pair.csv"),
                &times,
                "X",
                |t| res.x.evaluate(t).unwrap(),
                "Y",
                |t| res.y.evaluate(t).unwrap(),
            )
            .map_err(io_err)?;
            write_history_csv(&out_dir.join("history.csv"), &res.distance_history)
                .map_err(io_err)?;
            summary.push_str(&format!(
                "iterations {}\nresidual {}\nvelocity_bound {}\n",
                res.iterations,
                fmt17(res.residual),
                fmt17(res.y.velocity_bound())
            ));
        }
        Execution::Coupled(res) => {
            let times = res.u.nodes().to_vec();
            write_pair_csv(
                &out_dir.join("pair.csv"),
                &times,
                "x",
                |t| res.x.evaluate(t),
                "u",
                |t| res.u.evaluate(t).unwrap(),
            )
            .map_err(io_err)?;
            write_history_csv(&out_dir.join("history.csv"), &res.distance_history)
                .map_err(io_err)?;
            summary.push_str(&format!(
                "iterations {}\nresidual {}\nvelocity_bound {}\n",
                res.iterations,
                fmt17(res.residual),
                fmt17(res.u.velocity_bound())
            ));
        }
        Execution::Fractional(res) => {
            let times = res.u.nodes().to_vec();
            write_pair_csv(
                &out_dir.join("pair.csv"),
                &times,
                "h",
                |t| res.h.evaluate(t),
                "u",
                |t| res.u.evaluate(t).unwrap(),
            )
            .map_err(io_err)?;
            write_history_csv(&out_dir.join("history.csv"), &res.distance_history)
                .map_err(io_err)?;
            summary.push_str(&format!(
                "iterations {}\nresidual {}\n",
                res.iterations,
                fmt17(res.residual)
            ));
        }
        Execution::BvpProfile(profile, kernel) => {
            let mut out = String::from("t");
            for k in 0..profile.dim() {
                out.push_str(&format!(",u{k}"));
            }
            out.push('\n');
            for (t, v) in profile.times().iter().zip(profile.values()) {
                out.push_str(&fmt17(*t));
                for c in v.iter() {
                    out.push(',');
                    out.push_str(&fmt17(*c));
                }
                out.push('\n');
            }
            fs::write(out_dir.join("profile.csv"), out).map_err(io_err)?;
            // Kernel grid for inspection: one row per t grid point.
            let mut grid = String::new();
            for i in 0..GREEN_GRID {
                let mut row = String::new();
                for j in 0..GREEN_GRID {
                    if j > 0 {
                        row.push(',');
                    }
                    row.push_str(&fmt17(kernel.value_at_grid(i, j)));
                }
                grid.push_str(&row);
                grid.push('\n');
            }
            fs::write(out_dir.join("kernel.csv"), grid).map_err(io_err)?;
            summary.push_str(&format!(
                "mu0 {}\nkernel_bound {}\n",
                fmt17(kernel.mu0()),
                fmt17(kernel.bound())
            ));
        }
    }
    summary.push_str(&format!("runtime_ms {}\n", started.elapsed().as_millis()));
    fs::write(out_dir.join("summary.txt"), &summary).map_err(io_err)?;
    Ok(RunOutcome {
        converged: true,
        summary,
    })
}

/// Convergence study: fixed grids at `eps0 * factor^k`, errors measured
/// against the finest level, written as CSV rows
/// `epsilon,sup_error,ratio`.
pub fn convergence_study(sc: &Scenario, levels: usize, out_dir: &Path) -> Result<String> {
    if levels < 2 {
        return Err(Error::Domain("a study needs at least two levels".into()));
    }
    let spec = sc
        .set
        .as_ref()
        .ok_or_else(|| Error::Domain("study needs an operator description".into()))?;
    let measure = MixedMeasure::new(build_variation(sc)?);
    let u0 = point(
        sc.u0
            .as_ref()
            .ok_or_else(|| Error::Domain("study needs `u0`".into()))?,
    );

    enum Runner {
        Plain(MonotoneFamily),
        Drift(MonotoneFamily, LipschitzForcing),
    }
    let runner = match sc.kind {
        ProblemKind::Sweeping if sc.forcing.is_none() => Runner::Plain(build_family(spec)?),
        ProblemKind::Sweeping | ProblemKind::Lipschitz => {
            Runner::Drift(build_family(spec)?, build_forcing(sc)?)
        }
        ProblemKind::SetValued => {
            let set_forcing = build_set_forcing(sc, u0.len())?;
            let rule: catchup::perturbation::StateDrift = Arc::new(move |t, x: &Point| {
                set_forcing
                    .select(t, x)
                    .expect("selection stays admissible")
            });
            Runner::Drift(
                build_family(spec)?,
                LipschitzForcing::new(rule, sc.bound.unwrap_or(1.0))?,
            )
        }
        _ => {
            return Err(Error::Domain(
                "convergence studies cover the grid-based kinds only".into(),
            ))
        }
    };

    let mut partition = measure.build_partition(sc.eps0)?;
    let mut grids = Vec::new();
    let mut epsilons = Vec::new();
    for _ in 0..=levels {
        let traj = match &runner {
            Runner::Plain(family) => run_grid(family, None, &u0, &partition)?,
            Runner::Drift(family, forcing) => run_grid_lipschitz(family, forcing, &u0, &partition)?,
        };
        epsilons.push(partition.epsilon());
        grids.push(traj);
        partition = partition.refine(sc.factor)?;
    }
    let finest = grids.pop().unwrap();
    let errors: Vec<f64> = grids
        .iter()
        .map(|g| finest.sup_distance_to(g))
        .collect::<Result<_>>()?;

    let mut csv = String::from("epsilon,sup_error,ratio\n");
    for (k, err) in errors.iter().enumerate() {
        let ratio = if k == 0 {
            0.0
        } else {
            errors[k - 1] / err.max(1e-300)
        };
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt17(epsilons[k]),
            fmt17(*err),
            fmt17(ratio)
        ));
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Domain(format!("cannot create {}: {e}", out_dir.display())))?;
    fs::write(out_dir.join("study.csv"), &csv)
        .map_err(|e| Error::Domain(format!("write failed: {e}")))?;
    Ok(csv)
}

/// The scenario corpus shipped with the binary; `selftest` runs all of it.
pub fn builtin_scenarios() -> Vec<(&'static str, &'static str)> {
    vec![
        ("play", include_str!("../scenarios/play.scn")),
        ("jump", include_str!("../scenarios/jump.scn")),
        (
            "constant-box",
            include_str!("../scenarios/constant-box.scn"),
        ),
        ("exp-decay", include_str!("../scenarios/exp-decay.scn")),
        (
            "drift-to-boundary",
            include_str!("../scenarios/drift-to-boundary.scn"),
        ),
        (
            "psd-relaxation",
            include_str!("../scenarios/psd-relaxation.scn"),
        ),
        (
            "ball-selection",
            include_str!("../scenarios/ball-selection.scn"),
        ),
        ("mixed-drift", include_str!("../scenarios/mixed-drift.scn")),
        (
            "skorohod-reflect",
            include_str!("../scenarios/skorohod-reflect.scn"),
        ),
        (
            "stieltjes-driver",
            include_str!("../scenarios/stieltjes-driver.scn"),
        ),
        ("oscillator", include_str!("../scenarios/oscillator.scn")),
        (
            "state-interval",
            include_str!("../scenarios/state-interval.scn"),
        ),
        (
            "fractional-bvp",
            include_str!("../scenarios/fractional-bvp.scn"),
        ),
        (
            "fractional-coupled",
            include_str!("../scenarios/fractional-coupled.scn"),
        ),
    ]
}
