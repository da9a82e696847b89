//! The `selftest` command: randomized invariant suites plus an end-to-end
//! sweep of the built-in scenario corpus. The a-priori bound checks run
//! inside every solver call, so a clean corpus sweep certifies them.

use crate::runner::{builtin_scenarios, execute};
use crate::scenario::parse_scenario;
use catchup::gronwall;
use catchup::measure::{MixedMeasure, VariationFunction};
use catchup::monotone::{resolvent_shift_bound, MonotoneOperator};
use catchup::{ConvexBody, Point};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Point {
    Point::from_fn(dim, |_, _| rng.random_range(-scale..scale))
}

fn random_box(rng: &mut ChaCha8Rng, dim: usize) -> ConvexBody {
    let lower = Point::from_fn(dim, |_, _| rng.random_range(-3.0..1.0));
    let upper = Point::from_fn(dim, |i, _| lower[i] + rng.random_range(0.2..4.0));
    ConvexBody::boxed(lower, upper).unwrap()
}

fn suite_nonexpansive(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..1000 {
        let dim = rng.random_range(1..=4);
        let eta = rng.random_range(1e-3..10.0);
        let x = random_point(rng, dim, 5.0);
        let y = random_point(rng, dim, 5.0);
        let op = match case % 3 {
            0 => MonotoneOperator::NormalCone(random_box(rng, dim)),
            1 => {
                let c = random_point(rng, dim, 2.0);
                MonotoneOperator::NormalCone(
                    ConvexBody::ball(c, rng.random_range(0.1..3.0)).unwrap(),
                )
            }
            _ => {
                let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                MonotoneOperator::PsdLinear(&a * a.transpose())
            }
        };
        let gap = (op.resolvent(eta, &x).unwrap() - op.resolvent(eta, &y).unwrap()).norm();
        if gap > (&x - &y).norm() + 1e-10 {
            return Err(format!("nonexpansiveness failed on case {case}"));
        }
    }
    Ok(())
}

fn suite_shift_bound(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..200 {
        let dim = rng.random_range(1..=3);
        let a_body = random_box(rng, dim);
        let b_body = random_box(rng, dim);
        let x = a_body.project(&random_point(rng, dim, 4.0)).unwrap();
        let eta = rng.random_range(1e-3..2.0);
        let a = MonotoneOperator::NormalCone(a_body);
        let b = MonotoneOperator::NormalCone(b_body);
        let bound = resolvent_shift_bound(&a, &b, eta, &x).unwrap();
        let actual = (b.resolvent(eta, &x).unwrap() - &x).norm();
        if actual > bound + 1e-10 {
            return Err(format!(
                "shift bound failed on case {case}: {actual} > {bound}"
            ));
        }
    }
    Ok(())
}

fn suite_gronwall(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..1000 {
        let n = rng.random_range(3..20);
        let alphas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let betas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.3)).collect();
        let gammas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
        let a0 = rng.random_range(0.0..2.0);
        let mut seq = vec![a0];
        for i in 0..n - 1 {
            let prefix: f64 = seq[..i].iter().sum();
            let rhs = alphas[i] + betas[i] * prefix + (1.0 + gammas[i]) * seq[i];
            seq.push(rng.random_range(0.0..1.0) * rhs);
        }
        let j = rng.random_range(1..n);
        let bound = gronwall::discrete_bound(a0, &alphas, &betas, &gammas, j).unwrap();
        if seq[j] > bound + 1e-10 {
            return Err(format!("discrete bound failed on case {case}"));
        }
    }
    for case in 0..1000 {
        let c = rng.random_range(0.1..1.5);
        let beta_hyp = rng.random_range(0.3..0.9);
        let mut atoms = vec![];
        if rng.random_bool(0.5) {
            atoms.push((
                rng.random_range(0.2..0.8),
                rng.random_range(0.01..beta_hyp / c * 0.99),
            ));
        }
        let vf = VariationFunction::new(
            1.0,
            vec![(0.0, 0.0), (1.0, rng.random_range(0.0..0.5))],
            atoms,
        )
        .unwrap();
        let measure = MixedMeasure::new(vf);
        let alpha = rng.random_range(0.1..2.0);
        let partition = measure.build_partition(0.25).unwrap();
        let nodes = partition.nodes().to_vec();
        let mut running = 0.0;
        for (i, cell) in partition.cells().iter().enumerate() {
            let phi = rng.random_range(0.0..1.0) * (alpha + c * running);
            let bound =
                gronwall::measure_bound(alpha, &|_| c, &measure, beta_hyp, nodes[i + 1]).unwrap();
            if phi > bound + 1e-10 {
                return Err(format!("measure bound failed on case {case}"));
            }
            running += phi * cell.beta;
        }
    }
    for case in 0..1000 {
        let a = rng.random_range(0.0..2.0);
        let (m0, m1) = (rng.random_range(0.0..1.5), rng.random_range(0.0..1.0));
        let theta: f64 = rng.random_range(0.0..1.0);
        let t = rng.random_range(0.1..2.0);
        let x = theta * (a + m0 * t + 0.5 * m1 * t * t);
        let bound = gronwall::sqrt_bound(a, &move |s| m0 + m1 * s, t).unwrap();
        if x > bound + 1e-10 {
            return Err(format!("sqrt bound failed on case {case}"));
        }
    }
    Ok(())
}

fn suite_corpus() -> Result<(), String> {
    for (name, text) in builtin_scenarios() {
        let sc = parse_scenario(text).map_err(|e| format!("{name}: parse failed: {e}"))?;
        execute(&sc).map_err(|e| format!("{name}: solve failed: {e}"))?;
    }
    Ok(())
}

fn suite_frozen_drift_contraction(rng: &mut ChaCha8Rng) -> Result<(), String> {
    use catchup::catching_up::SolverConfig;
    use catchup::monotone::MonotoneFamily;
    use catchup::perturbation::{solve_lipschitz, LipschitzForcing};
    for case in 0..10 {
        let lo = rng.random_range(-4.0..-1.0);
        let hi = rng.random_range(1.0..4.0);
        let family = MonotoneFamily::constant_set(ConvexBody::interval(lo, hi));
        let slope = rng.random_range(0.0..0.5);
        let vf = VariationFunction::linear(1.0, slope).unwrap();
        let measure = MixedMeasure::new(vf);
        let a = rng.random_range(-1.0..1.0);
        let forcing =
            LipschitzForcing::linear(a, Point::from_vec(vec![rng.random_range(-0.3..0.3)]));
        let u0 = Point::from_vec(vec![rng.random_range(lo * 0.5..hi * 0.5)]);
        let v0 = Point::from_vec(vec![rng.random_range(lo * 0.5..hi * 0.5)]);
        let cfg = SolverConfig {
            tol: 1e-4,
            ..Default::default()
        };
        let ru = solve_lipschitz(&family, &measure, &forcing, &u0, &cfg)
            .map_err(|e| format!("case {case}: {e}"))?;
        let rv = solve_lipschitz(&family, &measure, &forcing, &v0, &cfg)
            .map_err(|e| format!("case {case}: {e}"))?;
        let allowed = (&u0 - &v0).norm() * (2.0 * forcing.bound).exp() + 1e-6;
        for (t, w) in ru
            .trajectory
            .nodes()
            .iter()
            .zip(ru.trajectory.right_values())
        {
            let gap = (w - rv.trajectory.evaluate(*t).unwrap()).norm();
            if gap > allowed {
                return Err(format!("case {case}: dependence bound {gap} > {allowed}"));
            }
        }
    }
    Ok(())
}

/// Runs every suite, printing one line per suite; returns `false` when any
/// of them failed.
pub fn selftest() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let suites: Vec<(&str, Result<(), String>)> = vec![
        (
            "resolvent nonexpansiveness (1000 cases)",
            suite_nonexpansive(&mut rng),
        ),
        (
            "resolvent shift bound (200 box pairs)",
            suite_shift_bound(&mut rng),
        ),
        (
            "gronwall oracles (3 x 1000 cases)",
            suite_gronwall(&mut rng),
        ),
        (
            "continuous dependence (10 scenarios)",
            suite_frozen_drift_contraction(&mut rng),
        ),
        ("scenario corpus with a-priori bounds", suite_corpus()),
    ];
    let mut ok = true;
    for (name, outcome) in suites {
        match outcome {
            Ok(()) => println!("selftest {name}: PASS"),
            Err(msg) => {
                println!("selftest {name}: FAIL ({msg})");
                ok = false;
            }
        }
    }
    ok
}
