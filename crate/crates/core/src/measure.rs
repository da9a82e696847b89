//! Variation functions, the mixed measure `nu = lambda + dr`, and the
//! adapted partitions the time stepping runs on.
//!
//! A [`VariationFunction`] is a nondecreasing right-continuous `r` on
//! `[0, T]` split into a piecewise-linear continuous part (given by knots)
//! and finitely many atoms. Its Stieltjes measure `dr` combines with the
//! Lebesgue measure into [`MixedMeasure`], and [`AdaptedPartition`] packs
//! `[0, T]` into cells whose width plus continuous `dr` mass stays below a
//! refinement bound, with every atom sitting at a cell's right endpoint.

use crate::error::{Error, Result};

/// Arithmetic slack for exact-by-construction identities.
pub const MASS_TOL: f64 = 1e-12;

/// Nondecreasing right-continuous `r(t)` on `[0, T]`: a piecewise-linear
/// continuous part plus a finite list of positive jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationFunction {
    horizon: f64,
    /// `(time, value)` knots of the continuous part; starts at `(0, 0)`,
    /// ends at time `T`, values nondecreasing.
    knots: Vec<(f64, f64)>,
    /// `(location, jump)` with locations strictly increasing in `(0, T]`
    /// and jumps positive.
    atoms: Vec<(f64, f64)>,
}

impl VariationFunction {
    pub fn new(horizon: f64, knots: Vec<(f64, f64)>, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if knots.is_empty() || knots[0] != (0.0, 0.0) {
            return Err(Error::Domain("first knot must be (0, 0)".into()));
        }
        if (knots.last().unwrap().0 - horizon).abs() > 0.0 {
            return Err(Error::Domain(
                "last knot time must equal the horizon".into(),
            ));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Domain(
                    "knot times must be strictly increasing".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Domain("knot values must be nondecreasing".into()));
            }
        }
        for &(loc, jump) in &atoms {
            if !(loc > 0.0 && loc <= horizon) {
                return Err(Error::Domain(format!("atom location {loc} outside (0, T]")));
            }
            if !(jump > 0.0) {
                return Err(Error::Domain(format!(
                    "atom jump must be positive, got {jump}"
                )));
            }
        }
        for w in atoms.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Domain(
                    "atom locations must be strictly increasing".into(),
                ));
            }
        }
        if !knots.iter().all(|k| k.0.is_finite() && k.1.is_finite()) {
            return Err(Error::Domain("knots must be finite".into()));
        }
        Ok(Self {
            horizon,
            knots,
            atoms,
        })
    }

    /// The constant-zero variation function (`nu` reduces to Lebesgue).
    pub fn zero(horizon: f64) -> Self {
        Self::new(horizon, vec![(0.0, 0.0), (horizon, 0.0)], vec![]).expect("valid zero variation")
    }

    /// `r(t) = slope * t` with no atoms.
    pub fn linear(horizon: f64, slope: f64) -> Result<Self> {
        if slope < 0.0 {
            return Err(Error::Domain("slope must be nonnegative".into()));
        }
        Self::new(
            horizon,
            vec![(0.0, 0.0), (horizon, slope * horizon)],
            vec![],
        )
    }

    /// Adds `slope * t` to the continuous part, keeping atoms. Used to build
    /// the bumped modulus `rho(t) = r(t) + gamma * t` for state-dependent
    /// operator families.
    pub fn add_linear(&self, slope: f64) -> Result<Self> {
        if slope < 0.0 {
            return Err(Error::Domain("slope must be nonnegative".into()));
        }
        let knots = self
            .knots
            .iter()
            .map(|&(t, v)| (t, v + slope * t))
            .collect();
        Self::new(self.horizon, knots, self.atoms.clone())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Value of the continuous part at `t`.
    pub fn continuous_value(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.horizon {
            return self.knots[n - 1].1;
        }
        let i = match self
            .knots
            .binary_search_by(|k| k.0.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.knots[i].1,
            Err(i) => i, // knots[i-1].0 < t < knots[i].0
        };
        let (t0, v0) = self.knots[i - 1];
        let (t1, v1) = self.knots[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Right-hand slope of the continuous part at `t` (left-hand at `T`).
    pub fn continuous_slope(&self, t: f64) -> f64 {
        let n = self.knots.len();
        let i = if t >= self.knots[n - 1].0 {
            n - 2
        } else {
            match self
                .knots
                .binary_search_by(|k| k.0.partial_cmp(&t).unwrap())
            {
                Ok(i) => i.min(n - 2),
                Err(i) => i - 1,
            }
        };
        let (t0, v0) = self.knots[i];
        let (t1, v1) = self.knots[i + 1];
        (v1 - v0) / (t1 - t0)
    }

    /// Jump of `r` at `t` (zero off atom locations).
    pub fn jump_at(&self, t: f64) -> f64 {
        match self
            .atoms
            .binary_search_by(|a| a.0.partial_cmp(&t).unwrap())
        {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    /// `r(t)`: continuous part plus all jumps at locations `<= t`
    /// (right-continuous convention).
    pub fn value(&self, t: f64) -> f64 {
        let jumps: f64 = self
            .atoms
            .iter()
            .take_while(|a| a.0 <= t)
            .map(|a| a.1)
            .sum();
        self.continuous_value(t) + jumps
    }

    /// Plain-text form: one `knot <t> <value>` line per knot, then one
    /// `atom <t> <jump>` line per atom.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(t, v) in &self.knots {
            out.push_str(&format!("knot {t} {v}\n"));
        }
        for &(t, j) in &self.atoms {
            out.push_str(&format!("atom {t} {j}\n"));
        }
        out
    }

    /// Parses the plain-text form produced by [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut atoms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap();
            let nums: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|_| {
                        Error::Domain(format!("line {}: bad number `{p}`", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            match (kind, nums.as_slice()) {
                ("knot", [t, v]) => knots.push((*t, *v)),
                ("atom", [t, j]) => atoms.push((*t, *j)),
                _ => {
                    return Err(Error::Domain(format!(
                        "line {}: expected `knot <t> <v>` or `atom <t> <j>`",
                        lineno + 1
                    )))
                }
            }
        }
        let horizon = knots
            .last()
            .ok_or_else(|| Error::Domain("no knot lines".into()))?
            .0;
        Self::new(horizon, knots, atoms)
    }
}

/// The mixed measure `nu(]s, t]) = (t - s) + r(t) - r(s)` driving the
/// time stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedMeasure {
    variation: VariationFunction,
}

impl MixedMeasure {
    pub fn new(variation: VariationFunction) -> Self {
        Self { variation }
    }

    pub fn lebesgue(horizon: f64) -> Self {
        Self::new(VariationFunction::zero(horizon))
    }

    pub fn variation(&self) -> &VariationFunction {
        &self.variation
    }

    pub fn horizon(&self) -> f64 {
        self.variation.horizon()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// `nu(]s, t])`.
    pub fn mass(&self, s: f64, t: f64) -> Result<f64> {
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(Error::Domain(format!("need s <= t, got s={s}, t={t}")));
        }
        Ok((t - s) + self.variation.value(t) - self.variation.value(s))
    }

    /// `nu({t})`, the jump of `r` at `t`.
    pub fn atom_mass(&self, t: f64) -> f64 {
        self.variation.jump_at(t)
    }

    /// The density `d lambda / d nu` at `t`: zero at atoms, else
    /// `1 / (1 + slope)` for the local continuous slope of `r`.
    pub fn lambda_density(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.variation.jump_at(t) > 0.0 {
            return Ok(0.0);
        }
        Ok(1.0 / (1.0 + self.variation.continuous_slope(t)))
    }

    /// Builds an adapted partition: greedy left-to-right packing, extending
    /// each cell until `width + continuous dr mass` would exceed `epsilon`
    /// or an atom is reached. Atoms always become right endpoints; their
    /// mass enters the cell's `beta` but is exempt from the bound.
    pub fn build_partition(&self, epsilon: f64) -> Result<AdaptedPartition> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let horizon = self.horizon();
        let mut nodes = vec![0.0];
        let mut t = 0.0;
        while t < horizon {
            let cap = self
                .variation
                .atoms()
                .iter()
                .map(|a| a.0)
                .find(|&loc| loc > t)
                .unwrap_or(horizon)
                .min(horizon);
            let t_next = self.step_end(t, cap, epsilon);
            nodes.push(t_next);
            t = t_next;
        }
        AdaptedPartition::from_nodes(self.clone(), epsilon, nodes)
    }

    /// Largest `t' <= cap` with `(t' - t) + rc(t') - rc(t) <= epsilon`.
    fn step_end(&self, t: f64, cap: f64, epsilon: f64) -> f64 {
        let vf = &self.variation;
        let rc0 = vf.continuous_value(t);
        let full = (cap - t) + vf.continuous_value(cap) - rc0;
        if full <= epsilon + MASS_TOL {
            return cap;
        }
        // Walk the knot segments; within one, the budget grows affinely.
        let mut lo = t;
        let mut used = 0.0;
        loop {
            let slope = vf.continuous_slope(lo);
            let seg_end = vf
                .knots
                .iter()
                .map(|k| k.0)
                .find(|&kt| kt > lo)
                .unwrap_or(cap)
                .min(cap);
            let rate = 1.0 + slope;
            let seg_budget = (seg_end - lo) * rate;
            if used + seg_budget >= epsilon {
                let mut t_next = lo + (epsilon - used) / rate;
                // Guard against landing a hair past the budget.
                while (t_next - t) + vf.continuous_value(t_next) - rc0 > epsilon && t_next > t {
                    t_next = f64::from_bits(t_next.to_bits() - 1);
                }
                return t_next;
            }
            used += seg_budget;
            lo = seg_end;
        }
    }
}

/// Per-cell masses of an adapted partition: `beta = nu(]a, b])`,
/// `delta = dr(]a, b])` (atom at `b` included), `eta = b - a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub beta: f64,
    pub delta: f64,
    pub eta: f64,
}

/// A partition of `[0, T]` adapted to the mixed measure: every atom is a
/// node, and every cell satisfies `eta + continuous dr mass <= epsilon`.
#[derive(Debug, Clone)]
pub struct AdaptedPartition {
    measure: MixedMeasure,
    epsilon: f64,
    nodes: Vec<f64>,
    cells: Vec<Cell>,
}

impl AdaptedPartition {
    fn from_nodes(measure: MixedMeasure, epsilon: f64, nodes: Vec<f64>) -> Result<Self> {
        let vf = measure.variation();
        let mut cells = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let eta = b - a;
            let delta = vf.value(b) - vf.value(a);
            let continuous = delta - vf.jump_at(b);
            if eta + continuous > epsilon + MASS_TOL {
                return Err(Error::Consistency(format!(
                    "cell ]{a}, {b}] exceeds the refinement bound {epsilon}"
                )));
            }
            cells.push(Cell {
                beta: eta + delta,
                delta,
                eta,
            });
        }
        Ok(Self {
            measure,
            epsilon,
            nodes,
            cells,
        })
    }

    pub fn measure(&self) -> &MixedMeasure {
        &self.measure
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn horizon(&self) -> f64 {
        self.measure.horizon()
    }

    /// Index of the cell `]t_i, t_{i+1}]` containing `t`; `t = 0` maps to
    /// the first cell.
    pub fn locate(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon()
            )));
        }
        if t <= self.nodes[0] {
            return Ok(0);
        }
        let i = self.nodes.partition_point(|&n| n < t);
        Ok((i - 1).min(self.cells.len() - 1))
    }

    /// Refines with `epsilon' = factor * epsilon`, repacking each cell so
    /// the new node set contains the old one.
    pub fn refine(&self, factor: f64) -> Result<AdaptedPartition> {
        if !(0.0 < factor && factor < 1.0) {
            return Err(Error::Domain(format!(
                "factor must lie in (0, 1), got {factor}"
            )));
        }
        let eps = self.epsilon * factor;
        let mut nodes = vec![0.0];
        for w in self.nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut t = a;
            while t < b {
                let t_next = self.measure.step_end(t, b, eps);
                nodes.push(t_next);
                t = t_next;
            }
        }
        AdaptedPartition::from_nodes(self.measure.clone(), eps, nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_atom() -> MixedMeasure {
        MixedMeasure::new(
            VariationFunction::new(1.0, vec![(0.0, 0.0), (1.0, 0.0)], vec![(0.5, 0.3)]).unwrap(),
        )
    }

    #[test]
    fn mass_without_variation_is_length() {
        let m = MixedMeasure::lebesgue(1.0);
        assert!((m.mass(0.2, 0.7).unwrap() - 0.5).abs() < MASS_TOL);
    }

    #[test]
    fn mass_counts_atom_in_half_open_interval() {
        let m = single_atom();
        assert!((m.mass(0.4, 0.6).unwrap() - 0.5).abs() < MASS_TOL);
        // Atom exactly at the left endpoint is excluded, at the right included.
        assert!((m.mass(0.5, 0.6).unwrap() - 0.1).abs() < MASS_TOL);
        assert!((m.mass(0.4, 0.5).unwrap() - 0.4).abs() < MASS_TOL);
    }

    #[test]
    fn mass_with_linear_variation() {
        let m = MixedMeasure::new(VariationFunction::linear(1.0, 1.0).unwrap());
        assert!((m.mass(0.0, 1.0).unwrap() - 2.0).abs() < MASS_TOL);
    }

    #[test]
    fn mass_rejects_bad_times() {
        let m = MixedMeasure::lebesgue(1.0);
        assert!(m.mass(-0.1, 0.5).is_err());
        assert!(m.mass(0.5, 1.5).is_err());
        assert!(m.mass(0.7, 0.2).is_err());
    }

    #[test]
    fn lambda_density_values() {
        let m = MixedMeasure::lebesgue(1.0);
        assert_eq!(m.lambda_density(0.3).unwrap(), 1.0);
        let m = single_atom();
        assert_eq!(m.lambda_density(0.5).unwrap(), 0.0);
        let m = MixedMeasure::new(VariationFunction::linear(1.0, 1.0).unwrap());
        assert!((m.lambda_density(0.3).unwrap() - 0.5).abs() < MASS_TOL);
    }

    #[test]
    fn uniform_partition_without_variation() {
        let m = MixedMeasure::lebesgue(1.0);
        let p = m.build_partition(0.25).unwrap();
        assert_eq!(p.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn atom_becomes_right_endpoint() {
        let m = MixedMeasure::new(
            VariationFunction::new(1.0, vec![(0.0, 0.0), (1.0, 0.0)], vec![(0.5, 2.0)]).unwrap(),
        );
        let p = m.build_partition(0.25).unwrap();
        assert!(p.nodes().contains(&0.5));
        let i = p.nodes().iter().position(|&n| n == 0.5).unwrap();
        let cell = p.cells()[i - 1];
        assert!((cell.beta - (cell.eta + 2.0)).abs() < MASS_TOL);
    }

    #[test]
    fn linear_variation_halves_the_step() {
        let m = MixedMeasure::new(VariationFunction::linear(1.0, 1.0).unwrap());
        let p = m.build_partition(0.2).unwrap();
        assert_eq!(p.cells().len(), 10);
        for c in p.cells() {
            assert!(c.eta + (c.delta) <= 0.2 + MASS_TOL);
        }
    }

    #[test]
    fn refine_nests_and_keeps_atoms() {
        let m = MixedMeasure::new(
            VariationFunction::new(1.0, vec![(0.0, 0.0), (1.0, 0.5)], vec![(0.3, 1.0)]).unwrap(),
        );
        let p = m.build_partition(0.2).unwrap();
        let q = p.refine(0.5).unwrap();
        assert!((q.epsilon() - 0.1).abs() < MASS_TOL);
        for n in p.nodes() {
            assert!(
                q.nodes().iter().any(|m| (m - n).abs() < 1e-15),
                "lost node {n}"
            );
        }
        assert!(q.nodes().contains(&0.3));
        for c in q.cells() {
            assert!(c.eta <= q.epsilon() + MASS_TOL);
        }
    }

    #[test]
    fn refine_recheck_bound() {
        let m = MixedMeasure::new(VariationFunction::linear(1.0, 1.0).unwrap());
        let p = m.build_partition(0.2).unwrap().refine(0.5).unwrap();
        for c in p.cells() {
            assert!(2.0 * c.eta <= 0.1 + MASS_TOL);
        }
    }

    #[test]
    fn beta_splits_into_eta_plus_delta() {
        let m = MixedMeasure::new(
            VariationFunction::new(
                2.0,
                vec![(0.0, 0.0), (1.0, 0.4), (2.0, 0.4)],
                vec![(0.7, 0.9), (1.5, 0.1)],
            )
            .unwrap(),
        );
        let p = m.build_partition(0.15).unwrap();
        for c in p.cells() {
            assert!((c.beta - c.eta - c.delta).abs() < MASS_TOL);
        }
    }

    #[test]
    fn bad_refinement_inputs_are_rejected() {
        let m = MixedMeasure::lebesgue(1.0);
        assert!(m.build_partition(0.0).is_err());
        assert!(m.build_partition(-0.1).is_err());
        let p = m.build_partition(0.25).unwrap();
        assert!(p.refine(0.0).is_err());
        assert!(p.refine(1.0).is_err());
        assert!(p.refine(1.5).is_err());
    }

    #[test]
    fn atom_at_the_horizon_ends_the_partition() {
        let m = MixedMeasure::new(
            VariationFunction::new(1.0, vec![(0.0, 0.0), (1.0, 0.0)], vec![(1.0, 0.4)]).unwrap(),
        );
        let p = m.build_partition(0.3).unwrap();
        assert_eq!(*p.nodes().last().unwrap(), 1.0);
        let last = p.cells().last().unwrap();
        assert!((last.beta - last.eta - 0.4).abs() < MASS_TOL);
        assert_eq!(m.lambda_density(1.0).unwrap(), 0.0);
    }

    #[test]
    fn text_round_trip() {
        let vf = VariationFunction::new(
            2.0,
            vec![(0.0, 0.0), (0.5, 0.25), (2.0, 1.0)],
            vec![(0.75, 0.125)],
        )
        .unwrap();
        let back = VariationFunction::from_text(&vf.to_text()).unwrap();
        assert_eq!(vf, back);
    }

    #[test]
    fn density_quadrature_sanity() {
        // Sum of lambda_density(midpoint) * beta over cells approximates T.
        let m = MixedMeasure::new(
            VariationFunction::new(1.0, vec![(0.0, 0.0), (0.4, 0.8), (1.0, 0.8)], vec![]).unwrap(),
        );
        let eps = 0.01;
        let p = m.build_partition(eps).unwrap();
        let mut total = 0.0;
        for (w, c) in p.nodes().windows(2).zip(p.cells()) {
            let mid = 0.5 * (w[0] + w[1]);
            total += m.lambda_density(mid).unwrap() * c.beta;
        }
        assert!((total - 1.0).abs() < 5.0 * eps, "total {total}");
    }
}
