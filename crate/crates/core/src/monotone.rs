//! Time-dependent maximal monotone operators, accessed through resolvents.
//!
//! An operator enters the solvers only through `J_eta = (I + eta A)^{-1}`,
//! which is what the catching-up step evaluates. The catalog covers moving
//! normal cones (resolvent = metric projection), symmetric PSD linear maps
//! (resolvent = linear solve) and proximal rules of convex functions;
//! anything else can be supplied as a custom resolvent rule.

use crate::convex::{ConvexBody, Point};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::sync::Arc;

type BodyRule = Arc<dyn Fn(f64) -> ConvexBody + Send + Sync>;
type MatrixRule = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
type ProxRule = Arc<dyn Fn(f64, f64, &Point) -> Point + Send + Sync>;
type ResolventRule = Arc<dyn Fn(f64, f64, &Point) -> Result<Point> + Send + Sync>;
type SectionRule = Arc<dyn Fn(f64, &Point) -> Result<Point> + Send + Sync>;
type SnapshotRule = Arc<dyn Fn(f64, &Point) -> MonotoneOperator + Send + Sync>;
type EtaProxRule = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;
type EtaResolventRule = Arc<dyn Fn(f64, &Point) -> Result<Point> + Send + Sync>;

/// A maximal monotone operator frozen at one instant.
#[derive(Clone)]
pub enum MonotoneOperator {
    /// The normal cone of a closed convex body; `J_eta` is the projection,
    /// independent of `eta`.
    NormalCone(ConvexBody),
    /// `A x = S x` for a symmetric positive-semidefinite `S`.
    PsdLinear(DMatrix<f64>),
    /// `A = subdifferential of g`; the rule evaluates `prox_{eta g}`.
    Prox(EtaProxRule),
    /// User-supplied resolvent `(eta, x) -> J_eta(x)`.
    Custom(EtaResolventRule),
}

impl MonotoneOperator {
    /// `J_eta(x) = (I + eta A)^{-1} x`.
    pub fn resolvent(&self, eta: f64, x: &Point) -> Result<Point> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!(
                "resolvent step must be positive, got {eta}"
            )));
        }
        match self {
            Self::NormalCone(body) => body.project(x),
            Self::PsdLinear(s) => {
                let n = s.nrows();
                let system = DMatrix::identity(n, n) + s * eta;
                system
                    .clone()
                    .cholesky()
                    .map(|ch| ch.solve(x))
                    .or_else(|| system.lu().solve(x))
                    .ok_or_else(|| {
                        Error::Operator("resolvent system is singular despite the PSD claim".into())
                    })
            }
            Self::Prox(rule) => Ok(rule(eta, x)),
            Self::Custom(rule) => rule(eta, x),
        }
    }

    /// Minimal-norm element of `A(x)`, available in closed form for the
    /// catalog members: zero on the domain of a normal cone, `S x` for the
    /// linear variant.
    pub fn minimal_section(&self, x: &Point) -> Result<Point> {
        match self {
            Self::NormalCone(body) => {
                if !body.contains(x, 1e-9)? {
                    return Err(Error::Domain("point is outside the cone's domain".into()));
                }
                Ok(Point::zeros(x.len()))
            }
            Self::PsdLinear(s) => Ok(s * x),
            _ => Err(Error::Capability(
                "no minimal-section rule for this operator variant".into(),
            )),
        }
    }

    /// The graph pseudo-distance to `other`, in closed form for same-variant
    /// catalog pairs. Distinct PSD linear maps with full domain are at
    /// infinite pseudo-distance, which is what the scaling of the graph
    /// supremum yields.
    pub fn pseudo_distance(&self, other: &Self) -> Result<f64> {
        match (self, other) {
            (Self::NormalCone(a), Self::NormalCone(b)) => a.hausdorff(b),
            (Self::PsdLinear(a), Self::PsdLinear(b)) => {
                if (a - b).norm() <= 1e-12 * (1.0 + a.norm()) {
                    Ok(0.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            _ => Err(Error::NotImplemented(
                "pseudo-distance has no closed form for this pair; supply the modulus r directly"
                    .into(),
            )),
        }
    }
}

/// Bound on `|| x - J_eta^B(x) ||` for `x` in the domain of `A`:
/// `eta ||A0(x)|| + dis(A, B) + sqrt(eta (1 + ||A0(x)||) dis(A, B))`.
pub fn resolvent_shift_bound(
    a: &MonotoneOperator,
    b: &MonotoneOperator,
    eta: f64,
    x: &Point,
) -> Result<f64> {
    let section = a.minimal_section(x)?;
    let dis = a.pseudo_distance(b)?;
    let s = section.norm();
    Ok(eta * s + dis + (eta * (1.0 + s) * dis).sqrt())
}

/// A time-dependent maximal monotone family `t -> A(t)`.
#[derive(Clone)]
pub struct MonotoneFamily {
    rule: Arc<dyn Fn(f64) -> MonotoneOperator + Send + Sync>,
    section_override: Option<SectionRule>,
    growth: Option<f64>,
}

impl MonotoneFamily {
    pub fn new(rule: Arc<dyn Fn(f64) -> MonotoneOperator + Send + Sync>) -> Self {
        Self {
            rule,
            section_override: None,
            growth: None,
        }
    }

    /// A moving normal cone `A(t) = N_{C(t)}`.
    pub fn normal_cone(bodies: BodyRule) -> Self {
        Self::new(Arc::new(move |t| MonotoneOperator::NormalCone(bodies(t)))).with_growth(0.0)
    }

    pub fn constant_set(body: ConvexBody) -> Self {
        Self::normal_cone(Arc::new(move |_| body.clone()))
    }

    /// `A(t) x = S(t) x` for symmetric PSD `S(t)`.
    pub fn psd_linear(matrices: MatrixRule) -> Self {
        Self::new(Arc::new(move |t| MonotoneOperator::PsdLinear(matrices(t))))
    }

    /// A proximal family: the rule evaluates `prox_{eta g_t}(x)`.
    pub fn prox(rule: ProxRule) -> Self {
        let rule2 = rule.clone();
        Self::new(Arc::new(move |t| {
            let rule = rule2.clone();
            MonotoneOperator::Prox(Arc::new(move |eta, x| rule(t, eta, x)))
        }))
    }

    /// A user-supplied resolvent rule `(t, eta, x) -> J_eta^{A(t)}(x)`.
    pub fn custom(rule: ResolventRule) -> Self {
        Self::new(Arc::new(move |t| {
            let rule = rule.clone();
            MonotoneOperator::Custom(Arc::new(move |eta, x| rule(t, eta, x)))
        }))
    }

    /// Sets the linear-growth constant `c` with
    /// `||A0(t, x)|| <= c (1 + ||x||)`.
    pub fn with_growth(mut self, c: f64) -> Self {
        self.growth = Some(c);
        self
    }

    /// Overrides the minimal-section rule.
    pub fn with_minimal_section(mut self, rule: SectionRule) -> Self {
        self.section_override = Some(rule);
        self
    }

    /// The operator frozen at time `t`.
    pub fn at(&self, t: f64) -> MonotoneOperator {
        (self.rule)(t)
    }

    pub fn resolvent(&self, t: f64, eta: f64, x: &Point) -> Result<Point> {
        self.at(t).resolvent(eta, x)
    }

    pub fn minimal_section(&self, t: f64, x: &Point) -> Result<Point> {
        if let Some(rule) = &self.section_override {
            return rule(t, x);
        }
        self.at(t).minimal_section(x)
    }

    /// `dis(A(t), A(s))` via the catalog closed forms.
    pub fn vladimirov_dis(&self, t: f64, s: f64) -> Result<f64> {
        self.at(t).pseudo_distance(&self.at(s))
    }

    /// The growth constant used by the a-priori bound assertions: an
    /// explicit override, else 0 for normal cones (their minimal section
    /// vanishes on the domain), else the largest operator norm sampled at
    /// the given times for the linear variant.
    pub fn growth_constant(&self, sample_times: &[f64]) -> f64 {
        if let Some(c) = self.growth {
            return c;
        }
        match self.at(0.0) {
            MonotoneOperator::NormalCone(_) => 0.0,
            MonotoneOperator::PsdLinear(_) => sample_times
                .iter()
                .map(|&t| match self.at(t) {
                    MonotoneOperator::PsdLinear(s) => s.norm(),
                    _ => 0.0,
                })
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Spot-checks `||A0(t, x)|| <= c (1 + ||x||)` on the supplied points.
    pub fn check_growth(&self, samples: &[(f64, Point)]) -> Result<()> {
        let c = match self.growth {
            Some(c) => c,
            None => return Ok(()),
        };
        for (t, x) in samples {
            let s = self.minimal_section(*t, x)?;
            if s.norm() > c * (1.0 + x.norm()) + 1e-9 {
                return Err(Error::Hypothesis(format!(
                    "minimal section at t={t} exceeds the declared growth bound"
                )));
            }
        }
        Ok(())
    }
}

/// A state-dependent family `(t, x) -> A_(t, x)` together with the
/// Lipschitz modulus of its state dependence.
#[derive(Clone)]
pub struct StateDependentFamily {
    rule: SnapshotRule,
    pub state_lipschitz: f64,
}

impl StateDependentFamily {
    pub fn new(rule: SnapshotRule, state_lipschitz: f64) -> Self {
        Self {
            rule,
            state_lipschitz,
        }
    }

    pub fn at(&self, t: f64, x: &Point) -> MonotoneOperator {
        (self.rule)(t, x)
    }

    /// Freezes the state argument along a path, yielding an ordinary
    /// time-dependent family.
    pub fn frozen_along(&self, path: Arc<dyn Fn(f64) -> Point + Send + Sync>) -> MonotoneFamily {
        let rule = self.rule.clone();
        MonotoneFamily::new(Arc::new(move |t| rule(t, &path(t)))).with_growth(0.0)
    }
}
