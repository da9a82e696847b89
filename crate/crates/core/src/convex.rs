//! Closed convex bodies with exact projections.
//!
//! Boxes, balls and halfspaces project in closed form; finite intersections
//! go through Dykstra's alternating scheme.

use crate::error::{Error, Result};
use nalgebra::DVector;

pub type Point = DVector<f64>;

const DYKSTRA_TOL: f64 = 1e-12;
const DYKSTRA_CAP: usize = 10_000;

/// A closed convex subset of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    /// Per-coordinate interval bounds; infinite bounds allowed.
    Box {
        lower: Point,
        upper: Point,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    /// `{ x : <normal, x> <= offset }`.
    Halfspace {
        normal: Point,
        offset: f64,
    },
    Intersection(Vec<ConvexBody>),
}

impl ConvexBody {
    pub fn boxed(lower: Point, upper: Point) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Domain("box bounds must share a dimension".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::Domain(
                "box needs lower <= upper per coordinate".into(),
            ));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::boxed(Point::from_vec(vec![lo]), Point::from_vec(vec![hi])).expect("valid interval")
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::Domain("ball radius must be nonnegative".into()));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn halfspace(normal: Point, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::Domain("halfspace normal must be nonzero".into()));
        }
        Ok(Self::Halfspace { normal, offset })
    }

    /// Finite intersection, verified nonempty by projecting the origin.
    pub fn intersection(parts: Vec<ConvexBody>) -> Result<Self> {
        let body = Self::Intersection(parts);
        body.check_nonempty()?;
        Ok(body)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box { lower, .. } => lower.len(),
            Self::Ball { center, .. } => center.len(),
            Self::Halfspace { normal, .. } => normal.len(),
            Self::Intersection(parts) => parts.first().map_or(0, |p| p.dim()),
        }
    }

    /// Metric projection onto the body. For intersections this runs
    /// Dykstra's scheme and reports an infeasible set when the iterates
    /// fail to land in every member.
    pub fn project(&self, x: &Point) -> Result<Point> {
        match self {
            Self::Box { lower, upper } => {
                let mut p = x.clone();
                for i in 0..p.len() {
                    p[i] = p[i].max(lower[i]).min(upper[i]);
                }
                Ok(p)
            }
            Self::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    Ok(x.clone())
                } else {
                    Ok(center + d * (*radius / n))
                }
            }
            Self::Halfspace { normal, offset } => {
                let viol = normal.dot(x) - offset;
                if viol <= 0.0 {
                    Ok(x.clone())
                } else {
                    Ok(x - normal * (viol / normal.norm_squared()))
                }
            }
            Self::Intersection(parts) => {
                if parts.is_empty() {
                    return Err(Error::Domain("empty intersection list".into()));
                }
                let mut z = x.clone();
                let mut corrections = vec![Point::zeros(x.len()); parts.len()];
                for _ in 0..DYKSTRA_CAP {
                    let before = z.clone();
                    for (part, corr) in parts.iter().zip(corrections.iter_mut()) {
                        let shifted = &z + &*corr;
                        let projected = part.project(&shifted)?;
                        *corr = shifted - &projected;
                        z = projected;
                    }
                    if (&z - &before).norm() <= DYKSTRA_TOL {
                        break;
                    }
                }
                if parts
                    .iter()
                    .any(|p| p.distance(&z).unwrap_or(f64::INFINITY) > 1e-7)
                {
                    return Err(Error::InfeasibleSet(
                        "Dykstra iterates do not settle inside every member".into(),
                    ));
                }
                Ok(z)
            }
        }
    }

    /// Distance from `x` to the body.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok((x - self.project(x)?).norm())
    }

    /// Membership within `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// Checks nonemptiness by projecting the origin and verifying
    /// membership.
    pub fn check_nonempty(&self) -> Result<()> {
        let origin = Point::zeros(self.dim());
        let p = self.project(&origin)?;
        if self.distance(&p)? > 1e-9 {
            return Err(Error::InfeasibleSet(
                "projected origin is not a member".into(),
            ));
        }
        Ok(())
    }

    /// Hausdorff distance, in closed form for box/box and ball/ball pairs.
    pub fn hausdorff(&self, other: &Self) -> Result<f64> {
        match (self, other) {
            (
                Self::Box {
                    lower: l1,
                    upper: u1,
                },
                Self::Box {
                    lower: l2,
                    upper: u2,
                },
            ) => {
                if l1.len() != l2.len() {
                    return Err(Error::Domain("dimension mismatch".into()));
                }
                Ok(box_excess(l1, u1, l2, u2)?.max(box_excess(l2, u2, l1, u1)?))
            }
            (
                Self::Ball {
                    center: c1,
                    radius: r1,
                },
                Self::Ball {
                    center: c2,
                    radius: r2,
                },
            ) => Ok((c1 - c2).norm() + (r1 - r2).abs()),
            _ => Err(Error::NotImplemented(
                "Hausdorff distance is only available for box/box and ball/ball pairs".into(),
            )),
        }
    }
}

/// `sup_{x in [l1, u1]} dist(x, [l2, u2])`, using the per-coordinate
/// decomposition of the Euclidean excess.
fn box_excess(l1: &Point, u1: &Point, l2: &Point, u2: &Point) -> Result<f64> {
    let mut sq = 0.0;
    for i in 0..l1.len() {
        let lo_gap = excess_1d(l2[i] - l1[i]);
        let hi_gap = excess_1d(u1[i] - u2[i]);
        let e = lo_gap.max(hi_gap).max(0.0);
        if e.is_infinite() {
            return Ok(f64::INFINITY);
        }
        sq += e * e;
    }
    Ok(sq.sqrt())
}

/// A difference of possibly infinite bounds; agreement at the same
/// infinity contributes nothing.
fn excess_1d(gap: f64) -> f64 {
    if gap.is_nan() {
        0.0
    } else {
        gap
    }
}
