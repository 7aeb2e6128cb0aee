//! Projection, squared distance and normal cones of [`ConvexSet`]s.

use crate::error::{Error, Result};
use crate::grid::{distance, dot, norm};
use crate::model::ConvexSet;

/// Default tolerance for normal-cone membership.
pub const CONE_TOL: f64 = 1e-9;

fn check_dim(set: &ConvexSet, z: &[f64]) -> Result<()> {
    if set.dim() == z.len() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: set.dim(),
            got: z.len(),
        })
    }
}

impl ConvexSet {
    /// Nearest point of the set.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self, z)?;
        let mut out = z.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    fn project_in_place(&self, z: &mut [f64]) {
        match self {
            ConvexSet::WholeSpace { .. } => {}
            ConvexSet::Singleton { point } => z.copy_from_slice(point),
            ConvexSet::Box { lower, upper } => {
                for ((zi, l), u) in z.iter_mut().zip(lower).zip(upper) {
                    *zi = zi.clamp(*l, *u);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let r = distance(z, center);
                if r > *radius {
                    let s = radius / r;
                    for (zi, ci) in z.iter_mut().zip(center) {
                        *zi = ci + s * (*zi - ci);
                    }
                }
            }
            ConvexSet::Product { parts } => {
                let mut rest = z;
                for p in parts {
                    let (head, tail) = rest.split_at_mut(p.dim());
                    p.project_in_place(head);
                    rest = tail;
                }
            }
        }
    }

    pub fn distance(&self, z: &[f64]) -> Result<f64> {
        Ok(distance(z, &self.project(z)?))
    }

    pub fn dist_sq(&self, z: &[f64]) -> Result<f64> {
        let d = self.distance(z)?;
        Ok(d * d)
    }

    /// Gradient of `d²_S` at `z`: `2 (z - P_S(z))`.
    pub fn dist_sq_gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let p = self.project(z)?;
        Ok(z.iter().zip(&p).map(|(zi, pi)| 2.0 * (zi - pi)).collect())
    }

    /// Whether `d ∈ N_S[z]` for `z ∈ S`, decided from the set's shape.
    pub fn in_normal_cone(&self, z: &[f64], d: &[f64], tol: f64) -> Result<bool> {
        check_dim(self, z)?;
        check_dim(self, d)?;
        let dist = self.distance(z)?;
        if dist > tol {
            return Err(Error::Domain(format!("point is at distance {dist:e} from the set")));
        }
        Ok(self.cone_member(z, d, tol))
    }

    fn cone_member(&self, z: &[f64], d: &[f64], tol: f64) -> bool {
        match self {
            ConvexSet::WholeSpace { .. } => norm(d) <= tol,
            ConvexSet::Singleton { .. } => true,
            ConvexSet::Box { lower, upper } => {
                z.iter().zip(d).zip(lower.iter().zip(upper)).all(|((zi, di), (l, u))| {
                    let at_lower = (zi - l).abs() <= tol;
                    let at_upper = (zi - u).abs() <= tol;
                    match (at_lower, at_upper) {
                        (true, true) => true,
                        (true, false) => *di <= tol,
                        (false, true) => *di >= -tol,
                        (false, false) => di.abs() <= tol,
                    }
                })
            }
            ConvexSet::Ball { center, radius } => {
                let offset: Vec<f64> = z.iter().zip(center).map(|(a, b)| a - b).collect();
                let r = norm(&offset);
                if *radius <= tol {
                    return true;
                }
                if r < radius - tol {
                    return norm(d) <= tol;
                }
                // Boundary: d must be a non-negative multiple of the outward normal.
                let n: Vec<f64> = offset.iter().map(|o| o / r).collect();
                let along = dot(d, &n);
                let tangential: Vec<f64> = d.iter().zip(&n).map(|(di, ni)| di - along * ni).collect();
                along >= -tol && norm(&tangential) <= tol
            }
            ConvexSet::Product { parts } => {
                let mut offset = 0;
                parts.iter().all(|p| {
                    let k = p.dim();
                    let ok = p.cone_member(&z[offset..offset + k], &d[offset..offset + k], tol);
                    offset += k;
                    ok
                })
            }
        }
    }

    /// Components along which `N_S[z]` is `{0}` (the set does not bind there).
    pub(crate) fn free_components(&self, z: &[f64], tol: f64) -> Vec<bool> {
        let mut out = Vec::with_capacity(z.len());
        self.collect_free(z, tol, &mut out);
        out
    }

    fn collect_free(&self, z: &[f64], tol: f64, out: &mut Vec<bool>) {
        match self {
            ConvexSet::WholeSpace { dim } => out.extend(std::iter::repeat_n(true, *dim)),
            ConvexSet::Singleton { point } => out.extend(std::iter::repeat_n(false, point.len())),
            ConvexSet::Box { lower, upper } => {
                out.extend(
                    z.iter()
                        .zip(lower.iter().zip(upper))
                        .map(|(zi, (l, u))| (zi - l).abs() > tol && (zi - u).abs() > tol),
                );
            }
            ConvexSet::Ball { center, radius } => {
                let interior = distance(z, center) < radius - tol;
                out.extend(std::iter::repeat_n(interior, center.len()));
            }
            ConvexSet::Product { parts } => {
                let mut offset = 0;
                for p in parts {
                    let k = p.dim();
                    p.collect_free(&z[offset..offset + k], tol, out);
                    offset += k;
                }
            }
        }
    }
}
