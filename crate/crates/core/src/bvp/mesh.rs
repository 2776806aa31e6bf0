//! Layer-adapted meshes on `[0, 1]`.

use crate::error::{Error, Result};

/// Controls the graded mesh. Spacing grows geometrically from
/// `min_spacing_factor · ε` at each refinement point up to `max_spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshControl {
    pub min_spacing_factor: f64,
    pub growth: f64,
    pub max_spacing: f64,
    pub max_nodes: usize,
}

impl Default for MeshControl {
    fn default() -> Self {
        Self {
            min_spacing_factor: 1.0 / 50.0,
            growth: 1.05,
            max_spacing: 1e-3,
            max_nodes: 200_000,
        }
    }
}

impl MeshControl {
    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.min_spacing_factor > 0.0
            && self.growth > 1.0
            && self.max_spacing > 0.0
            && self.max_spacing <= 0.5
            && self.max_nodes >= 8;
        if ok {
            Ok(())
        } else {
            Err(Error::Configuration(format!(
                "invalid mesh control {self:?}"
            )))
        }
    }
}

/// Offsets from one end of a segment of half-length `half`, ending at `half`.
fn half_segment(half: f64, dmin: f64, growth: f64, dmax: f64) -> Vec<f64> {
    let spacing = |t: f64| dmax.min(dmin + (growth - 1.0) * t);
    let mut pts = vec![0.0];
    let mut t: f64 = 0.0;
    loop {
        let s = spacing(t);
        if t + s >= half {
            // Avoid a sliver cell next to the midpoint.
            if pts.len() > 1 && half - t < 0.3 * s {
                pts.pop();
            }
            break;
        }
        t += s;
        pts.push(t);
    }
    pts.push(half);
    pts
}

/// Mesh refined at every point of `refine` (which must lie in `[0, 1]`),
/// always containing those points as nodes.
pub(crate) fn layer_mesh(epsilon: f64, refine: &[f64], ctrl: &MeshControl) -> Result<Vec<f64>> {
    ctrl.validate()?;
    let mut knots: Vec<f64> = refine.iter().copied().chain([0.0, 1.0]).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let dmin = ctrl.min_spacing_factor * epsilon;

    let mut mesh = vec![0.0];
    for w in knots.windows(2) {
        let (p, q) = (w[0], w[1]);
        let half = 0.5 * (q - p);
        let offs = half_segment(half, dmin, ctrl.growth, ctrl.max_spacing);
        mesh.extend(offs[1..].iter().map(|t| p + t));
        mesh.extend(offs[..offs.len() - 1].iter().rev().map(|t| q - t));
        // Land exactly on the knot.
        *mesh.last_mut().expect("non-empty") = q;
        if mesh.len() > ctrl.max_nodes {
            return Err(Error::Configuration(format!(
                "mesh for epsilon = {epsilon} needs more than {} nodes",
                ctrl.max_nodes
            )));
        }
    }
    Ok(mesh)
}
