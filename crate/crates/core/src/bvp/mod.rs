//! Finite-ε steady PNP boundary-value problem for two ions with valences
//! `±z1`, used as ground truth for the singular-limit reduction.
//!
//! A solve at small ε starts at ε = 0.1 from a state linear in `H`, ramps the
//! permanent charge in if needed, and then walks ε down a halving ladder,
//! interpolating each converged state onto the next, finer mesh.

mod banded;
mod discrete;
mod mesh;

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::{ChannelGeometry, Profile};
use crate::reduced::{BathConditions, Transport};
use crate::solvers;
use discrete::{newton, Discretization, NewtonOptions};
pub use mesh::MeshControl;

/// Smallest and largest supported ε.
pub const EPSILON_MIN: f64 = 1e-4;
pub const EPSILON_MAX: f64 = 0.1;
/// Required `|I|` at a reversal potential, relative to [`current_scale`].
pub const CURRENT_TOLERANCE: f64 = 1e-8;

/// Everything fixed in a family of solves except ε and `V`.
#[derive(Debug, Clone)]
pub struct BvpProblem {
    pub q0: f64,
    pub bath: BathConditions,
    pub geometry: ChannelGeometry,
    pub transport: Transport,
    pub mesh: MeshControl,
}

/// A converged finite-ε solution sampled on its mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution {
    pub epsilon: f64,
    pub v: f64,
    pub mesh: Vec<f64>,
    pub phi: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    /// `ε dφ/dx`
    pub u: Vec<f64>,
    pub j1: f64,
    pub j2: f64,
    /// `I = z1 (J1 - J2)`
    pub current: f64,
    pub converged: bool,
    /// Largest scaled residual of the discrete equations.
    pub defect: f64,
    /// Largest deviation of an edge flux from the species mean.
    pub flux_variation: [f64; 2],
    pub newton_iterations: usize,
}

impl BvpSolution {
    /// Writes `x, phi, c1, c2, u` with a header line.
    pub fn write_fields_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,phi,c1,c2,u")?;
        for i in 0..self.mesh.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.mesh[i], self.phi[i], self.c1[i], self.c2[i], self.u[i]
            )?;
        }
        Ok(())
    }
}

/// `2 D1 D2 |l - r| / ((D1 + D2) H(1))`, the size of the zero-current flux.
pub fn current_scale(bath: &BathConditions, geom: &ChannelGeometry, transport: &Transport) -> f64 {
    let (d1, d2) = (transport.d1, transport.d2);
    2.0 * d1 * d2 * (bath.l - bath.r).abs() / ((d1 + d2) * geom.h1())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (EPSILON_MIN..=EPSILON_MAX).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
            domain: "[1e-4, 0.1]",
        })
    }
}

/// Solves the BVP at one `(ε, V)`.
pub fn solve_bvp(
    epsilon: f64,
    v: f64,
    q0: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
    transport: &Transport,
    mesh_control: &MeshControl,
) -> Result<BvpSolution> {
    let problem = BvpProblem {
        q0,
        bath: *bath,
        geometry: geom.clone(),
        transport: *transport,
        mesh: *mesh_control,
    };
    Ok(Tracker::start(&problem, epsilon, v)?.solution())
}

/// Outcome of the reversal-potential search.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpReversal {
    pub v: f64,
    pub solution: BvpSolution,
    /// Number of BVP solves spent in the search.
    pub evaluations: usize,
}

/// Finds `V` with zero current at the given ε, default mesh control.
pub fn find_reversal_bvp(
    epsilon: f64,
    q0: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
    transport: &Transport,
) -> Result<BvpReversal> {
    let problem = BvpProblem {
        q0,
        bath: *bath,
        geometry: geom.clone(),
        transport: *transport,
        mesh: MeshControl::default(),
    };
    find_reversal(&problem, epsilon)
}

/// Finds `V` with `|I(V)| ≤ 1e-8 · J_scale` inside
/// `[-|ln(l/r)|/z1 - 1, |ln(l/r)|/z1 + 1]`.
///
/// The search starts at the reduced reversal potential, expands outward until
/// the current changes sign and then narrows the bracket by regula falsi with
/// the Illinois modification, falling back to bisection when it stalls.
pub fn find_reversal(problem: &BvpProblem, epsilon: f64) -> Result<BvpReversal> {
    let bath = &problem.bath;
    if bath.l == bath.r {
        let t = Tracker::start(problem, epsilon, 0.0)?;
        return Ok(BvpReversal {
            v: 0.0,
            solution: t.solution(),
            evaluations: 1,
        });
    }
    let scale = current_scale(bath, &problem.geometry, &problem.transport);
    let tol = CURRENT_TOLERANCE * scale;
    let bound = bath.log_ratio().abs() / bath.z1 + 1.0;

    let guess = solvers::reversal_potential(
        problem.q0,
        problem.transport.theta(),
        bath,
        &problem.geometry,
    )?
    .clamp(-bound, bound);
    let mut tracker = Tracker::start(problem, epsilon, guess)?;
    let mut evaluations = 1;
    let mut best = tracker.solution();
    let f0 = best.current;
    if f0.abs() <= tol {
        return Ok(BvpReversal {
            v: guess,
            solution: best,
            evaluations,
        });
    }

    // I(V) increases with V, so the root lies below the guess when I > 0.
    let dir = -f0.signum();
    let mut step = 0.02 * bound;
    let (mut a, mut fa) = (guess, f0);
    let (mut b, mut fb);
    loop {
        let next = (a + dir * step).clamp(-bound, bound);
        tracker.move_to(next)?;
        evaluations += 1;
        let s = tracker.solution();
        let f = s.current;
        if f.abs() < best.current.abs() {
            best = s;
        }
        if f.signum() != fa.signum() || f == 0.0 {
            b = next;
            fb = f;
            break;
        }
        if next.abs() == bound {
            return Err(Error::Bracket {
                what: "finite-epsilon reversal potential",
                lo: guess,
                hi: next,
                f_lo: f0,
                f_hi: f,
            });
        }
        a = next;
        fa = f;
        step *= 2.0;
    }

    // Illinois iteration on [a, b] (unordered), keeping a sign change.
    let mut side = 0i8;
    for _ in 0..100 {
        if best.current.abs() <= tol {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        let (lo, hi) = (a.min(b), a.max(b));
        let width = hi - lo;
        if !(c > lo + 0.01 * width && c < hi - 0.01 * width) {
            c = 0.5 * (a + b);
        }
        if width <= 1e-14 * (1.0 + hi.abs()) {
            break;
        }
        tracker.move_to(c)?;
        evaluations += 1;
        let s = tracker.solution();
        let fc = s.current;
        if fc.abs() < best.current.abs() {
            best = s;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            side = 1;
        }
    }

    if best.current.abs() > tol {
        return Err(Error::Convergence {
            what: "finite-epsilon reversal potential",
            defect: best.current.abs() / scale,
        });
    }
    Ok(BvpReversal {
        v: best.v,
        solution: best,
        evaluations,
    })
}

fn refinement_points(problem: &BvpProblem) -> Vec<f64> {
    let mut pts = vec![problem.geometry.x1(), problem.geometry.x2()];
    if let Profile::Steps { breakpoints, .. } = problem.geometry.profile() {
        pts.extend(breakpoints.iter().copied());
    }
    pts
}

/// Linear interpolation of interleaved nodal states onto a new mesh.
fn interpolate(old_mesh: &[f64], old: &[f64], new_mesh: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * new_mesh.len());
    let mut j = 0;
    for &x in new_mesh {
        while j + 2 < old_mesh.len() && old_mesh[j + 1] < x {
            j += 1;
        }
        let (x0, x1) = (old_mesh[j], old_mesh[j + 1]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        for c in 0..3 {
            let (a, b) = (old[3 * j + c], old[3 * (j + 1) + c]);
            out.push(a + t * (b - a));
        }
    }
    out
}

/// A converged state that can be moved to nearby `V`.
struct Tracker {
    disc: Discretization,
    q0: f64,
    x: Vec<f64>,
    v: f64,
    defect: f64,
    iterations: usize,
    opts: NewtonOptions,
}

impl Tracker {
    fn start(problem: &BvpProblem, epsilon: f64, v: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let refine = refinement_points(problem);
        let opts = NewtonOptions::default();
        let q0 = problem.q0;

        let mut eps = EPSILON_MAX.max(epsilon);
        let disc =
            Discretization::new(eps, mesh::layer_mesh(eps, &refine, &problem.mesh)?, problem)?;
        let guess = disc.linear_guess(v);
        let (mut x, mut defect, mut iterations) = match newton(&disc, guess.clone(), v, q0, &opts) {
            Ok(o) => (o.x, o.defect, o.iterations),
            Err(_) => {
                let o = charge_homotopy(&disc, guess, v, q0, &opts)?;
                (o.x, o.defect, o.iterations)
            }
        };
        let mut disc = disc;

        let mut ratio: f64 = 0.5;
        while eps > epsilon {
            let next_eps = (eps * ratio).max(epsilon);
            let next = Discretization::new(
                next_eps,
                mesh::layer_mesh(next_eps, &refine, &problem.mesh)?,
                problem,
            )?;
            let start = interpolate(&disc.mesh, &x, &next.mesh);
            match newton(&next, start, v, q0, &opts) {
                Ok(o) => {
                    x = o.x;
                    defect = o.defect;
                    iterations += o.iterations;
                    disc = next;
                    eps = next_eps;
                    ratio = (ratio * ratio).max(0.5);
                }
                Err(e) => {
                    ratio = ratio.sqrt();
                    if ratio > 0.97 {
                        return Err(e);
                    }
                }
            }
        }
        Ok(Self {
            disc,
            q0,
            x,
            v,
            defect,
            iterations,
            opts,
        })
    }

    /// Re-solves at boundary potential `v`, sub-stepping if a direct jump fails.
    fn move_to(&mut self, v: f64) -> Result<()> {
        let mut pending = vec![v];
        let mut substeps = 0;
        while let Some(&target) = pending.last() {
            let start = shifted_potential(&self.disc, &self.x, target - self.v);
            match newton(&self.disc, start, target, self.q0, &self.opts) {
                Ok(o) => {
                    self.x = o.x;
                    self.defect = o.defect;
                    self.iterations += o.iterations;
                    self.v = target;
                    pending.pop();
                }
                Err(e) => {
                    substeps += 1;
                    if substeps > 12 {
                        return Err(e);
                    }
                    pending.push(0.5 * (self.v + target));
                }
            }
        }
        Ok(())
    }

    fn solution(&self) -> BvpSolution {
        let disc = &self.disc;
        let n = disc.nodes();
        let phi: Vec<f64> = (0..n).map(|i| self.x[3 * i]).collect();
        let c1: Vec<f64> = (0..n).map(|i| self.x[3 * i + 1].exp()).collect();
        let c2: Vec<f64> = (0..n).map(|i| self.x[3 * i + 2].exp()).collect();
        let m = &disc.mesh;
        let u: Vec<f64> = (0..n)
            .map(|i| {
                let d = if i == 0 {
                    (phi[1] - phi[0]) / (m[1] - m[0])
                } else if i == n - 1 {
                    (phi[n - 1] - phi[n - 2]) / (m[n - 1] - m[n - 2])
                } else {
                    let (hl, hr) = (m[i] - m[i - 1], m[i + 1] - m[i]);
                    ((phi[i + 1] - phi[i]) * hl / hr + (phi[i] - phi[i - 1]) * hr / hl) / (hl + hr)
                };
                disc.epsilon * d
            })
            .collect();
        let fluxes = disc.fluxes(&self.x);
        let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
        let (j1, j2) = (mean(&fluxes[0]), mean(&fluxes[1]));
        let spread = |f: &[f64], j: f64| f.iter().map(|v| (v - j).abs()).fold(0.0, f64::max);
        BvpSolution {
            epsilon: disc.epsilon,
            v: self.v,
            mesh: m.clone(),
            phi,
            c1,
            c2,
            u,
            j1,
            j2,
            current: disc.z1 * (j1 - j2),
            converged: true,
            defect: self.defect,
            flux_variation: [spread(&fluxes[0], j1), spread(&fluxes[1], j2)],
            newton_iterations: self.iterations,
        }
    }
}

/// Ramps the permanent charge from zero to `q0` at fixed ε.
fn charge_homotopy(
    disc: &Discretization,
    guess: Vec<f64>,
    v: f64,
    q0: f64,
    opts: &NewtonOptions,
) -> Result<discrete::NewtonOutcome> {
    let mut cur = newton(disc, guess, v, 0.0, opts)?;
    let mut lambda: f64 = 0.0;
    let mut step: f64 = 0.25;
    let mut total = cur.iterations;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        match newton(disc, cur.x.clone(), v, next * q0, opts) {
            Ok(o) => {
                total += o.iterations;
                cur = o;
                lambda = next;
                step = (2.0 * step).min(0.5);
            }
            Err(e) => {
                step *= 0.5;
                if step < 1e-3 {
                    return Err(e);
                }
            }
        }
    }
    cur.iterations = total;
    Ok(cur)
}

/// Adds `dv (1 - H(x)/H(1))` to the potential so the left boundary value moves by `dv`.
fn shifted_potential(disc: &Discretization, x: &[f64], dv: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    let n = disc.nodes();
    let mut hx = 0.0;
    for i in 0..n {
        if i > 0 {
            hx += 1.0 / disc.g[i - 1];
        }
        let s = if i + 1 == n { 1.0 } else { hx / disc.h1 };
        out[3 * i] += dv * (1.0 - s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_problem(q0: f64, theta: f64) -> BvpProblem {
        BvpProblem {
            q0,
            bath: BathConditions::new(0.2, 1.0, 1.0).unwrap(),
            geometry: ChannelGeometry::uniform(1.0 / 3.0, 2.0 / 3.0).unwrap(),
            transport: Transport::from_theta(1.0, theta).unwrap(),
            mesh: MeshControl::default(),
        }
    }

    #[test]
    fn constant_state_is_exact() {
        let bath = BathConditions::new(0.7, 0.7, 1.0).unwrap();
        let geom = ChannelGeometry::uniform(0.3, 0.6).unwrap();
        let t = Transport::new(1.0, 2.0).unwrap();
        let s = solve_bvp(0.01, 0.0, 0.0, &bath, &geom, &t, &MeshControl::default()).unwrap();
        assert!(s.phi.iter().all(|&p| p == 0.0));
        assert!(s.c1.iter().chain(&s.c2).all(|&c| (c - 0.7).abs() < 1e-15));
        assert_eq!((s.j1, s.j2, s.current), (0.0, 0.0, 0.0));
    }

    #[test]
    fn epsilon_range_enforced() {
        let p = reference_problem(0.0, 0.0);
        assert!(find_reversal(&p, 5e-5).is_err());
        assert!(find_reversal(&p, 0.2).is_err());
    }

    #[test]
    fn neutral_equal_diffusion_current_is_small() {
        let p = reference_problem(0.0, 0.0);
        let s = solve_bvp(0.01, 0.0, 0.0, &p.bath, &p.geometry, &p.transport, &p.mesh).unwrap();
        let scale = current_scale(&p.bath, &p.geometry, &p.transport);
        assert!(s.current.abs() <= 0.05 * scale, "{} vs {scale}", s.current);
        assert!(s.defect <= 1e-8);
        assert!(s.c1.iter().chain(&s.c2).all(|&c| c > 0.0));
        assert_eq!((s.phi[0], *s.phi.last().unwrap()), (0.0, 0.0));
    }

    #[test]
    fn charged_reversal_matches_reduced() {
        let p = reference_problem(10.0, 0.6);
        let r = find_reversal(&p, 0.005).unwrap();
        let reduced = solvers::reversal_potential(10.0, 0.6, &p.bath, &p.geometry).unwrap();
        let bound = p.bath.log_ratio().abs();
        assert!(
            (r.v - reduced).abs() <= 0.02 * bound,
            "{} vs {reduced}",
            r.v
        );
        let scale = current_scale(&p.bath, &p.geometry, &p.transport);
        assert!(r.solution.current.abs() <= CURRENT_TOLERANCE * scale);
    }

    #[test]
    fn symmetric_baths_give_zero() {
        let mut p = reference_problem(5.0, 0.4);
        p.bath = BathConditions::new(0.5, 0.5, 1.0).unwrap();
        let r = find_reversal(&p, 0.01).unwrap();
        assert_eq!(r.v, 0.0);
        assert!(r.solution.current.abs() < 1e-12);
    }

    #[test]
    fn fields_csv_has_header_and_rows() {
        let p = reference_problem(1.0, 0.2);
        let s = solve_bvp(0.05, 0.1, 1.0, &p.bath, &p.geometry, &p.transport, &p.mesh).unwrap();
        let mut buf = Vec::new();
        s.write_fields_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x,phi,c1,c2,u"));
        assert_eq!(text.lines().count(), s.mesh.len() + 1);
    }
}
