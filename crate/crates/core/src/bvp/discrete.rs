//! Finite-volume discretisation of the steady two-ion PNP system and its
//! damped Newton solver.
//!
//! Unknowns per node are `(φ, ln c1, ln c2)`, interleaved. The Poisson rows
//! balance `ε² h φ'` across each control volume against the enclosed charge;
//! the Nernst–Planck rows equate Scharfetter–Gummel edge fluxes on the two
//! sides of each node. Edges use the resistance coordinate `H`, in which
//! `h φ'` and the species fluxes have the form of a constant-area problem.

use super::banded::BandMatrix;
use super::BvpProblem;
use crate::error::{Error, Result};

/// Bernoulli function `x / (e^x - 1)`.
pub(crate) fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 - 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0
    } else {
        x / x.exp_m1()
    }
}

/// Derivative of [`bernoulli`].
pub(crate) fn bernoulli_prime(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        -0.5 + x / 6.0 - x * x * x / 180.0
    } else {
        // e^x / (e^x - 1), written to stay finite for large |x|.
        let ratio = if x > 0.0 {
            -1.0 / (-x).exp_m1()
        } else {
            x.exp() / x.exp_m1()
        };
        bernoulli(x) * (1.0 / x - ratio)
    }
}

/// Problem data that does not change during a Newton solve.
#[derive(Debug, Clone)]
pub(crate) struct Discretization {
    pub epsilon: f64,
    pub mesh: Vec<f64>,
    /// `1 / (H(x_{i+1}) - H(x_i))` per edge.
    pub g: Vec<f64>,
    /// `∫ h dx` over each control volume.
    pub w: Vec<f64>,
    /// `∫ h Q dx` over each control volume, for `Q0 = 1`.
    pub qw_unit: Vec<f64>,
    pub h1: f64,
    pub z1: f64,
    pub d: [f64; 2],
    pub l: f64,
    pub r: f64,
    /// Concentration scale used to normalise residuals.
    pub cs: f64,
}

impl Discretization {
    pub(crate) fn new(epsilon: f64, mesh: Vec<f64>, problem: &BvpProblem) -> Result<Self> {
        let geom = &problem.geometry;
        let (l, r, z1) = (problem.bath.l, problem.bath.r, problem.bath.z1);
        let q0 = problem.q0;
        let d = [problem.transport.d1, problem.transport.d2];
        let n = mesh.len();
        let profile = geom.profile();
        let mut g = Vec::with_capacity(n - 1);
        for e in mesh.windows(2) {
            g.push(1.0 / profile.integral(e[0], e[1])?);
        }
        let mut w = vec![0.0; n];
        let mut qw_unit = vec![0.0; n];
        let (x1, x2) = (geom.x1(), geom.x2());
        for (i, e) in mesh.windows(2).enumerate() {
            let half = 0.5 * (e[1] - e[0]);
            let left = half * profile.h(e[0] + 0.5 * half);
            let right = half * profile.h(e[1] - 0.5 * half);
            w[i] += left;
            w[i + 1] += right;
            // Junctions are mesh nodes, so each half cell is entirely inside
            // or outside the charged segment.
            let mid = 0.5 * (e[0] + e[1]);
            if mid > x1 && mid < x2 {
                qw_unit[i] += 2.0 * left;
                qw_unit[i + 1] += 2.0 * right;
            }
        }
        let cs = l.max(r).max(2.0 * q0.abs() / z1);
        Ok(Self {
            epsilon,
            mesh,
            g,
            w,
            qw_unit,
            h1: geom.h1(),
            z1,
            d,
            l,
            r,
            cs,
        })
    }

    pub(crate) fn nodes(&self) -> usize {
        self.mesh.len()
    }

    fn valence(&self, k: usize) -> f64 {
        if k == 0 {
            self.z1
        } else {
            -self.z1
        }
    }

    /// Scharfetter–Gummel flux of species `k` across edge `i`.
    fn edge_flux(&self, x: &[f64], k: usize, i: usize) -> f64 {
        let psi = self.valence(k) * (x[3 * (i + 1)] - x[3 * i]);
        let ca = x[3 * i + 1 + k].exp();
        let cb = x[3 * (i + 1) + 1 + k].exp();
        self.d[k] * self.g[i] * (ca * bernoulli(psi) - cb * bernoulli(-psi))
    }

    /// Fluxes of both species across every edge.
    pub(crate) fn fluxes(&self, x: &[f64]) -> [Vec<f64>; 2] {
        let m = self.nodes() - 1;
        [
            (0..m).map(|i| self.edge_flux(x, 0, i)).collect(),
            (0..m).map(|i| self.edge_flux(x, 1, i)).collect(),
        ]
    }

    /// Row scaling that turns residuals into dimensionless defects.
    fn row_scale(&self, row: usize) -> f64 {
        let i = row / 3;
        match row % 3 {
            0 => 1.0 / (self.w[i] * self.cs),
            k => self.h1 / (self.d[k - 1] * self.cs),
        }
    }

    /// Residual and, if `jac` is given, its Jacobian. `q0` scales the
    /// permanent charge; `v` is the left boundary potential.
    pub(crate) fn assemble(
        &self,
        x: &[f64],
        v: f64,
        q0: f64,
        res: &mut [f64],
        mut jac: Option<&mut BandMatrix>,
    ) {
        let n = self.nodes();
        let eps2 = self.epsilon * self.epsilon;
        res.iter_mut().for_each(|r| *r = 0.0);
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
        }

        // Dirichlet rows.
        let bc = [
            (0, [v, self.l.ln(), self.l.ln()]),
            (n - 1, [0.0, self.r.ln(), self.r.ln()]),
        ];
        for (node, vals) in bc {
            for c in 0..3 {
                let row = 3 * node + c;
                res[row] = x[row] - vals[c];
                if let Some(j) = jac.as_deref_mut() {
                    j.add(row, row, 1.0);
                }
            }
        }

        for i in 1..n - 1 {
            let p = 3 * i;
            let (gl, gr) = (self.g[i - 1], self.g[i]);
            let (c1, c2) = (x[p + 1].exp(), x[p + 2].exp());
            res[p] = eps2 * (gr * (x[p + 3] - x[p]) - gl * (x[p] - x[p - 3]))
                + self.w[i] * self.z1 * (c1 - c2)
                + q0 * self.qw_unit[i];
            if let Some(j) = jac.as_deref_mut() {
                j.add(p, p - 3, eps2 * gl);
                j.add(p, p, -eps2 * (gl + gr));
                j.add(p, p + 3, eps2 * gr);
                j.add(p, p + 1, self.w[i] * self.z1 * c1);
                j.add(p, p + 2, -self.w[i] * self.z1 * c2);
            }
        }

        // Each edge flux enters the row of its left node with a minus sign
        // and that of its right node with a plus sign.
        for e in 0..n - 1 {
            let (a, b) = (3 * e, 3 * (e + 1));
            for k in 0..2 {
                let z = self.valence(k);
                let psi = z * (x[b] - x[a]);
                let (bp, bm) = (bernoulli(psi), bernoulli(-psi));
                let dg = self.d[k] * self.g[e];
                let ca = x[a + 1 + k].exp();
                let cb = x[b + 1 + k].exp();
                let flux = dg * (ca * bp - cb * bm);
                let d_phi = dg * z * (ca * bernoulli_prime(psi) + cb * bernoulli_prime(-psi));
                let d_ua = dg * ca * bp;
                let d_ub = -dg * cb * bm;
                for (node, sign) in [(e, -1.0), (e + 1, 1.0)] {
                    if node == 0 || node == n - 1 {
                        continue;
                    }
                    let row = 3 * node + 1 + k;
                    res[row] += sign * flux;
                    if let Some(j) = jac.as_deref_mut() {
                        j.add(row, b, sign * d_phi);
                        j.add(row, a, -sign * d_phi);
                        j.add(row, a + 1 + k, sign * d_ua);
                        j.add(row, b + 1 + k, sign * d_ub);
                    }
                }
            }
        }
    }

    /// Sets the boundary unknowns to their exact values.
    pub(crate) fn apply_dirichlet(&self, x: &mut [f64], v: f64) {
        let n = self.nodes();
        x[..3].copy_from_slice(&[v, self.l.ln(), self.l.ln()]);
        x[3 * (n - 1)..].copy_from_slice(&[0.0, self.r.ln(), self.r.ln()]);
    }

    /// Largest scaled residual.
    pub(crate) fn defect(&self, res: &[f64]) -> f64 {
        res.iter()
            .enumerate()
            .map(|(row, r)| (r * self.row_scale(row)).abs())
            .fold(
                0.0,
                |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) },
            )
    }

    fn scaled_norm2(&self, res: &[f64]) -> f64 {
        res.iter()
            .enumerate()
            .map(|(row, r)| (r * self.row_scale(row)).powi(2))
            .sum::<f64>()
    }

    /// Initial iterate linear in `H` between the bath states.
    pub(crate) fn linear_guess(&self, v: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(3 * self.nodes());
        let mut hx = 0.0;
        for i in 0..self.nodes() {
            if i > 0 {
                hx += 1.0 / self.g[i - 1];
            }
            let s = if i + 1 == self.nodes() {
                1.0
            } else {
                hx / self.h1
            };
            let c = self.l + (self.r - self.l) * s;
            x.extend([v * (1.0 - s), c.ln(), c.ln()]);
        }
        x
    }
}

/// Tuning of the damped Newton iteration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub max_iterations: usize,
    /// Defect at which iteration stops early.
    pub target: f64,
    /// Defect a solve must reach to count as converged.
    pub accept: f64,
    /// Largest change of `φ` or `ln c` allowed in one step.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            target: 1e-11,
            accept: 1e-8,
            max_step: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub defect: f64,
    pub iterations: usize,
}

pub(crate) fn newton(
    disc: &Discretization,
    x0: Vec<f64>,
    v: f64,
    q0: f64,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = x0.len();
    let mut x = x0;
    disc.apply_dirichlet(&mut x, v);
    let mut res = vec![0.0; n];
    let mut trial_res = vec![0.0; n];
    let mut jac = BandMatrix::new(n, 5, 5);
    let mut trial = vec![0.0; n];

    disc.assemble(&x, v, q0, &mut res, None);
    let mut norm = disc.scaled_norm2(&res);
    let mut defect = disc.defect(&res);
    let mut iterations = 0;

    while defect > opts.target && iterations < opts.max_iterations {
        iterations += 1;
        disc.assemble(&x, v, q0, &mut res, Some(&mut jac));
        let mut step: Vec<f64> = res.iter().map(|r| -r).collect();
        if !jac.solve_in_place(&mut step) {
            break;
        }
        let biggest = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if !biggest.is_finite() {
            break;
        }
        let mut lambda = (opts.max_step / biggest).min(1.0);
        let mut accepted = false;
        while lambda >= 1e-6 {
            for ((t, xi), si) in trial.iter_mut().zip(&x).zip(&step) {
                *t = xi + lambda * si;
            }
            disc.assemble(&trial, v, q0, &mut trial_res, None);
            let tn = disc.scaled_norm2(&trial_res);
            if tn.is_finite() && tn <= (1.0 - 1e-4 * lambda) * norm {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut res, &mut trial_res);
        norm = disc.scaled_norm2(&res);
        defect = disc.defect(&res);
        // A full step this small means rounding now dominates the residual.
        if lambda == 1.0 && biggest < 1e-14 {
            break;
        }
    }

    // Newton steps leave the boundary rows at rounding level.
    disc.apply_dirichlet(&mut x, v);
    if defect <= opts.accept {
        Ok(NewtonOutcome {
            x,
            defect,
            iterations,
        })
    } else {
        Err(Error::Convergence {
            what: "PNP Newton iteration",
            defect,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChannelGeometry;
    use crate::reduced::{BathConditions, Transport};

    #[test]
    fn bernoulli_is_smooth_across_switch() {
        for &x in &[1e-3 * (1.0 - 1e-12), 1e-3 * (1.0 + 1e-12)] {
            assert!((bernoulli(x) - bernoulli(-x) + x).abs() < 1e-15);
        }
        assert!((bernoulli(0.999e-3) - bernoulli(1.001e-3)).abs() < 1e-6);
        assert_eq!(bernoulli(800.0), 0.0);
        assert!((bernoulli(-800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_derivative_matches_differences() {
        for &x in &[-40.0, -3.0, -1e-2, -5e-4, 0.0, 7e-4, 0.3, 5.0, 60.0] {
            let h = 1e-6 * (1.0 + f64::abs(x));
            let fd = (bernoulli(x + h) - bernoulli(x - h)) / (2.0 * h);
            assert!(
                (fd - bernoulli_prime(x)).abs() < 1e-7 * (1.0 + fd.abs()),
                "{x}: {fd} {}",
                bernoulli_prime(x)
            );
        }
        assert!(bernoulli_prime(900.0).is_finite() && bernoulli_prime(-900.0).is_finite());
    }

    #[test]
    fn jacobian_matches_differences() {
        let problem = BvpProblem {
            q0: 1.5,
            bath: BathConditions::new(0.3, 1.2, 2.0).unwrap(),
            geometry: ChannelGeometry::uniform(0.3, 0.6).unwrap(),
            transport: Transport::new(1.0, 2.0).unwrap(),
            mesh: Default::default(),
        };
        let mesh: Vec<f64> = vec![0.0, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8, 1.0];
        let disc = Discretization::new(0.05, mesh, &problem).unwrap();
        let n = 3 * disc.nodes();
        let x: Vec<f64> = (0..n).map(|i| 0.1 * ((i * 7 % 5) as f64) - 0.2).collect();
        let mut res = vec![0.0; n];
        let mut jac = BandMatrix::new(n, 5, 5);
        disc.assemble(&x, 0.4, 1.5, &mut res, Some(&mut jac));
        // Probe J e_c column by column through a solve-free product.
        for c in 0..n {
            let h = 1e-6;
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            let (mut rp, mut rm) = (vec![0.0; n], vec![0.0; n]);
            disc.assemble(&xp, 0.4, 1.5, &mut rp, None);
            disc.assemble(&xm, 0.4, 1.5, &mut rm, None);
            for r in 0..n {
                let fd = (rp[r] - rm[r]) / (2.0 * h);
                let an = if c + 5 >= r && c <= r + 5 {
                    jac.get(r, c)
                } else {
                    0.0
                };
                assert!(
                    (fd - an).abs() < 1e-6 * (1.0 + fd.abs()),
                    "row {r} col {c}: {fd} vs {an}"
                );
            }
        }
    }
}
