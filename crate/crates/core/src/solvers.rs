//! Root finders and closed forms built on the reduced system.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;
use crate::reduced::{
    check_theta, g1, g2, partials, BathConditions, ReducedSetup, ReducedState, Transport,
};

/// Relative offset of the `A` bracket from the ends of `(0, A_M)`.
const BRACKET_DELTA: f64 = 1e-12;
/// Bisection stops once the bracket is narrower than this fraction of `A_M`.
const A_WIDTH: f64 = 1e-14;
const NEWTON_POLISH_STEPS: usize = 5;
/// Largest exponent `k` tried when expanding `[-2^k, 2^k]` for `Q_rev`.
const QREV_MAX_DOUBLINGS: i32 = 60;
const QREV_SCAN_POINTS: usize = 512;
/// Required `|G1 - z1 V|` at the returned `Q_rev`.
pub const QREV_RESIDUAL_TOL: f64 = 1e-9;

/// Everything known about the zero-current state at one `(Q0, D1, D2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveResult {
    pub q0: f64,
    pub theta: f64,
    pub d1: f64,
    pub d2: f64,
    pub a: f64,
    pub b: f64,
    pub sa: f64,
    pub sb: f64,
    pub vrev: f64,
    pub j: f64,
    pub residual_g2: f64,
    pub iterations: usize,
}

impl SolveResult {
    /// Checks `|Vrev| < |ln(l/r)|/z1` and `sign(J) = sign(l - r)`.
    pub fn check_bounds(&self, bath: &BathConditions) -> Result<()> {
        let bound = bath.log_ratio().abs() / bath.z1;
        if bath.l == bath.r {
            if self.vrev.abs() > 1e-14 || self.j != 0.0 {
                return Err(Error::Invariant(format!(
                    "equal baths must give Vrev = 0 and J = 0, got {} and {}",
                    self.vrev, self.j
                )));
            }
            return Ok(());
        }
        if !(self.vrev.abs() < bound * (1.0 + 1e-14)) {
            return Err(Error::Invariant(format!(
                "|Vrev| = {} is not below |ln(l/r)|/z1 = {bound} at Q0 = {}",
                self.vrev.abs(),
                self.q0
            )));
        }
        if self.j * (bath.l - bath.r) <= 0.0 {
            return Err(Error::Invariant(format!(
                "J = {} does not carry the sign of l - r at Q0 = {}",
                self.j, self.q0
            )));
        }
        Ok(())
    }
}

/// Solves `G2(A, Q0, θ) = 0` on `(0, A_M)` and returns the state at the root
/// together with the number of iterations spent.
pub fn solve_state(setup: &ReducedSetup, q0: f64, theta: f64) -> Result<(ReducedState, usize)> {
    check_theta(theta)?;
    if !q0.is_finite() {
        return Err(Error::Domain {
            what: "Q0",
            value: q0,
            domain: "finite reals",
        });
    }
    if setup.l == setup.r {
        return Ok((ReducedState::unchecked(setup, setup.l, q0), 0));
    }
    let a_max = setup.a_max();
    let mut lo = BRACKET_DELTA * setup.l.min(setup.r).min(a_max);
    let mut hi = a_max * (1.0 - BRACKET_DELTA);
    let f = |a: f64| g2(&ReducedState::unchecked(setup, a, q0), theta);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Bracket {
            what: "A",
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }

    let mut iterations = 0;
    while hi - lo > A_WIDTH * a_max {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut a = 0.5 * (lo + hi);
    let mut state = ReducedState::unchecked(setup, a, q0);
    let mut res = g2(&state, theta);
    for _ in 0..NEWTON_POLISH_STEPS {
        if res == 0.0 {
            break;
        }
        let slope = partials(&state, theta).d_g2_d_a;
        let next = a - res / slope;
        if !(next >= lo && next <= hi) {
            break;
        }
        let cand = ReducedState::unchecked(setup, next, q0);
        let cand_res = g2(&cand, theta);
        iterations += 1;
        if cand_res.abs() >= res.abs() {
            break;
        }
        a = next;
        state = cand;
        res = cand_res;
    }
    Ok((state, iterations))
}

/// The unique `A` in `(0, A_M)` with `G2(A, Q0, θ) = 0`.
pub fn solve_a(q0: f64, theta: f64, bath: &BathConditions, geom: &ChannelGeometry) -> Result<f64> {
    let setup = ReducedSetup::new(bath, geom);
    solve_state(&setup, q0, theta).map(|(s, _)| s.a)
}

/// `V_rev(Q0, θ) = G1(A(Q0, θ), Q0, θ)/z1`.
pub fn reversal_potential(
    q0: f64,
    theta: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
) -> Result<f64> {
    let setup = ReducedSetup::new(bath, geom);
    let (state, _) = solve_state(&setup, q0, theta)?;
    Ok(g1(&state, theta) / bath.z1)
}

fn flux_from_a(a: f64, transport: &Transport, setup: &ReducedSetup, h1: f64) -> f64 {
    let (d1, d2) = (transport.d1, transport.d2);
    -2.0 * d1 * d2 * (a - setup.l) / ((d1 + d2) * setup.alpha * h1)
}

/// The common flux `J = J1 = J2` at zero current.
pub fn zero_current_flux(
    q0: f64,
    transport: &Transport,
    bath: &BathConditions,
    geom: &ChannelGeometry,
) -> Result<f64> {
    let setup = ReducedSetup::new(bath, geom);
    let (state, _) = solve_state(&setup, q0, transport.theta())?;
    Ok(flux_from_a(state.a, transport, &setup, geom.h1()))
}

/// Full zero-current solution at one parameter point.
pub fn solve(
    q0: f64,
    transport: &Transport,
    bath: &BathConditions,
    geom: &ChannelGeometry,
) -> Result<SolveResult> {
    let setup = ReducedSetup::new(bath, geom);
    let theta = transport.theta();
    let (state, iterations) = solve_state(&setup, q0, theta)?;
    Ok(SolveResult {
        q0,
        theta,
        d1: transport.d1,
        d2: transport.d2,
        a: state.a,
        b: state.b,
        sa: state.sa,
        sb: state.sb,
        vrev: g1(&state, theta) / bath.z1,
        j: flux_from_a(state.a, transport, &setup, geom.h1()),
        residual_g2: g2(&state, theta).abs(),
        iterations,
    })
}

/// `V_rev(Q0, θ) ≈ V0 + slope · Q0` near `Q0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallChargeExpansion {
    pub v0: f64,
    pub slope: f64,
}

pub fn vrev_small_q0(
    theta: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
) -> SmallChargeExpansion {
    let (l, r, z) = (bath.l, bath.r, bath.z1);
    let (alpha, beta) = (geom.alpha(), geom.beta());
    let a0 = (1.0 - alpha) * l + alpha * r;
    let b0 = (1.0 - beta) * l + beta * r;
    SmallChargeExpansion {
        v0: theta / z * (l / r).ln(),
        slope: (1.0 - theta * theta) / (z * z) * (beta - alpha) * (l - r) / (a0 * b0),
    }
}

/// Goldman–Hodgkin–Katz reversal potential, independent of charge and geometry.
pub fn ghk_reversal(theta: f64, bath: &BathConditions) -> f64 {
    let (l, r) = (bath.l, bath.r);
    (((1.0 - theta) * r + (1.0 + theta) * l) / ((1.0 - theta) * l + (1.0 + theta) * r)).ln()
        / bath.z1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversalChargeResult {
    pub qrev: f64,
    pub v_target: f64,
    pub residual_g1: f64,
    pub bracket: (f64, f64),
    /// Set when the coarse scan saw more than one sign change of `G1 - z1 V`.
    pub multiplicity_flag: bool,
    /// Set for `l = r, V = 0`, where every `Q0` is a reversal charge.
    pub degenerate: bool,
}

/// Whether a reversal permanent charge exists for `V`: `|z1 V| < |ln(l/r)|`.
pub fn reversal_charge_exists(v: f64, bath: &BathConditions) -> bool {
    (bath.z1 * v).abs() < bath.log_ratio().abs()
}

/// Finds `Q0` with `V_rev(Q0, θ) = V`.
pub fn reversal_charge(
    v: f64,
    theta: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
) -> Result<ReversalChargeResult> {
    check_theta(theta)?;
    if bath.l == bath.r {
        if v == 0.0 {
            return Ok(ReversalChargeResult {
                qrev: 0.0,
                v_target: v,
                residual_g1: 0.0,
                bracket: (0.0, 0.0),
                multiplicity_flag: false,
                degenerate: true,
            });
        }
        return Err(Error::DegenerateBaths(format!(
            "no reversal charge exists for V = {v} when ln(l/r) = 0"
        )));
    }
    if !reversal_charge_exists(v, bath) {
        return Err(Error::NoReversalCharge {
            z1v: (bath.z1 * v).abs(),
            bound: bath.log_ratio().abs(),
        });
    }

    let setup = ReducedSetup::new(bath, geom);
    let z1v = bath.z1 * v;
    let f = |q: f64| -> Result<f64> {
        let (state, _) = solve_state(&setup, q, theta)?;
        Ok(g1(&state, theta) - z1v)
    };

    let f0 = f(0.0)?;
    let (mut lo, mut hi, mut f_lo, mut f_hi) = (-1.0, 1.0, f(-1.0)?, f(1.0)?);
    let mut k = 0;
    while f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        k += 1;
        if k > QREV_MAX_DOUBLINGS {
            return Err(Error::Bracket {
                what: "Q_rev",
                lo,
                hi,
                f_lo,
                f_hi,
            });
        }
        lo *= 2.0;
        hi *= 2.0;
        f_lo = f(lo)?;
        f_hi = f(hi)?;
    }
    // Narrow to the half containing the root before bisecting.
    if f0 == 0.0 {
        lo = 0.0;
        hi = 0.0;
    } else if f0.signum() == f_lo.signum() {
        lo = 0.0;
        f_lo = f0;
    } else {
        hi = 0.0;
        f_hi = f0;
    }

    let mut q = if f_lo == 0.0 {
        lo
    } else if f_hi == 0.0 {
        hi
    } else {
        0.5 * (lo + hi)
    };
    if f_lo != 0.0 && f_hi != 0.0 && lo != hi {
        for _ in 0..400 {
            q = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * q.abs().max(1.0) {
                break;
            }
            let fq = f(q)?;
            if fq == 0.0 {
                lo = q;
                hi = q;
                break;
            }
            if fq.signum() == f_lo.signum() {
                lo = q;
                f_lo = fq;
            } else {
                hi = q;
            }
        }
    }
    let residual = f(q)?.abs();
    if residual > QREV_RESIDUAL_TOL {
        return Err(Error::Convergence {
            what: "reversal charge bisection",
            defect: residual,
        });
    }

    let top = (2f64.powi(k)).max(1e3);
    let multiplicity_flag = count_sign_changes(&f, 1e-3, top)? > 1;
    Ok(ReversalChargeResult {
        qrev: q,
        v_target: v,
        residual_g1: residual,
        bracket: (lo, hi),
        multiplicity_flag,
        degenerate: false,
    })
}

/// Sign changes of `f` over `±` log-spaced magnitudes in `[small, large]`.
fn count_sign_changes<F: Fn(f64) -> Result<f64>>(f: &F, small: f64, large: f64) -> Result<usize> {
    let n = QREV_SCAN_POINTS;
    let ratio = (large / small).ln() / (n - 1) as f64;
    let mags: Vec<f64> = (0..n).map(|i| small * (ratio * i as f64).exp()).collect();
    let grid = mags.iter().rev().map(|m| -m).chain(mags.iter().copied());
    let mut changes = 0;
    let mut prev: f64 = 0.0;
    for q in grid {
        let v = f(q)?;
        if v != 0.0 {
            if prev != 0.0 && v.signum() != prev.signum() {
                changes += 1;
            }
            prev = v;
        }
    }
    Ok(changes)
}

/// Which input a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Q0,
    /// Varies `θ` keeping `D1` fixed, so `D2 = D1 (1+θ)/(1-θ)`.
    Theta,
    /// Varies `V` and solves for the reversal charge.
    V,
}

/// Inputs held fixed during a sweep; the swept one is ignored.
#[derive(Debug, Clone)]
pub struct SweepInputs {
    pub q0: f64,
    pub transport: Transport,
    pub bath: BathConditions,
    pub geometry: ChannelGeometry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Solve(SolveResult),
    Charge(ReversalChargeResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<SweepOutcome>,
}

/// Evaluates one row per grid value, concurrently, keeping grid order.
pub fn sweep(parameter: SweepParameter, grid: &[f64], fixed: &SweepInputs) -> Vec<SweepRow> {
    grid.par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: sweep_point(parameter, value, fixed),
        })
        .collect()
}

fn sweep_point(parameter: SweepParameter, value: f64, fixed: &SweepInputs) -> Result<SweepOutcome> {
    let (bath, geom) = (&fixed.bath, &fixed.geometry);
    match parameter {
        SweepParameter::Q0 => solve(value, &fixed.transport, bath, geom).map(SweepOutcome::Solve),
        SweepParameter::Theta => {
            let transport = Transport::from_theta(fixed.transport.d1, value)?;
            solve(fixed.q0, &transport, bath, geom).map(SweepOutcome::Solve)
        }
        SweepParameter::V => {
            reversal_charge(value, fixed.transport.theta(), bath, geom).map(SweepOutcome::Charge)
        }
    }
}
