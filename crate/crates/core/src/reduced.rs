//! The two-equation zero-current system `G1(A, Q0, θ) = z1 V`, `G2(A, Q0, θ) = 0`.
//!
//! `A` is the geometric-mean concentration at the left junction and `B` the one
//! at the right junction, tied to `A` by the flux balance
//! `B = (1-β)/α (l - A) + r`. Every logarithm of a ratio is evaluated through
//! `ln_1p` of a cancellation-free difference, so the functions stay accurate
//! near `A = B` and for `|Q0|` in the millions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;

/// Bath concentrations `l` (left, x = 0) and `r` (right, x = 1) shared by both
/// species, with cation valence `z1 > 0` and anion valence `-z1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathConditions {
    pub l: f64,
    pub r: f64,
    pub z1: f64,
}

impl BathConditions {
    pub fn new(l: f64, r: f64, z1: f64) -> Result<Self> {
        for (what, v) in [("l", l), ("r", r), ("z1", z1)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain {
                    what,
                    value: v,
                    domain: "(0, inf)",
                });
            }
        }
        Ok(Self { l, r, z1 })
    }

    /// `ln(l/r)`.
    pub fn log_ratio(&self) -> f64 {
        (self.l / self.r).ln()
    }
}

/// Diffusion coefficients of the cation (`d1`) and anion (`d2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    pub d1: f64,
    pub d2: f64,
}

impl Transport {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        for (what, v) in [("D1", d1), ("D2", d2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain {
                    what,
                    value: v,
                    domain: "(0, inf)",
                });
            }
        }
        Ok(Self { d1, d2 })
    }

    /// Transport with cation diffusivity `d1` and asymmetry `theta`.
    pub fn from_theta(d1: f64, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Self::new(d1, d1 * (1.0 + theta) / (1.0 - theta))
    }

    /// `θ = (D2 - D1)/(D2 + D1)`.
    pub fn theta(&self) -> f64 {
        (self.d2 - self.d1) / (self.d2 + self.d1)
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > -1.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "theta",
            value: theta,
            domain: "(-1, 1)",
        })
    }
}

/// Parameters the reduced system depends on besides `(A, Q0, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSetup {
    pub l: f64,
    pub r: f64,
    pub z1: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ReducedSetup {
    pub fn new(bath: &BathConditions, geom: &ChannelGeometry) -> Self {
        Self {
            l: bath.l,
            r: bath.r,
            z1: bath.z1,
            alpha: geom.alpha(),
            beta: geom.beta(),
        }
    }

    pub fn from_factors(bath: &BathConditions, alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < beta && beta < 1.0) {
            return Err(Error::Configuration(format!(
                "geometry factors must satisfy 0 < alpha < beta < 1 (got {alpha}, {beta})"
            )));
        }
        Ok(Self {
            l: bath.l,
            r: bath.r,
            z1: bath.z1,
            alpha,
            beta,
        })
    }

    /// `B` as a function of `A`.
    pub fn b_of(&self, a: f64) -> f64 {
        b_of_a(a, self.l, self.r, self.alpha, self.beta)
    }

    /// Largest admissible `A` (where `B` vanishes).
    pub fn a_max(&self) -> f64 {
        self.l + self.alpha * self.r / (1.0 - self.beta)
    }

    /// Largest admissible `B` (where `A` vanishes).
    pub fn b_max(&self) -> f64 {
        (1.0 - self.beta) * self.l / self.alpha + self.r
    }

    /// The value where `A = B`.
    pub fn a_star(&self) -> f64 {
        ((1.0 - self.beta) * self.l + self.alpha * self.r) / (1.0 - self.beta + self.alpha)
    }

    /// `A(0, θ) = (1-α) l + α r`.
    pub fn a_zero_charge(&self) -> f64 {
        (1.0 - self.alpha) * self.l + self.alpha * self.r
    }

    /// `B(0, θ) = (1-β) l + β r`.
    pub fn b_zero_charge(&self) -> f64 {
        (1.0 - self.beta) * self.l + self.beta * self.r
    }

    /// Magnitude of the linear part of `N`, used to scale `G2` residuals.
    pub fn n_scale(&self) -> f64 {
        (self.beta - self.alpha) / self.alpha * self.z1 * self.l
    }
}

/// `B = (1-β)/α (l - A) + r`.
pub fn b_of_a(a: f64, l: f64, r: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 - beta) / alpha * (l - a) + r
}

/// `S + t Q0` with `S = sqrt(Q0² + z1² X²)`, free of cancellation when `t Q0 < 0`.
fn shifted(s: f64, zx: f64, q0: f64, t: f64) -> f64 {
    if t * q0 >= 0.0 {
        s + t * q0
    } else {
        let aq = q0.abs();
        zx * zx / (s + aq) + aq * (1.0 - t.abs())
    }
}

/// A candidate `A` together with everything derived from it at fixed `Q0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub a: f64,
    pub b: f64,
    pub q0: f64,
    /// `sqrt(Q0² + z1² A²)`
    pub sa: f64,
    /// `sqrt(Q0² + z1² B²)`
    pub sb: f64,
    /// `(β-α)/α z1 (A - l) + Sa - Sb`
    pub n: f64,
    /// `Sa - Sb`, evaluated as `z1² (A² - B²)/(Sa + Sb)`.
    pub s_diff: f64,
    pub setup: ReducedSetup,
}

impl ReducedState {
    /// Fails unless both `A` and `B(A)` are positive.
    pub fn new(setup: &ReducedSetup, a: f64, q0: f64) -> Result<Self> {
        let b = setup.b_of(a);
        if !(a > 0.0) {
            return Err(Error::Domain {
                what: "A",
                value: a,
                domain: "(0, A_M)",
            });
        }
        if !(b > 0.0) {
            return Err(Error::Domain {
                what: "B",
                value: b,
                domain: "(0, B_M)",
            });
        }
        if !q0.is_finite() {
            return Err(Error::Domain {
                what: "Q0",
                value: q0,
                domain: "finite reals",
            });
        }
        Ok(Self::unchecked(setup, a, q0))
    }

    pub(crate) fn unchecked(setup: &ReducedSetup, a: f64, q0: f64) -> Self {
        let z = setup.z1;
        let b = setup.b_of(a);
        let sa = q0.hypot(z * a);
        let sb = q0.hypot(z * b);
        let s_diff = z * z * (a - b) * (a + b) / (sa + sb);
        let n = (setup.beta - setup.alpha) / setup.alpha * z * (a - setup.l) + s_diff;
        Self {
            a,
            b,
            q0,
            sa,
            sb,
            n,
            s_diff,
            setup: *setup,
        }
    }

    /// `Sa + t Q0` for `|t| ≤ 1`.
    pub fn sa_shifted(&self, t: f64) -> f64 {
        shifted(self.sa, self.setup.z1 * self.a, self.q0, t)
    }

    /// `Sb + t Q0` for `|t| ≤ 1`.
    pub fn sb_shifted(&self, t: f64) -> f64 {
        shifted(self.sb, self.setup.z1 * self.b, self.q0, t)
    }

    /// `ln((Sa + t Q0)/(Sb + t Q0))`.
    pub fn log_ratio(&self, t: f64) -> f64 {
        log_of_ratio(self.s_diff, self.sa_shifted(t), self.sb_shifted(t))
    }

    /// `ln(A/B)`.
    pub fn log_a_over_b(&self) -> f64 {
        log_of_ratio(self.a - self.b, self.a, self.b)
    }
}

/// `ln(p/q)` given `d = p - q` computed without cancellation.
fn log_of_ratio(d: f64, p: f64, q: f64) -> f64 {
    if d.abs() <= 0.5 * q {
        (d / q).ln_1p()
    } else {
        (p / q).ln()
    }
}

/// `G1(A, Q0, θ)`; equals `z1 V` on the zero-current branch.
pub fn g1(state: &ReducedState, theta: f64) -> f64 {
    let s = &state.setup;
    theta * (state.log_ratio(theta) + (s.l / s.r).ln()) - (1.0 + theta) * state.log_a_over_b()
        + state.log_ratio(-1.0)
}

/// `G2(A, Q0, θ)`; strictly decreasing in `A`.
pub fn g2(state: &ReducedState, theta: f64) -> f64 {
    theta * state.q0 * state.log_ratio(theta) - state.n
}

/// `g(X) = ln(X + θ Q0) + θ Q0 / (X + θ Q0)`, increasing for `X > 0`.
pub fn g_aux(x: f64, theta: f64, q0: f64) -> f64 {
    let p = x + theta * q0;
    p.ln() + theta * q0 / p
}

/// All first partial derivatives of `G1` and `G2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub d_g1_d_a: f64,
    pub d_g1_d_q0: f64,
    pub d_g1_d_theta: f64,
    pub d_g2_d_a: f64,
    pub d_g2_d_q0: f64,
    pub d_g2_d_theta: f64,
}

pub fn partials(state: &ReducedState, theta: f64) -> Partials {
    let s = &state.setup;
    let z = s.z1;
    let q0 = state.q0;
    let pa = state.sa_shifted(theta);
    let pb = state.sb_shifted(theta);
    let one_m_t2 = 1.0 - theta * theta;
    let slope_b = (1.0 - s.beta) / s.alpha;
    let log_ratio = state.log_ratio(theta);
    // g(Sa) - g(Sb), again without forming the difference of two logarithms.
    let g_diff = log_ratio - theta * q0 * state.s_diff / (pa * pb);
    let cross = one_m_t2 * state.s_diff / (pa * pb);

    Partials {
        d_g1_d_a: one_m_t2 * q0 * (1.0 / (state.a * pa) + slope_b / (state.b * pb)),
        d_g1_d_q0: cross,
        d_g1_d_theta: g_diff + (s.l / s.r).ln() - state.log_a_over_b(),
        d_g2_d_a: -slope_b * z * z * state.b / pb
            - z * z * state.a / pa
            - (s.beta - s.alpha) / s.alpha * z,
        d_g2_d_q0: theta * log_ratio + q0 * cross,
        d_g2_d_theta: q0 * g_diff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup(l: f64, r: f64, z1: f64) -> ReducedSetup {
        let bath = BathConditions::new(l, r, z1).unwrap();
        ReducedSetup::from_factors(&bath, 1.0 / 3.0, 2.0 / 3.0).unwrap()
    }

    // Straight transcription of the defining formulas, without any of the
    // cancellation-avoiding rewrites.
    fn g1_naive(s: &ReducedSetup, a: f64, q0: f64, theta: f64) -> f64 {
        let b = (1.0 - s.beta) / s.alpha * (s.l - a) + s.r;
        let sa = (q0 * q0 + s.z1 * s.z1 * a * a).sqrt();
        let sb = (q0 * q0 + s.z1 * s.z1 * b * b).sqrt();
        theta * (((sa + theta * q0) / (sb + theta * q0)).ln() + (s.l / s.r).ln())
            - (1.0 + theta) * (a / b).ln()
            + ((sa - q0) / (sb - q0)).ln()
    }

    fn g2_naive(s: &ReducedSetup, a: f64, q0: f64, theta: f64) -> f64 {
        let b = (1.0 - s.beta) / s.alpha * (s.l - a) + s.r;
        let sa = (q0 * q0 + s.z1 * s.z1 * a * a).sqrt();
        let sb = (q0 * q0 + s.z1 * s.z1 * b * b).sqrt();
        let n = (s.beta - s.alpha) / s.alpha * s.z1 * (a - s.l) + sa - sb;
        theta * q0 * ((sa + theta * q0) / (sb + theta * q0)).ln() - n
    }

    #[test]
    fn b_of_a_examples() {
        assert_eq!(b_of_a(0.2, 0.2, 1.0, 1.0 / 3.0, 2.0 / 3.0), 1.0);
        let s = setup(0.2, 1.0, 1.0);
        assert_relative_eq!(s.b_of(s.a_star()), s.a_star(), max_relative = 1e-15);
        assert_relative_eq!(s.b_of(0.3), 0.9, max_relative = 1e-15);
    }

    #[test]
    fn g2_matches_transcription() {
        let s = setup(0.2, 1.0, 1.0);
        let st = ReducedState::new(&s, 0.3, 2.0).unwrap();
        assert_relative_eq!(
            g2(&st, 0.5),
            g2_naive(&s, 0.3, 2.0, 0.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            g1(&st, 0.5),
            g1_naive(&s, 0.3, 2.0, 0.5),
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_charge_g2_is_linear() {
        let s = setup(0.2, 1.0, 1.0);
        for a in [0.25, 0.4, 0.6] {
            let st = ReducedState::new(&s, a, 0.0).unwrap();
            let expect = -(s.beta - s.alpha) / s.alpha * (a - s.l) - (a - st.b);
            assert_relative_eq!(g2(&st, 0.3), expect, max_relative = 1e-14);
        }
        let st = ReducedState::new(&s, s.a_zero_charge(), 0.0).unwrap();
        assert!(g2(&st, 0.3).abs() < 1e-15);
    }

    #[test]
    fn symmetric_baths_vanish() {
        let s = setup(0.7, 0.7, 2.0);
        let st = ReducedState::new(&s, 0.7, 3.5).unwrap();
        assert_eq!(g1(&st, 0.4), 0.0);
        assert_eq!(g2(&st, 0.4), 0.0);
    }

    #[test]
    fn domain_errors() {
        let s = setup(0.2, 1.0, 1.0);
        assert!(ReducedState::new(&s, 0.0, 1.0).is_err());
        assert!(ReducedState::new(&s, s.a_max() * 1.01, 1.0).is_err());
    }

    #[test]
    fn zero_charge_partials() {
        let s = setup(0.2, 1.0, 1.0);
        let a0 = s.a_zero_charge();
        let st = ReducedState::new(&s, a0, 0.0).unwrap();
        let theta = 0.4;
        let p = partials(&st, theta);
        assert_eq!(p.d_g1_d_a, 0.0);
        let b0 = s.b_zero_charge();
        let expect = (1.0 - theta * theta) / s.z1 * (a0 - b0) / (a0 * b0);
        assert_relative_eq!(p.d_g1_d_q0, expect, max_relative = 1e-14);
    }

    #[test]
    fn large_positive_charge_keeps_digits() {
        // Sa - Q0 would lose every digit if formed directly at Q0 = 1e8.
        let s = setup(0.2, 1.0, 1.0);
        let st = ReducedState::new(&s, 0.3, 1e8).unwrap();
        let expect = (0.3f64 / st.b).powi(2).ln() + ((st.sb + 1e8) / (st.sa + 1e8)).ln();
        assert_relative_eq!(st.log_ratio(-1.0), expect, max_relative = 1e-12);
    }

    #[test]
    fn theta_from_transport() {
        let t = Transport::new(1.0, 3.0).unwrap();
        assert_eq!(t.theta(), 0.5);
        let u = Transport::from_theta(2.0, 0.5).unwrap();
        assert_relative_eq!(u.d2, 6.0, max_relative = 1e-15);
        assert!(Transport::from_theta(1.0, 1.0).is_err());
        assert!(Transport::new(0.0, 1.0).is_err());
    }

    #[test]
    fn extreme_ratios_stay_finite() {
        // A near 0 makes Sa/Sb ~ 1e-16, where ln_1p(Sa/Sb - 1) rounds to -inf.
        let s = ReducedSetup::from_factors(
            &BathConditions::new(13.27, 0.0668, 1.0).unwrap(),
            0.0277,
            0.2177,
        )
        .unwrap();
        let a = 1e-12 * 0.0668;
        for q0 in [0.0, 1e-14, -1e-14] {
            let st = ReducedState::new(&s, a, q0).unwrap();
            let expect = ((st.sa + 0.4 * q0) / (st.sb + 0.4 * q0)).ln();
            assert_relative_eq!(st.log_ratio(0.4), expect, max_relative = 1e-14);
            assert_relative_eq!(st.log_a_over_b(), (a / st.b).ln(), max_relative = 1e-14);
            assert!(g2(&st, 0.0).is_finite() && g1(&st, 0.4).is_finite());
        }
    }
}
