//! The full singular orbit behind a zero-current solution: junction values of
//! potential and concentrations, the layer limits on either side of each
//! junction, the flux and the slow-time length of the charged segment.
//!
//! [`matching_residual`] substitutes a reconstruction back into the original
//! eleven matching equations and their definitional companions. It shares no
//! algebra with the reduction, so a small residual certifies the whole chain
//! from `(A, Q0, θ, V)` to the orbit.

use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;
use crate::reduced::{BathConditions, ReducedSetup, ReducedState, Transport};
use crate::solvers;

/// Scalars the matching equations depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingInputs {
    pub q0: f64,
    pub v: f64,
    pub l: f64,
    pub r: f64,
    pub z1: f64,
    pub d1: f64,
    pub d2: f64,
    /// `H(x1)`, `H(x2)` and `H(1)`.
    pub h_x1: f64,
    pub h_x2: f64,
    pub h1: f64,
}

impl MatchingInputs {
    pub fn new(
        q0: f64,
        v: f64,
        bath: &BathConditions,
        geom: &ChannelGeometry,
        transport: &Transport,
    ) -> Self {
        Self {
            q0,
            v,
            l: bath.l,
            r: bath.r,
            z1: bath.z1,
            d1: transport.d1,
            d2: transport.d2,
            h_x1: geom.h_x1(),
            h_x2: geom.h_x2(),
            h1: geom.h1(),
        }
    }
}

/// Junction values of the singular orbit. Suffix `m`/`p` marks the limit from
/// the left/right of the junction: `c1_1m` is `c1` just left of `x1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalProfile {
    pub phi1: f64,
    pub phi2: f64,
    pub c1_1: f64,
    pub c2_1: f64,
    pub c1_2: f64,
    pub c2_2: f64,
    pub c1_1m: f64,
    pub c2_1m: f64,
    pub c1_1p: f64,
    pub c2_1p: f64,
    pub c1_2m: f64,
    pub c2_2m: f64,
    pub c1_2p: f64,
    pub c2_2p: f64,
    pub phi_1m: f64,
    pub phi_1p: f64,
    pub phi_2m: f64,
    pub phi_2p: f64,
    pub j1: f64,
    pub ystar: f64,
}

impl InternalProfile {
    /// Labeled fields in a fixed order.
    pub fn fields(&self) -> [(&'static str, f64); 20] {
        [
            ("phi1", self.phi1),
            ("phi2", self.phi2),
            ("c1_1", self.c1_1),
            ("c2_1", self.c2_1),
            ("c1_2", self.c1_2),
            ("c2_2", self.c2_2),
            ("c1_1m", self.c1_1m),
            ("c2_1m", self.c2_1m),
            ("c1_1p", self.c1_1p),
            ("c2_1p", self.c2_1p),
            ("c1_2m", self.c1_2m),
            ("c2_2m", self.c2_2m),
            ("c1_2p", self.c1_2p),
            ("c2_2p", self.c2_2p),
            ("phi_1m", self.phi_1m),
            ("phi_1p", self.phi_1p),
            ("phi_2m", self.phi_2m),
            ("phi_2p", self.phi_2p),
            ("J1", self.j1),
            ("ystar", self.ystar),
        ]
    }
}

/// Builds the orbit from a solution `(A, V)` of the reduced system at `Q0`.
///
/// `Q0` must be bounded away from zero: the junction concentrations inside
/// the charged segment involve `exp((Sa - z1 A)/Q0)`, and the `Q0 = 0` orbit
/// has its own closed form.
pub fn reconstruct(
    a: f64,
    q0: f64,
    v: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
    transport: &Transport,
) -> Result<InternalProfile> {
    let z = bath.z1;
    if !(q0.abs() >= 1e-8 * z * a) {
        return Err(Error::DegenerateProfile(format!(
            "Q0 = {q0} is too close to zero; use the zero-charge closed form"
        )));
    }
    let setup = ReducedSetup::new(bath, geom);
    let st = ReducedState::new(&setup, a, q0)?;
    let (d1, d2) = (transport.d1, transport.d2);
    let (l, r, b) = (bath.l, bath.r, st.b);
    let dsum = d1 + d2;
    let theta = transport.theta();

    // (Sa - z1 A)/Q0 and (Sb - z1 B)/Q0 without cancellation.
    let ea = q0 / (st.sa + z * a);
    let eb = q0 / (st.sb + z * b);
    let sa_m = st.sa_shifted(-1.0);
    let sb_m = st.sb_shifted(-1.0);

    let c1_1 = sa_m / z * ea.exp();
    let c1_2 = sb_m / z * eb.exp();
    let phi1 = v + 2.0 * d2 / (dsum * z) * (z * a).ln() + (d1 - d2) / (dsum * z) * (z * l).ln()
        - sa_m.ln() / z
        - ea / z;
    let phi2 = 2.0 * d2 / (dsum * z) * (z * b).ln() + (d1 - d2) / (dsum * z) * (z * r).ln()
        - sb_m.ln() / z
        - eb / z;
    let j1 = -2.0 * d1 * d2 * (a - l) / (dsum * geom.alpha() * geom.h1());

    let ystar = if j1 != 0.0 {
        d1 * d2 * st.log_ratio(theta) / (z * z * dsum * j1)
    } else {
        (geom.h_x2() - geom.h_x1()) / (2.0 * z * st.sb)
    };

    Ok(InternalProfile {
        phi1,
        phi2,
        c1_1,
        c2_1: a * a / c1_1,
        c1_2,
        c2_2: b * b / c1_2,
        c1_1m: a,
        c2_1m: a,
        c1_1p: sa_m / z,
        c2_1p: st.sa_shifted(1.0) / z,
        c1_2m: sb_m / z,
        c2_2m: st.sb_shifted(1.0) / z,
        c1_2p: b,
        c2_2p: b,
        phi_1m: v - (d1 - d2) / (z * dsum) * st.a.ln_1p_ratio(l),
        phi_1p: phi1 + ea / z,
        phi_2m: phi2 + eb / z,
        phi_2p: (d1 - d2) / (z * dsum) * r.ln_1p_ratio(b),
        j1,
        ystar,
    })
}

trait LogRatio {
    fn ln_1p_ratio(self, den: f64) -> f64;
}

impl LogRatio for f64 {
    /// `ln(self/den)` evaluated as `ln_1p((self - den)/den)`.
    fn ln_1p_ratio(self, den: f64) -> f64 {
        ((self - den) / den).ln_1p()
    }
}

/// Solves the reduced system at `(Q0, D1, D2)` and reconstructs its orbit.
pub fn reconstruct_solved(
    q0: f64,
    bath: &BathConditions,
    geom: &ChannelGeometry,
    transport: &Transport,
) -> Result<(InternalProfile, MatchingInputs)> {
    let s = solvers::solve(q0, transport, bath, geom)?;
    let p = reconstruct(s.a, q0, s.vrev, bath, geom, transport)?;
    Ok((p, MatchingInputs::new(q0, s.vrev, bath, geom, transport)))
}

/// Absolute residual of every matching equation, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResiduals {
    pub entries: Vec<(&'static str, f64)>,
}

impl MatchingResiduals {
    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    /// The equation with the largest residual.
    pub fn worst(&self) -> Option<(&'static str, f64)> {
        self.entries
            .iter()
            .copied()
            .max_by(|x, y| x.1.total_cmp(&y.1))
    }
}

/// Plugs `p` into the eleven matching equations and the definitional
/// relations for the layer limits. NaN residuals are reported as infinite.
pub fn matching_residual(p: &InternalProfile, inp: &MatchingInputs) -> MatchingResiduals {
    let z = inp.z1;
    let q2 = 2.0 * inp.q0;
    let (d1, d2) = (inp.d1, inp.d2);
    let dsum = d1 + d2;
    let jd = p.j1 / (d1 * d2);

    let t1m = p.phi1 - p.phi_1m;
    let t1p = p.phi1 - p.phi_1p;
    let t2p = p.phi2 - p.phi_2p;
    let t2m = p.phi2 - p.phi_2m;
    let decay = (-dsum / (d1 * d2) * z * z * p.j1 * p.ystar).exp();

    let raw = [
        (
            "m1 layer x1-",
            p.c1_1 * (z * t1m).exp() - p.c2_1 * (-z * t1m).exp(),
        ),
        (
            "m2 layer x2+",
            p.c1_2 * (z * t2p).exp() - p.c2_2 * (-z * t2p).exp(),
        ),
        (
            "m3 charge x1+",
            z * p.c1_1 * (z * t1p).exp() - z * p.c2_1 * (-z * t1p).exp() + q2,
        ),
        (
            "m4 charge x2-",
            z * p.c1_2 * (z * t2m).exp() - z * p.c2_2 * (-z * t2m).exp() + q2,
        ),
        (
            "m5 pressure x1",
            2.0 * p.c1_1m - (p.c1_1 * (z * t1p).exp() + p.c2_1 * (-z * t1p).exp() + q2 * t1p),
        ),
        (
            "m6 pressure x2",
            2.0 * p.c1_2p - (p.c1_2 * (z * t2m).exp() + p.c2_2 * (-z * t2m).exp() + q2 * t2m),
        ),
        (
            "m7 flux left",
            jd + 2.0 * (p.c1_1m - inp.l) / (dsum * inp.h_x1),
        ),
        (
            "m8 flux right",
            jd + 2.0 * (inp.r - p.c1_2p) / (dsum * (inp.h1 - inp.h_x2)),
        ),
        (
            "m9 flux middle",
            jd + (2.0 * (p.c1_2m - p.c1_1p) - (p.phi_2m - p.phi_1p) * q2)
                / (dsum * (inp.h_x2 - inp.h_x1)),
        ),
        (
            "m10 slow potential",
            p.phi_2m - p.phi_1p - (d1 - d2) / (d1 * d2) * z * p.j1 * p.ystar,
        ),
        (
            "m11 slow concentration",
            p.c1_2m - (decay * p.c1_1p + d2 * q2 / (dsum * z) * (decay - 1.0)),
        ),
        ("d1 c1 x1-", p.c1_1m - p.c1_1 * (z * t1m).exp()),
        ("d2 c2 x1-", p.c2_1m - p.c2_1 * (-z * t1m).exp()),
        ("d3 mean x1", p.c1_1m - (p.c1_1 * p.c2_1).sqrt()),
        ("d4 mean x1", p.c2_1m - (p.c1_1 * p.c2_1).sqrt()),
        ("d5 c1 x2+", p.c1_2p - p.c1_2 * (z * t2p).exp()),
        ("d6 c2 x2+", p.c2_2p - p.c2_2 * (-z * t2p).exp()),
        ("d7 mean x2", p.c1_2p - (p.c1_2 * p.c2_2).sqrt()),
        ("d8 mean x2", p.c2_2p - (p.c1_2 * p.c2_2).sqrt()),
        ("d9 c1 x1+", p.c1_1p - p.c1_1 * (z * t1p).exp()),
        ("d10 c2 x1+", p.c2_1p - p.c2_1 * (-z * t1p).exp()),
        ("d11 c1 x2-", p.c1_2m - p.c1_2 * (z * t2m).exp()),
        ("d12 c2 x2-", p.c2_2m - p.c2_2 * (-z * t2m).exp()),
        (
            "d13 potential x1-",
            p.phi_1m - (inp.v - (d1 - d2) / (z * dsum) * (p.c1_1m / inp.l).ln()),
        ),
        (
            "d14 potential x2+",
            p.phi_2p - (d1 - d2) / (z * dsum) * (inp.r / p.c1_2p).ln(),
        ),
    ];
    MatchingResiduals {
        entries: raw
            .iter()
            .map(|&(name, v)| (name, if v.is_nan() { f64::INFINITY } else { v.abs() }))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> (BathConditions, ChannelGeometry) {
        (
            BathConditions::new(0.2, 1.0, 1.0).unwrap(),
            ChannelGeometry::uniform(1.0 / 3.0, 2.0 / 3.0).unwrap(),
        )
    }

    #[test]
    fn converged_solution_satisfies_matching() {
        let (bath, geom) = reference();
        let t = Transport::from_theta(1.0, 0.3).unwrap();
        let (p, inp) = reconstruct_solved(2.0, &bath, &geom, &t).unwrap();
        let res = matching_residual(&p, &inp);
        assert!(res.max() <= 1e-12, "{:?}", res.worst());
        assert!(p.ystar > 0.0);
    }

    #[test]
    fn potential_jump_closed_form() {
        let (bath, geom) = reference();
        let t = Transport::from_theta(1.0, 0.3).unwrap();
        let (p, _) = reconstruct_solved(2.0, &bath, &geom, &t).unwrap();
        let a = solvers::solve_a(2.0, 0.3, &bath, &geom).unwrap();
        let alpha = geom.alpha();
        let expect = -(a - 0.2 + alpha * (0.2 - 1.0)) / (alpha * 2.0);
        assert_relative_eq!(p.phi2 - p.phi1, expect, max_relative = 1e-10);
    }

    #[test]
    fn symmetric_baths() {
        let bath = BathConditions::new(0.6, 0.6, 1.0).unwrap();
        let geom = ChannelGeometry::uniform(0.3, 0.7).unwrap();
        let t = Transport::new(1.0, 2.5).unwrap();
        let (p, inp) = reconstruct_solved(3.0, &bath, &geom, &t).unwrap();
        assert!((p.phi1 - p.phi2).abs() < 1e-15);
        assert_eq!(p.c1_1, p.c1_2);
        assert_eq!(p.j1, 0.0);
        assert!(matching_residual(&p, &inp).max() <= 1e-12);
    }

    #[test]
    fn perturbed_a_is_detected() {
        let (bath, geom) = reference();
        let t = Transport::from_theta(1.0, 0.3).unwrap();
        let s = solvers::solve(2.0, &t, &bath, &geom).unwrap();
        let p = reconstruct(s.a + 1e-3, 2.0, s.vrev, &bath, &geom, &t).unwrap();
        let inp = MatchingInputs::new(2.0, s.vrev, &bath, &geom, &t);
        assert!(matching_residual(&p, &inp).max() > 1e-5);
    }

    #[test]
    fn zero_charge_is_rejected() {
        let (bath, geom) = reference();
        let t = Transport::new(1.0, 1.0).unwrap();
        assert!(matches!(
            reconstruct_solved(0.0, &bath, &geom, &t),
            Err(Error::DegenerateProfile(_))
        ));
    }

    #[test]
    fn equal_diffusion_has_no_slow_jump() {
        let (bath, geom) = reference();
        let t = Transport::new(1.5, 1.5).unwrap();
        let (p, inp) = reconstruct_solved(-4.0, &bath, &geom, &t).unwrap();
        assert!((p.phi_2m - p.phi_1p).abs() < 1e-12);
        assert!(matching_residual(&p, &inp).max() <= 1e-12);
    }

    #[test]
    fn electroneutral_layer_edge() {
        let (bath, geom) = reference();
        let t = Transport::from_theta(1.0, -0.6).unwrap();
        let (p, inp) = reconstruct_solved(7.0, &bath, &geom, &t).unwrap();
        assert!((inp.z1 * p.c1_1p - inp.z1 * p.c2_1p + 2.0 * inp.q0).abs() < 1e-12);
    }
}
