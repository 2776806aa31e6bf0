//! Randomized parameter sets shared by the integration suites.
#![allow(dead_code)]

pub mod hp;

use rand::Rng;
use revpot::{BathConditions, ChannelGeometry, Transport};

#[derive(Debug, Clone)]
pub struct Params {
    pub l: f64,
    pub r: f64,
    pub z1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub q0: f64,
}

impl Params {
    pub fn bath(&self) -> BathConditions {
        BathConditions::new(self.l, self.r, self.z1).unwrap()
    }

    /// Uniform cross-section with junctions at `α` and `β`, so `H(x) = x`.
    pub fn geometry(&self) -> ChannelGeometry {
        ChannelGeometry::uniform(self.alpha, self.beta).unwrap()
    }

    pub fn transport(&self) -> Transport {
        Transport::from_theta(1.0, self.theta).unwrap()
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// `l, r` log-uniform on (0.05, 20), `θ` on (-0.95, 0.95), `Q0` on
/// [-100, 100], `0 < α < β < 1` with a gap of at least 0.01, `z1 ∈ {1, 2}`.
pub fn random_params<R: Rng>(rng: &mut R) -> Params {
    let (mut alpha, mut beta);
    loop {
        alpha = rng.gen_range(0.02..0.98);
        beta = rng.gen_range(0.02..0.98);
        if alpha > beta {
            std::mem::swap(&mut alpha, &mut beta);
        }
        if beta - alpha >= 0.01 {
            break;
        }
    }
    Params {
        l: log_uniform(rng, 0.05, 20.0),
        r: log_uniform(rng, 0.05, 20.0),
        z1: if rng.gen_bool(0.5) { 1.0 } else { 2.0 },
        alpha,
        beta,
        theta: rng.gen_range(-0.95..0.95),
        q0: rng.gen_range(-100.0..=100.0),
    }
}

pub fn reference_bath() -> BathConditions {
    BathConditions::new(0.2, 1.0, 1.0).unwrap()
}

pub fn reference_geometry() -> ChannelGeometry {
    ChannelGeometry::uniform(1.0 / 3.0, 2.0 / 3.0).unwrap()
}

/// Central difference with step `1e-6 (1 + |x|)`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> (f64, f64) {
    let h = 1e-6 * (1.0 + x.abs());
    ((f(x + h) - f(x - h)) / (2.0 * h), h)
}
