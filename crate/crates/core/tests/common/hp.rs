//! `G1` and `G2` transcribed directly in 200-bit binary floating point, used
//! as a rounding-free finite-difference oracle.

use dashu_float::FBig;

const PRECISION: usize = 200;

type F = FBig;

fn big(x: f64) -> F {
    F::try_from(x)
        .expect("finite")
        .with_precision(PRECISION)
        .value()
}

/// Inputs at which to evaluate; every entry is taken exactly.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub a: f64,
    pub q0: f64,
    pub theta: f64,
    pub l: f64,
    pub r: f64,
    pub z1: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `(G1, G2)` at `p`.
pub fn g(p: &Point) -> (F, F) {
    let (a, q0, t) = (big(p.a), big(p.q0), big(p.theta));
    let (l, r, z) = (big(p.l), big(p.r), big(p.z1));
    let (alpha, beta) = (big(p.alpha), big(p.beta));
    let one = big(1.0);
    let b = (&one - &beta) / &alpha * (&l - &a) + &r;
    let sa = (&q0 * &q0 + &z * &z * &a * &a).sqrt();
    let sb = (&q0 * &q0 + &z * &z * &b * &b).sqrt();
    let tq = &t * &q0;
    let ln_s = ((&sa + &tq) / (&sb + &tq)).ln();
    let g1 = &t * (&ln_s + (&l / &r).ln()) - (&one + &t) * (&a / &b).ln()
        + ((&sa - &q0) / (&sb - &q0)).ln();
    let n = (&beta - &alpha) / &alpha * &z * (&a - &l) + &sa - &sb;
    let g2 = &tq * &ln_s - n;
    (g1, g2)
}

/// Central differences of `(G1, G2)` along `dir` (0: A, 1: Q0, 2: θ) with
/// step `h = 1e-6 (1 + |x|)`, evaluated without rounding error in `G` and
/// combined with the `h/2` quotient to cancel the `h²` term.
pub fn central_difference(p: &Point, dir: usize) -> (f64, f64) {
    let x = [p.a, p.q0, p.theta][dir];
    let h = 1e-6 * (1.0 + x.abs());
    let shifted = |v: f64| {
        let mut q = *p;
        match dir {
            0 => q.a = v,
            1 => q.q0 = v,
            _ => q.theta = v,
        }
        q
    };
    let quotient = |h: f64| {
        let (xp, xm) = (x + h, x - h);
        let (g1p, g2p) = g(&shifted(xp));
        let (g1m, g2m) = g(&shifted(xm));
        let width = big(xp) - big(xm);
        ((g1p - g1m) / &width, (g2p - g2m) / &width)
    };
    let (c1, c2) = quotient(h);
    let (f1, f2) = quotient(0.5 * h);
    let three = big(3.0);
    let four = big(4.0);
    let d1 = (&four * f1 - c1) / &three;
    let d2 = (&four * f2 - c2) / &three;
    (d1.to_f64().value(), d2.to_f64().value())
}
