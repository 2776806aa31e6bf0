//! Channel cross-section profiles and the resistance integral
//! `H(x) = ∫_0^x ds / h(s)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_INTERVALS, DEFAULT_TOLERANCE};

/// User-supplied cross-section `h(x)` on `[0, 1]`.
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Dimensionless cross-section area `h(x)` along the channel axis.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `values[0]` on `[0, breakpoints[0])`, ..., `values[k]` on `[breakpoints[k-1], 1]`.
    Steps {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Samples joined by straight lines; `x` must start at 0 and end at 1.
    Table {
        x: Vec<f64>,
        h: Vec<f64>,
    },
    /// Arbitrary positive function, integrated by adaptive quadrature.
    Function(ProfileFn),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Profile::Steps {
                breakpoints,
                values,
            } => f
                .debug_struct("Steps")
                .field("breakpoints", breakpoints)
                .field("values", values)
                .finish(),
            Profile::Table { x, h } => f.debug_struct("Table").field("x", x).field("h", h).finish(),
            Profile::Function(_) => f.write_str("Function(..)"),
        }
    }
}

fn positive_sample(h: f64, x: f64) -> Result<f64> {
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(Error::InvalidProfile(format!(
            "h({x}) = {h} is not positive"
        )))
    }
}

/// `∫ ds/h` over a segment of length `dx` where `h` runs linearly from `h0` to `h1`.
fn linear_segment_resistance(dx: f64, h0: f64, h1: f64) -> f64 {
    let t = (h1 - h0) / h0;
    let factor = if t.abs() < 1e-8 {
        1.0 - t / 2.0 + t * t / 3.0
    } else {
        t.ln_1p() / t
    };
    dx / h0 * factor
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant(c) => positive_sample(*c, 0.0).map(|_| ()),
            Profile::Steps {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::InvalidProfile(format!(
                        "{} step values need {} breakpoints, got {}",
                        values.len(),
                        values.len().saturating_sub(1),
                        breakpoints.len()
                    )));
                }
                let mut prev = 0.0;
                for &b in breakpoints {
                    if !(b > prev && b < 1.0) {
                        return Err(Error::InvalidProfile(format!(
                            "step breakpoints must increase strictly inside (0, 1); got {breakpoints:?}"
                        )));
                    }
                    prev = b;
                }
                for (i, &v) in values.iter().enumerate() {
                    positive_sample(v, if i == 0 { 0.0 } else { breakpoints[i - 1] })?;
                }
                Ok(())
            }
            Profile::Table { x, h } => {
                if x.len() != h.len() || x.len() < 2 {
                    return Err(Error::InvalidProfile(format!(
                        "table needs matching x/h columns with at least two rows (got {} and {})",
                        x.len(),
                        h.len()
                    )));
                }
                if x[0] != 0.0 || x[x.len() - 1] != 1.0 {
                    return Err(Error::InvalidProfile(
                        "table x must start at 0 and end at 1".into(),
                    ));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidProfile(
                        "table x must be strictly increasing".into(),
                    ));
                }
                for (&xi, &hi) in x.iter().zip(h) {
                    positive_sample(hi, xi)?;
                }
                Ok(())
            }
            Profile::Function(f) => {
                // Only spot checks are possible; quadrature validates every sample it takes.
                for x in [0.0, 0.5, 1.0] {
                    positive_sample(f(x), x)?;
                }
                Ok(())
            }
        }
    }

    /// Cross-section at `x`. Step profiles are right-continuous.
    pub fn h(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Steps {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b <= x);
                values[idx]
            }
            Profile::Table { x: xs, h } => {
                let x = x.clamp(0.0, 1.0);
                let j = xs.partition_point(|&xi| xi <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[j - 1], xs[j]);
                let s = (x - x0) / (x1 - x0);
                h[j - 1] + s * (h[j] - h[j - 1])
            }
            Profile::Function(f) => f(x),
        }
    }

    /// `∫_a^b ds / h(s)` for `0 ≤ a ≤ b ≤ 1`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        for (what, v) in [("a", a), ("b", b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain {
                    what,
                    value: v,
                    domain: "[0, 1]",
                });
            }
        }
        if b < a {
            return Err(Error::Domain {
                what: "b",
                value: b,
                domain: "[a, 1]",
            });
        }
        match self {
            Profile::Constant(c) => Ok((b - a) / positive_sample(*c, a)?),
            Profile::Steps {
                breakpoints,
                values,
            } => {
                let mut total = 0.0;
                let mut lo: f64 = 0.0;
                for (i, &v) in values.iter().enumerate() {
                    let hi = breakpoints.get(i).copied().unwrap_or(1.0);
                    let (s, e) = (lo.max(a), hi.min(b));
                    if e > s {
                        total += (e - s) / positive_sample(v, s)?;
                    }
                    lo = hi;
                }
                Ok(total)
            }
            Profile::Table { x, h } => {
                let mut total = 0.0;
                for j in 1..x.len() {
                    let (s, e) = (x[j - 1].max(a), x[j].min(b));
                    if e > s {
                        let slope = (h[j] - h[j - 1]) / (x[j] - x[j - 1]);
                        let hs = positive_sample(h[j - 1] + slope * (s - x[j - 1]), s)?;
                        let he = positive_sample(h[j - 1] + slope * (e - x[j - 1]), e)?;
                        total += linear_segment_resistance(e - s, hs, he);
                    }
                }
                Ok(total)
            }
            Profile::Function(f) => adaptive_simpson(
                |s| positive_sample(f(s), s).map(|h| 1.0 / h),
                a,
                b,
                DEFAULT_TOLERANCE,
                DEFAULT_MAX_INTERVALS,
            ),
        }
    }
}

/// `H(x) = ∫_0^x ds/h(s)`.
pub fn resistance_integral(profile: &Profile, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    profile.integral(0.0, x)
}

/// Channel shape with the junctions bounding the charged region and the
/// normalized resistances `alpha = H(x1)/H(1)`, `beta = H(x2)/H(1)`.
#[derive(Debug, Clone)]
pub struct ChannelGeometry {
    profile: Profile,
    x1: f64,
    x2: f64,
    h_x1: f64,
    h_x2: f64,
    h1: f64,
}

impl ChannelGeometry {
    pub fn new(profile: Profile, x1: f64, x2: f64) -> Result<Self> {
        if !(x1 > 0.0 && x1 < x2 && x2 < 1.0) {
            return Err(Error::Configuration(format!(
                "junctions must satisfy 0 < x1 < x2 < 1 (got x1 = {x1}, x2 = {x2})"
            )));
        }
        profile.validate()?;
        let h_x1 = profile.integral(0.0, x1)?;
        let h_x2 = h_x1 + profile.integral(x1, x2)?;
        let h1 = h_x2 + profile.integral(x2, 1.0)?;
        let geom = Self {
            profile,
            x1,
            x2,
            h_x1,
            h_x2,
            h1,
        };
        if !(0.0 < geom.alpha() && geom.alpha() < geom.beta() && geom.beta() < 1.0) {
            return Err(Error::InvalidProfile(format!(
                "resistance is not strictly increasing: H(x1) = {h_x1}, H(x2) = {h_x2}, H(1) = {h1}"
            )));
        }
        Ok(geom)
    }

    /// Uniform channel `h ≡ 1`.
    pub fn uniform(x1: f64, x2: f64) -> Result<Self> {
        Self::new(Profile::Constant(1.0), x1, x2)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }
    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    /// `H(1)`.
    pub fn h1(&self) -> f64 {
        self.h1
    }
    pub fn h_x1(&self) -> f64 {
        self.h_x1
    }
    pub fn h_x2(&self) -> f64 {
        self.h_x2
    }
    pub fn alpha(&self) -> f64 {
        self.h_x1 / self.h1
    }
    pub fn beta(&self) -> f64 {
        self.h_x2 / self.h1
    }

    pub fn resistance(&self, x: f64) -> Result<f64> {
        resistance_integral(&self.profile, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn step_profile() -> Profile {
        Profile::Steps {
            breakpoints: vec![0.5],
            values: vec![2.0, 1.0],
        }
    }

    #[test]
    fn constant_profile_is_linear() {
        assert_eq!(
            resistance_integral(&Profile::Constant(1.0), 0.5).unwrap(),
            0.5
        );
    }

    #[test]
    fn uniform_thirds() {
        let g = ChannelGeometry::uniform(1.0 / 3.0, 2.0 / 3.0).unwrap();
        assert_eq!(g.h1(), 1.0);
        assert_abs_diff_eq!(g.alpha(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.beta(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn scaled_constant_profile() {
        let g = ChannelGeometry::new(Profile::Constant(2.0), 1.0 / 3.0, 2.0 / 3.0).unwrap();
        assert_eq!(g.h1(), 0.5);
        assert_abs_diff_eq!(g.alpha(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.beta(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn step_profile_closed_form() {
        assert_abs_diff_eq!(
            resistance_integral(&step_profile(), 1.0).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        let g = ChannelGeometry::new(step_profile(), 0.25, 0.75).unwrap();
        assert_abs_diff_eq!(g.alpha(), 0.125 / 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(g.beta(), 0.5 / 0.75, epsilon = 1e-15);
    }

    #[test]
    fn step_profile_agrees_with_quadrature() {
        let steps = step_profile();
        let f = steps.clone();
        let func = Profile::Function(Arc::new(move |x| f.h(x)));
        for x in [0.1, 0.25, 0.5, 0.6, 0.75, 1.0] {
            let exact = resistance_integral(&steps, x).unwrap();
            let quad = resistance_integral(&func, x).unwrap();
            assert!((exact - quad).abs() <= 1e-12, "x = {x}: {exact} vs {quad}");
        }
    }

    #[test]
    fn table_profile_uses_log_segments() {
        // h = 1 + x on [0, 1]; H(1) = ln 2.
        let p = Profile::Table {
            x: vec![0.0, 1.0],
            h: vec![1.0, 2.0],
        };
        assert_abs_diff_eq!(
            resistance_integral(&p, 1.0).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            resistance_integral(&p, 0.5).unwrap(),
            1.5f64.ln(),
            epsilon = 1e-15
        );

        let q = Profile::Function(Arc::new(|x| 1.0 + x));
        assert_abs_diff_eq!(
            resistance_integral(&q, 0.5).unwrap(),
            1.5f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn junctions_need_not_hit_breakpoints() {
        let p = Profile::Table {
            x: vec![0.0, 0.4, 1.0],
            h: vec![1.0, 0.5, 1.0],
        };
        let g = ChannelGeometry::new(p.clone(), 0.3, 0.7).unwrap();
        let total = p.integral(0.0, 0.3).unwrap()
            + p.integral(0.3, 0.7).unwrap()
            + p.integral(0.7, 1.0).unwrap();
        assert_abs_diff_eq!(g.h1(), total, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            ChannelGeometry::uniform(0.6, 0.4),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            ChannelGeometry::new(Profile::Constant(-1.0), 0.2, 0.4),
            Err(Error::InvalidProfile(_))
        ));
        let bad_table = Profile::Table {
            x: vec![0.0, 0.5, 1.0],
            h: vec![1.0, 0.0, 1.0],
        };
        assert!(matches!(
            bad_table.validate(),
            Err(Error::InvalidProfile(_))
        ));
        assert!(matches!(
            resistance_integral(&Profile::Constant(1.0), 1.5),
            Err(Error::Domain { .. })
        ));
        let neg = Profile::Function(Arc::new(|x| 0.5 - x));
        assert!(matches!(
            neg.integral(0.0, 1.0),
            Err(Error::InvalidProfile(_))
        ));
    }
}
