//! TOML run configuration.
//!
//! ```toml
//! [geometry]
//! x1 = 0.3333333333333333
//! x2 = 0.6666666666666666
//! profile = { kind = "constant", value = 1.0 }
//!
//! [bath]
//! l = 0.2
//! r = 1.0
//! z1 = 1.0
//!
//! [transport]
//! d1 = 1.0
//! d2 = { start = 0.1, stop = 10.0, points = 101, spacing = "log" }
//!
//! [charge]
//! q0 = [0.0, 10.0]
//! ```
//!
//! Every scalar under `transport`, `charge` and `potential` is either a
//! single number, a list, or a `{start, stop, points, spacing}` range. Rows
//! are the Cartesian product in the order `q0`, `v`, `d1`, `d2`.

use std::path::PathBuf;

use revpot::{BathConditions, ChannelGeometry, Profile, Transport};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub bath: BathConfig,
    pub transport: TransportConfig,
    #[serde(default)]
    pub charge: ChargeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub x1: f64,
    pub x2: f64,
    #[serde(default)]
    pub profile: ProfileConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `values.len() == breakpoints.len() + 1`; `h` is right-continuous.
    Steps {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Piecewise-linear `h` through `(x, h)`, `x` from 0 to 1.
    Table { x: Vec<f64>, h: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub l: f64,
    pub r: f64,
    #[serde(default = "one")]
    pub z1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub d1: Param,
    pub d2: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeConfig {
    pub q0: Param,
}

impl Default for ChargeConfig {
    fn default() -> Self {
        ChargeConfig {
            q0: Param::Value(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub v: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub epsilons: Vec<f64>,
    /// Allowed `|V_bvp - V_reduced|` at the last ε, as a fraction of `|ln(l/r)|/z1`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Where to write `x, phi, c1, c2, u` of the last-ε solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
}

/// A scalar input: one value, an explicit list, or a generated range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    List(Vec<f64>),
    Range(Range),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl Param {
    /// The grid, validated under `path` for error messages.
    pub fn values(&self, path: &str) -> Result<Vec<f64>, CliError> {
        let vals = match self {
            Param::Value(v) => vec![*v],
            Param::List(v) => {
                if v.is_empty() {
                    return Err(CliError::Config(format!("{path}: empty list")));
                }
                v.clone()
            }
            Param::Range(r) => r.values(path)?,
        };
        if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("{path}: non-finite value {bad}")));
        }
        Ok(vals)
    }

    pub fn is_single(&self) -> bool {
        match self {
            Param::Value(_) => true,
            Param::List(v) => v.len() == 1,
            Param::Range(r) => r.points == 1,
        }
    }
}

impl Range {
    fn values(&self, path: &str) -> Result<Vec<f64>, CliError> {
        let n = self.points;
        if n == 0 {
            return Err(CliError::Config(format!(
                "{path}.points: must be at least 1"
            )));
        }
        if n == 1 {
            return Ok(vec![self.start]);
        }
        let t = |k: usize| k as f64 / (n - 1) as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * t(k)
                    }
                })
                .collect(),
            Spacing::Log => {
                if !(self.start > 0.0 && self.stop > 0.0) {
                    return Err(CliError::Config(format!(
                        "{path}: log spacing needs positive start and stop"
                    )));
                }
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..n)
                    .map(|k| match k {
                        0 => self.start,
                        k if k == n - 1 => self.stop,
                        k => (a + (b - a) * t(k)).exp(),
                    })
                    .collect()
            }
        })
    }
}

/// One row of the Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub q0: f64,
    pub v: f64,
    pub transport: Transport,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.bath()?;
        self.geometry()?;
        self.points()?;
        if let Some(o) = &self.oracle {
            if o.epsilons.is_empty() {
                return Err(CliError::Config("oracle.epsilons: empty list".into()));
            }
            if !(o.tolerance > 0.0 && o.tolerance.is_finite()) {
                return Err(CliError::Config(format!(
                    "oracle.tolerance: must be positive, got {}",
                    o.tolerance
                )));
            }
        }
        Ok(())
    }

    pub fn bath(&self) -> Result<BathConditions, CliError> {
        let b = &self.bath;
        BathConditions::new(b.l, b.r, b.z1).map_err(|e| CliError::Config(format!("bath: {e}")))
    }

    pub fn geometry(&self) -> Result<ChannelGeometry, CliError> {
        let g = &self.geometry;
        let profile = match &g.profile {
            ProfileConfig::Constant { value } => Profile::Constant(*value),
            ProfileConfig::Steps {
                breakpoints,
                values,
            } => Profile::Steps {
                breakpoints: breakpoints.clone(),
                values: values.clone(),
            },
            ProfileConfig::Table { x, h } => Profile::Table {
                x: x.clone(),
                h: h.clone(),
            },
        };
        ChannelGeometry::new(profile, g.x1, g.x2)
            .map_err(|e| CliError::Config(format!("geometry: {e}")))
    }

    pub fn potential_param(&self) -> Param {
        self.potential
            .as_ref()
            .map_or(Param::Value(0.0), |p| p.v.clone())
    }

    /// Rows in grid order.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        self.grid(true, true)
    }

    /// Rows in grid order over the transport grid and, if requested, the
    /// charge and potential grids; skipped axes are held at 0.
    pub fn grid(&self, charge: bool, potential: bool) -> Result<Vec<Point>, CliError> {
        let q0s = if charge {
            self.charge.q0.values("charge.q0")?
        } else {
            vec![0.0]
        };
        let vs = if potential {
            self.potential_param().values("potential.v")?
        } else {
            vec![0.0]
        };
        let d1s = self.transport.d1.values("transport.d1")?;
        let d2s = self.transport.d2.values("transport.d2")?;
        let mut out = Vec::with_capacity(q0s.len() * vs.len() * d1s.len() * d2s.len());
        for &q0 in &q0s {
            for &v in &vs {
                for &d1 in &d1s {
                    for &d2 in &d2s {
                        let transport = Transport::new(d1, d2).map_err(|e| {
                            CliError::Config(format!("transport (d1 = {d1}, d2 = {d2}): {e}"))
                        })?;
                        out.push(Point { q0, v, transport });
                    }
                }
            }
        }
        Ok(out)
    }
}
