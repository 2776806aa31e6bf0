use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("adaptive quadrature exceeded {cap} subintervals (error estimate {estimate:e})")]
    QuadratureCap { cap: usize, estimate: f64 },

    /// The residual has the same sign at both ends of the bracket.
    #[error("bracket failure for {what}: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracket {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no reversal permanent charge: |z1 V| = {z1v} must be below |ln(l/r)| = {bound}")]
    NoReversalCharge { z1v: f64, bound: f64 },

    #[error("degenerate baths (l = r): {0}")]
    DegenerateBaths(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("{what} did not converge (last defect {defect:e})")]
    Convergence { what: &'static str, defect: f64 },

    /// A computed quantity violated a bound that holds for every valid input.
    #[error("solver invariant violated: {0}")]
    Invariant(String),
}
