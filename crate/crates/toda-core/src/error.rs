use crate::geom::Point3;
use std::fmt;

/// Errors produced by the numerical kernels and family constructions.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A stencil or evaluation point falls outside a field's domain predicate.
    DomainViolation(Point3),
    /// A field or operator produced NaN or infinity.
    NonFinite(&'static str),
    /// A field that must stay positive (u = e^rho) dropped to <= 1e-300.
    NonPositiveField { point: Point3, value: f64 },
    /// Bracket mode of the scalar root solver found no sign change.
    NoBracket,
    /// An iterative solver hit its iteration cap before reaching tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// Newton Jacobian determinant fell below the singularity threshold.
    SingularJacobian { det: f64 },
    /// Implicit-function derivative vanished at the root (hodograph caustic).
    CausticSingular { root: f64, dgdu: f64 },
    /// Cumulative quadrature needs at least two samples.
    TooFewSamples { got: usize, need: usize },
    /// Every grid point of a residual sweep was a domain violation.
    AllPointsSkipped,
    /// Both refinement residuals sit below the noise floor; no order estimate.
    ZeroResidual,
    /// A matrix that must be invertible is singular.
    SingularMatrix,
    /// ODE integration range touches the singular point of the equation.
    SingularPoint,
    /// Adaptive ODE step size underflowed.
    StepFailure,
    /// Closed-loop integral of the sigma gradient exceeded tolerance.
    CompatibilityViolation { loop_integral: f64 },
    /// A spectral node or kernel argument requires division by zero.
    DivisionByZero(&'static str),
    /// Generic construction/configuration error with a message.
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DomainViolation(p) => {
                write!(f, "point ({}, {}, {}) outside field domain", p.x, p.y, p.z)
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {}", what),
            Error::NonPositiveField { point, value } => write!(
                f,
                "field value {} <= 0 at ({}, {}, {}); logarithm undefined",
                value, point.x, point.y, point.z
            ),
            Error::NoBracket => write!(f, "no sign change over the bracket"),
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {} iterations (residual {:e})",
                iterations, residual
            ),
            Error::SingularJacobian { det } => {
                write!(f, "singular Jacobian (det {:e})", det)
            }
            Error::CausticSingular { root, dgdu } => write!(
                f,
                "caustic: implicit derivative {:e} at root {}",
                dgdu, root
            ),
            Error::TooFewSamples { got, need } => {
                write!(f, "{} samples given, {} required", got, need)
            }
            Error::AllPointsSkipped => write!(f, "all grid points skipped"),
            Error::ZeroResidual => write!(f, "residuals below noise floor; order undefined"),
            Error::SingularMatrix => write!(f, "singular matrix"),
            Error::SingularPoint => write!(f, "range touches the singular point of the ODE"),
            Error::StepFailure => write!(f, "ODE step size underflow"),
            Error::CompatibilityViolation { loop_integral } => write!(
                f,
                "compatibility violated: loop integral {:e}",
                loop_integral
            ),
            Error::DivisionByZero(what) => write!(f, "division by zero in {}", what),
            Error::Invalid(msg) => write!(f, "{}", msg),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Point-local failures that a grid sweep counts as skipped rather than fatal.
    pub fn is_skippable(&self) -> bool {
        matches!(
            self,
            Error::DomainViolation(_)
                | Error::NonPositiveField { .. }
                | Error::NonFinite(_)
                | Error::NoBracket
                | Error::NoConvergence { .. }
                | Error::SingularJacobian { .. }
                | Error::CausticSingular { .. }
        )
    }
}
