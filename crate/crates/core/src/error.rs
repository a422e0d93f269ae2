use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The inverse-kinematics discriminant of leg `leg` (0-based) is negative.
    #[error("pose {pose:?} is out of reach (leg index {leg})")]
    OutOfReach { leg: usize, pose: Vec<f64> },

    #[error("joint values admit no assembly")]
    NoAssembly,

    /// The joint values close the loops on a continuum of poses.
    #[error("joint values do not determine isolated assemblies")]
    DegenerateAssembly,

    #[error("forward kinematics did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("configuration does not close the kinematic loops (max residual {residual:e})")]
    InvalidConfiguration { residual: f64 },

    #[error("finite-difference oracle invalid: {0}")]
    OracleInvalid(String),

    /// Force amplification is unbounded along `direction` (a unit tool-space vector).
    #[error("infinite force amplification along {direction:?}")]
    InfiniteForceFactor { direction: Vec<f64> },

    #[error("degenerate manipulability ellipsoid (singular Jacobian)")]
    DegenerateEllipsoid,

    #[error("infeasible synthesis spec: {0}")]
    InfeasibleSpec(String),
}
