use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} lies outside the domain of the thermal law ({law})")]
    DomainViolation { law: &'static str, value: f64 },

    #[error("scalar root solve did not converge after {iterations} iterations ({what})")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("invalid extents: {0}")]
    InvalidExtents(String),

    #[error("boundary part {0} must contain at least one facet")]
    EmptyRequiredPart(&'static str),

    #[error("contact facets are not collinear")]
    NonFlatContact,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell} has nonpositive measure {measure}")]
    DegenerateCell { cell: usize, measure: f64 },

    #[error("{which} tensor violates symmetry or ellipticity: {detail}")]
    EllipticityViolation { which: &'static str, detail: String },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("contact active set did not settle after {iterations} iterations")]
    ActiveSetNoConvergence { iterations: usize },

    #[error("damage obstacle problem did not converge after {iterations} iterations")]
    ObstacleNoConvergence { iterations: usize },

    #[error("Newton iteration for the {field} temperature did not converge (residual {residual:.3e} after {iterations} iterations); consider a smaller time step")]
    NewtonNoConvergence {
        field: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("fixed-point loop did not converge after {iterations} iterations; last increments {trace:?}")]
    FixedPointNoConvergence { iterations: usize, trace: Vec<[f64; 4]> },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips `Step` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Parse(_) | Error::Validation(_) | Error::InvalidExtents(_) => 2,
            Error::EmptyRequiredPart(_)
            | Error::NonFlatContact
            | Error::InvalidMesh(_)
            | Error::DegenerateCell { .. } => 2,
            Error::EllipticityViolation { .. } | Error::DomainViolation { .. } => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::DomainViolation { .. } => "domain_violation",
            Error::NoConvergence { .. } => "no_convergence",
            Error::InvalidExtents(_) => "invalid_extents",
            Error::EmptyRequiredPart(_) => "empty_required_part",
            Error::NonFlatContact => "non_flat_contact",
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::DegenerateCell { .. } => "degenerate_cell",
            Error::EllipticityViolation { .. } => "ellipticity_violation",
            Error::LinearSolveFailure(_) => "linear_solve_failure",
            Error::ActiveSetNoConvergence { .. } => "active_set_no_convergence",
            Error::ObstacleNoConvergence { .. } => "obstacle_no_convergence",
            Error::NewtonNoConvergence { .. } => "newton_no_convergence",
            Error::FixedPointNoConvergence { .. } => "fixed_point_no_convergence",
            Error::Step { .. } => "step",
            Error::Validation(_) => "validation",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
