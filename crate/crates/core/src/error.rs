use thiserror::Error;

/// Errors raised by the form calculus, geometry, product and Monte Carlo layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chart mismatch: expected `{expected}`, found `{found}`")]
    ChartMismatch { expected: String, found: String },

    #[error("point {point:?} lies outside the domain of chart `{chart}`")]
    DomainError { chart: String, point: Vec<f64> },

    #[error("degree error: {0}")]
    DegreeError(String),

    #[error("quadrature budget of {budget} evaluations exceeded (estimated error {error:.3e})")]
    QuadratureBudgetExceeded { budget: usize, error: f64 },

    #[error("contact form degenerate at {point:?}")]
    ContactDegeneracy { point: Vec<f64> },

    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("bodies are not transversal: {0}")]
    NotTransversal(String),

    #[error("antipodal singularity did not converge under refinement")]
    AntipodalSingularity,

    #[error("antipodal normals at crossing {point:?}")]
    AntipodalCrossing { point: [f64; 2] },

    #[error("oracle fit ill-conditioned (condition number {0:.3e})")]
    OracleConditioning(f64),

    #[error("structure constants unavailable: {0}")]
    ProductUnavailable(String),

    #[error("coefficient fit ill-conditioned (condition number {0:.3e})")]
    FitConditioning(f64),

    #[error("pairing matrix is singular (condition number {0:.3e})")]
    PairingSingular(f64),

    #[error("sampling degeneracy: {rejected} of {total} draws rejected")]
    SamplingDegeneracy { rejected: usize, total: usize },

    #[error("unknown valuation `{0}`")]
    UnknownValuation(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
