use thiserror::Error;

/// Errors produced by mesh construction, assembly, solves, and the
/// dispersion machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("singular dense matrix (pivot {pivot:.3e} at column {col} below threshold)")]
    SingularMatrix { pivot: f64, col: usize },

    #[error("sparse solver breakdown: {0}")]
    SparseSolver(String),

    #[error("singular element interior block (element {element}, k*h = {kh:.6})")]
    SingularElement { element: usize, kh: f64 },

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("local postprocessing operator singular (element {element}, k*h = {kh:.6})")]
    PostprocessSingular { element: usize, kh: f64 },

    #[error("projection system singular on element {element}")]
    ProjectionSingular { element: usize },

    #[error("stencil denominator resonance at t = {t:.6}, s = {s:?}")]
    Resonance { t: f64, s: num_complex::Complex64 },

    #[error("degenerate dispersion quadratic (a2 = 0) at t = {t:.6}")]
    DegenerateQuadratic { t: f64 },

    #[error("dispersion branch ambiguity: both roots exceed t^2 at t = {t:.6}")]
    BranchAmbiguity { t: f64 },

    #[error("no dispersion root within |k_h - k| <= 0.3 k (k = {k}, theta = {theta})")]
    RootNotFound { k: f64, theta: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("search budget exceeded (n > {0})")]
    BudgetExceeded(usize),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
