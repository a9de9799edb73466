use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is near singular (|det| = {det:e})")]
    NearSingular { det: f64 },
    #[error("null direction encountered at vector {index} (|<v,v>| = {norm:e})")]
    NullDirection { index: usize, norm: f64 },

    #[error("jet variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("division by a jet with vanishing constant term")]
    DivisionByZeroJet,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order {requested} exceeds jet order {available}")]
    OrderOverflow { requested: usize, available: usize },
    #[error("jets have different variable counts ({0} vs {1})")]
    JetShape(usize, usize),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("arity error: {0}")]
    Arity(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("point leaves the space form: <u,u> - eps r^2 = {0:e}")]
    ConstraintViolation(f64),
    #[error("unknown catalog surface `{0}`")]
    UnknownSurface(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("only hypersurfaces are supported (codimension {0})")]
    UnsupportedCodimension(usize),

    #[error("induced metric is degenerate")]
    DegenerateMetric,
    #[error("normal direction is null")]
    NullNormal,
    #[error("point is not regular: |II|^2 - m|H|^2 = {0:e}")]
    NotRegular(f64),
    #[error("finite-difference stencil leaves the parameter domain")]
    StencilLeftDomain,
    #[error("sample set is not conformal (max |C| = {0:e})")]
    NotConformal(f64),
    #[error("space-form case is indeterminate: <c,c> = {cc:e}, -2 lambda + eps mu^2 = {predicted:e}")]
    Indeterminate { cc: f64, predicted: f64 },
    #[error("empty sample list")]
    EmptySamples,

    #[error("integration step too large: invariant drift {0:e}")]
    StepTooLarge(f64),
    #[error("Gram matrix drift {0:e} exceeds tolerance")]
    GramDrift(f64),
}

impl Error {
    /// Mathematical degeneracies, as opposed to bad input.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::NotRegular(_)
                | Error::NullNormal
                | Error::DegenerateMetric
                | Error::NearSingular { .. }
                | Error::NullDirection { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
