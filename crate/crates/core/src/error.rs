use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not a contraction: norm {norm} exceeds 1 + {tol}")]
    NotContraction { norm: f64, tol: f64 },

    #[error("not unitary: |M*M - I| = {residual}")]
    NotUnitary { residual: f64 },

    #[error("not hermitian: |M - M*| = {residual}")]
    NotHermitian { residual: f64 },

    #[error("not dissipative: smallest eigenvalue of Im M is {min_eig}")]
    NotDissipative { min_eig: f64 },

    #[error("not normal: Schur off-diagonal residual {residual}")]
    NotNormal { residual: f64 },

    #[error("not positive definite: smallest eigenvalue {min_eig}")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("function is not analytic: coefficient at index {index} is nonzero")]
    NonAnalytic { index: i64 },

    #[error("spectral radius {radius} is not below 1")]
    SpectralRadius { radius: f64 },

    #[error("Cayley transform is singular (-i in the spectrum)")]
    SingularCayley,

    #[error("matrix is singular")]
    Singular,

    #[error("eigenphase matching is ambiguous at t = {t}; increase the path steps (tried {steps})")]
    PhaseMatching { t: f64, steps: usize },

    #[error("branch jump of {jump} rad between ladder points y = {from} and y = {to}")]
    BranchJump { jump: f64, from: f64, to: f64 },

    #[error("log of the perturbation determinant is not single-valued on the contour (winding number {winding})")]
    WindingMismatch { winding: i64 },

    #[error("evaluation point {point} is on the spectrum of the unperturbed operator")]
    OnSpectrum { point: f64 },

    #[error("unitary part carries mass {mass} of the perturbation")]
    UnitaryPartCoupling { mass: f64 },

    #[error("normalization mismatch: {0}")]
    NormalizationMismatch(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure is numerical (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::PhaseMatching { .. }
                | Error::BranchJump { .. }
                | Error::WindingMismatch { .. }
                | Error::UnitaryPartCoupling { .. }
        )
    }
}
