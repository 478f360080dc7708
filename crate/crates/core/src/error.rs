use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error)]
pub enum RodError {
    /// The Euler chart degenerates at sin θ = 0; any operation dividing by
    /// sin θ refuses inputs with |sin θ| < 1e-12.
    #[error("Euler angle singularity: |sin theta| = {sin_theta:.3e} below guard")]
    SingularTheta { sin_theta: f64 },

    /// Force and field aligned: the radicand μ − 2λ̄p̄_ψ (or its dimensional
    /// counterpart 2C₁ − C₂² − 2λp_ψ) is negative.
    #[error("alignment condition violated: radicand = {radicand:.3e}")]
    AlignmentViolation { radicand: f64 },

    #[error("operation requires an isotropic rod (B1 = B2, H = J)")]
    Anisotropic,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter outside valid range: {0}")]
    ParameterRange(String),

    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    #[error("maximum step count exceeded at t = {t:.6e}")]
    MaxStepsExceeded { t: f64 },

    #[error("root finding failed: {0}")]
    RootNotFound(String),

    #[error("no sign change bracketed: {0}")]
    NoSignChange(String),

    #[error("quadrature failed to converge: requested {requested:.3e}, achieved {achieved:.3e}")]
    QuadratureNonConvergent { requested: f64, achieved: f64 },

    #[error("Newton iteration failed to converge: {0}")]
    NewtonNonConvergence(String),

    #[error("saddle does not exist: m = {m} exceeds buckling threshold {m_c}")]
    Supercritical { m: f64, m_c: f64 },

    #[error("wrong pulse count: requested {requested}, converged orbit has {found}")]
    WrongPulseCount { requested: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, RodError>;

/// Guard below which sin θ counts as singular.
pub const SIN_THETA_GUARD: f64 = 1e-12;
