use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystem(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("analytic gate requires XY coupling (alpha = 1), got alpha = {0}")]
    RequiresXyCoupling(f64),

    #[error("analytic blocks require equal qubit Zeeman energies, got E_Q = {e_q}, E_Q' = {e_qp}")]
    UnequalQubitEnergies { e_q: f64, e_qp: f64 },

    #[error("no spin oscillation: (R-1)^2 + 4 J1'^2 + 4 J2'^2 vanishes")]
    NoOscillation,

    #[error("rotation to the {{A, T, E}} basis is undefined when J1 = J2 = 0")]
    UndefinedRotation,

    #[error("gate leaks {leakage:.3e} of the population out of the logical subspace")]
    LeakyGate { leakage: f64 },

    #[error("gate is not unitary on the logical subspace (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("gate lacks the corner-phase plus central-block structure (residual {0:.3e})")]
    NotBlockStructured(f64),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("no phase crossing of pi in tau range [{min}, {max}]")]
    NoCrossing {
        min: f64,
        max: f64,
        /// `(tau, unwrapped phi)` samples of the scan.
        trace: Vec<(f64, f64)>,
    },
}
