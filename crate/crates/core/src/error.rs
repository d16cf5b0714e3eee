use crate::grid::Field;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{quantity} must be positive, got {value}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field has no cells")]
    EmptyField,

    #[error("maximum wave speed is zero; set a dt cap or a fixed time step")]
    ZeroWaveSpeed,

    #[error("length mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("dense assembly limited to {limit} cells, grid has {cells}")]
    GridTooLarge { cells: usize, limit: usize },

    #[error("reference grid {reference:?} is not an integer refinement of {coarse:?}")]
    NonNestedGrids {
        coarse: Vec<usize>,
        reference: Vec<usize>,
    },

    #[error("Helmholtz solve did not converge: relative residual {residual:.3e} > {tol:.3e}")]
    SolverBreakdown { residual: f64, tol: f64 },

    #[error("invalid tableau: {}", .0.join("; "))]
    InvalidTableau(Vec<String>),

    /// A step produced a state outside the admissible set. `run` turns this
    /// into [`Error::BlowUp`] once the step index and time are known.
    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("blow-up at step {step} (t = {t}): {reason}")]
    BlowUp {
        step: usize,
        t: f64,
        reason: String,
        last_state: Box<Field>,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Error::BlowUp { .. })
    }
}
