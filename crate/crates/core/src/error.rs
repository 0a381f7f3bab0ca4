use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A bracket defining `T₀` or `T₁` is numerically singular: the model has
    /// a scattering resonance at this bin.
    #[error("singular T-matrix bracket at bin {bin} (E = {energy}): condition number {cond:.3e}")]
    SingularTMatrix { bin: usize, energy: f64, cond: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The non-jump part of a generator is not `−½{Φ(1),X} + i[H,X]`.
    #[error("generator remainder has no anticommutator + commutator form (defect {defect:.3e})")]
    ShapeMismatch { defect: f64 },

    #[error("correlator needs {required} terms, budget is {budget}")]
    CombinatoricsOverflow { required: u128, budget: u128 },

    #[error("Fock truncation too small: tail {tail:.3e} exceeds {tolerance:.1e}")]
    TruncationTooSmall { tail: f64, tolerance: f64 },

    #[error("{0}")]
    InvalidInput(String),
}
