use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Fock cutoff {cutoff} too small: truncated norm {norm:.3e}")]
    Truncation { cutoff: usize, norm: f64 },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("density operator trace {trace} differs from 1")]
    InvalidTrace { trace: f64 },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("no sign change of F(alpha) - {target} on [{lo}, {hi}]")]
    NoSignChange { target: f64, lo: f64, hi: f64 },

    #[error("Fourier order {order} needs more than {n_phases} phases")]
    OrderTooHigh { order: usize, n_phases: usize },

    #[error(
        "singular system at order r={order}, |beta|={beta_abs}, N={n_max}, N_c={n_cutoff}: condition number {condition:.3e}"
    )]
    Singular {
        order: usize,
        beta_abs: f64,
        n_max: usize,
        n_cutoff: usize,
        condition: f64,
    },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("setting group (theta={theta}, phi={phi}) covers {found} of {expected} phases")]
    InsufficientPhases {
        theta: f64,
        phi: f64,
        found: usize,
        expected: usize,
    },

    #[error("record metadata disagrees with the expected setting: {0}")]
    InconsistentSettings(String),

    #[error("missing record group for setting (theta={theta}, phi={phi})")]
    MissingSettingGroup { theta: f64, phi: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl Error {
    /// True for failures of the linear system rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::NoSignChange { .. })
    }
}
