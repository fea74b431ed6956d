use std::path::PathBuf;

/// Errors produced by the simulation, analysis and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid Planck constant: {0}")]
    InvalidPlanck(String),

    #[error("invalid kick strength {0}: K must be positive and finite")]
    InvalidKick(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Probability leaked into the outer momentum band of the grid.
    #[error(
        "aliasing guard tripped at t = {t}: probability {tail:.3e} in |j| > 0.9 J \
         (J = {half_size}); rerun with grid = {suggested}"
    )]
    Aliasing {
        t: u64,
        tail: f64,
        half_size: usize,
        suggested: usize,
    },

    #[error("{0}")]
    Domain(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("malformed series file {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when a numerical guard (rather than bad input) stopped the run.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::Aliasing { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
