//! Three-qubit quantum absorption refrigerator: reset and Ohmic-bath
//! thermalisation, adaptive dynamics with dense output, steady states,
//! cold-qubit observables, correlation measures and parameter sweeps.
//!
//! Basis convention: `|0⟩` is the excited level of each qubit and qubit 1
//! is the most significant bit of a basis index (`4 q1 + 2 q2 + q3`).

pub mod config;
pub mod correlations;
pub mod dissipators;
pub mod dynamics;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod parallel;
pub mod plot;
pub mod quantum;
pub mod recipes;
pub mod sweep;

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    State(#[from] quantum::StateError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Dissipator(#[from] dissipators::DissipatorError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Observable(#[from] observables::ObservableError),
    #[error(transparent)]
    Correlation(#[from] correlations::CorrelationError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Sweep(#[from] sweep::SweepError),
    #[error(transparent)]
    Plot(#[from] plot::PlotError),
    #[error(transparent)]
    Recipe(#[from] recipes::RecipeError),
}

impl Error {
    /// Bad input or configuration, as opposed to a numerical failure.
    pub fn is_config(&self) -> bool {
        use recipes::RecipeError as R;
        use dissipators::DissipatorError as D;
        use sweep::SweepError as S;
        matches!(
            self,
            Error::Config(_)
                | Error::Model(_)
                | Error::Sweep(S::Config(_) | S::InvalidPerturbation(_) | S::Header { .. })
                | Error::Recipe(R::Unknown(_) | R::Config(_))
                | Error::Plot(plot::PlotError::UnknownField(_) | plot::PlotError::Shape(_))
                | Error::Dissipator(D::InvalidRate { .. } | D::InvalidCutoff(..))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
