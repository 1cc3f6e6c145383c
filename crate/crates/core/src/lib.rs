//! Distribution of the wealth share `omega = x1 / (x1 + x2)` for two
//! independent draws from a tempered Pareto ensemble.

pub mod ensembles;
pub mod error;
pub mod format;
pub mod modality;
pub mod monte_carlo;
pub mod phase_diagram;
pub mod share_distribution;
pub mod special_functions;

pub use ensembles::{Ensemble, EnsembleKind, EnsembleSpec, SampleBatch};
pub use error::{Error, Result};
pub use share_distribution::ShareDensity;
