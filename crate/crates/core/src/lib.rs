//! Friedkin-Johnsen opinion dynamics treated as a Dirichlet problem on a
//! weighted directed graph, with influence diagnostics, broadcasting
//! centralities and Monte Carlo campaigns.

pub mod broadcasting;
pub mod datasets;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod influence;
pub mod io;
pub mod linalg;
pub mod montecarlo;
mod par;
pub mod report;
pub mod sensitivity;
pub mod spectral;
pub mod stats;

pub use dynamics::{DirichletProblem, GreenMethod, Partition, SteadyState, SusceptibilityProfile, WellPosedness};
pub use error::{Error, Result};
pub use graph::{DistanceMatrix, InfluenceSystem, StepMatrix, Steps};
pub use linalg::Norm;
