pub mod bounds;
pub mod cli;
pub mod config;
pub mod density;
pub mod error;
pub mod inference;
pub mod kernel;
pub mod matched;
pub mod model;
pub mod normal;
pub mod optimize;
pub mod rng;
pub mod simulation;
pub mod theta;

pub use config::{AnalysisConfig, BoundaryCorrection, PMode};
pub use density::{DensityFunction, Grid};
pub use error::{Error, Result};
pub use model::{
    CsvSchema, Dataset, MatchedDataset, MatchedObservation, Point, RevealedDataset,
    RevealedObservation, StatedDataset, StatedObservation,
};
pub use theta::{ThetaCell, ThetaEstimate};
