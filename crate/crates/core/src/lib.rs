pub mod causal;
pub mod elasticnet;
pub mod eval;
pub mod error;
pub mod features;
pub mod gam;
pub mod gbt;
pub mod ingest;
pub mod model;
pub mod rng;
pub mod synth;
mod linalg;
pub mod text;
pub mod timeseries;
pub mod weeks;

pub use error::{Error, Result};
