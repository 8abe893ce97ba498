pub mod active;
pub mod config;
pub mod error;
pub mod experiment;
pub mod forecast;
pub mod graph;
pub mod pipeline;
pub mod scsc;
pub mod series;
pub mod spectral;
pub mod stationarity;
pub mod synthetic;

pub use error::{Error, Result};
