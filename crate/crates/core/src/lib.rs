//! Behind-the-meter solar reconstruction from net-metered interval data.
//!
//! Pipeline: ingest meters and weather ([`io`]), weight days by weather
//! ([`weather`]), compare solar customers to non-solar ones ([`similarity`]),
//! recover self-consumed generation ([`reconstruction`]), then build feeder
//! scenarios ([`scenario`]) and validate against metered truth ([`metrics`]).
//! [`synth`] produces datasets with known ground truth.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod reconstruction;
pub mod scenario;
pub mod similarity;
pub mod synth;
pub mod weather;

pub use error::{Error, ErrorCode, Result};
