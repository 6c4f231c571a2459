//! File formats, dataset handling, the batch pipeline and the command-line
//! front end for landmark image subset selection. The numerical work lives
//! in [`gaborset_core`].

pub mod config;
pub mod dataset;
pub mod error;
pub mod fixture;
pub mod formats;
pub mod imageio;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
