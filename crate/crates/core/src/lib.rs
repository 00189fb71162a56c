//! Hadamard convolution, integral means and Baernstein star-function
//! comparisons for analytic functions on the unit disc.

pub mod circle;
pub mod config;
pub mod error;
pub mod hull;
pub mod loewner;
pub mod measures;
pub mod series;
pub mod star;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use series::{Catalog, GrowthClass, TruncatedSeries};
