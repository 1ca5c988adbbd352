pub mod error;
pub mod geometry;
pub mod handeye;
pub mod io;
pub mod metrics;
pub mod planner;
pub mod pointcal;
pub mod simrig;

pub use error::{Error, Result};
