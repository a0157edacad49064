pub mod contour;
pub mod error;
pub mod histories;
pub mod linalg;
pub mod rules;
pub mod sampling;
pub mod scenarios;
pub mod transactional;

pub use error::{Error, Result};
