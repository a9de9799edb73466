pub mod classify;
pub mod error;
pub mod frameode;
pub mod immersion;
pub mod invariants;
pub mod jets;
pub mod pseudolinalg;

pub use error::{Error, Result};
