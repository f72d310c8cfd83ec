//! Direct characterization of a two-level path state from six postselected
//! spin intensities, at arbitrary spin–path coupling strength.

pub mod error;
pub mod protocol;
pub mod qcore;

pub use error::{Error, Result};
pub mod analysis;
pub mod cli;
pub mod extract;
pub mod fit;
pub mod io;
pub mod report;
pub mod sim;
