//! Numerical verification engine for rolling contact-element distributions,
//! integrable rolling and the Bäcklund transformation with isometric
//! correspondence of leaves.

pub mod contact;
pub mod correspondence;
pub mod error;
pub mod forms;
pub mod jets;
pub mod kernel;
pub mod report;
pub mod scenarios;
pub mod surface;

pub use error::{Error, Result};
