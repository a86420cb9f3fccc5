pub mod error;
pub mod grid;
pub mod lab;
pub mod measure;
pub mod models;
pub mod quad;
pub mod refs;
pub mod selftest;
pub mod stieltjes;

pub use error::{Error, Result};
