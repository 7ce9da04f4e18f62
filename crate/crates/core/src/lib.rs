pub mod bounds;
pub mod designs;
pub mod error;
pub mod experiment;
pub mod matrixcore;
pub mod model;
pub mod rng;
pub mod sdp;
pub mod tight;

pub use error::{Error, Result};
