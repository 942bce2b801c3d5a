pub mod connection;
pub mod curvature;
pub mod error;
pub mod model;
pub mod nast;
pub mod operator;
pub mod reference;
pub mod transport;

pub use error::{Error, Result};
