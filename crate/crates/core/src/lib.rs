pub mod design;
pub mod error;
pub mod experiment;
pub mod lasso;
pub mod projection;
pub mod risk;
pub mod seed;
pub mod smoother;
pub mod stats;
pub mod subset;

pub use error::{Error, Result};
