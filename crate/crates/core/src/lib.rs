pub mod charlm;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod probes;
pub mod report;
pub mod suffixlab;
pub mod unitprobe;

pub use error::{Error, Result};
