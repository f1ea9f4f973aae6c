pub mod lm;
pub mod probe;
pub mod suffix;
pub mod units;
