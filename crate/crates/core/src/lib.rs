//! Ordinal classification of interval-valued data and interval-valued
//! functional data.

pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod interval;
pub mod io;
pub mod linear;
pub mod methods;
pub mod metrics;
pub mod numeric;
pub mod par;
pub mod transform;

pub use error::{Error, Result};
pub use interval::{Channel, Interval, IntervalCurve, IntervalVector, LabeledDataset, Observation};
