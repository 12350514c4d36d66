pub mod chanbound;
pub mod circuit;
pub mod cohbound;
pub mod design;
pub mod errmodel;
pub mod error;
pub mod matcore;
pub mod mcsample;
pub mod optkit;
pub mod partition;

#[cfg(test)]
mod proptests;
#[cfg(test)]
mod testkit;

pub use circuit::{Circuit, Gate, Pulse, PulseSequence};
pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, ComplexVector};
