//! Curing-order approximation, network design and exact simulation for
//! SIS epidemics on weighted contact networks.

pub mod balanced;
pub mod crusade;
pub mod error;
pub mod generators;
pub mod graph;
pub mod netdesign;
pub mod num;
pub mod par;
pub mod sim;

pub use error::{Error, Result};
