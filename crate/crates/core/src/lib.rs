//! Integral geometry on the plane and the round two-sphere through the product of smooth valuations.

pub mod bodies;
pub mod contact;
pub mod currents;
pub mod error;
pub mod forms;
pub mod kinematics;
pub mod product;
pub mod quadrature;
pub mod rumin;
pub mod valuations;

pub use error::{Error, Result};
