//! Trap landscape, condensate and loss modelling for atoms held near a dielectric
//! surface by a magnetic trap and a repulsive evanescent wave.

pub mod app;
pub mod condensate;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod landscape;
pub mod numerics;
pub mod potential;
pub mod regression;
pub mod spectroscopy;

pub use error::{Error, Result};
pub use landscape::LandscapeReport;
pub use potential::{Point3, TrapConfiguration, TrapPotential};
