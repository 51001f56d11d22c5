pub mod construction;
pub mod error;
pub mod hom;
pub mod lattice;
pub mod opminus;
pub mod polyhedral;
pub mod rational;

/// Version tag carried by every JSON document the crate writes.
pub const FORMAT: &str = "specnorm/1";
