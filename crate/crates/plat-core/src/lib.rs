pub mod beta_zeta;
pub mod dependence;
pub mod enumeration;
pub mod error;
pub mod exact_arith;
pub mod lattice;
pub mod plancherel;
pub mod report;
pub mod spherical;
pub mod suites;

pub use error::{PlatError, Result};
pub use exact_arith::{Base, ComplexValue, HalfPowerScalar};
pub use lattice::{Lattice, Signature};
pub use report::VerificationReport;
