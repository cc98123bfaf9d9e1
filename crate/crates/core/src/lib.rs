//! Dynamic robust risk measures on finite scenario trees.
//!
//! The crate evaluates worst-case conditional risk over dynamic uncertainty
//! sets and ships randomized checkers for the axioms and time-consistency
//! notions such measures may satisfy.
//!
//! * [`space`]: scenario trees, adapted vectors and processes.
//! * [`riskmeasures`]: one-step conditional risk measures.
//! * [`uncertainty`]: dynamic uncertainty sets and their worst-case solvers.
//! * [`robust`]: robust measures, consolidated sets, recursive construction.
//! * [`properties`]: falsification engine and implication auditor.
//! * [`oracle`]: brute-force reference solvers used for validation.

pub mod error;
pub mod oracle;
pub mod properties;
pub mod riskmeasures;
pub mod robust;
pub mod sampling;
pub mod space;
pub mod uncertainty;

pub use error::{Error, Result};
