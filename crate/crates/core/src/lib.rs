//! Refined normal approximations to the Student t distribution.
//!
//! The Student t with ν > 2 degrees of freedom is compared against the
//! normal with the same variance ν/(ν − 2). The crate provides
//!
//! * the exact density and survival function ([`student`]),
//! * the local expansion of the density ratio in powers of 1/ν ([`expansion`]),
//! * shifted-normal survival approximations of orders 0 to 3 with their
//!   extremal error constants and error-rate scans ([`survival`]),
//! * approximate and exact percentage points ([`quantile`]),
//! * a command-line front end ([`cli`]).

pub mod cli;
pub mod error;
pub mod expansion;
pub mod quantile;
pub mod roots;
pub mod special;
pub mod student;
pub mod survival;

pub use error::{Error, Result};
pub use special::{Accuracy, Probability};
pub use student::{BulkSpec, DegreesOfFreedom, StandardizedPoint};
pub use survival::ApproxOrder;
