//! Collective typical-subspace measurements on ensembles of identically
//! prepared qubits.
//!
//! A single yes/no measurement, built from a product basis and a frequency
//! window on measurement records, decides whether an unknown state lies in a
//! thin layer of the Bloch ball orthogonal to the basis diameter. Sweeping
//! the diameter over the sphere locates the plane containing the state's
//! eigen-axis, and two sweeps pin the axis down without ever reading out a
//! single copy destructively.
//!
//! The crate is organized around one analytic identity: the yes-probability
//! of the collective measurement equals a binomial mass over the frequency
//! window, so it can be evaluated exactly for any ensemble size. The
//! [`dense`] module materializes the same measurement as explicit operators
//! on the joint Hilbert space and serves as the ground-truth oracle for the
//! analytic path; [`scanner`] drives the sequential estimation protocol in
//! either mode.

pub mod bloch;
pub mod dense;
pub mod error;
pub mod measurement;
pub mod scanner;
pub mod types;

pub use error::{Error, Result};
