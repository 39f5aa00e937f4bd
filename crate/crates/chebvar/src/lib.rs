//! Frobenius cycle-type statistics for primes in arithmetic progressions.
//!
//! The library classifies unramified primes by the factorization type of a
//! fixed integer polynomial, builds the associated weighted counting
//! functions theta(x; C, q, a), twists them by Dirichlet characters, and
//! measures the average square error of the arithmetic-progression counts
//! against their expected main terms.

pub mod characters;
pub mod config;
pub mod error;
pub mod experiment;
pub mod galois;
pub mod kahan;
pub mod poly;
pub mod report;
pub mod selfcheck;
pub mod sieve;

pub use error::{Error, Result};
