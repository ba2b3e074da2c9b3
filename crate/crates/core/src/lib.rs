//! Numerical laboratory for cubic Dirichlet L-functions at s = 1 and the
//! random Euler product that models them.
//!
//! * [`primes`]: sieving, factorization, partial Euler products.
//! * [`eisenstein`]: ℤ[ω] arithmetic and the cubic residue symbol.
//! * [`family`]: the family of primitive cubic characters and their L-values.
//! * [`randmodel`]: the random model, log-moment functions, saddle points, tails.
//! * [`moments`]: the divisor-sum and Euler-product moment evaluations.
//! * [`montecarlo`]: seeded sampling of the random Euler product.

pub mod eisenstein;
pub mod error;
pub mod family;
pub mod numeric;
mod par;
pub mod moments;
pub mod montecarlo;
pub mod primes;
pub mod randmodel;
pub mod tables;

pub use error::{LabError, Result};
