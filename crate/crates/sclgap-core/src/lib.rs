//! Certified lower bounds for stable commutator length.
//!
//! Everything here is exact: values are [`Q`] rationals, quasimorphisms carry
//! proved defect bounds, and every bound is returned as an [`SclCertificate`].
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod brooks;
pub mod circle;
pub mod circle_words;
pub mod error;
pub mod gog;
pub mod graph_products;
pub mod lattice;
pub mod lp;
pub mod norms;
pub mod qm;
pub mod rational;
pub mod words;

pub use error::{Error, Result};
pub use qm::{CertKind, SclCertificate};
pub use rational::Q;
pub use words::{Alphabet, Chain, Letter, Order, Word};
