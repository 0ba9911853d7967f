#![no_std]
extern crate alloc;

pub mod algebra;
pub mod criteria;
pub mod curvature;
pub mod dynamics;
pub mod error;
pub mod jacobi;
pub mod linalg;
pub mod locus;
pub mod metric;
mod scan;

pub use algebra::{AlgebraElement, Field, GroupElement, StructuredBasis};
pub use error::{Error, Result};
