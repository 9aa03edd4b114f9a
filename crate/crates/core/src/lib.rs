//! Locally correctable and locally testable codes over binary extension fields.

#![allow(clippy::needless_range_loop)]

pub mod amplifier;
pub mod brute;
pub mod cli;
pub mod code_api;
pub mod concat;
pub mod error;
pub mod gf;
pub mod linalg;
pub mod multiplicity;
pub mod poly;
pub mod reed_solomon;
pub mod sampler;
pub mod schedule;
pub mod tensor;

pub use error::{CodeError, Result};
pub use gf::{Field, FieldElement, FieldSpec};
pub use poly::Poly;
pub use reed_solomon::RsCode;
