//! Sub-structuring model reduction for geometrically nonlinear thin-walled
//! structures with frictional clamping.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod assembly;
pub mod cms;
pub mod components;
pub mod condensation;
pub mod contact;
pub mod error;
pub mod fe;
pub mod interface;
pub mod io;
pub mod linalg;
pub mod solvers;

pub use error::{Error, Result};
