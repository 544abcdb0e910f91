// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod error;
pub mod geom;
pub mod lab;
pub mod lp_ops;
pub mod numgrid;
pub mod rolodex;
pub mod shadow;

pub use error::{Error, Result};
