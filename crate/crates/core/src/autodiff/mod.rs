//! Reverse-mode automatic differentiation over dense `f64` arrays.

mod array;
mod check;
mod graph;

pub use array::Array;
pub use check::finite_difference_gradient;
pub use graph::{sigmoid, Graph, Op, Var};
