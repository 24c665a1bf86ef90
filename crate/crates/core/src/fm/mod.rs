pub mod guard;
pub mod model;
pub mod simplify;
pub mod validate;

pub use guard::Expr;
pub use model::*;
pub use simplify::{simplify, SimplifyLevel};
pub use validate::{validate, validate_with, Strictness};
