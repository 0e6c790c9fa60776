pub mod cli;
pub mod escape;
pub mod expr;
pub mod numerics;
pub mod semigroup;
pub mod singular;
pub mod topology;
