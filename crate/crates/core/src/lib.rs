//! Non-Archimedean polyhedral expansions of finite ultrametric spaces.

pub mod nerve;
pub mod padic;
pub mod pipeline;
pub mod shadow;
pub mod spectrum;
pub mod ultraspace;

mod union_find;
