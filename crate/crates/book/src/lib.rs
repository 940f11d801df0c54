//! Keeps the guide's code snippets compiling: each chapter becomes the doc
//! comment of a module, so `cargo test` runs its snippets as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/sessions.md")]
pub mod sessions {}

#[doc = include_str!("../../../book/src/backends.md")]
pub mod backends {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
