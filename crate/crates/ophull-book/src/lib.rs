//! Runs every code block of the book as a documentation test.
//!
//! mdBook cannot execute snippets against a workspace crate, but rustdoc
//! can: each chapter is included as the documentation of an empty module, so
//! `cargo test -p ophull-book` compiles and runs all of its code blocks.
//! One module per chapter keeps test failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/factored-operators.md")]
pub mod factored_operators {}

#[doc = include_str!("../../../book/src/shared-subspace.md")]
pub mod shared_subspace {}

#[doc = include_str!("../../../book/src/convex-hull.md")]
pub mod convex_hull {}

#[doc = include_str!("../../../book/src/simulated-families.md")]
pub mod simulated_families {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
