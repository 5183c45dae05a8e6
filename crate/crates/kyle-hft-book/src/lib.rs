//! The guide in `book/` is written for mdbook, which cannot run its own
//! examples. Each chapter is pulled in here as module docs so that
//! `cargo test -p kyle-hft-book` compiles and runs every snippet.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/limits.md")]
pub mod limits {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/thresholds.md")]
pub mod thresholds {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
