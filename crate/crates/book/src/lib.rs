//! The guide under `book/` is plain mdbook, which cannot run listings that
//! depend on workspace crates. Each chapter is pulled in here as a module doc
//! so `cargo test --doc` compiles and runs every listing against the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/weeks-and-splines.md")]
pub mod weeks_and_splines {}
#[doc = include_str!("../../../book/src/lag-features.md")]
pub mod lag_features {}
#[doc = include_str!("../../../book/src/elastic-net.md")]
pub mod elastic_net {}
#[doc = include_str!("../../../book/src/boosted-trees.md")]
pub mod boosted_trees {}
#[doc = include_str!("../../../book/src/additive-model.md")]
pub mod additive_model {}
#[doc = include_str!("../../../book/src/model-selection.md")]
pub mod model_selection {}
#[doc = include_str!("../../../book/src/lag-reports.md")]
pub mod lag_reports {}
#[doc = include_str!("../../../book/src/synthetic-studies.md")]
pub mod synthetic_studies {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
