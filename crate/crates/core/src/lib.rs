//! Displaced Gaussian boson sampling for max-clique search: graph encoding,
//! exact (loop) hafnian probabilities, samplers, clique search and the
//! experiment scenarios behind the `dgbs` binary.

pub mod cli;
pub mod clique;
pub mod encoding;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod graph;
pub mod hafnian;
pub mod output;
pub mod probability;
pub mod samplers;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/probabilities.md")]
    mod probabilities {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
