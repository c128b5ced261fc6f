//! Trace-distance tools for non-Markovian open quantum systems.
//!
//! The guide in `book/` walks through each module with runnable examples.

pub mod adc;
pub mod blp;
pub mod channel;
pub mod error;
pub mod grid;
pub mod io;
pub mod qmat;
pub mod tcl;
pub mod witness;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/decay-model.md")]
    mod decay_model {}
    #[doc = include_str!("../../../book/src/master-equations.md")]
    mod master_equations {}
    #[doc = include_str!("../../../book/src/measure.md")]
    mod measure {}
    #[doc = include_str!("../../../book/src/witness.md")]
    mod witness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
