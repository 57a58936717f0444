//! Static backward, control and data slicing for a small structured
//! imperative language, together with an interpreter and the oracles used to
//! check slices against program behavior.
//!
//! The pipeline is: [`lang::parse_program`] → [`lang::augment`] →
//! [`lang::inline_calls`] → [`cfg::build_cfg`] → [`pdg::Pdg::build`] →
//! the slicers in [`slice`].

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod lang;
pub mod cfg;
pub mod cdeps;
pub mod dataflow;
pub mod pdg;
pub mod slice;
pub mod interp;
pub mod oracle;
