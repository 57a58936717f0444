//! File formats, corpus handling, program generation and statistics around
//! `dslice_core`. The `dslice` binary is a thin command-line layer over
//! these modules.

pub mod corpus;
pub mod criteria;
pub mod gen;
pub mod inputs;
pub mod pipeline;
pub mod stats;
