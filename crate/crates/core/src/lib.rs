//! Graph signal processing for signals on weighted undirected graphs.
//!
//! The crate covers the graph Fourier transform over adjacency or Laplacian
//! shift operators, spectral and vertex-domain filtering, surrogate null
//! models, graph Slepian bases, and the excursion/correlation statistics built
//! on top of them. A command-line driver lives in [`cli`].

pub mod cli;
pub mod error;
pub mod filters;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod slepian;
pub mod spectral;
pub mod surrogate;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
