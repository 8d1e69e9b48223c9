//! Connection Laplacians and connection heat kernels.
//!
//! A connection graph is a weighted graph whose directed edges carry
//! orthogonal matrices `σ_uv` with `σ_vu = σ_uv⁻¹`. This crate assembles
//! the connection Laplacian `𝓛^σ`, computes the heat kernel `e^{−t𝓛^σ}` by
//! several independent routes, and measures how closely those routes agree:
//!
//! * [`kernel::dense_kernel`]: spectral exponential of the assembled matrix.
//! * [`lattice`]: closed-form series on `ℤ` and `ℤⁿ` with constant or
//!   windowed connections.
//! * [`kernel::consistent_kernel_block`]: the scalar kernel times a path
//!   signature, valid on balanced connections.
//! * [`torus`]: lattice-translate sums and character sums on the connection
//!   discrete torus `ℤⁿ/Mℤⁿ`.
//! * [`vdm`]: vector diffusion embeddings and distances.
//!
//! The guide in `book/` walks through each route with runnable examples.

pub mod bessel;
pub mod blockmat;
pub mod error;
pub mod graph;
pub mod intmat;
pub mod kernel;
pub mod laplacian;
pub mod lattice;
pub mod torus;
pub mod vdm;

pub use blockmat::{BlockMatrix, Spectrum};
pub use error::{Error, Result};
pub use graph::{ConnectionGraph, GroupAction, OrthoMatrix};

// Compiles and runs the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/connection-graphs.md")]
    mod connection_graphs {}
    #[doc = include_str!("../../../book/src/laplacians.md")]
    mod laplacians {}
    #[doc = include_str!("../../../book/src/heat-kernels.md")]
    mod heat_kernels {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/vdm.md")]
    mod vdm {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
