//! Tools for lower-bounding chromatic numbers of distance graphs in the plane.
//!
//! The crate is organised bottom-up:
//!
//! - [`exactlat`]: exact lattice families `D_{q,k}` and their embedding.
//! - [`spectral`]: the weighted Fourier sum `w^(u)`, certified minimization
//!   over the torus and the ratio bound on the independence density.
//! - [`weights`]: polynomial and prime weight profiles, sieving, `theta`
//!   and totient bounds.
//! - [`expsum`]: Weyl sums, arc decompositions and rational approximation.
//! - [`oracle`]: exact independent sets and colourings of small quotient
//!   graphs, used to cross-check spectral bounds.
//! - [`colouring`]: explicit avoidance colourings and randomized falsifiers.
//! - [`cli`]: the command line front end.

pub mod cli;
pub mod colouring;
pub mod error;
pub mod exactlat;
pub mod expsum;
pub mod oracle;
pub mod phase;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
