//! Generating densities of homogeneous norms, isometric embeddings into L_q,
//! and volumes of central sections of star bodies.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod extremal;
pub mod quadrature;
pub mod radial;
pub mod representation;
pub mod sections;
pub mod specfun;
pub mod spherical;
