//! Barcodes of generating functions quadratic at infinity for compactly
//! supported Hamiltonian diffeomorphisms of the plane.
//!
//! The pipeline takes a composition of C¹-small twist maps (each the time-1
//! flow of an autonomous radial Hamiltonian), samples a generating function
//! for every piece on a lattice, composes the samples into a single function
//! quadratic at infinity, builds the associated relative cubical pair,
//! filters it by the sampled values and reads the persistence barcode off
//! the reduced boundary matrix. Every stage carries explicit constants, so
//! the bottleneck distance between the output and the true barcode is
//! certified.

pub mod cubical;
pub mod error;
pub mod filtration;
pub mod gfqi;
pub mod persistence;
pub mod pipeline;
pub mod plot;
pub mod radial;
pub mod sublevel;
pub mod triplet;

pub use error::Error;
pub use persistence::{Bar, Barcode};
