//! Spectra of periodic Schrödinger operators `−Δ + V` and the surface
//! states created in their gaps by dislocations, rotations and muffin-tin
//! interfaces.
//!
//! The building blocks are [`potentials`], the one-dimensional band theory
//! in [`bands1d`], finite-difference operators in [`discretize`] and exact
//! eigenvalue counting in [`eigensolve`]. The defect models live in
//! [`dislocation`], [`sdos`], [`rotation`] and [`muffintin`]. [`cli`] is the
//! `gapcross` binary.
//!
//! ```
//! use gapcross::dislocation::{crossing_count, track_branches};
//! use gapcross::potentials::Potential1D;
//!
//! let v = Potential1D::default_step();
//! let family = track_branches(&v, 1, 2, 20, 1.0 / 100.0, 1e-7)?;
//! assert_eq!(crossing_count(&family).n_k, 1);
//! # Ok::<(), gapcross::Error>(())
//! ```

pub mod bands1d;
pub mod cli;
pub mod discretize;
pub mod dislocation;
pub mod eigensolve;
pub mod muffintin;
pub mod potentials;
pub mod rotation;
pub mod sdos;
pub mod sparse;

mod error;

pub use error::{Error, Result};

// The book's snippets run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/bands.md")]
    mod bands {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/dislocations.md")]
    mod dislocations {}
    #[doc = include_str!("../../../book/src/strips.md")]
    mod strips {}
    #[doc = include_str!("../../../book/src/rotations.md")]
    mod rotations {}
    #[doc = include_str!("../../../book/src/muffin-tin.md")]
    mod muffin_tin {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
