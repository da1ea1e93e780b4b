//! Exact algebra for finitary almost automorphisms of rooted regular
//! trees, the cube complex they act on, fixed-point search on finite
//! median graphs, and Cremona-style transformations of small projective
//! planes.

// index loops mirror the matrix notation throughout
#![allow(clippy::needless_range_loop)]

pub mod aaut;
pub mod cremona;
pub mod cube;
pub mod median;
pub mod simplicial;
pub mod tree;
pub mod verify;

#[cfg(test)]
mod aaut_tests;
#[cfg(test)]
mod cremona_tests;
#[cfg(test)]
mod cube_tests;
