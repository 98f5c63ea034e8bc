//! Structural digraph toolkit built around the cycle-packing /
//! feedback-vertex-set duality: vertex-disjoint linkages and Menger duality,
//! temporal digraph routings, directed grids, fences and webs, paths of
//! order-linked and well-linked sets, path-systems with a constructive
//! Lovász-Local-Lemma cleaning step, exact evaluation of every named bound
//! function, and desk-scale exact packing/covering solvers.

pub mod bounds;
pub mod digraph;
pub mod error;
pub mod extract;
pub mod gridweb;
pub mod io;
pub mod linkage;
pub mod pathsystem;
pub mod pos;
pub mod solver;
pub mod temporal;
pub mod testutil;

pub use error::{Error, Result};
