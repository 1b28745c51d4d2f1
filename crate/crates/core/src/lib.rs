//! Finite-difference solvers for the fourth-order elliptic problem
//! `Δ²u = det(D²u) + λf` on rectangles, with clamped (Dirichlet) or hinged
//! (Navier) boundary conditions.

pub mod energy;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod kpz;
pub mod linalg;
pub mod mpass;
pub mod operators;
pub mod picard;
pub mod radial;
pub mod report;
pub mod solve;

pub use error::{Error, Result};
pub use grid::{axpy, integrate, norm_l1, norm_l2, norm_linf, sub, BoundaryKind, Field, Grid2D};
