//! Instanton numerical invariants of rank-2 bundles on the blown-up plane.
//!
//! A bundle is given in canonical form by its splitting type `j` and an
//! extension class polynomial `p`, glued by `[[z^j, p], [0, z^-j]]`. The
//! crate computes `l(R^1)`, `l(Q)`, the local charge and the dimension of the
//! local moduli space both from closed formulas and from brute-force
//! cohomology, and cross-checks the two.

pub mod algebra;
pub mod bundle;
pub mod cech;
pub mod cli;
pub mod dirimg;
pub mod invariants;
pub mod linalg;
pub mod strata;
