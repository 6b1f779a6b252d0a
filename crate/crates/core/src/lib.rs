//! Exact integral equivariant cohomology of torus-CW complexes and checks of
//! the exactness of the associated orbit-filtration sequence.

pub mod abcheck;
pub mod corpus;
pub mod ecw;
pub mod grmod;
pub mod intlinalg;
pub mod koszul;
pub mod polyring;
