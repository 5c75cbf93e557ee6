//! Morse diagrams of contact 3-manifolds drawn on square tori, Legendrian
//! link fronts on them, and the combinatorial invariants of both: page
//! topology, first homology, nullhomology status, and Thurston–Bennequin
//! numbers, together with the isotopy moves relating equivalent pictures.

pub mod corpus;
pub mod diagram;
pub mod events;
pub mod front;
pub mod geom;
pub mod augment;
pub mod homology;
pub mod invariant;
pub mod lattice;
pub mod moves;
