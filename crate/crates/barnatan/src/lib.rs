//! Bar-Natan (and generalized Khovanov) chain complexes for link diagrams,
//! the dimension ≤ 1 truncation of their flow categories, flow-category
//! moves, integer homology, canonical classes and the s-invariant.

pub mod cobord;
pub mod complex;
pub mod corpus;
pub mod cube;
pub mod diagram;
pub mod flowcat;
pub mod homology;
pub mod matrix;
pub mod resconf;
pub mod verify;

pub use diagram::{parse_pd, DiagramError, LinkDiagram, State};
