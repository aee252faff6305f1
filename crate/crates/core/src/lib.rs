//! Event photography planning: LM-generated shot lists, embedding hygiene,
//! frame retrieval, face-aware cropping, and a video summarization baseline.

pub mod atomic;
pub mod baseline;
pub mod exec;
pub mod eval;
pub mod facegeom;
pub mod fixture;
pub mod hygiene;
pub mod media;
pub mod model;
pub mod plot;
pub mod providers;
pub mod retrieval;
pub mod shotlist;

pub use exec::Execution;
