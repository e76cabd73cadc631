//! Finite-dimensional machinery for interaction groups: partial
//! representations of groups by words and normal forms, completely positive
//! group actions on C*-algebras with verified axioms, Hilbert-module and
//! regular-representation constructions, covariant representations with
//! graded crossed products and redundancy scans, the extension problem for
//! commuting endomorphism/transfer systems, and the fermionic Fock-space
//! models that bound what can be extended.

pub mod algebra;
pub mod covariant;
pub mod extension;
pub mod fock;
pub mod group;
pub mod hmodule;
pub mod interaction;
pub mod linalg;
pub mod models;
pub mod report;
