//! Linear self maps of generalized balls.
//!
//! The generalized ball `D_{p,q}` is the open subset of projective space
//! whose homogeneous coordinates satisfy
//! `|z_1|^2 + ... + |z_p|^2 > |z_{p+1}|^2 + ... + |z_{p+q}|^2`,
//! i.e. the projectivized positive cone of the indefinite Hermitian form
//! `H_{p,q} = diag(I_p, -I_q)`. More generally, `D^r_{p,q}` is the set of
//! `r`-planes on which `H_{p,q}` is positive definite, sitting inside the
//! Grassmannian `Gr(r, C^{p+q})`.
//!
//! A `(p+q) x (p+q)` complex matrix acting on homogeneous coordinates may or
//! may not map `D^r_{p,q}` into itself. This crate decides that question and
//! computes the structure of the maps that do:
//!
//! * [`selfmap`] — the classification verdict (not a self map / minimal /
//!   non-minimal / automorphism), the scaling interval
//!   `{λ : M^H H M − λH ⪰ 0}` certifying the expansion property, boundary
//!   extension behavior, and a sampling oracle that checks verdicts
//!   independently.
//! * [`fixed_points`] — fixed points and pointwise-fixed projective lines
//!   from eigenstructure, numerical Jordan data, invariant boundary
//!   subspaces, and an audit of the fixed-point count theorems.
//! * [`automorphisms`] — constructive Witt extension of partial isometries,
//!   transitivity witnesses, non-isotropic dilations, and the factorization
//!   of any `U(p,q)` element into block-unitary and dilation factors.
//! * [`grassmann`] — the `D^r_{p,q}` layer: plane frames, induced maps,
//!   plane sampling oracles, and the invariant-plane search behind the
//!   closure fixed-point theorem.
//! * [`realball`] — real generalized balls and the rotation normalization
//!   used to compare real and complex self-map verdicts.
//!
//! Low-level building blocks live in [`form`] (the indefinite form, vector
//! classification), [`subspace`] (Gram signatures, orthogonal complements)
//! and [`eigen`] (the dense complex eigensolver contract shared by all
//! modules). All operations are pure functions over immutable inputs; all
//! randomized operations are deterministic for a fixed seed.

pub mod automorphisms;
pub mod config;
pub mod eigen;
pub mod error;
pub mod fixed_points;
pub mod fixtures;
pub mod form;
pub mod grassmann;
pub mod jsonio;
pub mod linalg;
pub mod realball;
pub mod selfmap;
pub mod subspace;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use form::{IndefiniteForm, Signature, VectorClass};
pub use linalg::{CMat, CVec, C};
pub use selfmap::{MapCandidate, SelfMapReport, Verdict};
