//! Symplectizations of pseudo-Hermitian manifolds and adapted complex tubes.
//!
//! The crate builds the symplectization M×ℝ of explicitly given contact
//! manifolds, constructs adapted complex tubes around the zero section two
//! independent ways (closed form and holomorphic flow extension), and
//! numerically certifies the identities the tube structure forces on the
//! fiber energy: the homogeneous complex Monge-Ampère equation, its boundary
//! conditions, and the structural identities of the two commuting flows.
//!
//! Module map:
//! - [`scalar`]: nested forward-mode duals (exact first/second derivatives).
//! - [`dsl`]: the expression language manifold data is written in.
//! - [`exterior`]: pointwise alternating tensors and d, ι, wedge, brackets.
//! - [`contact`]: manifold specifications, builtin examples, Reeb solver.
//! - [`flows`]: Reeb and ambient flows, holomorphy residuals.
//! - [`sympl`]: the trivialized symplectization and its structure fields.
//! - [`tube`]: adapted tube models and every certification check.
//! - [`sample`]: deterministic Halton sampling of box domains.

// index loops in the numerical kernels intentionally mirror the formulas
#![allow(clippy::needless_range_loop)]

pub mod contact;
pub mod dsl;
pub mod exterior;
pub mod flows;
pub mod linalg;
pub mod sample;
pub mod scalar;
pub mod sympl;
pub mod tube;
