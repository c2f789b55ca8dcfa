//! Classifying invariants of topologically stable Poisson structures on
//! the 2-sphere and the flat 2-torus.
//!
//! A structure is given as `π = f·π₀` where `π₀` is the Poisson bivector of
//! the reference area form (`dz∧dθ` on the sphere, `du∧dv` on the torus) and
//! `f` is a closed-form scalar field written in a small expression language
//! ([`dsl`]). The pipeline samples `f` on a chart grid ([`chart`]), extracts
//! and orients the zero curves ([`zeroset`]), builds the signed
//! region-adjacency graph ([`topology`]), and measures the modular periods and
//! the regularized volume ([`invariants`]). [`classify`] decides equivalence of
//! two structures and [`deform`] applies the two infinitesimal deformation
//! families.
//!
//! The crate is `no_std` + `alloc`; the default `std` and `parallel` features
//! add `std::error::Error` impls and row-parallel sampling.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod chart;
pub mod classify;
pub mod deform;
pub mod dsl;
mod error;
pub mod invariants;
mod math;
pub use math::significant;
pub mod topology;
pub mod zeroset;

pub use chart::{ChartPoint, GridSample, GridSpec, SurfaceChart, SurfaceKind};
pub use classify::{
    classify_pair, cohomology_report, moduli_coordinates, normal_form, CohomologyReport, Mode,
    ModuliCoordinates, Status, Verdict,
};
pub use deform::{deform_period, deform_volume, deformation_report, DeformMode, DeformationResult};
pub use dsl::{parse_field, Expr, Field, ScalarField};
pub use error::{Error, PipelineError, Stage};
pub use invariants::{compute_invariants, InvariantRecord, Tolerances};
pub use topology::{CanonicalCode, HomologyClass, Sign, SignedTopologyGraph};
pub use zeroset::{extract_zero_set, OrientedZeroCurve, ZeroSet};
