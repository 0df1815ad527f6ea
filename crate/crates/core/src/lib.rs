//! Finitely generated groups of homeomorphisms of the line and circle:
//! exact piecewise-affine arithmetic, the eventual order, infinitesimals,
//! quasi-invariant measures and the affine semi-conjugacy, distortion
//! estimates, rotation numbers, and example constructions.

pub mod action;
pub mod circle;
pub mod constructions;
pub mod error;
pub mod homeo;
pub mod measure;
pub mod order;
pub mod rational;
pub mod regularity;
pub mod report;
pub mod word;

pub use action::{Action, ActionSpec};
pub use error::{Error, Result};
pub use homeo::{Interval, LineMap, PlMap, Real, SmoothMap};
pub use word::Word;
