//! SE(3)-invariant Riemannian metrics on position-orientation space
//! M₃ = R³ × S², the minimal-angular-velocity (mav) generator and distance
//! between two position-orientations, pairwise learning features built on
//! them, and a numerical verification harness.
//!
//! ```
//! use m3_metric::{mav_distance, MetricParams, PositionOrientation};
//!
//! let p1 = PositionOrientation::from_arrays([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
//! let p2 = PositionOrientation::from_arrays([0.0, 2.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
//! let w = MetricParams::strict([1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
//! let d = mav_distance(&w, &p1, &p2);
//! assert!((d - std::f64::consts::FRAC_PI_2 * 3f64.sqrt()).abs() < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod features;
pub mod group;
pub mod mav;
pub mod metric;
pub mod verify;

pub use error::{M3Error, Result};
pub use features::{bekkers_invariants, grad_weights, pairwise_features, FeatureKind, FeatureMatrix, InvariantTriple};
pub use group::{PositionOrientation, RotoTranslation, TangentVector, Twist, Vec3};
pub use mav::{mav_distance, mav_generator, planar_rototranslation, screw_decompose, ScrewDisplacement};
pub use metric::{adapted_frame, is_positive, reparam, AdaptedFrame, MetricParams};
pub use verify::SuiteReport;
