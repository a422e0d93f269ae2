//! Kinetostatic design tools for small parallel kinematic machines.
//!
//! The crate models four mechanisms (bipod, biglide, planar 3-RPR and the
//! three-axis Orthoglide), computes their position and velocity kinematics,
//! and evaluates the two classical design criteria built on the Jacobian:
//! the conditioning index and the manipulability ellipsoid. On top of those
//! it maps workspaces, extracts the region where every velocity/force
//! amplification factor stays inside prescribed bounds, and sizes an
//! Orthoglide for a prescribed cubic workspace.
//!
//! ```
//! use pkm::mechanism::{MechanismModel, Pose};
//! use pkm::kinetostatics::analyze;
//!
//! let model = MechanismModel::orthoglide(310.0).unwrap();
//! let pose = Pose::spatial(0.0, 0.0, 0.0);
//! let joints = model.inverse_kinematics(&pose, &model.default_working_mode()).unwrap();
//! let report = analyze(&model, &pose, &joints).unwrap();
//! assert!((report.kappa - 1.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod diffkin;
pub mod error;
pub mod kinetostatics;
pub mod linalg;
pub mod mechanism;
pub mod report;
pub mod synthesis;
pub mod workspace;

pub use error::{Error, Result};
