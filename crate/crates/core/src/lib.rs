//! Nonadiabatic geometric gates from cyclic cone loops of a rotating field.
//!
//! A loop of a transverse field rotating at rate `gamma` about a static
//! offset `omega0` carries a spin state around a cone. With an extra
//! longitudinal field `omega_z = gamma` and `gamma = -(omega0^2 + omega1^2)/omega0`
//! the loop returns the state with no dynamical phase, so the acquired phase
//! is purely geometric. Conditioning the cone on a coupled spin gives
//! controlled gates.
//!
//! ```
//! use conegate::phases::{cone_eigenstate, geometric_phase_cone, Branch};
//! let cone = cone_eigenstate(1.0, 1.0, Branch::Upper).unwrap();
//! let g = geometric_phase_cone(cone.theta);
//! assert!((g + std::f64::consts::PI * (1.0 + cone.theta.cos())).abs() < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod gates;
pub mod hamiltonians;
pub mod linalg;
pub mod phases;
pub mod propagation;
mod roots;
pub mod sequences;

pub use error::{Error, Result};
pub use linalg::{Dim, HermitianOperator, Matrix, StateVector, UnitaryMatrix, C64};
