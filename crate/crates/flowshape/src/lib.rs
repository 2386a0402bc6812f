//! Shape optimization of an obstacle in a 2D flow channel.
//!
//! Minimizes the dissipated energy J = (nu/2) int Dv:Dv of a stationary
//! Navier-Stokes flow by deforming the obstacle boundary. Descent directions
//! are computed in W^{1,inf} by an ADMM with exact per-step volume and
//! barycenter constraints (`winf`), or by a p-Laplace relaxation (`plap`)
//! for comparison. The outer accept/reject loop lives in `optimizer`.

pub mod constraints;
pub mod error;
pub mod fem;
pub mod flow;
pub mod mesh;
pub mod optimizer;
pub mod plap;
pub mod vtk;
pub mod winf;

pub use error::Error;
pub use mesh::{Marker, QualityReport, Rect, TriMesh};

pub type Result<T> = std::result::Result<T, Error>;
