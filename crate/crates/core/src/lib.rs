//! Numerical laboratory for the two-dimensional gravity free-boundary
//! problem `Delta u = 0` in `{u > 0}`, `|grad u|^2 = x2` on `d{u > 0}`.
//!
//! Fields live on uniform grids ([`field`]); closed-form homogeneous
//! solutions serve as oracles ([`profiles`]); discrete solutions come from
//! [`solver`]; the monotonicity and frequency functionals are in
//! [`diagnostics`]; rescalings and classification of stagnation points are in
//! [`blowup`].

pub mod blowup;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod geom;
pub mod io;
pub mod profiles;
mod recon;
pub mod solver;
pub mod tolerances;

pub use error::{Error, Result};
pub use field::{circle_integral, disk_integral, make_field, DomainSpec, IndicatorField, ScalarField};
pub use geom::Point;
pub use profiles::{Profile, ProfileKind};
