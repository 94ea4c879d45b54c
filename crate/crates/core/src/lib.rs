//! Spherical needlet frames on HEALPix grids.

pub mod bench;
pub mod error;
pub mod fastsht;
pub mod formats;
pub mod harmonics;
pub mod healpix;
pub mod legendre;
pub mod needlet;
pub mod render;
pub mod wendland;
pub mod window;

pub use error::{Error, Result};
pub use harmonics::HarmonicCoeffs;
pub use healpix::{HealpixGrid, SphPoint};
pub use needlet::{NeedletCoeffs, NeedletPlan};
pub use window::WindowSpec;
