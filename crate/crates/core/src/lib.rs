//! Numerical laboratory for the semiclassical Dirac equation with a variable
//! mass `m(x)`: interface geometry and tubular charts, the unitary normal
//! form near the interface, the Hermite mode ladder of the model operator,
//! an exactly unitary split-step Fourier solver, phase-space transforms with
//! a two-scale mode-density extractor, and Lagrangian transport of the
//! limiting measures along their characteristics.

pub mod chart;
pub mod error;
pub mod fft;
pub mod hermite;
pub mod interp;
pub mod io;
pub mod mass;
pub mod normal_form;
pub mod phase_space;
pub mod solver;
pub mod states;
pub mod transport;
pub mod tubular;
pub mod validation;

pub use error::{CoreError, Result};
pub use mass::{MassKind, MassModel};
pub use solver::{Grid2D, SpinorField};
