//! Reference computations that share no numerical kernels with the main
//! path: closed forms, an adaptive Dormand–Prince Green's-function
//! construction, adaptive Gauss–Kronrod series terms and Crank–Nicolson
//! evolution.

pub mod adaptive;
pub mod closed_forms;
pub mod cn;
pub mod green;
pub mod ode;

pub use adaptive::brute_force_vn;
pub use closed_forms::{free_heat_kernel, free_kernel, mehler_kernel, Harmonic, Magnetic};
pub use cn::{cn_evolve, Grid1D};
pub use green::GreenOracle;
