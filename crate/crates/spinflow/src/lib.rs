//! Simulation library for one-directional nuclear polarization transport in
//! hybrid electron/nuclear spin chains under simultaneous optical spin
//! pumping and spin-lattice relaxation.
//!
//! # Conventions
//!
//! - Hamiltonian coefficients are stored in ordinary frequency units (Hz).
//!   Time evolution applies the angular factor, `dpsi/dt = -i 2*pi H psi`.
//! - Dissipation rates are plain rates in 1/s and enter collapse operators
//!   as `sqrt(rate)` with no 2*pi.
//! - Every tensor factor is ordered by descending magnetic quantum number.

pub mod blas_guard;
pub mod config;
pub mod effective;
pub mod error;
pub mod integrate;
pub mod lindblad;
pub mod model;
pub mod nonhermitian;
pub mod observables;
pub mod operator;
pub mod presets;
pub mod runner;
pub mod space;
pub mod steady;
pub mod state;
pub mod traj;
pub mod units;

pub use error::{Error, Result};
pub use operator::{embed, embed_product, spin_matrices, Spin, SpinOperator};
pub use space::SpaceLayout;
pub use state::QuantumState;

/// Angular conversion applied to Hamiltonians during time evolution.
pub const TAU: f64 = std::f64::consts::TAU;
