//! Stochastic solvers: quantum-jump Monte Carlo, kinetic Monte Carlo,
//! field protocols, the transport-rate oracle, and deterministic ensembles.

pub mod ensemble;
pub mod field;
pub mod gamma;
pub mod kmc;
pub mod qjm;

pub use ensemble::{reduce_series, run_trajectories, trajectory_rng, SeriesStats, TrajectoryEnsemble};
pub use field::{FieldProtocol, Waveform};
pub use gamma::{gamma_eff_limit, gamma_eff_oracle, GammaEffFit, SpVariant};
pub use kmc::{run_kmc, KmcOptions, KmcResult, SpinConfig};
pub use qjm::{
    chain_jump_set, EigenQjmEngine, JumpScheme, QjmOptions, QjmResult, RotatingQjmEngine,
};
