//! Phase-only compressive sensing: recover sparse signals and low-rank
//! matrices from the *phases* of complex Gaussian measurements, discarding
//! every magnitude.
//!
//! The core trick is a reformulation: given measured phases z = sign(Phi x),
//! the signal direction is the solution of an ordinary real linear system —
//! one row pinning a sign-weighted average to 1, plus m rows forcing each
//! measurement's phase to match z. Recovery then reduces to classical
//! compressive sensing (basis pursuit / nuclear-norm minimization via
//! proximal ADMM) on that system:
//!
//! - [`sensing`] draws Gaussian ensembles and signals and takes phase-only,
//!   dithered, noisy, and trace-map measurements,
//! - [`reformulation`] builds the linearized systems and their low-rank
//!   matrix-free counterpart,
//! - [`solvers`] holds the ADMM solvers,
//! - [`recovery`] wires full pipelines end to end (including norm recovery
//!   through dithering and stability under bounded phase noise),
//! - [`diagnostics`] probes restricted isometry constants and the
//!   concentration phenomena the guarantees rest on,
//! - [`experiments`] runs deterministic seeded Monte Carlo sweeps and
//!   [`plot`] renders the resulting success curves.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod plot;
pub mod recovery;
pub mod reformulation;
pub mod sensing;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{
    embed_vector, kappa, phase, sample_complex_gaussian, sample_complex_gaussian_vector,
    to_complex, to_real, unembed_vector, ComplexMatrix, ComplexVector, RealMatrix, RealVector,
};
pub use recovery::{
    direction_error, direction_error_matrix, recover_full_dithered, recover_linear_cs,
    recover_lowrank, recover_noisy, recover_sparse, RecoveredSignal, RecoveryOutcome,
};
pub use reformulation::{
    build_complex, build_complex_scaled, build_dithered, build_lowrank, build_real,
    rescaled_truth, rescaled_truth_lowrank, residual_phase_consistency, t_hat_complex,
    LowRankSystem, ReformulatedSystem, SystemCase, T_HAT_REAL,
};
pub use sensing::{
    corrupt_phases, gen_lowrank_signal, gen_sparse_signal, measure_lowrank_phases, measure_phases,
    measure_phases_dithered, DitheredEnsemble, Field, LowRankMap, NoiseModel, PhaseObservation,
    SensingEnsemble,
};
pub use solvers::{
    basis_pursuit, basis_pursuit_denoise, nuclear_min, project_onto_residual_ball, soft_threshold,
    singular_value_threshold, RecoveredPoint, RecoveryReport, SolveStatus, SolverOptions,
};
