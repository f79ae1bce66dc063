//! Small-noise diffusion on the ground-state density: drift, exit times,
//! Dirichlet eigenvalues and the quasi-potential.

pub mod action;
pub mod conditions;
pub mod dirichlet;
pub mod exit;
pub mod model;
pub mod scaling;

pub use action::{action_functional, minimize_action, quasi_potential_gradient, ActionMinimum, ActionPath, QuasiPotential};
pub use conditions::{invariant_measure_check, lipschitz_check, omega_limit_check, InvariantMeasureReport, LipschitzReport, OmegaReport};
pub use dirichlet::{dirichlet_eigenvalue_fd, generator_residual, DirichletEigen};
pub use exit::{eigenvalue_from_exits, run_exits, DomainShape, EigenEstimate, ExitRecord, SDEParams};
pub use model::{GroundStateModel, ModelInfo, QuadratureModel};
pub use scaling::{fw_scaling_fit, ScalingFit};
