//! Kinematic integrals on S² and ℝ², their coefficient fits, and the relation to the product.

pub mod diagram;
pub mod fit;
pub mod group;
pub mod integral;
pub mod suite;

pub use diagram::{
    pairing_matrix, perturbation_scan, predicted_coefficients, solve_structure, theorem6_residual, DiagramFit,
    DiagramReport, Perturbation, SPHERE_VALUES,
};
pub use fit::{fit_basis, fit_coefficients, kinematic_samples, KinematicCoefficients, KinematicSample};
pub use group::{sample_group, GroupElement, GroupSpace, Window};
pub use integral::{mc_basis_integrals, mc_kinematic_integral, se2_window, BasisIntegrals, Estimate, McConfig};
pub use suite::{sphere_experiment, sphere_pairs, ExperimentConfig, SphereExperiment};
