//! The product of smooth valuations, its template oracle, structure constants
//! and the functional calculus.

pub mod alesker;
pub mod blowup;
pub mod oracle;
pub mod structure;

pub use alesker::{alesker_product, gt_pair, verify_prop64, ProductConfig, Prop64Report};
pub use blowup::{blowup, gelfand_transform, gelfand_transform_oriented, solve_t, Blowup, ORIENTATION};
pub use oracle::{template_product, OracleConfig, TemplateOracle};
pub use structure::{
    condition_number, evaluate_products, functional_calculus, reference_suite, series_coefficients, AlgebraReport,
    FunctionalResult, ProductEvaluations, StructureConstants,
};
