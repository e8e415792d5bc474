//! Cohort schema, CSV I/O, angle encoding and the synthetic cohort
//! generator.

mod cohort;
mod encode;
mod schema;
mod subsample;
mod synth;

pub use cohort::{load_cohort, read_cohort, save_cohort, write_cohort, Cohort, LoadReport};
pub use encode::{encode_features, feature_matrix, EncodingMethod, FeatureEncoder};
pub use schema::{
    CohortSchema, Variable, VariableKind, EVENT, TECHNIQUE_CONVERSION, TECHNIQUE_LAPAROSCOPIC,
    TECHNIQUE_OPEN, TIME, TREATMENT,
};
pub use subsample::stratified_subsample;
pub use synth::{generate_synthetic_cohort, SynthConfig, SyntheticCohort, SYNTH_COLUMNS};
