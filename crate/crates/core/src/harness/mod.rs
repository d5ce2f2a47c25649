//! Configuration, reports, the procedural corpus, random orientation, the
//! end-to-end pipeline, and batch evaluation.

pub mod batch;
pub mod config;
pub mod corpus;
pub mod orientation;
pub mod pipeline;
pub mod report;

pub use batch::{
    batch_evaluate, batch_run, evaluate_prediction, load_annotation, summarize, BatchSummary,
    ObjectOutcome, Outcome,
};
pub use config::{PipelineConfig, CONFIG_SCHEMA};
pub use corpus::{
    corpus_plan, generate_corpus, generate_procedural_object, Annotation, ObjectKind,
    ANNOTATION_SCHEMA,
};
pub use orientation::{object_seed, random_orientation, random_orientation_rng};
pub use pipeline::{load_agent_spec, run_pipeline, run_pipeline_on_mesh, RunOptions};
pub use report::{Report, ReportFlags, Timings, REPORT_SCHEMA};
