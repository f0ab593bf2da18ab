//! Persistence, the end-to-end selection/evaluation pipeline and reports.

pub mod config;
pub mod dataset_io;
pub mod io;
pub mod pipeline;
pub mod plan_io;
pub mod report;

pub use config::{BenchConfig, ConfigMap};
pub use dataset_io::{decode_dataset, encode_dataset, load_dataset, save_dataset, MSUB_HEADER_LEN, MSUB_MAGIC, MSUB_VERSION};
pub use io::write_atomic;
pub use pipeline::{
    load_rankers, reduce, run_pipeline, run_pipeline_on, run_selection, save_rankers,
    write_outputs, Method, RunConfig, Selection, Selector, Workbench, RANKER_FILES,
};
pub use plan_io::{decode_plan, encode_plan, load_plan, save_plan};
pub use report::{
    confusion, confusion_csv, report_csv, ConfusionMatrix, EvalReport, SnrResult, REPORT_HEADER,
};
