//! Synthetic designs, splitting, and Monte Carlo evaluation.

pub mod mc;
pub mod protocol;
pub mod synthetic;

pub use mc::{
    run_mc, ClassSummary, DataSource, ExperimentReport, McConfig, MethodCell, MethodSummary, PairedDifference,
    ReplicateRecord, SourceInfo, Summary, REPORT_FORMAT_VERSION,
};
pub use protocol::{evaluate, split_train_test, Evaluation, Split, MAX_SPLIT_ATTEMPTS};
pub use synthetic::{gen_synthetic, ClassSpec, SyntheticDesign};
