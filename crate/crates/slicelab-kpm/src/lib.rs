//! Turns raw epoch reports into the conformance ratio, the 9-feature
//! observation and a persisted CSV dataset for offline training.

mod dataset;
mod window;

pub use dataset::{
    load_dataset, load_rows, DatasetError, DatasetRow, DatasetWriter, CSV_HEADER,
};
pub use window::{build_observation, conformance_ratio, window_from_report, KpmError, KpmWindow};
