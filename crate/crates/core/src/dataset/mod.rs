//! Reading annotations and model outputs, and dataset statistics.

pub mod annotation;
pub mod model_output;
pub mod reader;
pub mod stats;

pub use annotation::{read_size_table, record_to_html, AnnotationRecord, CellRecord, RecordError};
pub use model_output::{model_outputs, read_model_outputs, ModelOutputError, ModelOutputRecord};
pub use reader::{read_annotations, AnnotationReader, ReadError, ReadMode};
pub use stats::{dataset_stats, StatsAccumulator, StatsOptions, StatsReport};
