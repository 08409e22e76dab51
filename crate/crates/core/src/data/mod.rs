//! Dataset schema, CSV ingestion and the company-disjoint split.

mod csv_io;
mod schema;
mod split;
mod table;

pub use csv_io::{load_csv, load_csv_for_inference, read_csv, save_csv, write_csv, MISSING_TOKEN};
pub use schema::{FeatureKind, FeatureSchema, TargetSpec};
pub use split::{grouped_split, Partition, SplitAssignment, DEFAULT_RATIOS};
pub use table::{DataTable, Row, TargetValue, Value};
