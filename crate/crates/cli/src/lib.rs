//! Pipeline around `audiovat`: manifests, feature extraction, subset reports
//! and label stacks.

pub mod config;
pub mod error;
pub mod features;
pub mod labels;
pub mod manifest;
pub mod output;
pub mod report;
pub mod stack;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use labels::{parse_dcase_filename, City, Scene};
pub use manifest::{parse_manifest, LabeledManifest, Record};
pub use report::{run_report, Grouping, Method, ReportOptions, ReportSummary};
pub use stack::{label_stack, LabelStack, Palette};
