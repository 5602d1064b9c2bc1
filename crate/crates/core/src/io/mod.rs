//! Run configuration, drivers and file emission.

mod config;
mod driver;
mod writers;

pub use config::{load_config, parse_config, Cadence, ConfigError, OutputFormat, RunConfig};
pub use driver::{
    analyze, resolve_output_dir, run, run_case, run_in, sweep, sweep_in, AnalyzeOptions, AnalyzeReport, RunError,
    RunReport, RunStatus, SweepReport, OUTPUT_ROOT_ENV,
};
pub use writers::{
    field_csv, field_vtk, fmt17, metrics_csv, parse_field_csv, read_field_csv, residuals_csv, sha256_hex,
    write_field_csv, write_field_vtk, write_file, ContourSidecar, FieldRecord, IoError, Manifest, ManifestEntry,
    MetricRow, FIELD_CSV_HEADER, MANIFEST_NAME, METRICS_CSV_HEADER, RESIDUAL_CSV_HEADER,
};
