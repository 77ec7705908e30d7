//! Configuration documents, measured-response tables and result files.

mod config;
mod emit;
mod table;

pub use config::{
    effective_toml, load_config, parse_config, ConfigDocument, SweepSection, SCHEMA_VERSION,
};
pub use emit::{
    emit_results, render_csv, render_eye_matrix, render_json, render_summary_csv, round_ber,
    summarize, OutputFormat, SummaryRow, RESULT_COLUMNS, SUMMARY_COLUMNS,
};
pub use table::{parse_response_table, read_response_table, ResponseRow, ResponseTable};
