//! On-disk formats.
//!
//! * Matrix CSV: one row per observation, comma separated, optional single
//!   header row (detected by a non-numeric first line). Loaded matrices are
//!   transposed so that columns are observations. Values are written with
//!   17 significant digits, so a save/load round trip is bit-exact.
//! * Label files: one nonnegative integer per line.
//! * Reports and configs: `key = value` lines, `#` starts a comment.
//! * Heatmaps: SVG, grayscale by `|entry| / max|entry|`.
//! * Manifests: `sha256  size  name` per artifact.

mod kv;
mod manifest;
mod matrix_csv;
mod svg;

pub use kv::{parse_kv, read_kv, Report};
pub use manifest::{sha256_file, Manifest, ManifestEntry};
pub use matrix_csv::{
    format_value, load_matrix_csv, load_stack, parse_matrix_csv, read_labels, save_labels, save_matrix_csv, save_stack,
};
pub use svg::{render_heatmap, render_heatmap_to};
