//! Attention heatmaps and the run report.

mod heatmap;
mod run_report;

pub use heatmap::{heatmap_fragment, heatmap_from_text, heatmap_from_tokens, render_heatmap, word_intensities, HeatmapDoc, HeatmapWord};
pub use run_report::{emit_run_report, heatmap_file, render_run_report, write_heatmap_pages, RunArtifacts, HEATMAP_DIR, METRICS_JSON, REPORT_HTML};
