//! Server-side countermeasures.

mod fim;
mod normalize;

pub use fim::{
    fim_filter_reports, fim_filter_trajectories, fim_report_mask, frequent_cells, percentile,
    FimConfig, ReportFilter,
};
pub(crate) use normalize::uniform;
pub use normalize::{clamp_distribution, normalize_distribution};
