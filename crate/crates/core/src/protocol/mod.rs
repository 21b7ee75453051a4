//! Simplified victim protocols: full-trajectory upload and transition
//! reports with Markov synthesis.

mod budget;
mod direct;
mod gridtrace;
mod report;

pub use budget::BudgetLedger;
pub use direct::{direct_traj_perturb, DirectTrajConfig};
pub use gridtrace::{
    estimate_length_quantile, grid_trace_client, grid_trace_length_report, grid_trace_server,
    grid_trace_transition_reports, length_item, length_quantile_from_estimates, transition_items,
    Cleanup, GridTraceConfig, GridTraceReport, ModelRow, ReportCollection, SynthesisModel,
    TransitionDomain, TransitionItems, TransitionReports,
};
pub use report::{read_reports, write_reports, PerturbedReport, ReportFormat};

/// A victim protocol with its parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Direct(DirectTrajConfig),
    GridTrace(GridTraceConfig),
}

impl Protocol {
    pub fn epsilon(&self) -> f64 {
        match self {
            Protocol::Direct(c) => c.epsilon,
            Protocol::GridTrace(c) => c.epsilon,
        }
    }

    pub fn grid(&self) -> &crate::trajectory::GridSpec {
        match self {
            Protocol::Direct(c) => &c.grid,
            Protocol::GridTrace(c) => &c.grid,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Direct(_) => "direct",
            Protocol::GridTrace(_) => "gridtrace",
        }
    }
}
