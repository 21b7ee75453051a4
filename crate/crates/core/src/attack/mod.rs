//! Input and output poisoning against the victim protocols.

mod craft;
mod harness;

pub use craft::{
    craft_opa_direct, craft_opa_length, craft_opa_oue, craft_opa_transitions, craft_oue_report,
    expected_ones,
};
pub use harness::{
    assemble_poisoned_run, direct_fake_reports, fake_count, run_ipa, AttackConfig, AttackMode,
    DefenseConfig, PoisoningHarness, RunOutput,
};
