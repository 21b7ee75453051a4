use rand::seq::index;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::ldp::{OueParams, OueReport};
use crate::protocol::{
    grid_trace_length_report, length_item, transition_items, GridTraceConfig, GridTraceReport,
    PerturbedReport, TransitionReports,
};
use crate::trajectory::Trajectory;

/// Ones an honest report carries on average, rounded half-up.
pub fn expected_ones(params: &OueParams) -> usize {
    (params.expected_ones() + 0.5).floor() as usize
}

/// A report with the target bit set and uniformly chosen non-target bits
/// added until the ones count matches an honest report's expectation.
pub fn craft_oue_report<R: RngCore + ?Sized>(
    target: usize,
    params: &OueParams,
    rng: &mut R,
) -> Result<OueReport> {
    let d = params.domain();
    if target >= d {
        return Err(Error::Argument(format!(
            "target {target} outside domain {d}"
        )));
    }
    let mut r = OueReport::zeros(d);
    r.set(target);
    let pad = expected_ones(params).saturating_sub(1).min(d - 1);
    if pad > 0 {
        for i in index::sample(rng, d - 1, pad) {
            r.set(if i >= target { i + 1 } else { i });
        }
    }
    Ok(r)
}

/// Output poisoning for the full-trajectory protocol: fakes go out as-is.
pub fn craft_opa_direct(fakes: &[Trajectory]) -> Vec<PerturbedReport> {
    fakes
        .iter()
        .map(|t| PerturbedReport::Trajectory { cells: t.clone() })
        .collect()
}

/// Crafted length report, or an honest one when `craft_length` is off.
pub fn craft_opa_length<R: RngCore + ?Sized>(
    fake: &Trajectory,
    cfg: &GridTraceConfig,
    craft_length: bool,
    rng: &mut R,
) -> Result<OueReport> {
    if craft_length {
        craft_oue_report(length_item(fake, cfg), &cfg.length_params(), rng)
    } else {
        grid_trace_length_report(fake, cfg, rng)
    }
}

/// Crafted transition reports following the honest capping rule.
pub fn craft_opa_transitions<R: RngCore + ?Sized>(
    fake: &Trajectory,
    cfg: &GridTraceConfig,
    l_k: usize,
    rng: &mut R,
) -> Result<TransitionReports> {
    let items = transition_items(fake, cfg, l_k)?;
    let begin = craft_oue_report(items.begin, &cfg.begin_params(l_k), rng)?;
    let ip = cfg.intra_params(l_k);
    let intra = items
        .intra
        .iter()
        .map(|&i| craft_oue_report(i, &ip, rng))
        .collect::<Result<Vec<_>>>()?;
    let terminate = match items.terminate {
        Some(i) => Some(craft_oue_report(i, &cfg.terminate_params(l_k), rng)?),
        None => None,
    };
    Ok(TransitionReports {
        begin,
        intra,
        terminate,
    })
}

/// Full crafted bundle for one fake user.
pub fn craft_opa_oue<R: RngCore + ?Sized>(
    fake: &Trajectory,
    cfg: &GridTraceConfig,
    l_k: usize,
    craft_length: bool,
    rng: &mut R,
) -> Result<GridTraceReport> {
    let length = craft_opa_length(fake, cfg, craft_length, rng)?;
    let transitions = craft_opa_transitions(fake, cfg, l_k, rng)?;
    Ok(GridTraceReport {
        length,
        transitions,
    })
}
