//! Central finite-difference gradient checking.

use super::params::{ParamId, ParamStore};
use super::tape::ParamGrads;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// Compare `analytic` against central differences of `loss` with step `eps`.
///
/// The relative error of one entry is `|a - n| / max(|a|, |n|, floor)`.
/// `select` chooses which parameters are perturbed.
pub fn check_gradients(
    store: &ParamStore,
    analytic: &ParamGrads,
    eps: f64,
    floor: f64,
    select: impl Fn(ParamId) -> bool,
    loss: impl Fn(&ParamStore) -> Result<f64>,
) -> Result<GradCheckReport> {
    let mut probe = store.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_relative_error: 0.0,
        worst: None,
    };
    for id in store.ids() {
        if !select(id) {
            continue;
        }
        for k in 0..store.get(id).len() {
            let orig = store.get(id).as_slice()[k];
            probe.get_mut(id).as_mut_slice()[k] = orig + eps;
            let up = loss(&probe)?;
            probe.get_mut(id).as_mut_slice()[k] = orig - eps;
            let down = loss(&probe)?;
            probe.get_mut(id).as_mut_slice()[k] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let a = analytic.get(id).as_slice()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((store.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}
