//! Adaptive subtraction on both arms of a two-mode state.
//!
//! No optical element couples the arms, so the joint success branch is
//! `S_A ⊗ S_B` with `S = Σ_n C_n` and `C_n = click ∘ no_click^{n−1}`. Each
//! arm's sum is folded into a single [`DownshiftMap`] first and then applied
//! once per mode.

use rayon::prelude::*;

use crate::channels::{check_t, tap_kraus, DetectorModel, DownshiftMap, DEGENERATE_PROBABILITY};
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, Truncation};
use crate::metrics::{covariance_matrix, gaussian_log_negativity};
use crate::states::StateSpec;

/// Per-arm conditional maps: `branches[n − 1]` is `C_n`, the run that first
/// clicks on attempt `n`; `timeout` is `no_click^N`.
#[derive(Clone, Debug)]
pub struct ArmMaps {
    pub branches: Vec<DownshiftMap>,
    pub timeout: DownshiftMap,
}

impl ArmMaps {
    /// `Σ_n C_n`.
    pub fn success(&self) -> DownshiftMap {
        let mut total = DownshiftMap::zero(self.timeout.cutoff());
        for c in &self.branches {
            total.add_assign(c);
        }
        total
    }
}

pub fn arm_superoperators(
    t: f64,
    det: &DetectorModel,
    steps: usize,
    cutoff: usize,
) -> Result<ArmMaps> {
    if steps < 1 {
        return Err(Error::invalid("at least one loop step is required"));
    }
    check_t(t)?;
    let kraus = tap_kraus(t, cutoff)?;
    let click = DownshiftMap::from_kraus(&kraus, &det.click_weights(cutoff));
    let silent = DownshiftMap::from_kraus(&kraus, &det.no_click_weights(cutoff));

    let mut branches = Vec::with_capacity(steps);
    let mut waited = DownshiftMap::identity(cutoff);
    for _ in 0..steps {
        branches.push(waited.then(&click));
        waited = waited.then(&silent);
    }
    Ok(ArmMaps {
        branches,
        timeout: waited,
    })
}

/// Outcome of two-arm subtraction, conditioned on a click in both arms.
#[derive(Clone, Debug)]
pub struct DistillationResult {
    pub rho_out: DensityOperator,
    pub p_success: f64,
    pub steps_a: usize,
    pub steps_b: usize,
    pub log_negativity_in: f64,
    pub log_negativity_out: f64,
}

/// Symmetric protocol: same `t`, detector and step budget on both arms.
pub fn distill(
    rho2: &DensityOperator,
    t: f64,
    det: &DetectorModel,
    steps: usize,
) -> Result<DistillationResult> {
    distill_asymmetric(rho2, t, det, steps, steps)
}

pub fn distill_asymmetric(
    rho2: &DensityOperator,
    t: f64,
    det: &DetectorModel,
    steps_a: usize,
    steps_b: usize,
) -> Result<DistillationResult> {
    if rho2.modes() != 2 {
        return Err(Error::invalid("distillation needs a two-mode state"));
    }
    let log_negativity_in = gaussian_log_negativity(&covariance_matrix(rho2)?)?;
    let (rho_out, p_success) = joint_success(rho2, t, det, steps_a, steps_b)?;
    let rho_out = rho_out.ok_or(Error::DegenerateSuccess { p_success })?;
    let log_negativity_out = gaussian_log_negativity(&covariance_matrix(&rho_out)?)?;
    Ok(DistillationResult {
        rho_out,
        p_success,
        steps_a,
        steps_b,
        log_negativity_in,
        log_negativity_out,
    })
}

/// Normalized joint click branch and its probability; the state is `None`
/// below [`DEGENERATE_PROBABILITY`].
pub(crate) fn joint_success(
    rho2: &DensityOperator,
    t: f64,
    det: &DetectorModel,
    steps_a: usize,
    steps_b: usize,
) -> Result<(Option<DensityOperator>, f64)> {
    let d = rho2.cutoff();
    let (arm_a, arm_b) = rayon::join(
        || arm_superoperators(t, det, steps_a, d),
        || arm_superoperators(t, det, steps_b, d),
    );
    let (s_a, s_b) = (arm_a?.success(), arm_b?.success());
    let out = s_b.apply_to_mode(&s_a.apply_to_mode(rho2, 0)?, 1)?;
    let p_success = out.trace();
    if p_success < DEGENERATE_PROBABILITY {
        return Ok((None, p_success));
    }
    Ok((Some(out.scale(1.0 / p_success)), p_success))
}

/// One point of a probability/negativity frontier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontierPoint {
    pub t: f64,
    pub p_success: f64,
    pub log_negativity: f64,
}

/// Evaluates [`distill`] over a grid of `t`; points come back sorted by `t`.
pub fn frontier(
    state: &StateSpec,
    trunc: impl Into<Truncation>,
    det: &DetectorModel,
    steps: usize,
    t_grid: &[f64],
) -> Result<Vec<FrontierPoint>> {
    let rho = state.density(trunc)?;
    if rho.modes() != 2 {
        return Err(Error::invalid("frontier needs a two-mode state"));
    }
    for &t in t_grid {
        check_t(t)?;
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .map(|&t| {
            let (out, p_success) = joint_success(&rho, t, det, steps, steps)?;
            let out = out.ok_or(Error::DegenerateSuccess { p_success })?;
            Ok(FrontierPoint {
                t,
                p_success,
                log_negativity: gaussian_log_negativity(&covariance_matrix(&out)?)?,
            })
        })
        .collect()
}
