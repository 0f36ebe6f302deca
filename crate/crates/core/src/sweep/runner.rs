use rayon::prelude::*;

use super::config::{Experiment, Metric, SweepConfig};
use crate::channels::{adaptive_subtraction, DetectorModel};
use crate::distillation::joint_success;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockVector, Truncation};
use crate::metrics::{
    covariance_matrix, fidelity, gaussian_log_negativity, purity, state_fidelity, wigner_origin,
};
use crate::states::StateSpec;

pub const THREADS_VAR: &str = "PHOTONLOOP_THREADS";

/// One `(N, t)` point of a sweep. Metrics that were not requested, or that
/// are undefined because the point is degenerate, are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub experiment: Experiment,
    pub state: String,
    pub eta: f64,
    pub steps: usize,
    pub t: f64,
    pub p_success: f64,
    pub wigner_origin: Option<f64>,
    pub fidelity: Option<f64>,
    pub log_negativity: Option<f64>,
    pub purity: Option<f64>,
}

enum Target {
    Pure(FockVector),
    Mixed(DensityOperator),
}

impl Target {
    fn fidelity(&self, rho: &DensityOperator) -> Result<f64> {
        match self {
            Target::Pure(psi) => fidelity(rho, psi),
            Target::Mixed(sigma) => state_fidelity(rho, sigma),
        }
    }
}

/// Worker count requested through `PHOTONLOOP_THREADS`; `None` means the
/// default pool.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::validation(
                THREADS_VAR,
                format!("`{v}` is not a thread count"),
            )),
        },
    }
}

/// Input state, detector and reference state prepared once and shared by
/// every point of a run.
pub struct Evaluator {
    experiment: Experiment,
    label: String,
    eta: f64,
    det: DetectorModel,
    rho: DensityOperator,
    metrics: Vec<Metric>,
    target: Option<Target>,
}

impl Evaluator {
    pub fn new(
        experiment: Experiment,
        state: &StateSpec,
        eta: f64,
        trunc: Truncation,
        metrics: &[Metric],
        fidelity_target: Option<&StateSpec>,
    ) -> Result<Self> {
        let det = DetectorModel::new(eta).map_err(|e| Error::validation("eta", e.to_string()))?;
        if state.modes() != experiment.modes() {
            return Err(Error::validation(
                "state",
                format!(
                    "`{state}` does not have the {} mode(s) `{experiment}` needs",
                    experiment.modes()
                ),
            ));
        }
        let rho = state.density(trunc)?;
        let target = match fidelity_target {
            Some(spec) if metrics.contains(&Metric::Fidelity) => {
                if spec.modes() != state.modes() {
                    return Err(Error::validation(
                        "fidelity_target",
                        "mode count differs from `state`",
                    ));
                }
                Some(match spec.pure(trunc)? {
                    Some(psi) => Target::Pure(psi),
                    None => Target::Mixed(spec.density(trunc)?),
                })
            }
            _ => None,
        };
        Ok(Self {
            experiment,
            label: state.to_string(),
            eta,
            det,
            rho,
            metrics: metrics.to_vec(),
            target,
        })
    }

    pub fn from_config(config: &SweepConfig) -> Result<Self> {
        Self::new(
            config.experiment,
            &config.state,
            config.eta,
            Truncation::new(config.cutoff).with_tail_limit(config.tail_limit),
            &config.metrics,
            config.fidelity_target.as_ref(),
        )
    }

    pub fn input(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn evaluate(&self, steps: usize, t: f64) -> Result<SweepRecord> {
        let (out, p_success) = match self.experiment {
            Experiment::Subtract => {
                let res = adaptive_subtraction(&self.rho, t, &self.det, steps)?;
                (res.rho_out, res.p_success)
            }
            Experiment::Distill => {
                if steps < 1 {
                    return Err(Error::invalid("at least one loop step is required"));
                }
                joint_success(&self.rho, t, &self.det, steps, steps)?
            }
        };
        let mut record = SweepRecord {
            experiment: self.experiment,
            state: self.label.clone(),
            eta: self.eta,
            steps,
            t,
            p_success,
            wigner_origin: None,
            fidelity: None,
            log_negativity: None,
            purity: None,
        };
        let Some(out) = out else {
            log::warn!("N = {steps}, t = {t}: success probability {p_success:.3e} is degenerate");
            return Ok(record);
        };
        for m in &self.metrics {
            match m {
                Metric::PSuccess => {}
                Metric::WignerOrigin => record.wigner_origin = Some(wigner_origin(&out)?),
                Metric::Fidelity => {
                    if let Some(target) = &self.target {
                        record.fidelity = Some(target.fidelity(&out)?);
                    }
                }
                Metric::LogNegativity => {
                    record.log_negativity =
                        Some(gaussian_log_negativity(&covariance_matrix(&out)?)?)
                }
                Metric::Purity => record.purity = Some(purity(&out)?),
            }
        }
        Ok(record)
    }
}

/// Evaluates every `(N, t)` point, N-major, in grid order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let evaluator = Evaluator::from_config(config)?;
    let grid = config.t_grid.points();
    let jobs: Vec<(usize, f64)> = config
        .steps
        .iter()
        .flat_map(|&n| grid.iter().map(move |&t| (n, t)))
        .collect();
    log::info!(
        "sweeping {} points of {} `{}` at cutoff {}",
        jobs.len(),
        config.experiment,
        config.state,
        config.cutoff
    );

    let eval = || -> Result<Vec<SweepRecord>> {
        jobs.par_iter()
            .map(|&(n, t)| evaluator.evaluate(n, t))
            .collect()
    };
    match thread_limit()? {
        None => eval(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?
            .install(eval),
    }
}
