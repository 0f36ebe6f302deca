use crate::channels::{adaptive_subtraction, DetectorModel};
use crate::error::{Error, Result};
use crate::fock::DensityOperator;

/// Upper end of the searched transmissivity bracket.
pub const T_MAX: f64 = 1.0 - 1e-8;

const MAX_ITERATIONS: usize = 200;

fn probability(rho: &DensityOperator, det: &DetectorModel, steps: usize, t: f64) -> Result<f64> {
    Ok(adaptive_subtraction(rho, t, det, steps)?.p_success)
}

/// Transmissivity at which the `steps`-loop success probability equals
/// `target_p` within `tolerance`, found by bisection on `[0, 1 − 1e−8]`.
///
/// The success probability is first sampled on a grid dense near `t = 1` and
/// must be non-increasing there.
pub fn find_t_for_probability(
    rho: &DensityOperator,
    det: &DetectorModel,
    steps: usize,
    target_p: f64,
    tolerance: f64,
) -> Result<f64> {
    if !(target_p.is_finite() && target_p >= 0.0) || tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::invalid(
            "target probability must be >= 0 and tolerance > 0",
        ));
    }

    // t = 1 − 10^{−u}, u ∈ [0, 8]
    let samples: Vec<f64> = std::iter::once(0.0)
        .chain((0..=64).map(|k| 1.0 - 10f64.powf(-(k as f64) / 8.0)))
        .filter(|&t| t < 1.0)
        .map(|t| t.min(T_MAX))
        .collect();
    let mut values = Vec::with_capacity(samples.len());
    for &t in &samples {
        values.push(probability(rho, det, steps, t)?);
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    for k in 1..values.len() {
        if values[k] > values[k - 1] + 1e-12 {
            return Err(Error::Bracketing { t: samples[k] });
        }
    }
    if target_p > max {
        return Err(Error::UnreachableTarget {
            target: target_p,
            max,
        });
    }
    let low_end = *values.last().expect("non-empty sample grid");
    if target_p <= low_end + tolerance {
        log::warn!(
            "target probability {target_p:e} is at the t → 1 boundary; returning t = {T_MAX}"
        );
        return Ok(T_MAX);
    }

    let (mut lo, mut hi) = (0.0f64, T_MAX);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let p = probability(rho, det, steps, mid)?;
        if (p - target_p).abs() <= tolerance {
            return Ok(mid);
        }
        if p > target_p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    Err(Error::Numerical(format!(
        "bisection stalled at t = {lo} without reaching tolerance {tolerance:e}"
    )))
}
