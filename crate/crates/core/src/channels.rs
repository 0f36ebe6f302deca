//! Tap beam splitter, click detector, and the adaptive subtraction loop.
//!
//! The beam splitter `exp[κ(â₀â₁† − â₀†â₁)]` acting on a vacuum ancilla
//! leaves the signal in the mixture `Σ_m K_m ρ K_m†` with
//! `K_m = (sin κ)^m/√(m!) · t^n̂ · â^m`, `t = cos κ`, where `m` photons went
//! to the detector. A click detector of efficiency η misses all `m` photons
//! with probability `(1 − η)^m`, so both detector outcomes are weighted sums
//! over the same Kraus family.
//!
//! Each `K_m` moves `|n⟩` to `|n − m⟩`, so these maps never mix coherence
//! orders; [`DownshiftMap`] stores such maps by their coefficients and is
//! what the loop iterates.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{make_annihilation, CMatrix, DensityOperator};

/// Below this total success probability the conditional state is not formed.
pub const DEGENERATE_PROBABILITY: f64 = 1e-15;

pub(crate) fn check_t(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "transmissivity must lie in [0, 1), got {t}"
        )))
    }
}

fn check_single_mode(rho: &DensityOperator, cutoff: usize) -> Result<()> {
    if rho.modes() != 1 {
        return Err(Error::invalid("expected a single-mode state"));
    }
    if rho.cutoff() != cutoff {
        return Err(Error::invalid(format!(
            "state cutoff {} does not match channel cutoff {cutoff}",
            rho.cutoff()
        )));
    }
    Ok(())
}

/// Click detector with quantum efficiency η and no dark counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    eta: f64,
}

impl DetectorModel {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta <= 1.0 {
            Ok(Self { eta })
        } else {
            Err(Error::invalid(format!(
                "detector efficiency must lie in (0, 1], got {eta}"
            )))
        }
    }

    pub fn ideal() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Probability that none of `m` incident photons is registered.
    pub fn no_click_weight(&self, m: usize) -> f64 {
        (1.0 - self.eta).powi(m as i32)
    }

    pub fn no_click_weights(&self, cutoff: usize) -> Vec<f64> {
        (0..cutoff).map(|m| self.no_click_weight(m)).collect()
    }

    pub fn click_weights(&self, cutoff: usize) -> Vec<f64> {
        (0..cutoff).map(|m| 1.0 - self.no_click_weight(m)).collect()
    }
}

fn binomials(cutoff: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cutoff);
    for n in 0..cutoff {
        let mut row = vec![1.0; n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Kraus family of the tap beam splitter at amplitude transmissivity `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    t: f64,
    cutoff: usize,
    /// `shift[m][n] = ⟨n − m|K_m|n⟩` for `n ≥ m`, zero otherwise.
    shift: Vec<Vec<f64>>,
}

/// Builds `K_m`, `m = 0..D−1`, for the tap beam splitter.
pub fn tap_kraus(t: f64, cutoff: usize) -> Result<KrausSet> {
    check_t(t)?;
    if cutoff < 2 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let s = (1.0 - t * t).sqrt();
    let binom = binomials(cutoff);
    // K_m|n⟩ = √C(n, m) s^m t^(n−m) |n − m⟩
    let shift = (0..cutoff)
        .map(|m| {
            (0..cutoff)
                .map(|n| {
                    if n < m {
                        0.0
                    } else {
                        binom[n][m].sqrt() * s.powi(m as i32) * t.powi((n - m) as i32)
                    }
                })
                .collect()
        })
        .collect();
    Ok(KrausSet { t, cutoff, shift })
}

impl KrausSet {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.shift.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shift.is_empty()
    }

    /// `⟨n − m|K_m|n⟩`.
    pub fn element(&self, m: usize, n: usize) -> f64 {
        self.shift[m][n]
    }

    /// Dense matrix of `K_m`.
    pub fn operator(&self, m: usize) -> CMatrix {
        let d = self.cutoff;
        let mut k = CMatrix::zeros(d, d);
        for n in m..d {
            k[(n - m, n)] = C64::from(self.shift[m][n]);
        }
        k
    }

    pub fn operators(&self) -> Vec<CMatrix> {
        (0..self.len()).map(|m| self.operator(m)).collect()
    }

    /// `max |Σ_m K_m†K_m − I|`.
    pub fn completeness_error(&self) -> f64 {
        // Σ_m K_m†K_m is diagonal with entries Σ_m |⟨n−m|K_m|n⟩|².
        (0..self.cutoff)
            .map(|n| {
                let s: f64 = (0..=n).map(|m| self.shift[m][n].powi(2)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ_m w_m K_m ρ K_m†` for a single-mode `ρ`.
    pub fn apply_weighted(
        &self,
        rho: &DensityOperator,
        weights: &[f64],
    ) -> Result<DensityOperator> {
        check_single_mode(rho, self.cutoff)?;
        let d = self.cutoff;
        let src = rho.matrix();
        let out = CMatrix::from_fn(d, d, |i, j| {
            let top = d - i.max(j);
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..top {
                let w = weights[m];
                if w != 0.0 {
                    let k = &self.shift[m];
                    acc += src[(i + m, j + m)] * (w * k[i + m] * k[j + m]);
                }
            }
            acc
        });
        Ok(DensityOperator::from_parts(out, d, 1))
    }

    /// Click and no-click branches in one pass.
    pub(crate) fn split(
        &self,
        rho: &DensityOperator,
        det: &DetectorModel,
    ) -> Result<(DensityOperator, DensityOperator)> {
        let no = det.no_click_weights(self.cutoff);
        let yes = det.click_weights(self.cutoff);
        Ok((
            self.apply_weighted(rho, &yes)?,
            self.apply_weighted(rho, &no)?,
        ))
    }
}

/// Unnormalized state after the detector stays silent.
pub fn no_click_map(
    rho: &DensityOperator,
    kraus: &KrausSet,
    det: &DetectorModel,
) -> Result<DensityOperator> {
    kraus.apply_weighted(rho, &det.no_click_weights(kraus.cutoff))
}

/// Unnormalized state after the detector clicks.
pub fn click_map(
    rho: &DensityOperator,
    kraus: &KrausSet,
    det: &DetectorModel,
) -> Result<DensityOperator> {
    kraus.apply_weighted(rho, &det.click_weights(kraus.cutoff))
}

/// A completely positive map on one mode of the form
/// `ρ'_{ij} = Σ_m c_{ij}(m) ρ_{i+m, j+m}`.
///
/// Weighted Kraus sums of the tap beam splitter have this form, and it is
/// closed under composition and addition, so whole loop branches can be
/// folded into one map before being applied to a larger state.
#[derive(Clone, Debug, PartialEq)]
pub struct DownshiftMap {
    cutoff: usize,
    coeffs: Vec<f64>,
}

impl DownshiftMap {
    fn idx(&self, i: usize, j: usize, m: usize) -> usize {
        (i * self.cutoff + j) * self.cutoff + m
    }

    pub fn zero(cutoff: usize) -> Self {
        Self {
            cutoff,
            coeffs: vec![0.0; cutoff * cutoff * cutoff],
        }
    }

    pub fn identity(cutoff: usize) -> Self {
        let mut map = Self::zero(cutoff);
        for i in 0..cutoff {
            for j in 0..cutoff {
                let k = map.idx(i, j, 0);
                map.coeffs[k] = 1.0;
            }
        }
        map
    }

    /// `ρ ↦ Σ_m w_m K_m ρ K_m†`.
    pub fn from_kraus(kraus: &KrausSet, weights: &[f64]) -> Self {
        let d = kraus.cutoff;
        let mut map = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                for (m, w) in weights.iter().enumerate().take(d - i.max(j)) {
                    let k = map.idx(i, j, m);
                    map.coeffs[k] = w * kraus.shift[m][i + m] * kraus.shift[m][j + m];
                }
            }
        }
        map
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coefficient(&self, i: usize, j: usize, m: usize) -> f64 {
        self.coeffs[self.idx(i, j, m)]
    }

    /// The composition `next ∘ self`.
    pub fn then(&self, next: &DownshiftMap) -> DownshiftMap {
        let d = self.cutoff;
        let mut out = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                let top = d - i.max(j);
                let base = out.idx(i, j, 0);
                for m in 0..top {
                    let b = next.coeffs[base + m];
                    if b == 0.0 {
                        continue;
                    }
                    let inner = self.idx(i + m, j + m, 0);
                    for l in 0..top - m {
                        out.coeffs[base + m + l] += b * self.coeffs[inner + l];
                    }
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &DownshiftMap) {
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += b;
        }
    }

    /// `Tr Φ(|n⟩⟨n|)` for every `n`.
    pub fn trace_weights(&self) -> Vec<f64> {
        (0..self.cutoff)
            .map(|n| (0..=n).map(|m| self.coefficient(n - m, n - m, m)).sum())
            .collect()
    }

    /// Applies the map to a single-mode state, or to `mode` of a two-mode state.
    pub fn apply_to_mode(&self, rho: &DensityOperator, mode: usize) -> Result<DensityOperator> {
        let d = self.cutoff;
        if rho.cutoff() != d {
            return Err(Error::invalid("cutoff mismatch between map and state"));
        }
        let src = rho.matrix();
        match (rho.modes(), mode) {
            (1, 0) => {
                let out = CMatrix::from_fn(d, d, |i, j| {
                    let base = self.idx(i, j, 0);
                    (0..d - i.max(j))
                        .map(|m| src[(i + m, j + m)] * self.coeffs[base + m])
                        .sum()
                });
                Ok(DensityOperator::from_parts(out, d, 1))
            }
            (2, 0) | (2, 1) => {
                let n = d * d;
                let mut out = CMatrix::zeros(n, n);
                // Row (a0, a1), column (b0, b1); the map acts on index `mode`.
                for b0 in 0..d {
                    for b1 in 0..d {
                        let col = b0 * d + b1;
                        for a0 in 0..d {
                            for a1 in 0..d {
                                let (i, j) = if mode == 0 { (a0, b0) } else { (a1, b1) };
                                let base = self.idx(i, j, 0);
                                let mut acc = C64::new(0.0, 0.0);
                                for m in 0..d - i.max(j) {
                                    let c = self.coeffs[base + m];
                                    if c == 0.0 {
                                        continue;
                                    }
                                    let (r, s) = if mode == 0 {
                                        ((a0 + m) * d + a1, (b0 + m) * d + b1)
                                    } else {
                                        (a0 * d + a1 + m, b0 * d + b1 + m)
                                    };
                                    acc += src[(r, s)] * c;
                                }
                                out[(a0 * d + a1, col)] = acc;
                            }
                        }
                    }
                }
                Ok(DensityOperator::from_parts(out, d, 2))
            }
            _ => Err(Error::invalid(format!(
                "cannot apply a one-mode map to mode {mode} of a {}-mode state",
                rho.modes()
            ))),
        }
    }
}

/// Outcome of a (possibly multi-step) conditional subtraction.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtractionResult {
    /// Normalized conditional state; `None` when the success probability is
    /// below [`DEGENERATE_PROBABILITY`].
    pub rho_out: Option<DensityOperator>,
    pub p_success: f64,
    /// Click probability in each attempt.
    pub step_probabilities: Vec<f64>,
    pub steps_allowed: usize,
    /// Trace of the state still circulating after the last attempt (exact
    /// loop only).
    pub survival_probability: Option<f64>,
}

impl SubtractionResult {
    pub fn is_degenerate(&self) -> bool {
        self.rho_out.is_none()
    }
}

/// One tap-and-detect attempt, kept only on a click.
pub fn single_step_subtraction(
    rho: &DensityOperator,
    t: f64,
    det: &DetectorModel,
) -> Result<SubtractionResult> {
    adaptive_subtraction(rho, t, det, 1)
}

/// Adaptive loop: tap, and on silence recycle the attenuated state for up to
/// `steps` attempts.
pub fn adaptive_subtraction(
    rho: &DensityOperator,
    t: f64,
    det: &DetectorModel,
    steps: usize,
) -> Result<SubtractionResult> {
    if steps < 1 {
        return Err(Error::invalid("at least one loop step is required"));
    }
    let kraus = tap_kraus(t, rho.cutoff())?;
    check_single_mode(rho, kraus.cutoff)?;

    let mut surviving = rho.clone();
    let mut accumulated = DensityOperator::zeros(rho.cutoff(), 1)?;
    let mut step_probabilities = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (click, silent) = kraus.split(&surviving, det)?;
        step_probabilities.push(click.trace());
        accumulated = DensityOperator::from_parts(
            accumulated.into_matrix() + click.matrix(),
            rho.cutoff(),
            1,
        );
        surviving = silent;
    }
    let p_success: f64 = step_probabilities.iter().sum();
    let rho_out = if p_success < DEGENERATE_PROBABILITY {
        None
    } else {
        Some(accumulated.scale(1.0 / p_success))
    };
    Ok(SubtractionResult {
        rho_out,
        p_success,
        step_probabilities,
        steps_allowed: steps,
        survival_probability: Some(surviving.trace()),
    })
}

/// Weak-coupling approximation of the loop with an ideal detector:
/// `ρ_out ∝ â[(1 − t²) Σ_{k=0}^{N} t^{kn̂} ρ t^{kn̂}]â†`, with the
/// sum running over `N + 1` terms.
pub fn approx_adaptive_subtraction(
    rho: &DensityOperator,
    t: f64,
    steps: usize,
) -> Result<SubtractionResult> {
    check_t(t)?;
    check_single_mode(rho, rho.cutoff())?;
    let d = rho.cutoff();
    let src = rho.matrix();
    let weight = 1.0 - t * t;

    // (t^{kn̂} ρ t^{kn̂})_{ij} = t^{k(i+j)} ρ_ij
    let attenuated = CMatrix::from_fn(d, d, |i, j| {
        let q = t.powi((i + j) as i32);
        let geometric: f64 = (0..=steps).map(|k| q.powi(k as i32)).sum();
        src[(i, j)] * (weight * geometric)
    });
    let a = make_annihilation(d)?.into_matrix();
    let out = &a * attenuated * a.adjoint();

    let step_probabilities: Vec<f64> = (0..=steps)
        .map(|k| {
            weight
                * (1..d)
                    .map(|n| n as f64 * t.powi((2 * k * n) as i32) * src[(n, n)].re)
                    .sum::<f64>()
        })
        .collect();
    let p_success: f64 = step_probabilities.iter().sum();
    let rho_out = if p_success < DEGENERATE_PROBABILITY {
        None
    } else {
        Some(DensityOperator::from_parts(out, d, 1).scale(1.0 / p_success))
    };
    Ok(SubtractionResult {
        rho_out,
        p_success,
        step_probabilities,
        steps_allowed: steps,
        survival_probability: None,
    })
}

/// Perfect photon subtraction `âρâ†/Tr[âρâ†]`.
pub fn ideal_subtraction(rho: &DensityOperator) -> Result<DensityOperator> {
    check_single_mode(rho, rho.cutoff())?;
    let a = make_annihilation(rho.cutoff())?.into_matrix();
    let out = &a * rho.matrix() * a.adjoint();
    let tr = out.trace().re;
    if tr < DEGENERATE_PROBABILITY {
        return Err(Error::NoPhoton);
    }
    Ok(DensityOperator::from_parts(out, rho.cutoff(), 1).scale(1.0 / tr))
}

/// `1 − Tr[ρ Π°]`: the probability that a fully transmitting tap clicks.
pub fn max_success_probability(rho: &DensityOperator, det: &DetectorModel) -> Result<f64> {
    check_single_mode(rho, rho.cutoff())?;
    let silent: f64 = (0..rho.cutoff())
        .map(|n| det.no_click_weight(n) * rho.matrix()[(n, n)].re)
        .sum();
    Ok(rho.trace() - silent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        make_number, operator_exponential, operator_function_diagonal, FockVector, ModeOperator,
    };
    use crate::metrics::{fidelity, state_fidelity};
    use crate::states::squeezed_vacuum;

    fn random_state(d: usize, seed: u64) -> DensityOperator {
        // xorshift, enough to get a generic full-rank state
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x as f64 / u64::MAX as f64) - 0.5
        };
        let g = CMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        let m = &g * g.adjoint();
        DensityOperator::new(m, d, 1).unwrap().normalized().unwrap()
    }

    fn dense_weighted(rho: &DensityOperator, kraus: &KrausSet, w: &[f64]) -> CMatrix {
        let mut acc = CMatrix::zeros(rho.dim(), rho.dim());
        for (m, k) in kraus.operators().iter().enumerate() {
            acc += k * rho.matrix() * k.adjoint() * C64::from(w[m]);
        }
        acc
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Two-mode beam splitter on cutoff `d` per mode.
    fn beam_splitter(t: f64, d: usize) -> CMatrix {
        let kappa = t.acos();
        let a = make_annihilation(d).unwrap().into_matrix();
        let id = CMatrix::identity(d, d);
        let a0 = a.kronecker(&id);
        let a1 = id.kronecker(&a);
        let gen = (&a0 * a1.adjoint() - a0.adjoint() * &a1) * C64::from(kappa);
        operator_exponential(&gen).unwrap()
    }

    #[test]
    fn kraus_matches_defining_product() {
        let (t, d) = (0.83, 7);
        let kraus = tap_kraus(t, d).unwrap();
        let s = (1.0 - t * t).sqrt();
        let tn = operator_function_diagonal(&make_number(d).unwrap(), |x| t.powf(x)).unwrap();
        let a = make_annihilation(d).unwrap();
        let mut a_pow = ModeOperator::identity(d).unwrap();
        let mut fact = 1.0;
        for m in 0..d {
            if m > 0 {
                a_pow = a_pow.compose(&a).unwrap();
                fact *= m as f64;
            }
            let expected = tn.compose(&a_pow).unwrap().into_matrix()
                * C64::from(s.powi(m as i32) / fact.sqrt());
            assert!(max_diff(&expected, &kraus.operator(m)) < 1e-12, "m = {m}");
        }
        assert!(max_diff(&kraus.operator(0), tn.matrix()) < 1e-15);
    }

    #[test]
    fn kraus_matches_beam_splitter_elements() {
        let d = 6;
        for t in [0.0, 0.3, 0.9] {
            let u = beam_splitter(t, d);
            let kraus = tap_kraus(t, d).unwrap();
            for m in 0..d {
                for n in 0..d {
                    for k in 0..d {
                        // ⟨k, m|U|n, 0⟩ = ⟨k|K_m|n⟩
                        let elem = u[(k * d + m, n * d)];
                        let expected = kraus.operator(m)[(k, n)];
                        assert!((elem - expected).norm() <= 1e-10, "t={t} m={m} n={n} k={k}");
                    }
                }
            }
        }
        // full transmission to the detector: K_m = |0⟩⟨m|
        let k = tap_kraus(0.0, 6).unwrap();
        for m in 0..6 {
            assert!((k.element(m, m) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn beam_splitter_single_photon_rotation() {
        let d = 4;
        let t = 0.6f64;
        let u = beam_splitter(t, d);
        // |1,0⟩ → cos κ |1,0⟩ + sin κ |0,1⟩
        assert!((u[(d, d)] - C64::from(t)).norm() < 1e-10);
        assert!((u[(1, d)] - C64::from((1.0 - t * t).sqrt())).norm() < 1e-10);
    }

    #[test]
    fn beam_splitter_is_unitary() {
        let u = beam_splitter(0.3f64.cos(), 10);
        let err = max_diff(&(u.adjoint() * &u), &CMatrix::identity(100, 100));
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn kraus_completeness() {
        for t in [0.0, 0.5, 0.9, 0.999] {
            assert!(tap_kraus(t, 6).unwrap().completeness_error() <= 1e-10);
            let k = tap_kraus(t, 40).unwrap();
            let sum = k
                .operators()
                .iter()
                .fold(CMatrix::zeros(40, 40), |acc, km| acc + km.adjoint() * km);
            assert!(max_diff(&sum, &CMatrix::identity(40, 40)) <= 1e-10);
        }
    }

    #[test]
    fn tap_rejects_bad_transmissivity() {
        assert!(tap_kraus(1.0, 4).is_err());
        assert!(tap_kraus(-0.1, 4).is_err());
        assert!(tap_kraus(f64::NAN, 4).is_err());
    }

    #[test]
    fn detector_domain() {
        assert!(DetectorModel::new(0.0).is_err());
        assert!(DetectorModel::new(1.2).is_err());
        let det = DetectorModel::new(0.8).unwrap();
        assert!((det.no_click_weight(2) - 0.04).abs() < 1e-15);
        assert_eq!(det.no_click_weight(0), 1.0);
    }

    #[test]
    fn weighted_application_matches_dense_sum() {
        let d = 8;
        let rho = random_state(d, 7);
        let kraus = tap_kraus(0.77, d).unwrap();
        for eta in [1.0, 0.8, 0.3] {
            let det = DetectorModel::new(eta).unwrap();
            let nc = no_click_map(&rho, &kraus, &det).unwrap();
            let cl = click_map(&rho, &kraus, &det).unwrap();
            assert!(
                max_diff(
                    nc.matrix(),
                    &dense_weighted(&rho, &kraus, &det.no_click_weights(d))
                ) < 1e-14
            );
            assert!(
                max_diff(
                    cl.matrix(),
                    &dense_weighted(&rho, &kraus, &det.click_weights(d))
                ) < 1e-14
            );
            assert!((nc.trace() + cl.trace() - 1.0).abs() <= 1e-12);
            assert!(cl.hermiticity_error() <= 1e-12 && nc.hermiticity_error() <= 1e-12);
        }
    }

    #[test]
    fn vacuum_never_clicks() {
        let vac = DensityOperator::vacuum(5, 1).unwrap();
        for t in [0.1, 0.9] {
            let kraus = tap_kraus(t, 5).unwrap();
            for eta in [1.0, 0.5] {
                let det = DetectorModel::new(eta).unwrap();
                let nc = no_click_map(&vac, &kraus, &det).unwrap();
                assert!(nc.max_abs_diff(&vac) < 1e-15);
                assert!(click_map(&vac, &kraus, &det).unwrap().trace().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_photon_branches() {
        let one = DensityOperator::fock(1, 5).unwrap();
        let t = 0.9;
        let kraus = tap_kraus(t, 5).unwrap();
        let ideal = DetectorModel::ideal();
        let nc = no_click_map(&one, &kraus, &ideal).unwrap();
        assert!(nc.max_abs_diff(&one.scale(t * t)) < 1e-15);
        let cl = click_map(&one, &kraus, &ideal).unwrap();
        let vac = DensityOperator::vacuum(5, 1).unwrap();
        assert!(cl.max_abs_diff(&vac.scale(1.0 - t * t)) < 1e-15);

        let real = DetectorModel::new(0.8).unwrap();
        let nc = no_click_map(&one, &kraus, &real).unwrap();
        assert!((nc.trace() - 0.848).abs() < 1e-12);
    }

    #[test]
    fn single_step_examples() {
        let one = DensityOperator::fock(1, 4).unwrap();
        let r = single_step_subtraction(&one, 0.9, &DetectorModel::ideal()).unwrap();
        assert!((r.p_success - 0.19).abs() < 1e-14);
        let out = r.rho_out.unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);

        let vac = DensityOperator::vacuum(4, 1).unwrap();
        let r = single_step_subtraction(&vac, 0.9, &DetectorModel::ideal()).unwrap();
        assert_eq!(r.p_success, 0.0);
        assert!(r.is_degenerate());
    }

    #[test]
    fn weak_tap_approaches_ideal_subtraction() {
        let rho = squeezed_vacuum(6.0, 40).unwrap().to_density();
        let psi = squeezed_vacuum(6.0, 40).unwrap();
        let a = make_annihilation(40).unwrap().into_matrix();
        let target = FockVector::new(a * psi.amplitudes(), 40, 1)
            .unwrap()
            .normalized()
            .unwrap();
        // infidelity shrinks linearly in 1 − t; reference values from an
        // independent dense-matrix evaluation
        for (t, infidelity) in [(0.9999, 2.673_483_862e-4), (0.99999, 2.674_123_636e-5)] {
            let r = single_step_subtraction(&rho, t, &DetectorModel::ideal()).unwrap();
            let f = fidelity(&r.rho_out.unwrap(), &target).unwrap();
            assert!((1.0 - f - infidelity).abs() < 1e-11, "{t}: {f}");
        }
    }

    #[test]
    fn loop_single_photon_closed_form() {
        let one = DensityOperator::fock(1, 3).unwrap();
        let r = adaptive_subtraction(&one, 0.99, &DetectorModel::ideal(), 100).unwrap();
        assert!((r.p_success - (1.0 - 0.99f64.powi(200))).abs() < 1e-12);
        assert!((r.p_success - 0.866_02).abs() < 1e-5);
        for (n, p) in r.step_probabilities.iter().enumerate() {
            let expected = 0.99f64.powi(2 * n as i32) * (1.0 - 0.99 * 0.99);
            assert!((p - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn loop_with_one_step_is_single_step() {
        let rho = random_state(6, 3);
        let det = DetectorModel::new(0.7).unwrap();
        let a = adaptive_subtraction(&rho, 0.8, &det, 1).unwrap();
        let b = single_step_subtraction(&rho, 0.8, &det).unwrap();
        assert!(a.rho_out.unwrap().max_abs_diff(&b.rho_out.unwrap()) <= 1e-14);
        assert!(adaptive_subtraction(&rho, 0.8, &det, 0).is_err());
    }

    #[test]
    fn loop_probability_bookkeeping() {
        let rho = random_state(10, 11);
        for eta in [1.0, 0.8] {
            let det = DetectorModel::new(eta).unwrap();
            let r = adaptive_subtraction(&rho, 0.85, &det, 7).unwrap();
            let total: f64 =
                r.step_probabilities.iter().sum::<f64>() + r.survival_probability.unwrap();
            assert!((total - 1.0).abs() <= 1e-10);
            assert!((r.p_success - r.step_probabilities.iter().sum::<f64>()).abs() <= 1e-12);
        }
    }

    #[test]
    fn more_steps_more_success() {
        let rho = squeezed_vacuum(6.0, 40).unwrap().to_density();
        let mut last = 0.0;
        for n in 1..=20 {
            let r = adaptive_subtraction(&rho, 0.99, &DetectorModel::ideal(), n).unwrap();
            assert!(r.p_success > last);
            last = r.p_success;
        }
    }

    #[test]
    fn mixture_over_steps_decoheres() {
        let rho = squeezed_vacuum(6.0, 40).unwrap().to_density();
        let r = adaptive_subtraction(&rho, 0.9, &DetectorModel::ideal(), 10).unwrap();
        let p = crate::metrics::purity(&r.rho_out.unwrap()).unwrap();
        assert!(p < 1.0 - 1e-6, "{p}");
    }

    #[test]
    fn approximation_examples() {
        let one = DensityOperator::fock(1, 4).unwrap();
        let t = 0.95f64;
        for n in [0, 1, 5] {
            let r = approx_adaptive_subtraction(&one, t, n).unwrap();
            assert!((r.p_success - (1.0 - t.powi(2 * (n as i32 + 1)))).abs() < 1e-14);
            assert_eq!(r.step_probabilities.len(), n + 1);
        }
        // N = 0 is a single weighted ideal subtraction
        let rho = squeezed_vacuum(6.0, 40).unwrap().to_density();
        let n_op = make_number(40).unwrap();
        let mean = crate::fock::expectation(&rho, n_op.matrix()).unwrap().re;
        let r = approx_adaptive_subtraction(&rho, 0.999, 0).unwrap();
        assert!((r.p_success - (1.0 - 0.999f64.powi(2)) * mean).abs() < 1e-14);
        let ideal = ideal_subtraction(&rho).unwrap();
        assert!(r.rho_out.unwrap().max_abs_diff(&ideal) < 1e-12);
    }

    #[test]
    fn approximation_tracks_exact_loop() {
        let rho = squeezed_vacuum(6.0, 40).unwrap().to_density();
        let exact = adaptive_subtraction(&rho, 0.999, &DetectorModel::ideal(), 10).unwrap();
        let approx = approx_adaptive_subtraction(&rho, 0.999, 10).unwrap();
        let f = state_fidelity(&exact.rho_out.unwrap(), &approx.rho_out.unwrap()).unwrap();
        // reference from an independent dense-matrix evaluation
        assert!((f - 0.997_382_294).abs() < 1e-7, "{f}");
    }

    #[test]
    fn ideal_subtraction_examples() {
        let one = DensityOperator::fock(1, 4).unwrap();
        let out = ideal_subtraction(&one).unwrap();
        assert!(out.max_abs_diff(&DensityOperator::vacuum(4, 1).unwrap()) < 1e-15);
        assert_eq!(
            ideal_subtraction(&DensityOperator::vacuum(4, 1).unwrap()),
            Err(Error::NoPhoton)
        );
        let sq = squeezed_vacuum(6.0, 40).unwrap().to_density();
        let w = crate::metrics::wigner_origin(&ideal_subtraction(&sq).unwrap()).unwrap();
        assert!((w + std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    }

    #[test]
    fn max_success_examples() {
        let vac = DensityOperator::vacuum(4, 1).unwrap();
        assert_eq!(
            max_success_probability(&vac, &DetectorModel::ideal()).unwrap(),
            0.0
        );
        let alpha = 3.0 / 2f64.sqrt();
        let coh = crate::states::coherent(C64::from(alpha), 40)
            .unwrap()
            .to_density();
        let det = DetectorModel::new(0.8).unwrap();
        let p = max_success_probability(&coh, &det).unwrap();
        assert!((p - (1.0 - (-3.6f64).exp())).abs() < 1e-10);
        assert!((p - 0.97268).abs() < 1e-5);
    }

    #[test]
    fn downshift_map_matches_kraus_application() {
        let d = 7;
        let rho = random_state(d, 5);
        let kraus = tap_kraus(0.6, d).unwrap();
        let det = DetectorModel::new(0.8).unwrap();
        let w = det.no_click_weights(d);
        let map = DownshiftMap::from_kraus(&kraus, &w);
        let a = map.apply_to_mode(&rho, 0).unwrap();
        let b = kraus.apply_weighted(&rho, &w).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);

        // composition agrees with sequential application
        let click = DownshiftMap::from_kraus(&kraus, &det.click_weights(d));
        let composed = map.then(&click);
        let seq = click
            .apply_to_mode(&map.apply_to_mode(&rho, 0).unwrap(), 0)
            .unwrap();
        assert!(composed.apply_to_mode(&rho, 0).unwrap().max_abs_diff(&seq) < 1e-14);

        let id = DownshiftMap::identity(d);
        assert!(id.apply_to_mode(&rho, 0).unwrap().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn downshift_map_on_two_modes() {
        let d = 5;
        let a = random_state(d, 1);
        let b = random_state(d, 2);
        let ab = a.tensor(&b).unwrap();
        let kraus = tap_kraus(0.7, d).unwrap();
        let map = DownshiftMap::from_kraus(&kraus, &DetectorModel::ideal().click_weights(d));
        let on0 = map.apply_to_mode(&ab, 0).unwrap();
        let expect0 = map.apply_to_mode(&a, 0).unwrap().tensor(&b).unwrap();
        assert!(on0.max_abs_diff(&expect0) < 1e-15);
        let on1 = map.apply_to_mode(&ab, 1).unwrap();
        let expect1 = a.tensor(&map.apply_to_mode(&b, 0).unwrap()).unwrap();
        assert!(on1.max_abs_diff(&expect1) < 1e-15);
    }
}
