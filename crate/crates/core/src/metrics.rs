//! State-quality measures: Wigner values, fidelities, purity, and the
//! Gaussian logarithmic negativity of a two-mode covariance matrix.
//!
//! Wigner functions are normalized to unit integral, so `W(0,0)` lies in
//! `[−1/π, 1/π]`.

use std::f64::consts::{FRAC_1_PI, FRAC_1_SQRT_2};

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    expectation, make_annihilation, operator_exponential, partial_trace, quadratures, CMatrix,
    DensityOperator, FockVector, DEFAULT_TAIL_LIMIT, TRACE_TOL,
};

fn require_normalized(rho: &DensityOperator) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::invalid(format!(
            "state must be normalized, trace is {tr}"
        )));
    }
    Ok(())
}

fn require_modes(rho: &DensityOperator, modes: usize) -> Result<()> {
    if rho.modes() != modes {
        return Err(Error::invalid(format!(
            "expected a {modes}-mode state, got {} mode(s)",
            rho.modes()
        )));
    }
    Ok(())
}

/// `W(0,0) = (1/π) Σ_n (−1)^n ρ_nn`.
pub fn wigner_origin(rho: &DensityOperator) -> Result<f64> {
    require_modes(rho, 1)?;
    require_normalized(rho)?;
    let parity: f64 = (0..rho.cutoff())
        .map(|n| {
            let p = rho.matrix()[(n, n)].re;
            if n % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum();
    Ok(parity * FRAC_1_PI)
}

/// Displacement `exp(α â† − α* â)` on `dim` levels.
fn displacement(alpha: C64, dim: usize) -> Result<CMatrix> {
    let a = make_annihilation(dim)?.into_matrix();
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    operator_exponential(&gen)
}

/// Wigner function on a grid, `W(x, p) = (1/π) Tr[ρ D(β) P D†(β)]` with
/// `β = (x + ip)/√2` and `P` the parity operator. Row `i` of the result is
/// `xs[i]`, column `j` is `ps[j]`.
pub fn wigner_grid(rho: &DensityOperator, xs: &[f64], ps: &[f64]) -> Result<DMatrix<f64>> {
    require_modes(rho, 1)?;
    if xs.iter().chain(ps).any(|v| !v.is_finite()) {
        return Err(Error::invalid("grid coordinates must be finite"));
    }
    let tail = rho.tail_mass();
    if tail > DEFAULT_TAIL_LIMIT {
        log::warn!(
            "Wigner grid of a state with tail mass {tail:.2e}; values near the cutoff are biased"
        );
    }

    // D(β) = D(x/√2) D(ip/√2) up to a phase that cancels in D P D†, so
    // W = (1/π) Tr[(D_x† ρ D_x)(D_p P D_p†)].
    let reach = xs.iter().chain(ps).fold(0.0f64, |m, v| m.max(v.abs())) * FRAC_1_SQRT_2;
    let d = rho.cutoff();
    let dim = d + (2.0 * reach * reach + 12.0 * reach + 30.0).ceil() as usize;

    let mut padded = CMatrix::zeros(dim, dim);
    padded.view_mut((0, 0), (d, d)).copy_from(rho.matrix());
    let parity = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|n| C64::from(if n % 2 == 0 { 1.0 } else { -1.0 })),
    ));

    let shifted_states = xs
        .iter()
        .map(|&x| {
            let dx = displacement(C64::new(x * FRAC_1_SQRT_2, 0.0), dim)?;
            Ok(dx.adjoint() * &padded * dx)
        })
        .collect::<Result<Vec<_>>>()?;
    let shifted_parities = ps
        .iter()
        .map(|&p| {
            let dp = displacement(C64::new(0.0, p * FRAC_1_SQRT_2), dim)?;
            Ok(&dp * &parity * dp.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DMatrix::from_fn(xs.len(), ps.len(), |i, j| {
        let a = &shifted_states[i];
        let b = &shifted_parities[j];
        // Tr[AB] = Σ_kl A_kl B_lk; A is negligible outside the first rows
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..dim {
            for l in 0..dim {
                acc += a[(k, l)] * b[(l, k)];
            }
        }
        acc.re * FRAC_1_PI
    }))
}

/// `⟨ψ|ρ|ψ⟩` for a pure target.
pub fn fidelity(rho: &DensityOperator, target: &FockVector) -> Result<f64> {
    if rho.dim() != target.amplitudes().len() {
        return Err(Error::invalid("state and target dimensions differ"));
    }
    let psi = target.amplitudes();
    let v = psi.adjoint() * rho.matrix() * psi;
    Ok(v[(0, 0)].re)
}

/// Eigenvalues at the rounding-noise level of the largest one are zeroed,
/// so that their square roots do not accumulate.
fn spectral_floor(eigenvalues: &nalgebra::DVector<f64>) -> f64 {
    eigenvalues.amax() * eigenvalues.len() as f64 * f64::EPSILON
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let floor = spectral_floor(&eig.eigenvalues);
    let roots = eig
        .eigenvalues
        .map(|l| C64::from(if l > floor { l.sqrt() } else { 0.0 }));
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²` between two density operators.
pub fn state_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::invalid("state dimensions differ"));
    }
    let root = hermitian_sqrt(rho.matrix());
    let inner = &root * sigma.matrix() * &root;
    let inner = (&inner + inner.adjoint()) * C64::from(0.5);
    let eigenvalues = inner.symmetric_eigenvalues();
    let floor = spectral_floor(&eigenvalues);
    let s: f64 = eigenvalues
        .iter()
        .filter(|&&l| l > floor)
        .map(|l| l.sqrt())
        .sum();
    Ok(s * s)
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityOperator) -> Result<f64> {
    // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
    Ok(rho.matrix().iter().map(|z| z.norm_sqr()).sum())
}

/// Quadrature covariance matrix in the ordering `(x₁, p₁, x₂, p₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    pub sigma: Matrix4<f64>,
    pub mean: Vector4<f64>,
}

impl CovarianceMatrix {
    pub fn new(sigma: Matrix4<f64>, mean: Vector4<f64>) -> Result<Self> {
        let asym = (sigma - sigma.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::Numerical(format!(
                "covariance matrix is not symmetric ({asym:.2e})"
            )));
        }
        Ok(Self { sigma, mean })
    }

    pub fn vacuum() -> Self {
        Self {
            sigma: Matrix4::identity() * 0.5,
            mean: Vector4::zeros(),
        }
    }

    pub fn alpha(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn beta(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn gamma(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// `Ω = J ⊕ J` with `J = [[0, 1], [−1, 0]]`.
    pub fn symplectic_form() -> Matrix4<f64> {
        let mut omega = Matrix4::zeros();
        omega[(0, 1)] = 1.0;
        omega[(1, 0)] = -1.0;
        omega[(2, 3)] = 1.0;
        omega[(3, 2)] = -1.0;
        omega
    }

    /// Smallest eigenvalue of `σ + (i/2)Ω`; non-negative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let omega = Self::symplectic_form();
        let m = Matrix4::from_fn(|i, j| C64::new(self.sigma[(i, j)], 0.5 * omega[(i, j)]));
        m.symmetric_eigenvalues().min()
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.uncertainty_min_eigenvalue() >= -tol
    }

    /// `σ ↦ S σ Sᵀ`.
    pub fn transformed(&self, s: &Matrix4<f64>) -> Self {
        Self {
            sigma: s * self.sigma * s.transpose(),
            mean: s * self.mean,
        }
    }
}

/// `Tr[ρ (A ⊗ B)]` for single-mode operators `A`, `B`.
fn two_mode_moment(rho: &DensityOperator, a: &CMatrix, b: &CMatrix) -> C64 {
    let d = rho.cutoff();
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for j0 in 0..d {
        for i0 in 0..d {
            let a_ji = a[(j0, i0)];
            if a_ji == C64::new(0.0, 0.0) {
                continue;
            }
            for j1 in 0..d {
                for i1 in 0..d {
                    let b_ji = b[(j1, i1)];
                    if b_ji != C64::new(0.0, 0.0) {
                        acc += m[(i0 * d + i1, j0 * d + j1)] * a_ji * b_ji;
                    }
                }
            }
        }
    }
    acc
}

/// Symmetrized second moments minus products of first moments.
pub fn covariance_matrix(rho: &DensityOperator) -> Result<CovarianceMatrix> {
    require_modes(rho, 2)?;
    require_normalized(rho)?;
    let tail = rho.tail_mass();
    if tail > DEFAULT_TAIL_LIMIT {
        log::warn!(
            "covariance of a state with tail mass {tail:.2e}; variances are biased by truncation"
        );
    }
    let d = rho.cutoff();
    let (x, p) = quadratures(d)?;
    let (x, p) = (x.into_matrix(), p.into_matrix());
    let xx = &x * &x;
    let pp = &p * &p;
    let xp = (&x * &p + &p * &x) * C64::from(0.5);

    let mut mean = Vector4::zeros();
    let mut sigma = Matrix4::zeros();
    for mode in 0..2 {
        let red = partial_trace(rho, mode)?;
        let o = 2 * mode;
        mean[o] = expectation(&red, &x)?.re;
        mean[o + 1] = expectation(&red, &p)?.re;
        sigma[(o, o)] = expectation(&red, &xx)?.re;
        sigma[(o + 1, o + 1)] = expectation(&red, &pp)?.re;
        let c = expectation(&red, &xp)?.re;
        sigma[(o, o + 1)] = c;
        sigma[(o + 1, o)] = c;
    }
    let local = [&x, &p];
    for (i, a) in local.iter().enumerate() {
        for (j, b) in local.iter().enumerate() {
            let v = two_mode_moment(rho, a, b).re;
            sigma[(i, 2 + j)] = v;
            sigma[(2 + j, i)] = v;
        }
    }
    sigma -= mean * mean.transpose();
    CovarianceMatrix::new(sigma, mean)
}

/// `max{0, −log₂ ν}` with `ν = √(2(Δ − √(Δ² − 4 det σ)))` and
/// `Δ = det α + det β − 2 det γ`.
pub fn gaussian_log_negativity(cov: &CovarianceMatrix) -> Result<f64> {
    let delta =
        cov.alpha().determinant() + cov.beta().determinant() - 2.0 * cov.gamma().determinant();
    let det = cov.sigma.determinant();
    let mut disc = delta * delta - 4.0 * det;
    if disc < 0.0 {
        // pure states sit exactly on the boundary
        if disc > -1e-12 * delta.abs().max(1.0).powi(2) {
            disc = 0.0;
        } else {
            return Err(Error::Numerical(format!(
                "unphysical covariance matrix: Δ² − 4 det σ = {disc:.3e}"
            )));
        }
    }
    let inner = delta - disc.sqrt();
    if inner.is_nan() || inner <= 0.0 {
        return Err(Error::Numerical(format!(
            "unphysical covariance matrix: Δ − √(Δ² − 4 det σ) = {inner:.3e}"
        )));
    }
    let nu = (2.0 * inner).sqrt();
    Ok((-nu.log2()).max(0.0))
}
