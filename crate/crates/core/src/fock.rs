//! Truncated Fock-space linear algebra.
//!
//! Every operator is stored densely. Composite two-mode spaces use the
//! row index `i0 * D + i1`, i.e. the mode-0 index varies slowest, which is
//! also the index order produced by the Kronecker product `A ⊗ B`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Entrywise tolerance on `ρ − ρ†` for a density operator.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr ρ − 1|` for a normalized state.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a positive semidefinite state.
pub const PSD_TOL: f64 = -1e-10;
/// Default bound on the population of the two highest Fock levels.
pub const DEFAULT_TAIL_LIMIT: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Truncation of one mode's Fock space, together with the tail-mass bound a
/// prepared state must respect at that cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub cutoff: usize,
    pub tail_limit: f64,
}

impl Truncation {
    pub fn new(cutoff: usize) -> Self {
        Self {
            cutoff,
            tail_limit: DEFAULT_TAIL_LIMIT,
        }
    }

    pub fn with_tail_limit(mut self, tail_limit: f64) -> Self {
        self.tail_limit = tail_limit;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.cutoff < 2 {
            return Err(Error::InvalidCutoff(self.cutoff));
        }
        if self.tail_limit.is_nan() || self.tail_limit < 0.0 {
            return Err(Error::invalid(format!(
                "tail limit must be non-negative, got {}",
                self.tail_limit
            )));
        }
        Ok(())
    }

    pub(crate) fn check_tail(&self, tail_mass: f64) -> Result<()> {
        if tail_mass > self.tail_limit {
            Err(Error::Truncation {
                cutoff: self.cutoff,
                tail_mass,
                limit: self.tail_limit,
            })
        } else {
            Ok(())
        }
    }
}

impl From<usize> for Truncation {
    fn from(cutoff: usize) -> Self {
        Truncation::new(cutoff)
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        Err(Error::InvalidCutoff(cutoff))
    } else {
        Ok(())
    }
}

fn check_modes(modes: usize) -> Result<()> {
    if modes == 1 || modes == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "only 1 or 2 modes are supported, got {modes}"
        )))
    }
}

/// Sum of the two highest-level populations.
fn top_two(populations: &[f64]) -> f64 {
    populations.iter().rev().take(2).sum()
}

/// An operator acting on a single truncated mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator {
    matrix: CMatrix,
}

impl ModeOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("mode operator must be square"));
        }
        check_cutoff(matrix.nrows())?;
        Ok(Self { matrix })
    }

    pub fn identity(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        Ok(Self {
            matrix: CMatrix::identity(cutoff, cutoff),
        })
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &ModeOperator) -> Result<Self> {
        if self.cutoff() != rhs.cutoff() {
            return Err(Error::invalid("cutoff mismatch in operator product"));
        }
        Ok(Self {
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.cutoff();
        (0..d).all(|j| (0..d).all(|i| i == j || self.matrix[(i, j)] == ZERO))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.matrix.diagonal().iter().copied().collect()
    }
}

/// Annihilation operator `â` with `√n` at `(n − 1, n)`.
pub fn make_annihilation(cutoff: usize) -> Result<ModeOperator> {
    check_cutoff(cutoff)?;
    let mut m = CMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        m[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    Ok(ModeOperator { matrix: m })
}

pub fn make_creation(cutoff: usize) -> Result<ModeOperator> {
    Ok(make_annihilation(cutoff)?.adjoint())
}

/// Number operator `n̂ = diag(0, 1, …, D − 1)`.
pub fn make_number(cutoff: usize) -> Result<ModeOperator> {
    check_cutoff(cutoff)?;
    let diag = CVector::from_iterator(cutoff, (0..cutoff).map(|n| C64::from(n as f64)));
    Ok(ModeOperator {
        matrix: CMatrix::from_diagonal(&diag),
    })
}

/// Applies `f` to the (real) diagonal of a diagonal operator, e.g. `t^n̂`.
pub fn operator_function_diagonal<F>(op: &ModeOperator, f: F) -> Result<ModeOperator>
where
    F: Fn(f64) -> f64,
{
    if !op.is_diagonal() {
        return Err(Error::Unsupported(
            "operator function requires a diagonal operator".into(),
        ));
    }
    let diag = op.diagonal();
    if diag.iter().any(|z| z.im != 0.0) {
        return Err(Error::Unsupported(
            "operator function requires a real diagonal".into(),
        ));
    }
    let mapped = CVector::from_iterator(diag.len(), diag.iter().map(|z| C64::from(f(z.re))));
    Ok(ModeOperator {
        matrix: CMatrix::from_diagonal(&mapped),
    })
}

/// Quadratures `x̂ = (â + â†)/√2` and `p̂ = (â − â†)/(i√2)`; vacuum variance 1/2.
pub fn quadratures(cutoff: usize) -> Result<(ModeOperator, ModeOperator)> {
    let a = make_annihilation(cutoff)?.into_matrix();
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * C64::from(s);
    let p = (&a - &ad) * C64::new(0.0, -s);
    Ok((ModeOperator { matrix: x }, ModeOperator { matrix: p }))
}

/// Matrix exponential of a square complex matrix.
pub fn operator_exponential(generator: &CMatrix) -> Result<CMatrix> {
    if !generator.is_square() {
        return Err(Error::invalid("matrix exponential needs a square matrix"));
    }
    if generator
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Numerical(
            "non-finite entry in matrix exponential input".into(),
        ));
    }
    let out = generator.exp();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(out)
}

/// Kronecker product `A ⊗ B` (index of `A` varies slowest).
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Reduces a two-mode operator to the mode `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: usize) -> Result<DensityOperator> {
    if rho.modes != 2 {
        return Err(Error::invalid("partial trace needs a two-mode state"));
    }
    let d = rho.cutoff;
    let m = &rho.matrix;
    let out = match keep {
        0 => CMatrix::from_fn(d, d, |i, j| (0..d).map(|k| m[(i * d + k, j * d + k)]).sum()),
        1 => CMatrix::from_fn(d, d, |i, j| (0..d).map(|k| m[(k * d + i, k * d + j)]).sum()),
        _ => return Err(Error::invalid(format!("mode index {keep} is not 0 or 1"))),
    };
    Ok(DensityOperator {
        matrix: out,
        cutoff: d,
        modes: 1,
    })
}

/// `Tr[ρ · op]`.
pub fn expectation(rho: &DensityOperator, op: &CMatrix) -> Result<C64> {
    let n = rho.dim();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::invalid(format!(
            "operator is {}x{}, state dimension is {n}",
            op.nrows(),
            op.ncols()
        )));
    }
    // Tr[ρA] = Σ_ij ρ_ij A_ji
    let mut acc = ZERO;
    for j in 0..n {
        for i in 0..n {
            acc += rho.matrix[(i, j)] * op[(j, i)];
        }
    }
    Ok(acc)
}

/// Complex amplitudes over a truncated Fock basis of one or two modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: CVector,
    cutoff: usize,
    modes: usize,
}

impl FockVector {
    pub fn new(amplitudes: CVector, cutoff: usize, modes: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_modes(modes)?;
        if amplitudes.len() != cutoff.pow(modes as u32) {
            return Err(Error::invalid(format!(
                "amplitude vector of length {} does not match cutoff {cutoff} and {modes} mode(s)",
                amplitudes.len()
            )));
        }
        Ok(Self {
            amplitudes,
            cutoff,
            modes,
        })
    }

    /// The single-mode number state `|n⟩`.
    pub fn basis(n: usize, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        if n >= cutoff {
            return Err(Error::invalid(format!(
                "|{n}⟩ lies outside cutoff {cutoff}"
            )));
        }
        let mut v = CVector::zeros(cutoff);
        v[n] = ONE;
        Ok(Self {
            amplitudes: v,
            cutoff,
            modes: 1,
        })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::Numerical("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: self.amplitudes.unscale(n),
            ..self.clone()
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::invalid("dimension mismatch in inner product"));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Reduced photon-number distribution of one mode.
    pub fn populations(&self, mode: usize) -> Vec<f64> {
        let d = self.cutoff;
        let mut p = vec![0.0; d];
        for (idx, c) in self.amplitudes.iter().enumerate() {
            let n = match (self.modes, mode) {
                (1, _) => idx,
                (_, 0) => idx / d,
                _ => idx % d,
            };
            p[n] += c.norm_sqr();
        }
        p
    }

    /// Population at the two highest Fock levels (largest over modes).
    pub fn tail_mass(&self) -> f64 {
        (0..self.modes)
            .map(|m| top_two(&self.populations(m)))
            .fold(0.0, f64::max)
    }

    pub fn tensor(&self, other: &FockVector) -> Result<FockVector> {
        if self.modes != 1 || other.modes != 1 || self.cutoff != other.cutoff {
            return Err(Error::invalid(
                "tensor product needs two single-mode vectors with equal cutoffs",
            ));
        }
        Ok(FockVector {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            cutoff: self.cutoff,
            modes: 2,
        })
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// A (possibly unnormalized) density operator over one or two truncated modes.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    cutoff: usize,
    modes: usize,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, cutoff: usize, modes: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_modes(modes)?;
        let dim = cutoff.pow(modes as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            cutoff,
            modes,
        })
    }

    /// Caller guarantees `matrix` has dimension `cutoff^modes`.
    pub(crate) fn from_parts(matrix: CMatrix, cutoff: usize, modes: usize) -> Self {
        debug_assert_eq!(matrix.nrows(), cutoff.pow(modes as u32));
        Self {
            matrix,
            cutoff,
            modes,
        }
    }

    pub fn from_pure(v: &FockVector) -> Self {
        Self {
            matrix: &v.amplitudes * v.amplitudes.adjoint(),
            cutoff: v.cutoff,
            modes: v.modes,
        }
    }

    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        Ok(Self::from_pure(&FockVector::basis(n, cutoff)?))
    }

    pub fn vacuum(cutoff: usize, modes: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_modes(modes)?;
        let dim = cutoff.pow(modes as u32);
        let mut m = CMatrix::zeros(dim, dim);
        m[(0, 0)] = ONE;
        Ok(Self {
            matrix: m,
            cutoff,
            modes,
        })
    }

    pub fn zeros(cutoff: usize, modes: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        check_modes(modes)?;
        let dim = cutoff.pow(modes as u32);
        Ok(Self {
            matrix: CMatrix::zeros(dim, dim),
            cutoff,
            modes,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= TRACE_TOL
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::from(factor),
            ..self.clone()
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !tr.is_finite() || tr <= 0.0 {
            return Err(Error::Numerical(format!(
                "cannot normalize state with trace {tr}"
            )));
        }
        Ok(self.scale(1.0 / tr))
    }

    /// `max |ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().min()
    }

    /// Checks Hermiticity and positivity within the module tolerances.
    pub fn check_physical(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Numerical(format!(
                "state is not Hermitian (error {herm:.3e})"
            )));
        }
        let min = self.min_eigenvalue();
        if min < PSD_TOL {
            return Err(Error::Numerical(format!(
                "state is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(())
    }

    /// Reduced photon-number distribution of one mode.
    pub fn populations(&self, mode: usize) -> Vec<f64> {
        let d = self.cutoff;
        let mut p = vec![0.0; d];
        for idx in 0..self.dim() {
            let n = match (self.modes, mode) {
                (1, _) => idx,
                (_, 0) => idx / d,
                _ => idx % d,
            };
            p[n] += self.matrix[(idx, idx)].re;
        }
        p
    }

    /// Population at the two highest Fock levels, relative to the trace
    /// (largest over modes).
    pub fn tail_mass(&self) -> f64 {
        let tr = self.trace();
        if tr <= 0.0 {
            return 0.0;
        }
        (0..self.modes)
            .map(|m| top_two(&self.populations(m)) / tr)
            .fold(0.0, f64::max)
    }

    /// `self ⊗ other` for two single-mode states of equal cutoff.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        if self.modes != 1 || other.modes != 1 || self.cutoff != other.cutoff {
            return Err(Error::invalid(
                "tensor product needs two single-mode states with equal cutoffs",
            ));
        }
        Ok(Self {
            matrix: tensor(&self.matrix, &other.matrix),
            cutoff: self.cutoff,
            modes: 2,
        })
    }

    /// Exchanges the two modes of a two-mode state.
    pub fn swap_modes(&self) -> Result<DensityOperator> {
        if self.modes != 2 {
            return Err(Error::invalid("mode swap needs a two-mode state"));
        }
        let d = self.cutoff;
        let sw = |k: usize| (k % d) * d + k / d;
        let m = CMatrix::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(sw(i), sw(j))]);
        Ok(Self {
            matrix: m,
            ..self.clone()
        })
    }

    /// The same state with `extra` empty levels appended to every mode.
    pub fn padded(&self, extra: usize) -> DensityOperator {
        let (d, big) = (self.cutoff, self.cutoff + extra);
        let lift = |mut k: usize| {
            let (mut out, mut stride) = (0, 1);
            for _ in 0..self.modes {
                out += (k % d) * stride;
                k /= d;
                stride *= big;
            }
            out
        };
        let n = big.pow(self.modes as u32);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                m[(lift(i), lift(j))] = self.matrix[(i, j)];
            }
        }
        Self {
            matrix: m,
            cutoff: big,
            modes: self.modes,
        }
    }

    /// Largest entrywise deviation from another operator.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
