//! Input-state factories in the truncated Fock basis.
//!
//! Squeezing is parameterized in decibels relative to the vacuum variance
//! 1/2: `squeeze_db = −10·log₁₀(2·V_min)`, so a pure state has
//! `r = dB·ln(10)/20`. Every factory renormalizes after truncation and then
//! rejects the result if the two highest Fock levels carry more population
//! than the [`Truncation`] allows.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    make_annihilation, operator_exponential, CMatrix, CVector, DensityOperator, FockVector,
    Truncation,
};

/// Squeezing parameter `r` for a pure state squeezed by `db` decibels.
pub fn db_to_r(db: f64) -> Result<f64> {
    if !db.is_finite() || db < 0.0 {
        return Err(Error::invalid(format!(
            "squeezing must be a finite, non-negative dB value, got {db}"
        )));
    }
    Ok(db * std::f64::consts::LN_10 / 20.0)
}

/// Squeezing and anti-squeezing levels of a (possibly impure) squeezed state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezingSpec {
    squeeze_db: f64,
    antisqueeze_db: f64,
}

impl SqueezingSpec {
    pub fn new(squeeze_db: f64, antisqueeze_db: f64) -> Result<Self> {
        db_to_r(squeeze_db).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if !antisqueeze_db.is_finite() || antisqueeze_db < squeeze_db {
            return Err(Error::InvalidSpec(format!(
                "anti-squeezing ({antisqueeze_db} dB) must be at least the squeezing ({squeeze_db} dB)"
            )));
        }
        Ok(Self {
            squeeze_db,
            antisqueeze_db,
        })
    }

    pub fn pure(squeeze_db: f64) -> Result<Self> {
        Self::new(squeeze_db, squeeze_db)
    }

    pub fn squeeze_db(&self) -> f64 {
        self.squeeze_db
    }

    pub fn antisqueeze_db(&self) -> f64 {
        self.antisqueeze_db
    }

    pub fn is_pure(&self) -> bool {
        self.squeeze_db == self.antisqueeze_db
    }

    /// Squeezing parameter of the unitary part.
    pub fn r(&self) -> f64 {
        (self.squeeze_db + self.antisqueeze_db) * std::f64::consts::LN_10 / 40.0
    }

    /// Mean occupation of the thermal state that is squeezed.
    pub fn thermal_occupancy(&self) -> f64 {
        (10f64.powf((self.antisqueeze_db - self.squeeze_db) / 20.0) - 1.0) / 2.0
    }

    /// Squeezed quadrature variance `10^(−s/10)/2`.
    pub fn min_variance(&self) -> f64 {
        10f64.powf(-self.squeeze_db / 10.0) / 2.0
    }

    /// Anti-squeezed quadrature variance `10^(a/10)/2`.
    pub fn max_variance(&self) -> f64 {
        10f64.powf(self.antisqueeze_db / 10.0) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatParity {
    /// `|α⟩ + |−α⟩`, even photon numbers only.
    Plus,
    /// `|α⟩ − |−α⟩`, odd photon numbers only.
    Minus,
}

impl CatParity {
    fn sign(self) -> f64 {
        match self {
            CatParity::Plus => 1.0,
            CatParity::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatSpec {
    pub alpha: C64,
    pub parity: CatParity,
}

impl CatSpec {
    pub fn new(alpha: C64, parity: CatParity) -> Self {
        Self { alpha, parity }
    }

    /// `2(1 ± e^{−2|α|²})`, the squared norm of the unnormalized superposition.
    pub fn normalization(&self) -> f64 {
        2.0 * (1.0 + self.parity.sign() * (-2.0 * self.alpha.norm_sqr()).exp())
    }
}

fn finish(amplitudes: CVector, trunc: &Truncation, modes: usize) -> Result<FockVector> {
    let v = FockVector::new(amplitudes, trunc.cutoff, modes)?.normalized()?;
    trunc.check_tail(v.tail_mass())?;
    Ok(v)
}

fn coherent_amplitudes(alpha: C64, cutoff: usize) -> CVector {
    let mut amps = CVector::zeros(cutoff);
    let mut c = C64::from((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..cutoff {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps[n] = c;
    }
    amps
}

/// Coherent state `|α⟩`.
pub fn coherent(alpha: C64, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let trunc = trunc.into();
    trunc.validate()?;
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::invalid("coherent amplitude must be finite"));
    }
    finish(coherent_amplitudes(alpha, trunc.cutoff), &trunc, 1)
}

/// Cat state `|α⟩ ± |−α⟩`, normalized.
pub fn cat_state(spec: CatSpec, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let trunc = trunc.into();
    trunc.validate()?;
    if !spec.alpha.re.is_finite() || !spec.alpha.im.is_finite() {
        return Err(Error::invalid("cat amplitude must be finite"));
    }
    if spec.normalization() <= 1e-14 {
        return Err(Error::InvalidSpec(format!(
            "odd cat state with α = {} has vanishing norm",
            spec.alpha
        )));
    }
    let sign = spec.parity.sign();
    let base = coherent_amplitudes(spec.alpha, trunc.cutoff);
    let amps = CVector::from_iterator(
        trunc.cutoff,
        base.iter().enumerate().map(|(n, c)| {
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            // ⟨n|−α⟩ = (−1)ⁿ⟨n|α⟩
            *c * (1.0 + sign * parity)
        }),
    );
    finish(amps, &trunc, 1)
}

/// Pure squeezed vacuum from the closed-form Fock amplitudes.
pub fn squeezed_vacuum(squeeze_db: f64, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let trunc = trunc.into();
    trunc.validate()?;
    let r = db_to_r(squeeze_db)?;
    let th = r.tanh();
    let mut amps = CVector::zeros(trunc.cutoff);
    let mut c = 1.0 / r.cosh().sqrt();
    amps[0] = C64::from(c);
    let mut n = 1;
    while 2 * n < trunc.cutoff {
        let k = 2 * n;
        c *= -th * (((k - 1) as f64) / (k as f64)).sqrt();
        amps[k] = C64::from(c);
        n += 1;
    }
    finish(amps, &trunc, 1)
}

/// Squeeze operator `exp[(r/2)(â² − â†²)]` on a Fock space of dimension `dim`.
fn squeeze_operator(r: f64, dim: usize) -> Result<CMatrix> {
    let a = make_annihilation(dim)?.into_matrix();
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * C64::from(r / 2.0);
    operator_exponential(&gen)
}

/// Pure squeezed vacuum obtained by exponentiating the squeeze generator on a
/// doubled cutoff and truncating back.
pub fn squeezed_vacuum_by_exponential(
    squeeze_db: f64,
    trunc: impl Into<Truncation>,
) -> Result<FockVector> {
    let trunc = trunc.into();
    trunc.validate()?;
    let r = db_to_r(squeeze_db)?;
    let s = squeeze_operator(r, 2 * trunc.cutoff)?;
    let amps = CVector::from_iterator(trunc.cutoff, (0..trunc.cutoff).map(|n| s[(n, 0)]));
    finish(amps, &trunc, 1)
}

/// Squeezed thermal state `S(r) ρ_th(n̄) S†(r)`.
pub fn squeezed_thermal(
    spec: SqueezingSpec,
    trunc: impl Into<Truncation>,
) -> Result<DensityOperator> {
    let trunc = trunc.into();
    trunc.validate()?;
    let d = trunc.cutoff;
    let padded = 2 * d;
    let nbar = spec.thermal_occupancy();
    let s = squeeze_operator(spec.r(), padded)?;

    let used = if nbar == 0.0 { 1 } else { padded };
    let weights: Vec<f64> = (0..used)
        .map(|k| nbar.powi(k as i32) / (1.0 + nbar).powi(k as i32 + 1))
        .collect();

    // Only the first D rows of S survive truncation.
    let rows = s.view((0, 0), (d, used)).into_owned();
    let mut scaled = rows.clone();
    for (k, w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(*w);
    }
    let mut m = &scaled * rows.adjoint();
    // Re-symmetrize against round-off in the product.
    m = (&m + m.adjoint()) * C64::from(0.5);
    let rho = DensityOperator::new(m, d, 1)?.normalized()?;
    trunc.check_tail(rho.tail_mass())?;
    Ok(rho)
}

/// Two-mode squeezed vacuum `(cosh r)⁻¹ Σ_f (tanh r)^f |f⟩|f⟩`.
pub fn two_mode_squeezed(squeeze_db: f64, trunc: impl Into<Truncation>) -> Result<FockVector> {
    let trunc = trunc.into();
    trunc.validate()?;
    let r = db_to_r(squeeze_db)?;
    let d = trunc.cutoff;
    let lambda = r.tanh();
    let mut amps = CVector::zeros(d * d);
    let mut c = 1.0 / r.cosh();
    for f in 0..d {
        amps[f * d + f] = C64::from(c);
        c *= lambda;
    }
    finish(amps, &trunc, 2)
}

/// Input state named by the command-line mini-syntax.
///
/// `vacuum`, `coherent:RE[,IM]`, `cat+:ALPHA`, `cat-:ALPHA`, `sqz:SDB[,ADB]`,
/// `tmsv:SDB`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpec {
    Vacuum,
    Coherent(C64),
    Cat(CatSpec),
    Squeezed(SqueezingSpec),
    TwoModeSqueezed(f64),
}

impl StateSpec {
    pub fn modes(&self) -> usize {
        match self {
            StateSpec::TwoModeSqueezed(_) => 2,
            _ => 1,
        }
    }

    pub fn density(&self, trunc: impl Into<Truncation>) -> Result<DensityOperator> {
        let trunc = trunc.into();
        match *self {
            StateSpec::Vacuum => {
                trunc.validate()?;
                DensityOperator::vacuum(trunc.cutoff, 1)
            }
            StateSpec::Squeezed(spec) if !spec.is_pure() => squeezed_thermal(spec, trunc),
            _ => Ok(self.pure(trunc)?.expect("pure state").to_density()),
        }
    }

    /// State vector, or `None` for mixed states.
    pub fn pure(&self, trunc: impl Into<Truncation>) -> Result<Option<FockVector>> {
        let trunc = trunc.into();
        Ok(Some(match *self {
            StateSpec::Vacuum => {
                trunc.validate()?;
                FockVector::basis(0, trunc.cutoff)?
            }
            StateSpec::Coherent(alpha) => coherent(alpha, trunc)?,
            StateSpec::Cat(spec) => cat_state(spec, trunc)?,
            StateSpec::Squeezed(spec) if spec.is_pure() => {
                squeezed_vacuum(spec.squeeze_db(), trunc)?
            }
            StateSpec::Squeezed(_) => return Ok(None),
            StateSpec::TwoModeSqueezed(db) => two_mode_squeezed(db, trunc)?,
        }))
    }
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("`{s}` is not a number ({what})")))?;
    if !v.is_finite() {
        return Err(Error::InvalidSpec(format!("{what} must be finite")));
    }
    Ok(v)
}

fn parse_list(s: &str, what: &str, min: usize, max: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() < min || parts.len() > max {
        return Err(Error::InvalidSpec(format!(
            "{what} takes {min}..={max} comma-separated values, got `{s}`"
        )));
    }
    parts.iter().map(|p| parse_number(p, what)).collect()
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "vacuum" {
            return Ok(StateSpec::Vacuum);
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("unknown state `{s}`")))?;
        match kind {
            "coherent" => {
                let v = parse_list(args, "coherent amplitude", 1, 2)?;
                Ok(StateSpec::Coherent(C64::new(
                    v[0],
                    v.get(1).copied().unwrap_or(0.0),
                )))
            }
            "cat+" | "cat-" => {
                let alpha = parse_number(args, "cat amplitude")?;
                let parity = if kind == "cat+" {
                    CatParity::Plus
                } else {
                    CatParity::Minus
                };
                Ok(StateSpec::Cat(CatSpec::new(C64::from(alpha), parity)))
            }
            "sqz" => {
                let v = parse_list(args, "squeezing", 1, 2)?;
                let spec = SqueezingSpec::new(v[0], v.get(1).copied().unwrap_or(v[0]))?;
                Ok(StateSpec::Squeezed(spec))
            }
            "tmsv" => {
                let db = parse_number(args, "two-mode squeezing")?;
                db_to_r(db).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                Ok(StateSpec::TwoModeSqueezed(db))
            }
            _ => Err(Error::InvalidSpec(format!("unknown state kind `{kind}`"))),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Vacuum => write!(f, "vacuum"),
            StateSpec::Coherent(a) if a.im == 0.0 => write!(f, "coherent:{}", a.re),
            StateSpec::Coherent(a) => write!(f, "coherent:{},{}", a.re, a.im),
            StateSpec::Cat(c) => {
                let sign = match c.parity {
                    CatParity::Plus => '+',
                    CatParity::Minus => '-',
                };
                write!(f, "cat{sign}:{}", c.alpha.re)
            }
            StateSpec::Squeezed(s) if s.is_pure() => write!(f, "sqz:{}", s.squeeze_db()),
            StateSpec::Squeezed(s) => write!(f, "sqz:{},{}", s.squeeze_db(), s.antisqueeze_db()),
            StateSpec::TwoModeSqueezed(db) => write!(f, "tmsv:{db}"),
        }
    }
}
