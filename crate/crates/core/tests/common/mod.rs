//! Reference implementation of the loop as an explicit multimode circuit:
//! the signal meets a fresh vacuum ancilla on a beam splitter at each
//! attempt, and every ancilla is read out by its own click detector.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use photonloop::fock::{make_annihilation, operator_exponential, tensor, FockVector};

pub type CMatrix = DMatrix<C64>;

/// `exp[κ(â₀â₁† − â₀†â₁)]` on two modes of `d` levels, `t = cos κ`.
pub fn beam_splitter(t: f64, d: usize) -> CMatrix {
    let kappa = t.acos();
    let a = make_annihilation(d).unwrap().into_matrix();
    let id = CMatrix::identity(d, d);
    let a0 = tensor(&a, &id);
    let a1 = tensor(&id, &a);
    let gen = (&a0 * a1.adjoint() - a0.adjoint() * &a1) * C64::from(kappa);
    operator_exponential(&gen).unwrap()
}

/// Applies a two-mode gate to modes `(0, k)` of an `(n+1)`-mode vector.
fn apply_gate(psi: &mut [C64], gate: &CMatrix, d: usize, modes: usize, k: usize) {
    let stride_k = d.pow((modes - 1 - k) as u32);
    let stride_0 = d.pow((modes - 1) as u32);
    let mut block = vec![C64::new(0.0, 0.0); d * d];
    for base in 0..psi.len() {
        // visit each combination of the other modes once, with modes 0 and k at 0
        if !(base / stride_0).is_multiple_of(d) || !(base / stride_k).is_multiple_of(d) {
            continue;
        }
        for s in 0..d {
            for a in 0..d {
                block[s * d + a] = psi[base + s * stride_0 + a * stride_k];
            }
        }
        for s in 0..d {
            for a in 0..d {
                let row = s * d + a;
                let mut acc = C64::new(0.0, 0.0);
                for (col, b) in block.iter().enumerate() {
                    acc += gate[(row, col)] * b;
                }
                psi[base + s * stride_0 + a * stride_k] = acc;
            }
        }
    }
}

/// Unnormalized conditional signal states `ρ^(n)` for a click first seen at
/// attempt `n = 1..=steps`.
pub fn literal_branches(input: &FockVector, t: f64, eta: f64, steps: usize) -> Vec<CMatrix> {
    let d = input.cutoff();
    let gate = beam_splitter(t, d);
    let miss = 1.0 - eta;
    (1..=steps)
        .map(|n| {
            let modes = n + 1;
            let ancilla_dim = d.pow(n as u32);
            let mut psi = vec![C64::new(0.0, 0.0); d * ancilla_dim];
            for s in 0..d {
                psi[s * ancilla_dim] = input.amplitudes()[s];
            }
            for k in 1..=n {
                apply_gate(&mut psi, &gate, d, modes, k);
            }
            // POVM weights: no click on ancillas 1..n−1, click on ancilla n
            let weights: Vec<f64> = (0..ancilla_dim)
                .map(|idx| {
                    let mut w = 1.0;
                    for k in 1..=n {
                        let m = (idx / d.pow((n - k) as u32)) % d;
                        w *= if k < n {
                            miss.powi(m as i32)
                        } else {
                            1.0 - miss.powi(m as i32)
                        };
                    }
                    w
                })
                .collect();
            CMatrix::from_fn(d, d, |i, j| {
                (0..ancilla_dim)
                    .map(|a| {
                        psi[i * ancilla_dim + a] * psi[j * ancilla_dim + a].conj() * weights[a]
                    })
                    .sum()
            })
        })
        .collect()
}

/// Normalized loop output and total success probability from the circuit.
pub fn literal_loop(input: &FockVector, t: f64, eta: f64, steps: usize) -> (CMatrix, f64) {
    let d = input.cutoff();
    let total = literal_branches(input, t, eta, steps)
        .into_iter()
        .fold(CMatrix::zeros(d, d), |acc, b| acc + b);
    let p = total.trace().re;
    (total / C64::from(p), p)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
