//! Projection onto the con-eigenvectors `ĴUψ = ψ` of an anti-unitary.
//!
//! With `M = ŪU = (ĴU)²` of finite order `n` (up to phase), the projector
//! onto the `M = 1` eigenspace is `Q = (1/n) Σ_j M^j`, and for any `φ` the
//! vector `conj(UQφ) + Qφ` is fixed by `ĴU`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::weyl::{norm, UnitaryMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConEigenError {
    #[error("order of conj(U)·U exceeds cap {0}")]
    OrderExceedsCap(usize),
    #[error("symmetrised vector is degenerate; draw a fresh starting vector")]
    Resample,
}

// Tolerance for recognising M^n as a multiple of the identity.
const SCALAR_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ConEigenData {
    pub unitary: UnitaryMatrix,
    /// Least `n` with `(ŪU)^n = e^{iθ} I`.
    pub order: usize,
    /// `θ`, absorbed as `e^{−iθ/n}` before averaging.
    pub phase: f64,
    pub projector: UnitaryMatrix,
    // U·Q, cached for symmetrize and its adjoint
    uq: UnitaryMatrix,
}

impl ConEigenData {
    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    /// `ŪU` with the phase correction applied.
    pub fn square(&self) -> UnitaryMatrix {
        self.unitary
            .conj()
            .matmul(&self.unitary)
            .scale(C64::from_polar(1.0, -self.phase / self.order as f64))
    }

    /// Complex rank of `Q`, which is the real dimension of the set of
    /// con-eigenvectors.
    pub fn real_dimension(&self) -> usize {
        self.projector.trace().re.round() as usize
    }

    pub fn uq(&self) -> &UnitaryMatrix {
        &self.uq
    }

    /// `‖ĴUψ − ψ‖`.
    pub fn residual(&self, psi: &[C64]) -> f64 {
        let mapped = self.unitary.apply(psi);
        mapped
            .iter()
            .zip(psi)
            .map(|(m, p)| (m.conj() - p).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub fn coneigen_projector(unitary: &UnitaryMatrix, cap: usize) -> Result<ConEigenData, ConEigenError> {
    let d = unitary.dim();
    let m = unitary.conj().matmul(unitary);
    let mut power = m.clone();
    for n in 1..=cap {
        if let Some(lambda) = power.scalar_multiple_of_identity(SCALAR_TOL) {
            let phase = lambda.arg();
            let corrected = m.scale(C64::from_polar(1.0, -phase / n as f64));
            let mut acc = UnitaryMatrix::identity(d);
            let mut sum = UnitaryMatrix::identity(d);
            for _ in 1..n {
                acc = acc.matmul(&corrected);
                sum = add(&sum, &acc);
            }
            let projector = sum.scale(C64::new(1.0 / n as f64, 0.0));
            let uq = unitary.matmul(&projector);
            return Ok(ConEigenData {
                unitary: unitary.clone(),
                order: n,
                phase,
                projector,
                uq,
            });
        }
        power = power.matmul(&m);
    }
    Err(ConEigenError::OrderExceedsCap(cap))
}

fn add(a: &UnitaryMatrix, b: &UnitaryMatrix) -> UnitaryMatrix {
    UnitaryMatrix::from_fn(a.dim(), |r, c| a.get(r, c) + b.get(r, c))
}

/// `ψ' = conj(UQφ) + Qφ`, unnormalised; `None` when degenerate.
pub fn symmetrize_raw(phi: &[C64], ce: &ConEigenData) -> Option<Vec<C64>> {
    let uq = ce.uq.apply(phi);
    let q = ce.projector.apply(phi);
    let out: Vec<C64> = uq.iter().zip(&q).map(|(a, b)| a.conj() + b).collect();
    (norm(&out) >= 1e-8 * norm(phi)).then_some(out)
}

/// Normalised con-eigenvector built from `φ`.
pub fn symmetrize(phi: &[C64], ce: &ConEigenData) -> Result<Vec<C64>, ConEigenError> {
    let raw = symmetrize_raw(phi, ce).ok_or(ConEigenError::Resample)?;
    let n = norm(&raw);
    Ok(raw.iter().map(|z| z / n).collect())
}
