//! Gauss-Newton refinement of a near-fiducial on the overlap equations
//! `|⟨ψ|D̂_pψ⟩|² = 1/(d+1)`, restricted to the real span of the
//! con-eigenvectors.
//!
//! Near a solution the frame potential exceeds its bound by the square of
//! the overlap errors, so once it is within rounding of `2/(d+1)` it no longer
//! sees them. The residuals themselves stay resolvable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::coneigen::{symmetrize_raw, ConEigenData};
use super::potential::OverlapEngine;
use crate::weyl::normalize;

fn re_inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Orthonormal basis, under `Re⟨·,·⟩`, of the real space `{ψ : ĴUψ = ψ}`.
pub fn fixed_space_basis(ce: &ConEigenData) -> Vec<Vec<C64>> {
    let d = ce.dim();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for k in 0..2 * d {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[k % d] = if k < d { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
        let Some(mut v) = symmetrize_raw(&e, ce) else { continue };
        for _ in 0..2 {
            for b in &basis {
                let c = re_inner(b, &v);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= y * c);
            }
        }
        let n = re_inner(&v, &v).sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    basis
}

#[derive(Clone, Debug)]
pub struct PolishOutcome {
    pub fiducial: Vec<C64>,
    /// `max_p | |overlap_p|² − 1/(d+1) |` before and after.
    pub initial_residual: f64,
    pub final_residual: f64,
    pub steps: usize,
}

fn residuals(engine: &OverlapEngine, psi: &[C64]) -> (Vec<C64>, Vec<f64>) {
    let target = 1.0 / (engine.dim() as f64 + 1.0);
    let c = engine.overlaps(psi);
    let r = c[1..].iter().map(|z| z.norm_sqr() - target).collect();
    (c, r)
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Damped Gauss-Newton on the residuals; each step is kept only if it
/// lowers the largest residual.
pub fn polish(
    engine: &OverlapEngine,
    basis: &[Vec<C64>],
    psi: &[C64],
    max_steps: usize,
) -> PolishOutcome {
    let d = engine.dim();
    let target = 1.0 / (d as f64 + 1.0);
    let m = basis.len();
    let mut psi = normalize(psi);
    let (mut c, mut r) = residuals(engine, &psi);
    let initial = max_abs(&r);
    let mut best = initial;
    let mut steps = 0;
    for _ in 0..max_steps {
        if best < 1e-15 || m == 0 {
            break;
        }
        // J_pk = 2 Re(conj(c_p) (c(b_k,ψ)_p + c(ψ,b_k)_p)) − 4t Re⟨ψ,b_k⟩
        let n = r.len();
        let mut jac = DMatrix::<f64>::zeros(n, m);
        for (k, b) in basis.iter().enumerate() {
            let left = engine.cross_overlaps(b, &psi);
            let right = engine.cross_overlaps(&psi, b);
            let radial = 4.0 * target * re_inner(&psi, b);
            for p in 0..n {
                let dc = left[p + 1] + right[p + 1];
                jac[(p, k)] = 2.0 * (c[p + 1].conj() * dc).re - radial;
            }
        }
        let jt = jac.transpose();
        let mut normal = &jt * &jac;
        let rhs = -(&jt * DVector::from_column_slice(&r));
        let damping = 1e-14 * normal.diagonal().max().max(1e-300);
        for i in 0..m {
            normal[(i, i)] += damping;
        }
        let Some(step) = normal.cholesky().map(|ch| ch.solve(&rhs)) else {
            break;
        };
        let mut trial = psi.clone();
        for (b, t) in basis.iter().zip(step.iter()) {
            trial.iter_mut().zip(b).for_each(|(x, y)| *x += y * *t);
        }
        let trial = normalize(&trial);
        let (tc, tr) = residuals(engine, &trial);
        let worst = max_abs(&tr);
        if !(worst < best) {
            break;
        }
        psi = trial;
        c = tc;
        r = tr;
        best = worst;
        steps += 1;
    }
    PolishOutcome {
        fiducial: psi,
        initial_residual: initial,
        final_residual: best,
        steps,
    }
}
