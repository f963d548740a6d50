//! The frame potential `Σ_{j,k} |Σ_l ψ̄_{j+l} ψ_l ψ̄_{k+l} ψ_{j+k+l}|²` and its
//! gradient.
//!
//! The same quantity equals `(1/d) Σ_{a,b} |⟨ψ|D̂_{(a,b)}ψ⟩|⁴`; the optimizer
//! uses that overlap form because it yields the gradient in closed form and
//! admits an FFT over the clock index.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::weyl::{check_unit, Result};

/// Lower bound `2/(d+1)`, attained exactly by SIC fiducials.
pub fn welch_bound(d: usize) -> f64 {
    2.0 / (d as f64 + 1.0)
}

/// Direct triple sum; `ψ` must be a unit vector.
pub fn frame_potential(psi: &[C64]) -> Result<f64> {
    check_unit(psi, 1e-10)?;
    Ok(frame_potential_unchecked(psi))
}

pub fn frame_potential_unchecked(psi: &[C64]) -> f64 {
    let d = psi.len();
    let conj: Vec<C64> = psi.iter().map(|z| z.conj()).collect();
    let mut total = 0.0;
    for j in 0..d {
        for k in 0..d {
            let mut s = C64::new(0.0, 0.0);
            for l in 0..d {
                s += conj[(j + l) % d] * psi[l] * conj[(k + l) % d] * psi[(j + k + l) % d];
            }
            total += s.norm_sqr();
        }
    }
    total
}

/// Overlap-based evaluation of the potential and its Wirtinger derivative.
#[derive(Clone)]
pub struct OverlapEngine {
    d: usize,
    // e^{2πi j/d}
    omega: Vec<C64>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for OverlapEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OverlapEngine")
            .field("d", &self.d)
            .field("fft", &self.fft.is_some())
            .finish()
    }
}

impl OverlapEngine {
    pub fn new(d: usize, use_fft: bool) -> Self {
        let omega = (0..d)
            .map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / d as f64))
            .collect();
        let fft = use_fft.then(|| FftPlanner::new().plan_fft_inverse(d));
        Self { d, omega, fft }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    // out[b] = Σ_j x_j ω^{bj}
    fn synthesize(&self, x: &[C64], out: &mut [C64]) {
        match &self.fft {
            Some(fft) => {
                out.copy_from_slice(x);
                fft.process(out);
            }
            None => {
                let d = self.d;
                for (b, o) in out.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, xj) in x.iter().enumerate() {
                        acc += xj * self.omega[(b * j) % d];
                    }
                    *o = acc;
                }
            }
        }
    }

    /// `ĉ_{a,b} = Σ_j ψ̄_{j+a} ψ_j ω^{bj}`, row-major in `(a, b)`; equal to
    /// `⟨ψ|D̂_{(a,b)}ψ⟩` up to a phase.
    pub fn overlaps(&self, psi: &[C64]) -> Vec<C64> {
        self.cross_overlaps(psi, psi)
    }

    /// `Σ_j x̄_{j+a} y_j ω^{bj}`, the sesquilinear form behind
    /// [`overlaps`](Self::overlaps).
    pub fn cross_overlaps(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let d = self.d;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        let mut u = vec![C64::new(0.0, 0.0); d];
        for a in 0..d {
            for (j, uj) in u.iter_mut().enumerate() {
                *uj = x[(j + a) % d].conj() * y[j];
            }
            self.synthesize(&u, &mut out[a * d..(a + 1) * d]);
        }
        out
    }

    /// Potential `(1/d) Σ |ĉ|⁴` of an arbitrary (not necessarily unit)
    /// vector, and `∂P/∂ψ̄`.
    pub fn potential_and_derivative(&self, psi: &[C64]) -> (f64, Vec<C64>) {
        let d = self.d;
        let c = self.overlaps(psi);
        let value = c.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / d as f64;

        // ∂P/∂ψ̄_m = (4/d) Σ_a ψ_{m−a} Σ_b |ĉ_ab|² conj(ĉ_ab) ω^{b(m−a)}
        let mut grad = vec![C64::new(0.0, 0.0); d];
        let mut h = vec![C64::new(0.0, 0.0); d];
        let mut big_h = vec![C64::new(0.0, 0.0); d];
        for a in 0..d {
            for (hb, cb) in h.iter_mut().zip(&c[a * d..(a + 1) * d]) {
                *hb = cb.norm_sqr() * cb.conj();
            }
            self.synthesize(&h, &mut big_h);
            for (j, hj) in big_h.iter().enumerate() {
                grad[(j + a) % d] += psi[j] * hj;
            }
        }
        let scale = 4.0 / d as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (value, grad)
    }

    /// `P(φ/‖φ‖)` and its real gradient in the raw coordinates
    /// `[Re φ, Im φ]`, without any symmetry restriction.
    pub fn normalized_value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.d;
        let phi: Vec<C64> = (0..d).map(|j| C64::new(x[j], x[d + j])).collect();
        let r = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C64> = phi.iter().map(|z| z / r).collect();
        let (value, g) = self.potential_and_derivative(&psi);
        let grad: Vec<C64> = g
            .iter()
            .zip(&psi)
            .map(|(gi, pi)| (gi - pi * (4.0 * value)) * (2.0 / r))
            .collect();
        (value, grad.iter().map(|z| z.re).chain(grad.iter().map(|z| z.im)).collect())
    }

    pub fn potential(&self, psi: &[C64]) -> f64 {
        let d = self.d;
        self.overlaps(psi)
            .iter()
            .map(|z| z.norm_sqr().powi(2))
            .sum::<f64>()
            / d as f64
    }
}
