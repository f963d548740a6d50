//! Weyl-Heisenberg displacement operators, Clifford unitaries for symmetry
//! matrices, and the anti-unitary action `ψ ↦ conj(U_{F'} ψ)` for matrices of
//! determinant `-1`.
//!
//! All phases are exact powers of the primitive `2d`-th root `e^{iπ/d}`:
//! `ω = e^{2πi/d}` and `τ = -e^{iπ/d} = e^{iπ(d+1)/d}`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::modmat::{self, ModMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("matrix modulus {modulus} does not fit dimension {d} (expected {expected})")]
    WrongModulus { modulus: u64, d: usize, expected: u64 },
    #[error("determinant {det} mod {modulus}, expected {expected}")]
    WrongDeterminant { det: u64, modulus: u64, expected: &'static str },
    #[error("vector length {got} does not match dimension {d}")]
    LengthMismatch { got: usize, d: usize },
    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),
}

pub type Result<T> = std::result::Result<T, WeylError>;

/// Modulus of the Clifford correspondence: `d` for odd, `2d` for even `d`.
pub fn clifford_modulus(d: usize) -> u64 {
    if d % 2 == 0 {
        2 * d as u64
    } else {
        d as u64
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩`
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn normalize(v: &[C64]) -> Vec<C64> {
    let n = norm(v);
    v.iter().map(|z| z / n).collect()
}

pub(crate) fn check_unit(v: &[C64], tol: f64) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > tol || !n.is_finite() {
        return Err(WeylError::NotNormalized(n));
    }
    Ok(())
}

/// Dense `d×d` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl UnitaryMatrix {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        assert_eq!(n, other.dim);
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            let out = &mut data[r * n..(r + 1) * n];
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        assert_eq!(v.len(), n);
        (0..n)
            .map(|r| {
                self.data[r * n..(r + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Max-norm of `self - other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `min_θ ‖self − e^{iθ} other‖_max`, with θ fixed by the overlap
    /// `tr(other† self)`.
    pub fn phase_stripped_diff(&self, other: &Self) -> f64 {
        let overlap: C64 = other
            .data
            .iter()
            .zip(&self.data)
            .map(|(b, a)| b.conj() * a)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.max_diff(&other.scale(phase))
    }

    /// `Some(λ)` if the matrix is `λ·I` within `tol`.
    pub fn scalar_multiple_of_identity(&self, tol: f64) -> Option<C64> {
        let lambda = self.get(0, 0);
        let dev = self.max_diff(&Self::identity(self.dim).scale(lambda));
        (dev <= tol).then_some(lambda)
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint().matmul(self).max_diff(&Self::identity(self.dim))
    }
}

/// Operator tables for one dimension.
#[derive(Clone, Debug)]
pub struct WeylHeisenberg {
    d: usize,
    // roots[j] = e^{iπ j/d}, j in 0..2d
    roots: Vec<C64>,
}

impl WeylHeisenberg {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(WeylError::InvalidDimension(d));
        }
        let roots = (0..2 * d)
            .map(|j| C64::from_polar(1.0, std::f64::consts::PI * j as f64 / d as f64))
            .collect();
        Ok(Self { d, roots })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `e^{iπ j/d}` for any integer `j`.
    pub fn root(&self, j: i128) -> C64 {
        self.roots[j.rem_euclid(2 * self.d as i128) as usize]
    }

    /// `ω^k`
    pub fn omega_pow(&self, k: i128) -> C64 {
        self.root(2 * k)
    }

    /// `τ^n`
    pub fn tau_pow(&self, n: i128) -> C64 {
        self.root(n * (self.d as i128 + 1))
    }

    /// `X̂ |i⟩ = |i+1⟩`, `Ẑ |j⟩ = ω^j |j⟩`.
    pub fn shift_and_clock(&self) -> (UnitaryMatrix, UnitaryMatrix) {
        let d = self.d;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let x = UnitaryMatrix::from_fn(d, |r, c| if r == (c + 1) % d { one } else { zero });
        let z = UnitaryMatrix::from_fn(d, |r, c| {
            if r == c {
                self.omega_pow(r as i128)
            } else {
                zero
            }
        });
        (x, z)
    }

    /// `D̂_{(a,b)} v` without materialising the operator:
    /// `(D v)_i = τ^{ab} ω^{b(i−a)} v_{i−a}`.
    pub fn displace(&self, a: i64, b: i64, v: &[C64]) -> Vec<C64> {
        let d = self.d as i64;
        let (a, b) = (a.rem_euclid(d), b.rem_euclid(d));
        let pre = self.tau_pow((a * b) as i128);
        (0..d)
            .map(|i| {
                let src = (i - a).rem_euclid(d);
                pre * self.omega_pow((b * src) as i128) * v[src as usize]
            })
            .collect()
    }

    /// `⟨u| D̂_{(a,b)} |v⟩`
    pub fn matrix_element(&self, u: &[C64], a: i64, b: i64, v: &[C64]) -> C64 {
        inner(u, &self.displace(a, b, v))
    }

    /// `D̂_{(a,b)} = τ^{ab} X̂^a Ẑ^b`
    pub fn displacement(&self, a: i64, b: i64) -> UnitaryMatrix {
        let d = self.d as i64;
        let (a, b) = (a.rem_euclid(d), b.rem_euclid(d));
        let pre = self.tau_pow((a * b) as i128);
        UnitaryMatrix::from_fn(self.d, |r, c| {
            if r as i64 == (c as i64 + a) % d {
                pre * self.omega_pow((b * c as i64) as i128)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Bring `f` onto the Clifford modulus (`d` odd, `2d` even) with the
    /// requested determinant, lifting from `Z_d` when `d` is even.
    pub fn to_clifford_modulus(&self, f: &ModMatrix, det: i64) -> Result<ModMatrix> {
        let d = self.d;
        let expected = clifford_modulus(d);
        let lifted = if f.modulus() == expected {
            *f
        } else if d % 2 == 0 && f.modulus() == d as u64 {
            f.lift_double(det).ok_or(WeylError::WrongDeterminant {
                det: f.det(),
                modulus: f.modulus(),
                expected: if det == 1 { "+1" } else { "-1" },
            })?
        } else {
            return Err(WeylError::WrongModulus {
                modulus: f.modulus(),
                d,
                expected,
            });
        };
        if lifted.det() != modmat::reduce(det as i128, expected) {
            return Err(WeylError::WrongDeterminant {
                det: lifted.det(),
                modulus: expected,
                expected: if det == 1 { "+1" } else { "-1" },
            });
        }
        Ok(lifted)
    }

    /// Unitary `U_F` with `U_F D̂_p U_F† ∝ D̂_{Fp}`, up to a global phase.
    ///
    /// For `F = [[α,β],[γ,δ]]` with `β` invertible mod `d̄` this is
    /// `(1/√d) Σ τ^{β⁻¹(α s² − 2rs + δ r²)} |r⟩⟨s|`. Otherwise `F` is split as
    /// `[[0,−1],[1,x]] · B` where both factors have invertible upper-right
    /// entry.
    pub fn clifford_unitary(&self, f: &ModMatrix) -> Result<UnitaryMatrix> {
        let f = self.to_clifford_modulus(f, 1)?;
        let m = f.modulus();
        let [_, beta, _, delta] = f.entries();
        if modmat::inv_mod(beta, m).is_some() {
            return Ok(self.clifford_direct(&f));
        }
        let x = (0..m)
            .find(|&x| modmat::inv_mod((x * beta + delta) % m, m).is_some())
            .expect("gcd(β, δ, m) = 1 for a unimodular matrix");
        let left = ModMatrix::new([0, -1, 1, x as i64], m).expect("m >= 2");
        let right = left
            .inverse()
            .and_then(|inv| inv.mul(&f))
            .expect("left factor is unimodular");
        Ok(self.clifford_direct(&left).matmul(&self.clifford_direct(&right)))
    }

    fn clifford_direct(&self, f: &ModMatrix) -> UnitaryMatrix {
        let m = f.modulus() as i128;
        let [alpha, beta, _, delta] = f.entries().map(|e| e as i128);
        let beta_inv = modmat::inv_mod(beta as u64, m as u64).expect("β invertible") as i128;
        let scale = 1.0 / (self.d as f64).sqrt();
        UnitaryMatrix::from_fn(self.d, |r, s| {
            let (r, s) = (r as i128, s as i128);
            let q = (alpha * s * s - 2 * r * s + delta * r * r).rem_euclid(m);
            self.tau_pow((beta_inv * q).rem_euclid(m)) * scale
        })
    }

    /// The anti-unitary `Ĵ U_{F'}` for `F = J F'` of determinant `−1`.
    pub fn antiunitary(&self, f: &ModMatrix) -> Result<AntiUnitary> {
        let f = self.to_clifford_modulus(f, -1)?;
        let unitary = self.clifford_unitary(&f.conj_j())?;
        Ok(AntiUnitary { unitary })
    }

    /// `Ĵ U_{F'} v`
    pub fn antiunitary_apply(&self, f: &ModMatrix, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.d {
            return Err(WeylError::LengthMismatch { got: v.len(), d: self.d });
        }
        Ok(self.antiunitary(f)?.apply(v))
    }

    /// `ψ_{(a,b)} = D̂_{(a,b)} ψ` for all `(a,b)`, row-major.
    pub fn weyl_orbit(&self, fiducial: &[C64]) -> Result<Vec<Vec<C64>>> {
        if fiducial.len() != self.d {
            return Err(WeylError::LengthMismatch { got: fiducial.len(), d: self.d });
        }
        check_unit(fiducial, 1e-10)?;
        let d = self.d as i64;
        Ok((0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .map(|(a, b)| self.displace(a, b, fiducial))
            .collect())
    }
}

/// `v ↦ conj(U v)`.
#[derive(Clone, Debug)]
pub struct AntiUnitary {
    pub unitary: UnitaryMatrix,
}

impl AntiUnitary {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.unitary.apply(v).into_iter().map(|z| z.conj()).collect()
    }

    /// `(ĴU)² = Ū U`, a unitary.
    pub fn square(&self) -> UnitaryMatrix {
        self.unitary.conj().matmul(&self.unitary)
    }
}

pub fn shift_and_clock(d: usize) -> Result<(UnitaryMatrix, UnitaryMatrix)> {
    Ok(WeylHeisenberg::new(d)?.shift_and_clock())
}

pub fn displacement(a: i64, b: i64, d: usize) -> Result<UnitaryMatrix> {
    Ok(WeylHeisenberg::new(d)?.displacement(a, b))
}

pub fn clifford_unitary(f: &ModMatrix, d: usize) -> Result<UnitaryMatrix> {
    WeylHeisenberg::new(d)?.clifford_unitary(f)
}

pub fn antiunitary_apply(f: &ModMatrix, v: &[C64]) -> Result<Vec<C64>> {
    WeylHeisenberg::new(v.len())?.antiunitary_apply(f, v)
}

pub fn weyl_orbit(fiducial: &[C64]) -> Result<Vec<Vec<C64>>> {
    WeylHeisenberg::new(fiducial.len())?.weyl_orbit(fiducial)
}

/// Largest phase-stripped covariance error `‖U D̂_p U† − e^{iθ} D̂_{Fp}‖` over
/// the given displacement indices.
pub fn covariance_error(
    wh: &WeylHeisenberg,
    u: &UnitaryMatrix,
    f: &ModMatrix,
    points: &[(u64, u64)],
) -> f64 {
    let ud = u.adjoint();
    points
        .iter()
        .map(|&p| {
            let lhs = u
                .matmul(&wh.displacement(p.0 as i64, p.1 as i64))
                .matmul(&ud);
            let (a, b) = f.apply(p);
            lhs.phase_stripped_diff(&wh.displacement(a as i64, b as i64))
        })
        .fold(0.0, f64::max)
}
