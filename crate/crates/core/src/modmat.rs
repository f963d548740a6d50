//! 2×2 integer matrices modulo `m`.
//!
//! Symmetries of Weyl-Heisenberg covariant SICs are described (up to phases)
//! by such matrices: determinant `+1` for unitaries, `-1` for anti-unitaries.
//! Number-theoretic analyses run over `Z_d`; Clifford data for even `d` runs
//! over `Z_2d`. Every operation takes its modulus from the operands, so the
//! two conventions never need a flag.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibonacci;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModMatError {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("matrix is not invertible mod {modulus} (det = {det})")]
    NotInvertible { det: u64, modulus: u64 },
    #[error("order exceeds cap {0}")]
    OrderExceedsCap(u64),
}

pub type Result<T> = std::result::Result<T, ModMatError>;

/// `[[a, b], [c, d]]` with entries reduced into `[0, m)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModMatrix {
    entries: [u64; 4],
    modulus: u64,
}

impl fmt::Debug for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]] mod {}", self.modulus)
    }
}

pub(crate) fn reduce(value: i128, m: u64) -> u64 {
    value.rem_euclid(m as i128) as u64
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    (g.gcd == 1).then(|| reduce(g.x, m))
}

/// Prime factorisation by trial division.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

impl ModMatrix {
    pub fn new(entries: [i64; 4], modulus: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(ModMatError::InvalidModulus(modulus));
        }
        Ok(Self {
            entries: entries.map(|e| reduce(e as i128, modulus)),
            modulus,
        })
    }

    fn from_reduced(entries: [u64; 4], modulus: u64) -> Self {
        debug_assert!(entries.iter().all(|&e| e < modulus));
        Self { entries, modulus }
    }

    pub fn identity(modulus: u64) -> Self {
        Self::scalar(1, modulus)
    }

    pub fn scalar(s: u64, modulus: u64) -> Self {
        let s = s % modulus;
        Self::from_reduced([s, 0, 0, s], modulus)
    }

    pub fn entries(&self) -> [u64; 4] {
        self.entries
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Entries as signed values in `(-m/2, m/2]`.
    pub fn signed_entries(&self) -> [i64; 4] {
        let m = self.modulus;
        self.entries
            .map(|e| if 2 * e > m { e as i64 - m as i64 } else { e as i64 })
    }

    pub fn det(&self) -> u64 {
        let [a, b, c, d] = self.entries;
        let m = self.modulus;
        reduce(
            mulmod(a, d, m) as i128 - mulmod(b, c, m) as i128,
            m,
        )
    }

    pub fn trace(&self) -> u64 {
        (self.entries[0] + self.entries[3]) % self.modulus
    }

    pub fn is_invertible(&self) -> bool {
        self.det().gcd(&self.modulus) == 1
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.modulus != other.modulus {
            return Err(ModMatError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let m = self.modulus;
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = other.entries;
        let dot = |x: u64, y: u64, z: u64, w: u64| {
            ((x as u128 * y as u128 + z as u128 * w as u128) % m as u128) as u64
        };
        Self::from_reduced(
            [dot(a, e, b, g), dot(a, f, b, h), dot(c, e, d, g), dot(c, f, d, h)],
            m,
        )
    }

    pub fn pow(&self, mut n: u64) -> Self {
        let mut acc = Self::identity(self.modulus);
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.mul_unchecked(&base);
            n >>= 1;
        }
        acc
    }

    pub fn inverse(&self) -> Result<Self> {
        let m = self.modulus;
        let det = self.det();
        let inv = inv_mod(det, m).ok_or(ModMatError::NotInvertible { det, modulus: m })?;
        let [a, b, c, d] = self.entries;
        Ok(Self::from_reduced(
            [
                mulmod(d, inv, m),
                mulmod(m - b, inv, m) % m,
                mulmod(m - c, inv, m) % m,
                mulmod(a, inv, m),
            ],
            m,
        ))
    }

    /// Least `n >= 1` with `X^n = I`, by plain iteration.
    pub fn order(&self, cap: u64) -> Result<u64> {
        if !self.is_invertible() {
            return Err(ModMatError::NotInvertible {
                det: self.det(),
                modulus: self.modulus,
            });
        }
        let id = Self::identity(self.modulus);
        let mut acc = *self;
        for n in 1..=cap {
            if acc == id {
                return Ok(n);
            }
            acc = acc.mul_unchecked(self);
        }
        Err(ModMatError::OrderExceedsCap(cap))
    }

    /// `Some(s)` if the matrix is `s·I`.
    pub fn scalar_value(&self) -> Option<u64> {
        let [a, b, c, d] = self.entries;
        (b == 0 && c == 0 && a == d).then_some(a)
    }

    /// Reduce to a modulus dividing the current one.
    pub fn reduce_to(&self, modulus: u64) -> Result<Self> {
        if modulus < 2 || self.modulus % modulus != 0 {
            return Err(ModMatError::ModulusMismatch(self.modulus, modulus));
        }
        Ok(Self::from_reduced(self.entries.map(|e| e % modulus), modulus))
    }

    /// Lift a matrix over `Z_d` to `Z_2d` with the given determinant.
    ///
    /// Starts from the least non-negative representatives and tries the 16
    /// ways of adding `d` to a subset of entries; the first hit wins.
    pub fn lift_double(&self, target_det: i64) -> Option<Self> {
        let d = self.modulus;
        let m = 2 * d;
        let target = reduce(target_det as i128, m);
        (0u32..16).find_map(|mask| {
            let mut e = self.entries;
            for (i, entry) in e.iter_mut().enumerate() {
                if mask & (1 << i) != 0 {
                    *entry += d;
                }
            }
            let lifted = Self::from_reduced(e, m);
            (lifted.det() == target).then_some(lifted)
        })
    }

    /// `J · X` with `J = diag(1, -1)`.
    pub fn conj_j(&self) -> Self {
        let [a, b, c, d] = self.entries;
        let m = self.modulus;
        Self::from_reduced([a, b, (m - c) % m, (m - d) % m], m)
    }

    /// Action on a displacement index `(a, b)` viewed as a column vector.
    pub fn apply(&self, v: (u64, u64)) -> (u64, u64) {
        let m = self.modulus;
        let [a, b, c, d] = self.entries;
        let (x, y) = (v.0 % m, v.1 % m);
        (
            ((a as u128 * x as u128 + b as u128 * y as u128) % m as u128) as u64,
            ((c as u128 * x as u128 + d as u128 * y as u128) % m as u128) as u64,
        )
    }

    /// Parse `"a,b,c,d"` (signed integers) over the given modulus.
    pub fn parse(text: &str, modulus: u64) -> std::result::Result<Self, String> {
        let parts: Vec<i64> = text
            .split(',')
            .map(|s| s.trim().parse::<i64>().map_err(|e| format!("{s:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let entries: [i64; 4] = parts
            .try_into()
            .map_err(|p: Vec<i64>| format!("expected 4 entries, got {}", p.len()))?;
        Self::new(entries, modulus).map_err(|e| e.to_string())
    }
}

/// Fallible product with modulus checking.
pub fn mat_mul(x: &ModMatrix, y: &ModMatrix) -> Result<ModMatrix> {
    x.mul(y)
}

pub fn mat_pow(x: &ModMatrix, n: u64) -> ModMatrix {
    x.pow(n)
}

pub fn mat_order(x: &ModMatrix, cap: u64) -> Result<u64> {
    x.order(cap)
}

/// Zauner's order-three matrix `[[0,-1],[1,-1]]`.
pub fn zauner(modulus: u64) -> ModMatrix {
    ModMatrix::new([0, -1, 1, -1], modulus).expect("modulus >= 2")
}

/// The Fibonacci matrix `[[0,1],[1,1]]`.
pub fn fibonacci_matrix(modulus: u64) -> ModMatrix {
    ModMatrix::new([0, 1, 1, 1], modulus).expect("modulus >= 2")
}

/// `J = diag(1,-1)`, complex conjugation in the standard basis.
pub fn conjugation(modulus: u64) -> ModMatrix {
    ModMatrix::new([1, 0, 0, -1], modulus).expect("modulus >= 2")
}

/// `F_f' = J F_f = [[0,1],[-1,-1]]`, the unitary part of the Fibonacci symmetry.
pub fn fibonacci_unitary_part(modulus: u64) -> ModMatrix {
    ModMatrix::new([0, 1, -1, -1], modulus).expect("modulus >= 2")
}

/// `[[1,3],[3l,-2]]` for `d = 9l + 3`, the order-three class not conjugate
/// to Zauner's matrix.
pub fn appleby_fa(d: u64) -> Option<ModMatrix> {
    (d % 9 == 3 && d >= 12).then(|| {
        let l = (d / 9) as i64;
        ModMatrix::new([1, 3, 3 * l, -2], d).expect("d >= 12")
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonicalMatrices {
    pub fz: ModMatrix,
    pub ff: ModMatrix,
    pub fa: Option<ModMatrix>,
}

pub fn canonical_matrices(d: u64) -> CanonicalMatrices {
    CanonicalMatrices {
        fz: zauner(d),
        ff: fibonacci_matrix(d),
        fa: appleby_fa(d),
    }
}

// Solutions of a homogeneous linear system mod p^e, in the form
// x = C y with y_i ranging over multiples of step_i (count_i values).
struct PrimePowerSolutions {
    q: u64,
    basis: [[u64; 4]; 4], // columns of C
    steps: [u64; 4],
    counts: [u64; 4],
}

impl PrimePowerSolutions {
    fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).product()
    }

    fn nth(&self, mut idx: u128) -> [u64; 4] {
        let q = self.q;
        let mut x = [0u64; 4];
        for i in 0..4 {
            let t = (idx % self.counts[i] as u128) as u64;
            idx /= self.counts[i] as u128;
            let y = mulmod(t, self.steps[i], q);
            for (r, xr) in x.iter_mut().enumerate() {
                *xr = (*xr + mulmod(self.basis[i][r], y, q)) % q;
            }
        }
        x
    }
}

fn valuation(mut v: u64, p: u64, e: u32) -> u32 {
    if v == 0 {
        return e;
    }
    let mut k = 0;
    while v % p == 0 {
        v /= p;
        k += 1;
    }
    k
}

// Diagonalise `rows` over Z_{p^e} with row and column operations.
fn solve_prime_power(rows: &[[i128; 4]; 4], p: u64, e: u32) -> PrimePowerSolutions {
    let q = p.pow(e);
    let mut a: [[u64; 4]; 4] = rows.map(|r| r.map(|v| reduce(v, q)));
    // basis[j] is column j of the column transform
    let mut basis = [[0u64; 4]; 4];
    for (j, col) in basis.iter_mut().enumerate() {
        col[j] = 1;
    }
    let mut pivots: Vec<u32> = Vec::new();

    for r in 0..4 {
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, &v) in row.iter().enumerate().skip(r) {
                let val = valuation(v, p, e);
                if val < e && best.is_none_or(|(bv, _, _)| val < bv) {
                    best = Some((val, i, j));
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        a.swap(r, pi);
        for row in a.iter_mut() {
            row.swap(r, pj);
        }
        basis.swap(r, pj);

        let pv = p.pow(v);
        let unit = a[r][r] / pv;
        let unit_inv = inv_mod(unit % q, q).expect("unit part is invertible");
        for x in a[r].iter_mut() {
            *x = mulmod(*x, unit_inv, q);
        }
        for i in 0..4 {
            if i != r && a[i][r] != 0 {
                let t = a[i][r] / pv;
                for j in 0..4 {
                    a[i][j] = reduce(a[i][j] as i128 - mulmod(t, a[r][j], q) as i128, q);
                }
            }
        }
        for j in 0..4 {
            if j != r && a[r][j] != 0 {
                let s = a[r][j] / pv;
                for row in a.iter_mut() {
                    row[j] = reduce(row[j] as i128 - mulmod(s, row[r], q) as i128, q);
                }
                let pivot_col = basis[r];
                for (k, x) in basis[j].iter_mut().enumerate() {
                    *x = reduce(*x as i128 - mulmod(s, pivot_col[k], q) as i128, q);
                }
            }
        }
        pivots.push(v);
    }

    let mut steps = [1u64; 4];
    let mut counts = [q; 4];
    for (i, &v) in pivots.iter().enumerate() {
        steps[i] = p.pow(e - v);
        counts[i] = p.pow(v);
    }
    PrimePowerSolutions {
        q,
        basis,
        steps,
        counts,
    }
}

fn crt_combine(residues: &[(u64, u64)], m: u64) -> u64 {
    // residues: (value mod q, q), pairwise coprime, product m
    residues.iter().fold(0u64, |acc, &(r, q)| {
        let n = m / q;
        let inv = inv_mod(n % q, q).expect("coprime components");
        let term = mulmod(mulmod(r, inv, q), n, m);
        (acc + term) % m
    })
}

/// Find `G` with `G·F1·G⁻¹ = F2` and `gcd(det G, m) = 1`.
///
/// Solves `G·F1 = F2·G` over each prime-power factor of `m`, then scans the
/// CRT product of the solution sets in a fixed order; the first invertible
/// member is returned.
pub fn solve_conjugator(f1: &ModMatrix, f2: &ModMatrix) -> Result<Option<ModMatrix>> {
    if f1.modulus != f2.modulus {
        return Err(ModMatError::ModulusMismatch(f1.modulus, f2.modulus));
    }
    let m = f1.modulus;
    let [a1, b1, c1, d1] = f1.entries.map(|v| v as i128);
    let [a2, b2, c2, d2] = f2.entries.map(|v| v as i128);
    // unknowns (x, y, z, w) for G = [[x, y], [z, w]]
    let system = [
        [a1 - a2, c1, -b2, 0],
        [b1, d1 - a2, 0, -b2],
        [-c2, 0, a1 - d2, c1],
        [0, -c2, b1, d1 - d2],
    ];
    let components: Vec<PrimePowerSolutions> = factorize(m)
        .into_iter()
        .map(|(p, e)| solve_prime_power(&system, p, e))
        .collect();
    let totals: Vec<u128> = components.iter().map(|c| c.total()).collect();
    let total: u128 = totals.iter().product();

    for mut idx in 0..total {
        let parts: Vec<[u64; 4]> = components
            .iter()
            .zip(&totals)
            .map(|(c, &t)| {
                let local = idx % t;
                idx /= t;
                c.nth(local)
            })
            .collect();
        let entries: [u64; 4] = std::array::from_fn(|i| {
            let residues: Vec<(u64, u64)> = components
                .iter()
                .zip(&parts)
                .map(|(c, x)| (x[i], c.q))
                .collect();
            crt_combine(&residues, m)
        });
        let g = ModMatrix::from_reduced(entries, m);
        if g.is_invertible() {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

/// `G·X·G⁻¹`.
pub fn conjugate(g: &ModMatrix, x: &ModMatrix) -> Result<ModMatrix> {
    g.mul(x)?.mul(&g.inverse()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order3Class {
    Zauner,
    ApplebyFa,
    Neither,
    NotOrder3,
}

impl fmt::Display for Order3Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zauner => "zauner",
            Self::ApplebyFa => "appleby_Fa",
            Self::Neither => "neither",
            Self::NotOrder3 => "not_order3",
        })
    }
}

/// Classification plus a conjugator `G` with `G·X·G⁻¹` equal to the
/// representative of the class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Order3Classification {
    pub class: Order3Class,
    pub witness: Option<ModMatrix>,
}

pub fn classify_order3(x: &ModMatrix, d: u64) -> Result<Order3Class> {
    Ok(classify_order3_against(x, &zauner(d), appleby_fa(d).as_ref())?.class)
}

/// As [`classify_order3`] but against caller-supplied class representatives.
pub fn classify_order3_against(
    x: &ModMatrix,
    fz: &ModMatrix,
    fa: Option<&ModMatrix>,
) -> Result<Order3Classification> {
    let m = x.modulus;
    let not_order3 = Order3Classification {
        class: Order3Class::NotOrder3,
        witness: None,
    };
    if x.trace() != m - 1 || !x.is_invertible() || x.order(3) != Ok(3) {
        return Ok(not_order3);
    }
    if let Some(g) = solve_conjugator(x, fz)? {
        return Ok(Order3Classification {
            class: Order3Class::Zauner,
            witness: Some(g),
        });
    }
    if let Some(fa) = fa {
        if let Some(g) = solve_conjugator(x, fa)? {
            return Ok(Order3Classification {
                class: Order3Class::ApplebyFa,
                witness: Some(g),
            });
        }
    }
    Ok(Order3Classification {
        class: Order3Class::Neither,
        witness: None,
    })
}

/// Properties of the Fibonacci matrix over `Z_{d_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryAnalysis {
    pub k: u64,
    pub d: u64,
    pub order: u64,
    pub det: u64,
    pub trace_at_2k: u64,
    /// Scalar value of `F_f^{3k}` when it is scalar (always for even `k`).
    pub scalar_at_3k: Option<u64>,
    pub order3_class: Order3Class,
    #[serde(skip)]
    pub order3_witness: Option<ModMatrix>,
}

pub fn analyze_fibonacci_symmetry(k: u64) -> Result<SymmetryAnalysis> {
    assert!(k >= 1);
    let d = fibonacci::dimension_u64(k);
    let ff = fibonacci_matrix(d);
    let order = ff.order(12 * k)?;
    let p2k = ff.pow(2 * k);
    let classification = classify_order3_against(&p2k, &zauner(d), appleby_fa(d).as_ref())?;
    Ok(SymmetryAnalysis {
        k,
        d,
        order,
        det: ff.det(),
        trace_at_2k: p2k.trace(),
        scalar_at_3k: ff.pow(3 * k).scalar_value(),
        order3_class: classification.class,
        order3_witness: classification.witness,
    })
}

/// A quoted conjugation `G·F^p·G⁻¹ = F_f` together with the intermediate
/// values quoted alongside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugationIdentity {
    pub label: &'static str,
    pub d: u64,
    pub symmetry: ModMatrix,
    pub power: u64,
    pub conjugator: ModMatrix,
    pub quoted_power: Option<ModMatrix>,
    pub quoted_inverse: Option<ModMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugationCheck {
    pub label: &'static str,
    pub result: ModMatrix,
    pub reproduces_fibonacci: bool,
    pub power_matches: bool,
    pub inverse_matches: bool,
}

impl ConjugationCheck {
    pub fn passed(&self) -> bool {
        self.reproduces_fibonacci && self.power_matches && self.inverse_matches
    }
}

impl ConjugationIdentity {
    pub fn evaluate(&self) -> Result<ConjugationCheck> {
        let fp = self.symmetry.pow(self.power);
        let ginv = self.conjugator.inverse()?;
        let result = self.conjugator.mul(&fp)?.mul(&ginv)?;
        Ok(ConjugationCheck {
            label: self.label,
            result,
            reproduces_fibonacci: result == fibonacci_matrix(self.symmetry.modulus),
            power_matches: self.quoted_power.is_none_or(|q| q == fp),
            inverse_matches: self.quoted_inverse.is_none_or(|q| q == ginv),
        })
    }
}

fn mm(e: [i64; 4], m: u64) -> ModMatrix {
    ModMatrix::new(e, m).expect("static modulus")
}

/// The published conjugations of known solutions' symmetries onto `F_f`.
/// Even dimensions are over `Z_2d`.
pub fn reference_conjugations() -> Vec<ConjugationIdentity> {
    vec![
        ConjugationIdentity {
            label: "4a: G (Fc Fz)^7 G^-1",
            d: 4,
            symmetry: mm([1, 2, 6, 3], 8).mul_unchecked(&mm([0, 3, 5, 3], 8)),
            power: 7,
            conjugator: mm([1, 3, 3, 2], 8),
            quoted_power: Some(mm([2, 5, 3, 7], 8)),
            quoted_inverse: Some(mm([2, 5, 5, 1], 8)),
        },
        ConjugationIdentity {
            label: "8b: G F^11 G^-1",
            d: 8,
            symmetry: mm([6, 11, 5, 1], 16),
            power: 11,
            conjugator: mm([5, 5, 4, 1], 16),
            quoted_power: Some(mm([7, 3, 13, 10], 16)),
            quoted_inverse: Some(mm([1, 11, 12, 5], 16)),
        },
        ConjugationIdentity {
            label: "8b: H F' H^-1",
            d: 8,
            symmetry: mm([1, 5, 13, 0], 16),
            power: 1,
            conjugator: mm([1, 4, 5, 5], 16),
            quoted_power: None,
            quoted_inverse: None,
        },
        ConjugationIdentity {
            label: "19e: G F^17 G^-1",
            d: 19,
            symmetry: mm([3, 12, 7, 15], 19),
            power: 17,
            conjugator: mm([11, 10, 0, 7], 19),
            quoted_power: Some(mm([4, 12, 7, 16], 19)),
            quoted_inverse: Some(mm([7, 9, 0, 11], 19)),
        },
        ConjugationIdentity {
            label: "19e: H F' H^-1",
            d: 19,
            symmetry: mm([15, 0, 0, 5], 19),
            power: 1,
            conjugator: mm([8, 5, 6, 6], 19),
            quoted_power: None,
            quoted_inverse: None,
        },
        ConjugationIdentity {
            label: "48g: G F^41 G^-1",
            d: 48,
            symmetry: mm([4, 37, 25, 63], 96),
            power: 41,
            conjugator: mm([10, 47, 21, 22], 96),
            quoted_power: Some(mm([61, 25, 61, 36], 96)),
            quoted_inverse: Some(mm([22, 49, 75, 10], 96)),
        },
        ConjugationIdentity {
            label: "124a: G F G^-1",
            d: 124,
            symmetry: mm([58, 133, 115, 191], 248),
            power: 1,
            conjugator: mm([100, 15, 85, 45], 248),
            quoted_power: None,
            quoted_inverse: Some(mm([45, 233, 163, 100], 248)),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(e: [i64; 4], modulus: u64) -> ModMatrix {
        ModMatrix::new(e, modulus).unwrap()
    }

    #[test]
    fn construction_reduces_entries() {
        let x = m([-1, 9, 20, -21], 19);
        assert_eq!(x.entries(), [18, 9, 1, 17]);
        assert!(ModMatrix::new([1, 0, 0, 1], 1).is_err());
    }

    #[test]
    fn products() {
        let ff = fibonacci_matrix(4);
        assert_eq!(ff.mul(&ff).unwrap(), m([1, 1, 1, 2], 4));
        let x = m([3, 1, 4, 1], 7);
        assert_eq!(ModMatrix::identity(7).mul(&x).unwrap(), x);
        // A = F_z · J
        let d = 11;
        assert_eq!(zauner(d).mul(&conjugation(d)).unwrap(), fibonacci_matrix(d));
        assert_eq!(
            ff.mul(&ModMatrix::identity(8)),
            Err(ModMatError::ModulusMismatch(4, 8))
        );
    }

    #[test]
    fn fibonacci_powers() {
        let a = fibonacci_matrix(1_000_000);
        assert_eq!(a.pow(4), m([2, 3, 3, 5], 1_000_000));
        assert_eq!(a.pow(0), ModMatrix::identity(1_000_000));
        for n in 1..25u64 {
            let f = |i: u64| fibonacci::fibonacci(i).to_string().parse::<i64>().unwrap();
            assert_eq!(a.pow(n), m([f(n - 1), f(n), f(n), f(n + 1)], 1_000_000));
        }
        let sq = fibonacci_matrix(4).pow(2);
        assert_eq!(sq, m([1, 1, 1, 2], 4));
        assert_eq!(sq.trace(), 3);
    }

    #[test]
    fn orders() {
        assert_eq!(ModMatrix::identity(9).order(10), Ok(1));
        assert_eq!(fibonacci_matrix(8).order(24), Ok(12));
        assert_eq!(fibonacci_matrix(124).order(60), Ok(30));
        assert_eq!(fibonacci_matrix(124).order(29), Err(ModMatError::OrderExceedsCap(29)));
        assert!(matches!(
            m([2, 0, 0, 1], 4).order(10),
            Err(ModMatError::NotInvertible { .. })
        ));
    }

    #[test]
    fn canonical_set() {
        let c = canonical_matrices(19);
        assert_eq!(c.fz, m([0, 18, 1, 18], 19));
        assert_eq!(c.ff, m([0, 1, 1, 1], 19));
        assert!(c.fa.is_none());
        assert_eq!(canonical_matrices(48).fa, Some(m([1, 3, 15, 46], 48)));
        assert!(canonical_matrices(4).fa.is_none());
        assert!(canonical_matrices(3).fa.is_none());
    }

    #[test]
    fn inverse_and_lift() {
        let g = m([1, 3, 3, 2], 8);
        assert_eq!(g.inverse().unwrap(), m([2, 5, 5, 1], 8));
        assert!(m([2, 0, 0, 2], 8).inverse().is_err());

        let ff4 = fibonacci_matrix(4);
        let lifted = ff4.lift_double(-1).unwrap();
        assert_eq!(lifted.modulus(), 8);
        assert_eq!(lifted.det(), 7);
        assert_eq!(lifted.reduce_to(4).unwrap(), ff4);
        // diag(1, 3) mod 4 has det 3 ≡ -1; a det-1 lift needs an adjustment
        let x = m([1, 0, 0, 3], 4);
        let up = x.lift_double(-1).unwrap();
        assert_eq!(up.det(), 7);
        assert_eq!(up.reduce_to(4).unwrap(), x);
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(2208), vec![(2, 5), (3, 1), (23, 1)]);
        assert_eq!(factorize(844), vec![(2, 2), (211, 1)]);
        assert_eq!(factorize(19), vec![(19, 1)]);
    }

    #[test]
    fn conjugator_examples() {
        let f1 = m([2, 5, 3, 7], 8);
        let ff = fibonacci_matrix(8);
        let g = solve_conjugator(&f1, &ff).unwrap().expect("conjugate");
        assert_eq!(conjugate(&g, &f1).unwrap(), ff);
        // the quoted witness is also a solution
        assert_eq!(conjugate(&m([1, 3, 3, 2], 8), &f1).unwrap(), ff);

        let id = ModMatrix::identity(12);
        let g = solve_conjugator(&id, &id).unwrap().unwrap();
        assert!(g.is_invertible());

        let f1 = m([15, 0, 0, 5], 19);
        let ff = fibonacci_matrix(19);
        let h = solve_conjugator(&f1, &ff).unwrap().unwrap();
        assert_eq!(conjugate(&h, &f1).unwrap(), ff);
        assert_eq!(conjugate(&m([8, 5, 6, 6], 19), &f1).unwrap(), ff);
    }

    #[test]
    fn non_conjugate_pairs_have_no_witness() {
        // different traces
        assert_eq!(
            solve_conjugator(&zauner(7), &fibonacci_matrix(7)).unwrap(),
            None
        );
        // scalar vs non-scalar with equal trace and det
        let s = ModMatrix::scalar(1, 9);
        let n = m([1, 1, 0, 1], 9);
        assert_eq!(solve_conjugator(&s, &n).unwrap(), None);
    }

    #[test]
    fn classification_examples() {
        let p = fibonacci_matrix(4).pow(2);
        assert_eq!(classify_order3(&p, 4), Ok(Order3Class::Zauner));
        let p = fibonacci_matrix(48).pow(8);
        assert_eq!(classify_order3(&p, 48), Ok(Order3Class::ApplebyFa));
        assert_eq!(
            classify_order3(&ModMatrix::identity(48), 48),
            Ok(Order3Class::NotOrder3)
        );
        // F_a itself is not conjugate to F_z
        assert_eq!(
            classify_order3(&appleby_fa(48).unwrap(), 48),
            Ok(Order3Class::ApplebyFa)
        );
    }

    #[test]
    fn fibonacci_analysis() {
        let a = analyze_fibonacci_symmetry(1).unwrap();
        assert_eq!((a.d, a.order, a.trace_at_2k, a.det), (4, 6, 3, 3));
        let a = analyze_fibonacci_symmetry(2).unwrap();
        assert_eq!(a.scalar_at_3k, Some(5));
        assert_eq!(fibonacci_matrix(8).pow(6), m([5, 0, 0, 5], 8));
        let a = analyze_fibonacci_symmetry(7).unwrap();
        assert_eq!((a.d, a.order), (844, 42));
    }

    #[test]
    fn reference_conjugations_reproduce_fibonacci() {
        for id in reference_conjugations() {
            let c = id.evaluate().unwrap();
            assert!(c.passed(), "{c:?}");
        }
    }

    fn arb_matrix(modulus: u64) -> impl Strategy<Value = ModMatrix> {
        prop::array::uniform4(0..modulus as i64).prop_map(move |e| ModMatrix::new(e, modulus).unwrap())
    }

    proptest! {
        #[test]
        fn pow_is_additive(x in arb_matrix(97), a in 0u64..=20, b in 0u64..=20) {
            prop_assert_eq!(x.pow(a + b), x.pow(a).mul(&x.pow(b)).unwrap());
        }

        #[test]
        fn det_is_multiplicative(
            modulus in 2u64..500,
            e1 in prop::array::uniform4(any::<i32>()),
            e2 in prop::array::uniform4(any::<i32>()),
        ) {
            let x = ModMatrix::new(e1.map(i64::from), modulus).unwrap();
            let y = ModMatrix::new(e2.map(i64::from), modulus).unwrap();
            let lhs = x.mul(&y).unwrap().det();
            prop_assert_eq!(lhs, mulmod(x.det(), y.det(), modulus));
        }

        #[test]
        fn conjugator_is_verified(
            g in arb_matrix(36),
            x in arb_matrix(36),
        ) {
            // build a conjugate pair so a solution is guaranteed to exist
            prop_assume!(g.is_invertible());
            let y = conjugate(&g, &x).unwrap();
            let found = solve_conjugator(&x, &y).unwrap().expect("pair is conjugate");
            prop_assert!(found.is_invertible());
            prop_assert_eq!(found.mul(&x).unwrap(), y.mul(&found).unwrap());
        }
    }
}
