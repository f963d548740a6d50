//! Certification of candidate fiducials: Gram condition over the
//! Weyl-Heisenberg orbit, overlap moduli and phases, triple products, and
//! probing for (anti-)unitary Clifford symmetries.

use std::collections::HashSet;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::modmat::{fibonacci_matrix, ModMatrix};
use crate::weyl::{check_unit, clifford_modulus, inner, Result, WeylError, WeylHeisenberg};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Tolerance on `|⟨D̂ψ|Vψ⟩| = 1` when probing a candidate symmetry `V`.
pub const PROBE_TOLERANCE: f64 = 1e-8;

/// Largest group enumerated when closing the accepted candidates.
pub const GROUP_CAP: usize = 1 << 20;

/// Dimensions up to which the full triple-product tensor is scanned.
pub const TRIPLE_SCAN_MAX_D: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapPhase {
    pub a: u64,
    pub b: u64,
    /// Principal argument in `(−π, π]`.
    pub phase: f64,
    pub modulus: f64,
}

/// `⟨ψ|D̂_{(a,b)}ψ⟩` for every `(a,b)`, row-major.
#[derive(Clone, Debug)]
pub struct Overlaps {
    pub d: usize,
    pub values: Vec<C64>,
}

impl Overlaps {
    pub fn get(&self, a: u64, b: u64) -> C64 {
        let d = self.d as u64;
        self.values[((a % d) * d + b % d) as usize]
    }

    /// Phases and moduli of all `(a,b) ≠ (0,0)`.
    pub fn phases(&self) -> Vec<OverlapPhase> {
        let d = self.d as u64;
        (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .skip(1)
            .map(|(a, b)| {
                let z = self.get(a, b);
                OverlapPhase { a, b, phase: z.arg(), modulus: z.norm() }
            })
            .collect()
    }

    /// `Σ_{(a,b)} |⟨ψ|D̂_{(a,b)}ψ⟩|²`, equal to `d` for every unit vector.
    pub fn modulus_square_sum(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn overlaps(wh: &WeylHeisenberg, psi: &[C64]) -> Result<Overlaps> {
    let d = wh.dim();
    if psi.len() != d {
        return Err(WeylError::LengthMismatch { got: psi.len(), d });
    }
    check_unit(psi, 1e-10)?;
    let values = (0..d as i64)
        .into_par_iter()
        .flat_map_iter(|a| (0..d as i64).map(move |b| wh.matrix_element(psi, a, b, psi)))
        .collect();
    Ok(Overlaps { d, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramSummary {
    /// Worst `|tr(Π_iΠ_j) − target|` over the orbit, diagonal included.
    pub max_gram_deviation: f64,
    /// Worst `| |overlap| − 1/√(d+1) |` over `(a,b) ≠ (0,0)`.
    pub overlap_modulus_deviation: f64,
    pub modulus_square_sum: f64,
}

/// `tr(Π_iΠ_j) = |⟨ψ|D̂_{j−i}ψ⟩|²` up to phase, so the `d²−1` nontrivial
/// overlaps decide the whole Gram matrix.
pub fn gram_summary(ov: &Overlaps) -> GramSummary {
    let d = ov.d as f64;
    let target = 1.0 / (d + 1.0);
    let modulus = target.sqrt();
    let mut gram: f64 = (ov.values[0].norm_sqr() - 1.0).abs();
    let mut moduli: f64 = 0.0;
    for z in &ov.values[1..] {
        gram = gram.max((z.norm_sqr() - target).abs());
        moduli = moduli.max((z.norm() - modulus).abs());
    }
    GramSummary {
        max_gram_deviation: gram,
        overlap_modulus_deviation: moduli,
        modulus_square_sum: ov.modulus_square_sum(),
    }
}

/// Outcome of testing one candidate symmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub matrix: [i64; 4],
    pub modulus: u64,
    pub antiunitary: bool,
    pub accepted: bool,
    /// `(a,b)` with `Vψ ∝ D̂_{(a,b)}ψ` when accepted.
    pub displacement: Option<(u64, u64)>,
    /// Largest `|⟨D̂_{(a,b)}ψ|Vψ⟩|` found.
    pub best_modulus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerReport {
    pub candidates: Vec<ProbeOutcome>,
    /// Order of the group generated by the accepted candidates, as 2×2
    /// matrices mod `d`.
    pub generated_order: Option<u64>,
    /// The same group over `Z_{2d}` for even `d` (equal to the above for odd `d`).
    pub generated_order_clifford: Option<u64>,
    pub contains_antiunitary: bool,
}

impl StabilizerReport {
    pub fn antiunitary_order(&self) -> Option<u64> {
        self.contains_antiunitary.then_some(self.generated_order).flatten()
    }
}

fn is_antiunitary(f: &ModMatrix, d: usize) -> Option<bool> {
    let det = f.det();
    let m = f.modulus();
    let plus = 1 % m;
    let minus = (m - 1) % m;
    if m != d as u64 && m != clifford_modulus(d) {
        return None;
    }
    if det == plus {
        Some(false)
    } else if det == minus {
        Some(true)
    } else {
        None
    }
}

/// Decide membership of a single candidate in the stabilizer of `psi`
/// modulo displacements.
pub fn probe_candidate(wh: &WeylHeisenberg, psi: &[C64], candidate: &ModMatrix) -> ProbeOutcome {
    let d = wh.dim();
    let mut out = ProbeOutcome {
        matrix: candidate.signed_entries(),
        modulus: candidate.modulus(),
        antiunitary: false,
        accepted: false,
        displacement: None,
        best_modulus: 0.0,
        error: None,
    };
    let Some(anti) = is_antiunitary(candidate, d) else {
        out.error = Some(format!(
            "determinant {} is neither +1 nor -1 mod {}",
            candidate.det(),
            candidate.modulus()
        ));
        return out;
    };
    out.antiunitary = anti;
    let mapped = if anti {
        wh.antiunitary_apply(candidate, psi)
    } else {
        wh.clifford_unitary(candidate).map(|u| u.apply(psi))
    };
    let mapped = match mapped {
        Ok(v) => v,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let dd = d as i64;
    let (best, at) = (0..dd)
        .into_par_iter()
        .map(|a| {
            (0..dd)
                .map(|b| (wh.matrix_element(psi, -a, -b, &mapped).norm(), (a, b)))
                .fold((f64::NEG_INFINITY, (0, 0)), |m, x| if x.0 > m.0 { x } else { m })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, (0, 0)), |m, x| if x.0 > m.0 { x } else { m });
    out.best_modulus = best;
    if (best - 1.0).abs() <= PROBE_TOLERANCE {
        out.accepted = true;
        out.displacement = Some((at.0 as u64, at.1 as u64));
    }
    out
}

/// Size of the group generated by `gens` (all over one modulus).
pub fn group_order(gens: &[ModMatrix], cap: usize) -> Option<u64> {
    let m = gens.first()?.modulus();
    let mut seen: HashSet<[u64; 4]> = HashSet::new();
    let id = ModMatrix::identity(m);
    seen.insert(id.entries());
    let mut frontier = vec![id];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = x.mul(g).ok()?;
            if seen.insert(y.entries()) {
                if seen.len() > cap {
                    return None;
                }
                frontier.push(y);
            }
        }
    }
    Some(seen.len() as u64)
}

pub fn stabilizer_probe(wh: &WeylHeisenberg, psi: &[C64], candidates: &[ModMatrix]) -> StabilizerReport {
    let d = wh.dim();
    let outcomes: Vec<ProbeOutcome> = candidates.iter().map(|c| probe_candidate(wh, psi, c)).collect();
    let accepted: Vec<&ModMatrix> = candidates
        .iter()
        .zip(&outcomes)
        .filter(|(_, o)| o.accepted)
        .map(|(c, _)| c)
        .collect();
    let contains_antiunitary = outcomes.iter().any(|o| o.accepted && o.antiunitary);
    let (generated_order, generated_order_clifford) = if accepted.is_empty() {
        (None, None)
    } else {
        let mod_d: Option<Vec<ModMatrix>> = accepted.iter().map(|c| c.reduce_to(d as u64).ok()).collect();
        let lifted: Option<Vec<ModMatrix>> = accepted
            .iter()
            .zip(outcomes.iter().filter(|o| o.accepted))
            .map(|(c, o)| wh.to_clifford_modulus(c, if o.antiunitary { -1 } else { 1 }).ok())
            .collect();
        (
            mod_d.and_then(|g| group_order(&g, GROUP_CAP)),
            lifted.and_then(|g| group_order(&g, GROUP_CAP)),
        )
    };
    StabilizerReport {
        candidates: outcomes,
        generated_order,
        generated_order_clifford,
        contains_antiunitary,
    }
}

/// Default probe set: the Fibonacci matrix.
pub fn default_candidates(d: usize) -> Vec<ModMatrix> {
    vec![fibonacci_matrix(d as u64)]
}

/// `t_{0ij} = ⟨ψ₀|ψ_i⟩⟨ψ_i|ψ_j⟩⟨ψ_j|ψ₀⟩` over the orbit `ψ_i = D̂_iψ`, with
/// `i = a·d + b`. Entries are computed on demand.
#[derive(Clone, Debug)]
pub struct TripleProductTensor {
    orbit: Vec<Vec<C64>>,
}

impl TripleProductTensor {
    pub fn len(&self) -> usize {
        self.orbit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbit.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let o = &self.orbit;
        inner(&o[0], &o[i]) * inner(&o[i], &o[j]) * inner(&o[j], &o[0])
    }

    /// `max |t_{0ij} − conj(t_{0ji})|` over all pairs.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| (self.get(i, j) - self.get(j, i).conj()).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

pub fn triple_products(wh: &WeylHeisenberg, psi: &[C64]) -> Result<TripleProductTensor> {
    Ok(TripleProductTensor { orbit: wh.weyl_orbit(psi)? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublatticePhases {
    pub divisor: u64,
    /// `max |φ_{(a,b)}|` over `(a,b) ≠ (0,0)` with `p | a` and `p | b`.
    pub max_abs_phase: Option<f64>,
    pub count: usize,
}

pub fn sublattice_phases(ov: &Overlaps, divisor: u64) -> SublatticePhases {
    let d = ov.d as u64;
    let p = divisor.max(1);
    let mut max: Option<f64> = None;
    let mut count = 0;
    for a in (0..d).step_by(p as usize) {
        for b in (0..d).step_by(p as usize) {
            if (a, b) == (0, 0) {
                continue;
            }
            let phi = ov.get(a, b).arg().abs();
            max = Some(max.map_or(phi, |m: f64| m.max(phi)));
            count += 1;
        }
    }
    SublatticePhases { divisor, max_abs_phase: max, count }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub d: usize,
    pub tolerance: f64,
    pub max_gram_deviation: f64,
    pub overlap_modulus_deviation: f64,
    pub modulus_square_sum: f64,
    pub phases: Vec<OverlapPhase>,
    pub detected_antiunitary_order: Option<u64>,
    pub stabilizer: Option<StabilizerReport>,
    pub triple_product_hermiticity: Option<f64>,
    pub sublattice: Option<SublatticePhases>,
    pub passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Candidates for the stabilizer probe; `None` skips it.
    pub probe: Option<Vec<ModMatrix>>,
    pub phase_divisor: Option<u64>,
}

/// Gram and overlap checks only.
pub fn gram_check(psi: &[C64], tolerance: f64) -> Result<VerificationReport> {
    let wh = WeylHeisenberg::new(psi.len())?;
    verify_with(&wh, psi, tolerance, &VerifyOptions::default())
}

pub fn verify_with(
    wh: &WeylHeisenberg,
    psi: &[C64],
    tolerance: f64,
    options: &VerifyOptions,
) -> Result<VerificationReport> {
    let d = wh.dim();
    let ov = overlaps(wh, psi)?;
    let gram = gram_summary(&ov);
    let passed = gram.max_gram_deviation <= tolerance && gram.overlap_modulus_deviation <= tolerance;
    // the probe is only meaningful for an actual fiducial
    let stabilizer = match &options.probe {
        Some(c) if gram.max_gram_deviation <= 1e-8 => Some(stabilizer_probe(wh, psi, c)),
        _ => None,
    };
    let triple_product_hermiticity = (d <= TRIPLE_SCAN_MAX_D)
        .then(|| triple_products(wh, psi).map(|t| t.hermiticity_error()))
        .transpose()?;
    Ok(VerificationReport {
        d,
        tolerance,
        max_gram_deviation: gram.max_gram_deviation,
        overlap_modulus_deviation: gram.overlap_modulus_deviation,
        modulus_square_sum: gram.modulus_square_sum,
        phases: ov.phases(),
        detected_antiunitary_order: stabilizer.as_ref().and_then(|s| s.antiunitary_order()),
        stabilizer,
        triple_product_hermiticity,
        sublattice: options.phase_divisor.map(|p| sublattice_phases(&ov, p)),
        passed,
    })
}

/// The exact `d = 4` fiducial with Fibonacci symmetry, evaluated in floating
/// point and normalised.
pub fn exact_fiducial_4a() -> Vec<C64> {
    let s2 = 2f64.sqrt();
    let s5 = 5f64.sqrt();
    let s10 = 10f64.sqrt();
    let t = (1.0 + s5).sqrt();
    let raw = [
        C64::new(8.0 * s2 - 8.0, 0.0),
        C64::new(
            (s10 + s2) * t + 4.0 * s2 - 4.0,
            -((-s10 - s2 + 2.0 * s5 + 2.0) * t + 4.0),
        ),
        C64::new(0.0, 8.0),
        C64::new(
            -(s10 + s2) * t + 4.0 * s2 - 4.0,
            -((s10 + s2 - 2.0 * s5 - 2.0) * t + 4.0),
        ),
    ];
    crate::weyl::normalize(&raw)
}
