//! Symmetry-restricted search for fiducials: Haar-random restarts, each
//! symmetrised onto the con-eigenspace of the anti-unitary symmetry and
//! minimised with L-BFGS against the frame potential.

pub mod coneigen;
pub mod lbfgs;
pub mod polish;
pub mod potential;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::modmat::{fibonacci_matrix, ModMatrix};
use crate::weyl::{clifford_modulus, norm, WeylError, WeylHeisenberg};

pub use coneigen::{coneigen_projector, symmetrize, symmetrize_raw, ConEigenData, ConEigenError};
pub use lbfgs::{LbfgsOutcome, LbfgsParams, Termination};
pub use potential::{frame_potential, frame_potential_unchecked, welch_bound, OverlapEngine};

/// Attempts at drawing a non-degenerate start before a restart is abandoned.
pub const MAX_RESAMPLES: usize = 100;

/// Restarts whose potential is this close to the bound are refined with
/// [`polish::polish`].
pub const POLISH_THRESHOLD: f64 = 1e-8;

/// Gauss-Newton steps allowed per refinement.
pub const POLISH_STEPS: usize = 30;

/// Cap on the order of `ŪU` accepted by [`prepare_symmetry`].
pub const ORDER_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    ConEigen(#[from] ConEigenError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub d: usize,
    /// Anti-unitary symmetry, determinant `−1` mod `d` (lifted for even `d`).
    pub symmetry: ModMatrix,
    pub max_restarts: usize,
    pub max_iterations: usize,
    /// Accepted excess of the potential over `2/(d+1)`.
    pub convergence_gap: f64,
    pub master_seed: u64,
    pub use_fft: bool,
    /// Refine near-solutions on the overlap equations.
    pub polish: bool,
    /// Worker threads; `None` uses the ambient rayon pool. Never affects
    /// the result.
    pub jobs: Option<usize>,
}

impl SearchConfig {
    /// Defaults with the Fibonacci matrix as symmetry.
    pub fn new(d: usize) -> Self {
        Self {
            d,
            symmetry: fibonacci_matrix(clifford_modulus(d.max(1))),
            max_restarts: 1000,
            max_iterations: 10_000,
            convergence_gap: 1e-13,
            master_seed: 0,
            use_fft: false,
            polish: true,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::InvalidConfig(msg));
        if self.d < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.d));
        }
        if !(self.convergence_gap > 0.0) {
            return bad(format!("convergence gap must be positive, got {}", self.convergence_gap));
        }
        if self.max_restarts == 0 || self.max_iterations == 0 {
            return bad("restart and iteration budgets must be positive".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub d: usize,
    pub fiducial: Vec<C64>,
    /// Direct triple-sum potential of `fiducial`.
    pub achieved_potential: f64,
    pub restarts_used: usize,
    pub converged: bool,
    /// Restart that produced `fiducial`.
    pub restart_index: usize,
    pub iterations: usize,
    /// `max_p | |⟨ψ|D̂_pψ⟩|² − 1/(d+1) |` over `p ≠ 0`.
    pub overlap_residual: f64,
    pub convergence_gap: f64,
}

impl SearchResult {
    pub fn gap(&self) -> f64 {
        self.achieved_potential - welch_bound(self.d)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of restart `index`, a pure function of `(master, index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// `d` independent standard complex Gaussians, normalised.
pub fn haar_random_vector(d: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Con-eigen data of the anti-unitary `Ĵ U_{F'}` belonging to `symmetry`.
pub fn prepare_symmetry(wh: &WeylHeisenberg, symmetry: &ModMatrix) -> Result<ConEigenData, SearchError> {
    let anti = wh.antiunitary(symmetry)?;
    Ok(coneigen_projector(&anti.unitary, ORDER_CAP)?)
}

fn to_complex(x: &[f64]) -> Vec<C64> {
    let d = x.len() / 2;
    (0..d).map(|j| C64::new(x[j], x[d + j])).collect()
}

/// Raw real coordinates `[Re φ, Im φ]` of a complex vector.
pub fn to_real(phi: &[C64]) -> Vec<f64> {
    phi.iter().map(|z| z.re).chain(phi.iter().map(|z| z.im)).collect()
}

/// The composite objective `x ↦ P(ψ'/‖ψ'‖)` on the `2d` raw reals of `φ`,
/// where `ψ'` is the symmetrisation of `φ`.
#[derive(Clone, Debug)]
pub struct SymmetricObjective {
    engine: OverlapEngine,
    ce: ConEigenData,
    basis: Vec<Vec<C64>>,
}

impl SymmetricObjective {
    pub fn new(ce: ConEigenData, use_fft: bool) -> Self {
        let engine = OverlapEngine::new(ce.dim(), use_fft);
        let basis = polish::fixed_space_basis(&ce);
        Self { engine, ce, basis }
    }

    pub fn engine(&self) -> &OverlapEngine {
        &self.engine
    }

    /// Orthonormal real basis of the con-eigenvectors.
    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.ce.dim()
    }

    pub fn coneigen(&self) -> &ConEigenData {
        &self.ce
    }

    /// Normalised symmetric vector for raw parameters `x`.
    pub fn point(&self, x: &[f64]) -> Result<Vec<C64>, ConEigenError> {
        symmetrize(&to_complex(x), &self.ce)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, ConEigenError> {
        Ok(self.engine.potential(&self.point(x)?))
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ConEigenError> {
        let phi = to_complex(x);
        let raw = symmetrize_raw(&phi, &self.ce).ok_or(ConEigenError::Resample)?;
        let r2: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
        let r = r2.sqrt();
        let psi: Vec<C64> = raw.iter().map(|z| z / r).collect();
        let (value, g) = self.engine.potential_and_derivative(&psi);

        // P is homogeneous of degree 8, so f(ψ') = P(ψ')/‖ψ'‖⁸ and the real
        // gradient in ψ' is 2(g − 4Pψ)/r with g = ∂P/∂ψ̄ at the unit vector ψ
        let outer: Vec<C64> = g
            .iter()
            .zip(&psi)
            .map(|(gi, pi)| (gi - pi * (4.0 * value)) * (2.0 / r))
            .collect();

        // pull back through φ ↦ conj(UQφ) + Qφ
        let conj_outer: Vec<C64> = outer.iter().map(|z| z.conj()).collect();
        let from_uq = adjoint_apply(self.ce.uq(), &conj_outer);
        let from_q = self.ce.projector.apply(&outer);
        let grad_c: Vec<C64> = from_uq.iter().zip(&from_q).map(|(a, b)| a + b).collect();
        Ok((value, to_real(&grad_c)))
    }
}

fn adjoint_apply(m: &crate::weyl::UnitaryMatrix, v: &[C64]) -> Vec<C64> {
    let d = m.dim();
    let data = m.as_slice();
    let mut out = vec![C64::new(0.0, 0.0); d];
    for (r, vr) in v.iter().enumerate() {
        let row = &data[r * d..(r + 1) * d];
        for (o, mrc) in out.iter_mut().zip(row) {
            *o += mrc.conj() * vr;
        }
    }
    out
}

/// Real gradient of the composite objective at raw parameters `φ`.
pub fn frame_potential_grad(phi: &[C64], objective: &SymmetricObjective) -> Result<Vec<f64>, ConEigenError> {
    Ok(objective.value_and_gradient(&to_real(phi))?.1)
}

#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub index: usize,
    pub fiducial: Vec<C64>,
    pub potential: f64,
    pub converged: bool,
    pub iterations: usize,
    pub overlap_residual: f64,
    pub termination: Option<Termination>,
}

/// Symmetrisable Haar start for restart `index`, resampling on degeneracy.
pub fn starting_point(objective: &SymmetricObjective, master_seed: u64, index: usize) -> Option<Vec<C64>> {
    let seed = derive_seed(master_seed, index as u64);
    (0..MAX_RESAMPLES).find_map(|attempt| {
        let s = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
        let phi = haar_random_vector(objective.dim(), s);
        symmetrize_raw(&phi, objective.coneigen()).map(|_| phi)
    })
}

/// One local search. `observe` sees every accepted symmetric iterate.
pub fn run_restart(
    objective: &SymmetricObjective,
    config: &SearchConfig,
    index: usize,
    mut observe: impl FnMut(&[C64], f64),
) -> RestartOutcome {
    let d = objective.dim();
    let bound = welch_bound(d);
    let Some(phi) = starting_point(objective, config.master_seed, index) else {
        return RestartOutcome {
            index,
            fiducial: vec![C64::new(0.0, 0.0); d],
            potential: f64::INFINITY,
            converged: false,
            iterations: 0,
            overlap_residual: f64::INFINITY,
            termination: None,
        };
    };
    let params = LbfgsParams {
        max_iterations: config.max_iterations,
        ..LbfgsParams::default()
    };
    let gap = config.convergence_gap;
    let reached = |x: &[f64]| {
        objective
            .point(x)
            .map(|psi| frame_potential_unchecked(&psi) - bound <= gap)
            .unwrap_or(false)
    };
    let outcome = lbfgs::minimize(
        |x| objective.value_and_gradient(x).ok(),
        to_real(&phi),
        &params,
        |x, value| value - bound <= 2.0 * gap && reached(x),
        |x, value| {
            if let Ok(psi) = objective.point(x) {
                observe(&psi, value);
            }
        },
    );
    let mut fiducial = objective
        .point(&outcome.x)
        .expect("accepted iterates are symmetrisable");
    let mut potential = frame_potential_unchecked(&fiducial);
    let overlap_residual = if config.polish && potential - bound <= POLISH_THRESHOLD {
        let refined = polish::polish(&objective.engine, &objective.basis, &fiducial, POLISH_STEPS);
        fiducial = refined.fiducial;
        potential = frame_potential_unchecked(&fiducial);
        refined.final_residual
    } else {
        overlap_max_residual(&objective.engine, &fiducial)
    };
    RestartOutcome {
        index,
        fiducial,
        potential,
        converged: potential - bound <= gap,
        iterations: outcome.iterations,
        overlap_residual,
        termination: Some(outcome.termination),
    }
}

/// Run restarts `0, 1, 2, …` until one converges or the budget is spent.
///
/// The reported restart is the earliest converged one; without convergence
/// it is the lowest potential, ties going to the earlier index. Restarts run
/// in parallel waves, but the outcome depends only on the configuration.
pub fn search(config: &SearchConfig) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let wh = WeylHeisenberg::new(config.d)?;
    let ce = prepare_symmetry(&wh, &config.symmetry)?;
    let objective = SymmetricObjective::new(ce, config.use_fft);

    let drive = || search_with(&objective, config);
    match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| SearchError::ThreadPool(e.to_string()))?
            .install(drive),
        None => drive(),
    }
}

fn search_with(objective: &SymmetricObjective, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    let wave = rayon::current_num_threads().max(1);
    let mut best: Option<RestartOutcome> = None;
    let mut start = 0;
    while start < config.max_restarts {
        let end = (start + wave).min(config.max_restarts);
        let outcomes: Vec<RestartOutcome> = (start..end)
            .into_par_iter()
            .map(|i| run_restart(objective, config, i, |_, _| {}))
            .collect();
        if let Some(hit) = outcomes.iter().find(|o| o.converged) {
            return Ok(finish(config, hit.clone(), hit.index + 1));
        }
        for o in outcomes {
            if best.as_ref().is_none_or(|b| o.potential < b.potential) {
                best = Some(o);
            }
        }
        start = end;
    }
    let best = best.expect("at least one restart");
    Ok(finish(config, best, config.max_restarts))
}

fn overlap_max_residual(engine: &OverlapEngine, psi: &[C64]) -> f64 {
    let target = 1.0 / (engine.dim() as f64 + 1.0);
    engine.overlaps(psi)[1..]
        .iter()
        .fold(0.0, |m, z| m.max((z.norm_sqr() - target).abs()))
}

fn finish(config: &SearchConfig, o: RestartOutcome, restarts_used: usize) -> SearchResult {
    SearchResult {
        d: config.d,
        fiducial: o.fiducial,
        achieved_potential: o.potential,
        restarts_used,
        converged: o.converged,
        restart_index: o.index,
        iterations: o.iterations,
        overlap_residual: o.overlap_residual,
        convergence_gap: config.convergence_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(d: usize) -> SymmetricObjective {
        let wh = WeylHeisenberg::new(d).unwrap();
        let ce = prepare_symmetry(&wh, &fibonacci_matrix(clifford_modulus(d))).unwrap();
        SymmetricObjective::new(ce, false)
    }

    #[test]
    fn haar_vectors() {
        let a = haar_random_vector(7, 99);
        assert!((norm(&a) - 1.0).abs() < 1e-14);
        assert_eq!(a, haar_random_vector(7, 99));
        assert_ne!(a, haar_random_vector(7, 100));
        for i in 0..200 {
            let v = haar_random_vector(4, derive_seed(5, i));
            assert!(frame_potential(&v).unwrap() >= welch_bound(4) - 1e-12);
        }
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for d in [3usize, 4, 8] {
            let obj = objective(d);
            for s in 0..5 {
                let x = to_real(&haar_random_vector(d, 1000 + s));
                let (_, g) = obj.value_and_gradient(&x).unwrap();
                let h = 1e-6;
                for i in 0..2 * d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * h);
                    // the objective is constant when the fixed space is a single ray
                    let scale = g.iter().fold(1e-2f64, |m, v| m.max(v.abs()));
                    assert!((fd - g[i]).abs() <= 1e-6 * scale, "d={d} i={i} fd={fd} g={}", g[i]);
                }
            }
        }
    }

    #[test]
    fn iterates_stay_symmetric_and_d4_converges() {
        let obj = objective(4);
        let config = SearchConfig { master_seed: 3, ..SearchConfig::new(4) };
        let mut worst: f64 = 0.0;
        let mut result = None;
        for i in 0..20 {
            let o = run_restart(&obj, &config, i, |psi, _| {
                worst = worst.max(obj.coneigen().residual(psi));
            });
            if o.converged {
                result = Some(o);
                break;
            }
        }
        assert!(worst <= 1e-10, "residual {worst}");
        let o = result.expect("d=4 converges within 20 restarts");
        assert!((o.potential - 0.4).abs() < 1e-12);
        // interior minimum: raw gradient vanishes at the fiducial
        let (_, g) = obj.value_and_gradient(&to_real(&o.fiducial)).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-6);
    }

    #[test]
    fn search_converges_at_small_dimensions() {
        for (d, seed) in [(4usize, 42u64), (8, 7)] {
            let r = search(&SearchConfig { master_seed: seed, ..SearchConfig::new(d) }).unwrap();
            assert!(r.converged, "d={d}");
            assert!(r.gap() <= 1e-13);
            assert!((r.achieved_potential - welch_bound(d)).abs() < 1e-12);
            assert!(obj_residual(d, &r.fiducial) <= 1e-10);
            assert!(r.overlap_residual <= 1e-12, "d={d} {}", r.overlap_residual);
        }
    }

    fn obj_residual(d: usize, psi: &[C64]) -> f64 {
        objective(d).coneigen().residual(psi)
    }

    #[test]
    fn result_is_independent_of_jobs() {
        let base = SearchConfig { master_seed: 11, ..SearchConfig::new(8) };
        let one = search(&SearchConfig { jobs: Some(1), ..base.clone() }).unwrap();
        let three = search(&SearchConfig { jobs: Some(3), ..base }).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn starved_budget_reports_non_convergence() {
        let config = SearchConfig {
            symmetry: fibonacci_matrix(5),
            max_restarts: 1,
            max_iterations: 3,
            ..SearchConfig::new(5)
        };
        let r = search(&config).unwrap();
        assert!(!r.converged);
        assert_eq!(r.restarts_used, 1);
        assert!((norm(&r.fiducial) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let mut c = SearchConfig::new(4);
        c.convergence_gap = 0.0;
        assert!(matches!(search(&c), Err(SearchError::InvalidConfig(_))));
        let c = SearchConfig { symmetry: crate::modmat::zauner(8), ..SearchConfig::new(4) };
        assert!(matches!(search(&c), Err(SearchError::Weyl(_))));
    }

    #[test]
    fn real_dimension_of_fixed_space() {
        // recorded regression values for the Fibonacci symmetry
        for (d, dim) in [(3, 1), (4, 2), (5, 1), (7, 1), (8, 2), (19, 3), (48, 6), (124, 10)] {
            assert_eq!(objective(d).coneigen().real_dimension(), dim, "d={d}");
        }
    }
}

