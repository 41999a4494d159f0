//! t-entropy of a measure with respect to a transfer operator.
//!
//! Two definitions are implemented side by side. The original one is a
//! two-level infimum over time `n` and partitions of unity `D`, with an
//! inner supremum over probability measures `m`:
//!
//! ```text
//! τₙ(μ,D) = sup_m Σ_{g∈D} μ(g)·ln( m(Aⁿg)/μ(g) ),    τ(μ) = inf_n inf_D τₙ(μ,D)/n.
//! ```
//!
//! The simplified form drops the supremum and substitutes `m = μ`:
//!
//! ```text
//! τ'ₙ(μ,D) = Σ_{g∈D} μ(g)·ln( μ(Aⁿg)/μ(g) ).
//! ```
//!
//! For α-invariant `μ` the two outer infima agree; [`tau`] routes invariant
//! measures through the cheap `τ'` form and everything else through the
//! supremum form, and `varprinciple::check_definition_equivalence` verifies
//! the agreement numerically. Conventions: a summand with `μ(g) = 0` is 0;
//! a summand with `μ(g) > 0` and a vanishing numerator is `−∞`.
//!
//! The inner supremum is a concave maximization over the simplex, solved by
//! the multiplicative fixed-point update `m'(x) = m(x)·Σ_g c_g·v_g(x)/(m·v_g)`
//! from the uniform interior start. The update is monotone in the objective,
//! and its scaling vector yields a free duality certificate: the optimum
//! exceeds the current value by at most `ln max_x s(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Measure;
use crate::dynamics::{Cycle, MASS_TOL};
use crate::partition::{pullback_join, PartitionOfUnity};
use crate::transfer::TransferOperator;
use crate::xreal::{ExtendedReal, Finite, NegInf};
use crate::{Error, Result};

/// Default bound for the outer infimum over n.
pub const DEFAULT_N_MAX: usize = 6;
/// Default number of random partitions searched per system.
pub const DEFAULT_RANDOM_PARTITIONS: usize = 32;
/// Default absolute-improvement stopping threshold for the simplex solver.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
/// Default iteration cap for the simplex solver.
pub const DEFAULT_SOLVER_MAX_ITER: usize = 100_000;
/// Default tolerance for classifying a measure as invariant.
pub const DEFAULT_INVARIANT_TOL: f64 = 1e-9;

/// Suboptimality certificate required before the solver may declare
/// convergence, in addition to the improvement threshold.
const GAP_TOL: f64 = 1e-10;

/// Search budget and tolerances for [`tau`].
#[derive(Debug, Clone)]
pub struct TauOptions {
    /// The outer infimum runs over `n = 1..=n_max`.
    pub n_max: usize,
    /// Number of random partitions in the search family, with part counts
    /// cycling through {2, 3, N}.
    pub random_partitions: usize,
    /// Seed for the random partition family.
    pub seed: u64,
    /// Sup-norm tolerance for routing μ through the invariant-measure form.
    pub invariant_tol: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for TauOptions {
    fn default() -> Self {
        TauOptions {
            n_max: DEFAULT_N_MAX,
            random_partitions: DEFAULT_RANDOM_PARTITIONS,
            seed: 0,
            invariant_tol: DEFAULT_INVARIANT_TOL,
            solver_tol: DEFAULT_SOLVER_TOL,
            solver_max_iter: DEFAULT_SOLVER_MAX_ITER,
        }
    }
}

/// Which member of the search family a witness partition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionId {
    Singletons,
    Random { k: usize, index: usize },
    PullbackJoin { n: usize },
}

impl std::fmt::Display for PartitionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartitionId::Singletons => write!(f, "singletons"),
            PartitionId::Random { k, index } => write!(f, "random(k={k}, #{index})"),
            PartitionId::PullbackJoin { n } => write!(f, "pullback_join(n={n})"),
        }
    }
}

/// Outcome of the outer infimum.
#[derive(Debug, Clone)]
pub struct TEntropyResult {
    /// `τ(μ)` over the searched family, normalized by n.
    pub tau: ExtendedReal,
    /// Witness n.
    pub best_n: usize,
    /// Witness partition.
    pub best_partition: PartitionOfUnity,
    pub best_partition_id: PartitionId,
    /// For the supremum form, the inner argmax at the witness; absent on
    /// the invariant-measure route.
    pub best_m: Option<Measure>,
    /// Whether μ was routed through the invariant-measure form.
    pub invariant: bool,
    /// Number of (n, D) pairs evaluated.
    pub evaluations: usize,
}

/// Outcome of the inner simplex maximization.
#[derive(Debug, Clone)]
pub struct SimplexSolveReport {
    pub argmax: Measure,
    /// Objective value; for [`tau_n_sup`] this is `τₙ(μ,D)` itself.
    pub value: ExtendedReal,
    /// Multiplicative updates performed.
    pub iterations: usize,
    /// Objective gain of the last update.
    pub final_improvement: f64,
    /// Final duality certificate: the supremum exceeds `value` by at most
    /// this much (0 for the degenerate `−∞` case).
    pub gap: f64,
    /// False when the iteration cap was hit before both the improvement and
    /// the certificate dropped below tolerance.
    pub converged: bool,
    /// Objective after the start and after each update; nondecreasing up to
    /// float slack.
    pub objective_trace: Vec<f64>,
}

/// `τ'ₙ(μ,D) = Σ_{g∈D} μ(g)·ln(μ(Aⁿg)/μ(g))`, un-normalized (no division
/// by n; that happens in the outer infimum).
pub fn tau_prime_n(
    t: &TransferOperator,
    mu: &Measure,
    d: &PartitionOfUnity,
    n: usize,
) -> ExtendedReal {
    assert!(n >= 1);
    assert_eq!(mu.len(), t.size());
    assert_eq!(d.n_points(), t.size());
    let mut total = Finite(0.0);
    for g in d.iter() {
        let mg = mu.integrate(g);
        if mg == 0.0 {
            continue;
        }
        let mang = mu.integrate(&t.power_apply(n, g));
        total += ExtendedReal::weighted_log_ratio(mg, mang, mg);
    }
    total
}

/// Maximizes `F(m) = Σ_g c_g·ln(m·v_g)` over the probability simplex.
///
/// Terms with `c_g = 0` are dropped; if a retained `v_g` is identically
/// zero the supremum is `−∞` and the uniform start is returned unchanged.
/// Otherwise the multiplicative update runs until the last improvement is
/// below `tol` *and* the duality certificate is below an internal 1e−10
/// threshold, or `max_iter` is hit (reported via `converged = false`).
pub fn simplex_log_maximize(
    c: &[f64],
    v: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> SimplexSolveReport {
    assert_eq!(c.len(), v.len());
    assert!(!c.is_empty());
    let n = v[0].len();
    assert!(v.iter().all(|vg| vg.len() == n));
    debug_assert!(c.iter().all(|&cg| cg >= 0.0));
    debug_assert!((c.iter().sum::<f64>() - 1.0).abs() <= MASS_TOL);
    debug_assert!(v.iter().flatten().all(|&x| x >= 0.0));

    let retained: Vec<usize> = (0..c.len()).filter(|&g| c[g] > 0.0).collect();
    let mut m = vec![1.0 / n as f64; n];

    if retained
        .iter()
        .any(|&g| v[g].iter().all(|&x| x == 0.0))
    {
        return SimplexSolveReport {
            argmax: Measure::new(m).unwrap(),
            value: NegInf,
            iterations: 0,
            final_improvement: 0.0,
            gap: 0.0,
            converged: true,
            objective_trace: Vec::new(),
        };
    }

    let objective = |m: &[f64]| -> f64 {
        retained
            .iter()
            .map(|&g| c[g] * dot(m, &v[g]).ln())
            .sum()
    };

    let mut f = objective(&m);
    let mut trace = vec![f];
    let mut improvement = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for k in 1..=max_iter {
        // Scaling vector s(x) = Σ_g c_g·v_g(x)/(m·v_g). It certifies
        // sup F ≤ F(m) + ln max_x s(x) and drives the update m ← m·s.
        let mut s = vec![0.0; n];
        for &g in &retained {
            let d = dot(&m, &v[g]);
            let w = c[g] / d;
            for (sx, &vx) in s.iter_mut().zip(&v[g]) {
                *sx += w * vx;
            }
        }
        gap = s.iter().copied().fold(0.0f64, f64::max).ln().max(0.0);

        for (mx, &sx) in m.iter_mut().zip(&s) {
            *mx *= sx;
        }
        let total: f64 = m.iter().sum();
        for mx in &mut m {
            *mx /= total;
        }

        let f_next = objective(&m);
        improvement = f_next - f;
        f = f_next;
        trace.push(f);
        iterations = k;

        if improvement.abs() < tol && gap <= GAP_TOL {
            converged = true;
            break;
        }
    }

    SimplexSolveReport {
        argmax: Measure::new(m).expect("update preserves the simplex"),
        value: Finite(f),
        iterations,
        final_improvement: improvement,
        gap,
        converged,
        objective_trace: trace,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `τₙ(μ,D) = sup_m Σ_g μ(g)·ln(m(Aⁿg)/μ(g))`, un-normalized.
///
/// The solver works on coefficients rescaled to sum exactly 1 over the
/// retained terms; the returned value re-evaluates the objective at the
/// argmax with the original coefficients, and the two routes agree within
/// 1e−10 (asserted in debug builds).
pub fn tau_n_sup(
    t: &TransferOperator,
    mu: &Measure,
    d: &PartitionOfUnity,
    n: usize,
    solver_tol: f64,
    solver_max_iter: usize,
) -> SimplexSolveReport {
    assert!(n >= 1);
    assert_eq!(mu.len(), t.size());
    assert_eq!(d.n_points(), t.size());

    let mut c = Vec::new();
    let mut v = Vec::new();
    for g in d.iter() {
        let mg = mu.integrate(g);
        if mg > 0.0 {
            c.push(mg);
            v.push(t.power_apply(n, g));
        }
    }
    let scale: f64 = c.iter().sum();
    let c_norm: Vec<f64> = c.iter().map(|&x| x / scale).collect();

    let mut report = simplex_log_maximize(&c_norm, &v, solver_tol, solver_max_iter);

    // Entropy offset Σ μ(g)·ln μ(g) and final value with the original,
    // un-rescaled coefficients.
    let offset: f64 = c.iter().map(|&cg| cg * cg.ln()).sum();
    report.value = match report.value {
        NegInf => NegInf,
        Finite(f_scaled) => {
            let direct: f64 = c
                .iter()
                .zip(&v)
                .map(|(&cg, vg)| cg * dot(report.argmax.weights(), vg).ln())
                .sum();
            debug_assert!(
                (direct - scale * f_scaled).abs() <= 1e-10,
                "rescaled and direct objectives disagree: {direct} vs {}",
                scale * f_scaled
            );
            Finite(direct - offset)
        }
    };
    report
}

/// `τ(μ) = inf_{n,D} τₙ(μ,D)/n` over a finite search family: the singleton
/// partition, `opts.random_partitions` random fractional partitions, and
/// the pullback joins of singletons for each n in budget.
///
/// Invariant measures (within `opts.invariant_tol`) are routed through
/// `τ'ₙ`; everything else goes through the supremum form. Ties in the
/// minimum keep the smallest n, then the earliest partition.
pub fn tau(t: &TransferOperator, mu: &Measure, opts: &TauOptions) -> TEntropyResult {
    assert!(opts.n_max >= 1);
    let sys = t.system();
    let invariant = sys.is_invariant(mu, opts.invariant_tol);
    let family = partition_family(sys, opts);

    let mut best: Option<TEntropyResult> = None;
    let mut evaluations = 0;
    for n in 1..=opts.n_max {
        for (id, d) in &family {
            let (value, m) = if invariant {
                (tau_prime_n(t, mu, d, n), None)
            } else {
                let report = tau_n_sup(t, mu, d, n, opts.solver_tol, opts.solver_max_iter);
                (report.value, Some(report.argmax))
            };
            let normalized = value / n as f64;
            evaluations += 1;
            let better = match &best {
                None => true,
                Some(b) => normalized < b.tau,
            };
            if better {
                best = Some(TEntropyResult {
                    tau: normalized,
                    best_n: n,
                    best_partition: d.clone(),
                    best_partition_id: *id,
                    best_m: m,
                    invariant,
                    evaluations: 0,
                });
            }
        }
    }
    let mut result = best.expect("search family is nonempty");
    result.evaluations = evaluations;
    result
}

/// The partition search family of [`tau`]: singletons, random fractional
/// partitions with part counts cycling through {2, 3, N}, and the pullback
/// joins of singletons for each n in budget. Deterministic in `opts.seed`.
pub fn partition_family(
    sys: &crate::dynamics::FiniteSystem,
    opts: &TauOptions,
) -> Vec<(PartitionId, PartitionOfUnity)> {
    let n_points = sys.size();
    let mut family = Vec::with_capacity(1 + opts.random_partitions + opts.n_max);
    family.push((PartitionId::Singletons, PartitionOfUnity::singletons(n_points)));
    let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
    for index in 0..opts.random_partitions {
        let k = match index % 3 {
            0 => 2,
            1 => 3,
            _ => n_points,
        }
        .min(n_points);
        let seed = seeder.gen::<u64>();
        family.push((
            PartitionId::Random { k, index },
            PartitionOfUnity::random(sys, k, seed),
        ));
    }
    let singletons = PartitionOfUnity::singletons(n_points);
    for n in 1..=opts.n_max {
        family.push((
            PartitionId::PullbackJoin { n },
            pullback_join(sys, &singletons, &singletons, n),
        ));
    }
    family
}

/// `(1/|C|)·Σ_{y∈C} ln w(y)`: the t-entropy of the uniform measure on a
/// cycle, `−∞` if the cycle carries a zero weight. Independent oracle for
/// [`tau`] on cycle measures.
pub fn tau_cycle_closed_form(t: &TransferOperator, c: &Cycle) -> Result<ExtendedReal> {
    t.system().cycle_measure(c)?;
    let total: ExtendedReal = c.points().iter().map(|&y| t.log_weight(y)).sum();
    Ok(total / c.len() as f64)
}

/// t-entropy of an invariant measure via its cycle decomposition:
/// `Σ_C p_C·avg_C(ln w)` with `0·(−∞) = 0`. Errors when μ is not within
/// `tol` of the invariant polytope.
pub fn tau_invariant_mixture(
    t: &TransferOperator,
    mu: &Measure,
    tol: f64,
) -> Result<ExtendedReal> {
    let sys = t.system();
    let (coeffs, residual) = sys.cycle_mixture(mu);
    if residual > tol {
        return Err(Error::NotInvariant { residual });
    }
    let mut total = Finite(0.0);
    for (c, &p) in sys.cycles().iter().zip(&coeffs) {
        let mean: ExtendedReal =
            c.points().iter().map(|&y| t.log_weight(y)).sum::<ExtendedReal>() / c.len() as f64;
        total += mean.scale(p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{mix, FiniteSystem};

    const E: f64 = std::f64::consts::E;

    fn sys(alpha: &[usize]) -> FiniteSystem {
        FiniteSystem::new(alpha.to_vec()).unwrap()
    }

    fn op(alpha: &[usize], w: &[f64]) -> TransferOperator {
        TransferOperator::from_weights(sys(alpha), w.to_vec()).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_instance(
        r: &mut ChaCha8Rng,
        n_max: usize,
        zero_weights: bool,
    ) -> TransferOperator {
        let n = r.gen_range(2..=n_max);
        let alpha: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if zero_weights && r.gen_bool(0.1) {
                    0.0
                } else {
                    r.gen_range(-2.0..2.0f64).exp()
                }
            })
            .collect();
        TransferOperator::from_weights(FiniteSystem::new(alpha).unwrap(), w).unwrap()
    }

    #[test]
    fn tau_prime_on_three_cycle_with_e_weights() {
        let t = op(&[1, 2, 0], &[E, E, E]);
        let mu = Measure::uniform(3);
        let v = tau_prime_n(&t, &mu, &PartitionOfUnity::singletons(3), 2);
        assert!((v.expect_finite("τ'") - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tau_prime_vanishes_for_identity_map() {
        let t = op(&[0, 1], &[1.0, 1.0]);
        let mu = Measure::new(vec![0.3, 0.7]).unwrap();
        for n in 1..=4 {
            let v = tau_prime_n(&t, &mu, &PartitionOfUnity::singletons(2), n);
            assert_eq!(v, Finite(0.0));
        }
    }

    #[test]
    fn tau_prime_hits_neg_inf_on_dead_support() {
        let t = op(&[0, 1], &[1.0, 0.0]);
        let mu = Measure::dirac(2, 1);
        let v = tau_prime_n(&t, &mu, &PartitionOfUnity::singletons(2), 1);
        assert_eq!(v, NegInf);
    }

    #[test]
    fn solver_recovers_lagrange_optimum_on_basis_vectors() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let report = simplex_log_maximize(&[0.3, 0.7], &v, 1e-12, 1000);
        assert!(report.converged);
        assert!((report.argmax.weights()[0] - 0.3).abs() < 1e-12);
        assert!((report.argmax.weights()[1] - 0.7).abs() < 1e-12);
        let expected = 0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln();
        assert!((report.value.expect_finite("F") - expected).abs() < 1e-12);
    }

    #[test]
    fn solver_collapses_to_best_vertex_for_equal_vectors() {
        let v = vec![vec![1.0, 2.0, 4.0]; 3];
        let c = vec![0.2, 0.5, 0.3];
        let report = simplex_log_maximize(&c, &v, 1e-12, 100_000);
        assert!(report.converged);
        assert!((report.value.expect_finite("F") - 4.0f64.ln()).abs() < 1e-9);
        assert!(report.argmax.weights()[2] > 1.0 - 1e-9);
    }

    #[test]
    fn solver_reports_neg_inf_for_dead_term() {
        let v = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let report = simplex_log_maximize(&[0.5, 0.5], &v, 1e-12, 1000);
        assert_eq!(report.value, NegInf);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn solver_trace_is_monotone_and_beats_random_points() {
        let mut r = rng(23);
        for _ in 0..20 {
            let k = r.gen_range(1..=4);
            let n = r.gen_range(2..=5);
            let mut c: Vec<f64> = (0..k).map(|_| r.gen_range(0.1..1.0)).collect();
            let total: f64 = c.iter().sum();
            for x in &mut c {
                *x /= total;
            }
            let v: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| r.gen_range(0.0..3.0)).collect())
                .collect();
            let report = simplex_log_maximize(&c, &v, 1e-12, 100_000);
            let best = report.value.expect_finite("F");

            for pair in report.objective_trace.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-13);
            }

            for _ in 0..200 {
                let m = crate::dynamics::sample_simplex(n, &mut r);
                let f: f64 = c
                    .iter()
                    .zip(&v)
                    .map(|(&cg, vg)| cg * dot(&m, vg).ln())
                    .sum();
                assert!(f <= best + 1e-9);
            }
        }
    }

    #[test]
    fn sup_form_agrees_with_prime_form_on_invariant_singletons() {
        let mut r = rng(31);
        for _ in 0..20 {
            let t = random_instance(&mut r, 8, false);
            let mu = t.system().random_invariant_measure(&mut r);
            let d = PartitionOfUnity::singletons(t.size());
            for n in 1..=3 {
                let prime = tau_prime_n(&t, &mu, &d, n);
                let report = tau_n_sup(&t, &mu, &d, n, 1e-12, 100_000);
                assert!(prime.abs_diff(report.value) <= 1e-9);
                for (a, b) in report.argmax.weights().iter().zip(mu.weights()) {
                    assert!((a - b).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn sup_dominates_prime_everywhere() {
        let mut r = rng(37);
        for _ in 0..30 {
            let t = random_instance(&mut r, 8, true);
            let n_points = t.size();
            let raw: Vec<f64> = (0..n_points).map(|_| r.gen_range(0.0..1.0) + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let mu = Measure::new(raw.into_iter().map(|x| x / total).collect()).unwrap();
            let d = PartitionOfUnity::random(t.system(), r.gen_range(2..=3), r.gen());
            let n = r.gen_range(1..=3);
            let prime = tau_prime_n(&t, &mu, &d, n);
            let sup = tau_n_sup(&t, &mu, &d, n, 1e-12, 100_000).value;
            assert!(
                prime <= sup + 1e-9,
                "dominance violated: τ' = {prime}, τₙ = {sup}"
            );
        }
    }

    #[test]
    fn sup_form_neg_inf_when_support_dies() {
        let t = op(&[0, 1], &[1.0, 0.0]);
        let mu = Measure::dirac(2, 1);
        let report = tau_n_sup(&t, &mu, &PartitionOfUnity::singletons(2), 1, 1e-12, 1000);
        assert_eq!(report.value, NegInf);
    }

    #[test]
    fn rescaled_and_direct_objectives_agree() {
        let mut r = rng(41);
        for _ in 0..20 {
            let t = random_instance(&mut r, 6, false);
            let n_points = t.size();
            let raw: Vec<f64> = (0..n_points).map(|_| r.gen_range(0.0..1.0) + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let mu = Measure::new(raw.into_iter().map(|x| x / total).collect()).unwrap();
            let d = PartitionOfUnity::random(t.system(), 3, r.gen());

            let mut c = Vec::new();
            let mut v = Vec::new();
            for g in d.iter() {
                let mg = mu.integrate(g);
                if mg > 0.0 {
                    c.push(mg);
                    v.push(t.power_apply(2, g));
                }
            }
            let scale: f64 = c.iter().sum();
            let c_norm: Vec<f64> = c.iter().map(|&x| x / scale).collect();
            let report = simplex_log_maximize(&c_norm, &v, 1e-12, 100_000);
            let f_scaled = report.value.expect_finite("F");

            let direct: f64 = c
                .iter()
                .zip(&v)
                .map(|(&cg, vg)| cg * dot(report.argmax.weights(), vg).ln())
                .sum();
            assert!((scale * f_scaled - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn refinement_never_increases_tau_prime() {
        let mut r = rng(43);
        for _ in 0..25 {
            let t = random_instance(&mut r, 8, false);
            let mu = t.system().random_invariant_measure(&mut r);
            let d = PartitionOfUnity::random(t.system(), 2, r.gen());
            let e = PartitionOfUnity::random(t.system(), 3, r.gen());
            let n = r.gen_range(1..=3);
            let coarse = tau_prime_n(&t, &mu, &d, n);
            let fine = tau_prime_n(&t, &mu, &d.join(&e), n);
            assert!(fine <= coarse + 1e-10);
        }
    }

    #[test]
    fn singletons_minimize_tau_prime_over_random_partitions() {
        let mut r = rng(47);
        for _ in 0..10 {
            let t = random_instance(&mut r, 6, false);
            let mu = t.system().random_invariant_measure(&mut r);
            let sing = PartitionOfUnity::singletons(t.size());
            let n = r.gen_range(1..=2);
            let base = tau_prime_n(&t, &mu, &sing, n);
            for _ in 0..50 {
                let k = r.gen_range(2..=t.size());
                let d = PartitionOfUnity::random(t.system(), k, r.gen());
                let v = tau_prime_n(&t, &mu, &d, n);
                assert!(base <= v + 1e-9, "singletons beaten: {base} vs {v}");
            }
        }
    }

    #[test]
    fn tau_matches_cycle_oracle_on_fixed_points() {
        let t = op(&[1, 0, 3, 3], &[1.0, 1.0, 1.0, 2.0]);
        let mu = Measure::dirac(4, 3);
        let result = tau(&t, &mu, &TauOptions::default());
        assert!((result.tau.expect_finite("τ") - 2.0f64.ln()).abs() < 1e-9);
        assert!(result.invariant);
        assert_eq!(result.best_n, 1);
        assert_eq!(result.best_partition_id, PartitionId::Singletons);
    }

    #[test]
    fn tau_vanishes_on_identity_map() {
        let t = op(&[0, 1], &[1.0, 1.0]);
        let result = tau(&t, &Measure::uniform(2), &TauOptions::default());
        assert_eq!(result.tau, Finite(0.0));
    }

    #[test]
    fn tau_neg_inf_on_dead_fixed_point() {
        let t = op(&[0, 1], &[1.0, 0.0]);
        let result = tau(&t, &Measure::dirac(2, 1), &TauOptions::default());
        assert_eq!(result.tau, NegInf);
    }

    #[test]
    fn cycle_closed_form_examples() {
        let t = op(&[1, 0, 3, 3], &[1.0, 1.0, 1.0, 2.0]);
        let cycles = t.system().cycles();
        let v = tau_cycle_closed_form(&t, &cycles[1]).unwrap();
        assert!((v.expect_finite("τ_C") - 2.0f64.ln()).abs() < 1e-15);

        let t = op(&[1, 2, 0], &[E, E, E]);
        let v = tau_cycle_closed_form(&t, &t.system().cycles()[0]).unwrap();
        assert!((v.expect_finite("τ_C") - 1.0).abs() < 1e-15);

        let t = op(&[1, 2, 0], &[E, 0.0, E]);
        let v = tau_cycle_closed_form(&t, &t.system().cycles()[0]).unwrap();
        assert_eq!(v, NegInf);
    }

    #[test]
    fn cycle_closed_form_matches_tau() {
        let mut r = rng(53);
        for _ in 0..10 {
            let t = random_instance(&mut r, 8, true);
            for c in t.system().cycles() {
                let oracle = tau_cycle_closed_form(&t, &c).unwrap();
                let mu = t.system().cycle_measure(&c).unwrap();
                let result = tau(&t, &mu, &TauOptions::default());
                assert!(
                    oracle.abs_diff(result.tau) <= 1e-9,
                    "oracle {oracle} vs tau {}",
                    result.tau
                );
            }
        }
    }

    #[test]
    fn mixture_formula_matches_tau_on_invariant_measures() {
        let mut r = rng(59);
        for _ in 0..10 {
            let t = random_instance(&mut r, 8, true);
            let mu = t.system().random_invariant_measure(&mut r);
            let via_mixture = tau_invariant_mixture(&t, &mu, 1e-9).unwrap();
            let via_search = tau(&t, &mu, &TauOptions::default()).tau;
            assert!(via_mixture.abs_diff(via_search) <= 1e-9);
        }
    }

    #[test]
    fn mixture_formula_rejects_non_invariant_input() {
        let t = op(&[1, 0, 3, 3], &[1.0; 4]);
        let mu = Measure::dirac(4, 2);
        assert!(matches!(
            tau_invariant_mixture(&t, &mu, 1e-9),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn zero_mass_cycle_with_zero_weight_does_not_poison_the_mixture() {
        // Cycle [1] is dead (w = 0) but carries no μ-mass: 0·(−∞) = 0.
        let t = op(&[0, 1], &[2.0, 0.0]);
        let mu = Measure::dirac(2, 0);
        let v = tau_invariant_mixture(&t, &mu, 1e-9).unwrap();
        assert!((v.expect_finite("τ") - 2.0f64.ln()).abs() < 1e-15);
        let result = tau(&t, &mu, &TauOptions::default());
        assert!(v.abs_diff(result.tau) <= 1e-9);
    }

    #[test]
    fn conditional_expectation_operators_have_nonpositive_tau() {
        let mut r = rng(61);
        for _ in 0..10 {
            // Random permutation with cycle-constant masses: α_*m = m, so
            // A1 = 1 and λ(0) = 0; the variational principle then forces
            // τ(μ) ≤ 0.
            let n = r.gen_range(2..=8);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = r.gen_range(0..=i);
                perm.swap(i, j);
            }
            let s = FiniteSystem::new(perm).unwrap();
            let mut mass = vec![0.0; n];
            for c in s.cycles() {
                let v = r.gen_range(0.1..1.0);
                for &x in c.points() {
                    mass[x] = v;
                }
            }
            let t = TransferOperator::from_measure_space(s.clone(), &mass).unwrap();
            assert_eq!(t.apply(&vec![1.0; n]), vec![1.0; n]);
            let mu = s.random_invariant_measure(&mut r);
            let result = tau(&t, &mu, &TauOptions::default());
            assert!(result.tau <= Finite(1e-9), "τ = {} > 0", result.tau);
        }
    }

    #[test]
    fn mixture_tau_on_invariant_mix_is_weighted_cycle_average() {
        let t = op(&[1, 0, 3, 3], &[2.0, 2.0, 1.0, 0.5]);
        let s = t.system();
        let cycles = s.cycles();
        let mu = mix(
            &[
                s.cycle_measure(&cycles[0]).unwrap(),
                s.cycle_measure(&cycles[1]).unwrap(),
            ],
            &[0.25, 0.75],
        )
        .unwrap();
        let v = tau_invariant_mixture(&t, &mu, 1e-9).unwrap();
        let expected = 0.25 * 2.0f64.ln() + 0.75 * 0.5f64.ln();
        assert!((v.expect_finite("τ") - expected).abs() < 1e-12);
    }
}
