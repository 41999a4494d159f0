//! Transfer operators for `(X, α)` and the log spectral radius `λ(φ)`.
//!
//! On a finite discrete space the homological identity `A((f∘α)·g) = f·Ag`
//! forces the matrix of `A` onto the graph of α: `B[x][y]` can be nonzero
//! only when `α(y) = x`. Every transfer operator is therefore a weight
//! vector `w ≥ 0` acting by `(Ag)(x) = Σ_{α(y)=x} w(y)·g(y)`, and powers
//! have the closed form `Aⁿ1_y = (Π_{j<n} w(αʲy))·1_{αⁿy}`.
//!
//! `λ(φ)`, the log spectral radius of the tilted operator `A_φ f = A(e^φ f)`,
//! is computed by two independent engines:
//!
//! * an exact one: each column of the matrix has at most one nonzero entry,
//!   so `‖A_φⁿ‖` is governed by weight products along single orbits and
//!   `λ(φ)` equals the maximum cycle mean of `φ + ln w`;
//! * an analytic one: repeated matrix squaring with sup-norm rescaling,
//!   reading `(1/2^k)·ln‖A_φ^{2^k}‖` after `k` squarings, which knows
//!   nothing about cycles.
//!
//! The exact engine is authoritative; the squaring engine exists to be
//! disagreed with when one of them is wrong.

use crate::dynamics::{Cycle, FiniteSystem};
use crate::xreal::{ExtendedReal, Finite, NegInf};
use crate::{Error, Result};

/// Default squaring budget for the analytic engine: effective power 2^20,
/// which pushes the O(1/n) transient bias well under 1e−3.
pub const DEFAULT_SQUARINGS: usize = 20;

/// A potential `φ ∈ C(X)`: a finite real vector, one value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    phi: Vec<f64>,
}

impl Potential {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        for (index, &value) in phi.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinitePotential { index, value });
            }
        }
        Ok(Potential { phi })
    }

    pub fn zero(n: usize) -> Self {
        Potential { phi: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        assert!(c.is_finite());
        Potential { phi: vec![c; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// Which spectral engine produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    /// Exact maximum cycle mean over the functional graph.
    Cycles,
    /// Matrix squaring with rescaling.
    Power,
}

/// Outcome of a spectral-radius computation.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// `λ(φ)`; `−∞` when every cycle carries a zero weight.
    pub log_radius: ExtendedReal,
    pub method: SpectralMethod,
    /// For the cycle engine, a cycle attaining the maximum mean (smallest
    /// starting index on ties). The power engine produces no witness.
    pub witness_cycle: Option<Cycle>,
    /// Cycle engine: candidates examined. Power engine: squarings performed.
    pub iterations: usize,
}

/// A transfer operator in canonical `(α, w)` form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    system: FiniteSystem,
    weight: Vec<f64>,
}

impl TransferOperator {
    /// Builds the operator `(Ag)(x) = Σ_{α(y)=x} w(y)·g(y)`.
    pub fn from_weights(system: FiniteSystem, weight: Vec<f64>) -> Result<Self> {
        if weight.len() != system.size() {
            return Err(Error::LengthMismatch {
                what: "weight vector",
                got: weight.len(),
                expected: system.size(),
            });
        }
        for (index, &value) in weight.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        Ok(TransferOperator { system, weight })
    }

    /// Recovers the canonical form from a matrix, rejecting matrices whose
    /// support leaves the graph of α (those are positive operators but not
    /// transfer operators for this system). Entries within `tol` of zero are
    /// forgiven on both counts.
    pub fn from_matrix(system: FiniteSystem, b: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = system.size();
        if b.len() != n || b.iter().any(|row| row.len() != n) {
            return Err(Error::LengthMismatch {
                what: "matrix",
                got: b.len(),
                expected: n,
            });
        }
        for (row, r) in b.iter().enumerate() {
            for (col, &value) in r.iter().enumerate() {
                if !value.is_finite() || value < -tol {
                    return Err(Error::NegativeEntry { row, col, value });
                }
                if system.step(col) != row && value.abs() > tol {
                    return Err(Error::SupportViolation { row, col, value });
                }
            }
        }
        let weight = (0..n).map(|y| b[system.step(y)][y].max(0.0)).collect();
        Ok(TransferOperator { system, weight })
    }

    /// The operator of Example 2.5: the adjoint of composition with α on
    /// `L¹(m)`, with weight the Radon–Nikodym density `w(y) = m(y)/m(α(y))`.
    /// When `m` is α-invariant this is a conditional-expectation operator
    /// and `A1 = 1`.
    pub fn from_measure_space(system: FiniteSystem, m: &[f64]) -> Result<Self> {
        if m.len() != system.size() {
            return Err(Error::LengthMismatch {
                what: "mass vector",
                got: m.len(),
                expected: system.size(),
            });
        }
        for (index, &value) in m.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveMass { index, value });
            }
        }
        let weight = (0..m.len()).map(|y| m[y] / m[system.step(y)]).collect();
        Ok(TransferOperator { system, weight })
    }

    pub fn system(&self) -> &FiniteSystem {
        &self.system
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn size(&self) -> usize {
        self.system.size()
    }

    /// `ln w(y)` with `ln 0 = −∞`.
    pub fn log_weight(&self, y: usize) -> ExtendedReal {
        ExtendedReal::ln(self.weight[y])
    }

    /// The matrix `B[x][y] = w(y)·[α(y) = x]`.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut b = vec![vec![0.0; n]; n];
        for y in 0..n {
            b[self.system.step(y)][y] = self.weight[y];
        }
        b
    }

    /// `(Ag)(x) = Σ_{α(y)=x} w(y)·g(y)`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.size());
        let mut out = vec![0.0; self.size()];
        for (y, &gy) in g.iter().enumerate() {
            out[self.system.step(y)] += self.weight[y] * gy;
        }
        out
    }

    /// `Aⁿg` by n-fold application.
    pub fn power_apply(&self, n: usize, g: &[f64]) -> Vec<f64> {
        assert!(n >= 1);
        let mut v = self.apply(g);
        for _ in 1..n {
            v = self.apply(&v);
        }
        v
    }

    /// The weight product `Π_{j=0}^{n−1} w(αʲy)` along the orbit of `y`.
    pub fn orbit_weight_product(&self, y: usize, n: usize) -> f64 {
        let mut x = y;
        let mut prod = 1.0;
        for _ in 0..n {
            prod *= self.weight[x];
            x = self.system.step(x);
        }
        prod
    }

    /// Closed form `Aⁿ1_y = (Π_{j<n} w(αʲy))·1_{αⁿy}`: returns the
    /// coefficient and the carrying point. Fast path for indicator
    /// functions, checked against the iterated definition in debug builds.
    pub fn power_indicator(&self, n: usize, y: usize) -> (f64, usize) {
        assert!(n >= 1);
        let coeff = self.orbit_weight_product(y, n);
        let point = self.system.iterate(y, n);
        #[cfg(debug_assertions)]
        {
            let mut e = vec![0.0; self.size()];
            e[y] = 1.0;
            let v = self.power_apply(n, &e);
            for (x, &vx) in v.iter().enumerate() {
                let expect = if x == point { coeff } else { 0.0 };
                debug_assert!(
                    (vx - expect).abs() <= 1e-12 * coeff.max(1.0),
                    "closed form disagrees with iterated apply at {x}"
                );
            }
        }
        (coeff, point)
    }

    /// The tilted operator `A_φ f = A(e^φ f)`, again a transfer operator,
    /// with weight `w(y)·e^{φ(y)}`.
    pub fn tilt(&self, phi: &Potential) -> TransferOperator {
        assert_eq!(phi.len(), self.size());
        let weight = self
            .weight
            .iter()
            .zip(phi.values())
            .map(|(w, p)| w * p.exp())
            .collect();
        TransferOperator {
            system: self.system.clone(),
            weight,
        }
    }

    /// Exact `λ(φ)` as the maximum cycle mean of `φ + ln w`.
    ///
    /// Columns of the matrix have at most one nonzero entry, so `‖A_φⁿ1_y‖`
    /// is a single orbit product; its growth rate is the mean of `φ + ln w`
    /// on the cycle the orbit lands in, and the spectral radius is the best
    /// such mean. A cycle carrying any zero weight contributes `−∞`.
    pub fn log_spectral_radius_cycles(&self, phi: &Potential) -> SpectralResult {
        assert_eq!(phi.len(), self.size());
        let cycles = self.system.cycles();
        let mut best = NegInf;
        let mut witness = cycles.first().cloned();
        for c in &cycles {
            let mut total = Finite(0.0);
            for &y in c.points() {
                total += self.log_weight(y) + phi.values()[y];
            }
            let mean = total / c.len() as f64;
            if mean > best {
                best = mean;
                witness = Some(c.clone());
            }
        }
        SpectralResult {
            log_radius: best,
            method: SpectralMethod::Cycles,
            witness_cycle: witness,
            iterations: cycles.len(),
        }
    }

    /// Analytic `λ(φ)` estimate: square the matrix `k` times, rescaling by
    /// the sup operator norm (max row sum) and accumulating the log of the
    /// scale, then read `S_k / 2^k`. Rescaling keeps every entry in `[0,1]`,
    /// so overflow cannot occur; a power collapsing to the zero matrix
    /// reports `−∞`.
    pub fn log_spectral_radius_power(&self, phi: &Potential, squarings: usize) -> SpectralResult {
        assert!(squarings >= 1);
        let n = self.size();
        let tilted = self.tilt(phi);
        let mut m = vec![0.0; n * n];
        for y in 0..n {
            m[self.system.step(y) * n + y] = tilted.weight[y];
        }

        let neg_inf = |iterations| SpectralResult {
            log_radius: NegInf,
            method: SpectralMethod::Power,
            witness_cycle: None,
            iterations,
        };

        let c0 = max_row_sum(&m, n);
        if c0 == 0.0 {
            return neg_inf(0);
        }
        for v in &mut m {
            *v /= c0;
        }
        let mut log_scale = c0.ln();

        for k in 1..=squarings {
            let sq = mat_square(&m, n);
            let c = max_row_sum(&sq, n);
            if c == 0.0 {
                return neg_inf(k);
            }
            m = sq;
            for v in &mut m {
                *v /= c;
            }
            log_scale = 2.0 * log_scale + c.ln();
        }

        SpectralResult {
            log_radius: Finite(log_scale / (1u64 << squarings) as f64),
            method: SpectralMethod::Power,
            witness_cycle: None,
            iterations: squarings,
        }
    }
}

fn max_row_sum(m: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|r| m[r * n..(r + 1) * n].iter().sum::<f64>())
        .fold(0.0, f64::max)
}

fn mat_square(m: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let a = m[i * n + k];
            if a == 0.0 {
                continue;
            }
            let row_k = &m[k * n..(k + 1) * n];
            let out_i = &mut out[i * n..(i + 1) * n];
            for (o, &b) in out_i.iter_mut().zip(row_k) {
                *o += a * b;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const E: f64 = std::f64::consts::E;

    fn sys(alpha: &[usize]) -> FiniteSystem {
        FiniteSystem::new(alpha.to_vec()).unwrap()
    }

    fn op(alpha: &[usize], w: &[f64]) -> TransferOperator {
        TransferOperator::from_weights(sys(alpha), w.to_vec()).unwrap()
    }

    #[test]
    fn identity_map_unit_weights_is_identity_operator() {
        let t = op(&[0, 1], &[1.0, 1.0]);
        let g = vec![0.3, -2.0];
        assert_eq!(t.apply(&g), g);
    }

    #[test]
    fn one_preimage_each_gives_constant_a1() {
        let t = op(&[1, 2, 0], &[E, E, E]);
        assert_eq!(t.apply(&[1.0, 1.0, 1.0]), vec![E, E, E]);
    }

    #[test]
    fn a1_sums_weights_over_preimages() {
        let t = op(&[1, 0, 3, 3], &[1.0, 1.0, 1.0, 2.0]);
        assert_eq!(t.apply(&[1.0; 4]), vec![1.0, 1.0, 0.0, 3.0]);
    }

    #[test]
    fn from_weights_rejects_negatives() {
        let r = TransferOperator::from_weights(sys(&[0, 1]), vec![1.0, -0.5]);
        assert!(matches!(r, Err(Error::NegativeWeight { index: 1, .. })));
    }

    #[test]
    fn from_matrix_rejects_off_graph_support() {
        let b = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
        let r = TransferOperator::from_matrix(sys(&[0, 1]), &b, 1e-9);
        assert!(matches!(
            r,
            Err(Error::SupportViolation { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn from_matrix_round_trips_and_forgives_tiny_noise() {
        let t = op(&[1, 0, 3, 3], &[0.2, 1.0, 0.0, 2.0]);
        let b = t.to_matrix();
        let back = TransferOperator::from_matrix(t.system().clone(), &b, 1e-9).unwrap();
        assert_eq!(back.weights(), t.weights());

        let mut noisy = b;
        noisy[0][0] += 1e-12;
        noisy[2][1] -= 1e-12;
        let back = TransferOperator::from_matrix(t.system().clone(), &noisy, 1e-9).unwrap();
        assert_eq!(back.weights(), t.weights());
    }

    #[test]
    fn measure_space_operator_by_hand() {
        let t = TransferOperator::from_measure_space(sys(&[0, 0]), &[0.5, 0.5]).unwrap();
        assert_eq!(t.weights(), &[1.0, 1.0]);
        assert_eq!(t.apply(&[3.0, 4.0]), vec![7.0, 0.0]);
    }

    #[test]
    fn invariant_mass_gives_conditional_expectation() {
        let t = TransferOperator::from_measure_space(sys(&[1, 0]), &[0.5, 0.5]).unwrap();
        assert_eq!(t.apply(&[1.0, 1.0]), vec![1.0, 1.0]);

        let t = TransferOperator::from_measure_space(sys(&[1, 0, 3, 3]), &[0.25; 4]).unwrap();
        assert_eq!(t.weights(), &[1.0; 4]);
    }

    #[test]
    fn from_measure_space_rejects_zero_mass() {
        let r = TransferOperator::from_measure_space(sys(&[1, 0]), &[0.5, 0.0]);
        assert!(matches!(r, Err(Error::NonPositiveMass { index: 1, .. })));
    }

    #[test]
    fn apply_on_indicator_moves_mass_along_alpha() {
        let t = op(&[1, 0, 3, 3], &[0.2, 1.0, 5.0, 2.0]);
        let mut e2 = vec![0.0; 4];
        e2[2] = 1.0;
        assert_eq!(t.apply(&e2), vec![0.0, 0.0, 0.0, 5.0]);
    }

    #[test]
    fn power_apply_matches_closed_form_on_indicators() {
        let t = op(&[1, 2, 0], &[E, E, E]);
        let g = vec![1.0, 0.0, 0.0];
        let v = t.power_apply(2, &g);
        assert!((v[2] - E * E).abs() < 1e-12);
        assert_eq!((v[0], v[1]), (0.0, 0.0));
        let (coeff, point) = t.power_indicator(2, 0);
        assert_eq!(point, 2);
        assert!((coeff - E * E).abs() < 1e-12);
    }

    #[test]
    fn power_apply_at_one_is_apply() {
        let t = op(&[1, 0, 3, 3], &[0.2, 1.0, 5.0, 2.0]);
        let g = vec![0.1, 0.7, 0.3, 0.9];
        assert_eq!(t.power_apply(1, &g), t.apply(&g));
    }

    #[test]
    fn zero_weight_on_orbit_annihilates() {
        let t = op(&[1, 2, 0], &[1.0, 0.0, 1.0]);
        let g = vec![1.0, 0.0, 0.0];
        assert_eq!(t.power_apply(3, &g), vec![0.0, 0.0, 0.0]);
        let (coeff, _) = t.power_indicator(3, 0);
        assert_eq!(coeff, 0.0);
    }

    #[test]
    fn tilt_examples() {
        let t = op(&[1, 0, 3, 3], &[1.0; 4]);
        assert_eq!(t.tilt(&Potential::zero(4)).weights(), t.weights());

        let tilted = t.tilt(&Potential::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap());
        assert_eq!(tilted.weights(), &[1.0, 1.0, 1.0, E]);
    }

    #[test]
    fn cycle_engine_examples() {
        let t = op(&[1, 0, 3, 3], &[1.0, 1.0, 1.0, 2.0]);
        let r = t.log_spectral_radius_cycles(&Potential::zero(4));
        assert!((r.log_radius.expect_finite("λ") - 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(r.witness_cycle.unwrap().points(), &[3]);

        let t = op(&[1, 2, 0], &[E, E, E]);
        let r = t.log_spectral_radius_cycles(&Potential::zero(3));
        assert!((r.log_radius.expect_finite("λ") - 1.0).abs() < 1e-15);

        let t = op(&[0, 1], &[1.0, 0.0]);
        let r = t.log_spectral_radius_cycles(&Potential::zero(2));
        assert_eq!(r.log_radius, Finite(0.0));
        assert_eq!(r.witness_cycle.unwrap().points(), &[0]);
    }

    #[test]
    fn all_dead_cycles_give_neg_inf_in_both_engines() {
        let t = op(&[0, 1, 0], &[0.0, 0.0, 1.0]);
        let phi = Potential::zero(3);
        assert_eq!(
            t.log_spectral_radius_cycles(&phi).log_radius,
            ExtendedReal::NegInf
        );
        assert_eq!(
            t.log_spectral_radius_power(&phi, 20).log_radius,
            ExtendedReal::NegInf
        );
    }

    #[test]
    fn power_engine_is_exact_on_identity_and_permutations() {
        let t = op(&[0, 1], &[1.0, 1.0]);
        let r = t.log_spectral_radius_power(&Potential::zero(2), 20);
        assert_eq!(r.log_radius, Finite(0.0));
        assert_eq!(r.iterations, 20);

        // Pure 5-cycle with unit weights: powers oscillate through
        // permutation matrices, but every rescale factor is exactly 1.
        let t = op(&[1, 2, 3, 4, 0], &[1.0; 5]);
        let r = t.log_spectral_radius_power(&Potential::zero(5), 20);
        assert_eq!(r.log_radius, Finite(0.0));
    }

    #[test]
    fn constant_tilt_shifts_lambda_exactly() {
        let t = op(&[1, 0, 3, 3], &[1.0, 1.0, 1.0, 2.0]);
        let base = t
            .log_spectral_radius_cycles(&Potential::zero(4))
            .log_radius
            .expect_finite("λ");
        let shifted = t
            .log_spectral_radius_cycles(&Potential::constant(4, 0.7))
            .log_radius
            .expect_finite("λ");
        assert_eq!(shifted, base + 0.7);
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        n_max: usize,
    ) -> (TransferOperator, Potential) {
        let n = rng.gen_range(1..=n_max);
        let alpha: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0f64).exp()).collect();
        let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (
            TransferOperator::from_weights(FiniteSystem::new(alpha).unwrap(), w).unwrap(),
            Potential::new(phi).unwrap(),
        )
    }

    #[test]
    fn engines_agree_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let (t, phi) = random_instance(&mut rng, 30);
            let exact = t.log_spectral_radius_cycles(&phi).log_radius;
            let approx = t.log_spectral_radius_power(&phi, 20).log_radius;
            assert!(
                exact.abs_diff(approx) <= 1e-3,
                "exact {exact} vs power {approx}"
            );
        }
    }

    #[test]
    fn homological_identity_holds_to_float_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (t, _) = random_instance(&mut rng, 30);
            let n = t.size();
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let fg: Vec<f64> = (0..n).map(|y| f[t.system().step(y)] * g[y]).collect();
            let lhs = t.apply(&fg);
            let ag = t.apply(&g);
            for x in 0..n {
                assert!((lhs[x] - f[x] * ag[x]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn iterated_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let (t, _) = random_instance(&mut rng, 20);
            let n = t.size();
            let steps = rng.gen_range(1..=4usize);
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let inner: Vec<f64> = (0..n)
                .map(|y| g[y] * h[t.system().iterate(y, steps)])
                .collect();
            let lhs = t.power_apply(steps, &inner);
            let ang = t.power_apply(steps, &g);
            for x in 0..n {
                assert!(
                    (lhs[x] - h[x] * ang[x]).abs() <= 1e-10,
                    "residual {} at {x}",
                    (lhs[x] - h[x] * ang[x]).abs()
                );
            }
        }
    }

    #[test]
    fn positivity_on_random_nonneg_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (t, _) = random_instance(&mut rng, 30);
            let g: Vec<f64> = (0..t.size()).map(|_| rng.gen_range(0.0..5.0)).collect();
            assert!(t.apply(&g).iter().all(|&v| v >= 0.0));
        }
    }

    proptest! {
        #[test]
        fn lambda_monotone_and_convex_in_phi(
            alpha in proptest::collection::vec(0usize..8, 1..=8),
            raw_w in proptest::collection::vec(-2.0f64..2.0, 8),
            raw_phi in proptest::collection::vec(-1.0f64..1.0, 8),
            raw_psi in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            let n = alpha.len();
            let alpha: Vec<usize> = alpha.iter().map(|&a| a % n).collect();
            let t = TransferOperator::from_weights(
                FiniteSystem::new(alpha).unwrap(),
                raw_w[..n].iter().map(|&x| x.exp()).collect(),
            ).unwrap();
            let phi = Potential::new(raw_phi[..n].to_vec()).unwrap();
            let psi = Potential::new(raw_psi[..n].to_vec()).unwrap();
            let lam = |p: &Potential| {
                t.log_spectral_radius_cycles(p).log_radius.expect_finite("λ")
            };

            // Monotonicity: evaluate at the pointwise max.
            let upper = Potential::new(
                phi.values().iter().zip(psi.values()).map(|(a, b)| a.max(*b)).collect()
            ).unwrap();
            prop_assert!(lam(&phi) <= lam(&upper) + 1e-12);

            // Midpoint convexity.
            let mid = Potential::new(
                phi.values().iter().zip(psi.values()).map(|(a, b)| 0.5 * (a + b)).collect()
            ).unwrap();
            prop_assert!(lam(&mid) <= 0.5 * (lam(&phi) + lam(&psi)) + 1e-12);

            // Constant shift: exact up to the reordering of the cycle-mean
            // sum, so a few ulps at this scale.
            let c = 0.3125;
            let shifted = Potential::new(
                phi.values().iter().map(|v| v + c).collect()
            ).unwrap();
            prop_assert!((lam(&shifted) - (lam(&phi) + c)).abs() <= 1e-12);
        }

        #[test]
        fn matrix_round_trip_is_identity(
            alpha in proptest::collection::vec(0usize..8, 1..=8),
            raw_w in proptest::collection::vec(0.0f64..5.0, 8),
        ) {
            let n = alpha.len();
            let alpha: Vec<usize> = alpha.iter().map(|&a| a % n).collect();
            let t = TransferOperator::from_weights(
                FiniteSystem::new(alpha).unwrap(),
                raw_w[..n].to_vec(),
            ).unwrap();
            let back = TransferOperator::from_matrix(
                t.system().clone(), &t.to_matrix(), 1e-9
            ).unwrap();
            prop_assert_eq!(back.weights(), t.weights());
        }
    }
}
