//! Finite dynamical systems `(X, α)`, their cycle structure, and the
//! invariant-measure polytope.
//!
//! The phase space is `X = {0..N−1}` with the discrete topology, so `C(X)`
//! is just `ℝ^N` and measures are probability vectors. Every functional
//! graph decomposes into disjoint cycles with trees hanging off them; the
//! α-invariant measures are exactly the convex combinations of the uniform
//! measures on those cycles, which makes the whole polytope enumerable.

use rand::Rng;

use crate::{Error, Result};

/// Tolerance for "sums to one" on internally constructed vectors.
pub const MASS_TOL: f64 = 1e-12;

/// A self-map of `{0..N−1}`, given by its value table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSystem {
    alpha: Vec<usize>,
}

impl FiniteSystem {
    /// Builds a system from the value table of α, rejecting out-of-range
    /// entries.
    pub fn new(alpha: Vec<usize>) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::Invalid("phase space must be nonempty".into()));
        }
        for (position, &value) in alpha.iter().enumerate() {
            if value >= n {
                return Err(Error::OutOfRange {
                    position,
                    value: value as i64,
                    size: n,
                });
            }
        }
        Ok(FiniteSystem { alpha })
    }

    /// Number of points in the phase space.
    pub fn size(&self) -> usize {
        self.alpha.len()
    }

    /// α(y).
    pub fn step(&self, y: usize) -> usize {
        self.alpha[y]
    }

    /// α^k(y).
    pub fn iterate(&self, y: usize, k: usize) -> usize {
        let mut x = y;
        for _ in 0..k {
            x = self.alpha[x];
        }
        x
    }

    /// The value table of α.
    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    /// All cycles of α, pairwise disjoint, ordered by smallest member, each
    /// rotated so its smallest point comes first.
    ///
    /// Every point of a finite functional graph falls into a cycle after at
    /// most N steps, so this enumerates the supports of all ergodic
    /// invariant measures.
    pub fn cycles(&self) -> Vec<Cycle> {
        let n = self.size();
        // 0 = unvisited, 1 = on the current path, 2 = resolved.
        let mut color = vec![0u8; n];
        let mut cycles: Vec<Cycle> = Vec::new();

        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut path = Vec::new();
            let mut x = start;
            while color[x] == 0 {
                color[x] = 1;
                path.push(x);
                x = self.alpha[x];
            }
            if color[x] == 1 {
                // Walked onto our own path: the suffix from x is a new cycle.
                let at = path.iter().position(|&p| p == x).unwrap();
                let mut points = path[at..].to_vec();
                let min_at = (0..points.len())
                    .min_by_key(|&i| points[i])
                    .unwrap();
                points.rotate_left(min_at);
                cycles.push(Cycle { points });
            }
            for p in path {
                color[p] = 2;
            }
        }

        cycles.sort_by_key(|c| c.points[0]);
        cycles
    }

    /// Points lying on some cycle, in increasing order.
    pub fn periodic_points(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = self
            .cycles()
            .iter()
            .flat_map(|c| c.points.iter().copied())
            .collect();
        pts.sort_unstable();
        pts
    }

    /// The uniform measure on a cycle, after checking the cycle really
    /// belongs to this system.
    pub fn cycle_measure(&self, c: &Cycle) -> Result<Measure> {
        c.validate(self)?;
        Ok(c.uniform_measure(self.size()))
    }

    /// The pushforward `(α_*μ)(x) = Σ_{α(y)=x} μ(y)`. Preserves total mass.
    pub fn pushforward(&self, mu: &Measure) -> Measure {
        let mut w = vec![0.0; self.size()];
        for (y, &m) in mu.weights().iter().enumerate() {
            w[self.alpha[y]] += m;
        }
        Measure { weights: w }
    }

    /// `‖α_*μ − μ‖∞`.
    pub fn invariance_residual(&self, mu: &Measure) -> f64 {
        self.pushforward(mu)
            .weights()
            .iter()
            .zip(mu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `α_*μ = μ` within `tol` in sup norm.
    pub fn is_invariant(&self, mu: &Measure, tol: f64) -> bool {
        self.invariance_residual(mu) <= tol
    }

    /// Decomposes `μ` against the cycle-measure basis: returns the
    /// coefficient vector `p` (p_c = mass of μ on cycle c, indexed like
    /// [`cycles`](Self::cycles)) and the sup-norm residual
    /// `‖μ − Σ_c p_c·unif_c‖∞`.
    ///
    /// Cycles are disjoint, so the least-squares system is diagonal and the
    /// coefficients are just per-cycle masses. The residual is 0 exactly
    /// when μ is invariant; off-cycle mass and non-uniform cycle mass both
    /// show up in it.
    pub fn cycle_mixture(&self, mu: &Measure) -> (Vec<f64>, f64) {
        let cycles = self.cycles();
        let mut coeffs = Vec::with_capacity(cycles.len());
        let mut recon = vec![0.0; self.size()];
        for c in &cycles {
            let p: f64 = c.points.iter().map(|&x| mu.weights()[x]).sum();
            for &x in &c.points {
                recon[x] += p / c.len() as f64;
            }
            coeffs.push(p);
        }
        let residual = recon
            .iter()
            .zip(mu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (coeffs, residual)
    }

    /// A random invariant measure: a uniformly sampled simplex point over
    /// the cycle-measure vertices.
    pub fn random_invariant_measure<R: Rng>(&self, rng: &mut R) -> Measure {
        let cycles = self.cycles();
        let coeffs = sample_simplex(cycles.len(), rng);
        let measures: Vec<Measure> = cycles
            .iter()
            .map(|c| c.uniform_measure(self.size()))
            .collect();
        mix(&measures, &coeffs).expect("cycle mixture is a valid measure")
    }
}

/// A cycle of α: distinct points `c₀,…,c_{L−1}` with `α(cᵢ) = c_{i+1 mod L}`,
/// stored with the smallest point first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    points: Vec<usize>,
}

impl Cycle {
    /// Wraps a point list as a cycle after verifying closure under the given
    /// system. Minimality is implied: a closed orbit visiting distinct
    /// points has no proper closed sublist.
    pub fn new(points: Vec<usize>, sys: &FiniteSystem) -> Result<Self> {
        let c = Cycle { points };
        c.validate(sys)?;
        Ok(c)
    }

    fn validate(&self, sys: &FiniteSystem) -> Result<()> {
        let l = self.points.len();
        if l == 0 {
            return Err(Error::NotACycle {
                reason: "empty point list".into(),
            });
        }
        let mut seen = vec![false; sys.size()];
        for &p in &self.points {
            if p >= sys.size() {
                return Err(Error::NotACycle {
                    reason: format!("point {p} out of range"),
                });
            }
            if seen[p] {
                return Err(Error::NotACycle {
                    reason: format!("repeated point {p}"),
                });
            }
            seen[p] = true;
        }
        for i in 0..l {
            let from = self.points[i];
            let to = self.points[(i + 1) % l];
            if sys.step(from) != to {
                return Err(Error::NotACycle {
                    reason: format!(
                        "alpha({from}) = {} but the list continues with {to}",
                        sys.step(from)
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.points.contains(&x)
    }

    /// Uniform measure `1/L` on the cycle, 0 elsewhere, as a vector over a
    /// phase space of `n` points.
    pub fn uniform_measure(&self, n: usize) -> Measure {
        let mut w = vec![0.0; n];
        let p = 1.0 / self.len() as f64;
        for &x in &self.points {
            w[x] = p;
        }
        Measure { weights: w }
    }

    /// Average of `f` over the cycle points.
    pub fn mean_of(&self, f: &[f64]) -> f64 {
        self.points.iter().map(|&x| f[x]).sum::<f64>() / self.len() as f64
    }
}

/// A Borel probability measure on `{0..N−1}`: a nonnegative vector summing
/// to 1. Weights are stored as given; normalization is validated, never
/// applied silently.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    /// Validates and wraps a probability vector, requiring the mass to be 1
    /// within [`MASS_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_mass_tol(weights, MASS_TOL)
    }

    /// Same as [`new`](Self::new) with an explicit mass tolerance, for
    /// ingesting externally produced vectors with looser rounding.
    pub fn with_mass_tol(weights: Vec<f64>, tol: f64) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NotAMeasure {
                    reason: format!("weight[{i}] = {w} is not a finite nonnegative real"),
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotAMeasure {
                reason: format!("weights sum to {sum}, not 1 (tolerance {tol})"),
            });
        }
        Ok(Measure { weights })
    }

    /// Point mass at `x`.
    pub fn dirac(n: usize, x: usize) -> Self {
        let mut w = vec![0.0; n];
        w[x] = 1.0;
        Measure { weights: w }
    }

    /// Uniform measure on the whole space.
    pub fn uniform(n: usize) -> Self {
        Measure {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The integral `μ(f) = Σ_x f(x)·μ(x)` of a function vector.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.weights.len());
        self.weights.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// Points carrying strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }
}

/// Convex combination `Σ coeffs[i]·measures[i]`. Coefficients must be
/// nonnegative and sum to 1 within [`MASS_TOL`]; the result is invariant
/// whenever all inputs are.
pub fn mix(measures: &[Measure], coeffs: &[f64]) -> Result<Measure> {
    if measures.len() != coeffs.len() {
        return Err(Error::LengthMismatch {
            what: "mixture coefficients",
            got: coeffs.len(),
            expected: measures.len(),
        });
    }
    if measures.is_empty() {
        return Err(Error::BadCoefficients {
            reason: "empty mixture".into(),
        });
    }
    for &c in coeffs {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::BadCoefficients {
                reason: format!("coefficient {c} is not a finite nonnegative real"),
            });
        }
    }
    let sum: f64 = coeffs.iter().sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(Error::BadCoefficients {
            reason: format!("coefficients sum to {sum}, not 1"),
        });
    }
    let n = measures[0].len();
    let mut w = vec![0.0; n];
    for (m, &c) in measures.iter().zip(coeffs) {
        if m.len() != n {
            return Err(Error::LengthMismatch {
                what: "mixture component",
                got: m.len(),
                expected: n,
            });
        }
        for (acc, &v) in w.iter_mut().zip(m.weights()) {
            *acc += c * v;
        }
    }
    Ok(Measure { weights: w })
}

/// A uniform sample from the probability simplex on `k` coordinates
/// (normalized Exp(1) draws).
pub fn sample_simplex<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    assert!(k > 0);
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            // Inverse-CDF Exp(1); gen() is in [0,1) so the argument of ln is
            // in (0,1].
            -(1.0 - rng.gen::<f64>()).ln()
        })
        .collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}
