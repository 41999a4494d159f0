//! Partitions of unity on the finite phase space.
//!
//! A partition of unity is a finite set `D = {g₁,…,g_k}` of nonnegative
//! functions with `g₁+…+g_k ≡ 1`. This module provides the constructions
//! the t-entropy machinery needs: the finest indicator partition, pairwise
//! joins, the pullback-join `{g·(h∘αⁿ)}` that transports a partition
//! backwards through the dynamics, and the oscillation refinement that
//! makes `Aⁿg` nearly constant on every support.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{sample_simplex, FiniteSystem};
use crate::transfer::TransferOperator;
use crate::{Error, Result};

/// Tolerance for the pointwise-sum invariant of stored partitions.
pub const PARTITION_TOL: f64 = 1e-10;

/// A partition of unity: nonnegative vectors over `{0..N−1}` with pointwise
/// sum 1. Identically-zero elements are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    n: usize,
    elements: Vec<Vec<f64>>,
}

impl PartitionOfUnity {
    /// Validates a candidate element list: entries must be ≥ −tol (values in
    /// `[−tol, 0)` are clamped to 0), pointwise sums must be within `tol` of
    /// 1, and identically-zero elements are dropped.
    pub fn validate(candidates: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let n = match candidates.first() {
            Some(first) => first.len(),
            None => {
                return Err(Error::Invalid("partition has no elements".into()));
            }
        };
        if n == 0 {
            return Err(Error::Invalid("partition elements are empty".into()));
        }
        let mut elements = Vec::with_capacity(candidates.len());
        for (j, mut el) in candidates.into_iter().enumerate() {
            if el.len() != n {
                return Err(Error::LengthMismatch {
                    what: "partition element",
                    got: el.len(),
                    expected: n,
                });
            }
            for (x, v) in el.iter_mut().enumerate() {
                if !v.is_finite() || *v < -tol {
                    return Err(Error::Invalid(format!(
                        "partition element {j} has entry {v} at point {x}"
                    )));
                }
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            if el.iter().any(|&v| v > 0.0) {
                elements.push(el);
            }
        }

        let mut worst_point = 0;
        let mut worst_sum = f64::NAN;
        let mut worst_dev = -1.0;
        for x in 0..n {
            let sum: f64 = elements.iter().map(|el| el[x]).sum();
            let dev = (sum - 1.0).abs();
            if dev > worst_dev {
                worst_dev = dev;
                worst_point = x;
                worst_sum = sum;
            }
        }
        if worst_dev > tol {
            return Err(Error::NotAPartition {
                point: worst_point,
                sum: worst_sum,
            });
        }
        Ok(PartitionOfUnity { n, elements })
    }

    fn from_parts(n: usize, candidates: Vec<Vec<f64>>) -> Self {
        let p = PartitionOfUnity::validate(candidates, PARTITION_TOL)
            .expect("internal construction yields a partition of unity");
        debug_assert_eq!(p.n, n);
        p
    }

    /// The trivial partition `{1}`.
    pub fn unit(n: usize) -> Self {
        PartitionOfUnity {
            n,
            elements: vec![vec![1.0; n]],
        }
    }

    /// The finest partition `{1_x : x ∈ X}`: one indicator per point.
    pub fn singletons(n: usize) -> Self {
        let elements = (0..n)
            .map(|x| {
                let mut e = vec![0.0; n];
                e[x] = 1.0;
                e
            })
            .collect();
        PartitionOfUnity { n, elements }
    }

    /// A random partition into `k` parts: for each point independently, a
    /// uniform sample from the `(k−1)`-simplex distributed over the
    /// elements. Deterministic in `seed`.
    pub fn random(sys: &FiniteSystem, k: usize, seed: u64) -> Self {
        assert!(k >= 1);
        let n = sys.size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut elements = vec![vec![0.0; n]; k];
        for x in 0..n {
            for (element, v) in elements.iter_mut().zip(sample_simplex(k, &mut rng)) {
                element[x] = v;
            }
        }
        Self::from_parts(n, elements)
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Number of elements `k`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Vec<f64>] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec<f64>> {
        self.elements.iter()
    }

    /// The common refinement `{d·e : d∈D, e∈E}`, zero products dropped.
    pub fn join(&self, other: &PartitionOfUnity) -> PartitionOfUnity {
        assert_eq!(self.n, other.n);
        let mut products = Vec::new();
        for d in &self.elements {
            for e in &other.elements {
                let p: Vec<f64> = d.iter().zip(e).map(|(a, b)| a * b).collect();
                if p.iter().any(|&v| v > 0.0) {
                    products.push(p);
                }
            }
        }
        Self::from_parts(self.n, products)
    }
}

/// The partition `{g·(h∘αⁿ) : g∈D, h∈E}`. It is a partition of unity
/// because `Σ_h h∘αⁿ ≡ 1`; zero products are dropped.
pub fn pullback_join(
    sys: &FiniteSystem,
    d: &PartitionOfUnity,
    e: &PartitionOfUnity,
    n: usize,
) -> PartitionOfUnity {
    assert!(n >= 1);
    assert_eq!(d.n_points(), sys.size());
    assert_eq!(e.n_points(), sys.size());
    let size = sys.size();
    let mut products = Vec::new();
    for g in d.iter() {
        for h in e.iter() {
            let p: Vec<f64> = (0..size).map(|x| g[x] * h[sys.iterate(x, n)]).collect();
            if p.iter().any(|&v| v > 0.0) {
                products.push(p);
            }
        }
    }
    PartitionOfUnity::from_parts(size, products)
}

/// The oscillation refinement: a partition `E` such that for every `g ∈ D`
/// and every `h ∈ E`, the oscillation of `Aⁿg` over `{h > 0}` is strictly
/// below `eps`.
///
/// For each `g`, the range `[a,b]` of `Aⁿg` is covered by overlapping hat
/// functions on a grid of pitch `≤ eps/2`; each hat has open support of
/// diameter `≤ eps`, so composing with `Aⁿg` bounds the oscillation
/// strictly (points on the boundary get hat value 0 and leave the support).
/// The per-`g` partitions are then joined.
pub fn oscillation_refinement(
    t: &TransferOperator,
    d: &PartitionOfUnity,
    n: usize,
    eps: f64,
) -> PartitionOfUnity {
    assert!(n >= 1);
    assert!(eps > 0.0);
    assert_eq!(d.n_points(), t.size());
    let mut acc = PartitionOfUnity::unit(t.size());
    for g in d.iter() {
        let v = t.power_apply(n, g);
        let hats = hat_partition(&v, eps);
        acc = acc.join(&hats);
    }
    acc
}

/// Hat-function partition composed with a value vector: elements
/// `f_i ∘ v` where `{f_i}` is the triangular partition of unity on the
/// range of `v` with grid pitch `≤ eps/2`. A constant `v` yields `{1}`.
fn hat_partition(v: &[f64], eps: f64) -> PartitionOfUnity {
    let n = v.len();
    let a = v.iter().copied().fold(f64::INFINITY, f64::min);
    let b = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if a == b {
        return PartitionOfUnity::unit(n);
    }
    let segments = ((b - a) / (eps / 2.0)).ceil() as usize;
    let pitch = (b - a) / segments as f64;
    // Hat i is centered at a + i·pitch, i = 0..=segments.
    let mut elements = Vec::new();
    for i in 0..=segments {
        let center = a + i as f64 * pitch;
        let el: Vec<f64> = v
            .iter()
            .map(|&t| (1.0 - (t - center).abs() / pitch).max(0.0))
            .collect();
        if el.iter().any(|&x| x > 0.0) {
            elements.push(el);
        }
    }
    PartitionOfUnity::from_parts(n, elements)
}

/// Oscillation of `values` over the support of `h`: `sup − inf` of
/// `values(x)` across points with `h(x) > 0`, or 0 for empty support.
pub fn oscillation_on_support(values: &[f64], h: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&v, &hx) in values.iter().zip(h) {
        if hx > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi < lo {
        0.0
    } else {
        hi - lo
    }
}
