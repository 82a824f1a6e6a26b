//! Subset measure, perturbation plans and randomized discrete derivatives.
//!
//! Coordinates are 0-based: `i` ranges over `0..n` and subsets are drawn from
//! `{0, ..., n-1} \ {i}`.

use rand::seq::index;
use rand::{Rng, RngCore};

use crate::error::{invalid, Error, Result};
use crate::perturbative::Functional;

/// Largest `n` accepted by [`telescoping_check`].
pub const ENUMERATION_CAP: usize = 12;

/// `ν(A) = 1 / (n · C(n-1, |A|))`.
pub fn nu_weight(n: usize, subset_size: usize) -> f64 {
    assert!(n >= 1 && subset_size < n, "ν needs |A| < n");
    1.0 / (n as f64 * binomial(n - 1, subset_size))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Draw `A ⊆ [n] \ {i}` with probability `ν(A)`.
///
/// Every size class carries total mass `1/n`, so the size is uniform on
/// `0..n` and the subset is uniform given its size. Returned sorted.
pub fn sample_nu_subset(n: usize, i: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(invalid("subset measure needs n >= 1"));
    }
    if i >= n {
        return Err(invalid(format!("coordinate {i} out of range for n = {n}")));
    }
    let size = rng.random_range(0..n);
    let mut subset: Vec<usize> = index::sample(rng, n - 1, size)
        .into_iter()
        .map(|j| if j >= i { j + 1 } else { j })
        .collect();
    subset.sort_unstable();
    Ok(subset)
}

/// Coordinate `i`, resample set `A`, and the paired configurations `(X, X')`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPlan<'a> {
    index: usize,
    subset: Vec<usize>,
    base: &'a [f64],
    replacement: &'a [f64],
}

impl<'a> PerturbationPlan<'a> {
    pub fn new(
        index: usize,
        mut subset: Vec<usize>,
        base: &'a [f64],
        replacement: &'a [f64],
    ) -> Result<Self> {
        let n = base.len();
        if replacement.len() != n {
            return Err(invalid("base and replacement configurations differ in length"));
        }
        if index >= n {
            return Err(invalid(format!("coordinate {index} out of range for n = {n}")));
        }
        subset.sort_unstable();
        subset.dedup();
        if subset.iter().any(|&j| j >= n) {
            return Err(invalid("resample set contains an out-of-range coordinate"));
        }
        if subset.binary_search(&index).is_ok() {
            return Err(invalid(format!("resample set must exclude coordinate {index}")));
        }
        Ok(Self {
            index,
            subset,
            base,
            replacement,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    /// `X^A`, or `X^{A ∪ i}` when `with_index` is set.
    pub fn hybrid(&self, with_index: bool) -> Vec<f64> {
        let mut x = self.base.to_vec();
        for &j in &self.subset {
            x[j] = self.replacement[j];
        }
        if with_index {
            x[self.index] = self.replacement[self.index];
        }
        x
    }
}

/// `Δ_i f = f(X) - f(X^i)` and `Δ_i f^A = f(X^A) - f(X^{A∪i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSample {
    pub index: usize,
    pub subset: Vec<usize>,
    pub delta: f64,
    pub delta_subset: f64,
    /// Number of functional evaluations spent (2 when `A = ∅`, else 4).
    pub evaluations: usize,
}

pub fn discrete_derivatives(f: &Functional, plan: &PerturbationPlan<'_>) -> Result<DerivativeSample> {
    let mut single = plan.base.to_vec();
    single[plan.index] = plan.replacement[plan.index];
    let fx = f.value(plan.base)?;
    let fxi = f.value(&single)?;
    let delta = fx - fxi;
    let (delta_subset, evaluations) = if plan.subset.is_empty() {
        (delta, 2)
    } else {
        let fa = f.value(&plan.hybrid(false))?;
        let fai = f.value(&plan.hybrid(true))?;
        (fa - fai, 4)
    };
    Ok(DerivativeSample {
        index: plan.index,
        subset: plan.subset.clone(),
        delta,
        delta_subset,
        evaluations,
    })
}

/// Scratch-buffer evaluation of `(Δ_i f, Δ_i f^A)` given a cached `f(X)`.
///
/// `scratch` must equal `x` on entry and is restored before returning.
pub(crate) fn derivative_pair(
    f: &Functional,
    x: &[f64],
    x_prime: &[f64],
    fx: f64,
    i: usize,
    subset: &[usize],
    scratch: &mut [f64],
) -> Result<(f64, f64)> {
    scratch[i] = x_prime[i];
    let fxi = f.value(scratch);
    scratch[i] = x[i];
    let fxi = fxi?;
    let delta = fx - fxi;
    if subset.is_empty() {
        return Ok((delta, delta));
    }
    for &j in subset {
        scratch[j] = x_prime[j];
    }
    let fa = f.value(scratch);
    scratch[i] = x_prime[i];
    let fai = f.value(scratch);
    scratch[i] = x[i];
    for &j in subset {
        scratch[j] = x[j];
    }
    Ok((delta, fa? - fai?))
}

/// Exhaustive `Σ_i Σ_{A ⊆ [n]\{i}} ν(A) Δ_i f^A` against `f(X) - f(X')`.
///
/// Returns `(lhs, rhs)`; the two agree identically in exact arithmetic.
pub fn telescoping_check(f: &Functional, x: &[f64], x_prime: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if x_prime.len() != n || n == 0 {
        return Err(invalid("configurations must be non-empty and of equal length"));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    // f(X^A) for every A ⊆ [n], indexed by bitmask.
    let mut values = Vec::with_capacity(1 << n);
    let mut buf = x.to_vec();
    for mask in 0usize..(1 << n) {
        for j in 0..n {
            buf[j] = if mask >> j & 1 == 1 { x_prime[j] } else { x[j] };
        }
        values.push(f.value(&buf)?);
    }
    let mut lhs = 0.0;
    for i in 0..n {
        let bit = 1 << i;
        for mask in 0usize..(1 << n) {
            if mask & bit != 0 {
                continue;
            }
            let weight = nu_weight(n, mask.count_ones() as usize);
            lhs += weight * (values[mask] - values[mask | bit]);
        }
    }
    let rhs = values[0] - values[(1 << n) - 1];
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn nu_is_a_probability_measure_for_each_index() {
        for n in 1..=10 {
            // Σ_k C(n-1, k) ν(k) = 1
            let total: f64 = (0..n).map(|k| binomial(n - 1, k) * nu_weight(n, k)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(nu_weight(2, 0), 0.5);
        assert_eq!(nu_weight(2, 1), 0.5);
    }

    #[test]
    fn nu_sampler_small_cases() {
        let mut r = rng(3);
        for _ in 0..100 {
            assert!(sample_nu_subset(1, 0, &mut r).unwrap().is_empty());
        }
        let draws = 100_000;
        let empty = (0..draws)
            .filter(|_| sample_nu_subset(2, 0, &mut r).unwrap().is_empty())
            .count();
        // Binomial(1e5, 1/2): sd ≈ 158.
        assert!((empty as f64 - 50_000.0).abs() < 4.0 * 158.2);
        assert!(sample_nu_subset(0, 0, &mut r).is_err());
        assert!(sample_nu_subset(3, 3, &mut r).is_err());
    }

    #[test]
    fn nu_sampler_size_classes_are_uniform() {
        let mut r = rng(4);
        let draws = 1_000_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let a = sample_nu_subset(3, 1, &mut r).unwrap();
            assert!(!a.contains(&1));
            counts[a.len()] += 1;
        }
        let p = 1.0 / 3.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn sum_functional_derivatives_are_subset_free() {
        let n = 5;
        let f = Functional::iid_sum(n);
        let x = [0.3, -1.2, 0.8, 2.0, -0.4];
        let xp = [1.1, 0.5, -0.7, 0.2, 0.9];
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            for mask in 0..(1usize << (n - 1)) {
                let a: Vec<usize> = others
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &j)| j)
                    .collect();
                let plan = PerturbationPlan::new(i, a, &x, &xp).unwrap();
                let d = discrete_derivatives(&f, &plan).unwrap();
                let want = (x[i] - xp[i]) / (n as f64).sqrt();
                assert!((d.delta - want).abs() < 1e-14);
                assert!((d.delta_subset - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn max_functional_worked_example() {
        let f = Functional::maximum(2);
        let x = [0.3, 0.9];
        let xp = [0.5, 0.1];
        let plan = PerturbationPlan::new(0, vec![1], &x, &xp).unwrap();
        let d = discrete_derivatives(&f, &plan).unwrap();
        assert_eq!(d.delta, 0.0);
        assert!((d.delta_subset + 0.2).abs() < 1e-15);
        assert_eq!(d.evaluations, 4);
    }

    #[test]
    fn empty_subset_reuses_single_derivative() {
        let f = Functional::product(3);
        let x = [0.3, 1.9, -0.5];
        let xp = [0.7, 0.2, 1.5];
        let plan = PerturbationPlan::new(2, vec![], &x, &xp).unwrap();
        let d = discrete_derivatives(&f, &plan).unwrap();
        assert_eq!(d.delta.to_bits(), d.delta_subset.to_bits());
        assert_eq!(d.evaluations, 2);
        let mut scratch = x.to_vec();
        let fx = f.value(&x).unwrap();
        let (a, b) = derivative_pair(&f, &x, &xp, fx, 2, &[], &mut scratch).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(scratch, x);
    }

    #[test]
    fn degenerate_replacement_gives_zero() {
        let f = Functional::maximum(4);
        let x = [0.1, 0.5, 0.2, 0.9];
        let plan = PerturbationPlan::new(1, vec![0, 3], &x, &x).unwrap();
        let d = discrete_derivatives(&f, &plan).unwrap();
        assert_eq!((d.delta, d.delta_subset), (0.0, 0.0));
    }

    #[test]
    fn plan_validation() {
        let x = [0.0; 3];
        assert!(PerturbationPlan::new(1, vec![1], &x, &x).is_err());
        assert!(PerturbationPlan::new(3, vec![], &x, &x).is_err());
        assert!(PerturbationPlan::new(0, vec![5], &x, &x).is_err());
        assert!(PerturbationPlan::new(0, vec![], &x, &x[..2]).is_err());
    }

    #[test]
    fn non_finite_evaluation_is_tagged() {
        let f = Functional::new("inv", 2, |x: &[f64]| 1.0 / x[0]);
        let x = [1.0, 2.0];
        let xp = [0.0, 1.0];
        let plan = PerturbationPlan::new(0, vec![], &x, &xp).unwrap();
        match discrete_derivatives(&f, &plan) {
            Err(Error::Evaluation { context, .. }) => assert!(context.contains("[0.0, 2.0]")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn telescoping_small_cases() {
        let f = Functional::product(1);
        let (l, r) = telescoping_check(&f, &[2.0], &[3.0]).unwrap();
        assert_eq!(l, r);
        let f = Functional::iid_sum(3);
        let x = [0.2, -0.4, 1.3];
        let (l, r) = telescoping_check(&f, &x, &x).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let xp = [1.0, 0.1, -2.0];
        let (l, r) = telescoping_check(&f, &x, &xp).unwrap();
        assert!((l - r).abs() <= 1e-12);
        let big = vec![0.0; 13];
        assert!(matches!(
            telescoping_check(&Functional::iid_sum(13), &big, &big),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
