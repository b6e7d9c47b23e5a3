//! Halfspace geometry and the fixed-positive-rate constraint machinery.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{AuditError, Result};

const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// A halfspace `{x : w . x >= t}` with unit normal `w`.
///
/// Doubles as a subgroup indicator and as a binary classifier. Ties at
/// `w . x = t` always classify positive, so evaluation is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    normal: Vec<f64>,
    threshold: f64,
}

impl Halfspace {
    /// Construct with renormalization. Errors if the normal is (near) zero,
    /// non-finite, or the threshold is non-finite.
    pub fn new(normal: Vec<f64>, threshold: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(AuditError::InvalidInput("normal must have dimension >= 1".into()));
        }
        if normal.iter().any(|v| !v.is_finite()) || !threshold.is_finite() {
            return Err(AuditError::InvalidInput("non-finite halfspace parameter".into()));
        }
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < UNIT_NORM_TOLERANCE {
            return Err(AuditError::InvalidInput("normal vector is (near) zero".into()));
        }
        let normal = normal.into_iter().map(|v| v / norm).collect();
        Ok(Halfspace { normal, threshold })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed projection `w . x`.
    pub fn project(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x)
    }

    /// `sign(w . x - t)` with `sign(0) := +1`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Label> {
        if x.len() != self.normal.len() {
            return Err(AuditError::DimensionMismatch {
                expected: self.normal.len(),
                got: x.len(),
            });
        }
        Ok(self.evaluate_unchecked(x))
    }

    /// As `evaluate` but skips the dimension check; callers iterate over a
    /// dataset whose dimension was validated once.
    #[inline]
    pub fn evaluate_unchecked(&self, x: &[f64]) -> Label {
        if dot(&self.normal, x) >= self.threshold {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    /// The halfspace with negated normal and threshold. Off the tie set this
    /// flips every label.
    pub fn negated(&self) -> Halfspace {
        Halfspace {
            normal: self.normal.iter().map(|v| -v).collect(),
            threshold: -self.threshold,
        }
    }

    /// Fraction of dataset rows classified positive.
    pub fn empirical_mass(&self, data: &Dataset) -> Result<f64> {
        if data.dim() != self.dim() {
            return Err(AuditError::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        let pos = data
            .rows()
            .filter(|x| self.evaluate_unchecked(x).is_positive())
            .count();
        Ok(pos as f64 / data.len() as f64)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < UNIT_NORM_TOLERANCE {
        None
    } else {
        Some(v.iter().map(|x| x / norm).collect())
    }
}

/// Target positive rate `Pr{h(x) = 1} = mu` with a tolerance for flagging
/// empirical deviation (degenerate ties can force the rate away from mu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassConstraint {
    pub mu: f64,
    pub tolerance: f64,
}

impl MassConstraint {
    pub fn new(mu: f64, tolerance: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(AuditError::InvalidInput(format!(
                "mass target mu must be in (0,1), got {mu}"
            )));
        }
        if !(tolerance >= 0.0) {
            return Err(AuditError::InvalidInput("tolerance must be >= 0".into()));
        }
        Ok(MassConstraint { mu, tolerance })
    }
}

/// Standard normal quantile: the `z` with `Phi(z) = p`.
///
/// Rational approximation (Acklam) refined with one Halley step on the
/// erf-based CDF; absolute error below 1e-9 across p in [1e-12, 1-1e-12].
pub fn gaussian_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AuditError::InvalidInput(format!(
            "quantile argument must be in (0,1), got {p}"
        )));
    }
    let x = acklam_inverse(p);
    // One Halley refinement against the high-precision CDF. In the upper
    // tail Phi(x) saturates toward 1, so the residual is formed from the
    // survival function instead: 1 - p is exact for p >= 0.5 (Sterbenz) and
    // Q(x) keeps full relative precision.
    let e = if p >= 0.5 {
        (1.0 - p) - standard_normal_sf(x)
    } else {
        standard_normal_cdf(x) - p
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// `Phi(x)` via erfc.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Survival function `1 - Phi(x)`, accurate in relative terms for large x.
pub fn standard_normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

fn acklam_inverse(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// The member of `H_mu` under N(0, I) with the given unit normal: by
/// rotational invariance the projection is standard normal, so the
/// threshold is `Phi^-1(1 - mu)`.
pub fn fixed_mass_halfspace_gaussian(normal: Vec<f64>, mu: f64) -> Result<Halfspace> {
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(AuditError::InvalidInput(format!(
            "normal must be unit length, got norm {norm}"
        )));
    }
    let t = gaussian_quantile(1.0 - mu)?;
    Halfspace::new(normal, t)
}

/// The empirical surrogate of `H_mu`: threshold set to the k-th largest
/// projection with `k = ceil(mu * N)`, so exactly k samples satisfy
/// `w . x >= t` whenever the projections are distinct. With duplicate
/// projections the `>=` rule can only include more samples, never fewer.
pub fn fixed_mass_halfspace_empirical(normal: Vec<f64>, mu: f64, data: &Dataset) -> Result<Halfspace> {
    let h0 = Halfspace::new(normal, 0.0)?;
    if h0.dim() != data.dim() {
        return Err(AuditError::DimensionMismatch {
            expected: h0.dim(),
            got: data.dim(),
        });
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(AuditError::InvalidInput(format!(
            "mass target mu must be in (0,1), got {mu}"
        )));
    }
    let mut projections: Vec<f64> = data.rows().map(|x| h0.project(x)).collect();
    let t = kth_largest(&mut projections, kth_count(mu, data.len()));
    // Reuse h0's normal verbatim: renormalizing again can perturb it by an
    // ulp and flip a boundary sample, breaking the exact-count guarantee.
    Ok(Halfspace { normal: h0.normal, threshold: t })
}

/// `k = ceil(mu * N)`, clamped into [1, N].
pub fn kth_count(mu: f64, n: usize) -> usize {
    ((mu * n as f64).ceil() as usize).clamp(1, n)
}

/// The k-th largest value (1-based), via selection. Mutates the buffer.
pub(crate) fn kth_largest(values: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    let (_, kth, _) = values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    *kth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use proptest::prelude::*;

    fn data_1d(xs: &[f64]) -> Dataset {
        Dataset::new(
            xs.iter().map(|&x| vec![x]).collect(),
            vec![Label::Pos; xs.len()],
            Provenance::new("test", 0),
        )
        .unwrap()
    }

    #[test]
    fn evaluate_tie_break() {
        let h = Halfspace::new(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(h.evaluate(&[0.0, 0.0]).unwrap(), Label::Pos);
        assert_eq!(h.evaluate(&[-3.0, 5.0]).unwrap(), Label::Neg);
    }

    #[test]
    fn evaluate_arithmetic() {
        let h = Halfspace::new(vec![0.6, 0.8], 1.0).unwrap();
        assert_eq!(h.evaluate(&[1.0, 1.0]).unwrap(), Label::Pos); // 1.4 >= 1
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let h = Halfspace::new(vec![1.0, 0.0], 0.0).unwrap();
        assert!(h.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn renormalizes_on_construction() {
        let h = Halfspace::new(vec![3.0, 4.0], 1.0).unwrap();
        let norm: f64 = h.normal().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(gaussian_quantile(0.5).unwrap(), 0.0);
        assert!((gaussian_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((gaussian_quantile(0.841344746).unwrap() - 1.0).abs() < 1e-6);
        assert!(gaussian_quantile(0.0).is_err());
        assert!(gaussian_quantile(1.0).is_err());
    }

    /// Independent oracle: bisection on the erf-based CDF. The upper tail
    /// bisects on the survival function, which does not saturate near 1.
    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let below = if p >= 0.5 {
                standard_normal_sf(mid) > 1.0 - p
            } else {
                standard_normal_cdf(mid) < p
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_matches_bisection_oracle() {
        for &p in &[1e-12, 1e-6, 0.01, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0 - 1e-6, 1.0 - 1e-12] {
            let got = gaussian_quantile(p).unwrap();
            let want = quantile_by_bisection(p);
            assert!(
                (got - want).abs() <= 1e-9,
                "p={p}: got {got}, oracle {want}"
            );
        }
    }

    proptest! {
        #[test]
        fn quantile_symmetry_and_monotonicity(p in 1e-9f64..0.5) {
            let lo = gaussian_quantile(p).unwrap();
            let hi = gaussian_quantile(1.0 - p).unwrap();
            prop_assert!((lo + hi).abs() < 1e-9);
            let mid = gaussian_quantile(p + 0.25).unwrap();
            prop_assert!(lo < mid);
        }

        #[test]
        fn negation_flips_labels_off_tie_set(
            (w, x) in (1usize..6).prop_flat_map(|d| (
                proptest::collection::vec(-10.0f64..10.0, d),
                proptest::collection::vec(-10.0f64..10.0, d),
            )),
            t in -5.0f64..5.0,
        ) {
            prop_assume!(w.iter().map(|v| v*v).sum::<f64>().sqrt() > 1e-6);
            let h = Halfspace::new(w, t).unwrap();
            prop_assume!((h.project(&x) - h.threshold()).abs() > 1e-9);
            let flipped = h.negated();
            prop_assert_eq!(
                h.evaluate(&x).unwrap().flipped(),
                flipped.evaluate(&x).unwrap()
            );
        }
    }

    #[test]
    fn fixed_mass_gaussian_examples() {
        let h = fixed_mass_halfspace_gaussian(vec![1.0, 0.0], 0.5).unwrap();
        assert_eq!(h.threshold(), 0.0);
        let h = fixed_mass_halfspace_gaussian(vec![1.0, 0.0], 0.025).unwrap();
        assert!((h.threshold() - 1.959964).abs() < 1e-5);
        let h = fixed_mass_halfspace_gaussian(vec![1.0, 0.0], 0.975).unwrap();
        assert!((h.threshold() + 1.959964).abs() < 1e-5);
        assert!(fixed_mass_halfspace_gaussian(vec![2.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn empirical_threshold_order_statistic() {
        let data = data_1d(&[-2.0, -1.0, 1.0, 2.0]);
        let h = fixed_mass_halfspace_empirical(vec![1.0], 0.5, &data).unwrap();
        assert_eq!(h.threshold(), 1.0);
        assert_eq!(h.empirical_mass(&data).unwrap(), 0.5);
    }

    #[test]
    fn empirical_degenerate_ties() {
        let data = data_1d(&[0.0; 5]);
        let h = fixed_mass_halfspace_empirical(vec![1.0], 0.4, &data).unwrap();
        assert_eq!(h.threshold(), 0.0);
        // tie collapse: >= rule admits everything
        assert_eq!(h.empirical_mass(&data).unwrap(), 1.0);
        assert!((h.empirical_mass(&data).unwrap() - 0.4).abs() > 0.5);
    }

    #[test]
    fn empirical_threshold_tracks_gaussian_quantile() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let data = data_1d(&xs);
        let h = fixed_mass_halfspace_empirical(vec![1.0], 0.3, &data).unwrap();
        let want = gaussian_quantile(0.7).unwrap();
        assert!((h.threshold() - want).abs() < 0.1);
    }

    proptest! {
        #[test]
        fn empirical_mass_exact_on_distinct_projections(
            mu in 0.05f64..0.95,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..97).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let data = data_1d(&xs);
            let h = fixed_mass_halfspace_empirical(vec![1.0], mu, &data).unwrap();
            let k = kth_count(mu, 97);
            let count = data.rows().filter(|x| h.evaluate_unchecked(x).is_positive()).count();
            prop_assert_eq!(count, k);
        }
    }
}
