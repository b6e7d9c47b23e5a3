//! Seeded synthetic instances: Gaussian data with planted classifiers, the
//! discrete hiring-table scenario, and the modular-projection hard
//! instances with their witness halfspaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Dataset, Label, Provenance};
use crate::error::{AuditError, Result};
use crate::halfspace::{normalize, Halfspace};

/// A seeded uniformly random unit direction in R^d.
pub fn random_unit(d: usize, seed: u64) -> Vec<f64> {
    crate::oracle::random_unit_vector(&mut ChaCha8Rng::seed_from_u64(seed), d)
}

/// N i.i.d. standard normal vectors in R^d, row-major flat buffer.
/// Deterministic given the seed.
pub fn sample_gaussian(d: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Ground-truth halfspace classifier plus independent label noise.
#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub normal: Vec<f64>,
    pub threshold: f64,
    /// Probability of flipping each label, in [0, 0.5).
    pub label_noise: f64,
}

impl PlantedSpec {
    pub fn new(normal: Vec<f64>, threshold: f64, label_noise: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&label_noise) {
            return Err(AuditError::InvalidInput(format!(
                "label noise must be in [0, 0.5), got {label_noise}"
            )));
        }
        let normal = normalize(&normal)
            .ok_or_else(|| AuditError::InvalidInput("planted normal is (near) zero".into()))?;
        Ok(PlantedSpec { normal, threshold, label_noise })
    }

    pub fn halfspace(&self) -> Halfspace {
        Halfspace::new(self.normal.clone(), self.threshold).expect("validated")
    }
}

/// `sign(v . x - t)` labels with each one flipped independently with
/// probability `label_noise`.
pub fn plant_classifier(features: &[f64], dim: usize, spec: &PlantedSpec, seed: u64) -> Vec<Label> {
    let h = spec.halfspace();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    features
        .chunks_exact(dim)
        .map(|x| {
            let label = h.evaluate_unchecked(x);
            if spec.label_noise > 0.0 && rng.gen_bool(spec.label_noise) {
                label.flipped()
            } else {
                label
            }
        })
        .collect()
}

/// Gaussian features labeled by a planted halfspace. Returns the dataset
/// and the planted classifier.
pub fn planted_dataset(dim: usize, n: usize, spec: &PlantedSpec, seed: u64) -> Result<(Dataset, Halfspace)> {
    if spec.normal.len() != dim {
        return Err(AuditError::DimensionMismatch { expected: dim, got: spec.normal.len() });
    }
    let features = sample_gaussian(dim, n, seed);
    // disjoint stream for the noise flips
    let labels = plant_classifier(&features, dim, spec, seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let meta = Provenance::new("gaussian-planted", seed)
        .with_param("d", dim)
        .with_param("n", n)
        .with_param("noise", spec.label_noise)
        .with_param("t_plant", spec.threshold);
    Ok((Dataset::from_flat(features, dim, labels, meta)?, spec.halfspace()))
}

/// `u mod T`, in [0, T) including for negative u.
pub fn mod_period(u: f64, period: f64) -> f64 {
    let m = u.rem_euclid(period);
    // rem_euclid can return exactly `period` when u is a tiny negative number
    if m >= period {
        0.0
    } else {
        m
    }
}

/// Parameters for the modular-projection hard instance: a secret unit
/// direction, a period T, and Gaussian noise of scale sigma on the
/// projection before the modular reduction.
#[derive(Debug, Clone)]
pub struct ClweSpec {
    pub secret: Vec<f64>,
    pub period: f64,
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
}

impl ClweSpec {
    pub fn new(secret: Vec<f64>, period: f64, sigma: f64, n: usize, seed: u64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(AuditError::InvalidInput(format!("period must be > 0, got {period}")));
        }
        if !(sigma >= 0.0) {
            return Err(AuditError::InvalidInput(format!("sigma must be >= 0, got {sigma}")));
        }
        if n == 0 {
            return Err(AuditError::InvalidInput("sample count must be >= 1".into()));
        }
        let secret = normalize(&secret)
            .ok_or_else(|| AuditError::InvalidInput("secret vector is (near) zero".into()))?;
        Ok(ClweSpec { secret, period, sigma, n, seed })
    }

    pub fn dim(&self) -> usize {
        self.secret.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Labels carry the modular signal of the secret direction.
    Alternative,
    /// Labels are unbiased coins, independent of the features.
    Null,
}

/// The witness pair from the hardness construction:
/// `h1(x) = sgn(s.x - T/6)` and `h2(x) = sgn(-s.x + T/3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClweWitnesses {
    pub h1: Halfspace,
    pub h2: Halfspace,
}

#[derive(Debug, Clone)]
pub struct ClweInstance {
    pub dataset: Dataset,
    /// Present for alternative instances only.
    pub witnesses: Option<ClweWitnesses>,
}

/// Build a hard instance. Alternative: `c(x) = +1` iff
/// `mod_T(s.x + z) <= T/2` with `z ~ N(0, sigma^2)`. Null: labels are
/// uniform on {-1, +1}, independent of x.
pub fn clwe_instance(spec: &ClweSpec, hypothesis: Hypothesis) -> Result<ClweInstance> {
    let d = spec.dim();
    let features = sample_gaussian(d, spec.n, spec.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let labels: Vec<Label> = match hypothesis {
        Hypothesis::Alternative => features
            .chunks_exact(d)
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let y = mod_period(crate::halfspace::dot(&spec.secret, x) + spec.sigma * z, spec.period);
                if y <= spec.period / 2.0 {
                    Label::Pos
                } else {
                    Label::Neg
                }
            })
            .collect(),
        Hypothesis::Null => (0..spec.n)
            .map(|_| if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg })
            .collect(),
    };
    let kind = match hypothesis {
        Hypothesis::Alternative => "clwe-alt",
        Hypothesis::Null => "clwe-null",
    };
    let meta = Provenance::new(kind, spec.seed)
        .with_param("d", d)
        .with_param("n", spec.n)
        .with_param("T", spec.period)
        .with_param("sigma", spec.sigma);
    let dataset = Dataset::from_flat(features, d, labels, meta)?;
    let witnesses = match hypothesis {
        Hypothesis::Alternative => Some(clwe_witnesses(spec)?),
        Hypothesis::Null => None,
    };
    Ok(ClweInstance { dataset, witnesses })
}

/// The witness halfspaces for a given secret and period. Under the
/// `w.x >= t` convention, `sgn(-s.x + T/3)` has normal `-s` and threshold
/// `-T/3`.
pub fn clwe_witnesses(spec: &ClweSpec) -> Result<ClweWitnesses> {
    let h1 = Halfspace::new(spec.secret.clone(), spec.period / 6.0)?;
    let h2 = Halfspace::new(
        spec.secret.iter().map(|v| -v).collect(),
        -spec.period / 3.0,
    )?;
    Ok(ClweWitnesses { h1, h2 })
}

/// Weighted unfairness of both witnesses on a dataset; the max is the
/// detection statistic.
pub fn witness_unfairness(
    witnesses: &ClweWitnesses,
    dataset: &Dataset,
    confidence: f64,
) -> Result<(crate::metrics::FairnessMeasurement, crate::metrics::FairnessMeasurement)> {
    let m1 = crate::metrics::weighted_unfairness(dataset, dataset.labels(), &witnesses.h1, confidence)?;
    let m2 = crate::metrics::weighted_unfairness(dataset, dataset.labels(), &witnesses.h2, confidence)?;
    Ok((m1, m2))
}

/// The hiring-table scenario: 200 individuals in four equal race x gender
/// cells of 50. Hired (+1): all black men and all white women. Features
/// are (race, gender) with black = -1, white = +1, men = -1, women = +1.
pub fn table_example_dataset() -> Dataset {
    let mut rows = Vec::with_capacity(200);
    let mut labels = Vec::with_capacity(200);
    for &(race, gender, hired) in &[
        (-1.0, -1.0, true),  // black men: all hired
        (-1.0, 1.0, false),  // black women: none hired
        (1.0, -1.0, false),  // white men: none hired
        (1.0, 1.0, true),    // white women: all hired
    ] {
        for _ in 0..50 {
            rows.push(vec![race, gender]);
            labels.push(if hired { Label::Pos } else { Label::Neg });
        }
    }
    Dataset::new(rows, labels, Provenance::new("table1", 0)).expect("static table")
}

/// The corner subgroup (black women) as a halfspace over the +-1 encoding:
/// normal (-1, +1)/sqrt(2) separates the cell at threshold 1.
pub fn table_corner_black_women() -> Halfspace {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Halfspace::new(vec![-s, s], 1.0).expect("static halfspace")
}

/// Exact weighted unfairness of a homogeneous halfspace subgroup at angle
/// theta to a homogeneous halfspace classifier under N(0, I):
/// `(1/2) |theta/pi - 1/2|`, from the agreement identity and the Gaussian
/// disagreement law `Pr{c != g} = theta/pi`.
pub fn closed_form_gamma_homogeneous(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(AuditError::InvalidInput(format!(
            "theta must be in [0, pi], got {theta}"
        )));
    }
    Ok(0.5 * (theta / std::f64::consts::PI - 0.5).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{deviation, weighted_unfairness};

    #[test]
    fn gaussian_sampling_deterministic() {
        assert_eq!(sample_gaussian(3, 100, 5), sample_gaussian(3, 100, 5));
        assert_ne!(sample_gaussian(3, 100, 5), sample_gaussian(3, 100, 6));
    }

    #[test]
    fn gaussian_symmetry_and_independence() {
        let xs = sample_gaussian(1, 1_000_000, 8);
        let pos = xs.iter().filter(|&&x| x >= 0.0).count() as f64 / 1e6;
        assert!((pos - 0.5).abs() < 0.002, "pos rate {pos}");

        let xy = sample_gaussian(2, 1_000_000, 9);
        let quadrant = xy
            .chunks_exact(2)
            .filter(|p| p[0] >= 0.0 && p[1] >= 0.0)
            .count() as f64
            / 1e6;
        assert!((quadrant - 0.25).abs() < 0.002, "quadrant rate {quadrant}");
    }

    #[test]
    fn gaussian_moment_self_check() {
        let n = 100_000;
        let xs = sample_gaussian(2, n, 12);
        for coord in 0..2 {
            let vals: Vec<f64> = xs.chunks_exact(2).map(|p| p[coord]).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt());
            assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn planting_noiseless_matches_halfspace() {
        let spec = PlantedSpec::new(vec![1.0, 2.0], 0.3, 0.0).unwrap();
        let (data, h) = planted_dataset(2, 5000, &spec, 3).unwrap();
        for (x, &l) in data.rows().zip(data.labels()) {
            assert_eq!(h.evaluate_unchecked(x), l);
        }
        // t_plant = 0 gives positive rate 1/2 up to Hoeffding width
        let spec0 = PlantedSpec::new(vec![1.0, 2.0], 0.0, 0.0).unwrap();
        let (data0, _) = planted_dataset(2, 100_000, &spec0, 4).unwrap();
        let rate = data0.labels().iter().filter(|l| l.is_positive()).count() as f64 / 1e5;
        assert!((rate - 0.5).abs() < 0.01);
    }

    #[test]
    fn planting_noise_fraction() {
        let spec = PlantedSpec::new(vec![0.0, 1.0], 0.0, 0.1).unwrap();
        let (data, h) = planted_dataset(2, 100_000, &spec, 5).unwrap();
        let flips = data
            .rows()
            .zip(data.labels())
            .filter(|(x, &l)| h.evaluate_unchecked(x) != l)
            .count() as f64
            / 1e5;
        assert!((flips - 0.1).abs() < 0.005, "flip rate {flips}");
    }

    #[test]
    fn mod_period_range_and_periodicity() {
        let t = 0.3;
        for &u in &[-3.0, -0.15, -1e-9, 0.0, 0.3 - 1e-9, 3.3] {
            let m = mod_period(u, t);
            assert!((0.0..t).contains(&m), "mod_T({u}) = {m}");
        }
        for k in -7i32..=7 {
            let u = 0.11;
            let shifted = mod_period(u + k as f64 * t, t);
            assert!((shifted - u).abs() < 1e-12, "k={k}: {shifted}");
        }
    }

    #[test]
    fn clwe_alternative_global_rate_half() {
        let spec = ClweSpec::new(
            normalize(&sample_gaussian(20, 1, 77)).unwrap(),
            0.3,
            0.003,
            200_000,
            14,
        )
        .unwrap();
        let inst = clwe_instance(&spec, Hypothesis::Alternative).unwrap();
        let rate = inst.dataset.labels().iter().filter(|l| l.is_positive()).count() as f64
            / spec.n as f64;
        assert!((rate - 0.5).abs() < 0.005, "rate {rate}");
        assert!(inst.witnesses.is_some());
    }

    #[test]
    fn clwe_conditional_rate_on_agreement_band() {
        // restricted to s.x in [T/6, T/3], c = -1 needs |z| >= T/6
        let t = 0.3;
        let spec = ClweSpec::new(
            normalize(&sample_gaussian(5, 1, 3)).unwrap(),
            t,
            0.01 * t,
            500_000,
            15,
        )
        .unwrap();
        let inst = clwe_instance(&spec, Hypothesis::Alternative).unwrap();
        let mut in_band = 0usize;
        let mut pos_in_band = 0usize;
        for (x, l) in inst.dataset.rows().zip(inst.dataset.labels()) {
            let proj = crate::halfspace::dot(&spec.secret, x);
            if (t / 6.0..=t / 3.0).contains(&proj) {
                in_band += 1;
                if l.is_positive() {
                    pos_in_band += 1;
                }
            }
        }
        assert!(in_band > 1000);
        let rate = pos_in_band as f64 / in_band as f64;
        assert!(rate >= 0.95, "conditional rate {rate}");
    }

    #[test]
    fn clwe_null_gammas_within_hoeffding_width() {
        use rand::SeedableRng;
        let spec = ClweSpec::new(
            normalize(&sample_gaussian(5, 1, 21)).unwrap(),
            0.3,
            0.003,
            50_000,
            16,
        )
        .unwrap();
        let inst = clwe_instance(&spec, Hypothesis::Null).unwrap();
        let width = crate::metrics::hoeffding_half_width(0.95, spec.n);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let w = crate::oracle::random_unit_vector(&mut rng, 5);
            let g = Halfspace::new(w, rng.gen_range(-1.0..1.0)).unwrap();
            let m = weighted_unfairness(&inst.dataset, inst.dataset.labels(), &g, 0.95).unwrap();
            // 3x: three estimated probabilities enter gamma
            assert!(m.gamma <= 3.0 * width, "gamma {} width {width}", m.gamma);
        }
    }

    #[test]
    fn table_scenario_rates() {
        let data = table_example_dataset();
        let hire_rate =
            data.labels().iter().filter(|l| l.is_positive()).count() as f64 / data.len() as f64;
        assert_eq!(hire_rate, 0.5);

        // fair along each single axis
        let women = Halfspace::new(vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(deviation(&data, data.labels(), &women).unwrap(), 0.0);
        let black = Halfspace::new(vec![-1.0, 0.0], 0.0).unwrap();
        assert_eq!(deviation(&data, data.labels(), &black).unwrap(), 0.0);

        // unfair on the corner
        let bw = table_corner_black_women();
        let m = weighted_unfairness(&data, data.labels(), &bw, 0.95).unwrap();
        assert_eq!(m.gamma, 0.125);
    }

    #[test]
    fn closed_form_gamma_values() {
        use std::f64::consts::PI;
        assert_eq!(closed_form_gamma_homogeneous(0.0).unwrap(), 0.25);
        assert_eq!(closed_form_gamma_homogeneous(PI / 2.0).unwrap(), 0.0);
        assert!((closed_form_gamma_homogeneous(PI / 4.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(closed_form_gamma_homogeneous(-0.1).is_err());
        assert!(closed_form_gamma_homogeneous(PI + 0.1).is_err());
    }
}
