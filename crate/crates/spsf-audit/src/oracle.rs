//! Pluggable agnostic learners for the fixed-mass halfspace class.
//!
//! Each oracle takes labeled samples and a mass target mu and returns a
//! halfspace, thresholded on the sample to empirical mass ceil(mu N)/N,
//! approximately minimizing disagreement with the labels. All oracles are
//! deterministic given the request seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{AuditError, Result};
use crate::halfspace::{fixed_mass_halfspace_empirical, normalize, Halfspace, MassConstraint};
use crate::metrics::disagreement;

/// Which learner to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleKind {
    /// Degree-1 Chow-vector direction; intended for mu = 1/2 under
    /// (near-)Gaussian marginals.
    Chow,
    /// Exhaustive direction grid; d <= 3 only.
    BruteForce,
    /// Seeded hill climbing with restarts; the practical choice for d > 3.
    LocalSearch,
}

impl OracleKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "chow" => Ok(OracleKind::Chow),
            "brute" => Ok(OracleKind::BruteForce),
            "local" => Ok(OracleKind::LocalSearch),
            other => Err(AuditError::UnknownOracle(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OracleKind::Chow => "chow",
            OracleKind::BruteForce => "brute",
            OracleKind::LocalSearch => "local",
        }
    }
}

/// One learning problem: labels in `data` are the classifier outputs
/// (possibly negated by the caller).
#[derive(Debug, Clone)]
pub struct OracleRequest<'a> {
    pub data: &'a Dataset,
    pub mu: MassConstraint,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl<'a> OracleRequest<'a> {
    pub fn new(data: &'a Dataset, mu: MassConstraint, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(AuditError::InvalidInput(format!(
                "epsilon must be in (0,1), got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AuditError::InvalidInput(format!(
                "delta must be in (0,1), got {delta}"
            )));
        }
        if data.len() < 2 {
            return Err(AuditError::InsufficientSamples { need: 2, got: data.len() });
        }
        Ok(OracleRequest { data, mu, epsilon, delta, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub halfspace: Halfspace,
    /// Empirical error of the returned halfspace against the request labels.
    pub train_disagreement: f64,
    pub oracle_name: String,
    /// Directions tried / hill-climb iterations.
    pub work_units: u64,
    /// Mass of the returned halfspace on the request data.
    pub empirical_mass: f64,
    /// Set when ties forced the empirical mass outside mu +- tolerance.
    pub mass_flagged: bool,
    /// Set by the Chow oracle when the label-weighted mean was (near) zero.
    pub degenerate: bool,
}

fn finish(
    req: &OracleRequest,
    halfspace: Halfspace,
    name: &str,
    work_units: u64,
    degenerate: bool,
) -> Result<OracleResult> {
    let train_disagreement = disagreement(req.data, req.data.labels(), &halfspace)?;
    let empirical_mass = halfspace.empirical_mass(req.data)?;
    let mass_flagged = (empirical_mass - req.mu.mu).abs() > req.mu.tolerance;
    Ok(OracleResult {
        halfspace,
        train_disagreement,
        oracle_name: name.to_string(),
        work_units,
        empirical_mass,
        mass_flagged,
        degenerate,
    })
}

/// Dispatch to the selected oracle.
pub fn learn_fixed_mass_halfspace(req: &OracleRequest, which: OracleKind) -> Result<OracleResult> {
    match which {
        OracleKind::Chow => chow_oracle(req),
        OracleKind::BruteForce => brute_force_oracle(req, BruteForceParams::default()),
        OracleKind::LocalSearch => local_search_oracle(req, LocalSearchParams::default()),
    }
}

const CHOW_DEGENERATE_NORM: f64 = 1e-10;

/// Direction from the degree-1 Chow vector `mean(y_i x_i)`, thresholded to
/// the requested mass. Under N(0, I) with labels from a homogeneous
/// halfspace, `E[y x] = sqrt(2/pi) v`, so the direction recovers the normal.
pub fn chow_oracle(req: &OracleRequest) -> Result<OracleResult> {
    let d = req.data.dim();
    let n = req.data.len() as f64;
    let mut mean = vec![0.0; d];
    for (x, l) in req.data.rows().zip(req.data.labels()) {
        let y = l.as_f64();
        for (m, &v) in mean.iter_mut().zip(x) {
            *m += y * v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (direction, degenerate) = if norm < CHOW_DEGENERATE_NORM {
        (random_unit_vector(&mut ChaCha8Rng::seed_from_u64(req.seed), d), true)
    } else {
        (normalize(&mean).expect("norm checked above"), false)
    };
    let h = fixed_mass_halfspace_empirical(direction, req.mu.mu, req.data)?;
    finish(req, h, "chow", 1, degenerate)
}

#[derive(Debug, Clone, Copy)]
pub struct BruteForceParams {
    /// Number of grid directions (d = 2 and d = 3; d = 1 always uses two).
    pub grid: usize,
}

impl Default for BruteForceParams {
    fn default() -> Self {
        BruteForceParams { grid: 720 }
    }
}

/// Enumerate unit directions on a grid, threshold each to the requested
/// mass, and return the minimum-disagreement candidate. Ties break toward
/// the smallest direction index. Rejects d > 3.
pub fn brute_force_oracle(req: &OracleRequest, params: BruteForceParams) -> Result<OracleResult> {
    let directions = grid_directions(req.data.dim(), params.grid)?;
    let best = evaluate_candidates(req, &directions)?;
    let (idx, err, h) = best;
    let mut result = finish(req, h, "brute", directions.len() as u64, false)?;
    debug_assert!((result.train_disagreement - err).abs() < 1e-12, "idx {idx}");
    result.train_disagreement = err;
    Ok(result)
}

/// The brute-force candidate directions for dimension d.
pub fn grid_directions(d: usize, grid: usize) -> Result<Vec<Vec<f64>>> {
    if grid == 0 {
        return Err(AuditError::InvalidInput("grid size must be >= 1".into()));
    }
    match d {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..grid)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect()),
        3 => Ok(fibonacci_sphere(grid)),
        _ => Err(AuditError::DimensionTooLarge(d)),
    }
}

fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Threshold every direction to the requested mass and pick the
/// minimum-disagreement candidate; ties by smallest index, independent of
/// parallel completion order.
fn evaluate_candidates(
    req: &OracleRequest,
    directions: &[Vec<f64>],
) -> Result<(usize, f64, Halfspace)> {
    let evaluated: Vec<(usize, f64, Halfspace)> = directions
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let h = fixed_mass_halfspace_empirical(w.clone(), req.mu.mu, req.data)
                .expect("validated request");
            let err = disagreement(req.data, req.data.labels(), &h).expect("validated request");
            (i, err, h)
        })
        .collect();
    evaluated
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| AuditError::InvalidInput("no candidate directions".into()))
}

#[derive(Debug, Clone, Copy)]
pub struct LocalSearchParams {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for LocalSearchParams {
    fn default() -> Self {
        LocalSearchParams { restarts: 10, iterations: 200 }
    }
}

/// Hill climbing over directions: propose `normalize(w + eta g)` for a
/// seeded Gaussian perturbation g, re-threshold to mass mu, keep the
/// proposal iff disagreement strictly decreases, halve eta on failure
/// (start 0.5, floor 1e-4). One restart is seeded from the Chow direction;
/// ties across restarts break toward the first found.
pub fn local_search_oracle(req: &OracleRequest, params: LocalSearchParams) -> Result<OracleResult> {
    if params.restarts < 1 {
        return Err(AuditError::InvalidInput("restarts must be >= 1".into()));
    }
    if params.iterations < 1 {
        return Err(AuditError::InvalidInput("iterations must be >= 1".into()));
    }
    let d = req.data.dim();
    let chow = chow_oracle(req)?;

    let mut best: Option<(f64, Halfspace)> = None;
    for restart in 0..params.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed.wrapping_add(restart as u64));
        let mut w = if restart == 0 {
            chow.halfspace.normal().to_vec()
        } else {
            random_unit_vector(&mut rng, d)
        };
        let mut h = fixed_mass_halfspace_empirical(w.clone(), req.mu.mu, req.data)?;
        let mut err = disagreement(req.data, req.data.labels(), &h)?;
        let mut eta = 0.5f64;
        for _ in 0..params.iterations {
            let perturbation: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let proposal: Vec<f64> = w
                .iter()
                .zip(&perturbation)
                .map(|(a, b)| a + eta * b)
                .collect();
            let Some(proposal) = normalize(&proposal) else {
                eta = (eta / 2.0).max(1e-4);
                continue;
            };
            let candidate = fixed_mass_halfspace_empirical(proposal.clone(), req.mu.mu, req.data)?;
            let candidate_err = disagreement(req.data, req.data.labels(), &candidate)?;
            if candidate_err < err {
                w = proposal;
                h = candidate;
                err = candidate_err;
            } else {
                eta = (eta / 2.0).max(1e-4);
            }
        }
        if best.as_ref().map_or(true, |(b, _)| err < *b) {
            best = Some((err, h));
        }
    }
    let (err, h) = best.expect("restarts >= 1");
    let work = (params.restarts * params.iterations) as u64;
    let mut result = finish(req, h, "local", work, false)?;
    result.train_disagreement = err;
    Ok(result)
}

pub(crate) fn random_unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, Provenance};
    use crate::generators::sample_gaussian;
    use crate::halfspace::kth_count;

    fn planted(d: usize, n: usize, normal: Vec<f64>, threshold: f64, seed: u64) -> Dataset {
        let h = Halfspace::new(normal, threshold).unwrap();
        let features = sample_gaussian(d, n, seed);
        let labels: Vec<Label> = features
            .chunks_exact(d)
            .map(|x| h.evaluate_unchecked(x))
            .collect();
        Dataset::from_flat(features, d, labels, Provenance::new("planted", seed)).unwrap()
    }

    fn mu(v: f64) -> MassConstraint {
        MassConstraint::new(v, 0.01).unwrap()
    }

    fn angle_between(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn chow_recovers_planted_direction() {
        let v = normalize(&[1.0, -2.0, 0.5, 3.0, -1.0, 0.2, 0.9, -0.4, 1.5, 0.3]).unwrap();
        let data = planted(10, 100_000, v.clone(), 0.0, 42);
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 1).unwrap();
        let res = chow_oracle(&req).unwrap();
        let angle = angle_between(res.halfspace.normal(), &v).to_degrees();
        assert!(angle <= 2.0, "angle {angle}");
        assert!(!res.degenerate);
    }

    #[test]
    fn chow_constant_labels_near_degenerate_direction() {
        // c = +1 everywhere: the Chow vector is the feature mean, which for
        // centered data is small but above the degeneracy threshold.
        let features = sample_gaussian(2, 100_000, 7);
        let data = Dataset::from_flat(
            features,
            2,
            vec![Label::Pos; 100_000],
            Provenance::new("const", 7),
        )
        .unwrap();
        let req = OracleRequest::new(&data, mu(0.3), 0.05, 0.05, 1).unwrap();
        let res = chow_oracle(&req).unwrap();
        assert!(!res.degenerate);
        // with constant +1 labels, every mass-0.3 halfspace disagrees on 70%
        assert!((res.train_disagreement - 0.7).abs() < 1e-9);
    }

    #[test]
    fn chow_degenerate_flag_on_zero_signal() {
        // labels exactly cancel the features: y_i x_i sums to zero
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]];
        let labels = vec![Label::Pos, Label::Neg, Label::Pos, Label::Neg];
        let data = Dataset::new(rows, labels, Provenance::new("zero", 0)).unwrap();
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 9).unwrap();
        let res = chow_oracle(&req).unwrap();
        assert!(res.degenerate);
    }

    #[test]
    fn brute_force_d1() {
        let data = planted(1, 1000, vec![1.0], 0.0, 3);
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 1).unwrap();
        let res = brute_force_oracle(&req, BruteForceParams::default()).unwrap();
        assert_eq!(res.halfspace.normal(), &[1.0]);
        assert!(res.train_disagreement <= 0.01);
    }

    #[test]
    fn brute_force_d2_recovers_planted_angle() {
        let theta = 17.0f64.to_radians();
        let v = vec![theta.cos(), theta.sin()];
        let data = planted(2, 50_000, v.clone(), 0.0, 5);
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 1).unwrap();
        let res = brute_force_oracle(&req, BruteForceParams::default()).unwrap();
        let angle = angle_between(res.halfspace.normal(), &v).to_degrees();
        assert!(angle <= 0.5 + 0.3, "angle {angle}");
        assert!(res.train_disagreement <= 0.01);
    }

    #[test]
    fn brute_force_rejects_large_dimension() {
        let data = planted(4, 100, normalize(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0, 1);
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 1).unwrap();
        assert!(matches!(
            brute_force_oracle(&req, BruteForceParams::default()),
            Err(AuditError::DimensionTooLarge(4))
        ));
    }

    #[test]
    fn local_search_planted_d10() {
        let v = normalize(&[0.3, -1.0, 2.0, 0.7, -0.2, 1.1, -0.8, 0.5, 0.1, -1.4]).unwrap();
        let data = planted(10, 50_000, v, 0.0, 99);
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 12).unwrap();
        let res = local_search_oracle(&req, LocalSearchParams::default()).unwrap();
        assert!(res.train_disagreement <= 0.02, "err {}", res.train_disagreement);
    }

    #[test]
    fn local_search_rejects_zero_iterations() {
        let data = planted(2, 100, vec![1.0, 0.0], 0.0, 1);
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 1).unwrap();
        let params = LocalSearchParams { restarts: 10, iterations: 0 };
        assert!(local_search_oracle(&req, params).is_err());
    }

    #[test]
    fn oracles_are_deterministic() {
        let data = planted(3, 5000, normalize(&[1.0, 1.0, -0.5]).unwrap(), 0.2, 8);
        let req = OracleRequest::new(&data, mu(0.4), 0.05, 0.05, 77).unwrap();
        for kind in [OracleKind::Chow, OracleKind::BruteForce, OracleKind::LocalSearch] {
            let a = learn_fixed_mass_halfspace(&req, kind).unwrap();
            let b = learn_fixed_mass_halfspace(&req, kind).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
    }

    #[test]
    fn null_labels_best_disagreement_near_half() {
        use rand::Rng;
        let features = sample_gaussian(2, 100_000, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let labels: Vec<Label> = (0..100_000)
            .map(|_| if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg })
            .collect();
        let data = Dataset::from_flat(features, 2, labels, Provenance::new("null", 31)).unwrap();
        let req = OracleRequest::new(&data, mu(0.5), 0.05, 0.05, 1).unwrap();
        let res = brute_force_oracle(&req, BruteForceParams::default()).unwrap();
        assert!(res.train_disagreement > 0.48, "err {}", res.train_disagreement);
    }

    #[test]
    fn mass_constraint_exact_count() {
        let data = planted(3, 9973, normalize(&[1.0, -1.0, 0.5]).unwrap(), 0.3, 13);
        for target in [0.2, 0.5, 0.77] {
            let req = OracleRequest::new(&data, mu(target), 0.05, 0.05, 4).unwrap();
            for kind in [OracleKind::Chow, OracleKind::BruteForce, OracleKind::LocalSearch] {
                let res = learn_fixed_mass_halfspace(&req, kind).unwrap();
                let count = data
                    .rows()
                    .filter(|x| res.halfspace.evaluate_unchecked(x).is_positive())
                    .count();
                assert_eq!(count, kth_count(target, data.len()), "{kind:?} at mu {target}");
                assert!(!res.mass_flagged);
            }
        }
    }

    #[test]
    fn brute_force_dominates_other_oracles() {
        let data = planted(2, 20_000, normalize(&[0.8, 0.6]).unwrap(), 0.1, 17);
        let req = OracleRequest::new(&data, mu(0.45), 0.05, 0.05, 21).unwrap();
        let brute = brute_force_oracle(&req, BruteForceParams::default()).unwrap();
        let chow = chow_oracle(&req).unwrap();
        let local = local_search_oracle(&req, LocalSearchParams::default()).unwrap();
        // grid resolution term for 720 directions under the theta/pi law
        let slack = 2.0 * std::f64::consts::PI / 720.0 / std::f64::consts::PI;
        assert!(brute.train_disagreement <= chow.train_disagreement + slack);
        assert!(brute.train_disagreement <= local.train_disagreement + slack);
    }
}
