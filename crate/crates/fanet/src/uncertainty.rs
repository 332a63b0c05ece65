//! Gaussian position beliefs: sampling swarm states from the belief
//! distribution and estimating the link-existence probability.
//!
//! Each UAV's belief is a mean position plus a 3x3 covariance. The
//! link-existence probability between two UAVs is the mass of the combined
//! displacement Gaussian `N(mean_i - mean_j, cov_i + cov_j)` inside the
//! ball of radius D, estimated by Monte Carlo.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{Attitude, Vec3};

/// Symmetry deviation tolerated before a covariance is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated before a covariance is rejected.
pub const EIGENVALUE_TOL: f64 = -1e-9;
/// Diagonal jitter used when a near-singular covariance fails to factor.
const CHOLESKY_JITTER: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum UncertaintyError {
    #[error("covariance of UAV {id} is not symmetric positive semi-definite")]
    CovarianceNotPsd { id: usize },
    #[error("link endpoints must differ, got {0} twice")]
    SameNode(usize),
    #[error("UAV id {id} out of range for a {count}-UAV belief")]
    UnknownId { id: usize, count: usize },
    #[error("at least one Monte Carlo sample required")]
    InsufficientSamples,
}

/// Tracked belief about one UAV: mean position, position covariance, and
/// the attitude estimate used to aim its beam.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    pub mean: Vec3,
    pub covariance: Matrix3<f64>,
    pub attitude: Attitude,
}

impl PositionEstimate {
    /// Belief with zero uncertainty.
    pub fn exact(mean: Vec3, attitude: Attitude) -> Self {
        PositionEstimate { mean, covariance: Matrix3::zeros(), attitude }
    }

    /// Checks symmetry (deviation below 1e-9) and eigenvalues (above -1e-9).
    pub fn validate(&self, id: usize) -> Result<(), UncertaintyError> {
        if !is_psd(&self.covariance) {
            return Err(UncertaintyError::CovarianceNotPsd { id });
        }
        Ok(())
    }
}

fn is_psd(m: &Matrix3<f64>) -> bool {
    let asym = (m - m.transpose()).abs().max();
    if asym > SYMMETRY_TOL {
        return false;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().all(|&e| e >= EIGENVALUE_TOL)
}

/// Square-root factor L with L L^T ~= cov, robust to semi-definite input.
fn sqrt_factor(cov: &Matrix3<f64>, id: usize) -> Result<Matrix3<f64>, UncertaintyError> {
    if cov.iter().all(|&x| x == 0.0) {
        return Ok(Matrix3::zeros());
    }
    let sym = (cov + cov.transpose()) * 0.5;
    if let Some(chol) = sym.cholesky() {
        return Ok(chol.l());
    }
    if let Some(chol) = (sym + Matrix3::identity() * CHOLESKY_JITTER).cholesky() {
        return Ok(chol.l());
    }
    // Semi-definite with a structurally zero direction: fall back to the
    // eigendecomposition with negatives clamped.
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&e| e < EIGENVALUE_TOL) {
        return Err(UncertaintyError::CovarianceNotPsd { id });
    }
    let sqrt_vals = Vector3::from_iterator(eig.eigenvalues.iter().map(|&e| e.max(0.0).sqrt()));
    Ok(eig.eigenvectors * Matrix3::from_diagonal(&sqrt_vals))
}

/// The controller's belief about the whole swarm at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmBelief {
    /// One estimate per UAV, indexed by id 0..K-1.
    pub estimates: Vec<PositionEstimate>,
    /// Belief timestamp in seconds.
    pub timestamp: f64,
}

impl SwarmBelief {
    pub fn new(estimates: Vec<PositionEstimate>, timestamp: f64) -> Self {
        SwarmBelief { estimates, timestamp }
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// True when every covariance is exactly zero, so a sample draw equals
    /// the means and Monte Carlo estimation degenerates to one evaluation.
    pub fn is_deterministic(&self) -> bool {
        self.estimates.iter().all(|e| e.covariance.iter().all(|&x| x == 0.0))
    }

    pub fn validate(&self) -> Result<(), UncertaintyError> {
        for (id, est) in self.estimates.iter().enumerate() {
            est.validate(id)?;
        }
        Ok(())
    }

    fn check_id(&self, id: usize) -> Result<(), UncertaintyError> {
        if id >= self.len() {
            return Err(UncertaintyError::UnknownId { id, count: self.len() });
        }
        Ok(())
    }
}

/// Precomputed square-root factors for repeated swarm draws.
pub struct SwarmSampler {
    means: Vec<Vector3<f64>>,
    factors: Vec<Matrix3<f64>>,
}

impl SwarmSampler {
    pub fn new(belief: &SwarmBelief) -> Result<Self, UncertaintyError> {
        let mut means = Vec::with_capacity(belief.len());
        let mut factors = Vec::with_capacity(belief.len());
        for (id, est) in belief.estimates.iter().enumerate() {
            est.validate(id)?;
            means.push(Vector3::new(est.mean.x, est.mean.y, est.mean.z));
            factors.push(sqrt_factor(&est.covariance, id)?);
        }
        Ok(SwarmSampler { means, factors })
    }

    /// Draws one position per UAV, independent across UAVs.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Vec<Vec3> {
        self.means
            .iter()
            .zip(&self.factors)
            .map(|(mean, factor)| {
                let z = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                let p = mean + factor * z;
                Vec3::new(p.x, p.y, p.z)
            })
            .collect()
    }
}

/// Draws one true-position realization of the whole swarm from the belief.
/// Deterministic given the seed.
pub fn sample_swarm(belief: &SwarmBelief, seed: u64) -> Result<Vec<Vec3>, UncertaintyError> {
    let sampler = SwarmSampler::new(belief)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok(sampler.draw(&mut rng))
}

/// A Monte Carlo probability estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Probability that UAVs `i` and `j` are within distance `d_max` of each
/// other, under the combined displacement Gaussian
/// `N(mean_i - mean_j, cov_i + cov_j)`.
pub fn link_existence_probability(
    belief: &SwarmBelief,
    i: usize,
    j: usize,
    d_max: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ProbabilityEstimate, UncertaintyError> {
    if i == j {
        return Err(UncertaintyError::SameNode(i));
    }
    belief.check_id(i)?;
    belief.check_id(j)?;
    if n_samples == 0 {
        return Err(UncertaintyError::InsufficientSamples);
    }
    let ei = &belief.estimates[i];
    let ej = &belief.estimates[j];
    ei.validate(i)?;
    ej.validate(j)?;

    let mean = Vector3::new(ei.mean.x - ej.mean.x, ei.mean.y - ej.mean.y, ei.mean.z - ej.mean.z);
    let factor = sqrt_factor(&(ei.covariance + ej.covariance), i)?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let z = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let dx = mean + factor * z;
        if dx.norm() <= d_max {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    Ok(ProbabilityEstimate {
        probability: p,
        std_error: (p * (1.0 - p) / n_samples as f64).sqrt(),
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn belief_of(means: &[(f64, f64, f64)], cov: Matrix3<f64>) -> SwarmBelief {
        let estimates = means
            .iter()
            .map(|&(x, y, z)| PositionEstimate {
                mean: Vec3::new(x, y, z),
                covariance: cov,
                attitude: Attitude::level(),
            })
            .collect();
        SwarmBelief::new(estimates, 0.0)
    }

    #[test]
    fn zero_covariance_samples_equal_means() {
        let belief = belief_of(&[(1.0, 2.0, 3.0), (-4.0, 0.0, 9.0)], Matrix3::zeros());
        let draw = sample_swarm(&belief, 7).unwrap();
        assert_eq!(draw[0], Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(draw[1], Vec3::new(-4.0, 0.0, 9.0));
    }

    // Law-of-large-numbers check: with isotropic sigma^2 the per-axis
    // sample mean lands within 4 sigma / sqrt(n).
    #[test]
    fn sample_mean_converges() {
        let sigma = 2.0;
        let belief = belief_of(&[(10.0, -5.0, 3.0)], Matrix3::identity() * sigma * sigma);
        let sampler = SwarmSampler::new(&belief).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let n = 100_000usize;
        let mut acc = [0.0f64; 3];
        for _ in 0..n {
            let p = sampler.draw(&mut rng)[0];
            acc[0] += p.x;
            acc[1] += p.y;
            acc[2] += p.z;
        }
        let bound = 4.0 * sigma / (n as f64).sqrt();
        for (mean_hat, mean) in acc.iter().zip([10.0, -5.0, 3.0]) {
            assert!((mean_hat / n as f64 - mean).abs() < bound);
        }
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let belief = belief_of(&[(0.0, 0.0, 0.0), (5.0, 5.0, 1.0)], Matrix3::identity());
        assert_eq!(sample_swarm(&belief, 1234).unwrap(), sample_swarm(&belief, 1234).unwrap());
        assert_ne!(sample_swarm(&belief, 1234).unwrap(), sample_swarm(&belief, 1235).unwrap());
    }

    #[test]
    fn non_psd_covariance_rejected() {
        let mut cov = Matrix3::identity();
        cov[(0, 0)] = -1.0;
        let belief = belief_of(&[(0.0, 0.0, 0.0)], cov);
        assert_eq!(
            sample_swarm(&belief, 1),
            Err(UncertaintyError::CovarianceNotPsd { id: 0 })
        );
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let mut cov = Matrix3::identity();
        cov[(0, 1)] = 0.5;
        let belief = belief_of(&[(0.0, 0.0, 0.0)], cov);
        assert!(sample_swarm(&belief, 1).is_err());
    }

    #[test]
    fn probability_one_when_deterministic_and_in_range() {
        let belief = belief_of(&[(0.0, 0.0, 0.0), (50.0, 0.0, 0.0)], Matrix3::zeros());
        let p = link_existence_probability(&belief, 0, 1, 100.0, 500, 3).unwrap();
        assert_eq!(p.probability, 1.0);
        assert_eq!(p.std_error, 0.0);
    }

    #[test]
    fn probability_zero_when_deterministic_and_out_of_range() {
        let belief = belief_of(&[(0.0, 0.0, 0.0), (150.0, 0.0, 0.0)], Matrix3::zeros());
        let p = link_existence_probability(&belief, 0, 1, 100.0, 500, 3).unwrap();
        assert_eq!(p.probability, 0.0);
    }

    #[test]
    fn same_node_rejected() {
        let belief = belief_of(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)], Matrix3::zeros());
        assert_eq!(
            link_existence_probability(&belief, 1, 1, 100.0, 10, 3),
            Err(UncertaintyError::SameNode(1))
        );
    }

    // Chi-square oracle: with coincident means and combined covariance
    // sigma^2 I, the hit probability is P(chi2_3 <= (D / sigma)^2).
    #[test]
    fn probability_matches_chi_square_cdf() {
        let chi2 = ChiSquared::new(3.0).unwrap();
        let sigma = 2.0;
        // Half the variance on each endpoint so the sum is sigma^2 I.
        let cov = Matrix3::identity() * (sigma * sigma / 2.0);
        let belief = belief_of(&[(7.0, -3.0, 2.0), (7.0, -3.0, 2.0)], cov);
        for (k, ratio) in [0.8, 1.2, 1.6, 2.0, 2.6].iter().enumerate() {
            let d = ratio * sigma;
            let expected = chi2.cdf((d / sigma).powi(2));
            let est =
                link_existence_probability(&belief, 0, 1, d, 20_000, 40 + k as u64).unwrap();
            let se = est.std_error.max(1e-4);
            assert!(
                (est.probability - expected).abs() <= 3.0 * se,
                "D/sigma {ratio}: {} vs {expected}",
                est.probability
            );
        }
    }

    #[test]
    fn probability_monotone_in_distance_with_common_randomness() {
        let cov = Matrix3::identity() * 9.0;
        let belief = belief_of(&[(0.0, 0.0, 0.0), (95.0, 0.0, 0.0)], cov);
        let mut last = 0.0;
        for d in [80.0, 90.0, 100.0, 110.0, 120.0] {
            let p = link_existence_probability(&belief, 0, 1, d, 4000, 77).unwrap();
            assert!(p.probability >= last, "D {d}");
            last = p.probability;
        }
    }

    #[test]
    fn probability_symmetric_under_common_randomness() {
        let cov = Matrix3::identity() * 16.0;
        let belief = belief_of(&[(0.0, 0.0, 0.0), (98.0, 10.0, 2.0)], cov);
        let pij = link_existence_probability(&belief, 0, 1, 100.0, 4000, 5).unwrap();
        let pji = link_existence_probability(&belief, 1, 0, 100.0, 4000, 5).unwrap();
        // The displacement mean flips sign but the radial distribution is
        // identical, and the draws share the seed.
        assert!((pij.probability - pji.probability).abs() < 3.0 * (pij.std_error + 1e-3));
    }

    #[test]
    fn probability_invariant_under_joint_scaling() {
        let sigma2 = 25.0;
        let base = belief_of(
            &[(0.0, 0.0, 0.0), (90.0, 20.0, 3.0)],
            Matrix3::identity() * sigma2,
        );
        let lambda = 3.0;
        let scaled = belief_of(
            &[(0.0, 0.0, 0.0), (270.0, 60.0, 9.0)],
            Matrix3::identity() * sigma2 * lambda * lambda,
        );
        let p1 = link_existence_probability(&base, 0, 1, 100.0, 20_000, 11).unwrap();
        let p2 = link_existence_probability(&scaled, 0, 1, 100.0 * lambda, 20_000, 12).unwrap();
        let se = (p1.std_error.powi(2) + p2.std_error.powi(2)).sqrt().max(1e-4);
        assert!((p1.probability - p2.probability).abs() < 3.0 * se);
    }

    #[test]
    fn semidefinite_covariance_sampled_in_subspace() {
        // Variance only along y: x and z stay at the mean up to the
        // factorization jitter (1e-12 variance, so 1e-6 deviations).
        let mut cov = Matrix3::zeros();
        cov[(1, 1)] = 4.0;
        let belief = belief_of(&[(1.0, 2.0, 3.0)], cov);
        let sampler = SwarmSampler::new(&belief).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = sampler.draw(&mut rng)[0];
            assert!((p.x - 1.0).abs() < 1e-4);
            assert!((p.z - 3.0).abs() < 1e-4);
        }
        // And the y spread is real.
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let far = (0..200).any(|_| distance(sampler.draw(&mut rng)[0], Vec3::new(1.0, 2.0, 3.0)) > 1.0);
        assert!(far);
    }
}
