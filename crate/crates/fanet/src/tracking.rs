//! Swarm mobility simulation and controller-side position tracking.
//!
//! Mobility advances the true UAV states (Gauss-Markov by default, random
//! waypoint as an alternative) inside the map box. Tracking runs one
//! unscented Kalman filter per UAV on a constant-velocity motion model with
//! position-only measurements; the emitted [`PositionEstimate`]s form the
//! belief the routing protocols consume.
//!
//! Process noise can be expressed in the velocity frame (more noise along
//! the direction of motion than across it), which makes the tracked
//! covariance ellipsoids elongate along each UAV's heading.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Attitude, UavState, Vec3};
use crate::rng;
use crate::uncertainty::PositionEstimate;

type State = SVector<f64, 6>;
type StateCov = SMatrix<f64, 6, 6>;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("measurement contains non-finite components")]
    NonFiniteMeasurement,
    #[error("state covariance lost positive definiteness (filter divergence)")]
    CovarianceNotPsd,
}

// ---------------------------------------------------------------------------
// Mobility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MobilityModel {
    /// Velocity random walk with memory parameter alpha in [0, 1];
    /// alpha = 1 keeps the velocity constant between steps.
    GaussMarkov { memory: f64 },
    /// Straight flight towards a uniformly drawn waypoint, redrawn on
    /// arrival.
    RandomWaypoint,
}

/// Mobility configuration. Positions live in `[0, bounds.x] x [0, bounds.y]
/// x [0, bounds.z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct MobilityParams {
    pub bounds: Vec3,
    pub speed_min: f64,
    pub speed_max: f64,
    pub model: MobilityModel,
    /// Seconds between mobility (and measurement) updates.
    pub update_interval: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            bounds: Vec3::new(200.0, 200.0, 10.0),
            speed_min: 3.0,
            speed_max: 8.0,
            model: MobilityModel::GaussMarkov { memory: 0.8 },
            update_interval: 0.1,
        }
    }
}

/// Per-step heading deviation scale (radians) for the Gauss-Markov model.
const GM_HEADING_SIGMA: f64 = 0.5;
/// Per-step climb-angle deviation scale (radians).
const GM_CLIMB_SIGMA: f64 = 0.15;
/// Climb angles stay shallow; the map box is only a few meters tall.
const GM_CLIMB_MAX: f64 = 0.3;

/// Mobility simulator owning the per-UAV model state (waypoints for the
/// random-waypoint model).
pub struct MobilitySim<R: Rng> {
    params: MobilityParams,
    rng: R,
    waypoints: Vec<Option<Vec3>>,
}

impl<R: Rng> MobilitySim<R> {
    pub fn new(params: MobilityParams, n_uavs: usize, rng: R) -> Self {
        MobilitySim { params, rng, waypoints: vec![None; n_uavs] }
    }

    /// Advances every UAV by `dt` seconds.
    pub fn step(&mut self, states: &[UavState], dt: f64) -> Vec<UavState> {
        states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let v = match self.params.model {
                    MobilityModel::GaussMarkov { memory } => self.gauss_markov_velocity(s, memory),
                    MobilityModel::RandomWaypoint => self.waypoint_velocity(k, s, dt),
                };
                advance(s, v, dt, self.params.bounds)
            })
            .collect()
    }

    fn gauss_markov_velocity(&mut self, s: &UavState, memory: f64) -> Vec3 {
        let p = &self.params;
        let alpha = memory.clamp(0.0, 1.0);
        let drift = (1.0 - alpha * alpha).sqrt();
        let speed = s.velocity.norm();
        let (heading, climb) = if speed > 1e-12 {
            (s.velocity.y.atan2(s.velocity.x), (s.velocity.z / speed).asin())
        } else {
            (s.attitude.yaw, s.attitude.pitch)
        };
        let target = 0.5 * (p.speed_min + p.speed_max);
        let sigma_speed = 0.25 * (p.speed_max - p.speed_min);
        let w: f64 = self.rng.sample(StandardNormal);
        let speed = (alpha * speed + (1.0 - alpha) * target + drift * sigma_speed * w)
            .clamp(p.speed_min, p.speed_max);
        let w: f64 = self.rng.sample(StandardNormal);
        let heading = heading + drift * GM_HEADING_SIGMA * w;
        let w: f64 = self.rng.sample(StandardNormal);
        let climb = (alpha * climb + drift * GM_CLIMB_SIGMA * w).clamp(-GM_CLIMB_MAX, GM_CLIMB_MAX);
        Vec3::new(
            speed * climb.cos() * heading.cos(),
            speed * climb.cos() * heading.sin(),
            speed * climb.sin(),
        )
    }

    fn waypoint_velocity(&mut self, k: usize, s: &UavState, dt: f64) -> Vec3 {
        let p = self.params;
        let speed = s.velocity.norm().clamp(p.speed_min, p.speed_max);
        let arrived = match self.waypoints[k] {
            Some(w) => (w - s.position).norm() <= speed * dt,
            None => true,
        };
        if arrived {
            self.waypoints[k] = Some(Vec3::new(
                self.rng.random_range(0.0..=p.bounds.x),
                self.rng.random_range(0.0..=p.bounds.y),
                self.rng.random_range(0.0..=p.bounds.z),
            ));
        }
        let to_target = self.waypoints[k].expect("waypoint set above") - s.position;
        let dist = to_target.norm();
        if dist < 1e-12 || p.speed_max <= 0.0 {
            return Vec3::ZERO;
        }
        let speed = if p.speed_max > p.speed_min {
            self.rng.random_range(p.speed_min..=p.speed_max)
        } else {
            p.speed_min
        };
        to_target * (speed / dist)
    }
}

/// Moves one UAV, reflecting at the box walls and re-deriving the attitude
/// from the velocity direction.
fn advance(s: &UavState, velocity: Vec3, dt: f64, bounds: Vec3) -> UavState {
    let mut pos = s.position + velocity * dt;
    let mut vel = velocity;
    for (p, v, bound) in [
        (&mut pos.x, &mut vel.x, bounds.x),
        (&mut pos.y, &mut vel.y, bounds.y),
        (&mut pos.z, &mut vel.z, bounds.z),
    ] {
        if *p < 0.0 {
            *p = -*p;
            *v = -*v;
        }
        if *p > bound {
            *p = 2.0 * bound - *p;
            *v = -*v;
        }
        *p = p.clamp(0.0, bound);
    }
    UavState {
        id: s.id,
        position: pos,
        velocity: vel,
        attitude: Attitude::from_velocity(vel).unwrap_or(s.attitude),
    }
}

/// One stateless mobility step: advances all UAVs by `dt` with a stream
/// derived from `seed`. The random-waypoint model draws fresh waypoints
/// here; use [`MobilitySim`] for persistent trajectories.
pub fn step_mobility(
    states: &[UavState],
    params: &MobilityParams,
    dt: f64,
    seed: u64,
) -> Vec<UavState> {
    let mut sim = MobilitySim::new(*params, states.len(), rng::stream(seed, &[rng::tag::MOBILITY]));
    sim.step(states, dt)
}

// ---------------------------------------------------------------------------
// Unscented Kalman filter
// ---------------------------------------------------------------------------

/// Process-noise model for the constant-velocity filter, as a continuous
/// white-noise acceleration density (m^2/s^3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessNoise {
    /// Same acceleration density on every axis.
    Isotropic { density: f64 },
    /// Acceleration density expressed in the velocity frame: along the
    /// heading, horizontally across it, and vertically. Captures that a
    /// cruising UAV surprises the tracker mostly along its direction of
    /// motion.
    MotionAligned { along: f64, cross: f64, vertical: f64 },
}

impl ProcessNoise {
    /// Acceleration spectral density as a world-frame 3x3 matrix for a body
    /// moving with `velocity`.
    fn world_matrix(&self, velocity: &Vector3<f64>) -> Matrix3<f64> {
        match *self {
            ProcessNoise::Isotropic { density } => Matrix3::identity() * density,
            ProcessNoise::MotionAligned { along, cross, vertical } => {
                let speed = velocity.norm();
                if speed < 1e-9 {
                    // No heading to align with; spread the budget evenly.
                    return Matrix3::identity() * ((along + cross + vertical) / 3.0);
                }
                let e_along = velocity / speed;
                let up = Vector3::new(0.0, 0.0, 1.0);
                let mut e_cross = up.cross(&e_along);
                if e_cross.norm() < 1e-9 {
                    e_cross = Vector3::new(1.0, 0.0, 0.0);
                }
                let e_cross = e_cross.normalize();
                let e_vert = e_along.cross(&e_cross);
                let basis = Matrix3::from_columns(&[e_along, e_cross, e_vert]);
                basis * Matrix3::from_diagonal(&Vector3::new(along, cross, vertical))
                    * basis.transpose()
            }
        }
    }
}

/// UKF configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct UkfParams {
    /// Sigma-point spread parameter.
    pub alpha: f64,
    /// Prior-distribution parameter (2 is optimal for Gaussians).
    pub beta: f64,
    /// Secondary scaling parameter.
    pub kappa: f64,
    pub process_noise: ProcessNoise,
    /// Measurement noise standard deviation in meters.
    pub measurement_noise_std: f64,
    /// Initial position standard deviation in meters.
    pub initial_position_std: f64,
    /// Initial velocity standard deviation in m/s.
    pub initial_velocity_std: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        UkfParams {
            alpha: 1e-3,
            beta: 2.0,
            kappa: 0.0,
            process_noise: ProcessNoise::MotionAligned { along: 4.0, cross: 1.0, vertical: 0.25 },
            measurement_noise_std: 1.0,
            initial_position_std: 2.0,
            initial_velocity_std: 5.0,
        }
    }
}

/// Constant-velocity unscented Kalman filter for one UAV.
#[derive(Debug, Clone)]
pub struct UkfTracker {
    params: UkfParams,
    mean: State,
    cov: StateCov,
    last_attitude: Attitude,
}

impl UkfTracker {
    /// Initializes the track at a first position measurement with zero
    /// velocity.
    pub fn new(first_measurement: Vec3, params: UkfParams) -> Self {
        let mut cov = StateCov::zeros();
        let p0 = params.initial_position_std.powi(2);
        let v0 = params.initial_velocity_std.powi(2);
        for k in 0..3 {
            cov[(k, k)] = p0;
            cov[(k + 3, k + 3)] = v0;
        }
        UkfTracker {
            params,
            mean: State::from_column_slice(&[
                first_measurement.x,
                first_measurement.y,
                first_measurement.z,
                0.0,
                0.0,
                0.0,
            ]),
            cov,
            last_attitude: Attitude::level(),
        }
    }

    pub fn state_mean(&self) -> [f64; 6] {
        self.mean.as_slice().try_into().expect("fixed size")
    }

    pub fn state_covariance(&self) -> [[f64; 6]; 6] {
        let mut out = [[0.0; 6]; 6];
        for r in 0..6 {
            for c in 0..6 {
                out[r][c] = self.cov[(r, c)];
            }
        }
        out
    }

    pub fn velocity_estimate(&self) -> Vec3 {
        Vec3::new(self.mean[3], self.mean[4], self.mean[5])
    }

    /// Heading estimate from the tracked velocity; falls back to the last
    /// known attitude while the velocity estimate is (numerically) zero.
    pub fn attitude_estimate(&self) -> Attitude {
        Attitude::from_velocity(self.velocity_estimate()).unwrap_or(self.last_attitude)
    }

    /// Position belief: position block of the mean and the 3x3 position
    /// sub-covariance.
    pub fn position_estimate(&self) -> PositionEstimate {
        let mut cov = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] = self.cov[(r, c)];
            }
        }
        let cov = (cov + cov.transpose()) * 0.5;
        PositionEstimate {
            mean: Vec3::new(self.mean[0], self.mean[1], self.mean[2]),
            covariance: cov,
            attitude: self.attitude_estimate(),
        }
    }

    /// One sigma-point predict step over `dt` followed by a position
    /// measurement update. Returns the updated position belief.
    pub fn predict_update(
        &mut self,
        measurement: Vec3,
        dt: f64,
    ) -> Result<PositionEstimate, TrackingError> {
        if dt <= 0.0 {
            return Err(TrackingError::NonPositiveDt(dt));
        }
        if !measurement.is_finite() {
            return Err(TrackingError::NonFiniteMeasurement);
        }
        let n = 6.0;
        let lambda = self.params.alpha.powi(2) * (n + self.params.kappa) - n;
        let scale = n + lambda;
        let wm0 = lambda / scale;
        let wc0 = wm0 + 1.0 - self.params.alpha.powi(2) + self.params.beta;
        let wi = 0.5 / scale;

        // Predict: propagate sigma points through the constant-velocity map.
        let sigma = sigma_points(&self.mean, &self.cov, scale)?;
        let propagated: Vec<State> = sigma.iter().map(|x| transition(x, dt)).collect();
        let mut pred_mean = propagated[0] * wm0;
        for x in &propagated[1..] {
            pred_mean += x * wi;
        }
        let mut pred_cov = StateCov::zeros();
        for (k, x) in propagated.iter().enumerate() {
            let d = x - pred_mean;
            pred_cov += d * d.transpose() * if k == 0 { wc0 } else { wi };
        }
        let velocity = Vector3::new(pred_mean[3], pred_mean[4], pred_mean[5]);
        pred_cov += process_noise_cov(&self.params.process_noise.world_matrix(&velocity), dt);
        pred_cov = (pred_cov + pred_cov.transpose()) * 0.5;

        // Update: fresh sigma points through the position measurement map.
        let sigma = sigma_points(&pred_mean, &pred_cov, scale)?;
        let observed: Vec<Vector3<f64>> =
            sigma.iter().map(|x| x.fixed_rows::<3>(0).into()).collect();
        let mut obs_mean = observed[0] * wm0;
        for y in &observed[1..] {
            obs_mean += y * wi;
        }
        let r2 = self.params.measurement_noise_std.powi(2);
        let mut obs_cov = Matrix3::identity() * r2;
        let mut cross = SMatrix::<f64, 6, 3>::zeros();
        for (k, (x, y)) in sigma.iter().zip(&observed).enumerate() {
            let w = if k == 0 { wc0 } else { wi };
            let dy = y - obs_mean;
            obs_cov += dy * dy.transpose() * w;
            cross += (x - pred_mean) * dy.transpose() * w;
        }
        let gain = cross * solve_spd(&obs_cov)?;
        let innovation = Vector3::new(measurement.x, measurement.y, measurement.z) - obs_mean;
        self.mean = pred_mean + gain * innovation;
        // Joseph-form update: the measurement map is linear in the state,
        // and this form keeps the covariance PSD even when it collapses
        // towards zero under vanishing noise.
        let mut obs_map = SMatrix::<f64, 3, 6>::zeros();
        for k in 0..3 {
            obs_map[(k, k)] = 1.0;
        }
        let shrink = StateCov::identity() - gain * obs_map;
        let cov = shrink * pred_cov * shrink.transpose()
            + gain * (Matrix3::identity() * r2) * gain.transpose();
        self.cov = (cov + cov.transpose()) * 0.5;
        check_psd(&self.cov)?;

        if self.velocity_estimate().norm() > 1e-9 {
            self.last_attitude = self.attitude_estimate();
        }
        Ok(self.position_estimate())
    }
}

fn transition(x: &State, dt: f64) -> State {
    let mut out = *x;
    out[0] += x[3] * dt;
    out[1] += x[4] * dt;
    out[2] += x[5] * dt;
    out
}

/// Continuous white-noise acceleration covariance for one step, with the
/// acceleration density given as a world-frame matrix.
fn process_noise_cov(accel: &Matrix3<f64>, dt: f64) -> StateCov {
    let mut q = StateCov::zeros();
    let pp = accel * (dt.powi(3) / 3.0);
    let pv = accel * (dt.powi(2) / 2.0);
    let vv = accel * dt;
    for r in 0..3 {
        for c in 0..3 {
            q[(r, c)] = pp[(r, c)];
            q[(r, c + 3)] = pv[(r, c)];
            q[(r + 3, c)] = pv[(r, c)];
            q[(r + 3, c + 3)] = vv[(r, c)];
        }
    }
    q
}

/// 2n+1 scaled sigma points for (mean, cov).
fn sigma_points(mean: &State, cov: &StateCov, scale: f64) -> Result<Vec<State>, TrackingError> {
    let scaled = cov * scale;
    let root = spd_sqrt(&scaled)?;
    let mut points = Vec::with_capacity(13);
    points.push(*mean);
    for k in 0..6 {
        let col: State = root.column(k).into();
        points.push(mean + col);
    }
    for k in 0..6 {
        let col: State = root.column(k).into();
        points.push(mean - col);
    }
    Ok(points)
}

/// Cholesky factor with escalating diagonal jitter; errors once the matrix
/// is genuinely indefinite.
fn spd_sqrt(m: &StateCov) -> Result<StateCov, TrackingError> {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(c) = sym.cholesky() {
        return Ok(c.l());
    }
    let scale = sym.trace().abs().max(1e-12) / 6.0;
    for exp in [-12, -9, -6] {
        let jitter = scale * 10f64.powi(exp);
        if let Some(c) = (sym + StateCov::identity() * jitter).cholesky() {
            return Ok(c.l());
        }
    }
    Err(TrackingError::CovarianceNotPsd)
}

/// Inverse of a symmetric positive-definite 3x3, with a tiny ridge fallback
/// for the zero-noise corner where the innovation covariance collapses.
fn solve_spd(m: &Matrix3<f64>) -> Result<Matrix3<f64>, TrackingError> {
    if let Some(c) = m.cholesky() {
        return Ok(c.inverse());
    }
    let ridge = 1e-12 * (m.trace() / 3.0).max(1e-9);
    (m + Matrix3::identity() * ridge)
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(TrackingError::CovarianceNotPsd)
}

fn check_psd(m: &StateCov) -> Result<(), TrackingError> {
    let tol = -1e-9 * m.trace().abs().max(1.0);
    let eig = m.symmetric_eigenvalues();
    if eig.iter().any(|&e| !e.is_finite() || e < tol) {
        return Err(TrackingError::CovarianceNotPsd);
    }
    Ok(())
}
