//! Experiment orchestration: randomized network generation, the tracked
//! vs. ideal protocol comparison, metric aggregation, and CSV output.
//!
//! A scenario (one random network, its mobility warmup, and its tracker
//! state) depends only on the master seed, the density, and the network
//! index, so every protocol, variant, and antenna configuration is
//! evaluated on identical swarms and the comparisons are paired. Achieved
//! throughput is always scored against the true positions: the route and
//! beam aims come from the belief, the realized gains and distances from
//! the ground truth.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamforming::{make_beam, BeamPattern, BeamformingError, UpaConfig};
use crate::channel::{path_loss, sinr_capacity, ChannelParams};
use crate::geometry::{reciprocal_angles, relative_angles, Attitude, UavState, Vec3};
use crate::rng::{self, tag};
use crate::routing::{
    link_table, route_with_protocol, tdma_share, NetworkBelief, Protocol, RouteResult,
    RoutingError,
};
use crate::tracking::{MobilityParams, MobilitySim, UkfParams, UkfTracker};
use crate::uncertainty::{PositionEstimate, SwarmBelief};
use rand::Rng;
use rand_distr::StandardNormal;

/// Distance floor shared with the routing estimator.
const MIN_LINK_DISTANCE: f64 = 1.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config invalid: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error("tracking failed on network (density {density}, seed {seed}): {message}")]
    Tracking { density: f64, seed: u64, message: String },
    #[error("failed writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Routing on tracked beliefs ("-T") or on the true positions ("-I").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Tracked,
    Ideal,
}

impl Variant {
    pub fn suffix(&self) -> &'static str {
        match self {
            Variant::Tracked => "T",
            Variant::Ideal => "I",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

/// Full experiment description; the shipped default reproduces the desk
/// scale of the reference setup (200 x 200 x 10 m box, 240 networks,
/// densities 25000-75000 UAVs/km^3, 1 MHz-scale mmWave link).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// UAV densities to sweep, in UAVs/km^3.
    pub densities: Vec<f64>,
    /// Antenna element counts to sweep.
    pub antenna_elements: Vec<usize>,
    /// Random networks per cell.
    pub n_networks: usize,
    /// Monte Carlo samples per routing call.
    pub n_mc_samples: usize,
    pub protocols: Vec<Protocol>,
    pub variants: Vec<Variant>,
    pub channel: ChannelParams,
    pub mobility: MobilityParams,
    pub tracker: UkfParams,
    /// Mobility/measurement steps before the routing instant.
    pub warmup_steps: usize,
    /// Active mask block (rows, cols); `None` keeps the full array.
    pub beam_active_rows: Option<usize>,
    pub beam_active_cols: Option<usize>,
    /// Cross-traffic fraction applied to every UAV.
    pub cross_traffic: f64,
    pub master_seed: u64,
    /// Directory for run.csv and summary.csv.
    pub output_dir: PathBuf,
    /// Throughput recorded for disconnected or failed routes.
    pub floor_throughput_bps: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            densities: vec![25_000.0, 50_000.0, 75_000.0],
            antenna_elements: vec![1, 4, 8, 16, 32, 64],
            n_networks: 240,
            n_mc_samples: 1000,
            protocols: vec![Protocol::Dbr, Protocol::Smurf, Protocol::BaSmurf],
            variants: vec![Variant::Tracked, Variant::Ideal],
            channel: ChannelParams::default(),
            mobility: MobilityParams::default(),
            tracker: UkfParams::default(),
            warmup_steps: 50,
            beam_active_rows: None,
            beam_active_cols: None,
            cross_traffic: 0.0,
            master_seed: 1,
            output_dir: PathBuf::from("out"),
            floor_throughput_bps: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if self.densities.is_empty() || self.densities.iter().any(|&d| d <= 0.0) {
            return err("densities must be a non-empty list of positive values");
        }
        if self.antenna_elements.is_empty() || self.antenna_elements.contains(&0) {
            return err("antenna-elements must be a non-empty list of positive counts");
        }
        if self.n_networks == 0 {
            return err("n-networks must be at least 1");
        }
        if self.n_mc_samples == 0 {
            return err("n-mc-samples must be at least 1");
        }
        if self.protocols.is_empty() || self.variants.is_empty() {
            return err("at least one protocol and one variant required");
        }
        if !(0.0..=1.0).contains(&self.cross_traffic) {
            return err("cross-traffic must lie in [0, 1]");
        }
        let b = self.mobility.bounds;
        if b.x <= 0.0 || b.y <= 0.0 || b.z <= 0.0 {
            return err("map bounds must be positive");
        }
        if self.mobility.speed_min < 0.0 || self.mobility.speed_max < self.mobility.speed_min {
            return err("speed range must satisfy 0 <= min <= max");
        }
        if self.mobility.update_interval <= 0.0 {
            return err("update-interval must be positive");
        }
        if self.tracker.measurement_noise_std < 0.0 {
            return err("measurement-noise-std must be nonnegative");
        }
        let c = self.channel;
        if c.carrier_hz <= 0.0
            || c.bandwidth_hz <= 0.0
            || c.noise_density <= 0.0
            || c.tx_power_w <= 0.0
            || c.max_range_m <= 0.0
        {
            return err("channel parameters must be strictly positive");
        }
        for &m in &self.antenna_elements {
            let upa = UpaConfig::from_element_count(m, c.wavelength())
                .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            if let (Some(r), Some(col)) = (self.beam_active_rows, self.beam_active_cols) {
                make_beam(&upa, col.min(upa.m_v), r.min(upa.m_h))
                    .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// UAV count for a density over this config's map box.
    pub fn uav_count(&self, density: f64) -> usize {
        let b = self.mobility.bounds;
        let volume_km3 = b.x * b.y * b.z * 1e-9;
        (density * volume_km3).round() as usize
    }

    fn beam_for(&self, upa: &UpaConfig) -> Result<BeamPattern, BeamformingError> {
        match (self.beam_active_rows, self.beam_active_cols) {
            (Some(rows), Some(cols)) => {
                make_beam(upa, cols.min(upa.m_v), rows.min(upa.m_h))
            }
            _ => Ok(BeamPattern::full(upa)),
        }
    }
}

/// One protocol evaluation on one network.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub protocol: Protocol,
    pub variant: Variant,
    pub density: f64,
    pub antennas: usize,
    pub seed: u64,
    pub k: usize,
    pub route: Option<RouteResult>,
    pub throughput_bps: f64,
    pub interference_db: f64,
    pub runtime_s: f64,
}

/// One random network after warmup: ground truth plus the two beliefs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub true_states: Vec<UavState>,
    pub tracked: SwarmBelief,
    pub ideal: SwarmBelief,
    pub source: usize,
    pub dest: usize,
}

/// Places `round(density * volume)` UAVs uniformly in the box with random
/// initial velocities in the configured speed range.
pub fn generate_network(density: f64, mobility: &MobilityParams, seed: u64) -> Vec<UavState> {
    let b = mobility.bounds;
    let volume_km3 = b.x * b.y * b.z * 1e-9;
    let k = (density * volume_km3).round() as usize;
    let mut rng = rng::stream(seed, &[tag::NETWORK]);
    (0..k)
        .map(|id| {
            let position = Vec3::new(
                rng.random_range(0.0..b.x),
                rng.random_range(0.0..b.y),
                rng.random_range(0.0..b.z),
            );
            let speed = if mobility.speed_max > mobility.speed_min {
                rng.random_range(mobility.speed_min..mobility.speed_max)
            } else {
                mobility.speed_min
            };
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let velocity = Vec3::new(speed * heading.cos(), speed * heading.sin(), 0.0);
            UavState {
                id,
                position,
                velocity,
                attitude: Attitude::from_velocity(velocity).unwrap_or(Attitude::level()),
            }
        })
        .collect()
}

/// One row of the optional tracking trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub uav: usize,
    pub true_position: Vec3,
    pub estimated_position: Vec3,
    pub covariance_diagonal: [f64; 3],
}

pub const TRACE_CSV_HEADER: &str =
    "time_s,uav,true_x,true_y,true_z,est_x,est_y,est_z,cov_xx,cov_yy,cov_zz";

impl TraceRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_float(self.time_s),
            self.uav,
            format_float(self.true_position.x),
            format_float(self.true_position.y),
            format_float(self.true_position.z),
            format_float(self.estimated_position.x),
            format_float(self.estimated_position.y),
            format_float(self.estimated_position.z),
            format_float(self.covariance_diagonal[0]),
            format_float(self.covariance_diagonal[1]),
            format_float(self.covariance_diagonal[2]),
        )
    }
}

fn simulate_warmup(
    cfg: &ExperimentConfig,
    density: f64,
    net_index: u64,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<(Vec<UavState>, Vec<UkfTracker>), HarnessError> {
    let base = rng::derive_seed(cfg.master_seed, &[density.to_bits(), net_index]);
    let mut states = generate_network(density, &cfg.mobility, base);
    if states.len() < 2 {
        return Err(HarnessError::InvalidConfig(format!(
            "density {density} yields fewer than two UAVs"
        )));
    }
    let mut mobility =
        MobilitySim::new(cfg.mobility, states.len(), rng::stream(base, &[tag::MOBILITY]));
    let mut measure_rng = rng::stream(base, &[tag::MEASUREMENT]);
    let sigma = cfg.tracker.measurement_noise_std;
    let noisy = |rng: &mut rand_chacha::ChaCha12Rng, p: Vec3| {
        Vec3::new(
            p.x + sigma * rng.sample::<f64, _>(StandardNormal),
            p.y + sigma * rng.sample::<f64, _>(StandardNormal),
            p.z + sigma * rng.sample::<f64, _>(StandardNormal),
        )
    };
    let mut trackers: Vec<UkfTracker> = states
        .iter()
        .map(|s| UkfTracker::new(noisy(&mut measure_rng, s.position), cfg.tracker))
        .collect();

    let dt = cfg.mobility.update_interval;
    for step in 0..cfg.warmup_steps {
        states = mobility.step(&states, dt);
        for (s, tracker) in states.iter().zip(&mut trackers) {
            let z = noisy(&mut measure_rng, s.position);
            let est = tracker.predict_update(z, dt).map_err(|e| HarnessError::Tracking {
                density,
                seed: net_index,
                message: format!("step {step}: {e}"),
            })?;
            if let Some(rows) = trace.as_deref_mut() {
                rows.push(TraceRow {
                    time_s: (step + 1) as f64 * dt,
                    uav: s.id,
                    true_position: s.position,
                    estimated_position: est.mean,
                    covariance_diagonal: [
                        est.covariance[(0, 0)],
                        est.covariance[(1, 1)],
                        est.covariance[(2, 2)],
                    ],
                });
            }
        }
    }
    Ok((states, trackers))
}

/// Tracking trace for one network warmup, rendered as CSV.
pub fn tracking_trace_csv(
    cfg: &ExperimentConfig,
    density: f64,
    net_index: u64,
) -> Result<String, HarnessError> {
    let mut rows = Vec::new();
    simulate_warmup(cfg, density, net_index, Some(&mut rows))?;
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    Ok(out)
}

/// Runs mobility plus per-UAV tracking for the warmup period and freezes
/// the routing-time scenario. Deterministic in (master seed, density,
/// network index) only, so all protocol/variant/antenna cells share it.
pub fn build_scenario(
    cfg: &ExperimentConfig,
    density: f64,
    net_index: u64,
) -> Result<Scenario, HarnessError> {
    let (states, trackers) = simulate_warmup(cfg, density, net_index, None)?;
    let timestamp = cfg.warmup_steps as f64 * cfg.mobility.update_interval;
    let tracked = SwarmBelief::new(
        trackers.iter().map(|t| t.position_estimate()).collect(),
        timestamp,
    );
    let ideal = SwarmBelief::new(
        states
            .iter()
            .map(|s| PositionEstimate::exact(s.position, s.attitude))
            .collect(),
        timestamp,
    );

    // Task selection: the pair with the largest estimated separation in the
    // controller's (tracked) view, fixed per network across all cells.
    let (mut source, mut dest, mut best) = (0, 1, -1.0);
    for a in 0..tracked.len() {
        for b in (a + 1)..tracked.len() {
            let d = (tracked.estimates[a].mean - tracked.estimates[b].mean).norm();
            if d > best {
                best = d;
                source = a;
                dest = b;
            }
        }
    }
    Ok(Scenario { true_states: states, tracked, ideal, source, dest })
}

/// Achieved end-to-end throughput of a committed route against the true
/// positions: per-hop realized gains at the true angles with the beams the
/// controller assigned, hard range gate on the true distances, cross-traffic
/// discount and half-duplex factor, minimum over hops.
pub fn realized_route_throughput(
    route: &RouteResult,
    true_states: &[UavState],
    channel: &ChannelParams,
    upa: &UpaConfig,
    beam: &BeamPattern,
    cross_traffic: &[f64],
) -> f64 {
    if route.hops() == 0 {
        return 0.0;
    }
    let (rows, cols) = beam_block(beam);
    let m2 = (upa.elements() as f64).powi(2);
    let mut bottleneck = f64::INFINITY;
    for hop in &route.beams {
        let t = &true_states[hop.tx];
        let r = &true_states[hop.rx];
        let d = (t.position - r.position).norm();
        if d > channel.max_range_m {
            return 0.0;
        }
        let realized = match relative_angles(t.position, t.attitude, r.position) {
            Ok(a) => a,
            Err(_) => return 0.0,
        };
        let h_tx =
            crate::beamforming::block_response(realized, hop.tx_aim, rows, cols, upa);
        let h_rx = crate::beamforming::block_response(
            reciprocal_angles(realized),
            hop.rx_aim,
            rows,
            cols,
            upa,
        );
        let gain = h_tx * h_rx / m2;
        let attenuation =
            path_loss(d.max(MIN_LINK_DISTANCE), channel).expect("clamped distance");
        let signal = channel.tx_power_w * gain * gain * attenuation;
        let capacity = sinr_capacity(signal, 0.0, channel);
        let rho = cross_traffic.get(hop.tx).copied().unwrap_or(0.0);
        bottleneck = bottleneck.min((1.0 - rho) * capacity / 2.0);
    }
    bottleneck.max(0.0)
}

/// Mean interference power at the UAVs outside the route from the route's
/// transmitters, in dB over the noise floor. Transmit-side beam pattern
/// only: bystanders do not aim a receive beam. Returns negative infinity
/// when the route has no transmitter or no bystander exists.
pub fn interference_metric(
    route: &RouteResult,
    true_states: &[UavState],
    channel: &ChannelParams,
    upa: &UpaConfig,
    beam: &BeamPattern,
) -> f64 {
    let (rows, cols) = beam_block(beam);
    let m2 = (upa.elements() as f64).powi(2);
    let on_route: std::collections::HashSet<usize> = route.path.iter().copied().collect();
    let mut total = 0.0;
    let mut victims = 0usize;
    for victim in true_states.iter().filter(|s| !on_route.contains(&s.id)) {
        victims += 1;
        for hop in &route.beams {
            let t = &true_states[hop.tx];
            let towards = match relative_angles(t.position, t.attitude, victim.position) {
                Ok(a) => a,
                Err(_) => continue,
            };
            let h = crate::beamforming::block_response(towards, hop.tx_aim, rows, cols, upa);
            let gain_power = (h * h) / m2;
            let d = (t.position - victim.position).norm().max(MIN_LINK_DISTANCE);
            total +=
                channel.tx_power_w * gain_power * path_loss(d, channel).expect("clamped");
        }
    }
    if victims == 0 || route.hops() == 0 || total <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mean = total / victims as f64;
    10.0 * (mean / channel.noise_power()).log10()
}

fn beam_block(beam: &BeamPattern) -> (usize, usize) {
    let mut rows = 0;
    let mut cols = 0;
    for (l, &on) in beam.stacked().iter().enumerate() {
        if on {
            rows = rows.max(l % beam.rows() + 1);
            cols = cols.max(l / beam.rows() + 1);
        }
    }
    (rows.max(1), cols.max(1))
}

/// Evaluates one (protocol, variant, antenna count) cell on a scenario.
pub fn evaluate_protocol(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    protocol: Protocol,
    variant: Variant,
    antennas: usize,
    density: f64,
    net_index: u64,
) -> Result<RunRecord, HarnessError> {
    let started = Instant::now();
    let upa = UpaConfig::from_element_count(antennas, cfg.channel.wavelength())?;
    let beam = cfg.beam_for(&upa)?;
    let swarm = match variant {
        Variant::Tracked => scenario.tracked.clone(),
        Variant::Ideal => scenario.ideal.clone(),
    };
    let mut belief = NetworkBelief::new(swarm, cfg.channel, upa, beam.clone());
    belief.cross_traffic = vec![cfg.cross_traffic; belief.len()];

    // One routing seed per network: every protocol, variant, and antenna
    // count sees the same swarm draws.
    let routing_seed =
        rng::derive_seed(cfg.master_seed, &[density.to_bits(), net_index, tag::ROUTING]);
    let table = link_table(&belief, cfg.n_mc_samples, routing_seed)?;
    let (route, throughput, interference) =
        match route_with_protocol(protocol, &belief, &table, scenario.source, scenario.dest) {
            Ok(route) => {
                let throughput = realized_route_throughput(
                    &route,
                    &scenario.true_states,
                    &cfg.channel,
                    &upa,
                    &beam,
                    &belief.cross_traffic,
                )
                .max(cfg.floor_throughput_bps);
                let interference = interference_metric(
                    &route,
                    &scenario.true_states,
                    &cfg.channel,
                    &upa,
                    &beam,
                );
                (Some(route), throughput, interference)
            }
            Err(RoutingError::Disconnected { .. }) => {
                (None, cfg.floor_throughput_bps, f64::NEG_INFINITY)
            }
            Err(e) => return Err(e.into()),
        };
    Ok(RunRecord {
        protocol,
        variant,
        density,
        antennas,
        seed: net_index,
        k: scenario.true_states.len(),
        route,
        throughput_bps: throughput,
        interference_db: interference,
        runtime_s: started.elapsed().as_secs_f64(),
    })
}

/// Evaluates several concurrent source-destination pairs on one belief:
/// routes are committed one by one (each seeing the earlier ones as
/// interference), then TDMA shares split the time of common relays. Returns
/// each route with its effective achieved throughput.
pub fn evaluate_concurrent_routes(
    belief: &NetworkBelief,
    true_states: &[UavState],
    pairs: &[(usize, usize)],
    protocol: Protocol,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(RouteResult, f64)>, HarnessError> {
    let mut working = belief.clone();
    let mut routes = Vec::with_capacity(pairs.len());
    for (idx, &(source, dest)) in pairs.iter().enumerate() {
        let table = link_table(&working, n_samples, rng::derive_seed(seed, &[idx as u64]))?;
        let route = route_with_protocol(protocol, &working, &table, source, dest)?;
        working.active_routes.push(route.clone());
        routes.push(route);
    }
    let shares = tdma_share(&routes);
    let (rows, cols) = beam_block(&belief.beam);
    let m2 = (belief.upa.elements() as f64).powi(2);
    let mut out = Vec::with_capacity(routes.len());
    for (r_idx, route) in routes.iter().enumerate() {
        // Achieved per-hop capacity with the other routes' transmitters as
        // interferers at the true positions.
        let mut bottleneck = f64::INFINITY;
        for hop in &route.beams {
            let t = &true_states[hop.tx];
            let r = &true_states[hop.rx];
            let d = (t.position - r.position).norm();
            if d > belief.channel.max_range_m {
                bottleneck = 0.0;
                break;
            }
            let realized = match relative_angles(t.position, t.attitude, r.position) {
                Ok(a) => a,
                Err(_) => {
                    bottleneck = 0.0;
                    break;
                }
            };
            let h_tx =
                crate::beamforming::block_response(realized, hop.tx_aim, rows, cols, &belief.upa);
            let h_rx = crate::beamforming::block_response(
                reciprocal_angles(realized),
                hop.rx_aim,
                rows,
                cols,
                &belief.upa,
            );
            let gain = h_tx * h_rx / m2;
            let signal = belief.channel.tx_power_w
                * gain
                * gain
                * path_loss(d.max(MIN_LINK_DISTANCE), &belief.channel).expect("clamped");
            let mut interference = 0.0;
            for (o_idx, other) in routes.iter().enumerate() {
                if o_idx == r_idx {
                    continue;
                }
                for ohop in &other.beams {
                    if ohop.tx == hop.tx || ohop.tx == hop.rx {
                        continue;
                    }
                    let ot = &true_states[ohop.tx];
                    if let Ok(towards) =
                        relative_angles(ot.position, ot.attitude, r.position)
                    {
                        let h_t = crate::beamforming::block_response(
                            towards,
                            ohop.tx_aim,
                            rows,
                            cols,
                            &belief.upa,
                        );
                        // The victim receiver keeps its own beam aimed at
                        // its hop transmitter while the interference leaks
                        // in from the other route's direction.
                        let h_r = crate::beamforming::block_response(
                            reciprocal_angles(towards),
                            hop.rx_aim,
                            rows,
                            cols,
                            &belief.upa,
                        );
                        let g_int = h_t * h_r / m2;
                        let d_int =
                            (ot.position - r.position).norm().max(MIN_LINK_DISTANCE);
                        interference += belief.channel.tx_power_w
                            * g_int
                            * g_int
                            * path_loss(d_int, &belief.channel).expect("clamped");
                    }
                }
            }
            let capacity = sinr_capacity(signal, interference, &belief.channel);
            let rho = belief.cross_traffic.get(hop.tx).copied().unwrap_or(0.0);
            bottleneck = bottleneck.min((1.0 - rho) * capacity / 2.0);
        }
        let effective = bottleneck.max(0.0) * shares[r_idx];
        out.push((route.clone(), effective));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Full sweeps and CSV output
// ---------------------------------------------------------------------------

/// Formats a float with 9 significant digits, the fixed CSV convention.
pub fn format_float(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        return "-inf".to_string();
    }
    format!("{x:.8e}")
}

pub const RUN_CSV_HEADER: &str =
    "protocol,variant,density,antennas,seed,K,path_len,throughput_bps,interference_db,runtime_s";

pub const SUMMARY_CSV_HEADER: &str = "protocol,variant,density,antennas,n,mean_throughput_bps,\
                                      p25_throughput_bps,p50_throughput_bps,p75_throughput_bps,\
                                      mean_interference_db";

impl RunRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.variant,
            format_float(self.density),
            self.antennas,
            self.seed,
            self.k,
            self.route.as_ref().map_or(0, |r| r.path.len()),
            format_float(self.throughput_bps),
            format_float(self.interference_db),
            format_float(self.runtime_s),
        )
    }
}

/// Linearly interpolated percentile (the `(n - 1) * p` convention) of an
/// unsorted sample.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Results of a full sweep: per-run records plus rendered CSV bodies.
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub runs_csv: String,
    pub summary_csv: String,
}

/// Runs the full cartesian sweep (density x network x antennas x protocol
/// x variant). Scenarios build in parallel; output order and content are
/// deterministic in the master seed (the runtime column excepted).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let mut jobs: Vec<(f64, u64)> = Vec::new();
    for &density in &cfg.densities {
        for net in 0..cfg.n_networks {
            jobs.push((density, net as u64));
        }
    }
    let per_network: Result<Vec<Vec<RunRecord>>, HarnessError> = jobs
        .par_iter()
        .map(|&(density, net_index)| {
            let scenario = build_scenario(cfg, density, net_index)?;
            let mut records = Vec::new();
            for &antennas in &cfg.antenna_elements {
                for &variant in &cfg.variants {
                    for &protocol in &cfg.protocols {
                        records.push(evaluate_protocol(
                            cfg, &scenario, protocol, variant, antennas, density, net_index,
                        )?);
                    }
                }
            }
            Ok(records)
        })
        .collect();
    let mut records: Vec<RunRecord> = per_network?.into_concat();
    records.sort_by(|a, b| {
        (a.protocol.name(), a.variant.suffix(), a.density.to_bits(), a.antennas, a.seed).cmp(&(
            b.protocol.name(),
            b.variant.suffix(),
            b.density.to_bits(),
            b.antennas,
            b.seed,
        ))
    });

    let mut runs_csv = String::from(RUN_CSV_HEADER);
    runs_csv.push('\n');
    for r in &records {
        runs_csv.push_str(&r.csv_row());
        runs_csv.push('\n');
    }
    let summary_csv = render_summary(&records);
    Ok(ExperimentOutput { records, runs_csv, summary_csv })
}

trait Concat<T> {
    fn into_concat(self) -> Vec<T>;
}

impl<T> Concat<T> for Vec<Vec<T>> {
    fn into_concat(self) -> Vec<T> {
        self.into_iter().flatten().collect()
    }
}

fn render_summary(records: &[RunRecord]) -> String {
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<(String, String, u64, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((
                r.protocol.name().to_string(),
                r.variant.suffix().to_string(),
                r.density.to_bits(),
                r.antennas,
            ))
            .or_default()
            .push(r);
    }
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for ((protocol, variant, density_bits, antennas), rows) in cells {
        let throughputs: Vec<f64> = rows.iter().map(|r| r.throughput_bps).collect();
        let mean = throughputs.iter().sum::<f64>() / throughputs.len() as f64;
        let finite_interference: Vec<f64> = rows
            .iter()
            .map(|r| r.interference_db)
            .filter(|i| i.is_finite())
            .collect();
        let mean_interference = if finite_interference.is_empty() {
            f64::NEG_INFINITY
        } else {
            finite_interference.iter().sum::<f64>() / finite_interference.len() as f64
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            protocol,
            variant,
            format_float(f64::from_bits(density_bits)),
            antennas,
            rows.len(),
            format_float(mean),
            format_float(percentile(&throughputs, 0.25)),
            format_float(percentile(&throughputs, 0.50)),
            format_float(percentile(&throughputs, 0.75)),
            format_float(mean_interference),
        ));
    }
    out
}

/// Runs the sweep and writes `run.csv` and `summary.csv` under the config's
/// output directory. Returns the records and the paths written.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, [PathBuf; 2]), HarnessError> {
    let output = run_experiment(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|source| HarnessError::Io { path: cfg.output_dir.clone(), source })?;
    let run_path = cfg.output_dir.join("run.csv");
    let summary_path = cfg.output_dir.join("summary.csv");
    std::fs::write(&run_path, &output.runs_csv)
        .map_err(|source| HarnessError::Io { path: run_path.clone(), source })?;
    std::fs::write(&summary_path, &output.summary_csv)
        .map_err(|source| HarnessError::Io { path: summary_path.clone(), source })?;
    Ok((output, [run_path, summary_path]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            densities: vec![50_000.0],
            antenna_elements: vec![1, 16],
            n_networks: 4,
            n_mc_samples: 200,
            warmup_steps: 20,
            ..Default::default()
        }
    }

    #[test]
    fn network_size_tracks_density() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.uav_count(50_000.0), 20);
        assert_eq!(cfg.uav_count(25_000.0), 10);
        assert_eq!(cfg.uav_count(75_000.0), 30);
        let states = generate_network(50_000.0, &cfg.mobility, 3);
        assert_eq!(states.len(), 20);
        for s in &states {
            assert!(s.position.x >= 0.0 && s.position.x <= 200.0);
            assert!(s.position.y >= 0.0 && s.position.y <= 200.0);
            assert!(s.position.z >= 0.0 && s.position.z <= 10.0);
            let speed = s.velocity.norm();
            assert!((3.0..=8.0).contains(&speed), "speed {speed}");
        }
        assert_eq!(states, generate_network(50_000.0, &cfg.mobility, 3));
    }

    #[test]
    fn scenario_is_deterministic_and_shared() {
        let cfg = small_config();
        let a = build_scenario(&cfg, 50_000.0, 2).unwrap();
        let b = build_scenario(&cfg, 50_000.0, 2).unwrap();
        assert_eq!(a.true_states, b.true_states);
        assert_eq!(a.tracked.estimates.len(), b.tracked.estimates.len());
        assert_eq!(a.source, b.source);
        assert_eq!(a.dest, b.dest);
        for (x, y) in a.tracked.estimates.iter().zip(&b.tracked.estimates) {
            assert_eq!(x.mean, y.mean);
        }
    }

    #[test]
    fn ideal_single_antenna_achieves_routing_estimate() {
        let cfg = small_config();
        let scenario = build_scenario(&cfg, 50_000.0, 1).unwrap();
        let record = evaluate_protocol(
            &cfg,
            &scenario,
            Protocol::BaSmurf,
            Variant::Ideal,
            1,
            50_000.0,
            1,
        )
        .unwrap();
        let route = record.route.expect("dense network connects");
        // With exact beliefs and an omnidirectional antenna the achieved
        // throughput equals the routing-time bottleneck.
        assert!(
            (record.throughput_bps - route.bottleneck_capacity).abs()
                <= 1e-9 * route.bottleneck_capacity.max(1.0),
            "{} vs {}",
            record.throughput_bps,
            route.bottleneck_capacity
        );
    }

    #[test]
    fn tracked_mean_below_ideal_mean() {
        let cfg = ExperimentConfig {
            n_networks: 30,
            n_mc_samples: 200,
            ..small_config()
        };
        let mut tracked = 0.0;
        let mut ideal = 0.0;
        for net in 0..cfg.n_networks as u64 {
            let scenario = build_scenario(&cfg, 50_000.0, net).unwrap();
            tracked += evaluate_protocol(
                &cfg, &scenario, Protocol::BaSmurf, Variant::Tracked, 16, 50_000.0, net,
            )
            .unwrap()
            .throughput_bps;
            ideal += evaluate_protocol(
                &cfg, &scenario, Protocol::BaSmurf, Variant::Ideal, 16, 50_000.0, net,
            )
            .unwrap()
            .throughput_bps;
        }
        assert!(
            tracked < ideal,
            "tracked {} should trail ideal {}",
            tracked / 30.0,
            ideal / 30.0
        );
    }

    #[test]
    fn omnidirectional_interference_dominates_narrow_beams() {
        let cfg = small_config();
        let scenario = build_scenario(&cfg, 50_000.0, 0).unwrap();
        let mut by_m = Vec::new();
        for m in [1usize, 16, 64] {
            let record = evaluate_protocol(
                &cfg,
                &scenario,
                Protocol::BaSmurf,
                Variant::Ideal,
                m,
                50_000.0,
                0,
            )
            .unwrap();
            assert!(record.interference_db.is_finite());
            by_m.push(record.interference_db);
        }
        assert!(by_m[0] > by_m[1] && by_m[1] > by_m[2], "{by_m:?}");
    }

    #[test]
    fn no_transmitters_yields_sentinel() {
        let cfg = small_config();
        let scenario = build_scenario(&cfg, 50_000.0, 0).unwrap();
        let upa = UpaConfig::from_element_count(16, cfg.channel.wavelength()).unwrap();
        let beam = BeamPattern::full(&upa);
        let empty = RouteResult {
            path: vec![],
            bottleneck_capacity: 0.0,
            link_weights: vec![],
            beams: vec![],
        };
        let db = interference_metric(&empty, &scenario.true_states, &cfg.channel, &upa, &beam);
        assert_eq!(db, f64::NEG_INFINITY);
    }

    #[test]
    fn run_experiment_is_deterministic_modulo_runtime() {
        let cfg = ExperimentConfig {
            antenna_elements: vec![16],
            n_networks: 3,
            n_mc_samples: 100,
            ..small_config()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let strip = |csv: &str| {
            csv.lines()
                .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.runs_csv), strip(&b.runs_csv));
        assert_eq!(a.summary_csv, b.summary_csv);
        // Header shape sanity.
        assert!(a.runs_csv.starts_with(RUN_CSV_HEADER));
        let expected_rows = 3 * 2 * 3 + 1; // protocols x variants x networks + header
        assert_eq!(a.runs_csv.lines().count(), expected_rows);
    }

    #[test]
    fn percentiles_interpolate() {
        let values = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&values, 0.0), 1.0);
        assert_eq!(percentile(&values, 1.0), 4.0);
        assert_eq!(percentile(&values, 0.5), 2.5);
        assert_eq!(percentile(&values, 0.25), 1.75);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.densities = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.cross_traffic = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.antenna_elements = vec![0];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn concurrent_routes_share_relays() {
        // A belief where two pairs must both cross the single middle relay.
        let positions = [
            (0.0, 0.0, 5.0),
            (0.0, 40.0, 5.0),
            (80.0, 20.0, 5.0),   // shared relay
            (160.0, 0.0, 5.0),
            (160.0, 40.0, 5.0),
        ];
        let estimates: Vec<PositionEstimate> = positions
            .iter()
            .map(|&(x, y, z)| PositionEstimate::exact(Vec3::new(x, y, z), Attitude::level()))
            .collect();
        let channel = ChannelParams::default();
        let upa = UpaConfig::from_element_count(16, channel.wavelength()).unwrap();
        let beam = BeamPattern::full(&upa);
        let belief = NetworkBelief::new(SwarmBelief::new(estimates, 0.0), channel, upa, beam);
        let true_states: Vec<UavState> = positions
            .iter()
            .enumerate()
            .map(|(id, &(x, y, z))| UavState {
                id,
                position: Vec3::new(x, y, z),
                velocity: Vec3::new(1.0, 0.0, 0.0),
                attitude: Attitude::level(),
            })
            .collect();
        let routed = evaluate_concurrent_routes(
            &belief,
            &true_states,
            &[(0, 3), (1, 4)],
            Protocol::BaSmurf,
            100,
            5,
        )
        .unwrap();
        assert_eq!(routed.len(), 2);
        for (route, effective) in &routed {
            assert!(route.path.contains(&2), "both routes relay through 2: {:?}", route.path);
            // The shared relay halves each route's time share.
            assert!(*effective <= 0.5 * route.bottleneck_capacity + 1e-6);
            assert!(*effective > 0.0);
        }
    }
}
