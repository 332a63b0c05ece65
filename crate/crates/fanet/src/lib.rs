//! Desk-scale simulator and routing library for flying ad-hoc networks
//! (FANETs) with mmWave links.
//!
//! The pipeline models a UAV swarm whose positions are only known to a
//! central controller through noisy tracking: Gaussian position beliefs
//! feed Monte Carlo estimates of beamformed link capacities, which feed
//! maximum-bottleneck-capacity route computation. Three protocols are
//! provided and compared over randomized swarms:
//!
//! - **DBR**: distance-based routing on estimated positions only;
//! - **SMURF**: stochastic routing on link existence probabilities;
//! - **BA-SMURF**: beam-aware stochastic routing on expected capacities.
//!
//! Modules follow the processing chain: [`geometry`] (bearings and
//! distances) → [`uncertainty`] (Gaussian beliefs and sampling) →
//! [`beamforming`] (UPA steering and gains) → [`channel`] (path loss and
//! SINR capacity) → [`tracking`] (mobility and UKF position tracking) →
//! [`routing`] (protocols and widest-path computation) → [`harness`]
//! (experiment sweeps and CSV output).

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod routing;
pub mod tracking;
pub mod uncertainty;

pub use beamforming::{BeamPattern, SteeredBeam, SteeringVector, UpaConfig};
pub use channel::ChannelParams;
pub use geometry::{Angles, Attitude, UavState, Vec3};
pub use uncertainty::{PositionEstimate, SwarmBelief};
